"""Dinic max-flow on integer capacities."""

from collections import deque


class Dinic:
    def __init__(self, n_nodes: int):
        self.n = n_nodes
        self.graph = [[] for _ in range(n_nodes)]
        # each edge: [to, capacity, index of reverse edge in graph[to]]

    def add_edge(self, u: int, v: int, cap: int) -> None:
        if cap < 0:
            raise ValueError("capacities must be non-negative")
        self.graph[u].append([v, cap, len(self.graph[v])])
        self.graph[v].append([u, 0, len(self.graph[u]) - 1])

    def _bfs(self, s, t):
        level = [-1] * self.n
        level[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v, cap, _ in self.graph[u]:
                if cap > 0 and level[v] < 0:
                    level[v] = level[u] + 1
                    queue.append(v)
        self.level = level
        return level[t] >= 0

    def _dfs(self, u, t, pushed):
        if u == t:
            return pushed
        edges = self.graph[u]
        while self.it[u] < len(edges):
            e = edges[self.it[u]]
            v, cap, rev = e
            if cap > 0 and self.level[v] == self.level[u] + 1:
                got = self._dfs(v, t, min(pushed, cap))
                if got:
                    e[1] -= got
                    self.graph[v][rev][1] += got
                    return got
            self.it[u] += 1
        return 0

    def max_flow(self, s: int, t: int) -> int:
        if s == t:
            raise ValueError("source and sink coincide")
        total = 0
        while self._bfs(s, t):
            self.it = [0] * self.n
            while True:
                pushed = self._dfs(s, t, float("inf"))
                if not pushed:
                    break
                total += pushed
        return total
