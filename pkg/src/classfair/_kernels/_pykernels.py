"""Pure-Python reference kernels.

Graphs are given as per-agent bitmasks over local item positions. The
compiled module ``_ckernels`` implements the same functions with identical
results (including floating-point Monte-Carlo outputs, since both consume
the same pre-drawn uniforms and accumulate in the same order).
"""

import numpy as np

BACKEND = "python"


def _popcount(x):
    return bin(x).count("1")


def max_matching(adj, item_mask):
    """Maximum matching between agents (rows of ``adj``) and items in ``item_mask``."""
    owner = {}

    def augment(a, seen):
        free = adj[a] & item_mask & ~seen[0]
        while free:
            low = free & -free
            free ^= low
            seen[0] |= low
            b = owner.get(low)
            if b is None or augment(b, seen):
                owner[low] = a
                return True
        return False

    size = 0
    for a in range(len(adj)):
        if adj[a] & item_mask and augment(a, [0]):
            size += 1
    return size


def mms_value(adj, n_items, k):
    """Max over partitions of items ``0..n_items-1`` into k bundles of the min bundle matching."""
    n_agents = len(adj)
    if k <= 0:
        return 0
    top = min(n_agents, n_items // k)
    if top == 0:
        return 0
    cache = {}

    def value(mask):
        v = cache.get(mask)
        if v is None:
            v = max_matching(adj, mask)
            cache[mask] = v
        return v

    bundles = [0] * k
    best = [0]

    def dfs(idx, used):
        if best[0] >= top:
            return
        remaining = n_items - idx
        bound = n_agents
        for j in range(k):
            cap = _popcount(bundles[j]) + remaining
            if cap < bound:
                bound = cap
        if bound <= best[0]:
            return
        if idx == n_items:
            worst = n_agents
            for j in range(k):
                v = value(bundles[j])
                if v < worst:
                    worst = v
                    if worst <= best[0]:
                        return
            best[0] = worst
            return
        bit = 1 << idx
        limit = used + 1 if used < k else k
        for j in range(limit):
            bundles[j] |= bit
            dfs(idx + 1, used + 1 if j == used else used)
            bundles[j] ^= bit
            if best[0] >= top:
                return

    dfs(0, 0)
    return best[0]


def _two_sides(adj, item_mask):
    """Non-isolated agents' item masks and the transposed item -> agent masks; smaller side first."""
    rows = [m & item_mask for m in adj]
    rows = [m for m in rows if m]
    used, cols = 0, []
    for m in rows:
        used |= m
    while used:
        low = used & -used
        used ^= low
        mask = 0
        for r, m in enumerate(rows):
            if m & low:
                mask |= 1 << r
        cols.append(mask)
    return (rows, cols) if len(rows) <= len(cols) else (cols, rows)


def min_maximal_matching(adj, item_mask):
    """Size of the smallest maximal matching.

    Equals the minimum edge dominating set, i.e. the minimum over vertex
    covers C of ``|C| - nu(G[C])``. That quantity never grows when a vertex
    is removed from C, so only the covers ``S + N(side - S)`` for subsets S
    of the smaller side need checking.
    """
    side, other = _two_sides(adj, item_mask)
    ns = len(side)
    if ns == 0:
        return 0
    best = ns + len(other)
    for s in range(1 << ns):
        t = 0
        for j in range(ns):
            if not (s >> j) & 1:
                t |= side[j]
        sub = [side[j] & t for j in range(ns) if (s >> j) & 1]
        f = _popcount(s) + _popcount(t) - max_matching(sub, t)
        if f < best:
            best = f
    return best


def _select(mode, u, agents, xs, selected, lost, c):
    """Index into ``agents`` chosen by the selector, or -1 for no selection."""
    cnt = len(agents)
    if mode == 2:
        total = 0.0
        fresh = False
        for q in range(cnt):
            if not selected[agents[q]]:
                fresh = True
                m = lost[agents[q]]
                total += xs[q] * (1.0 + m + 3.0 * c * m * m)
        if fresh:
            target = u * total
            acc = 0.0
            last = -1
            for q in range(cnt):
                if not selected[agents[q]]:
                    m = lost[agents[q]]
                    acc += xs[q] * (1.0 + m + 3.0 * c * m * m)
                    last = q
                    if target < acc:
                        return q
            return last
    total = 0.0
    for q in range(cnt):
        total += xs[q]
    if mode == 1:
        target = u
    else:
        target = u * total
    acc = 0.0
    last = -1
    for q in range(cnt):
        acc += xs[q]
        if xs[q] > 0.0:
            last = q
        if target < acc:
            return q
    return -1 if mode == 1 else last


def ocs_trials(cand_ptr, cand_agent, cand_x, liker_ptr, likers, n_agents, us, mode, c):
    """Round a fixed guiding matching once per row of ``us``.

    mode 0: independent rounding renormalised; 1: independent, no selection
    with the leftover mass; 2: negatively-correlated selector.
    Returns ``(assign, selected_count)``: assign[t, s] is the agent receiving
    step s in trial t (-1 if discarded); selected_count[a] counts trials in
    which a was selected at least once.
    """
    us = np.asarray(us, dtype=np.float64)
    n_trials, n_steps = us.shape
    assign = np.full((n_trials, n_steps), -1, dtype=np.int64)
    counts = np.zeros(n_agents, dtype=np.int64)
    cand_ptr = [int(v) for v in cand_ptr]
    cand_agent = [int(v) for v in cand_agent]
    cand_x = [float(v) for v in cand_x]
    liker_ptr = [int(v) for v in liker_ptr]
    likers = [int(v) for v in likers]
    for t in range(n_trials):
        matched = [False] * n_agents
        selected = [False] * n_agents
        lost = [0.0] * n_agents
        row = us[t]
        for s in range(n_steps):
            lo, hi = cand_ptr[s], cand_ptr[s + 1]
            agents = cand_agent[lo:hi]
            xs = cand_x[lo:hi]
            chosen = -1
            if hi > lo:
                q = _select(mode, float(row[s]), agents, xs, selected, lost, c)
                if q >= 0:
                    chosen = agents[q]
                for r in range(hi - lo):
                    a = agents[r]
                    if a != chosen and not selected[a]:
                        lost[a] += xs[r]
                if chosen >= 0:
                    selected[chosen] = True
            if chosen < 0 or matched[chosen]:
                chosen = -1
                for r in range(liker_ptr[s], liker_ptr[s + 1]):
                    if not matched[likers[r]]:
                        chosen = likers[r]
                        break
            if chosen >= 0:
                matched[chosen] = True
                assign[t, s] = chosen
        for a in range(n_agents):
            if selected[a]:
                counts[a] += 1
    return assign, counts


def ranking_trials(liker_ptr, likers, agent_class, keys, us):
    """Equal-Ranking per trial: uniform class among likers' classes, then best rank.

    Returns ``(assign, chosen_class)`` arrays of shape (trials, steps); -1 marks
    a discard / an item nobody likes.
    """
    keys = np.asarray(keys, dtype=np.float64)
    us = np.asarray(us, dtype=np.float64)
    n_trials, n_steps = us.shape
    n_agents = keys.shape[1]
    assign = np.full((n_trials, n_steps), -1, dtype=np.int64)
    chosen_class = np.full((n_trials, n_steps), -1, dtype=np.int64)
    liker_ptr = [int(v) for v in liker_ptr]
    likers = [int(v) for v in likers]
    agent_class = [int(v) for v in agent_class]
    for t in range(n_trials):
        matched = [False] * n_agents
        key = keys[t]
        for s in range(n_steps):
            lo, hi = liker_ptr[s], liker_ptr[s + 1]
            if hi == lo:
                continue
            classes = sorted({agent_class[likers[r]] for r in range(lo, hi)})
            pick = int(us[t, s] * len(classes))
            if pick >= len(classes):
                pick = len(classes) - 1
            cls = classes[pick]
            chosen_class[t, s] = cls
            best = -1
            for r in range(lo, hi):
                a = likers[r]
                if agent_class[a] == cls and not matched[a]:
                    if best < 0 or key[a] < key[best]:
                        best = a
            if best >= 0:
                matched[best] = True
                assign[t, s] = best
    return assign, chosen_class


def bundle_values(bundles, class_adj):
    """``out[t, i, j]`` = max matching of class i's agents into bundle mask ``bundles[t, j]``.

    ``class_adj[i]`` lists class i's agent bitmasks over step positions.
    """
    bundles = np.asarray(bundles, dtype=np.uint64)
    n_trials, k = bundles.shape
    out = np.zeros((n_trials, len(class_adj), k), dtype=np.int64)
    cache = {}
    for t in range(n_trials):
        for j in range(k):
            mask = int(bundles[t, j])
            for i, adj in enumerate(class_adj):
                key = (i, mask)
                v = cache.get(key)
                if v is None:
                    v = max_matching(adj, mask)
                    cache[key] = v
                out[t, i, j] = v
    return out
