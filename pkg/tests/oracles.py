"""Independent reference implementations used only by the tests.

Everything here is brute force or a different formulation from the library
code it checks, so agreement is evidence rather than tautology.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np


def class_edges(inst, i, items):
    members = set(inst.classes[i])
    return [(a, o) for o in items for a in inst.likers[o] if a in members]


# --- LP vertex enumeration -------------------------------------------------


def _exact_solve(M, rhs):
    """Gauss-Jordan over Fractions; None when singular."""
    n = len(M)
    A = [[Fraction(v) for v in row] + [Fraction(r)] for row, r in zip(M, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col] != 0), None)
        if piv is None:
            return None
        A[col], A[piv] = A[piv], A[col]
        p = A[col][col]
        A[col] = [v / p for v in A[col]]
        for r in range(n):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [u - f * v for u, v in zip(A[r], A[col])]
    return [A[r][n] for r in range(n)]


def optimistic_value_vertex_oracle(inst, i, bundle: dict, chunk: int = 4096) -> Fraction:
    """max sum z  s.t.  sum_a z[a,o] <= y_o,  sum_o z[a,o] <= 1,  z >= 0.

    Enumerates every choice of n tight constraints (n = number of edge
    variables) in floating point, keeps the best feasible vertex and re-solves
    that basis exactly.
    """
    items = [o for o in inst.items if bundle.get(o, 0)]
    edges = class_edges(inst, i, items)
    n = len(edges)
    if n == 0:
        return Fraction(0)
    rows, rhs = [], []
    for o in items:
        rows.append([1 if e[1] == o else 0 for e in edges])
        rhs.append(Fraction(bundle[o]))
    for a in inst.classes[i]:
        row = [1 if e[0] == a else 0 for e in edges]
        if any(row):
            rows.append(row)
            rhs.append(Fraction(1))
    for r in range(n):  # -z_r <= 0
        rows.append([-1 if c == r else 0 for c in range(n)])
        rhs.append(Fraction(0))
    A = np.array(rows, dtype=float)
    b = np.array([float(v) for v in rhs])
    combos = np.array(list(itertools.combinations(range(len(rows)), n)), dtype=np.intp)
    best_val, best_basis = -1.0, None
    for start in range(0, len(combos), chunk):
        idx = combos[start:start + chunk]
        mats = A[idx]
        dets = np.linalg.det(mats)
        ok = np.abs(dets) > 1e-9
        if not ok.any():
            continue
        idx, mats = idx[ok], mats[ok]
        sols = np.linalg.solve(mats, b[idx][..., None])[..., 0]
        feas = np.all(sols @ A.T <= b + 1e-9, axis=1)
        if not feas.any():
            continue
        vals = sols[feas].sum(axis=1)
        j = int(np.argmax(vals))
        if vals[j] > best_val + 1e-12:
            best_val, best_basis = vals[j], idx[feas][j]
    z = _exact_solve([rows[r] for r in best_basis], [rhs[r] for r in best_basis])
    assert z is not None
    for row, r in zip(rows, rhs):
        assert sum(c * v for c, v in zip(row, z)) <= r, "exact re-solve left the feasible region"
    return sum(z, Fraction(0))


# --- cut / cover duality ---------------------------------------------------


def optimistic_value_cut_oracle(inst, i, bundle: dict) -> Fraction:
    """min over item subsets T of  sum_{o not in T} y_o + |N_i(T)|."""
    members = set(inst.classes[i])
    items = [o for o in inst.items if bundle.get(o, 0)]
    best = None
    for r in range(len(items) + 1):
        for T in itertools.combinations(items, r):
            nbrs = {a for o in T for a in inst.likers[o] if a in members}
            val = sum((Fraction(bundle[o]) for o in items if o not in T), Fraction(0)) + len(nbrs)
            if best is None or val < best:
                best = val
    return best if best is not None else Fraction(0)


# --- brute-force combinatorics ----------------------------------------------


def brute_max_matching(adj_sets: list, items) -> int:
    """adj_sets[r] = set of items liked by agent r."""
    items = list(items)
    best = 0

    def go(r, used, size):
        nonlocal best
        if size + (len(adj_sets) - r) <= best:
            return
        if r == len(adj_sets):
            best = max(best, size)
            return
        go(r + 1, used, size)
        for o in adj_sets[r]:
            if o in items and o not in used:
                go(r + 1, used | {o}, size + 1)

    go(0, frozenset(), 0)
    return best


def all_matchings(edges):
    """Every matching of the edge list, built agent by agent."""
    edges = list(edges)
    agents = sorted({a for a, _ in edges})

    def go(r, used, chosen):
        if r == len(agents):
            yield tuple(chosen)
            return
        yield from go(r + 1, used, chosen)
        for a, o in edges:
            if a == agents[r] and o not in used:
                chosen.append((a, o))
                yield from go(r + 1, used | {o}, chosen)
                chosen.pop()

    yield from go(0, frozenset(), [])


def brute_min_maximal_matching(edges) -> int:
    edges = list(edges)
    best = None
    for m in all_matchings(edges):
        ua = {e[0] for e in m}
        uo = {e[1] for e in m}
        if all(a in ua or o in uo for a, o in edges):
            if best is None or len(m) < best:
                best = len(m)
    return best or 0


def brute_mms(inst, i, pool) -> int:
    """Enumerate every labelled assignment of pool items to k bundles."""
    members = inst.classes[i]
    adj = [set(inst.liked[a]) for a in members]
    pool = list(pool)
    best = 0
    for labels in itertools.product(range(inst.k), repeat=len(pool)):
        worst = min(
            brute_max_matching(adj, [o for o, l in zip(pool, labels) if l == j]) for j in range(inst.k)
        )
        best = max(best, worst)
    return best


def brute_usw_opt(inst) -> int:
    return brute_max_matching([set(inst.liked[a]) for a in inst.agents], inst.items)
