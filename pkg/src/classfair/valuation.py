"""Valuation and share oracles.

``optimistic_value`` is the size of the best fractional matching of a
bundle into one class (a transportation problem solved by max-flow after
scaling to a common denominator). ``prop_share`` and ``mms_share`` take the
max-min of that value over divisible / indivisible partitions of an item
pool into ``k`` bundles.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Iterable, Mapping

from . import _kernels
from .core import ONE, ZERO, FractionalMatching, Instance, as_fraction
from .errors import CapabilityError, DomainError, StructuralError
from .flow import Dinic
from .lp import simplex_max

#: Exhaustive min-maximal-matching search refuses graphs with more vertices.
PESSIMISTIC_GUARD = 20
#: Maximum number of canonical partitions the maximin-share search may visit.
MMS_BUDGET = 10**7
#: Size limits of the direct proportional-share LP.
PROP_ORACLE_GUARD = {"items": 6, "k": 3, "agents": 4}


def _class_index(inst: Instance, i: int) -> int:
    if not 0 <= i < inst.k:
        raise DomainError(f"class index {i} out of range for k={inst.k}")
    return i


def _pool(inst: Instance, pool) -> tuple:
    if pool is None:
        return inst.items
    pool = tuple(pool)
    for o in pool:
        if o not in inst.step_of:
            raise StructuralError(f"item {o} is not part of the instance")
    return pool


def _local_graph(inst: Instance, i: int, items: Iterable[int]):
    """Class-i agent bitmasks over the relevant items (those some class-i agent likes)."""
    members = inst.classes[i]
    relevant = [o for o in items if any(inst.class_of[a] == i for a in inst.likers[o])]
    pos = {o: b for b, o in enumerate(relevant)}
    adj = []
    for a in members:
        mask = 0
        for o in inst.liked[a]:
            b = pos.get(o)
            if b is not None:
                mask |= 1 << b
        adj.append(mask)
    return adj, relevant


def class_value(m: FractionalMatching, inst: Instance, i: int) -> Fraction:
    """Total fraction received by the agents of class ``i`` over liked items."""
    _class_index(inst, i)
    total = ZERO
    for (a, o), v in m:
        if a not in inst.class_of or o not in inst.step_of:
            raise StructuralError(f"matching references unknown pair ({a}, {o})")
        if inst.class_of[a] == i and (a, o) in inst.edges:
            total += v
    return total


def _check_bundle(inst: Instance, bundle: Mapping) -> dict:
    out = {}
    for o, v in bundle.items():
        if o not in inst.step_of:
            raise StructuralError(f"bundle references unknown item {o}")
        v = as_fraction(v)
        if v < 0 or v > 1:
            raise DomainError(f"bundle entry for item {o} is {v}, outside [0, 1]")
        if v:
            out[o] = v
    return out


def optimistic_value(inst: Instance, i: int, bundle) -> Fraction:
    """Maximum fractional matching of ``bundle`` (item -> fraction, or an item set) into class ``i``."""
    _class_index(inst, i)
    if not isinstance(bundle, Mapping):
        bundle = {o: ONE for o in bundle}
    y = _check_bundle(inst, bundle)
    if all(v == 1 for v in y.values()):
        items = [o for o in inst.items if o in y]
        adj, relevant = _local_graph(inst, i, items)
        full = (1 << len(relevant)) - 1
        return Fraction(_kernels.max_matching(adj, full, len(relevant)))
    return _flow_value(inst, i, y)


def _flow_value(inst: Instance, i: int, y: dict) -> Fraction:
    members = inst.classes[i]
    items = [o for o in inst.items if o in y and any(inst.class_of[a] == i for a in inst.likers[o])]
    if not items:
        return ZERO
    scale = lcm(*(y[o].denominator for o in items))
    item_node = {o: 1 + t for t, o in enumerate(items)}
    agent_node = {a: 1 + len(items) + r for r, a in enumerate(members)}
    sink = 1 + len(items) + len(members)
    net = Dinic(sink + 1)
    for o in items:
        cap = int(y[o] * scale)
        net.add_edge(0, item_node[o], cap)
        for a in inst.likers[o]:
            if a in agent_node:
                net.add_edge(item_node[o], agent_node[a], cap)
    for a in members:
        net.add_edge(agent_node[a], sink, scale)
    return Fraction(net.max_flow(0, sink), scale)


def _item_set(inst: Instance, s) -> list:
    if isinstance(s, Mapping):
        y = _check_bundle(inst, s)
        if any(v != 1 for v in y.values()):
            raise DomainError("pessimistic value needs a 0/1 bundle")
        s = y.keys()
    s = set(s)
    for o in s:
        if o not in inst.step_of:
            raise StructuralError(f"unknown item {o}")
    return [o for o in inst.items if o in s]


def pessimistic_value(inst: Instance, i: int, s, guard: int = PESSIMISTIC_GUARD) -> int:
    """Size of the smallest maximal matching between class ``i`` and item set ``s``.

    Isolated vertices are dropped before the size guard is applied.
    """
    _class_index(inst, i)
    adj, relevant = _local_graph(inst, i, _item_set(inst, s))
    adj = [mask for mask in adj if mask]
    if len(adj) + len(relevant) > guard:
        raise CapabilityError(
            f"min maximal matching on {len(adj)} agents + {len(relevant)} items exceeds guard {guard}"
        )
    full = (1 << len(relevant)) - 1
    return _kernels.min_maximal_matching(adj, full, len(relevant))


def prop_share(inst: Instance, i: int, pool=None) -> Fraction:
    """Proportional share: the optimistic value of the uniform ``1/k`` split of the pool.

    V* is concave in the bundle and the max-min objective is symmetric in
    the k bundles, so averaging the k bundles of any feasible split into k
    identical ``1/k`` bundles never lowers the minimum.
    """
    _class_index(inst, i)
    share = Fraction(1, inst.k)
    return optimistic_value(inst, i, {o: share for o in _pool(inst, pool)})


def prop_share_oracle(inst: Instance, i: int, pool=None) -> Fraction:
    """Proportional share by solving the joint max-min LP directly (small instances only)."""
    _class_index(inst, i)
    pool = _pool(inst, pool)
    g = PROP_ORACLE_GUARD
    members = inst.classes[i]
    if len(pool) > g["items"] or inst.k > g["k"] or len(members) > g["agents"]:
        raise CapabilityError(f"proportional-share LP limited to {g}")
    k = inst.k
    items = [o for o in pool if any(inst.class_of[a] == i for a in inst.likers[o])]
    edges = [(a, o) for o in items for a in inst.likers[o] if inst.class_of[a] == i]
    if not edges:
        return ZERO
    # variable layout: y[j, o], then z[j, a, o], then t
    yvar = {(j, o): j * len(items) + r for j in range(k) for r, o in enumerate(items)}
    base = k * len(items)
    zvar = {(j, e): base + j * len(edges) + r for j in range(k) for r, e in enumerate(edges)}
    tvar = base + k * len(edges)
    n = tvar + 1
    A, b = [], []

    def row(entries, rhs):
        vec = [0] * n
        for var, coef in entries:
            vec[var] += coef
        A.append(vec)
        b.append(rhs)

    for o in items:
        row([(yvar[j, o], 1) for j in range(k)], 1)
    for j in range(k):
        for o in items:
            row([(zvar[j, e], 1) for e in edges if e[1] == o] + [(yvar[j, o], -1)], 0)
        for a in members:
            mine = [(zvar[j, e], 1) for e in edges if e[0] == a]
            if mine:
                row(mine, 1)
        row([(tvar, 1)] + [(zvar[j, e], -1) for e in edges], 0)
    c = [0] * n
    c[tvar] = 1
    value, _ = simplex_max(c, A, b)
    return value


def stirling_partition_count(n: int, k: int) -> int:
    """Number of partitions of n labelled items into at most k unlabelled blocks."""
    # S(n, j) by the standard recurrence
    row = [1] + [0] * k
    for _ in range(n):
        new = [0] * (k + 1)
        for j in range(1, k + 1):
            new[j] = j * row[j] + row[j - 1]
        row = new
    return sum(row[1:]) if n else 1


def mms_share(inst: Instance, i: int, pool=None, budget: int = MMS_BUDGET) -> int:
    """Maximin share of class ``i`` over indivisible partitions of ``pool`` into k bundles."""
    _class_index(inst, i)
    adj, relevant = _local_graph(inst, i, _pool(inst, pool))
    n_rel = len(relevant)
    if n_rel < inst.k:
        return 0
    count = stirling_partition_count(n_rel, inst.k)
    if count > budget:
        raise CapabilityError(f"maximin share needs {count} partitions, budget is {budget}")
    return _kernels.mms_value(adj, n_rel, inst.k)


def usw(m: FractionalMatching, inst: Instance | None = None) -> Fraction:
    """Matching size; with ``inst`` given, only pairs that are edges count."""
    if inst is None:
        return sum((v for _, v in m), ZERO)
    return sum((v for (a, o), v in m if (a, o) in inst.edges), ZERO)


def usw_opt(inst: Instance) -> int:
    """Maximum matching size of the whole instance."""
    pos = {o: t for t, o in enumerate(inst.items)}
    adj = []
    for a in inst.agents:
        mask = 0
        for o in inst.liked[a]:
            mask |= 1 << pos[o]
        adj.append(mask)
    n = len(inst.items)
    return _kernels.max_matching(adj, (1 << n) - 1, n)


def allocated_items(m: FractionalMatching, inst: Instance) -> tuple:
    """Items fully assigned by ``m`` (item load exactly 1), in arrival order."""
    return tuple(o for o in inst.items if m.item_load(o) == 1)


@dataclass(frozen=True)
class ShareProfile:
    prop: tuple
    prop_allocated: tuple
    mms: tuple
    mms_allocated: tuple


def share_profile(inst: Instance, m: FractionalMatching | None = None, with_mms: bool = True) -> ShareProfile:
    pool = allocated_items(m, inst) if m is not None else inst.items
    ks = range(inst.k)
    return ShareProfile(
        prop=tuple(prop_share(inst, i) for i in ks),
        prop_allocated=tuple(prop_share(inst, i, pool) for i in ks),
        mms=tuple(mms_share(inst, i) for i in ks) if with_mms else (),
        mms_allocated=tuple(mms_share(inst, i, pool) for i in ks) if with_mms else (),
    )
