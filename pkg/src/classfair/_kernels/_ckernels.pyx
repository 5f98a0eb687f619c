# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same signatures and results as ``_pykernels``.

Item sets are uint64 bitmasks, so callers must keep at most 64 items.
"""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

BACKEND = "cython"


cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil
    int __builtin_ctzll(unsigned long long) nogil


cdef inline int _popcount(uint64_t x) nogil:
    return __builtin_popcountll(x)


cdef int _augment(const uint64_t* adj, uint64_t mask, int a, uint64_t* seen, int* owner) nogil:
    cdef uint64_t free_ = adj[a] & mask & ~seen[0]
    cdef uint64_t low
    cdef int pos, b
    while free_:
        low = free_ & (~free_ + 1)
        free_ ^= low
        seen[0] |= low
        pos = __builtin_ctzll(low)
        b = owner[pos]
        if b < 0 or _augment(adj, mask, b, seen, owner):
            owner[pos] = a
            return 1
    return 0


cdef int _max_matching(const uint64_t* adj, int n, uint64_t mask) nogil:
    cdef int owner[64]
    cdef int a, size = 0
    cdef uint64_t seen
    for a in range(64):
        owner[a] = -1
    for a in range(n):
        if adj[a] & mask:
            seen = 0
            if _augment(adj, mask, a, &seen, owner):
                size += 1
    return size


cdef cnp.ndarray _as_masks(adj):
    return np.asarray([int(v) for v in adj], dtype=np.uint64).reshape(-1)


def max_matching(adj, item_mask):
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] arr = _as_masks(adj)
    if arr.shape[0] == 0:
        return 0
    return _max_matching(<uint64_t*> arr.data, arr.shape[0], <uint64_t> item_mask)


cdef struct MmsState:
    const uint64_t* adj
    int n_agents
    int n_items
    int k
    int top
    int best
    uint64_t* bundles


cdef void _mms_dfs(MmsState* st, int idx, int used) nogil:
    cdef int j, bound, cap, remaining, worst, v, limit
    cdef uint64_t bit
    if st.best >= st.top:
        return
    remaining = st.n_items - idx
    bound = st.n_agents
    for j in range(st.k):
        cap = _popcount(st.bundles[j]) + remaining
        if cap < bound:
            bound = cap
    if bound <= st.best:
        return
    if idx == st.n_items:
        worst = st.n_agents
        for j in range(st.k):
            v = _max_matching(st.adj, st.n_agents, st.bundles[j])
            if v < worst:
                worst = v
                if worst <= st.best:
                    return
        st.best = worst
        return
    bit = (<uint64_t> 1) << idx
    limit = used + 1 if used < st.k else st.k
    for j in range(limit):
        st.bundles[j] |= bit
        _mms_dfs(st, idx + 1, used + 1 if j == used else used)
        st.bundles[j] ^= bit
        if st.best >= st.top:
            return


def mms_value(adj, n_items, k):
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] arr = _as_masks(adj)
    cdef MmsState st
    cdef int n_agents = arr.shape[0]
    if k <= 0:
        return 0
    st.top = min(n_agents, n_items // k)
    if st.top == 0:
        return 0
    st.adj = <uint64_t*> arr.data
    st.n_agents = n_agents
    st.n_items = n_items
    st.k = k
    st.best = 0
    st.bundles = <uint64_t*> malloc(k * sizeof(uint64_t))
    for j in range(k):
        st.bundles[j] = 0
    with nogil:
        _mms_dfs(&st, 0, 0)
    free(st.bundles)
    return st.best


cdef int _mmm_cover(const uint64_t* side, int ns, int n_other) nogil:
    cdef uint64_t sub[64]
    cdef uint64_t s, t
    cdef int j, cnt, f, best = ns + n_other
    s = 0
    while s < ((<uint64_t> 1) << ns):
        t = 0
        for j in range(ns):
            if not ((s >> j) & 1):
                t |= side[j]
        cnt = 0
        for j in range(ns):
            if (s >> j) & 1:
                sub[cnt] = side[j] & t
                cnt += 1
        f = _popcount(s) + _popcount(t) - _max_matching(sub, cnt, t)
        if f < best:
            best = f
        s += 1
    return best


def min_maximal_matching(adj, item_mask):
    """Minimum over the covers ``S + N(side - S)`` of ``|C| - nu(G[C])``; see the Python kernel."""
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] arr = _as_masks(adj)
    cdef uint64_t rows[64]
    cdef uint64_t cols[64]
    cdef uint64_t used = 0, low, m, mask = <uint64_t> item_mask
    cdef int n = arr.shape[0], nr = 0, nc = 0, r
    if n > 64:
        raise ValueError("at most 64 agents supported")
    for r in range(n):
        m = arr[r] & mask
        if m:
            rows[nr] = m
            used |= m
            nr += 1
    while used:
        low = used & (~used + 1)
        used ^= low
        m = 0
        for r in range(nr):
            if rows[r] & low:
                m |= (<uint64_t> 1) << r
        cols[nc] = m
        nc += 1
    if nr == 0:
        return 0
    if min(nr, nc) > 30:
        raise ValueError("smaller side exceeds 30 vertices")
    with nogil:
        if nr <= nc:
            r = _mmm_cover(rows, nr, nc)
        else:
            r = _mmm_cover(cols, nc, nr)
    return r


cdef int _select(int mode, double u, const int64_t* agents, const double* xs, int cnt,
                 const char* selected, const double* lost, double c) nogil:
    cdef double total, target, acc, m
    cdef int q, last
    cdef bint fresh
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
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cp = np.ascontiguousarray(cand_ptr, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ca = np.ascontiguousarray(cand_agent, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cx = np.ascontiguousarray(cand_x, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] lp = np.ascontiguousarray(liker_ptr, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] lk = np.ascontiguousarray(likers, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] uu = np.ascontiguousarray(us, dtype=np.float64)
    cdef int n_trials = uu.shape[0], n_steps = uu.shape[1], na = n_agents
    cdef cnp.ndarray[cnp.int64_t, ndim=2] assign = np.full((n_trials, n_steps), -1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] counts = np.zeros(na, dtype=np.int64)
    cdef cnp.ndarray[cnp.int8_t, ndim=1] matched = np.zeros(na, dtype=np.int8)
    cdef cnp.ndarray[cnp.int8_t, ndim=1] selected = np.zeros(na, dtype=np.int8)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] lost = np.zeros(max(na, 1), dtype=np.float64)
    cdef int t, s, r, q, a, chosen, lo, hi, imode = mode
    cdef double cc = c
    cdef int64_t* pca = <int64_t*> ca.data
    cdef double* pcx = <double*> cx.data
    with nogil:
        for t in range(n_trials):
            for a in range(na):
                matched[a] = 0
                selected[a] = 0
                lost[a] = 0.0
            for s in range(n_steps):
                lo = cp[s]
                hi = cp[s + 1]
                chosen = -1
                if hi > lo:
                    q = _select(imode, uu[t, s], pca + lo, pcx + lo, hi - lo,
                                <char*> &selected[0], <double*> &lost[0], cc)
                    if q >= 0:
                        chosen = <int> pca[lo + q]
                    for r in range(lo, hi):
                        a = <int> pca[r]
                        if a != chosen and not selected[a]:
                            lost[a] += pcx[r]
                    if chosen >= 0:
                        selected[chosen] = 1
                if chosen < 0 or matched[chosen]:
                    chosen = -1
                    for r in range(lp[s], lp[s + 1]):
                        if not matched[lk[r]]:
                            chosen = <int> lk[r]
                            break
                if chosen >= 0:
                    matched[chosen] = 1
                    assign[t, s] = chosen
            for a in range(na):
                if selected[a]:
                    counts[a] += 1
    return assign, counts


def ranking_trials(liker_ptr, likers, agent_class, keys, us):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] lp = np.ascontiguousarray(liker_ptr, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] lk = np.ascontiguousarray(likers, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cls_of = np.ascontiguousarray(agent_class, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] kk = np.ascontiguousarray(keys, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] uu = np.ascontiguousarray(us, dtype=np.float64)
    cdef int n_trials = uu.shape[0], n_steps = uu.shape[1], na = kk.shape[1]
    cdef int n_classes = (int(cls_of.max()) + 1) if cls_of.shape[0] else 1
    cdef cnp.ndarray[cnp.int64_t, ndim=2] assign = np.full((n_trials, n_steps), -1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] chosen_class = np.full((n_trials, n_steps), -1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int8_t, ndim=1] matched = np.zeros(max(na, 1), dtype=np.int8)
    cdef cnp.ndarray[cnp.int8_t, ndim=1] present = np.zeros(n_classes, dtype=np.int8)
    cdef int t, s, r, a, lo, hi, j, n_el, pick, cls, best
    with nogil:
        for t in range(n_trials):
            for a in range(na):
                matched[a] = 0
            for s in range(n_steps):
                lo = lp[s]
                hi = lp[s + 1]
                if hi == lo:
                    continue
                for j in range(n_classes):
                    present[j] = 0
                for r in range(lo, hi):
                    present[cls_of[lk[r]]] = 1
                n_el = 0
                for j in range(n_classes):
                    n_el += present[j]
                pick = <int> (uu[t, s] * n_el)
                if pick >= n_el:
                    pick = n_el - 1
                cls = -1
                for j in range(n_classes):
                    if present[j]:
                        if pick == 0:
                            cls = j
                            break
                        pick -= 1
                chosen_class[t, s] = cls
                best = -1
                for r in range(lo, hi):
                    a = <int> lk[r]
                    if cls_of[a] == cls and not matched[a]:
                        if best < 0 or kk[t, a] < kk[t, best]:
                            best = a
                if best >= 0:
                    matched[best] = 1
                    assign[t, s] = best
    return assign, chosen_class


def bundle_values(bundles, class_adj):
    cdef cnp.ndarray[cnp.uint64_t, ndim=2] bb = np.ascontiguousarray(bundles, dtype=np.uint64)
    cdef int n_trials = bb.shape[0], k = bb.shape[1], n_cls = len(class_adj)
    cdef cnp.ndarray[cnp.int64_t, ndim=3] out = np.zeros((n_trials, n_cls, k), dtype=np.int64)
    cdef list arrs = [_as_masks(adj) for adj in class_adj]
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] arr
    cdef int t, i, j
    for i in range(n_cls):
        arr = arrs[i]
        if arr.shape[0] == 0:
            continue
        for t in range(n_trials):
            for j in range(k):
                out[t, i, j] = _max_matching(<uint64_t*> arr.data, arr.shape[0], bb[t, j])
    return out
