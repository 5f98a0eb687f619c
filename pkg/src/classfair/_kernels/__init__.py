"""Kernel dispatch: the compiled backend when available, else pure Python.

Set ``CLASSFAIR_PURE_PYTHON=1`` to force the fallback. Both backends stay
importable as ``python_backend`` / ``compiled_backend`` (the latter may be
``None``) so tests and benchmarks can compare them.
"""

import os

from . import _pykernels as python_backend

try:
    from . import _ckernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

if compiled_backend is not None and os.environ.get("CLASSFAIR_PURE_PYTHON", "") not in ("1", "true", "yes"):
    active = compiled_backend
else:
    active = python_backend

BACKEND = active.BACKEND
WORD = 64


def _fits(mask_bits, n_agents=0):
    return mask_bits <= WORD and n_agents <= WORD


def max_matching(adj, item_mask, n_bits):
    """Max matching size; ``n_bits`` is the number of item positions in use."""
    if active is not python_backend and n_bits <= WORD:
        return active.max_matching(adj, item_mask)
    return python_backend.max_matching(adj, item_mask)


def mms_value(adj, n_items, k):
    if active is not python_backend and n_items <= WORD:
        return active.mms_value(adj, n_items, k)
    return python_backend.mms_value(adj, n_items, k)


def min_maximal_matching(adj, item_mask, n_bits):
    if active is not python_backend and _fits(n_bits, len(adj)):
        return active.min_maximal_matching(adj, item_mask)
    return python_backend.min_maximal_matching(adj, item_mask)


def ocs_trials(*args, **kwargs):
    return active.ocs_trials(*args, **kwargs)


def ranking_trials(*args, **kwargs):
    return active.ranking_trials(*args, **kwargs)


def bundle_values(bundles, class_adj, n_bits):
    if active is not python_backend and n_bits <= WORD:
        return active.bundle_values(bundles, class_adj)
    return python_backend.bundle_values(bundles, class_adj)
