"""Exact-rational primal simplex for ``max c.x  s.t.  A x <= b, x >= 0`` with ``b >= 0``.

The origin is feasible when ``b >= 0``, so a single phase suffices. Bland's
rule guarantees termination on degenerate problems.
"""

from fractions import Fraction

from .errors import DomainError


def simplex_max(c, A, b):
    """Return ``(optimum, x)`` as Fractions.

    Raises :class:`DomainError` on a negative right-hand side or an
    unbounded objective.
    """
    m = len(A)
    n = len(c)
    if any(Fraction(v) < 0 for v in b):
        raise DomainError("right-hand side must be non-negative")
    # tableau rows: [A | I | b]
    width = n + m + 1
    rows = []
    for r in range(m):
        row = [Fraction(v) for v in A[r]] + [Fraction(0)] * m + [Fraction(b[r])]
        row[n + r] = Fraction(1)
        rows.append(row)
    obj = [-Fraction(v) for v in c] + [Fraction(0)] * (m + 1)
    basis = [n + r for r in range(m)]

    while True:
        enter = next((j for j in range(width - 1) if obj[j] < 0), None)
        if enter is None:
            break
        leave, best = None, None
        for r in range(m):
            a = rows[r][enter]
            if a > 0:
                ratio = rows[r][-1] / a
                if best is None or ratio < best or (ratio == best and basis[r] < basis[leave]):
                    leave, best = r, ratio
        if leave is None:
            raise DomainError("objective is unbounded")
        pivot = rows[leave][enter]
        prow = [v / pivot for v in rows[leave]]
        rows[leave] = prow
        for r in range(m):
            if r != leave and rows[r][enter]:
                f = rows[r][enter]
                rows[r] = [v - f * p for v, p in zip(rows[r], prow)]
        if obj[enter]:
            f = obj[enter]
            obj = [v - f * p for v, p in zip(obj, prow)]
        basis[leave] = enter

    x = [Fraction(0)] * n
    for r, var in enumerate(basis):
        if var < n:
            x[var] = rows[r][-1]
    return obj[-1], x
