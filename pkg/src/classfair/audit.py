"""Exact fairness and efficiency audits of a single matching.

Every notion is reported as the worst ratio over classes (or ordered class
pairs). A ratio whose denominator is zero counts as satisfied vacuously and
evaluates to ``math.inf``; the raw numerator and denominator are kept so a
caller can apply another convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, getcontext
from fractions import Fraction
from typing import Mapping

from .core import ONE, ZERO, FractionalMatching, Instance, class_aggregate, format_fraction, as_fraction
from .errors import CapabilityError, DomainError
from .valuation import (
    allocated_items,
    class_value,
    mms_share,
    optimistic_value,
    pessimistic_value,
    prop_share,
    usw,
    usw_opt,
)

getcontext().prec = 40
#: 1 - 1/e to 40 significant digits.
ONE_MINUS_INV_E = 1 - Decimal(-1).exp()
#: Tolerance used whenever an exact ratio meets an irrational threshold.
THRESHOLD_TOL = Decimal("1e-9")

NOTIONS = ("cef", "cef1", "pef", "pef1", "cmms", "cmms_allocated", "cprop", "cprop_allocated", "usw", "nw")


def at_least(value, threshold: Decimal, tol: Decimal = THRESHOLD_TOL) -> bool:
    """``value >= threshold - tol`` with ``value`` exact (or infinite)."""
    if value == math.inf:
        return True
    return Fraction(value) >= Fraction(threshold - tol)


def at_most(value, threshold: Decimal, tol: Decimal = THRESHOLD_TOL) -> bool:
    if value == math.inf:
        return False
    return Fraction(value) <= Fraction(threshold + tol)


@dataclass(frozen=True)
class Ratio:
    num: Fraction
    den: Fraction

    @property
    def value(self):
        return math.inf if self.den == 0 else Fraction(self.num) / self.den

    def to_list(self) -> list:
        return [format_fraction(Fraction(self.num)), format_fraction(Fraction(self.den))]

    @classmethod
    def from_list(cls, pair) -> "Ratio":
        return cls(as_fraction(pair[0]), as_fraction(pair[1]))


def _worst(ratios: Mapping) -> object:
    return min((r.value for r in ratios.values()), default=math.inf)


def _pairs(inst: Instance):
    return [(i, j) for i in range(inst.k) for j in range(inst.k) if i != j]


def audit_cef(m: FractionalMatching, inst: Instance):
    """Return ``(alpha, {(i, j): Ratio})`` with ratio V_i / V*_i(Y_j)."""
    bundles = class_aggregate(m, inst)
    vals = [class_value(m, inst, i) for i in range(inst.k)]
    per = {(i, j): Ratio(vals[i], optimistic_value(inst, i, bundles[j])) for i, j in _pairs(inst)}
    return _worst(per), per


def _require_integral(m: FractionalMatching):
    if not m.is_integral:
        raise DomainError("up-to-one-item audits need an integral matching")


def _best_removal(value_fn, bundle_items: list) -> Fraction:
    if not bundle_items:
        return ZERO
    best = None
    for o in bundle_items:
        v = value_fn([p for p in bundle_items if p != o])
        if best is None or v < best:
            best = v
            if best == 0:
                break
    return best


def audit_cef1(m: FractionalMatching, inst: Instance):
    """Ratio V_i / min over o in Y_j of V*_i(Y_j minus o); infinite when Y_j is empty."""
    _require_integral(m)
    bundles = class_aggregate(m, inst)
    per = {}
    for i, j in _pairs(inst):
        items = [o for o in inst.items if o in bundles[j]]
        den = _best_removal(lambda s: optimistic_value(inst, i, s), items)
        per[(i, j)] = Ratio(class_value(m, inst, i), den)
    return _worst(per), per


def audit_pef(m: FractionalMatching, inst: Instance):
    _require_integral(m)
    bundles = class_aggregate(m, inst)
    per = {}
    for i, j in _pairs(inst):
        den = Fraction(pessimistic_value(inst, i, bundles[j].keys()))
        per[(i, j)] = Ratio(class_value(m, inst, i), den)
    return _worst(per), per


def audit_pef1(m: FractionalMatching, inst: Instance):
    _require_integral(m)
    bundles = class_aggregate(m, inst)
    per = {}
    for i, j in _pairs(inst):
        items = [o for o in inst.items if o in bundles[j]]
        den = _best_removal(lambda s: Fraction(pessimistic_value(inst, i, s)), items)
        per[(i, j)] = Ratio(class_value(m, inst, i), den)
    return _worst(per), per


def _pool_for(m, inst, pool):
    if pool == "all":
        return None
    if pool == "allocated":
        return allocated_items(m, inst)
    raise DomainError(f"pool must be 'all' or 'allocated', not {pool!r}")


def audit_cmms(m: FractionalMatching, inst: Instance, pool: str = "all"):
    items = _pool_for(m, inst, pool)
    per = {i: Ratio(class_value(m, inst, i), Fraction(mms_share(inst, i, items))) for i in range(inst.k)}
    return _worst(per), per


def audit_cprop(m: FractionalMatching, inst: Instance, pool: str = "all"):
    items = _pool_for(m, inst, pool)
    per = {i: Ratio(class_value(m, inst, i), prop_share(inst, i, items)) for i in range(inst.k)}
    return _worst(per), per


def audit_nw(m: FractionalMatching, inst: Instance):
    """``(True, None)`` when no liked pair has both sides below capacity, else ``(False, (a, o))``."""
    for o in inst.items:
        if m.item_load(o) >= 1:
            continue
        for a in inst.likers[o]:
            if m.agent_load(a) < 1:
                return False, (a, o)
    return True, None


def audit_usw(m: FractionalMatching, inst: Instance) -> Fraction:
    best = usw_opt(inst)
    if best == 0:
        return ONE
    return usw(m, inst) / best


@dataclass
class AuditReport:
    cef: object = None
    cef1: object = None
    pef: object = None
    pef1: object = None
    cmms: object = None
    cmms_allocated: object = None
    cprop: object = None
    cprop_allocated: object = None
    usw: object = None
    nonwasteful: object = None
    witness: object = None
    per_pair: dict = field(default_factory=dict)
    per_class: dict = field(default_factory=dict)
    skipped: dict = field(default_factory=dict)

    def ratio(self, notion: str):
        return getattr(self, notion)

    def to_dict(self) -> dict:
        def enc(v):
            if v is None or isinstance(v, bool):
                return v
            if v == math.inf:
                return "inf"
            return format_fraction(Fraction(v))

        return {
            **{n: enc(getattr(self, n)) for n in NOTIONS[:-1]},
            "nonwasteful": self.nonwasteful,
            "witness": list(self.witness) if self.witness else None,
            "per_pair": {n: [[i, j, *r.to_list()] for (i, j), r in sorted(d.items())] for n, d in self.per_pair.items()},
            "per_class": {n: [[i, *r.to_list()] for i, r in sorted(d.items())] for n, d in self.per_class.items()},
            "skipped": dict(self.skipped),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "AuditReport":
        def dec(v):
            if v is None or isinstance(v, bool):
                return v
            return math.inf if v == "inf" else as_fraction(v)

        rep = cls(**{n: dec(data.get(n)) for n in NOTIONS[:-1]})
        rep.nonwasteful = data.get("nonwasteful")
        rep.witness = tuple(data["witness"]) if data.get("witness") else None
        rep.per_pair = {n: {(i, j): Ratio.from_list((a, b)) for i, j, a, b in rows} for n, rows in data.get("per_pair", {}).items()}
        rep.per_class = {n: {i: Ratio.from_list((a, b)) for i, a, b in rows} for n, rows in data.get("per_class", {}).items()}
        rep.skipped = dict(data.get("skipped", {}))
        return rep


_PAIR_AUDITS = {"cef": audit_cef, "cef1": audit_cef1, "pef": audit_pef, "pef1": audit_pef1}
_CLASS_AUDITS = {
    "cmms": lambda m, inst: audit_cmms(m, inst, "all"),
    "cmms_allocated": lambda m, inst: audit_cmms(m, inst, "allocated"),
    "cprop": lambda m, inst: audit_cprop(m, inst, "all"),
    "cprop_allocated": lambda m, inst: audit_cprop(m, inst, "allocated"),
}


def audit(m: FractionalMatching, inst: Instance, notions=NOTIONS, strict: bool = False) -> AuditReport:
    """Run the selected audits.

    Integral-only notions are left as ``None`` for a properly fractional
    matching. Unless ``strict``, a notion whose exhaustive search exceeds
    its size guard is also left as ``None`` with the reason in ``skipped``.
    """
    m.validate(inst)
    rep = AuditReport()
    for name in notions:
        try:
            if name in _PAIR_AUDITS:
                if name != "cef" and not m.is_integral:
                    rep.skipped[name] = "fractional matching"
                    continue
                alpha, per = _PAIR_AUDITS[name](m, inst)
                setattr(rep, name, alpha)
                rep.per_pair[name] = per
            elif name in _CLASS_AUDITS:
                alpha, per = _CLASS_AUDITS[name](m, inst)
                setattr(rep, name, alpha)
                rep.per_class[name] = per
            elif name == "usw":
                rep.usw = audit_usw(m, inst)
            elif name == "nw":
                rep.nonwasteful, rep.witness = audit_nw(m, inst)
            else:
                raise DomainError(f"unknown notion {name!r}")
        except CapabilityError as exc:
            if strict:
                raise
            rep.skipped[name] = str(exc)
    return rep


def audit_prefixes(replay, notions=("cef", "cprop", "nw", "usw"), shares: str = "prefix"):
    """Audit every prefix snapshot of a replay.

    ``shares="prefix"`` evaluates each snapshot against the instance of the
    items seen so far; ``shares="final"`` keeps the complete instance (so
    shares are computed from all items, including future ones).
    """
    out = []
    for t, snap in replay.snapshots():
        inst = replay.instance.prefix(t) if shares == "prefix" else replay.instance
        if shares not in ("prefix", "final"):
            raise DomainError("shares must be 'prefix' or 'final'")
        out.append(audit(snap, inst, notions))
    return out
