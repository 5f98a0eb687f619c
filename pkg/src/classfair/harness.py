"""Run configuration, single runs, suites and the summary table."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from decimal import Decimal
from fractions import Fraction
from pathlib import Path

from .adversary import (
    FIXTURES,
    AdaptiveAdversary,
    SuiteBounds,
    make_fixture,
    random_instances,
)
from .algorithms import ALGORITHMS, TIE_STRATEGIES, make_algorithm
from .audit import NOTIONS, ONE_MINUS_INV_E, at_least, at_most, audit
from .core import Instance, run_online
from .errors import DomainError, StructuralError
from .montecarlo import MonteCarloReport, monte_carlo_ocs, monte_carlo_ranking

RANDOMISED = ("equal-filling-ocs", "equal-ranking")


@dataclass
class RunConfig:
    algorithm: str = "match-and-shift"
    tie: str = "lexicographic"
    selector: str = "independent"
    seed: int = 0
    trials: int = 1
    fixture: str | None = None
    fixture_n: int | None = None
    instance_path: str | None = None
    suite_count: int = 0
    suite_seed: int = 0
    bounds: dict = field(default_factory=dict)
    notions: tuple = NOTIONS
    output_format: str = "json"
    output_path: str | None = None

    def __post_init__(self):
        self.notions = tuple(self.notions)
        if self.trials < 1:
            raise DomainError("trials must be at least 1")
        base = self.algorithm[3:] if self.algorithm.startswith("nw:") else self.algorithm
        if base not in ALGORITHMS:
            raise DomainError(f"unknown algorithm {self.algorithm!r}")
        if self.tie not in TIE_STRATEGIES:
            raise DomainError(f"unknown tie strategy {self.tie!r}")
        if self.output_format not in ("json", "csv"):
            raise DomainError("output format must be json or csv")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise DomainError(f"unknown config keys: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        return cls.from_dict(load_json(path))

    def suite_bounds(self) -> SuiteBounds:
        return SuiteBounds(**{k: (tuple(v) if k == "edge_probs" else v) for k, v in self.bounds.items()})


def load_json(path):
    """Parse a JSON file; errors name the file, line and column."""
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise StructuralError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def load_instance(path) -> Instance:
    return Instance.from_dict(load_json(path))


def resolve_source(config: RunConfig):
    if config.instance_path:
        return load_instance(config.instance_path)
    if config.fixture:
        return make_fixture(config.fixture, config.fixture_n)
    raise DomainError("config needs an instance_path or a fixture")


def run_once(config: RunConfig, source=None):
    """Replay the configured algorithm once and audit the final matching."""
    source = resolve_source(config) if source is None else source
    inst = source if isinstance(source, Instance) else None
    algo = make_algorithm(config.algorithm, config.tie, config.selector, config.seed, inst)
    replay = run_online(source, algo)
    report = audit(replay.matching, replay.instance, config.notions)
    return replay, report


def run_monte_carlo(config: RunConfig, source=None) -> MonteCarloReport:
    source = resolve_source(config) if source is None else source
    if isinstance(source, AdaptiveAdversary):
        raise DomainError("Monte-Carlo runs need a static instance")
    if config.algorithm == "equal-filling-ocs":
        return monte_carlo_ocs(source, config.selector, config.trials, config.seed)
    if config.algorithm == "equal-ranking":
        return monte_carlo_ranking(source, config.trials, config.seed)
    raise DomainError(f"{config.algorithm!r} is not randomised")


@dataclass
class SuiteResult:
    algorithm: str
    tie: str
    runs: int
    minima: dict
    all_nonwasteful: bool
    prop22_holds: bool
    failures: list = field(default_factory=list)


def run_suite(algorithm: str, tie: str = "lexicographic", count: int = 500, seed: int = 0,
              bounds: SuiteBounds = SuiteBounds(), notions=("cef", "cef1", "cmms", "cprop", "usw", "nw")) -> SuiteResult:
    """Run one algorithm over the seeded random suite and keep the worst ratio per notion."""
    from .valuation import usw, usw_opt

    minima = {}
    nw_all, prop22 = True, True
    failures = []
    for r, inst in enumerate(random_instances(seed, count, bounds)):
        algo = make_algorithm(algorithm, tie, seed=seed + r, inst=inst)
        replay = run_online(inst, algo)
        rep = audit(replay.matching, inst, notions)
        for name in notions:
            if name == "nw":
                continue
            v = rep.ratio(name)
            if v is not None and (name not in minima or v < minima[name]):
                minima[name] = v
        if rep.nonwasteful is False:
            nw_all = False
        if rep.nonwasteful and 2 * usw(replay.matching, inst) < usw_opt(inst):
            prop22 = False
            failures.append(r)
    return SuiteResult(algorithm, tie, count, minima, nw_all, prop22, failures)


# --------------------------------------------------------------------------
# summary table


@dataclass
class Table1Row:
    setting: str
    notion: str
    algorithm: str
    guarantee: str
    suite_min: object
    upper_bound: str
    witness: object
    witness_fixture: str
    suite_ok: bool
    witness_ok: bool

    @property
    def ok(self) -> bool:
        return self.suite_ok and self.witness_ok

    def as_record(self) -> dict:
        def enc(v):
            if v is None:
                return None
            if v == math.inf:
                return "inf"
            if isinstance(v, Fraction):
                return f"{v.numerator}/{v.denominator}"
            return v

        d = asdict(self)
        d["suite_min"] = enc(self.suite_min)
        d["witness"] = enc(self.witness)
        d["ok"] = self.ok
        return d


def _dec(v):
    return Decimal(v.numerator) / Decimal(v.denominator) if isinstance(v, Fraction) else Decimal(v)


def reproduce_table1(count: int = 500, seed: int = 0, triangle_n: int = 20, usw_n: int = 10,
                     bounds: SuiteBounds = SuiteBounds()) -> list:
    """Six rows: suite minima of the two deterministic algorithms and fixture witnesses of the upper bounds."""
    e = ONE_MINUS_INV_E
    half = Fraction(1, 2)
    ties = TIE_STRATEGIES
    mas = [run_suite("match-and-shift", t, count, seed, bounds, ("cef1", "cmms", "usw", "nw")) for t in ties]
    ef = run_suite("equal-filling", "lexicographic", count, seed, bounds, ("cef", "cprop", "usw", "nw"))

    def suite_min(results, notion):
        return min((r.minima.get(notion, math.inf) for r in results), default=math.inf)

    mas_nw = all(r.all_nonwasteful for r in mas)
    ef_nw = ef.all_nonwasteful

    replay, rep = run_once(RunConfig("match-and-shift", fixture="example11-adaptive", notions=("cef1", "cmms", "nw")))
    ex11_cef1, ex11_cmms = rep.cef1, rep.cmms
    _, rep = run_once(RunConfig("match-and-shift", fixture="usw-two-items", notions=("usw",)))
    usw2 = rep.usw
    _, rep = run_once(RunConfig("equal-filling", fixture="divisible-cef", notions=("cef", "nw")))
    div_cef = rep.cef
    _, rep = run_once(RunConfig("equal-filling", fixture="triangle", fixture_n=triangle_n, notions=("cprop",)))
    tri = rep.cprop
    _, rep = run_once(RunConfig("equal-filling", fixture="equal-filling-usw", fixture_n=usw_n, notions=("usw",)))
    ef_usw = rep.usw
    tri_bound = e + Decimal(1) / Decimal(triangle_n)

    rows = [
        Table1Row("indivisible", "CEF1 + NW", "match-and-shift", "1/2", suite_min(mas, "cef1"), "1/2",
                  ex11_cef1, "example11-adaptive", mas_nw and suite_min(mas, "cef1") >= half, ex11_cef1 <= half),
        Table1Row("indivisible", "CMMS", "match-and-shift", "1/2", suite_min(mas, "cmms"), "1/2",
                  ex11_cmms, "example11-adaptive", suite_min(mas, "cmms") >= half, ex11_cmms <= half),
        Table1Row("indivisible", "USW", "match-and-shift", "1/2", suite_min(mas, "usw"), "1/2",
                  usw2, "usw-two-items", suite_min(mas, "usw") >= half, usw2 <= half),
        Table1Row("divisible", "CEF + NW", "equal-filling", "1-1/e", suite_min([ef], "cef"), "3/4",
                  div_cef, "divisible-cef", ef_nw and at_least(suite_min([ef], "cef"), e), div_cef <= Fraction(3, 4)),
        Table1Row("divisible", "CPROP", "equal-filling", "1-1/e", suite_min([ef], "cprop"), f"1-1/e (+1/{triangle_n})",
                  tri, f"triangle(n={triangle_n})", at_least(suite_min([ef], "cprop"), e), at_most(tri, tri_bound)),
        Table1Row("divisible", "USW", "equal-filling", "1/2", suite_min([ef], "usw"), "1-1/e",
                  ef_usw, f"equal-filling-usw(n={usw_n})", suite_min([ef], "usw") >= half,
                  ef_usw == Fraction(usw_n + 2, 2 * (usw_n + 1)) and at_most(ef_usw, e)),
    ]
    return rows


def render_table(rows) -> str:
    head = f"{'setting':<12}{'notion':<11}{'algorithm':<17}{'guar.':<7}{'suite min':<12}{'bound':<16}{'witness':<12}{'ok':<4}"
    lines = [head, "-" * len(head)]
    for r in rows:
        sm = "inf" if r.suite_min == math.inf else f"{float(r.suite_min):.5f}"
        wv = "inf" if r.witness == math.inf else f"{float(r.witness):.5f}"
        lines.append(f"{r.setting:<12}{r.notion:<11}{r.algorithm:<17}{r.guarantee:<7}{sm:<12}{r.upper_bound:<16}{wv:<12}"
                     f"{'yes' if r.ok else 'NO':<4}")
    return "\n".join(lines)


def fixture_names() -> list:
    return [(name, kind) for name, (kind, _) in sorted(FIXTURES.items())]
