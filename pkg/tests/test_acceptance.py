"""Acceptance suite: one test per criterion at its stated tolerance and time budget.

``pytest -m acceptance -v`` runs only these; a PASS/FAIL line per criterion
is printed in the terminal summary.
"""

import time
from decimal import Decimal
from fractions import Fraction as F

import numpy as np
import pytest

from classfair.adversary import (
    CPROPAllocatedAdversary,
    DivisibleCEFAdversary,
    Example11Adversary,
    SuiteBounds,
    USWTwoItemsAdversary,
    cef1_not_cmms,
    cmms_not_cef1,
    equal_filling_cef,
    equal_filling_usw,
    example11_instance,
    example11_matching,
    ocs_fixtures,
    random_instance,
    random_instances,
    ranking_fixtures,
)
from classfair.algorithms import TIE_STRATEGIES, EqualFilling, Scripted, make_algorithm
from classfair.audit import ONE_MINUS_INV_E, at_least, at_most, audit
from classfair.core import run_online
from classfair.harness import reproduce_table1
from classfair.montecarlo import monte_carlo_ocs, monte_carlo_ranking
from classfair.valuation import mms_share, optimistic_value, prop_share, prop_share_oracle, usw, usw_opt
from oracles import optimistic_value_cut_oracle, optimistic_value_vertex_oracle

pytestmark = pytest.mark.acceptance

E = ONE_MINUS_INV_E
HALF = F(1, 2)
SUITE_SEED = 0
SUITE_SIZE = 500


class Timer:
    def __init__(self, budget):
        self.budget = budget

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.budget, f"took {self.elapsed:.1f}s, budget {self.budget}s"


def suite():
    return list(random_instances(SUITE_SEED, SUITE_SIZE))


@pytest.mark.criterion(1, "Match-and-Shift guarantees on the random suite")
def test_c01_match_and_shift_guarantees():
    with Timer(60):
        instances = suite()
        for tie in TIE_STRATEGIES:
            for r, inst in enumerate(instances):
                algo = make_algorithm("match-and-shift", tie, seed=r, inst=inst)
                m = run_online(inst, algo).matching
                rep = audit(m, inst, ("cef1", "cmms", "usw", "nw"), strict=True)
                assert rep.nonwasteful, (tie, r)
                assert rep.cef1 >= HALF, (tie, r, rep.cef1)
                assert rep.cmms >= HALF, (tie, r, rep.cmms)
                assert rep.usw >= HALF, (tie, r, rep.usw)


@pytest.mark.criterion(2, "Match-and-Shift tightness fixtures")
def test_c02_match_and_shift_tightness():
    with Timer(1):
        # the adaptive fixture answers whatever tie-breaking the algorithm uses
        for tie in ("lexicographic", "random"):
            rep = run_online(Example11Adversary(), make_algorithm("match-and-shift", tie, seed=1))
            a = audit(rep.matching, rep.instance, ("cef1", "cmms", "nw"))
            assert a.cef1 == HALF and a.cmms == HALF and a.nonwasteful
        # the static figure replayed with its adversarial choices
        inst = example11_instance()
        rep = run_online(inst, Scripted(example11_matching().assignment))
        a = audit(rep.matching, inst, ("cef1", "cmms", "nw"))
        assert a.cef1 == HALF and a.cmms == HALF and a.nonwasteful
        rep = run_online(USWTwoItemsAdversary(), make_algorithm("match-and-shift"))
        assert audit(rep.matching, rep.instance, ("usw",)).usw == HALF


@pytest.mark.criterion(3, "Equal-Filling guarantees on the random suite")
def test_c03_equal_filling_guarantees():
    with Timer(120):
        for r, inst in enumerate(suite()):
            m = run_online(inst, EqualFilling()).matching
            rep = audit(m, inst, ("cef", "cprop", "usw", "nw"), strict=True)
            assert rep.nonwasteful, r
            assert at_least(rep.cef, E), (r, rep.cef)
            assert at_least(rep.cprop, E), (r, rep.cprop)
            assert rep.usw >= HALF, (r, rep.usw)


@pytest.mark.criterion(4, "Equal-Filling tightness fixtures")
def test_c04_equal_filling_tightness():
    with Timer(5):
        inst = equal_filling_cef(20)
        cef = audit(run_online(inst, EqualFilling()).matching, inst, ("cef",)).cef
        assert at_most(cef, E + Decimal(1) / 4), cef
        inst = equal_filling_usw(10)
        assert audit(run_online(inst, EqualFilling()).matching, inst, ("usw",)).usw == F(6, 11)
        rep = run_online(DivisibleCEFAdversary(), EqualFilling())
        assert audit(rep.matching, rep.instance, ("cef",)).cef <= F(3, 4)


@pytest.mark.criterion(5, "adaptive allocated-items proportionality adversary")
def test_c05_cprop_allocated_adversary():
    with Timer(10):
        n = 20
        adv = CPROPAllocatedAdversary(n)
        rep = run_online(adv, EqualFilling())
        ratio = audit(rep.matching, rep.instance, ("cprop_allocated",)).cprop_allocated
        assert at_most(ratio, E * Decimal(n) / Decimal(n - 1)), float(ratio)


FRACS = [F(0), F(1, 4), F(1, 3), F(1, 2), F(2, 3), F(3, 4), F(1)]


def _seeded(seed, count, max_items, max_k, max_class):
    rng = np.random.default_rng(seed)
    bounds = SuiteBounds(max_k=max_k, max_agents=max_class * max_k, max_items=max_items)
    out = []
    while len(out) < count:
        inst = random_instance(rng, bounds)
        i = int(rng.integers(inst.k))
        if len(inst.classes[i]) <= max_class:
            out.append((inst, i, rng))
    return out


@pytest.mark.criterion(6, "valuation oracle equivalence")
def test_c06_valuation_oracles():
    with Timer(60):
        for inst, i, rng in _seeded(606, 200, max_items=4, max_k=3, max_class=4):
            y = {o: FRACS[int(rng.integers(len(FRACS)))] for o in inst.items}
            v = optimistic_value(inst, i, y)
            assert v == optimistic_value_vertex_oracle(inst, i, y)
            assert v == optimistic_value_cut_oracle(inst, i, y)
        for inst, i, _ in _seeded(607, 200, max_items=6, max_k=3, max_class=4):
            assert prop_share(inst, i) == prop_share_oracle(inst, i)


NW_ALGORITHMS = [("match-and-shift", t) for t in TIE_STRATEGIES] + [
    ("equal-filling", "lexicographic"),
    ("greedy", "lexicographic"),
    ("nw:equal-ranking", "lexicographic"),
    ("nw:equal-filling-ocs", "lexicographic"),
    ("nw:discard", "lexicographic"),
]


@pytest.mark.criterion(7, "non-wasteful matchings are half-optimal in welfare")
def test_c07_nonwasteful_half_usw():
    with Timer(120):
        instances = suite()
        for name, tie in NW_ALGORITHMS:
            for r, inst in enumerate(instances):
                m = run_online(inst, make_algorithm(name, tie, seed=r, inst=inst)).matching
                assert audit(m, inst, ("nw",)).nonwasteful, (name, r)
                assert 2 * usw(m, inst) >= usw_opt(inst), (name, r)


@pytest.mark.criterion(8, "separation fixtures at k = 4")
def test_c08_separation_cef1_not_cmms():
    with Timer(5):
        inst, m = cef1_not_cmms(4)
        rep = audit(m, inst, ("cef1", "cmms", "nw"))
        assert rep.nonwasteful
        assert rep.per_class["cmms"][inst.k - 1].value == 0
        assert rep.cef1 >= 1, f"literal matching has CEF1 ratio {rep.cef1}"


@pytest.mark.criterion(8, "separation fixtures at k = 4")
def test_c08_separation_cmms_not_cef1():
    with Timer(5):
        inst, m = cmms_not_cef1(4)
        rep = audit(m, inst, ("cef", "cmms"))
        assert all(mms_share(inst, i) == 0 for i in range(inst.k))
        assert rep.cef == 0


@pytest.mark.criterion(9, "Equal-Filling-OCS Monte-Carlo")
def test_c09_equal_filling_ocs():
    with Timer(300):
        fixtures = ocs_fixtures()
        assert len(fixtures) == 10
        for name, inst in fixtures.items():
            rep = monte_carlo_ocs(inst, "independent-raw", 10_000, seed=9)
            for a in rep.agents:
                assert abs(rep.selected_prob[a] - rep.closed_form[a]) <= 3 * rep.selected_se[a] + 1e-12, (name, a)
            r, se = rep.cprop_min()
            assert r >= 0.5 - 3 * se, (name, r)
        # stronger claim, conditional on the negatively-correlated selector
        for name, inst in fixtures.items():
            rep = monte_carlo_ocs(inst, "semi-ocs", 10_000, seed=9)
            for a in rep.agents:
                assert rep.selected_prob[a] >= rep.p_bound[a] - 3 * rep.selected_se[a], (name, a)
            r, se = rep.cprop_min()
            assert r >= 0.593 - 3 * se, (name, r)


@pytest.mark.criterion(10, "Equal-Ranking Monte-Carlo")
def test_c10_equal_ranking():
    with Timer(120):
        fixtures = ranking_fixtures()
        assert len(fixtures) == 5 and all(inst.k == 2 for inst in fixtures.values())
        for name, inst in fixtures.items():
            rep = monte_carlo_ranking(inst, 10_000, seed=10)
            assert rep.ci_valid
            assert rep.cef_ok(float(E), 3.0), (name, rep.cef_diff_mean)


@pytest.mark.criterion(11, "summary table reproduction")
def test_c11_table1():
    with Timer(600):
        rows = reproduce_table1(count=SUITE_SIZE, seed=SUITE_SEED)
        assert len(rows) == 6
        for row in rows:
            assert row.suite_ok, (row.notion, row.algorithm, row.suite_min)
            assert row.witness_ok, (row.notion, row.algorithm, row.witness)
