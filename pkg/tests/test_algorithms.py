from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from classfair.adversary import SuiteBounds, example11_instance, random_instance
from classfair.algorithms import (
    ALGORITHMS,
    SELECTORS,
    Discard,
    EqualFilling,
    EqualFillingOCS,
    EqualRanking,
    HindsightAdversarialTies,
    IndependentRounding,
    MatchAndShift,
    NonWastefulWrapper,
    SemiOCS,
    class_levels,
    make_algorithm,
    p_bound,
    water_level,
)
from classfair.audit import audit_nw
from classfair.core import run_online
from classfair.errors import DomainError

fracs = st.fractions(min_value=0, max_value=3, max_denominator=12)


def suite(seed, count):
    rng = np.random.default_rng(seed)
    return [random_instance(rng, SuiteBounds(max_k=3, max_agents=7, max_items=8)) for _ in range(count)]


class TestWaterFilling:
    """Exact water levels satisfy their defining equations."""

    @given(st.lists(fracs, min_size=1, max_size=5))
    def test_class_levels(self, demands):
        beta, shares = class_levels(demands)
        assert 0 < beta <= 1 or all(d == 0 for d in demands)
        assert all(s == min(beta, d) for s, d in zip(shares, demands))
        total = sum(shares, F(0))
        assert total <= 1
        if sum(min(F(1), d) for d in demands) > 1:
            assert total == 1

    @given(st.lists(st.fractions(0, 1, max_denominator=12), min_size=1, max_size=5),
           st.fractions(0, 1, max_denominator=12))
    def test_capped_level(self, loads, amount):
        gamma, inc = water_level(loads, amount)
        assert gamma <= 1
        assert all(i == max(gamma - l, 0) for i, l in zip(inc, loads))
        total = sum(inc, F(0))
        assert total <= amount
        if gamma < 1:
            assert total == amount

    @given(st.lists(fracs, min_size=1, max_size=5), st.fractions(0, 2, max_denominator=12))
    def test_uncapped_level(self, loads, amount):
        gamma, inc = water_level(loads, amount, cap=None)
        assert sum(inc, F(0)) == amount

    def test_empty(self):
        assert water_level([], F(0))[1] == []
        with pytest.raises(DomainError):
            water_level([], F(1), cap=None)


class TestDeterministic:
    """Match-and-Shift and Equal-Filling invariants on random instances."""

    @pytest.mark.parametrize("tie", ["lexicographic", "random", "adversarial"])
    def test_match_and_shift_nonwasteful(self, tie):
        for r, inst in enumerate(suite(1, 40)):
            algo = make_algorithm("match-and-shift", tie, seed=r, inst=inst)
            m = run_online(inst, algo).matching
            assert audit_nw(m, inst)[0]
            for pi in algo.history:
                assert sorted(pi) == list(range(inst.k))

    def test_match_and_shift_rotates(self):
        inst = example11_instance()
        algo = MatchAndShift()
        run_online(inst, algo)
        assert algo.history[0] == (0, 1)
        assert algo.history[1] == (1, 0)

    def test_bad_priority(self):
        with pytest.raises(DomainError):
            run_online(example11_instance(), MatchAndShift(priority=[0, 0]))

    def test_adversarial_ties_prefer_busy_agents(self):
        inst = example11_instance()
        tie = HindsightAdversarialTies(inst)
        assert tie(0, [0, 1], 0) == 0

    def test_equal_filling_nonwasteful_and_valid(self):
        for inst in suite(2, 40):
            algo = EqualFilling()
            rep = run_online(inst, algo)
            rep.matching.validate(inst)
            assert audit_nw(rep.matching, inst)[0]
            assert len(algo.levels) == len(inst.items)

    def test_equal_filling_splits_equally(self):
        inst = example11_instance()
        m = run_online(inst, EqualFilling()).matching
        assert m[(0, 0)] == F(1, 2) and m[(3, 0)] == F(1, 2)

    def test_wrapper_fixes_discard(self):
        for inst in suite(3, 30):
            m = run_online(inst, NonWastefulWrapper(Discard())).matching
            assert audit_nw(m, inst)[0]

    def test_wrapper_fractional(self):
        for inst in suite(4, 20):
            m = run_online(inst, make_algorithm("nw:equal-filling")).matching
            assert audit_nw(m, inst)[0]

    def test_unknown(self):
        with pytest.raises(DomainError):
            make_algorithm("nope")

    @pytest.mark.parametrize("name", ALGORITHMS)
    def test_registry(self, name):
        inst = example11_instance()
        run_online(inst, make_algorithm(name, inst=inst)).matching.validate(inst)


class TestSelectors:
    """One-step selection probabilities read off a uniform grid."""

    GRID = (np.arange(10_000) + 0.5) / 10_000

    def _freq(self, make, weights):
        counts = {}
        for u in self.GRID:
            sel = make()
            a = sel.step(weights, float(u))
            counts[a] = counts.get(a, 0) + 1
        return {a: c / len(self.GRID) for a, c in counts.items()}

    def test_independent_renormalised(self):
        f = self._freq(lambda: IndependentRounding(True), {0: F(1, 4), 1: F(1, 4)})
        assert f[0] == pytest.approx(0.5, abs=1e-3) and None not in f

    def test_independent_raw(self):
        f = self._freq(lambda: IndependentRounding(False), {0: F(1, 4), 1: F(1, 2)})
        assert f[0] == pytest.approx(0.25, abs=1e-3)
        assert f[None] == pytest.approx(0.25, abs=1e-3)

    def test_semi_ocs_prefers_unlucky(self):
        sel = SemiOCS()
        assert sel.step({0: F(1, 2), 1: F(1, 2)}, 0.1) == 0
        assert sel.lost == {1: 0.5}
        counts = 0
        for u in self.GRID:
            s = SemiOCS()
            s.selected, s.lost = {0: True}, {1: 0.5}
            counts += s.step({0: F(1, 2), 1: F(1, 2)}, float(u)) == 1
        assert counts == len(self.GRID)  # only never-selected agents are drawn

    def test_semi_ocs_weights(self):
        from classfair.algorithms import SEMI_OCS_C

        f = {}
        for u in self.GRID:
            s = SemiOCS()
            s.lost = {0: 1.0}
            a = s.step({0: F(1, 2), 1: F(1, 2)}, float(u))
            f[a] = f.get(a, 0) + 1
        w0 = 1 + 1.0 + 3 * SEMI_OCS_C
        assert f[0] / len(self.GRID) == pytest.approx(w0 / (w0 + 1), abs=1e-3)

    @pytest.mark.parametrize("bad", [{0: F(2, 3), 1: F(2, 3)}, {0: F(-1, 3)}, {0: F(0)}])
    def test_preconditions(self, bad):
        with pytest.raises(DomainError):
            IndependentRounding().step(bad, 0.5)

    def test_p_bound(self):
        assert p_bound(0) == 0
        assert 1 - np.exp(-1) < p_bound(1) < 1
        assert set(SELECTORS) == {"independent", "independent-raw", "semi-ocs"}


class TestRandomised:
    """Equal-Filling-OCS and Equal-Ranking are seeded and valid."""

    @pytest.mark.parametrize("selector", sorted(SELECTORS))
    def test_ocs_guide_mass(self, selector):
        for r, inst in enumerate(suite(5, 20)):
            algo = make_algorithm("equal-filling-ocs", selector=selector, seed=r)
            rep = run_online(inst, algo)
            rep.matching.validate(inst)
            for o in inst.items:
                mass = sum((v for (a, p), v in algo.guide.items() if p == o), F(0))
                assert mass == (1 if inst.likers[o] else 0)

    def test_ocs_reproducible(self):
        inst = suite(6, 1)[0]
        a = run_online(inst, EqualFillingOCS(seed=3)).matching
        b = run_online(inst, EqualFillingOCS(seed=3)).matching
        assert a == b

    def test_ranking_picks_liked_class(self):
        for r, inst in enumerate(suite(7, 20)):
            algo = EqualRanking(seed=r)
            rep = run_online(inst, algo)
            rep.matching.validate(inst)
            for o, c in algo.class_choice.items():
                assert any(inst.class_of[a] == c for a in inst.likers[o])

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32))
    def test_ranking_seed_determinism(self, seed):
        inst = example11_instance()
        assert run_online(inst, EqualRanking(seed)).matching == run_online(inst, EqualRanking(seed)).matching
