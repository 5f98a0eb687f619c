from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from classfair.adversary import SuiteBounds, fig3_instance, random_instance
from classfair.core import FractionalMatching, Instance
from classfair.errors import CapabilityError, DomainError, StructuralError
from classfair.valuation import (
    allocated_items,
    class_value,
    mms_share,
    optimistic_value,
    pessimistic_value,
    prop_share,
    prop_share_oracle,
    share_profile,
    stirling_partition_count,
    usw,
    usw_opt,
)
from oracles import (
    brute_mms,
    brute_min_maximal_matching,
    brute_usw_opt,
    class_edges,
    optimistic_value_cut_oracle,
    optimistic_value_vertex_oracle,
)

FRACS = [F(0), F(1, 4), F(1, 3), F(1, 2), F(2, 3), F(1)]


def small_instances(seed, count, max_agents=8, max_items=4, max_class=4, max_k=3):
    rng = np.random.default_rng(seed)
    bounds = SuiteBounds(max_k=max_k, max_agents=max_agents, max_items=max_items)
    out = []
    while len(out) < count:
        inst = random_instance(rng, bounds)
        i = int(rng.integers(inst.k))
        if len(inst.classes[i]) <= max_class:
            out.append((inst, i, rng))
    return out


class TestOptimistic:
    """V* against LP-vertex and cut-duality oracles."""

    def test_fig1_style_bundle(self):
        inst = fig3_instance()
        assert optimistic_value(inst, 0, [1, 2]) == 2
        assert optimistic_value(inst, 1, [0, 1, 2]) == 2

    def test_fractional_bundle(self):
        inst = Instance.from_likes([[0, 1]], [[0, 1], [0]])
        assert optimistic_value(inst, 0, {0: F(1, 2), 1: F(1, 2)}) == 1
        assert optimistic_value(inst, 0, {1: F(2, 3)}) == F(2, 3)

    def test_oracles_agree_seeded(self):
        for inst, i, rng in small_instances(11, 60):
            y = {o: FRACS[int(rng.integers(len(FRACS)))] for o in inst.items}
            v = optimistic_value(inst, i, y)
            assert v == optimistic_value_vertex_oracle(inst, i, y)
            assert v == optimistic_value_cut_oracle(inst, i, y)

    def test_bad_bundles(self):
        inst = Instance.from_likes([[0]], [[0]])
        with pytest.raises(DomainError):
            optimistic_value(inst, 0, {0: F(3, 2)})
        with pytest.raises(StructuralError):
            optimistic_value(inst, 0, {7: F(1)})
        with pytest.raises(DomainError):
            optimistic_value(inst, 2, {0: F(1)})

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6), st.lists(st.sampled_from(FRACS), min_size=4, max_size=4))
    def test_monotone_and_bounded(self, seed, extra):
        """V* is monotone in the bundle and at most min(|class|, total mass)."""
        (inst, i, rng), = small_instances(seed, 1)
        y = {o: FRACS[int(rng.integers(len(FRACS)))] for o in inst.items}
        bigger = {o: max(v, extra[t % 4]) for t, (o, v) in enumerate(y.items())}
        v = optimistic_value(inst, i, y)
        assert v <= optimistic_value(inst, i, bigger)
        assert v <= min(len(inst.classes[i]), sum(y.values(), F(0)))


class TestPessimistic:
    """V-minus is the minimum maximal matching size."""

    def test_fig3(self):
        inst = fig3_instance()
        assert pessimistic_value(inst, 0, [0, 1, 2]) == 2
        assert pessimistic_value(inst, 0, [0]) == 1
        assert pessimistic_value(inst, 1, [1]) == 0

    def test_against_brute_force(self):
        for inst, i, _ in small_instances(3, 80, max_items=5):
            items = list(inst.items)
            got = pessimistic_value(inst, i, items)
            assert got == brute_min_maximal_matching(class_edges(inst, i, items))
            assert got <= optimistic_value(inst, i, items) <= 2 * got

    def test_guard(self):
        inst = Instance.from_likes([list(range(11))], [list(range(11))] * 11)
        with pytest.raises(CapabilityError):
            pessimistic_value(inst, 0, inst.items)
        assert pessimistic_value(inst, 0, inst.items, guard=22) == 11

    def test_rejects_fractional(self):
        inst = Instance.from_likes([[0]], [[0]])
        with pytest.raises(DomainError):
            pessimistic_value(inst, 0, {0: F(1, 2)})


class TestShares:
    """Proportional and maximin shares."""

    def test_prop_matches_lp(self):
        for inst, i, _ in small_instances(5, 40, max_items=6, max_class=4, max_k=3):
            assert prop_share(inst, i) == prop_share_oracle(inst, i)

    def test_prop_oracle_guard(self):
        inst = Instance.from_likes([[0]], [[0]] * 7)
        with pytest.raises(CapabilityError):
            prop_share_oracle(inst, 0)

    def test_mms_against_brute_force(self):
        for inst, i, _ in small_instances(9, 60, max_items=6):
            assert mms_share(inst, i) == brute_mms(inst, i, inst.items)

    def test_prop_dominates_mms(self):
        for inst, i, _ in small_instances(2, 60, max_items=6):
            assert mms_share(inst, i) <= prop_share(inst, i)

    @pytest.mark.parametrize("n,k,expected", [(0, 2, 1), (3, 1, 1), (3, 2, 4), (4, 3, 14), (5, 5, 52)])
    def test_stirling(self, n, k, expected):
        assert stirling_partition_count(n, k) == expected

    def test_mms_budget(self):
        inst = Instance.from_likes([[0, 1], [2], [3]], [[0, 1]] * 8)
        with pytest.raises(CapabilityError):
            mms_share(inst, 0, budget=10)
        assert mms_share(inst, 0) == 2

    def test_pool_restriction(self):
        inst = Instance.from_likes([[0], [1]], [[0, 1], [0, 1]])
        assert prop_share(inst, 0) == 1
        assert prop_share(inst, 0, pool=[0]) == F(1, 2)
        assert mms_share(inst, 0) == 1 and mms_share(inst, 0, pool=[0]) == 0


class TestWelfare:
    """Matching size and its optimum."""

    def test_usw_opt_brute(self):
        for inst, _, _ in small_instances(4, 80, max_items=7):
            assert usw_opt(inst) == brute_usw_opt(inst)

    def test_usw_and_class_value(self):
        inst = Instance.from_likes([[0], [1]], [[0, 1], [1]])
        m = FractionalMatching({(0, 0): F(1, 2), (1, 0): F(1, 2), (1, 1): F(1, 2)})
        assert usw(m) == usw(m, inst) == F(3, 2)
        assert class_value(m, inst, 1) == 1
        assert allocated_items(m, inst) == (0,)

    def test_profile(self):
        inst = fig3_instance()
        prof = share_profile(inst)
        assert len(prof.prop) == inst.k
