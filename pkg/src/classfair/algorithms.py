"""Online matching algorithms, water-filling helpers and rounding selectors."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from ._kernels import _pykernels
from .core import ONE, ZERO, ArrivalEvent, Decision, OnlineAlgorithm, as_fraction
from .errors import DomainError, ProtocolViolation

# --------------------------------------------------------------------------
# water-filling


def class_levels(demands: Sequence[Fraction]):
    """Largest ``beta <= 1`` with ``sum(min(beta, d)) <= 1``; returns ``(beta, shares)``."""
    demands = [as_fraction(d) for d in demands]
    if sum(min(ONE, d) for d in demands) <= 1:
        beta = ONE
    else:
        remaining, count = ONE, sum(1 for d in demands if d > 0)
        beta = None
        for d in sorted(d for d in demands if d > 0):
            level = remaining / count
            if d >= level:
                beta = level
                break
            remaining -= d
            count -= 1
    return beta, [min(beta, d) for d in demands]


def water_level(loads: Sequence[Fraction], amount: Fraction, cap: Fraction | None = ONE):
    """Water-fill ``amount`` over agents with current ``loads``.

    Returns ``(gamma, increments)`` where ``increments[r] = max(gamma - loads[r], 0)``.
    With a cap the level is the largest ``gamma <= cap`` whose total fits in
    ``amount``; without a cap the total equals ``amount`` exactly.
    """
    loads = [as_fraction(v) for v in loads]
    amount = as_fraction(amount)
    if not loads:
        if amount and cap is None:
            raise DomainError("cannot place positive mass on an empty agent set")
        return (cap if cap is not None else ZERO), []
    order = sorted(loads)
    prefix = ZERO
    gamma = None
    for j, load in enumerate(order, start=1):
        prefix += load
        level = (amount + prefix) / j
        if j == len(order) or level <= order[j]:
            gamma = level
            break
    if cap is not None and gamma > cap:
        gamma = cap
    return gamma, [max(gamma - load, ZERO) for load in loads]


# --------------------------------------------------------------------------
# tie-breaking strategies for Match-and-Shift / greedy


def lexicographic(item, candidates, class_index):
    return min(candidates)


class RandomTies:
    """Uniformly random candidate from a seeded stream."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.rng = np.random.default_rng(seed)

    def __call__(self, item, candidates, class_index):
        cands = sorted(candidates)
        return cands[int(self.rng.integers(len(cands)))]


class HindsightAdversarialTies:
    """Pick the candidate who likes the most items still to arrive (lowest id on ties).

    Saturating the agents that will be needed later is the choice that hurts a
    class most; the strategy needs the full instance, so it is only usable in
    offline experiments.
    """

    def __init__(self, inst):
        self.inst = inst

    def __call__(self, item, candidates, class_index):
        step = self.inst.step_of[item]
        future = set(self.inst.items[step + 1:])
        return min(candidates, key=lambda a: (-len(self.inst.liked[a] & future), a))


TIE_STRATEGIES = ("lexicographic", "random", "adversarial")


def make_tie_breaker(name: str, seed: int = 0, inst=None):
    if name == "lexicographic":
        return lexicographic
    if name == "random":
        return RandomTies(seed)
    if name == "adversarial":
        if inst is None:
            raise DomainError("adversarial ties need the instance")
        return HindsightAdversarialTies(inst)
    raise DomainError(f"unknown tie strategy {name!r}")


# --------------------------------------------------------------------------
# deterministic algorithms


class Greedy(OnlineAlgorithm):
    """Match each item to an unmatched liking agent (lowest id unless a tie breaker is given)."""

    name = "greedy"

    def __init__(self, tie_breaker: Callable = lexicographic):
        self.tie_breaker = tie_breaker

    def start(self, classes):
        super().start(classes)
        self.matched = set()

    def decide(self, event):
        free = [a for a in sorted(event.neighbors) if a not in self.matched]
        if not free:
            return Decision.discard(event.item)
        a = self.tie_breaker(event.item, free, None)
        self.matched.add(a)
        return Decision.single(event.item, a)


class Discard(OnlineAlgorithm):
    name = "discard"

    def decide(self, event):
        return Decision.discard(event.item)


class Scripted(OnlineAlgorithm):
    """Replay a fixed ``item -> agent`` (or ``item -> {agent: fraction}``) table."""

    name = "scripted"

    def __init__(self, table: Mapping, integral: bool = True):
        self.table = dict(table)
        self.integral = integral

    def decide(self, event):
        choice = self.table.get(event.item)
        if choice is None:
            return Decision.discard(event.item)
        if isinstance(choice, Mapping):
            return Decision(event.item, {a: as_fraction(v) for a, v in choice.items()})
        return Decision.single(event.item, choice)


class MatchAndShift(OnlineAlgorithm):
    """Serve the highest-priority class with an unmatched liking agent, then move it to the back."""

    name = "match-and-shift"

    def __init__(self, tie_breaker: Callable = lexicographic, priority: Sequence[int] | None = None):
        self.tie_breaker = tie_breaker
        self.initial_priority = None if priority is None else list(priority)

    def start(self, classes):
        super().start(classes)
        k = len(classes)
        pi = list(range(k)) if self.initial_priority is None else list(self.initial_priority)
        if sorted(pi) != list(range(k)):
            raise DomainError(f"priority {pi} is not a permutation of range({k})")
        self.priority = pi
        self.matched = set()
        self.history = [tuple(pi)]

    def decide(self, event):
        for pos, cls in enumerate(self.priority):
            cands = [a for a in sorted(event.neighbors) if self.class_of[a] == cls and a not in self.matched]
            if cands:
                a = self.tie_breaker(event.item, cands, cls)
                if a not in cands:
                    raise DomainError(f"tie breaker returned non-candidate {a}")
                self.matched.add(a)
                self.priority = self.priority[:pos] + self.priority[pos + 1:] + [cls]
                self.history.append(tuple(self.priority))
                return Decision.single(event.item, a)
        self.history.append(tuple(self.priority))
        return Decision.discard(event.item)


@dataclass
class WaterLevels:
    item: int
    beta: Fraction
    demands: dict
    shares: dict
    gammas: dict = field(default_factory=dict)


class EqualFilling(OnlineAlgorithm):
    """Split each item equally among classes with spare liking capacity, then water-fill inside each class."""

    name = "equal-filling"
    integral = False

    def start(self, classes):
        super().start(classes)
        self.load = {a: ZERO for c in classes for a in c}
        self.levels = []

    def decide(self, event):
        groups = {}
        for a in sorted(event.neighbors):
            groups.setdefault(self.class_of[a], []).append(a)
        cls_ids = sorted(groups)
        demands = [sum((ONE - self.load[a] for a in groups[i]), ZERO) for i in cls_ids]
        beta, shares = class_levels(demands)
        trace = WaterLevels(event.item, beta, dict(zip(cls_ids, demands)), dict(zip(cls_ids, shares)))
        assignment = {}
        for i, y in zip(cls_ids, shares):
            if not y:
                continue
            members = groups[i]
            gamma, inc = water_level([self.load[a] for a in members], y, cap=ONE)
            trace.gammas[i] = gamma
            for a, v in zip(members, inc):
                if v:
                    assignment[a] = v
                    self.load[a] += v
        self.levels.append(trace)
        return Decision(event.item, assignment)


# --------------------------------------------------------------------------
# selectors


def p_bound(x: float) -> float:
    """Lower bound on the probability that an agent with guiding mass ``x`` is ever selected."""
    c = (4 - 2 * math.sqrt(3)) / 3
    return 1 - math.exp(-x - x * x / 2 - c * x ** 3)


SEMI_OCS_C = (4 - 2 * math.sqrt(3)) / 3


class Selector:
    """One selection per step from a non-negative vector of total mass at most 1.

    ``step(weights, u)`` consumes a single uniform ``u`` in [0, 1) and
    returns an agent with positive weight, or ``None`` if the selector
    declines. The float arithmetic mirrors the Monte-Carlo kernels exactly.
    """

    mode = 0
    name = "selector"

    def reset(self):
        self.selected = {}
        self.lost = {}
        self.trace = []

    def __init__(self):
        self.reset()

    def _validate(self, weights):
        items = sorted((a, as_fraction(v)) for a, v in weights.items())
        if any(v < 0 for _, v in items):
            raise DomainError("selector weights must be non-negative")
        if sum((v for _, v in items), ZERO) > 1:
            raise DomainError("selector weights sum above 1")
        items = [(a, v) for a, v in items if v > 0]
        if not items:
            raise DomainError("selector needs at least one positive weight")
        return items

    def step(self, weights: Mapping, u: float):
        items = self._validate(weights)
        agents = [a for a, _ in items]
        xs = [float(v) for _, v in items]
        sel = [bool(self.selected.get(a)) for a in agents]
        lost = [self.lost.get(a, 0.0) for a in agents]
        idx = list(range(len(agents)))
        q = _pykernels._select(self.mode, float(u), idx, xs, sel, lost, SEMI_OCS_C)
        chosen = agents[q] if q >= 0 else None
        for a, x in zip(agents, xs):
            if a != chosen and not self.selected.get(a):
                self.lost[a] = self.lost.get(a, 0.0) + x
        if chosen is not None:
            self.selected[chosen] = True
        self.trace.append((dict(items), chosen))
        return chosen


class IndependentRounding(Selector):
    """Pick agent a with probability x_a, independently across steps.

    With ``renormalize`` (default) the leftover mass ``1 - sum(x)`` is spread
    proportionally so a step always selects; without it the step selects
    nobody with that probability.
    """

    name = "independent"

    def __init__(self, renormalize: bool = True):
        self.renormalize = renormalize
        self.mode = 0 if renormalize else 1
        super().__init__()


class SemiOCS(Selector):
    """Negatively correlated selector.

    Agents never selected so far are preferred: among them, agent a is drawn
    with weight ``x_a * g'(m_a)`` where ``m_a`` is the mass a has been offered
    without being selected and ``g(m) = m + m^2/2 + c m^3``. Once every
    candidate has been selected before, it falls back to drawing by ``x``.
    """

    name = "semi-ocs"
    mode = 2


SELECTORS = {"independent": lambda: IndependentRounding(True),
             "independent-raw": lambda: IndependentRounding(False),
             "semi-ocs": SemiOCS}


def lowest_unmatched(event: ArrivalEvent, matched) -> int | None:
    return next((a for a in sorted(event.neighbors) if a not in matched), None)


class EqualFillingOCS(OnlineAlgorithm):
    """Round an uncapped equal-filling guide with an online selector.

    Draws exactly one uniform per arrival from ``numpy.random.default_rng(seed)``.
    """

    name = "equal-filling-ocs"

    def __init__(self, selector: Selector | None = None, seed: int = 0, fallback: Callable = lowest_unmatched):
        self.selector = selector if selector is not None else IndependentRounding()
        self.seed = seed
        self.fallback = fallback

    def start(self, classes):
        super().start(classes)
        self.rng = np.random.default_rng(self.seed)
        self.guide_load = {a: ZERO for c in classes for a in c}
        self.guide = {}
        self.matched = set()
        self.selector.reset()

    def guide_step(self, event):
        """Guiding fractions ``x~[a, o]`` of this arrival (updates the guide loads)."""
        groups = {}
        for a in sorted(event.neighbors):
            groups.setdefault(self.class_of[a], []).append(a)
        out = {}
        if not groups:
            return out
        share = Fraction(1, len(groups))
        for i in sorted(groups):
            members = groups[i]
            _, inc = water_level([self.guide_load[a] for a in members], share, cap=None)
            for a, v in zip(members, inc):
                if v:
                    out[a] = v
        for a, v in out.items():
            self.guide_load[a] += v
            self.guide[(a, event.item)] = v
        return out

    def decide(self, event):
        weights = self.guide_step(event)
        u = float(self.rng.random())
        chosen = self.selector.step(weights, u) if weights else None
        if chosen is not None and chosen not in event.neighbors:
            raise ProtocolViolation(len(self.selector.trace) - 1, "selector chose a non-neighbour")
        if chosen is None or chosen in self.matched:
            chosen = self.fallback(event, self.matched)
        if chosen is None:
            return Decision.discard(event.item)
        self.matched.add(chosen)
        return Decision.single(event.item, chosen)


class EqualRanking(OnlineAlgorithm):
    """Uniform class among classes with a liking agent, then Ranking inside that class.

    Rank keys are drawn once for all agents in id order (smaller key = higher
    rank); then one uniform per arrival chooses the class. Wasteful by design.
    """

    name = "equal-ranking"

    def __init__(self, seed: int = 0):
        self.seed = seed

    def start(self, classes):
        super().start(classes)
        self.rng = np.random.default_rng(self.seed)
        agents = sorted(self.class_of)
        keys = self.rng.random(len(agents))
        self.key = {a: float(k) for a, k in zip(agents, keys)}
        self.matched = set()
        self.class_choice = {}

    def decide(self, event):
        u = float(self.rng.random())
        classes = sorted({self.class_of[a] for a in event.neighbors})
        if not classes:
            return Decision.discard(event.item)
        pick = min(int(u * len(classes)), len(classes) - 1)
        cls = classes[pick]
        self.class_choice[event.item] = cls
        cands = [a for a in event.neighbors if self.class_of[a] == cls and a not in self.matched]
        if not cands:
            return Decision.discard(event.item)
        a = min(cands, key=lambda b: (self.key[b], b))
        self.matched.add(a)
        return Decision.single(event.item, a)


class NonWastefulWrapper(OnlineAlgorithm):
    """Follow an inner algorithm's advice where possible, otherwise fill greedily.

    The inner algorithm runs on the same arrivals but never learns what the
    wrapper actually did.
    """

    def __init__(self, inner: OnlineAlgorithm):
        self.inner = inner
        self.integral = inner.integral
        self.name = f"nw({inner.name})"

    def start(self, classes):
        super().start(classes)
        self.inner.start(classes)
        self.load = {a: ZERO for c in classes for a in c}
        self.step = 0

    def decide(self, event):
        advice = self.inner.decide(event)
        if advice.item != event.item:
            raise ProtocolViolation(self.step, "inner algorithm answered a different item")
        for a, v in advice.assignment.items():
            if as_fraction(v) and a not in event.neighbors:
                raise ProtocolViolation(self.step, f"inner algorithm used non-neighbour {a}")
        self.step += 1
        assignment = {}
        for a, v in sorted(advice.assignment.items()):
            v = min(as_fraction(v), ONE - self.load[a])
            if self.integral and v < 1:
                v = ZERO
            if v > 0:
                assignment[a] = v
        left = ONE - sum(assignment.values(), ZERO)
        for a in sorted(event.neighbors):
            if left <= 0:
                break
            room = ONE - self.load[a] - assignment.get(a, ZERO)
            if self.integral:
                if room == 1 and not assignment:
                    assignment[a] = ONE
                    left = ZERO
                continue
            if room > 0:
                take = min(room, left)
                assignment[a] = assignment.get(a, ZERO) + take
                left -= take
        for a, v in assignment.items():
            self.load[a] += v
        return Decision(event.item, assignment)


ALGORITHMS = ("match-and-shift", "equal-filling", "equal-filling-ocs", "equal-ranking", "greedy", "discard")


def make_algorithm(name: str, tie: str = "lexicographic", selector: str = "independent", seed: int = 0,
                   inst=None, priority=None) -> OnlineAlgorithm:
    """Build an algorithm by name; ``nw:<name>`` wraps it in :class:`NonWastefulWrapper`."""
    if name.startswith("nw:"):
        return NonWastefulWrapper(make_algorithm(name[3:], tie, selector, seed, inst, priority))
    if name == "match-and-shift":
        return MatchAndShift(make_tie_breaker(tie, seed, inst), priority)
    if name == "greedy":
        return Greedy(make_tie_breaker(tie, seed, inst))
    if name == "equal-filling":
        return EqualFilling()
    if name == "equal-filling-ocs":
        if selector not in SELECTORS:
            raise DomainError(f"unknown selector {selector!r}")
        return EqualFillingOCS(SELECTORS[selector](), seed)
    if name == "equal-ranking":
        return EqualRanking(seed)
    if name == "discard":
        return Discard()
    raise DomainError(f"unknown algorithm {name!r}")
