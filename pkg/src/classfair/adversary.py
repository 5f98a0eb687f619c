"""Instance generators: fixed constructions, adaptive adversaries, seeded random suites.

Adaptive adversaries read only the public matching snapshot handed to
``next_arrival``; every branch that a hand proof settles "without loss of
generality" is decided here by inspecting that snapshot.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .core import ArrivalEvent, FractionalMatching, Instance, IntegralMatching


class AdaptiveAdversary:
    """Base class: subclasses implement ``script()``, a generator of arrivals.

    Inside ``script`` the attribute ``self.current`` holds the matching as it
    stood right after the previously yielded arrival was decided.
    """

    name = "adaptive"

    def __init__(self, classes):
        self.classes = tuple(tuple(c) for c in classes)
        self.notes = []
        self.current = FractionalMatching()
        self._gen = None
        self._count = 0

    def next_arrival(self, matching):
        self.current = matching
        if self._gen is None:
            self._gen = self.script()
        try:
            event = next(self._gen)
        except StopIteration:
            return None
        self._count += 1
        return event

    def new_item(self, likers) -> ArrivalEvent:
        return ArrivalEvent(self._count, frozenset(likers))

    def script(self):  # pragma: no cover - abstract
        raise NotImplementedError

    def _holder(self, item):
        """Agent holding the largest share of ``item`` (lowest id on ties), or None."""
        best = None
        for (a, o), v in self.current:
            if o == item and (best is None or (v, -a) > (best[0], -best[1])):
                best = (v, a)
        return None if best is None else best[1]


# --------------------------------------------------------------------------
# the four-item, two-class construction


def example11_instance() -> Instance:
    """Classes {a1,a2,a3} = {0,1,2} and {b1,b2,b3} = {3,4,5}; o_r liked by a_r, b_r; o4 by a1, b1."""
    return Instance.from_likes([[0, 1, 2], [3, 4, 5]], [[0, 3], [1, 4], [2, 5], [0, 3]])


def example11_matching() -> IntegralMatching:
    """o1 -> a1, o2 -> b2, o3 -> b3, o4 -> b1."""
    return IntegralMatching({0: 0, 1: 4, 2: 5, 3: 3})


class Example11Adversary(AdaptiveAdversary):
    """Three paired items, then a fourth liked by the poorer class's matched agent and its rival.

    After o1..o3 the class holding fewer of them (lower index on ties) is the
    poor class. Its matched agent from those items and the other class's
    agent paired with the same item both like o4; a non-wasteful algorithm
    must hand o4 to the richer class.
    """

    name = "example11"

    def __init__(self):
        super().__init__([[0, 1, 2], [3, 4, 5]])

    def script(self):
        for r in range(3):
            yield self.new_item([r, 3 + r])
        held = [[], []]
        for r in range(3):
            a = self._holder(r)
            if a is not None:
                held[0 if a < 3 else 1].append((r, a))
        poor = 0 if len(held[0]) <= len(held[1]) else 1
        if not held[0] or not held[1]:
            self.notes.append("first three items did not reach both classes")
        if held[poor]:
            r, a = held[poor][0]
        else:
            r = 0
            a = r if poor == 0 else 3 + r
        rival = 3 + r if poor == 0 else r
        yield self.new_item([a, rival])


class USWTwoItemsAdversary(AdaptiveAdversary):
    """One class of two agents; o1 liked by both, o2 only by the agent holding o1.

    The holder is the agent with the largest share of o1 (lowest id on ties,
    agent 0 if o1 was discarded), so a deterministic algorithm reaches only
    half of the optimal matching size 2.
    """

    name = "usw-two-items"

    def __init__(self):
        super().__init__([[0, 1]])

    def script(self):
        yield self.new_item([0, 1])
        holder = self._holder(0)
        yield self.new_item([0 if holder is None else holder])


class DivisibleCEFAdversary(AdaptiveAdversary):
    """Two classes of three; o1, o2 liked by two agents per class, o3, o4 by the richer class plus one rival.

    After o1, o2 the class with the larger total share is "rich" (class 0 on
    ties). In the other class the paired agent with the larger share (lower
    id on ties) is the one who also likes o3 and o4.
    """

    name = "divisible-cef"

    def __init__(self):
        super().__init__([[0, 1, 2], [3, 4, 5]])

    def script(self):
        yield self.new_item([0, 1, 3, 4])
        yield self.new_item([0, 1, 3, 4])
        m = self.current
        totals = [m.agent_load(0) + m.agent_load(1), m.agent_load(3) + m.agent_load(4)]
        if totals[0] + totals[1] < 2:
            self.notes.append("o1, o2 not fully assigned: the construction assumes non-wastefulness")
        rich = 0 if totals[0] >= totals[1] else 1
        pair = (3, 4) if rich == 0 else (0, 1)
        p1 = pair[0] if m.agent_load(pair[0]) >= m.agent_load(pair[1]) else pair[1]
        fans = list(self.classes[rich]) + [p1]
        yield self.new_item(fans)
        yield self.new_item(fans)


def divisible_cef_instance() -> Instance:
    """The static instance the adversary emits against an algorithm that splits o1, o2 evenly."""
    return Instance.from_likes([[0, 1, 2], [3, 4, 5]], [[0, 1, 3, 4], [0, 1, 3, 4], [0, 1, 2, 3], [0, 1, 2, 3]])


# --------------------------------------------------------------------------
# static tightness instances for equal-filling


def equal_filling_cef(n: int) -> Instance:
    """Class 0 = a_1..a_n (ids 0..n-1), class 1 = 2n agents liking everything.

    Round t brings o_t (id 2t-2) and o'_t (id 2t-1); a_i likes the items of
    rounds 1..i.
    """
    if n < 1:
        raise ValueError("n must be positive")
    first = list(range(n))
    second = list(range(n, 3 * n))
    likes = []
    for t in range(1, n + 1):
        fans = [i - 1 for i in range(t, n + 1)] + second
        likes += [fans, fans]
    return Instance.from_likes([first, second], likes)


def equal_filling_usw(n: int) -> Instance:
    """n singleton classes c_j (ids 0..n-1) plus one class of n agents (ids n..2n-1).

    Red items 0..n-1 are liked by everyone and arrive first; blue item n+j
    is liked by c_j only.
    """
    if n < 1:
        raise ValueError("n must be positive")
    classes = [[j] for j in range(n)] + [list(range(n, 2 * n))]
    everyone = list(range(2 * n))
    likes = [everyone for _ in range(n)] + [[j] for j in range(n)]
    return Instance.from_likes(classes, likes)


def single_class_triangle(n: int) -> Instance:
    """One class; item t is liked by agents t..n-1 (the classical fractional-matching worst case)."""
    return Instance.from_likes([list(range(n))], [list(range(t, n)) for t in range(n)])


# --------------------------------------------------------------------------
# small illustrative fixtures (two classes of two)


def fig2_instance() -> Instance:
    """Classes {a1,a2} = {0,1}, {b1,b2} = {2,3}; o1: a1,b1; o2: a1; o3: b2,a2; o4: b2."""
    return Instance.from_likes([[0, 1], [2, 3]], [[0, 2], [0], [3, 1], [3]])


def fig2_matchings() -> dict:
    return {
        "a": IntegralMatching({}),
        "b": IntegralMatching({0: 0, 2: 3}),
        "c": IntegralMatching({0: 2, 1: 0, 2: 1, 3: 3}),
    }


def fig3_instance() -> Instance:
    """Classes {a1,a2} = {0,1}, {b1,b2} = {2,3}; o1: a1,a2,b1; o2: a2; o3: a1,b2."""
    return Instance.from_likes([[0, 1], [2, 3]], [[0, 1, 2], [1], [0, 3]])


def fig3_matching() -> IntegralMatching:
    """o1 -> b1, o2 -> a2, o3 -> b2."""
    return IntegralMatching({0: 2, 1: 1, 2: 3})


# --------------------------------------------------------------------------
# separation fixtures


def cef1_not_cmms(k: int):
    """k-1 classes of k agents, each owning one item type of k copies, plus a last class of k-1 agents.

    Agent j of the last class likes exactly the items of type j. Returns the
    instance and the matching giving copy r of type j to agent r of class j
    and nothing to the last class.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    classes = [list(range(j * k, (j + 1) * k)) for j in range(k - 1)]
    last = [(k - 1) * k + j for j in range(k - 1)]
    classes.append(last)
    likes = []
    for j in range(k - 1):
        for _ in range(k):
            likes.append(classes[j] + [last[j]])
    inst = Instance.from_likes(classes, likes)
    matching = IntegralMatching({j * k + r: classes[j][r] for j in range(k - 1) for r in range(k)})
    return inst, matching


def cef1_not_cmms_repaired(k: int):
    """Same instance; one type-1 copy goes to the last class instead (CEF1 and NW hold exactly)."""
    inst, base = cef1_not_cmms(k)
    table = dict(base.assignment)
    table[0] = inst.classes[-1][0]
    return inst, IntegralMatching(table)


def cmms_not_cef1(k: int):
    """k classes of k agents and k-1 items everybody likes; all items go to class 0."""
    if k < 2:
        raise ValueError("k must be at least 2")
    classes = [list(range(j * k, (j + 1) * k)) for j in range(k)]
    everyone = list(range(k * k))
    inst = Instance.from_likes(classes, [everyone for _ in range(k - 1)])
    return inst, IntegralMatching({o: classes[0][o] for o in range(k - 1)})


# --------------------------------------------------------------------------
# allocated-items proportionality adversary


class CPROPAllocatedAdversary(AdaptiveAdversary):
    """Two classes of n real and 2n dummy agents, played in rounds of two items.

    Class 0 = reals 0..n-1 then dummies n..3n-1; class 1 = reals 3n..4n-1
    then dummies 4n..6n-1. Each round's two items are liked by the surviving
    reals of both classes; afterwards the lowest-valued survivor of each class
    (lowest id on ties) drops out. Once every survivor is saturated the
    poorer class (class 0 on ties) is frozen out: the remaining 2(n - t*)
    items go to the other class plus the poorer class's survivors.
    """

    name = "cprop-allocated"

    def __init__(self, n: int):
        self.n = n
        super().__init__([list(range(3 * n)), list(range(3 * n, 6 * n))])
        self.t_star = None
        self.poor = None

    def script(self):
        n = self.n
        alive = [list(range(n)), list(range(3 * n, 4 * n))]
        t = 0
        while True:
            t += 1
            fans = alive[0] + alive[1]
            yield self.new_item(fans)
            yield self.new_item(fans)
            m = self.current
            for side in (0, 1):
                if alive[side]:
                    low = min(alive[side], key=lambda a: (m.agent_load(a), a))
                    alive[side].remove(low)
            if all(m.agent_load(a) == 1 for a in alive[0] + alive[1]):
                break
            if t >= 3 * n:
                self.notes.append("survivors never saturated (algorithm not non-wasteful?)")
                break
        self.t_star = t
        m = self.current
        totals = [sum((m.agent_load(a) for a in c), 0) for c in self.classes]
        poor = 0 if totals[0] <= totals[1] else 1
        self.poor = poor
        fans = list(self.classes[1 - poor]) + alive[poor]
        for _ in range(2 * max(n - t, 0)):
            yield self.new_item(fans)


# --------------------------------------------------------------------------
# adversaries for randomised algorithms


class ClassLevelDeterministicAdversary(Example11Adversary):
    """Same construction as :class:`Example11Adversary`, aimed at class-level deterministic rules."""

    name = "class-level-deterministic"


class WithinClassDeterministicAdversary(AdaptiveAdversary):
    """k classes {x_c, y_c} = {2c, 2c+1}.

    Stage one: k items liked by every agent. Stage two: k items each liked by
    exactly the agents matched in stage one, so a rule that committed to a
    particular agent inside a class cannot use the second-stage items.
    """

    name = "within-class-deterministic"

    def __init__(self, k: int = 2):
        self.k = k
        super().__init__([[2 * c, 2 * c + 1] for c in range(k)])

    def script(self):
        everyone = list(range(2 * self.k))
        for _ in range(self.k):
            yield self.new_item(everyone)
        matched = sorted({a for (a, o), v in self.current if v > 0})
        if not matched:
            matched = [0]
            self.notes.append("nothing matched in stage one")
        for _ in range(self.k):
            yield self.new_item(matched)


# --------------------------------------------------------------------------
# random suite


@dataclass(frozen=True)
class SuiteBounds:
    max_k: int = 3
    max_agents: int = 9
    min_items: int = 1
    max_items: int = 9
    edge_probs: tuple = (0.3, 0.5, 0.8)


def random_instance(rng: np.random.Generator, bounds: SuiteBounds = SuiteBounds()) -> Instance:
    k = int(rng.integers(1, bounds.max_k + 1))
    n = int(rng.integers(k, max(k, bounds.max_agents) + 1))
    m = int(rng.integers(bounds.min_items, bounds.max_items + 1))
    p = float(bounds.edge_probs[int(rng.integers(len(bounds.edge_probs)))])
    owner = list(range(k)) + [int(c) for c in rng.integers(0, k, size=n - k)]
    owner = [owner[int(r)] for r in rng.permutation(n)]
    classes = [[a for a in range(n) if owner[a] == c] for c in range(k)]
    like = rng.random((n, m)) < p
    edges = frozenset((a, o) for a in range(n) for o in range(m) if like[a, o])
    return Instance(tuple(tuple(c) for c in classes), tuple(range(m)), edges)


def random_instances(seed: int = 0, count: int = 500, bounds: SuiteBounds = SuiteBounds()) -> Iterator[Instance]:
    """Reproducible stream of ``count`` random instances within ``bounds``."""
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield random_instance(rng, bounds)


# --------------------------------------------------------------------------
# fixture sets for the Monte-Carlo experiments


def usw_trap_instance() -> Instance:
    """Static two-item trap: both agents like o1, agent 0 alone likes o2."""
    return Instance.from_likes([[0, 1]], [[0, 1], [0]])


def lopsided_instance(n: int = 3) -> Instance:
    """Class sizes 1 and n; a single item liked by everyone."""
    return Instance.from_likes([[0], list(range(1, n + 1))], [list(range(n + 1))])


def ocs_fixtures() -> dict:
    """Ten small static instances for rounding experiments."""
    out = {
        "example11": example11_instance(),
        "usw-trap": usw_trap_instance(),
        "divisible-cef": divisible_cef_instance(),
        "ef-cef-3": equal_filling_cef(3),
        "ef-usw-3": equal_filling_usw(3),
        "fig2": fig2_instance(),
        "fig3": fig3_instance(),
    }
    for r, inst in enumerate(random_instances(seed=7, count=3, bounds=SuiteBounds(3, 6, 3, 6))):
        out[f"random-{r}"] = inst
    return out


def ranking_fixtures() -> dict:
    """Five two-class instances for the class-level randomisation experiments."""
    return {
        "example11": example11_instance(),
        "fig2": fig2_instance(),
        "fig3": fig3_instance(),
        "lopsided": lopsided_instance(3),
        "ef-cef-2": equal_filling_cef(2),
    }


# --------------------------------------------------------------------------
# registry used by the CLI


FIXTURES = {
    "example11": ("static", example11_instance),
    "example11-adaptive": ("adaptive", Example11Adversary),
    "usw-two-items": ("adaptive", USWTwoItemsAdversary),
    "divisible-cef": ("adaptive", DivisibleCEFAdversary),
    "equal-filling-cef": ("static", equal_filling_cef),
    "equal-filling-usw": ("static", equal_filling_usw),
    "triangle": ("static", single_class_triangle),
    "fig2": ("static", fig2_instance),
    "fig3": ("static", fig3_instance),
    "cef1-not-cmms": ("static", lambda k=4: cef1_not_cmms(k)[0]),
    "cmms-not-cef1": ("static", lambda k=4: cmms_not_cef1(k)[0]),
    "cprop-allocated": ("adaptive", CPROPAllocatedAdversary),
    "class-level-deterministic": ("adaptive", ClassLevelDeterministicAdversary),
    "within-class-deterministic": ("adaptive", WithinClassDeterministicAdversary),
}

#: default size parameter for parameterised fixtures
FIXTURE_DEFAULT_N = {"equal-filling-cef": 20, "equal-filling-usw": 10, "triangle": 10, "cprop-allocated": 20,
                     "within-class-deterministic": 2}


def make_fixture(name: str, n: int | None = None):
    """Return a fresh Instance or AdaptiveAdversary for a registered fixture."""
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(sorted(FIXTURES))}")
    _, factory = FIXTURES[name]
    if n is None:
        n = FIXTURE_DEFAULT_N.get(name)
    return factory() if n is None else factory(n)
