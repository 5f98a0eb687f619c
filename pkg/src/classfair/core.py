"""Instances, matchings and the online arrival protocol.

All divisible quantities are :class:`fractions.Fraction`. Agents and items
are integer ids; the position of an item in ``Instance.items`` is its
arrival step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import DomainError, ProtocolViolation, StructuralError

ZERO = Fraction(0)
ONE = Fraction(1)

#: A bundle maps item id -> fraction in [0, 1]; absent items count as 0.
Bundle = dict


def as_fraction(value) -> Fraction:
    """Parse ints, Fractions and ``"num/den"`` strings exactly (floats are rejected)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool) or isinstance(value, float):
        raise DomainError(f"refusing inexact value {value!r}; use a Fraction or 'num/den'")
    if isinstance(value, (int, str)):
        return Fraction(value)
    raise DomainError(f"cannot interpret {value!r} as an exact rational")


def format_fraction(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class Instance:
    """Offline agents partitioned into classes, plus an ordered item stream.

    ``edges`` holds ``(agent, item)`` pairs meaning "agent likes item".
    """

    classes: tuple
    items: tuple
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        classes = tuple(tuple(c) for c in self.classes)
        items = tuple(self.items)
        edges = frozenset((a, o) for a, o in self.edges)
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "edges", edges)

        seen = set()
        for i, members in enumerate(classes):
            if not members:
                raise StructuralError(f"class {i} is empty")
            for a in members:
                if not isinstance(a, int) or a < 0:
                    raise StructuralError(f"agent id {a!r} is not a non-negative integer")
                if a in seen:
                    raise StructuralError(f"agent {a} appears in more than one class")
                seen.add(a)
        if len(set(items)) != len(items):
            raise StructuralError("item ids must be distinct")
        for o in items:
            if not isinstance(o, int) or o < 0:
                raise StructuralError(f"item id {o!r} is not a non-negative integer")
        item_set = set(items)
        for a, o in edges:
            if a not in seen or o not in item_set:
                raise StructuralError(f"edge ({a}, {o}) references an undeclared agent or item")

    @classmethod
    def from_likes(cls, classes: Sequence[Iterable[int]], likes: Sequence[Iterable[int]]) -> "Instance":
        """Build an instance whose item ``t`` (arrival order) is liked by ``likes[t]``."""
        edges = {(a, o) for o, fans in enumerate(likes) for a in fans}
        return cls(tuple(tuple(c) for c in classes), tuple(range(len(likes))), frozenset(edges))

    @property
    def k(self) -> int:
        return len(self.classes)

    @cached_property
    def agents(self) -> tuple:
        return tuple(sorted(a for c in self.classes for a in c))

    @cached_property
    def class_of(self) -> Mapping[int, int]:
        return MappingProxyType({a: i for i, c in enumerate(self.classes) for a in c})

    @cached_property
    def step_of(self) -> Mapping[int, int]:
        return MappingProxyType({o: t for t, o in enumerate(self.items)})

    @cached_property
    def likers(self) -> Mapping[int, tuple]:
        fans = {o: [] for o in self.items}
        for a, o in self.edges:
            fans[o].append(a)
        return MappingProxyType({o: tuple(sorted(v)) for o, v in fans.items()})

    @cached_property
    def liked(self) -> Mapping[int, frozenset]:
        mine = {a: set() for a in self.agents}
        for a, o in self.edges:
            mine[a].add(o)
        return MappingProxyType({a: frozenset(v) for a, v in mine.items()})

    def likers_in_class(self, item: int, i: int) -> tuple:
        return tuple(a for a in self.likers[item] if self.class_of[a] == i)

    def arrival(self, item: int) -> "ArrivalEvent":
        return ArrivalEvent(item, frozenset(self.likers[item]))

    def prefix(self, t: int) -> "Instance":
        """The instance made of the first ``t`` arrivals."""
        kept = self.items[:t]
        keep = set(kept)
        return Instance(self.classes, kept, frozenset(e for e in self.edges if e[1] in keep))

    def to_dict(self) -> dict:
        return {
            "classes": [list(c) for c in self.classes],
            "items": list(self.items),
            "edges": sorted([a, o] for a, o in self.edges),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Instance":
        try:
            return cls(
                tuple(tuple(c) for c in data["classes"]),
                tuple(data["items"]),
                frozenset((int(a), int(o)) for a, o in data["edges"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise StructuralError(f"malformed instance document: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Instance":
        return cls.from_dict(json.loads(text))


class FractionalMatching:
    """An immutable matrix ``x[a, o]`` stored sparsely (zero entries dropped)."""

    __slots__ = ("_x", "_agent_load", "_item_load")

    def __init__(self, entries: Mapping | None = None):
        x = {}
        for (a, o), v in (entries or {}).items():
            v = as_fraction(v)
            if v < 0 or v > 1:
                raise StructuralError(f"x[{a}, {o}] = {v} is outside [0, 1]")
            if v:
                x[(a, o)] = v
        agent_load, item_load = {}, {}
        for (a, o), v in x.items():
            agent_load[a] = agent_load.get(a, ZERO) + v
            item_load[o] = item_load.get(o, ZERO) + v
        self._x = MappingProxyType(x)
        self._agent_load = agent_load
        self._item_load = item_load

    @property
    def x(self) -> Mapping:
        return self._x

    def __getitem__(self, pair) -> Fraction:
        return self._x.get(pair, ZERO)

    def agent_load(self, agent: int) -> Fraction:
        return self._agent_load.get(agent, ZERO)

    def item_load(self, item: int) -> Fraction:
        return self._item_load.get(item, ZERO)

    @property
    def is_integral(self) -> bool:
        return all(v == 1 for v in self._x.values())

    def __len__(self):
        return len(self._x)

    def __iter__(self) -> Iterator:
        return iter(self._x.items())

    def __eq__(self, other):
        if not isinstance(other, FractionalMatching):
            return NotImplemented
        return dict(self._x) == dict(other._x)

    def __hash__(self):
        return hash(frozenset(self._x.items()))

    def __add__(self, other: "FractionalMatching") -> "FractionalMatching":
        merged = dict(self._x)
        for pair, v in other._x.items():
            merged[pair] = merged.get(pair, ZERO) + v
        return FractionalMatching(merged)

    def __repr__(self):
        body = ", ".join(f"({a},{o}):{v}" for (a, o), v in sorted(self._x.items()))
        return f"{type(self).__name__}({{{body}}})"

    def validate(self, inst: Instance) -> None:
        """Raise :class:`StructuralError` unless this is a matching of ``inst``."""
        agents = inst.class_of
        items = inst.step_of
        for (a, o) in self._x:
            if a not in agents or o not in items:
                raise StructuralError(f"matching references unknown pair ({a}, {o})")
            if (a, o) not in inst.edges:
                raise StructuralError(f"x[{a}, {o}] > 0 but agent {a} does not like item {o}")
        for a, load in self._agent_load.items():
            if load > 1:
                raise StructuralError(f"agent {a} has load {load} > 1")
        for o, load in self._item_load.items():
            if load > 1:
                raise StructuralError(f"item {o} has load {load} > 1")

    def as_integral(self) -> "IntegralMatching":
        if isinstance(self, IntegralMatching):
            return self
        if not self.is_integral:
            raise DomainError("matching has properly fractional entries")
        return IntegralMatching({o: a for (a, o) in self._x})

    def to_dict(self) -> dict:
        return {"assign": [[a, o, format_fraction(v)] for (a, o), v in sorted(self._x.items())]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "FractionalMatching":
        try:
            return cls({(int(a), int(o)): as_fraction(v) for a, o, v in data["assign"]})
        except (KeyError, TypeError, ValueError) as exc:
            raise StructuralError(f"malformed matching document: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "FractionalMatching":
        return cls.from_dict(json.loads(text))


class IntegralMatching(FractionalMatching):
    """A 0/1 matching given as ``item -> agent``."""

    __slots__ = ("_assignment",)

    def __init__(self, assignment: Mapping[int, int] | None = None):
        assignment = dict(assignment or {})
        if len(set(assignment.values())) != len(assignment):
            raise StructuralError("an agent is matched to more than one item")
        super().__init__({(a, o): ONE for o, a in assignment.items()})
        self._assignment = MappingProxyType(assignment)

    @property
    def assignment(self) -> Mapping[int, int]:
        return self._assignment

    def matched_agents(self) -> frozenset:
        return frozenset(self._assignment.values())


def class_aggregate(m: FractionalMatching, inst: Instance) -> list:
    """Per-class bundles ``Y_i`` with ``Y_i[o] = sum of x[a, o] over a in class i``.

    Bundles are sparse: items with zero share are absent.
    """
    out = [dict() for _ in inst.classes]
    for (a, o), v in m:
        i = inst.class_of.get(a)
        if i is None or o not in inst.step_of:
            raise StructuralError(f"matching references unknown pair ({a}, {o})")
        out[i][o] = out[i].get(o, ZERO) + v
    return out


@dataclass(frozen=True)
class ArrivalEvent:
    item: int
    neighbors: frozenset


@dataclass(frozen=True)
class Decision:
    """Irrevocable assignment of fractions of ``item``; an empty mapping discards it."""

    item: int
    assignment: Mapping = field(default_factory=dict)

    @classmethod
    def single(cls, item: int, agent: int) -> "Decision":
        return cls(item, {agent: ONE})

    @classmethod
    def discard(cls, item: int) -> "Decision":
        return cls(item, {})

    @property
    def agents(self) -> tuple:
        return tuple(sorted(a for a, v in self.assignment.items() if v))


class OnlineAlgorithm:
    """Base class for online algorithms.

    ``start`` receives the class partition before the first arrival;
    ``decide`` sees one :class:`ArrivalEvent` at a time and returns a
    :class:`Decision`. Implementations keep whatever private state they
    like but never see future arrivals.
    """

    name = "online"
    integral = True

    def start(self, classes: tuple) -> None:
        self.classes = classes
        self.class_of = {a: i for i, c in enumerate(classes) for a in c}

    def decide(self, event: ArrivalEvent) -> Decision:
        raise NotImplementedError


class StaticArrivals:
    """Arrival source replaying a fixed :class:`Instance`."""

    def __init__(self, inst: Instance):
        self.instance = inst
        self.classes = inst.classes
        self._t = 0

    def next_arrival(self, matching: FractionalMatching):
        if self._t >= len(self.instance.items):
            return None
        event = self.instance.arrival(self.instance.items[self._t])
        self._t += 1
        return event


@dataclass(frozen=True)
class Replay:
    """Outcome of one online run: the realised instance, every decision, the final matching."""

    instance: Instance
    decisions: tuple
    matching: FractionalMatching

    def snapshot(self, t: int) -> FractionalMatching:
        """Matching after the first ``t`` decisions."""
        entries = {}
        for d in self.decisions[:t]:
            for a, v in d.assignment.items():
                if v:
                    entries[(a, d.item)] = v
        if all(v == 1 for v in entries.values()):
            return IntegralMatching({o: a for (a, o) in entries})
        return FractionalMatching(entries)

    def snapshots(self) -> Iterator:
        for t in range(len(self.decisions) + 1):
            yield t, self.snapshot(t)


def run_online(source, algorithm: OnlineAlgorithm) -> Replay:
    """Drive ``algorithm`` with arrivals from ``source`` and validate every decision.

    ``source`` is an :class:`Instance` or any object with ``classes`` and
    ``next_arrival(matching)`` (an adaptive adversary reads the current
    matching before emitting the next item).
    """
    if isinstance(source, Instance):
        source = StaticArrivals(source)
    classes = tuple(tuple(c) for c in source.classes)
    known = {a for c in classes for a in c}
    algorithm.start(classes)

    x = {}
    agent_load = {}
    item_load = {}
    items, edges, decisions = [], set(), []
    current = IntegralMatching() if algorithm.integral else FractionalMatching()
    step = 0
    while True:
        event = source.next_arrival(current)
        if event is None:
            break
        if event.item in item_load or event.item in items:
            raise ProtocolViolation(step, f"item {event.item} arrived twice")
        if not set(event.neighbors) <= known:
            raise ProtocolViolation(step, f"arrival {event.item} names undeclared agents")
        decision = algorithm.decide(event)
        _check_decision(step, event, decision, agent_load, algorithm.integral)
        items.append(event.item)
        edges.update((a, event.item) for a in event.neighbors)
        total = ZERO
        for a, v in decision.assignment.items():
            v = as_fraction(v)
            if v:
                x[(a, event.item)] = v
                agent_load[a] = agent_load.get(a, ZERO) + v
                total += v
        item_load[event.item] = total
        decisions.append(decision)
        if algorithm.integral:
            current = IntegralMatching({o: a for (a, o) in x})
        else:
            current = FractionalMatching(x)
        step += 1

    inst = Instance(classes, tuple(items), frozenset(edges))
    return Replay(inst, tuple(decisions), current)


def replay_online(inst: Instance, algorithm: OnlineAlgorithm) -> Replay:
    return run_online(inst, algorithm)


def _check_decision(step, event, decision, agent_load, integral):
    if not isinstance(decision, Decision) or decision.item != event.item:
        raise ProtocolViolation(step, f"decision does not answer item {event.item}")
    total = ZERO
    positive = 0
    for a, v in decision.assignment.items():
        try:
            v = as_fraction(v)
        except DomainError as exc:
            raise ProtocolViolation(step, str(exc)) from exc
        if v < 0:
            raise ProtocolViolation(step, f"negative fraction for agent {a}")
        if not v:
            continue
        if a not in event.neighbors:
            raise ProtocolViolation(step, f"agent {a} does not like item {event.item}")
        if agent_load.get(a, ZERO) + v > 1:
            raise ProtocolViolation(step, f"agent {a} would exceed capacity 1")
        if integral and v != 1:
            raise ProtocolViolation(step, f"integral algorithm emitted fraction {v}")
        total += v
        positive += 1
    if total > 1:
        raise ProtocolViolation(step, f"item {event.item} over-assigned ({total})")
    if integral and positive > 1:
        raise ProtocolViolation(step, "integral algorithm split an item")
