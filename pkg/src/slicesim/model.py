"""Core data model for timed process-algebra performance models.

A model is a set of closed, cyclic sequential components (state machines
whose branches carry an action label and an exponential rate), composed
into a system by a binary cooperation tree over replicated population
groups, plus a table of named rate constants.

Components are immutable after construction and safe to share across
parallel evaluation runs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Union

IDENT_CHARS_OK = "identifiers match [A-Za-z][A-Za-z0-9_]*"


def is_identifier(name: str) -> bool:
    if not name or not (name[0].isascii() and name[0].isalpha()):
        return False
    return all(c.isascii() and (c.isalnum() or c == "_") for c in name)


@dataclass(frozen=True)
class Branch:
    """One timed prefix: perform `action` at `rate`, continue as `target`.

    `rate` is either a positive float literal or the name of an entry in
    the model's rate table (resolved at validation time).
    """

    action: str
    rate: Union[float, str]
    target: str


@dataclass(frozen=True)
class State:
    name: str
    branches: tuple[Branch, ...]


@dataclass(frozen=True)
class Component:
    """A named cyclic state machine; every branch target is local.

    Chained prefixes like ``(a, r1).(b, r2).S`` are desugared before a
    Component is built: each intermediate position becomes an anonymous
    state named ``<state>__k``, so every stored branch is a single prefix.
    """

    name: str
    states: tuple[State, ...]

    def state_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.states)

    def state(self, name: str) -> State:
        for s in self.states:
            if s.name == name:
                return s
        raise KeyError(name)

    def has_state(self, name: str) -> bool:
        return any(s.name == name for s in self.states)


def chain(name: str, prefixes: list[tuple[str, Union[float, str]]], target: str) -> list[State]:
    """Desugar a chained prefix ``name = (a1,r1).(a2,r2)...target``.

    Returns the named state followed by its anonymous ``__k`` states.
    """
    if not prefixes:
        raise ValueError("chain needs at least one prefix")
    states = []
    current = name
    for k, (action, rate) in enumerate(prefixes):
        is_last = k == len(prefixes) - 1
        nxt = target if is_last else f"{name}__{k + 1}"
        states.append(State(current, (Branch(action, rate, nxt),)))
        current = nxt
    return states


def alphabet(component: Component) -> frozenset[str]:
    """Exact set of action labels appearing on any branch."""
    return frozenset(b.action for s in component.states for b in s.branches)


@dataclass(frozen=True)
class Group:
    """A population of identical copies of one component, all starting
    in `initial`."""

    component: str
    initial: str
    population: int


@dataclass(frozen=True)
class Coop:
    """Cooperation node: left and right must perform every action in
    `sync` jointly; all other actions interleave."""

    left: "Node"
    right: "Node"
    sync: frozenset[str]
    label: str | None = None


Node = Union[Group, Coop]


def iter_groups(node: Node) -> Iterator[Group]:
    """Leaves of the cooperation tree, left to right."""
    if isinstance(node, Group):
        yield node
    else:
        yield from iter_groups(node.left)
        yield from iter_groups(node.right)


def iter_coops(node: Node) -> Iterator[Coop]:
    if isinstance(node, Coop):
        yield from iter_coops(node.left)
        yield node
        yield from iter_coops(node.right)


def coop_chain(groups: list[Group], syncs: list[frozenset[str] | set[str]],
               labels: list[str | None] | None = None) -> Node:
    """Left-associative cooperation chain ``g0 <s0> g1 <s1> g2 ...``."""
    if len(syncs) != len(groups) - 1:
        raise ValueError("need one sync set per adjacent group pair")
    if labels is None:
        labels = [None] * len(syncs)
    node: Node = groups[0]
    for g, s, lab in zip(groups[1:], syncs, labels):
        node = Coop(node, g, frozenset(s), lab)
    return node


RateTable = Mapping[str, float]


def resolve_rate(rate: Union[float, str], rates: RateTable) -> float | None:
    """Resolved positive rate value, or None when a named rate is absent."""
    if isinstance(rate, str):
        return rates.get(rate)
    return float(rate)


# Validation issue kinds.
UNRESOLVED_RATE = "unresolved-rate"
ORPHAN_SUCCESSOR = "orphan-successor"
NONSHARED_SYNC = "non-shared-sync-action"
NONPOSITIVE_RATE = "zero-negative-rate"
DUPLICATE_COMPONENT = "duplicate-component"
DUPLICATE_STATE = "duplicate-state"
DEADLOCKED_STATE = "deadlocked-state"
EMPTY_COMPONENT = "empty-component"
UNKNOWN_COMPONENT = "unknown-component"
UNKNOWN_STATE = "unknown-initial-state"
BAD_POPULATION = "bad-population"
BAD_IDENTIFIER = "bad-identifier"


@dataclass(frozen=True)
class Issue:
    location: str
    kind: str
    message: str

    def __str__(self) -> str:
        return f"{self.location}: {self.kind}: {self.message}"


@dataclass
class ValidationReport:
    issues: list[Issue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def add(self, location: str, kind: str, message: str) -> None:
        self.issues.append(Issue(location, kind, message))

    def __str__(self) -> str:
        if self.ok:
            return "model is valid"
        return "\n".join(str(i) for i in self.issues)


def _subtree_alphabet(node: Node, by_name: dict[str, Component]) -> frozenset[str]:
    result: set[str] = set()
    for g in iter_groups(node):
        comp = by_name.get(g.component)
        if comp is not None:
            result |= alphabet(comp)
    return frozenset(result)


def validate_model(components: list[Component] | tuple[Component, ...],
                   system: Node, rates: RateTable) -> ValidationReport:
    """Check all structural invariants; empty issue list means valid.

    Deterministic and independent of the order the components are given
    in: issues are reported in a canonical sorted order.
    """
    report = ValidationReport()
    by_name: dict[str, Component] = {}
    for comp in components:
        if comp.name in by_name:
            report.add(f"component {comp.name}", DUPLICATE_COMPONENT,
                       "component name defined more than once")
        else:
            by_name[comp.name] = comp

    for name in sorted(by_name):
        comp = by_name[name]
        loc = f"component {comp.name}"
        if not is_identifier(comp.name):
            report.add(loc, BAD_IDENTIFIER, IDENT_CHARS_OK)
        if not comp.states:
            report.add(loc, EMPTY_COMPONENT, "component has no states")
            continue
        seen: set[str] = set()
        local = {s.name for s in comp.states}
        for state in comp.states:
            sloc = f"{loc}/state {state.name}"
            if state.name in seen:
                report.add(sloc, DUPLICATE_STATE, "state defined twice")
            seen.add(state.name)
            if not is_identifier(state.name):
                report.add(sloc, BAD_IDENTIFIER, IDENT_CHARS_OK)
            if not state.branches:
                report.add(sloc, DEADLOCKED_STATE, "state has no outgoing branch")
            for br in state.branches:
                if br.target not in local:
                    report.add(sloc, ORPHAN_SUCCESSOR,
                               f"successor {br.target!r} is not a state of {comp.name}")
                if not is_identifier(br.action):
                    report.add(sloc, BAD_IDENTIFIER, f"action {br.action!r}")
                value = resolve_rate(br.rate, rates)
                if isinstance(br.rate, str) and value is None:
                    report.add(sloc, UNRESOLVED_RATE,
                               f"rate name {br.rate!r} is not defined")
                elif value is not None and (not math.isfinite(value) or value <= 0.0):
                    report.add(sloc, NONPOSITIVE_RATE,
                               f"rate of action {br.action!r} resolves to {value}")

    for rname in sorted(rates):
        value = rates[rname]
        if not math.isfinite(value) or value <= 0.0:
            report.add(f"rate {rname}", NONPOSITIVE_RATE, f"value {value}")

    seen_components: set[str] = set()
    for g in iter_groups(system):
        loc = f"group {g.component}[{g.population}]"
        comp = by_name.get(g.component)
        if comp is None:
            report.add(loc, UNKNOWN_COMPONENT, "group references undefined component")
            continue
        if g.component in seen_components:
            report.add(loc, DUPLICATE_COMPONENT,
                       "component appears in more than one population group")
        seen_components.add(g.component)
        if not comp.has_state(g.initial):
            report.add(loc, UNKNOWN_STATE, f"initial state {g.initial!r} not in component")
        if g.population < 0:
            report.add(loc, BAD_POPULATION, f"population {g.population} is negative")

    for coop in iter_coops(system):
        left_alpha = _subtree_alphabet(coop.left, by_name)
        right_alpha = _subtree_alphabet(coop.right, by_name)
        label = coop.label or ("<" + ",".join(sorted(coop.sync)) + ">")
        for action in sorted(coop.sync):
            missing = []
            if action not in left_alpha:
                missing.append("left")
            if action not in right_alpha:
                missing.append("right")
            if missing:
                report.add(f"cooperation {label}", NONSHARED_SYNC,
                           f"action {action!r} missing from {' and '.join(missing)} operand")

    report.issues.sort(key=lambda i: (i.location, i.kind, i.message))
    return report


@dataclass(frozen=True)
class Model:
    """A validated-ready bundle of components, system tree and rates."""

    components: tuple[Component, ...]
    system: Node
    rates: Mapping[str, float]

    def component(self, name: str) -> Component:
        for c in self.components:
            if c.name == name:
                return c
        raise KeyError(name)

    def groups(self) -> tuple[Group, ...]:
        return tuple(iter_groups(self.system))

    def validate(self) -> ValidationReport:
        return validate_model(self.components, self.system, self.rates)
