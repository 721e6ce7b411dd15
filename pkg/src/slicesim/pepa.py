"""Textual model format: parser and canonical pretty-printer.

Format, one definition per statement, ``//`` line comments, UTF-8,
LF or CRLF:

    r_v = 100;                          // rate constant
    Upf1 = (req_n4est1, r_v).Upf2;      // state definition
    Upf2 = (get_upfp1, r_p).Upf1;
    Upf1[5]                             // system equation, exactly one

A state definition is a choice of prefix chains; ``.`` binds tighter
than ``+`` and chains are right-associative.  Chained prefixes are
desugared into anonymous ``__k`` states.  The system equation is a
left-associative cooperation chain over ``InitialState[population]``
groups; ``<a,b>`` gives the synchronization set and ``<>`` is the empty
set.  Parentheses override the left association, e.g.
``A[1] <a> (B[2] <> C[3])``.  Components are recovered as the
successor-closure of each group's initial state and are named after
that state.

Unknown rate names are not parse errors; they are reported by model
validation.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .model import (
    Branch,
    Component,
    Coop,
    Group,
    Model,
    Node,
    State,
    iter_groups,
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
  | (?P<sym>[()\[\]<>,.+=;])
    """,
    re.VERBOSE,
)


class ParseError(ValueError):
    """Parse failure with position and the tokens that were expected."""

    def __init__(self, message: str, line: int, col: int, expected: tuple[str, ...] = ()):
        self.message = message
        self.line = line
        self.col = col
        self.expected = expected
        suffix = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"{line}:{col}: {message}{suffix}")


@dataclass(frozen=True)
class Token:
    kind: str  # "number" | "ident" | "sym" | "eof"
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup or ""
        value = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, value, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            col = len(value) - value.rfind("\n")
        else:
            col += len(value)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


@dataclass
class _Chain:
    prefixes: list[tuple[str, Union[float, str]]]
    target: str


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def fail(self, message: str, expected: tuple[str, ...] = ()) -> ParseError:
        tok = self.peek()
        return ParseError(message, tok.line, tok.col, expected)

    def expect(self, kind: str, text: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text if text is not None else kind
            raise self.fail(f"got {tok.text or tok.kind!r}", (want,))
        return self.next()

    # --- grammar -----------------------------------------------------

    def parse_document(self) -> Model:
        rates: dict[str, float] = {}
        # state name -> list of chains (the branches of the definition)
        defs: dict[str, list[_Chain]] = {}
        order: list[str] = []

        while True:
            tok = self.peek()
            if tok.kind == "eof":
                raise ParseError("missing system line", tok.line, tok.col,
                                 ("Group[population]",))
            if tok.kind != "ident":
                raise self.fail(f"got {tok.text or tok.kind!r}", ("identifier",))
            after = self.peek(1)
            if after.kind == "sym" and after.text == "[":
                break  # start of the system equation
            if not (after.kind == "sym" and after.text == "="):
                raise self.fail(f"got {after.text or after.kind!r}", ("=", "["))
            name = self.next().text
            self.next()  # '='
            nxt = self.peek()
            if nxt.kind == "number":
                value = float(self.next().text)
                if name in rates:
                    raise ParseError(f"rate {name!r} defined twice",
                                     tok.line, tok.col)
                rates[name] = value
            else:
                if name in defs:
                    raise ParseError(f"state {name!r} defined twice",
                                     tok.line, tok.col)
                defs[name] = self.parse_choice()
                order.append(name)
            self.expect("sym", ";")

        system = self.parse_system()
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError("definitions must precede the single system line",
                             tok.line, tok.col, ("end of input",))

        components = _assemble_components(defs, order, system)
        return Model(components=components, system=system, rates=rates)

    def parse_choice(self) -> list[_Chain]:
        chains = [self.parse_chain()]
        while self.peek().kind == "sym" and self.peek().text == "+":
            self.next()
            chains.append(self.parse_chain())
        return chains

    def parse_chain(self) -> _Chain:
        prefixes = [self.parse_prefix()]
        self.expect("sym", ".")
        while True:
            tok = self.peek()
            if tok.kind == "sym" and tok.text == "(":
                prefixes.append(self.parse_prefix())
                self.expect("sym", ".")
                continue
            if tok.kind == "ident":
                target = self.next().text
                return _Chain(prefixes, target)
            raise self.fail(f"got {tok.text or tok.kind!r}",
                            ("(action, rate)", "state name"))

    def parse_prefix(self) -> tuple[str, Union[float, str]]:
        self.expect("sym", "(")
        action = self.expect("ident").text
        self.expect("sym", ",")
        tok = self.peek()
        rate: Union[float, str]
        if tok.kind == "number":
            rate = float(self.next().text)
        elif tok.kind == "ident":
            rate = self.next().text
        else:
            raise self.fail(f"got {tok.text or tok.kind!r}", ("rate name", "number"))
        self.expect("sym", ")")
        return action, rate

    def parse_system(self) -> Node:
        node: Node = self.parse_operand()
        while self.peek().kind == "sym" and self.peek().text == "<":
            sync = self.parse_sync_set()
            right = self.parse_operand()
            node = Coop(node, right, sync)
        return node

    def parse_operand(self) -> Node:
        tok = self.peek()
        if tok.kind == "sym" and tok.text == "(":
            self.next()
            node = self.parse_system()
            self.expect("sym", ")")
            return node
        return self.parse_group()

    def parse_group(self) -> Group:
        name = self.expect("ident").text
        self.expect("sym", "[")
        tok = self.expect("number")
        if "." in tok.text or "e" in tok.text or "E" in tok.text:
            raise ParseError("population must be an integer", tok.line, tok.col)
        self.expect("sym", "]")
        return Group(component=name, initial=name, population=int(tok.text))

    def parse_sync_set(self) -> frozenset[str]:
        self.expect("sym", "<")
        actions: set[str] = set()
        if self.peek().kind == "sym" and self.peek().text == ">":
            self.next()
            return frozenset()
        actions.add(self.expect("ident").text)
        while self.peek().kind == "sym" and self.peek().text == ",":
            self.next()
            actions.add(self.expect("ident").text)
        self.expect("sym", ">")
        return frozenset(actions)


def _desugar(name: str, chains: list[_Chain]) -> list[State]:
    """Expand a definition's chains into single-prefix states."""
    branches: list[Branch] = []
    extra: list[State] = []
    anon = 0
    for ch in chains:
        current_target_chain = ch.prefixes
        # Walk the chain backwards building anonymous states.
        nxt = ch.target
        if len(current_target_chain) == 1:
            action, rate = current_target_chain[0]
            branches.append(Branch(action, rate, nxt))
            continue
        # Positions after the first become anonymous states __k.
        names = []
        for _ in current_target_chain[1:]:
            anon += 1
            names.append(f"{name}__{anon}")
        first_action, first_rate = current_target_chain[0]
        branches.append(Branch(first_action, first_rate, names[0]))
        for k, (action, rate) in enumerate(current_target_chain[1:]):
            target = names[k + 1] if k + 1 < len(names) else nxt
            extra.append(State(names[k], (Branch(action, rate, target),)))
    return [State(name, tuple(branches))] + extra


def _assemble_components(defs: dict[str, list[_Chain]], order: list[str],
                         system: Node) -> tuple[Component, ...]:
    states: dict[str, State] = {}
    succ: dict[str, list[str]] = {}
    for name in order:
        for st in _desugar(name, defs[name]):
            states[st.name] = st
            succ[st.name] = [b.target for b in st.branches]

    # Union states into components by successor closure.
    parent: dict[str, str] = {n: n for n in states}

    def find(a: str) -> str:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a: str, b: str) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    for name, targets in succ.items():
        for t in targets:
            if t in parent:
                union(name, t)
            # Orphan successors stay; validation reports them.

    clusters: dict[str, list[str]] = {}
    for name in states:  # insertion order == definition order
        clusters.setdefault(find(name), []).append(name)

    # Name each component after the group that references it, falling
    # back to the first-defined state for unreferenced clusters.
    root_to_cname: dict[str, str] = {}
    for g in iter_groups(system):
        if g.initial in parent:
            root = find(g.initial)
            root_to_cname.setdefault(root, g.initial)

    components: list[Component] = []
    done: set[str] = set()
    for root, members in clusters.items():
        cname = root_to_cname.get(root, members[0])
        if cname in done:
            continue
        done.add(cname)
        ordered = [states[m] for m in members]
        # Put the naming state first; keep definition order otherwise.
        ordered.sort(key=lambda s: (s.name != cname,))
        components.append(Component(cname, tuple(ordered)))
    return tuple(components)


def parse(text: str) -> Model:
    """Parse model text; raises ParseError with line/column on failure."""
    return _Parser(text).parse_document()


def _fmt_rate(value: Union[float, str]) -> str:
    if isinstance(value, str):
        return value
    f = float(value)
    if f == int(f) and abs(f) < 1e15:
        return str(int(f))
    return repr(f)


def render(model: Model) -> str:
    """Canonical text for a model; parse(render(m)) is structurally m.

    Rate definitions come first (sorted by name), then the states of each
    component in system-equation order, then the system line.  Chained
    prefixes are always emitted desugared, so rendering is idempotent.
    """
    lines: list[str] = []
    for name in sorted(model.rates):
        lines.append(f"{name} = {_fmt_rate(model.rates[name])};")
    if lines:
        lines.append("")

    groups = list(iter_groups(model.system))
    by_name = {c.name: c for c in model.components}
    emitted: set[str] = set()
    ordered: list[Component] = []
    for g in groups:
        if g.component in by_name and g.component not in emitted:
            ordered.append(by_name[g.component])
            emitted.add(g.component)
    for c in model.components:
        if c.name not in emitted:
            ordered.append(c)
            emitted.add(c.name)

    for comp in ordered:
        for st in comp.states:
            alts = " + ".join(
                f"({b.action}, {_fmt_rate(b.rate)}).{b.target}" for b in st.branches
            )
            lines.append(f"{st.name} = {alts};")
        lines.append("")

    lines.append(_render_system(model.system))
    return "\n".join(lines) + "\n"


def _render_system(node: Node) -> str:
    parts: list[str] = []

    def walk(n: Node) -> None:
        if isinstance(n, Group):
            parts.append(f"{n.initial}[{n.population}]")
        else:
            walk(n.left)
            parts.append("<" + ",".join(sorted(n.sync)) + ">")
            walk(n.right)

    walk(node)
    return " ".join(parts)


def load(path: str) -> Model:
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read())


def dump(model: Model, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render(model))
