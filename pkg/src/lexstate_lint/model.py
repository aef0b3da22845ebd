"""Core grammar representation in binary normal form.

Every non-terminal has exactly one production whose body is one of
``Alternate(a, b)``, ``Sequence(a, b)``, ``Terminal(t)`` or ``Epsilon()``.
Surface operators are desugared by :func:`normalize` into fresh
non-terminals named ``<parent>#<k>``.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Optional, Union

from . import frontend as fe
from .frontend import DEFAULT_STATE, EOF_TOKEN, Span


class _ErrorState:
    """The distinguished dead-end state; never a declared lexical state."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "ERROR"

    def __reduce__(self):
        return (_ErrorState, ())


ERROR = _ErrorState()


class GrammarStructureError(Exception):
    def __init__(self, message: str, span: Optional[Span] = None):
        super().__init__(f"{span}: {message}" if span else message)
        self.message = message
        self.span = span


@dataclass(frozen=True)
class Alternate:
    left: str
    right: str


@dataclass(frozen=True)
class Sequence:
    left: str
    right: str


@dataclass(frozen=True)
class Terminal:
    token: str


@dataclass(frozen=True)
class Epsilon:
    pass


Body = Union[Alternate, Sequence, Terminal, Epsilon]


def children(body: Body) -> tuple:
    if isinstance(body, (Alternate, Sequence)):
        return (body.left, body.right)
    return ()


@dataclass(frozen=True)
class TokenDecl:
    name: str
    in_states: tuple
    out_state_for: Mapping[str, str]
    regex: Optional[fe.RegexNode] = None
    explicit_out: Optional[str] = None
    span: Optional[Span] = None

    def out_states(self) -> set:
        return {self.out_state_for[s] for s in self.in_states}

    def forced_out(self, state) -> str:
        """Next state when the token is taken regardless of activation."""
        if state in self.out_state_for:
            return self.out_state_for[state]
        return self.explicit_out if self.explicit_out is not None else state


def make_token(name: str, in_states: Iterable[str], out: Optional[str] = None,
               regex: Optional[fe.RegexNode] = None, span: Optional[Span] = None) -> TokenDecl:
    ins = tuple(in_states)
    return TokenDecl(name, ins, {s: (out if out is not None else s) for s in ins},
                     regex, out, span)


@dataclass(frozen=True)
class CoreProduction:
    lhs: str
    body: Body
    span: Optional[Span] = None


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    nonterminal: Optional[str]
    state: Optional[str] = None
    offending_states: tuple = ()
    span: Optional[Span] = None
    message: str = ""
    related: tuple = ()


@dataclass(frozen=True)
class CoreGrammar:
    """The tuple (N, T, P, S) plus token state maps and provenance."""

    productions: tuple
    tokens: Mapping[str, TokenDecl]
    start: str
    states: tuple
    provenance: Mapping[str, Span] = field(default_factory=dict)
    # core non-terminal -> surface production it was desugared from
    owner: Mapping[str, str] = field(default_factory=dict)
    # core non-terminal -> desugaring origin ("production", "seq", "alt", "star", ...)
    origin: Mapping[str, str] = field(default_factory=dict)
    # regexes of private (#) tokens, for Ref resolution
    private_defs: Mapping[str, fe.RegexNode] = field(default_factory=dict)

    @cached_property
    def rules(self) -> dict:
        out = {}
        for p in self.productions:
            out.setdefault(p.lhs, p.body)
        return out

    @cached_property
    def nonterminals(self) -> tuple:
        seen = {}
        for p in self.productions:
            seen.setdefault(p.lhs, None)
        return tuple(seen)

    @cached_property
    def order(self) -> dict:
        return {n: i for i, n in enumerate(self.nonterminals)}

    @cached_property
    def state_order(self) -> dict:
        return {s: i for i, s in enumerate(self.states)}

    @cached_property
    def users(self) -> dict:
        """Non-terminal -> non-terminals whose production mentions it."""
        out = defaultdict(list)
        for n, body in self.rules.items():
            for c in dict.fromkeys(children(body)):
                out[c].append(n)
        return dict(out)

    @cached_property
    def regex_defs(self) -> dict:
        defs = {name: t.regex for name, t in self.tokens.items() if t.regex is not None}
        defs.update(self.private_defs)
        return defs

    def body(self, n: str) -> Body:
        return self.rules[n]

    def sort_states(self, states: Iterable) -> list:
        order = self.state_order
        return sorted(states, key=lambda s: (s is ERROR, order.get(s, len(order)), str(s)))

    def span_of(self, n: str) -> Optional[Span]:
        return self.provenance.get(n)

    def is_fresh(self, n: str) -> bool:
        return self.origin.get(n, "production") != "production"

    def owner_of(self, n: str) -> str:
        return self.owner.get(n, n)


def core_grammar(rules: Mapping[str, Body], tokens: Iterable[TokenDecl], start: str,
                 states: Optional[Iterable[str]] = None) -> CoreGrammar:
    """Convenience constructor used by tests and the random generator."""
    toks = {t.name: t for t in tokens}
    if states is None:
        seen = [DEFAULT_STATE]
        for t in toks.values():
            for s in list(t.in_states) + list(t.out_state_for.values()):
                if s not in seen:
                    seen.append(s)
        states = seen
    prods = tuple(CoreProduction(n, b) for n, b in rules.items())
    return CoreGrammar(prods, toks, start, tuple(states))


# --------------------------------------------------------------------------
# normalization

class _Lowering:
    def __init__(self, tokens: Mapping[str, TokenDecl], literal_tokens: Mapping[str, str],
                 known_nts: set, private: set):
        self.tokens = tokens
        self.literal_tokens = literal_tokens
        self.known_nts = known_nts
        self.private = private
        self.productions: list[CoreProduction] = []
        self.provenance: dict[str, Span] = {}
        self.owner: dict[str, str] = {}
        self.origin: dict[str, str] = {}
        self.counters: dict[str, int] = defaultdict(int)
        self.parent = ""

    def fresh(self, node, kind: str) -> str:
        self.counters[self.parent] += 1
        name = f"{self.parent}#{self.counters[self.parent]}"
        self.origin[name] = kind
        self.owner[name] = self.parent
        if node is not None and node.span is not None:
            self.provenance[name] = node.span
        return name

    def emit(self, name: str, body: Body) -> None:
        self.productions.append(CoreProduction(name, body, self.provenance.get(name)))

    def token_name(self, t: fe.TermRef) -> str:
        if t.name is None:
            if t.literal not in self.literal_tokens:
                raise GrammarStructureError(
                    f"inline literal {t.literal!r} does not match any declared token", t.span)
            return self.literal_tokens[t.literal]
        if t.name in self.private:
            raise GrammarStructureError(f"private token <{t.name}> used in a production", t.span)
        if t.name not in self.tokens:
            raise GrammarStructureError(f"undeclared token <{t.name}>", t.span)
        return t.name

    def sym(self, node) -> str:
        """A core non-terminal deriving exactly ``node``'s language."""
        if isinstance(node, fe.Call):
            if node.name not in self.known_nts:
                raise GrammarStructureError(f"undeclared non-terminal {node.name}()", node.span)
            return node.name
        if isinstance(node, (fe.Seq, fe.Choice)) and len(node.items) == 1:
            return self.sym(node.items[0])
        kind = {fe.TermRef: "term", fe.Seq: "seq", fe.Choice: "alt"}.get(type(node))
        if isinstance(node, fe.Seq) and not node.items:
            kind = "eps"
        if isinstance(node, fe.Repeat):
            kind = {"*": "star", "+": "plus", "?": "opt", "[]": "opt"}[node.op]
        name = self.fresh(node, kind)
        self.define(name, node)
        return name

    def define(self, name: str, node) -> None:
        if isinstance(node, fe.TermRef):
            self.emit(name, Terminal(self.token_name(node)))
        elif isinstance(node, fe.Call):
            target = self.sym(node)
            self.emit(name, Alternate(target, target))
        elif isinstance(node, (fe.Seq, fe.Choice)):
            items = node.items
            if not items:
                self.emit(name, Epsilon())
            elif len(items) == 1:
                self.define(name, items[0])
            else:
                cls = fe.Seq if isinstance(node, fe.Seq) else fe.Choice
                left = self.sym(items[0])
                rest = items[1] if len(items) == 2 else cls(items[1:], items[1].span)
                right = self.sym(rest)
                self.emit(name, (Sequence if cls is fe.Seq else Alternate)(left, right))
        elif isinstance(node, fe.Repeat):
            if node.op == "*":
                self._star(name, self.sym(node.node), node)
            elif node.op == "+":
                item = self.sym(node.node)
                loop = self.fresh(node, "star")
                self._star(loop, item, node)
                self.emit(name, Sequence(item, loop))
            else:
                eps = self.fresh(node, "eps")
                self.emit(eps, Epsilon())
                self.emit(name, Alternate(self.sym(node.node), eps))
        else:
            raise TypeError(node)

    def _star(self, name: str, item: str, node) -> None:
        step = self.fresh(node, "seq")
        eps = self.fresh(node, "eps")
        self.emit(name, Alternate(step, eps))
        self.emit(step, Sequence(item, name))
        self.emit(eps, Epsilon())


def _uses_eof(node) -> bool:
    if isinstance(node, fe.TermRef):
        return node.name == EOF_TOKEN
    if isinstance(node, (fe.Seq, fe.Choice)):
        return any(_uses_eof(x) for x in node.items)
    if isinstance(node, fe.Repeat):
        return _uses_eof(node.node)
    return False


def normalize(surface: fe.SurfaceGrammar) -> CoreGrammar:
    """Desugar a surface grammar into binary normal form."""
    states = tuple(surface.states())
    tokens: dict[str, TokenDecl] = {}
    private: dict[str, fe.RegexNode] = {}
    literal_tokens: dict[str, str] = {}
    for sec in surface.token_sections:
        ins = states if sec.in_states == ("*",) else sec.in_states
        for e in sec.entries:
            if e.private:
                private[e.name] = e.regex
                continue
            tokens[e.name] = make_token(e.name, ins, e.out_state, e.regex, e.span)
            if isinstance(e.regex, fe.Literal):
                literal_tokens.setdefault(e.regex.text, e.name)
    if EOF_TOKEN not in tokens and any(_uses_eof(p.body) for p in surface.productions):
        tokens[EOF_TOKEN] = make_token(EOF_TOKEN, states)

    defs = {name: t.regex for name, t in tokens.items() if t.regex is not None}
    defs.update(private)
    for name, r in defs.items():
        for sub in fe.iter_regex(r):
            if isinstance(sub, fe.Ref) and sub.name not in defs:
                raise GrammarStructureError(f"undeclared token <{sub.name}> referenced in <{name}>",
                                            sub.span)

    low = _Lowering(tokens, literal_tokens, {p.name for p in surface.productions}, set(private))
    for p in surface.productions:
        low.parent = p.name
        low.owner[p.name] = p.name
        low.origin[p.name] = "production"
        if p.span is not None:
            low.provenance[p.name] = p.span
        low.define(p.name, p.body)

    # declaration order: each surface production followed by its fresh helpers
    rank = {p.name: i for i, p in enumerate(surface.productions)}
    ordered = sorted(enumerate(low.productions),
                     key=lambda ip: (rank[low.owner[ip[1].lhs]], ip[1].lhs != low.owner[ip[1].lhs],
                                     _fresh_index(ip[1].lhs), ip[0]))
    return CoreGrammar(
        productions=tuple(p for _, p in ordered),
        tokens=tokens,
        start=surface.productions[0].name,
        states=states,
        provenance=low.provenance,
        owner=low.owner,
        origin=low.origin,
        private_defs=private,
    )


def _fresh_index(name: str) -> int:
    _, _, k = name.rpartition("#")
    return int(k) if k.isdigit() else 0


def load_grammar(text: str) -> CoreGrammar:
    return normalize(fe.parse_grammar(text))


# --------------------------------------------------------------------------
# nullability and validation

def nullable(g: CoreGrammar) -> frozenset:
    """Non-terminals deriving the empty string (least fixpoint)."""
    result: set = set()
    changed = True
    while changed:
        changed = False
        for n, body in g.rules.items():
            if n in result:
                continue
            if (isinstance(body, Epsilon)
                    or (isinstance(body, Alternate) and (body.left in result or body.right in result))
                    or (isinstance(body, Sequence) and body.left in result and body.right in result)):
                result.add(n)
                changed = True
    return frozenset(result)


def productive(g: CoreGrammar) -> frozenset:
    """Non-terminals deriving at least one terminal string."""
    result: set = set()
    changed = True
    while changed:
        changed = False
        for n, body in g.rules.items():
            if n in result:
                continue
            ok = False
            if isinstance(body, (Epsilon, Terminal)):
                ok = isinstance(body, Epsilon) or body.token in g.tokens
            elif isinstance(body, Alternate):
                ok = body.left in result or body.right in result
            elif isinstance(body, Sequence):
                ok = body.left in result and body.right in result
            if ok:
                result.add(n)
                changed = True
    return frozenset(result)


def validate(g: CoreGrammar) -> list:
    """Structural diagnostics; an empty list means every invariant holds."""
    diags = []
    by_lhs = defaultdict(list)
    for p in g.productions:
        by_lhs[p.lhs].append(p)
    for n, ps in by_lhs.items():
        if len(ps) > 1:
            spans = tuple(p.span for p in ps)
            diags.append(Diagnostic("DuplicateProduction", n, span=spans[0],
                                    message=f"{n} has {len(ps)} productions", related=spans))
    if g.start not in g.rules:
        diags.append(Diagnostic("MissingStart", g.start,
                                message=f"start symbol {g.start} has no production"))
    declared = set(g.states)
    if DEFAULT_STATE not in declared:
        diags.append(Diagnostic("MissingDefaultState", None, message="DEFAULT state not declared"))
    reported = set()
    for p in g.productions:
        body = p.body
        for c in children(body):
            if c not in g.rules and c not in reported:
                reported.add(c)
                diags.append(Diagnostic("MissingProduction", c, span=p.span,
                                        message=f"{c} is used by {p.lhs} but has no production"))
        if isinstance(body, Terminal) and body.token not in g.tokens and body.token not in reported:
            reported.add(body.token)
            diags.append(Diagnostic("UndeclaredToken", p.lhs, span=p.span,
                                    message=f"token <{body.token}> is not declared"))
    for t in g.tokens.values():
        if not t.in_states:
            diags.append(Diagnostic("EmptyInStates", None, span=t.span,
                                    message=f"token <{t.name}> has no in-states"))
            continue
        bad = [s for s in t.in_states if s not in declared or t.out_state_for.get(s) not in declared]
        if bad:
            diags.append(Diagnostic("InvalidTokenState", None, span=t.span,
                                    message=f"token <{t.name}> uses undeclared states {bad}"))
    return diags
