"""Brute-force reference implementations and a seeded random grammar generator.

Everything here works by explicit enumeration within caller-supplied bounds,
so it shares no code paths with the fixpoint analyses it is used to check.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Optional

from . import frontend as fe
from .frontend import DEFAULT_STATE
from .model import (ERROR, Alternate, CoreGrammar, Epsilon, Sequence, Terminal, children,
                    core_grammar, make_token, nullable)


@dataclass(frozen=True)
class DerivationBound:
    max_depth: int
    max_length: int = 64

    def __post_init__(self):
        if self.max_depth < 1 or self.max_length < 0:
            raise ValueError("bounds must be positive")


def enumerate_sentences(g: CoreGrammar, n: str, b: DerivationBound) -> frozenset:
    """Token sequences derivable from ``n`` with derivation height <= max_depth."""
    memo: dict = {}

    def sent(x: str, d: int) -> frozenset:
        if d < 1:
            return frozenset()
        key = (x, d)
        if key in memo:
            return memo[key]
        body = g.rules[x]
        if isinstance(body, Terminal):
            out = frozenset([(body.token,)]) if b.max_length >= 1 else frozenset()
        elif isinstance(body, Epsilon):
            out = frozenset([()])
        elif isinstance(body, Alternate):
            out = sent(body.left, d - 1) | sent(body.right, d - 1)
        else:
            left = sent(body.left, d - 1)
            right = sent(body.right, d - 1) if left else frozenset()
            out = frozenset(u + v for u in left for v in right
                            if len(u) + len(v) <= b.max_length)
        memo[key] = out
        return out

    return sent(n, b.max_depth)


def sorted_sentences(sentences: Iterable[tuple]) -> list:
    return sorted(sentences, key=lambda s: (len(s), s))


def simulate(g: CoreGrammar, tokens: Iterable[str], state):
    """Scanner state after reading ``tokens`` from ``state``; ERROR on a dead end."""
    for t in tokens:
        decl = g.tokens[t]
        if state not in decl.out_state_for:
            return ERROR
        state = decl.out_state_for[state]
    return state


def oracle_out_states(g: CoreGrammar, n: str, state: str, b: DerivationBound) -> frozenset:
    return frozenset(simulate(g, s, state) for s in enumerate_sentences(g, n, b))


def oracle_in_states(g: CoreGrammar, n: str, b: DerivationBound) -> frozenset:
    """In-states of the first tokens of enumerated sentences."""
    out = set()
    for s in enumerate_sentences(g, n, b):
        if s:
            out.update(g.tokens[s[0]].in_states)
    return frozenset(out)


def oracle_last_out_states(g: CoreGrammar, n: str, b: DerivationBound) -> frozenset:
    """Out-states of the last tokens of enumerated sentences, over all their in-states."""
    out = set()
    for s in enumerate_sentences(g, n, b):
        if s:
            out.update(g.tokens[s[-1]].out_states())
    return frozenset(out)


def derives_empty_within(g: CoreGrammar, n: str, depth: int) -> bool:
    return () in enumerate_sentences(g, n, DerivationBound(depth, 0))


def language_upto(g: CoreGrammar, k: int) -> dict:
    """Every non-terminal's sentences of length <= k (least fixpoint, no depth bound)."""
    lang = {n: set() for n in g.rules}
    changed = True
    while changed:
        changed = False
        for n, body in g.rules.items():
            if isinstance(body, Terminal):
                new = {(body.token,)} if k >= 1 else set()
            elif isinstance(body, Epsilon):
                new = {()}
            elif isinstance(body, Alternate):
                new = lang[body.left] | lang[body.right]
            else:
                new = {u + v for u in lang[body.left] for v in lang[body.right] if len(u) + len(v) <= k}
            if not new <= lang[n]:
                lang[n] |= new
                changed = True
    return {n: frozenset(v) for n, v in lang.items()}


def surface_language_upto(sg: fe.SurfaceGrammar, k: int) -> dict:
    """Same as :func:`language_upto`, evaluated directly on the surface AST."""
    literal_names = {}
    for sec in sg.token_sections:
        for e in sec.entries:
            if isinstance(e.regex, fe.Literal):
                literal_names.setdefault(e.regex.text, e.name)
    lang = {p.name: set() for p in sg.productions}

    def cat(a: set, b: set) -> set:
        return {u + v for u in a for v in b if len(u) + len(v) <= k}

    def ev(e) -> set:
        if isinstance(e, fe.TermRef):
            name = e.name if e.name is not None else literal_names[e.literal]
            return {(name,)} if k >= 1 else set()
        if isinstance(e, fe.Call):
            return set(lang[e.name])
        if isinstance(e, fe.Seq):
            acc = {()}
            for item in e.items:
                acc = cat(acc, ev(item))
            return acc
        if isinstance(e, fe.Choice):
            return set().union(*(ev(x) for x in e.items))
        if isinstance(e, fe.Repeat):
            inner = ev(e.node)
            if e.op in ("?", "[]"):
                return inner | {()}
            closure = {()}
            frontier = {()}
            while frontier:
                frontier = cat(frontier, inner) - closure
                closure |= frontier
            return closure if e.op == "*" else cat(inner, closure)
        raise TypeError(e)

    changed = True
    while changed:
        changed = False
        for p in sg.productions:
            new = ev(p.body)
            if not new <= lang[p.name]:
                lang[p.name] |= new
                changed = True
    return {n: frozenset(v) for n, v in lang.items()}


# --------------------------------------------------------------------------
# derivation trees and occurrence reach by trace simulation

def enumerate_trees(g: CoreGrammar, n: str, depth: int, limit: int = 200_000) -> list:
    """Derivation trees ``(nonterminal, children)`` of height <= depth; leaves are token names."""
    memo: dict = {}

    def trees(x: str, d: int) -> list:
        if d < 1:
            return []
        key = (x, d)
        if key in memo:
            return memo[key]
        body = g.rules[x]
        if isinstance(body, Terminal):
            out = [(x, (body.token,))]
        elif isinstance(body, Epsilon):
            out = [(x, ())]
        elif isinstance(body, Alternate):
            out = [(x, (t,)) for t in trees(body.left, d - 1)]
            out += [(x, (t,)) for t in trees(body.right, d - 1)]
        else:
            out = [(x, (u, v)) for u, v in product(trees(body.left, d - 1), trees(body.right, d - 1))]
        if len(out) > limit:
            raise OverflowError(f"more than {limit} derivation trees for {x} at depth {d}")
        memo[key] = out
        return out

    return trees(n, depth)


def oracle_occurrence_reach(g: CoreGrammar, depth: int) -> dict:
    """States in which each occurrence ``(parent, operand index)`` is entered by some trace."""
    reach: dict = {}

    def walk(tree, state, key):
        if state is not ERROR:
            reach.setdefault(key, set()).add(state)
        x, kids = tree
        body = g.rules[x]
        if isinstance(body, Terminal):
            if state is ERROR:
                return ERROR
            reach.setdefault((x, 0), set()).add(state)
            return simulate(g, kids, state)
        if isinstance(body, Epsilon):
            return state
        if isinstance(body, Alternate):
            sub = kids[0]
            idx = 0 if sub[0] == body.left else 1
            if body.left == body.right:
                idx = 0
            return walk(sub, state, (x, idx))
        mid = walk(kids[0], state, (x, 0))
        return walk(kids[1], mid, (x, 1))

    for t in enumerate_trees(g, g.start, depth):
        walk(t, DEFAULT_STATE, (None, 0))
    return {k: frozenset(v) for k, v in reach.items()}


# --------------------------------------------------------------------------
# bounded parser (Earley recognizer over the stateless core grammar)

def earley_parse(g: CoreGrammar, tokens: list, start: Optional[str] = None,
                 nulls: Optional[frozenset] = None) -> tuple:
    """Return (accepted, viable) where ``tokens[:viable]`` is a prefix of some sentence."""
    start = g.start if start is None else start
    alts = {}
    for n, body in g.rules.items():
        if isinstance(body, Alternate):
            alts[n] = [(body.left,), (body.right,)]
        elif isinstance(body, Sequence):
            alts[n] = [(body.left, body.right)]
        elif isinstance(body, Terminal):
            alts[n] = [(("tok", body.token),)]
        else:
            alts[n] = [()]
    nulls = nullable(g) if nulls is None else nulls

    def closure(items: set, chart: list, i: int) -> set:
        todo = list(items)
        while todo:
            lhs, ri, dot, origin = todo.pop()
            rhs = alts[lhs][ri]
            if dot == len(rhs):
                for (l2, r2, d2, o2) in list(chart[origin] if origin < i else items):
                    rr = alts[l2][r2]
                    if d2 < len(rr) and rr[d2] == lhs:
                        it = (l2, r2, d2 + 1, o2)
                        if it not in items:
                            items.add(it)
                            todo.append(it)
                continue
            sym = rhs[dot]
            if isinstance(sym, tuple):
                continue
            for r in range(len(alts[sym])):
                it = (sym, r, 0, i)
                if it not in items:
                    items.add(it)
                    todo.append(it)
            if sym in nulls:
                it = (lhs, ri, dot + 1, origin)
                if it not in items:
                    items.add(it)
                    todo.append(it)
        return items

    chart: list = []
    first = {(start, r, 0, 0) for r in range(len(alts[start]))}
    chart.append(closure(first, chart, 0))
    viable = 0
    for i, tok in enumerate(tokens):
        nxt = set()
        for lhs, ri, dot, origin in chart[i]:
            rhs = alts[lhs][ri]
            if dot < len(rhs) and rhs[dot] == ("tok", tok):
                nxt.add((lhs, ri, dot + 1, origin))
        if not nxt:
            return False, viable
        chart.append(closure(nxt, chart, i + 1))
        viable = i + 1
    accepted = any(lhs == start and dot == len(alts[lhs][ri]) and origin == 0
                   for lhs, ri, dot, origin in chart[-1])
    return accepted, viable


# --------------------------------------------------------------------------
# random grammars

def _letters(k: int) -> str:
    return "abcdefghijklmnopqrstuvwxyz"[k % 26] * (1 + k // 26)


def random_grammar(seed: int, max_nonterminals: int = 6, max_tokens: int = 4, max_states: int = 3,
                   allow_epsilon: bool = False, recursion: float = 0.3) -> CoreGrammar:
    """Deterministic random grammar in which every non-terminal is reachable and productive.

    Non-terminal ``Ni`` only references ``Nj`` with ``j > i``, except for the
    right operand of an alternation, which may point anywhere. The left operand
    keeps every alternation productive and a spanning tree keeps everything
    reachable.
    """
    if not (1 <= max_nonterminals <= 10 and 1 <= max_tokens <= 6 and 1 <= max_states <= 4):
        raise ValueError("size bounds outside the supported caps")
    rng = random.Random(seed)
    n_nt = rng.randint(1, max_nonterminals)
    n_tok = rng.randint(1, max_tokens)
    n_st = rng.randint(1, max_states)
    states = [DEFAULT_STATE] + [f"S{i}" for i in range(1, n_st)]
    tokens = []
    for i in range(n_tok):
        ins = [s for s in states if rng.random() < 0.5] or [rng.choice(states)]
        out = rng.choice(states) if rng.random() < 0.5 else None
        tokens.append(make_token(f"T{i}", ins, out, fe.Literal(_letters(i))))
    names = [f"N{i}" for i in range(n_nt)]
    kids: dict = {i: [] for i in range(n_nt)}
    for i in range(1, n_nt):
        # spanning tree: every non-terminal gets an earlier parent
        kids[rng.choice([j for j in range(i) if len(kids[j]) < 2])].append(i)
    rules = {}
    for i in range(n_nt):
        forward = list(range(i + 1, n_nt))
        slots = list(kids[i])
        if not slots and not (forward and rng.random() < 0.3):
            if allow_epsilon and rng.random() < 0.15:
                rules[names[i]] = Epsilon()
            else:
                rules[names[i]] = Terminal(rng.choice(tokens).name)
            continue
        while len(slots) < 2:
            slots.append(rng.choice(forward))
        rng.shuffle(slots)
        if rng.random() < 0.5:
            rules[names[i]] = Sequence(names[slots[0]], names[slots[1]])
        else:
            right = slots[1]
            if right not in kids[i] and rng.random() < recursion:
                right = rng.randrange(n_nt)
            rules[names[i]] = Alternate(names[slots[0]], names[right])
    return core_grammar(rules, tokens, names[0], states)


def is_recursive(g: CoreGrammar) -> bool:
    color: dict = {}

    def visit(n: str) -> bool:
        color[n] = 1
        for c in children(g.rules[n]):
            if color.get(c) == 1 or (c not in color and visit(c)):
                return True
        color[n] = 2
        return False

    return any(n not in color and visit(n) for n in g.rules)
