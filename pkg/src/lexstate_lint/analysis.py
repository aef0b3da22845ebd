"""Useless-production detection and the lexical-state analyses.

The context-insensitive analysis summarises one in-state set and one
out-state set per non-terminal. The context-sensitive analysis keeps an
out-state set per (non-terminal, entry state) pair, with :data:`ERROR`
marking scans that dead-end.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .frontend import DEFAULT_STATE
from .model import (ERROR, Alternate, CoreGrammar, Diagnostic, Epsilon, Sequence, Terminal,
                    children, nullable)

USELESS = "UselessProduction"
CI_ERROR = "CiError"
CI_WARNING = "CiWarning"
CS_REACHABLE = "CsErrorReachable"
CS_LATENT = "CsErrorLatent"
START_STATE = "StartStateError"

ERROR_KINDS = frozenset({CI_ERROR, CS_REACHABLE, CS_LATENT, START_STATE})


def find_useless_productions(g: CoreGrammar) -> frozenset:
    """Non-terminals not reachable from the start symbol."""
    visited = set()
    if g.start in g.rules:
        visited.add(g.start)
        stack = [g.start]
        while stack:
            n = stack.pop()
            for c in children(g.rules[n]):
                if c not in visited and c in g.rules:
                    visited.add(c)
                    stack.append(c)
    return frozenset(n for n in g.nonterminals if n not in visited)


def useful_nonterminals(g: CoreGrammar) -> list:
    useless = find_useless_productions(g)
    return [n for n in g.nonterminals if n not in useless]


def _worklist(g: CoreGrammar, useful: list, update: Callable[[str], bool]) -> None:
    """FIFO fixpoint loop; re-queues the users of every changed non-terminal."""
    members = set(useful)
    queue = deque(useful)
    queued = set(useful)
    while queue:
        n = queue.popleft()
        queued.discard(n)
        if update(n):
            for user in g.users.get(n, ()):
                if user in members and user not in queued:
                    queued.add(user)
                    queue.append(user)


# --------------------------------------------------------------------------
# context-insensitive analysis

@dataclass
class CiStateMaps:
    in_states: dict
    out_states: dict


def ci_build_out_states(g: CoreGrammar, nulls: Optional[frozenset] = None) -> dict:
    nulls = nullable(g) if nulls is None else nulls
    useful = useful_nonterminals(g)
    out = {n: frozenset() for n in useful}

    def update(n: str) -> bool:
        body = g.rules[n]
        if isinstance(body, Alternate):
            new = out[body.left] | out[body.right]
        elif isinstance(body, Sequence):
            new = out[body.right]
            if body.right in nulls:
                new = new | out[body.left]
        elif isinstance(body, Terminal):
            new = frozenset(g.tokens[body.token].out_states())
        else:
            new = frozenset()
        if new != out[n]:
            out[n] = new
            return True
        return False

    _worklist(g, useful, update)
    return out


def ci_build_in_states(g: CoreGrammar, nulls: Optional[frozenset] = None) -> dict:
    nulls = nullable(g) if nulls is None else nulls
    useful = useful_nonterminals(g)
    ins = {n: frozenset() for n in useful}

    def update(n: str) -> bool:
        body = g.rules[n]
        if isinstance(body, Alternate):
            new = ins[body.left] | ins[body.right]
        elif isinstance(body, Sequence):
            new = ins[body.left]
            if body.left in nulls:
                new = new | ins[body.right]
        elif isinstance(body, Terminal):
            new = frozenset(g.tokens[body.token].in_states)
        else:
            new = frozenset()
        if new != ins[n]:
            ins[n] = new
            return True
        return False

    _worklist(g, useful, update)
    return ins


def ci_state_maps(g: CoreGrammar) -> CiStateMaps:
    nulls = nullable(g)
    return CiStateMaps(ci_build_in_states(g, nulls), ci_build_out_states(g, nulls))


def ci_analyze(g: CoreGrammar, maps: Optional[CiStateMaps] = None) -> list:
    maps = ci_state_maps(g) if maps is None else maps
    ins, outs = maps.in_states, maps.out_states
    diags = []
    if g.start in ins and DEFAULT_STATE not in ins[g.start] and g.start not in nullable(g):
        diags.append(Diagnostic(START_STATE, g.start, span=g.span_of(g.start),
                                offending_states=tuple(g.sort_states(ins[g.start])),
                                message="start symbol cannot be parsed in the DEFAULT state"))
    for n in g.nonterminals:
        body = g.rules.get(n)
        if n not in outs or not isinstance(body, Sequence):
            continue
        o_s = outs[body.left]
        i_s = o_s - ins[body.right]
        if not o_s or not i_s:
            continue
        offending = tuple(g.sort_states(i_s))
        if i_s == o_s:
            diags.append(Diagnostic(
                CI_ERROR, n, offending_states=offending, span=g.span_of(n),
                message=f"{body.right} cannot start in any out-state of {body.left} "
                        f"({', '.join(offending)})"))
        else:
            diags.append(Diagnostic(
                CI_WARNING, n, offending_states=offending, span=g.span_of(n),
                message=f"{body.right} cannot start after {body.left} ends in "
                        f"{', '.join(offending)}"))
    return diags


# --------------------------------------------------------------------------
# context-sensitive analysis

@dataclass
class CsOutStates:
    """Out-states per (non-terminal, entry state); ERROR marks dead ends."""

    table: dict
    states: tuple

    def get(self, n: str, state) -> frozenset:
        if state is ERROR:
            return frozenset([ERROR])
        return self.table[n][state]

    def only_error(self, n: str, state) -> bool:
        return self.get(n, state) == {ERROR}


def _compose(row_left: dict, table: dict, right: str, state) -> frozenset:
    acc = set()
    for mid in row_left[state]:
        if mid is ERROR:
            acc.add(ERROR)
        else:
            acc |= table[right][mid]
    return frozenset(acc)


def cs_build_out_states(g: CoreGrammar, nulls: Optional[frozenset] = None,
                        token_step: Optional[Callable] = None) -> CsOutStates:
    """Least fixpoint of the per-state out-state table.

    ``token_step(token, state)`` may override the terminal rule; the default
    yields the token's out-state when active and ERROR otherwise.
    """
    nulls = nullable(g) if nulls is None else nulls
    useful = useful_nonterminals(g)
    states = tuple(g.states)
    table = {n: {s: frozenset() for s in states} for n in useful}

    def step(token: str, state) -> frozenset:
        t = g.tokens[token]
        if state in t.out_state_for:
            return frozenset([t.out_state_for[state]])
        return frozenset([ERROR])

    step = token_step or step

    def update(n: str) -> bool:
        body = g.rules[n]
        row = table[n]
        changed = False
        for s in states:
            if isinstance(body, Alternate):
                new = table[body.left][s] | table[body.right][s]
            elif isinstance(body, Sequence):
                new = _compose(table[body.left], table, body.right, s)
                if body.right in nulls:
                    new = new | table[body.left][s]
            elif isinstance(body, Terminal):
                new = step(body.token, s)
            else:
                new = frozenset([s])
            if new != row[s]:
                row[s] = new
                changed = True
        return changed

    _worklist(g, useful, update)
    return CsOutStates(table, states)


@dataclass
class OccurrenceReach:
    # (parent non-terminal, operand index) -> states; the root occurrence is (None, 0)
    reach: dict
    # non-terminal -> union over its occurrences
    nonterminals: dict = field(default_factory=dict)


def occurrence_reach(g: CoreGrammar, cs: CsOutStates) -> OccurrenceReach:
    """Lexical states in which each occurrence is reached from the start in DEFAULT."""
    useful = useful_nonterminals(g)
    at = {n: frozenset() for n in useful}
    occ: dict = {(None, 0): frozenset([DEFAULT_STATE])}
    at[g.start] = frozenset([DEFAULT_STATE])
    queue = deque([g.start])
    queued = {g.start}

    def feed(key, target, states) -> None:
        occ[key] = occ.get(key, frozenset()) | states
        new = at[target] | states
        if new != at[target]:
            at[target] = new
            if target not in queued:
                queued.add(target)
                queue.append(target)

    while queue:
        n = queue.popleft()
        queued.discard(n)
        body = g.rules[n]
        here = at[n]
        if isinstance(body, Alternate):
            feed((n, 0), body.left, here)
            feed((n, 1), body.right, here)
        elif isinstance(body, Sequence):
            feed((n, 0), body.left, here)
            after = set()
            for s in here:
                after |= cs.get(body.left, s)
            after.discard(ERROR)
            feed((n, 1), body.right, frozenset(after))
    for n in useful:
        body = g.rules[n]
        for i, _ in enumerate(children(body)):
            occ.setdefault((n, i), frozenset())
        if isinstance(body, Terminal):
            occ.setdefault((n, 0), at[n])
    return OccurrenceReach(occ, at)


def _cs_diag(g: CoreGrammar, kind: str, n: str, s: str) -> Diagnostic:
    how = "reached from the start symbol" if kind == CS_REACHABLE else "entered"
    return Diagnostic(kind, n, state=s, span=g.span_of(n),
                      message=f"{n} always dead-ends when {how} in state {s}")


def cs_reachable_errors(g: CoreGrammar, cs: CsOutStates) -> list:
    """(non-terminal, state) errors visited by the memoised top-down walk from (start, {DEFAULT})."""
    analyzed: set = set()
    found: set = set()
    # explicit stack replaces the recursion; each frame is (non-terminal, states)
    stack = [(g.start, frozenset([DEFAULT_STATE]))]
    while stack:
        n, states = stack.pop()
        fresh = [s for s in g.sort_states(states) if (n, s) not in analyzed]
        if not fresh:
            continue
        analyzed.update((n, s) for s in fresh)
        for s in fresh:
            if cs.only_error(n, s):
                found.add((n, s))
        body = g.rules[n]
        todo = frozenset(fresh)
        if isinstance(body, Alternate):
            stack.append((body.right, todo))
            stack.append((body.left, todo))
        elif isinstance(body, Sequence):
            after = set()
            for s in todo:
                after |= cs.get(body.left, s)
            after.discard(ERROR)
            stack.append((body.right, frozenset(after)))
            stack.append((body.left, todo))
    return sorted(found, key=lambda ns: (g.order[ns[0]], g.state_order[ns[1]]))


def cs_latent_errors(g: CoreGrammar, cs: CsOutStates) -> list:
    return [(n, s) for n in g.nonterminals if n in cs.table
            for s in cs.states if cs.only_error(n, s)]


def cs_analyze(g: CoreGrammar, cs: Optional[CsOutStates] = None) -> list:
    """Reachable-tier diagnostics followed by latent-tier diagnostics."""
    cs = cs_build_out_states(g) if cs is None else cs
    diags = [_cs_diag(g, CS_REACHABLE, n, s) for n, s in cs_reachable_errors(g, cs)]
    diags += [_cs_diag(g, CS_LATENT, n, s) for n, s in cs_latent_errors(g, cs)]
    return diags


def useless_diagnostics(g: CoreGrammar, useless: Optional[Iterable[str]] = None) -> list:
    useless = find_useless_productions(g) if useless is None else frozenset(useless)
    return [Diagnostic(USELESS, n, span=g.span_of(n),
                       message=f"{n} is not reachable from {g.start}")
            for n in g.nonterminals if n in useless and not g.is_fresh(n)]


@dataclass
class AnalysisResult:
    grammar: CoreGrammar
    useless: frozenset
    ci: Optional[CiStateMaps] = None
    cs: Optional[CsOutStates] = None
    reach: Optional[OccurrenceReach] = None
    diagnostics: list = field(default_factory=list)


def analyze(g: CoreGrammar, modes: Iterable[str] = ("up", "ci", "cs")) -> AnalysisResult:
    modes = set(modes)
    useless = find_useless_productions(g)
    result = AnalysisResult(g, useless)
    if "up" in modes:
        result.diagnostics += useless_diagnostics(g, useless)
    if "ci" in modes:
        result.ci = ci_state_maps(g)
        result.diagnostics += ci_analyze(g, result.ci)
    if "cs" in modes:
        result.cs = cs_build_out_states(g)
        result.reach = occurrence_reach(g, result.cs)
        result.diagnostics += cs_analyze(g, result.cs)
    return result


def is_error(d: Diagnostic) -> bool:
    return d.kind in ERROR_KINDS
