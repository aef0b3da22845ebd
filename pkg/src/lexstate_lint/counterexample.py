"""Counter-example paths and witness strings for context-sensitive errors.

A witness is a sentence of the grammar with lexical states ignored that the
state-aware scanner cannot get through. Witnesses are built by expanding a
derivation along a path from the start symbol to the erroneous
(non-terminal, state) pair and are checked by an independent simulator.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from . import frontend as fe
from .analysis import CsOutStates, _worklist, cs_build_out_states, useful_nonterminals
from .frontend import DEFAULT_STATE, EOF_TOKEN
from .model import Alternate, CoreGrammar, Epsilon, Sequence, Terminal, nullable
from .oracle import earley_parse


class NonTerminatingExpansion(ValueError):
    pass


class VerificationFailed(AssertionError):
    pass


@dataclass(frozen=True)
class PathStep:
    nonterminal: str
    state: str
    index: Optional[int] = None  # operand position inside the previous step


@dataclass(frozen=True)
class ErrPath:
    target: str
    state: str
    steps: tuple
    relaxed: bool = False

    def names(self) -> list:
        return [s.nonterminal for s in self.steps]


@dataclass(frozen=True)
class Failure:
    position: int
    state: str
    reason: str


@dataclass
class Witness:
    target: str
    state: str
    text: str
    tokens: tuple
    path: ErrPath
    failure: Optional[Failure] = None
    verified: bool = False


def relaxed_out_states(g: CoreGrammar) -> CsOutStates:
    """Out-state table in which every token is taken, active or not."""
    return cs_build_out_states(g, token_step=lambda tok, s: frozenset([g.tokens[tok].forced_out(s)]))


def _relaxed_table(tg) -> CsOutStates:
    if tg.relaxed is None:
        tg.relaxed = relaxed_out_states(tg.grammar)
    return tg.relaxed


def gen_err_path(tg, target: str, state: str, relaxed: bool = False) -> Optional[ErrPath]:
    """Shortest path of (non-terminal, state) pairs from (start, DEFAULT) to (target, state).

    Works backwards breadth-first; a right operand of a sequence is entered in
    ``state`` only if the left operand can leave the scanner there.
    """
    g: CoreGrammar = tg.grammar
    table = _relaxed_table(tg) if relaxed else tg.cs
    useful = tg.useful
    if target not in useful or state not in g.state_order:
        return None
    goal = (g.start, DEFAULT_STATE)
    nxt: dict = {(target, state): None}
    queue = deque([(target, state)])
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        c, s = node
        for p in g.users.get(c, ()):
            if p not in useful:
                continue
            body = g.rules[p]
            preds = []
            if isinstance(body, Alternate):
                for idx, ch in enumerate((body.left, body.right)):
                    if ch == c:
                        preds.append(((p, s), idx))
                        break
            elif isinstance(body, Sequence):
                if body.left == c:
                    preds.append(((p, s), 0))
                if body.right == c:
                    for l1 in g.states:
                        if s in table.get(body.left, l1):
                            preds.append(((p, l1), 1))
            for pred, idx in preds:
                if pred not in nxt:
                    nxt[pred] = (node, idx)
                    queue.append(pred)
    if goal not in nxt:
        return None
    steps = [PathStep(g.start, DEFAULT_STATE, None)]
    cur = goal
    while nxt[cur] is not None:
        cur, idx = nxt[cur]
        steps.append(PathStep(cur[0], cur[1], idx))
    return ErrPath(target, state, tuple(steps), relaxed)


# --------------------------------------------------------------------------
# expansion tables

@dataclass
class _Tables:
    free: dict = field(default_factory=dict)  # n -> (len, depth, tokens)
    succ: dict = field(default_factory=dict)  # n -> {(l, l'): (len, depth, tokens)}
    fail: dict = field(default_factory=dict)  # n -> {l: (len, fail_pos, depth, tokens)}


def _better(new, old) -> bool:
    return old is None or new[:-1] < old[:-1]


def expansion_tables(g: CoreGrammar) -> _Tables:
    """Shortest derivations: stateless, state-to-state, and dead-ending from a state."""
    useful = useful_nonterminals(g)
    states = list(g.states)
    t = _Tables({n: None for n in useful}, {n: {} for n in useful}, {n: {} for n in useful})

    def update(n: str) -> bool:
        body = g.rules[n]
        changed = False
        cand_free = []
        cand_succ: dict = {}
        cand_fail: dict = {}

        def offer(d: dict, key, val) -> None:
            if _better(val, d.get(key)):
                d[key] = val

        if isinstance(body, Terminal):
            tok = g.tokens[body.token]
            cand_free.append((1, 1, (body.token,)))
            for s in states:
                if s in tok.out_state_for:
                    offer(cand_succ, (s, tok.out_state_for[s]), (1, 1, (body.token,)))
                else:
                    offer(cand_fail, s, (1, 0, 1, (body.token,)))
        elif isinstance(body, Epsilon):
            cand_free.append((0, 1, ()))
            for s in states:
                offer(cand_succ, (s, s), (0, 1, ()))
        elif isinstance(body, Alternate):
            for c in (body.left, body.right):
                if t.free[c] is not None:
                    f = t.free[c]
                    cand_free.append((f[0], f[1] + 1, f[2]))
                for k, v in t.succ[c].items():
                    offer(cand_succ, k, (v[0], v[1] + 1, v[2]))
                for k, v in t.fail[c].items():
                    offer(cand_fail, k, (v[0], v[1], v[2] + 1, v[3]))
        else:
            a, b = body.left, body.right
            fa, fb = t.free[a], t.free[b]
            if fa is not None and fb is not None:
                cand_free.append((fa[0] + fb[0], max(fa[1], fb[1]) + 1, fa[2] + fb[2]))
            for (l1, mid), va in sorted(t.succ[a].items(), key=lambda kv: (g.state_order[kv[0][0]],
                                                                             g.state_order[kv[0][1]])):
                for (m2, l2), vb in t.succ[b].items():
                    if m2 == mid:
                        offer(cand_succ, (l1, l2), (va[0] + vb[0], max(va[1], vb[1]) + 1, va[2] + vb[2]))
                vb = t.fail[b].get(mid)
                if vb is not None:
                    offer(cand_fail, l1, (va[0] + vb[0], va[0] + vb[1], max(va[1], vb[2]) + 1, va[2] + vb[3]))
            if fb is not None:
                for l1, va in t.fail[a].items():
                    offer(cand_fail, l1, (va[0] + fb[0], va[1], max(va[2], fb[1]) + 1, va[3] + fb[2]))
        for c in cand_free:
            if _better(c, t.free[n]):
                t.free[n] = c
                changed = True
        for k, v in cand_succ.items():
            if _better(v, t.succ[n].get(k)):
                t.succ[n][k] = v
                changed = True
        for k, v in cand_fail.items():
            if _better(v, t.fail[n].get(k)):
                t.fail[n][k] = v
                changed = True
        return changed

    _worklist(g, useful, update)
    return t


# --------------------------------------------------------------------------
# witness strings

def _token_text(g: CoreGrammar, token: str, cache: dict) -> str:
    if token not in cache:
        decl = g.tokens[token]
        cache[token] = fe.sample_string(decl.regex, defs=g.regex_defs)
    return cache[token]


def gen_err_string(g: CoreGrammar, path: ErrPath, tables: Optional[_Tables] = None,
                   nulls: Optional[frozenset] = None) -> Witness:
    """Expand a derivation along ``path`` and render it as text.

    Left operands are expanded to leave the scanner in the state the path
    needs; if that is impossible they are expanded to dead-end as early as
    possible. The target is always expanded to dead-end from its path state.
    Everything after the first dead end uses the shortest derivation.
    """
    t = expansion_tables(g) if tables is None else tables
    for n, f in t.free.items():
        if f is None:
            raise NonTerminatingExpansion(f"{n} derives no terminal string")
    prefix: list = []
    suffixes: list = []
    state = DEFAULT_STATE
    failed = False
    steps = path.steps
    for parent, step in zip(steps, steps[1:]):
        body = g.rules[parent.nonterminal]
        if not isinstance(body, Sequence):
            continue
        if step.index == 0:
            suffixes.append(t.free[body.right][2])
            continue
        left = body.left
        if failed:
            prefix.extend(t.free[left][2])
            continue
        directed = t.succ[left].get((state, step.state))
        if directed is not None:
            prefix.extend(directed[2])
            state = step.state
        elif state in t.fail[left]:
            prefix.extend(t.fail[left][state][3])
            failed = True
        else:
            prefix.extend(t.free[left][2])
            failed = True
    dead = t.fail[path.target].get(path.state)
    core = dead[3] if dead is not None else t.free[path.target][2]
    tokens = list(prefix) + list(core)
    for s in reversed(suffixes):
        tokens.extend(s)
    cache: dict = {}
    text = "".join(_token_text(g, tok, cache) for tok in tokens)
    w = Witness(path.target, path.state, text, tuple(tokens), path)
    w.failure = _simulate(g, text, nulls)[1]
    return w


# --------------------------------------------------------------------------
# verification

def scan(g: CoreGrammar, text: str) -> tuple:
    """Maximal-munch scan from DEFAULT; returns (tokens with offsets, failure or None)."""
    defs = g.regex_defs
    order = {name: i for i, name in enumerate(g.tokens)}
    pos = 0
    state = DEFAULT_STATE
    out = []
    while pos < len(text):
        best = None
        for name, decl in g.tokens.items():
            if decl.regex is None or state not in decl.out_state_for:
                continue
            ends = [e for e in fe.match_ends(decl.regex, text, pos, defs) if e > pos]
            if not ends:
                continue
            cand = (max(ends), -order[name], name)
            if best is None or cand > best:
                best = cand
        if best is None:
            return out, Failure(pos, state, f"no token active in {state} matches {text[pos]!r}")
        end, _, name = best
        out.append((name, pos))
        state = g.tokens[name].out_state_for[state]
        pos = end
    return out, None


def _simulate(g: CoreGrammar, text: str, nulls: Optional[frozenset] = None) -> tuple:
    """Scan then parse; returns (accepted, failure)."""
    scanned, failure = scan(g, text)
    if failure is not None:
        return False, failure
    names = [n for n, _ in scanned]
    accepted, viable = earley_parse(g, names, nulls=nulls)
    if not accepted and EOF_TOKEN in g.tokens:
        with_eof, viable2 = earley_parse(g, names + [EOF_TOKEN], nulls=nulls)
        if with_eof:
            return True, None
        viable = max(viable, min(viable2, len(names)))
    if accepted:
        return True, None
    if viable < len(scanned):
        tok, at = scanned[viable]
        state = DEFAULT_STATE
        for n, _ in scanned[:viable]:
            state = g.tokens[n].out_state_for[state]
        return False, Failure(at, state, f"parser cannot accept <{tok}> here")
    final = DEFAULT_STATE
    for n, _ in scanned:
        final = g.tokens[n].out_state_for[final]
    return False, Failure(len(text), final, "input ends early")


def verify_witness(g: CoreGrammar, w: Witness, nulls: Optional[frozenset] = None) -> Failure:
    """Confirm that ``w`` is derivable ignoring states and rejected with them."""
    nulls = nullable(g) if nulls is None else nulls
    if not earley_parse(g, list(w.tokens), nulls=nulls)[0]:
        raise VerificationFailed(f"token trace of {w.text!r} is not a sentence of the grammar")
    accepted, failure = _simulate(g, w.text, nulls)
    if accepted:
        raise VerificationFailed(f"{w.text!r} is accepted under lexical states")
    w.failure = failure
    w.verified = True
    return failure


def witnesses_for(tg, pairs, tables: Optional[_Tables] = None) -> list:
    """Verified witnesses for (non-terminal, state) errors; strict paths first, relaxed as fallback."""
    g = tg.grammar
    tables = expansion_tables(g) if tables is None else tables
    nulls = nullable(g)
    out = []
    for n, s in pairs:
        path = gen_err_path(tg, n, s) or gen_err_path(tg, n, s, relaxed=True)
        if path is None:
            continue
        w = gen_err_string(g, path, tables, nulls)
        try:
            verify_witness(g, w, nulls)
        except VerificationFailed:
            continue
        out.append(w)
    return out
