import dataclasses
from collections import deque
from pathlib import Path

import pytest

from lexstate_lint.analysis import (CI_ERROR, CI_WARNING, START_STATE, USELESS, analyze, ci_analyze,
                                    ci_build_in_states, ci_build_out_states, ci_state_maps,
                                    cs_build_out_states, cs_latent_errors, cs_reachable_errors,
                                    find_useless_productions, occurrence_reach)
from lexstate_lint.model import (ERROR, Alternate, Epsilon, Sequence, Terminal, children, core_grammar,
                                 load_grammar, make_token, nullable)
from lexstate_lint.oracle import (DerivationBound, oracle_in_states,
                                  oracle_last_out_states, oracle_occurrence_reach, oracle_out_states,
                                  random_grammar)

from conftest import FIXTURES, fixture_text

GOLDEN = Path(__file__).parent / "golden"
DEF, LX1 = "DEFAULT", "LX1"

TWO_STATES_IN = {"S": {DEF, LX1}, "A": {DEF}, "B": {DEF, LX1}, "C": {LX1}, "D": {DEF, LX1},
           "F": {DEF, LX1}, "H": {DEF, LX1}, "G": {DEF, LX1}, "E": {DEF, LX1}}
TWO_STATES_OUT = {n: {DEF} for n in TWO_STATES_IN} | {"B": {DEF, LX1}}
TWO_STATES_CS = {
    "S": ({ERROR}, {ERROR}),
    "A": ({DEF}, {ERROR}),
    "B": ({DEF}, {LX1}),
    "C": ({ERROR}, {DEF}),
    "D": ({ERROR}, {ERROR}),
    "F": ({DEF, ERROR}, {DEF, ERROR}),
    "H": ({DEF, ERROR}, {DEF, ERROR}),
    "G": ({ERROR}, {DEF}),
    "E": ({ERROR}, {ERROR}),
}
TWO_STATES_LATENT = [("S", DEF), ("S", LX1), ("A", LX1), ("C", DEF), ("D", DEF), ("D", LX1),
               ("G", DEF), ("E", DEF), ("E", LX1)]


def single_token(in_states=("DEFAULT",), out=None):
    return core_grammar({"S": Terminal("T")}, [make_token("T", in_states, out)], "S")


# useless productions

def _bfs_reachable(g):
    seen = {g.start}
    todo = deque([g.start])
    while todo:
        for c in children(g.rules[todo.popleft()]):
            if c in g.rules and c not in seen:
                seen.add(c)
                todo.append(c)
    return seen


def test_useless_two_states(two_states):
    assert find_useless_productions(two_states) == frozenset()


def test_useless_unreferenced():
    g = core_grammar({"S": Terminal("T"), "X": Terminal("T")}, [make_token("T", ["DEFAULT"])], "S")
    assert find_useless_productions(g) == {"X"}


def test_useless_orphan_matches_bfs():
    g = load_grammar(fixture_text("bibtex") + "\nvoid Orphan() : {} { <COMMA> ( Key() )* }\n")
    useless = find_useless_productions(g)
    assert useless == set(g.rules) - _bfs_reachable(g)
    assert {g.owner_of(n) for n in useless} == {"Orphan"}
    assert [d.nonterminal for d in analyze(g, ("up",)).diagnostics] == ["Orphan"]


@pytest.mark.parametrize("name", FIXTURES)
@pytest.mark.parametrize("k", [1, 3])
def test_orphans_leave_results_unchanged(name, k):
    base = load_grammar(fixture_text(name))
    first_token = next(iter(base.tokens))
    extra = "".join(f"\nvoid Orphan{i}() : {{}} {{ <{first_token}> [ {base.start}() ] }}\n"
                    for i in range(k))
    g = load_grammar(fixture_text(name) + extra)
    r0, r1 = analyze(base), analyze(g)
    assert [d.kind for d in r1.diagnostics].count(USELESS) == k
    assert [d for d in r1.diagnostics if d.kind != USELESS] == r0.diagnostics
    for n in base.rules:
        if n in r0.cs.table:
            assert r1.cs.table[n] == r0.cs.table[n]
            assert r1.ci.in_states[n] == r0.ci.in_states[n]
            assert r1.ci.out_states[n] == r0.ci.out_states[n]


# context-insensitive analysis

def test_two_states_ci_maps(two_states):
    assert ci_build_in_states(two_states) == TWO_STATES_IN
    assert ci_build_out_states(two_states) == TWO_STATES_OUT


def test_ci_default_out_state():
    assert ci_build_out_states(single_token()) == {"S": {"DEFAULT"}}


def test_ci_epsilon_in_states():
    g = core_grammar({"S": Epsilon()}, [], "S")
    assert ci_build_in_states(g) == {"S": set()}


def test_two_states_ci_diagnostics(two_states):
    diags = ci_analyze(two_states)
    assert [(d.kind, d.nonterminal, d.offending_states) for d in diags] == [
        (CI_WARNING, "G", (DEF,)), (CI_ERROR, "E", (DEF,))]


def test_ci_clean_single_token():
    assert ci_analyze(single_token()) == []


def test_start_state_error():
    diags = ci_analyze(single_token(("LX",)))
    assert [d.kind for d in diags] == [START_STATE]


def _ci_golden(g):
    return "".join(f"{d.kind} {d.nonterminal} {','.join(d.offending_states)}\n" for d in ci_analyze(g))


def test_bibtex_ci_golden(bibtex):
    assert _ci_golden(bibtex) == (GOLDEN / "bibtex_ci.txt").read_text()
    loci = {bibtex.owner_of(d.nonterminal) for d in ci_analyze(bibtex)}
    assert {"Block", "Entry"} <= loci


def test_bibtex_ci_out_states_match_oracle(bibtex):
    outs = ci_build_out_states(bibtex)
    b = DerivationBound(24, 12)
    for n in bibtex.rules:
        assert outs[n] == oracle_last_out_states(bibtex, n, b), n


def test_bibtex_ci_in_states_match_oracle_first(bibtex):
    ins = ci_build_in_states(bibtex)
    b = DerivationBound(24, 12)
    for n in bibtex.rules:
        assert ins[n] == oracle_in_states(bibtex, n, b), n


@pytest.mark.parametrize("name", FIXTURES)
def test_ci_trichotomy(name):
    g = load_grammar(fixture_text(name))
    maps = ci_state_maps(g)
    by_nt = {}
    for d in ci_analyze(g, maps):
        if d.kind in (CI_ERROR, CI_WARNING):
            assert d.nonterminal not in by_nt
            by_nt[d.nonterminal] = d.kind
    for n, body in g.rules.items():
        if not isinstance(body, Sequence):
            continue
        o_s = maps.out_states[body.left]
        i_s = o_s - maps.in_states[body.right]
        expect = None if not i_s else (CI_ERROR if i_s == o_s else CI_WARNING)
        assert by_nt.get(n) == expect, n


# fixpoint checks use an independent single pass of the equations

def _ci_pass(g, ins, outs):
    nulls = nullable(g)
    new_in, new_out = {}, {}
    for n in ins:
        b = g.rules[n]
        if isinstance(b, Terminal):
            t = g.tokens[b.token]
            new_in[n], new_out[n] = set(t.in_states), t.out_states()
        elif isinstance(b, Epsilon):
            new_in[n], new_out[n] = set(), set()
        elif isinstance(b, Alternate):
            new_in[n] = ins[b.left] | ins[b.right]
            new_out[n] = outs[b.left] | outs[b.right]
        else:
            new_in[n] = ins[b.left] | (ins[b.right] if b.left in nulls else set())
            new_out[n] = outs[b.right] | (outs[b.left] if b.right in nulls else set())
    return new_in, new_out


def _cs_pass(g, table):
    nulls = nullable(g)
    new = {}
    for n, row in table.items():
        b = g.rules[n]
        new[n] = {}
        for s in row:
            if isinstance(b, Terminal):
                t = g.tokens[b.token]
                new[n][s] = {t.out_state_for[s]} if s in t.out_state_for else {ERROR}
            elif isinstance(b, Epsilon):
                new[n][s] = {s}
            elif isinstance(b, Alternate):
                new[n][s] = table[b.left][s] | table[b.right][s]
            else:
                acc = set()
                for m in table[b.left][s]:
                    acc |= {ERROR} if m is ERROR else table[b.right][m]
                if b.right in nulls:
                    acc |= table[b.left][s]
                new[n][s] = acc
    return new


def _grammars():
    for name in FIXTURES:
        yield load_grammar(fixture_text(name))
    for seed in range(300):
        yield random_grammar(seed, allow_epsilon=seed % 2 == 0)


def test_fixpoint_idempotence():
    for g in _grammars():
        maps = ci_state_maps(g)
        assert _ci_pass(g, maps.in_states, maps.out_states) == (maps.in_states, maps.out_states)
        cs = cs_build_out_states(g)
        assert _cs_pass(g, cs.table) == cs.table
        assert cs_build_out_states(g).table == cs.table


def test_monotonicity_under_extra_in_state():
    for seed in range(300):
        g = random_grammar(seed, allow_epsilon=seed % 3 == 0)
        before = ci_state_maps(g)
        for name, t in g.tokens.items():
            missing = [s for s in g.states if s not in t.in_states]
            if not missing:
                continue
            bigger = make_token(name, t.in_states + (missing[0],), t.explicit_out, t.regex)
            g2 = dataclasses.replace(g, tokens={**g.tokens, name: bigger})
            after = ci_state_maps(g2)
            for n in before.in_states:
                assert before.in_states[n] <= after.in_states[n]
                assert before.out_states[n] <= after.out_states[n]


def test_error_state_containment():
    for g in _grammars():
        maps = ci_state_maps(g)
        for m in (maps.in_states, maps.out_states):
            assert all(ERROR not in v for v in m.values())
        cs = cs_build_out_states(g)
        for n in cs.table:
            assert cs.get(n, ERROR) == {ERROR}
            assert ERROR not in cs.table[n]


# context-sensitive analysis

def test_two_states_cs_table(two_states):
    cs = cs_build_out_states(two_states)
    for n, (on_def, on_lx1) in TWO_STATES_CS.items():
        assert cs.get(n, DEF) == on_def, n
        assert cs.get(n, LX1) == on_lx1, n


def test_row_b_follows_token_semantics(two_states):
    b = DerivationBound(1)
    assert oracle_out_states(two_states, "B", DEF, b) == {DEF}
    assert oracle_out_states(two_states, "B", LX1, b) == {LX1}


def test_two_states_cs_against_oracle(two_states):
    cs = cs_build_out_states(two_states)
    for n in two_states.rules:
        for s in two_states.states:
            assert oracle_out_states(two_states, n, s, DerivationBound(8)) == cs.get(n, s)


def test_two_states_tiers(two_states):
    cs = cs_build_out_states(two_states)
    assert cs_latent_errors(two_states, cs) == TWO_STATES_LATENT
    assert cs_reachable_errors(two_states, cs) == [("S", DEF), ("C", DEF), ("D", DEF), ("G", DEF)]


def test_tiers_empty_when_clean():
    g = single_token()
    cs = cs_build_out_states(g)
    assert cs_latent_errors(g, cs) == [] and cs_reachable_errors(g, cs) == []


def test_reachable_tier_matches_oracle_traces(two_states):
    # a reachable pair is an occurrence entered in a state from which it always dies
    reach = oracle_occurrence_reach(two_states, 6)
    cs = cs_build_out_states(two_states)
    entered = {(two_states.rules[p].left if i == 0 else two_states.rules[p].right, s)
               for (p, i), states in reach.items() if p is not None
               and not isinstance(two_states.rules[p], Terminal) for s in states}
    entered |= {(two_states.start, DEF)}
    oracle = sorted((n, s) for n, s in entered if cs.only_error(n, s))
    assert oracle == sorted(cs_reachable_errors(two_states, cs))


def test_occurrence_reach_two_states(two_states):
    r = occurrence_reach(two_states, cs_build_out_states(two_states))
    assert r.reach[(None, 0)] == {DEF}
    # the C operand of G is entered after B, which keeps the DEFAULT state
    assert r.reach[("G", 1)] == {DEF}
    assert oracle_occurrence_reach(two_states, 6)[("G", 1)] == {DEF}
    assert r.reach[("S", 1)] == frozenset()


def test_occurrence_reach_brstring(bibtex):
    r = occurrence_reach(bibtex, cs_build_out_states(bibtex))
    data_seq = next(n for n, b in bibtex.rules.items()
                    if bibtex.owner_of(n) == "Data" and isinstance(b, Sequence) and b.right == "BrString")
    assert r.reach[(data_seq, 1)] == {"FIELDS"}
    assert oracle_occurrence_reach(bibtex, 20)[(data_seq, 1)] == {"FIELDS"}


def test_occurrence_reach_against_oracle():
    for seed in range(200):
        g = random_grammar(seed, max_nonterminals=7, recursion=0.0)
        r = occurrence_reach(g, cs_build_out_states(g))
        oracle = oracle_occurrence_reach(g, len(g.rules) + 1)
        for (p, i), states in oracle.items():
            if p is not None and isinstance(g.rules[p], Alternate) and g.rules[p].left == g.rules[p].right:
                states = oracle.get((p, 0), set()) | oracle.get((p, 1), set())
                assert states <= r.reach[(p, 0)] | r.reach[(p, 1)]
                continue
            assert r.reach[(p, i)] == states, (seed, p, i)


def test_ci_errors_within_cs_random():
    for seed in range(1000):
        g = random_grammar(seed)
        ci_nts = {d.nonterminal for d in ci_analyze(g) if d.kind == CI_ERROR}
        latent_nts = {n for n, _ in cs_latent_errors(g, cs_build_out_states(g))}
        assert ci_nts <= latent_nts, seed


def test_ci_errors_within_cs_fixtures():
    for name in FIXTURES:
        g = load_grammar(fixture_text(name))
        ci_nts = {d.nonterminal for d in ci_analyze(g) if d.kind == CI_ERROR}
        assert ci_nts <= {n for n, _ in cs_latent_errors(g, cs_build_out_states(g))}


def test_nullable_right_operand_breaks_inclusion():
    # a right operand that only derives the empty string has no in-states, so the
    # literal sequence check flags it although every scan succeeds
    g = core_grammar({"S": Sequence("A", "E"), "A": Terminal("T"), "E": Epsilon()},
                     [make_token("T", ["DEFAULT"])], "S")
    assert [d.kind for d in ci_analyze(g)] == [CI_ERROR]
    assert cs_latent_errors(g, cs_build_out_states(g)) == []


def test_analyze_modes(two_states):
    assert analyze(two_states, ("up",)).cs is None
    full = analyze(two_states)
    assert [d.kind for d in full.diagnostics].count("CsErrorLatent") == 9
    assert [d.kind for d in full.diagnostics].count("CsErrorReachable") == 4
