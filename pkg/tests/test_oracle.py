import pytest

from lexstate_lint.analysis import cs_build_out_states, useful_nonterminals
from lexstate_lint.model import (ERROR, Alternate, Epsilon, Sequence, Terminal, core_grammar, make_token,
                                 validate)
from lexstate_lint.oracle import (DerivationBound, derives_empty_within, earley_parse, enumerate_sentences,
                                  enumerate_trees, is_recursive, language_upto, oracle_out_states,
                                  random_grammar, simulate, sorted_sentences)

DEF, LX1 = "DEFAULT", "LX1"


def test_bound_validation():
    with pytest.raises(ValueError):
        DerivationBound(0)
    with pytest.raises(ValueError):
        DerivationBound(3, -1)


def test_two_states_small_languages(two_states):
    assert enumerate_sentences(two_states, "H", DerivationBound(2)) == {("AT",), ("CT",)}
    assert enumerate_sentences(two_states, "G", DerivationBound(3)) == {("BT", "CT")}
    assert enumerate_sentences(two_states, "G", DerivationBound(1)) == frozenset()


def test_two_states_start_sentences(two_states):
    sents = enumerate_sentences(two_states, "S", DerivationBound(8, 9))
    assert ("BT", "CT", "BT", "CT", "BT", "CT", "BT", "CT", "CT") in sents
    assert all(len(s) <= 9 for s in sents)
    assert sorted_sentences(sents)[0] == min(sents, key=lambda s: (len(s), s))


def test_length_cap_prunes(two_states):
    full = enumerate_sentences(two_states, "S", DerivationBound(8))
    short = enumerate_sentences(two_states, "S", DerivationBound(8, 6))
    assert short == {s for s in full if len(s) <= 6}


def test_simulate_dead_end(two_states):
    assert simulate(two_states, ["BT", "CT"], LX1) == DEF
    assert simulate(two_states, ["AT"], LX1) is ERROR
    assert simulate(two_states, [], LX1) == LX1


@pytest.mark.parametrize("n, s, want", [
    ("C", LX1, {DEF}),
    ("A", LX1, {ERROR}),
    ("F", DEF, {DEF, ERROR}),
])
def test_oracle_out_states_by_hand(two_states, n, s, want):
    assert oracle_out_states(two_states, n, s, DerivationBound(6)) == want


def test_oracle_matches_cs_on_random_grammars():
    # the fixpoint and brute force agree once the bound covers every derivation
    checked = 0
    for seed in range(500):
        g = random_grammar(seed, max_nonterminals=8, max_states=4, recursion=0.0)
        cs = cs_build_out_states(g)
        b = DerivationBound(len(g.rules) + 1, 10_000)
        for n in g.rules:
            for s in g.states:
                assert oracle_out_states(g, n, s, b) == cs.get(n, s), (seed, n, s)
                checked += 1
    assert checked > 2000


def test_derives_empty():
    g = core_grammar({"S": Sequence("A", "A"), "A": Epsilon()}, [], "S")
    assert derives_empty_within(g, "S", 2)
    assert not derives_empty_within(g, "S", 1)


def test_language_upto_recursive():
    toks = [make_token("T", ["DEFAULT"])]
    g = core_grammar({"S": Alternate("X", "L"), "L": Sequence("X", "S"), "X": Terminal("T")}, toks, "S")
    assert language_upto(g, 3)["S"] == {("T",), ("T", "T"), ("T", "T", "T")}
    assert is_recursive(g)


def test_enumerate_trees_counts(two_states):
    assert len(enumerate_trees(two_states, "H", 2)) == 2
    assert len(enumerate_trees(two_states, "S", 8)) == 4  # H appears twice, D twice


def test_earley(two_states):
    assert earley_parse(two_states, ["BT", "AT", "BT", "CT", "BT", "AT", "BT", "CT", "CT"]) == (True, 9)
    accepted, viable = earley_parse(two_states, ["BT", "CT", "CT"])
    assert not accepted and viable == 2
    assert earley_parse(two_states, []) == (False, 0)


def test_earley_nullable_start():
    g = core_grammar({"S": Epsilon()}, [], "S")
    assert earley_parse(g, [])[0]


def test_random_grammar_smallest():
    g = random_grammar(0, 1, 1, 1)
    assert list(g.rules) == ["N0"]
    assert isinstance(g.rules["N0"], Terminal)
    assert g.states == ("DEFAULT",)


def test_random_grammar_caps():
    with pytest.raises(ValueError):
        random_grammar(0, max_nonterminals=0)
    with pytest.raises(ValueError):
        random_grammar(0, max_states=9)


def test_random_grammar_seed_42_is_well_formed():
    g = random_grammar(42, max_nonterminals=10, max_tokens=6, max_states=4)
    assert validate(g) == []
    assert set(useful_nonterminals(g)) == set(g.rules)


def test_random_grammar_is_deterministic():
    for seed in range(50):
        a, b = random_grammar(seed), random_grammar(seed)
        assert a.rules == b.rules and a.tokens == b.tokens and a.states == b.states
    assert len({str(random_grammar(s).rules) for s in range(50)}) > 25


def test_random_grammar_epsilon_flag():
    assert not any(isinstance(b, Epsilon) for s in range(200) for b in random_grammar(s).rules.values())
    assert any(isinstance(b, Epsilon) for s in range(200)
               for b in random_grammar(s, allow_epsilon=True).rules.values())
