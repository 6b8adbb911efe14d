import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import assignments, brute_reducts, eval_cnf, eval_dnf
from rufmine.rough import (AttributeBudgetError, DependencyRule, DnfFormula, adaptive_threshold,
                           attr_name, cnf_to_dnf, dependency_factor, dependency_rules,
                           discernibility_matrix, fuzzy_discernibility_matrix, lit, lit_name,
                           minimal_hitting_sets, parse_lit, prune_rule, reducts, rules_from_text,
                           rules_to_text)


def test_identical_objects_have_empty_cell():
    m = discernibility_matrix(np.array([[1, 2], [1, 2]]))
    assert m.cell(1, 0) == frozenset()


def test_single_attribute_difference():
    m = discernibility_matrix(np.array([[0, 1], [1, 1]]))
    assert m.cell(1, 0) == {0}
    assert m.cell(0, 1) == {0}


def test_three_object_matrix_by_hand():
    v = np.array([[0, 0], [0, 1], [1, 1]])
    m = discernibility_matrix(v)
    assert (m.cell(1, 0), m.cell(2, 0), m.cell(2, 1)) == ({1}, {0, 1}, {0})


def test_fuzzy_cells():
    assert fuzzy_discernibility_matrix([[0.9, 0.1], [0.1, 0.1]], 0.5).cell(1, 0) == {0}
    assert fuzzy_discernibility_matrix([[0.3, 0.3], [0.3, 0.3]], 0.5).clauses() == []


def test_fuzzy_matrix_matches_pair_scan():
    rows = np.random.default_rng(4).uniform(size=(4, 6))
    m = fuzzy_discernibility_matrix(rows, 0.3)
    for i in range(4):
        for j in range(i):
            want = {a for a in range(6) if abs(rows[i, a] - rows[j, a]) > 0.3}
            assert m.cell(i, j) == want


@pytest.mark.parametrize("th", [0.0, 1.0, -0.2])
def test_threshold_bounds(th):
    with pytest.raises(ValueError):
        fuzzy_discernibility_matrix([[0.1], [0.2]], th)


def test_reducts_identical_objects():
    assert reducts(np.zeros((3, 2))) == [frozenset()]


def test_forced_single_attribute_reduct():
    v = np.array([[0, 5, 5], [1, 5, 5], [2, 6, 5]])
    assert frozenset({0}) in reducts(v)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.lists(st.integers(0, 2), min_size=4, max_size=4), min_size=1, max_size=6))
def test_reducts_match_brute_force(rows):
    v = np.array(rows)
    assert set(reducts(v)) == brute_reducts(v)


def test_reduct_attribute_budget():
    with pytest.raises(AttributeBudgetError):
        reducts(np.zeros((2, 21)))


def test_hitting_sets_small():
    # (a | b) & (b | c)  ->  b, a&c
    got = {frozenset(np.flatnonzero([(h >> i) & 1 for i in range(3)]).tolist())
           for h in minimal_hitting_sets([0b011, 0b110])}
    assert got == {frozenset({1}), frozenset({0, 2})}


literals = st.integers(0, 11).flatmap(lambda a: st.sampled_from([lit(a), lit(a, True)]))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.frozensets(literals, min_size=1, max_size=4), min_size=1, max_size=4))
def test_cnf_to_dnf_truth_table(clauses):
    dnf = cnf_to_dnf(clauses)
    attrs = {l >> 1 for c in clauses for l in c}
    for a in assignments(attrs, 12):
        assert eval_cnf(clauses, a) == eval_dnf(dnf, a)


def test_cnf_to_dnf_literal_cap_drops_terms():
    dnf = cnf_to_dnf([{lit(0), lit(1)}, {lit(2), lit(3)}], max_literals=1)
    assert dnf == []


def test_literal_names():
    assert attr_name(4) == "M_2"
    assert lit_name(lit(6, True)) == "!L_3"
    assert parse_lit("!H_2") == lit(5, True)
    with pytest.raises(ValueError):
        parse_lit("X_1")


def test_dnf_format_parse():
    f = DnfFormula.of([{lit(0), lit(4)}, {lit(5), lit(3)}])
    assert DnfFormula.parse(f.format()) == f
    assert f.evaluate({0: 1, 4: 1, 3: 0, 5: 0})


def _one_object_class():
    own = np.zeros((1, 9))
    own[0, 4] = 0.9
    other = np.zeros((3, 9))
    other[:, 4] = 0.1
    other[:, 0] = [0.9, 0.2, 0.6]
    return [own, other]


def test_single_literal_rule():
    rules = dependency_rules(_one_object_class(), labels=[1, 2])
    assert rules[0].formula.format() == "M_2"
    assert rules[0].df == 1.0


def test_consistent_table_has_unit_dependency():
    tabs = _one_object_class()
    assert dependency_factor(tabs, 0) == 1.0


def test_disjunctive_rule_shape():
    own = np.zeros((4, 9))
    own[:2, 4] = 0.95      # M_2
    own[2:, 6] = 0.95      # L_3
    other = np.zeros((5, 9))
    other[:, 2] = 0.9      # H_1
    rules = dependency_rules([own, other], th=0.5, labels=[1, 2])
    assert rules[0].formula.format() == "M_2 | L_3"


def test_adaptive_threshold_floor_and_cap():
    th = adaptive_threshold(np.zeros((3, 6)))
    np.testing.assert_allclose(th, 0.1)
    th = adaptive_threshold(np.array([[0.0] * 3, [1.0] * 3]))
    assert (th < 1).all()


def test_prune_keeps_best_conjuncts():
    own = np.zeros((4, 9))
    own[:3, 4] = 0.9
    own[3, 6] = 0.9
    other = np.zeros((2, 9))
    rule = DependencyRule(1, DnfFormula.of([{lit(4)}, {lit(6)}, {lit(0), lit(4)}]), 1.0)
    pruned = prune_rule(rule, [own, other], [1, 2], max_conjuncts=1)
    assert pruned.formula.format() == "M_2"


def test_rule_text_round_trip():
    r = DependencyRule(3, DnfFormula.of([{lit(0), lit(4)}, {lit(8)}]), 0.75)
    assert rules_from_text(rules_to_text([r])) == [r]
