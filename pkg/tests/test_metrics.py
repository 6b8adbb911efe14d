import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import tally
from rufmine.extraction import ExtractedRule
from rufmine.metrics import (ConfusionMatrix, MetricsReport, UndefinedStatisticError, accuracy,
                             behrens_fisher, build_report, confusion_index, fidelity, kappa,
                             uncovered, users_accuracy)
from rufmine.network import ModularNetwork
from rufmine.rough import lit


def cm(counts):
    counts = np.asarray(counts)
    return ConfusionMatrix(counts, list(range(1, len(counts) + 1)))


def test_diagonal_accuracy():
    per, overall = accuracy(cm(np.diag([3, 4, 5])))
    assert per == [100.0, 100.0, 100.0] and overall == 100.0
    assert users_accuracy(cm(np.diag([3, 4, 5]))) == [1.0, 1.0, 1.0]
    assert kappa(cm(np.diag([3, 4, 5])))[0] == [1.0, 1.0, 1.0]


def test_four_of_five():
    assert accuracy(cm([[4, 1], [0, 5]]))[0][0] == 80.0
    assert users_accuracy(cm([[4, 0], [1, 5]]))[0] == pytest.approx(0.8)


def test_kappa_worked_example():
    m = cm([[4, 1], [1, 4]])
    per, overall = kappa(m)
    assert per[0] == 0.6 and overall == 0.6


def test_kappa_chance_level():
    rng = np.random.default_rng(0)
    m = ConfusionMatrix.from_labels(rng.integers(1, 3, 20000), rng.integers(1, 3, 20000), [1, 2])
    assert abs(kappa(m)[1]) < 0.03


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 6).flatmap(
    lambda l: st.lists(st.lists(st.integers(0, 9), min_size=l, max_size=l), min_size=l, max_size=l)))
def test_against_tally(counts):
    if sum(map(sum, counts)) == 0:
        return
    ref = tally(counts)
    m = cm(counts)
    per, overall = accuracy(m)
    for a, b in zip(per, ref["acc"]):
        assert (a is None and b is None) or a == pytest.approx(b)
    assert overall == pytest.approx(ref["overall"])
    for a, b in zip(users_accuracy(m), ref["ua"]):
        assert (a is None and b is None) or a == pytest.approx(b)
    kper, kall = kappa(m)
    for a, b in zip(kper, ref["kappa"]):
        assert (a is None and b is None) or a == pytest.approx(b)
    assert (kall is None and ref["kappa_all"] is None) or kall == pytest.approx(ref["kappa_all"])
    assert confusion_index(m)[0] == pytest.approx(ref["conf"])


def test_conf_degenerate(caplog):
    with caplog.at_level(logging.INFO):
        conf, degen = confusion_index(cm(np.diag([5] * 4)))
    assert conf == 3.0 and degen


def test_conf_single_off_diagonal():
    counts = np.diag([10] * 6)
    counts[0, 3] = 2
    assert confusion_index(cm(counts)) == (pytest.approx(1 / 6), False)


def test_no_fire_counts_against_accuracy():
    m = ConfusionMatrix.from_labels([1, 1, 2, 2], [1, 0, 2, 2], [1, 2])
    assert m.no_fire.tolist() == [1, 0]
    assert accuracy(m)[1] == 75.0


def _identity_net():
    net = ModularNetwork.blank([3, 3], out_classes=[1, 2, 3])
    for j in range(3):
        net.weights[0][j, j], net.present[0][j, j] = 10.0, True
    net.biases[0][:] = 5.0
    return net


def test_fidelity_cases():
    rules = [ExtractedRule(k + 1, frozenset({lit(k)}), 0.5) for k in range(3)]
    X = np.eye(3)
    assert fidelity(_identity_net(), rules, X) == 100.0
    assert fidelity(_identity_net(), [], X) == 0.0
    # the network abstains on an all-zero input and so does the rule base
    assert fidelity(_identity_net(), rules, np.zeros((1, 3))) == 100.0


def test_uncovered_cases():
    X = np.eye(3)
    assert uncovered([], X) == 100.0
    taut = [ExtractedRule(1, frozenset({lit(0)}), 0.5), ExtractedRule(1, frozenset({lit(0, True)}), 0.5)]
    assert uncovered(taut, X) == 0.0


def test_behrens_fisher():
    assert behrens_fisher(88.6, 0.26, 10, 86.6, 0.46, 10) == pytest.approx(11.97, abs=0.01)
    assert behrens_fisher(5, 1, 4, 5, 2, 4) == 0.0
    assert behrens_fisher(1, 1, 4, 2, 2, 5) == -behrens_fisher(2, 2, 5, 1, 1, 4)
    with pytest.raises(UndefinedStatisticError):
        behrens_fisher(1, 0, 3, 2, 0, 3)
    with pytest.raises(ValueError):
        behrens_fisher(1, 1, 1, 2, 1, 3)


def test_report_round_trip():
    m = cm([[4, 1], [1, 4]])
    r = build_report("S", m, fidelity_pct=90.0, uncovered_pct=5.0,
                     rules=[ExtractedRule(1, frozenset({0}), 0.5)], links=12)
    assert MetricsReport.from_json(r.to_json()) == r
    assert r.kappa == 0.6 and r.certainty_mean == 0.5 and r.cpu_sec is None
