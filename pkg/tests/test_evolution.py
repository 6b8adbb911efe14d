import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rufmine.evolution import (LINK_BITS, WEIGHT_STEP, WORD_BITS, Chromosome, Evaluator, GaConfig,
                               Layout, LayoutMismatchError, combine_fitness, crossover,
                               crossover_points, decode, encode, evolve_modular, fitness,
                               generator_from_word, generator_to_word, knowledge_network, mutate,
                               pmut_at, rank_order, rank_probabilities, run_ga, select, splice,
                               weight_from_word, weight_to_word)
from rufmine.fuzzy import FuzzyEncoding, FuzzyGenerators, class_statistics, init_encoding, init_generators
from rufmine.network import ModularNetwork, concatenate, encode_rule, predict, random_network
from rufmine.rough import DependencyRule, DnfFormula

CFG = GaConfig()


def rule(cls, text):
    return DependencyRule(cls, DnfFormula.parse(text), 1.0)


def modular_net(seed=0):
    rng = np.random.default_rng(seed)
    subs = [encode_rule(rule(1, "L_1 | M_2"), 3), encode_rule(rule(2, "H_1 & H_3"), 3)]
    return concatenate(subs, [1, 2], rng)


def test_word_extremes():
    assert weight_from_word(0) == -128.0
    assert weight_from_word(2 ** WORD_BITS - 1) == 128.0


@settings(max_examples=200, deadline=None)
@given(st.floats(-128, 128))
def test_weight_quantization(w):
    assert abs(float(weight_from_word(weight_to_word(w))) - w) <= WEIGHT_STEP / 2 + 1e-12


def test_weight_clamped():
    assert weight_to_word(500.0) == 2 ** WORD_BITS - 1


@settings(max_examples=100, deadline=None)
@given(st.floats(0.001, 2.0))
def test_generator_quantization(v):
    assert abs(float(generator_from_word(generator_to_word(v))) - v) <= 2.0 / 2 ** WORD_BITS


def test_chromosome_round_trip_with_fuzzy_words():
    net = modular_net()
    enc = FuzzyEncoding([[0.2, 0.5, 0.8]] * 3, [[0.3, 0.3, 0.3]] * 3)
    gen = FuzzyGenerators(0.8, 1.0)
    lay = Layout.of(net, 3, np.ones(3))
    c = encode(net, lay, enc, gen)
    assert len(c) == LINK_BITS * lay.n_links + WORD_BITS * (lay.n_biases + 6 * 3 + 2)
    back, enc2, gen2 = decode(c)
    for a, b in zip(back.weights, net.weights):
        assert np.max(np.abs(a - b)) <= WEIGHT_STEP
    for a, b in zip(back.present, net.present):
        np.testing.assert_array_equal(a, b)
    assert np.max(np.abs(enc2.centers - enc.centers)) <= 1.2 / (2 ** WORD_BITS - 1)
    assert abs(gen2.f_d - gen.f_d) <= 2.0 / 2 ** WORD_BITS


def test_layout_mismatch():
    net = modular_net()
    with pytest.raises(LayoutMismatchError):
        encode(random_network([9, 4, 2], np.random.default_rng(0)), Layout.of(net))


def test_crossover_identical_parents():
    lay = Layout.of(modular_net())
    a = Chromosome(np.random.default_rng(0).integers(0, 2, lay.n_bits).astype(np.uint8), lay)
    x, y = crossover(a, a, np.random.default_rng(1), prob=1.0)
    np.testing.assert_array_equal(x.bits, a.bits)
    np.testing.assert_array_equal(y.bits, a.bits)


def test_crossover_not_triggered_copies():
    lay = Layout.of(modular_net())
    a = Chromosome(np.zeros(lay.n_bits, dtype=np.uint8), lay)
    b = Chromosome(np.ones(lay.n_bits, dtype=np.uint8), lay)
    x, y = crossover(a, b, np.random.default_rng(0), prob=0.0)
    assert x.bits.sum() == 0 and y.bits.sum() == lay.n_bits


def test_crossover_parity_trace():
    n = 200
    a, b = np.zeros(n, dtype=np.uint8), np.ones(n, dtype=np.uint8)
    pts = crossover_points(n, np.random.default_rng(5))
    # replay: gap sequence from the same generator
    rng = np.random.default_rng(5)
    pos, replay = 0, []
    while True:
        pos += int(rng.integers(8, 25))
        if pos >= n:
            break
        replay.append(pos)
    assert pts == replay
    x, y = splice(a, b, pts)
    for p in range(n):
        before = sum(1 for q in pts if q <= p)
        assert x[p] == (before % 2)
        assert y[p] == 1 - x[p]
    gaps = np.diff([0] + pts)
    assert gaps.min() >= 8 and gaps.max() <= 24


def test_pmut_schedule():
    assert pmut_at(0, 100, CFG) == pytest.approx(0.4)
    assert pmut_at(100, 100, CFG) == pytest.approx(0.01)


def _flip_fraction(lay, t, T, seed, mask):
    base = Chromosome(np.zeros(lay.n_bits, dtype=np.uint8), lay)
    rng = np.random.default_rng(seed)
    flips = total = 0
    while total < 100_000:
        out = mutate(base, t, T, rng)
        flips += int(out.bits[mask].sum())
        total += int(mask.sum())
    return flips / total, total


def test_inter_flip_rate_within_three_sigma():
    lay = Layout.of(modular_net())
    inter = lay.bit_is_inter()
    frac, n = _flip_fraction(lay, 40, 100, 0, inter)
    p = pmut_at(40, 100, CFG)
    assert abs(frac - p) <= 3 * np.sqrt(p * (1 - p) / n)


def test_fitness_all_correct_all_links():
    assert combine_fitness(1.0, 0.0) == pytest.approx(0.9)
    assert combine_fitness(1.0, 0.8) == pytest.approx(0.98)


def test_fitness_twenty_of_hundred_links():
    net = ModularNetwork.blank([10, 10], out_classes=list(range(1, 11)))
    for j in range(10):
        net.weights[0][j, j] = 8.0
        net.present[0][j, j] = True
        net.present[0][j, (j + 1) % 10] = True
    net.biases[0][:] = 4.0
    rep = fitness(encode(net, Layout.of(net)), np.eye(10), np.arange(1, 11))
    assert (rep.f1, rep.links) == (1.0, 20)
    assert rep.F == pytest.approx(0.98)


def test_fitness_matches_separate_classification():
    rng = np.random.default_rng(7)
    net = random_network([6, 5, 3], rng, scale=2.0)
    X, y = rng.uniform(size=(40, 6)), rng.integers(1, 4, 40)
    c = encode(net, Layout.of(net))
    dec, _, _ = decode(c)
    rep = fitness(c, X, y)
    assert rep.f1 == pytest.approx(float(np.mean(predict(dec, X) == y)))
    assert rep.F == pytest.approx(0.9 * rep.f1 + 0.1 * rep.f2)


def test_selection_single_member():
    pop = np.zeros((1, 8), dtype=np.uint8)
    assert select(np.array([0.3]), np.array([5]), pop, np.random.default_rng(0), n=5).tolist() == [0] * 5


def test_rank_probabilities():
    order = rank_order(np.array([0.1, 0.5, 0.3]), np.zeros(3, int), np.zeros((3, 4), np.uint8))
    assert order.tolist() == [1, 2, 0]
    np.testing.assert_allclose(rank_probabilities(order), [1 / 6, 3 / 6, 2 / 6])


def test_rank_ties_prefer_fewer_links():
    order = rank_order(np.array([0.5, 0.5]), np.array([9, 3]), np.zeros((2, 4), np.uint8))
    assert order.tolist() == [1, 0]


def _random_run(seed, generations=100):
    rng = np.random.default_rng(seed)
    net = modular_net(seed)
    lay = Layout.of(net)
    X = rng.uniform(size=(30, 9))
    y = rng.integers(1, 3, 30)
    pop = np.stack([encode(random_network(net.sizes, rng, 2.0), lay).bits for _ in range(16)])
    cfg = GaConfig(population=16)
    return run_ga(pop, Evaluator(lay, X, y, cfg), generations, rng, cfg)


def test_elitism_monotone():
    best = [row[1] for row in _random_run(3).log]
    assert all(b >= a for a, b in zip(best, best[1:]))


def _two_blobs(seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal([0.1, 0.5], 0.03, (30, 2)), rng.normal([0.9, 0.5], 0.03, (30, 2))])
    y = np.repeat([1, 2], 30)
    enc = init_encoding(X)
    gen = init_generators(X, y, class_statistics(X, y))
    return X, y, enc, gen


def test_combination_count():
    X, y, enc, gen = _two_blobs()
    rules = [rule(1, "L_1"), rule(2, "H_1"), rule(2, "H_1 & M_2")]
    res = evolve_modular(rules, X, y, enc, gen, GaConfig(population=8, generations=2, stage1_sweeps=1))
    assert res.n_combinations == 2


def test_separable_classes_reach_full_training_accuracy():
    X, y, enc, gen = _two_blobs(1)
    cfg = GaConfig(population=16, generations=20, stage1_sweeps=3)
    res = evolve_modular([rule(1, "L_1"), rule(2, "H_1")], X, y, enc, gen, cfg, seed=4)
    assert res.fitness.f1 == 1.0


def test_evolution_deterministic():
    X, y, enc, gen = _two_blobs(2)
    cfg = GaConfig(population=12, generations=5, stage1_sweeps=2)
    rules = [rule(1, "L_1"), rule(2, "H_1")]
    a = evolve_modular(rules, X, y, enc, gen, cfg, seed=9)
    b = evolve_modular(rules, X, y, enc, gen, cfg, seed=9)
    np.testing.assert_array_equal(a.chromosome.bits, b.chromosome.bits)


def test_missing_class_rule():
    X, y, enc, gen = _two_blobs()
    with pytest.raises(ValueError):
        evolve_modular([rule(1, "L_1")], X, y, enc, gen, GaConfig(population=4, generations=1))


def test_knowledge_network_stacks_rules():
    net = knowledge_network([rule(1, "L_1"), rule(1, "M_2 & H_3"), rule(2, "H_1")], 3, [1, 2],
                            np.random.default_rng(0))
    assert net.sizes == [9, 3, 2]


@pytest.mark.parametrize("kw", [dict(alpha1=0.5), dict(pmut_min=0.5), dict(gap_min=0), dict(population=0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        GaConfig(**kw)
