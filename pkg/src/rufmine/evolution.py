"""Two-stage modular genetic search over binary-coded networks.

Chromosome layout, left to right: for every link (transitions in order, target
row-major) a 16-bit weight word followed by a presence bit; a 16-bit word per
unit threshold; then, when fuzzy parameters are evolved, per feature the words
c_L, lambda_L, c_M, lambda_M, c_H, lambda_H and finally f_d, f_e.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .fuzzy import FuzzyEncoding, FuzzyGenerators, fuzzify
from .network import INTER, ModularNetwork, concatenate, encode_rule

log = logging.getLogger(__name__)

WORD_BITS = kernels.WORD_BITS
WORD_MAX = kernels.WORD_MAX
LINK_BITS = WORD_BITS + 1
W_LO, W_HI = -128.0, 128.0
WEIGHT_STEP = (W_HI - W_LO) / WORD_MAX
FUZZY_SCALE = 1.2
MIN_RADIUS = 1e-6


class LayoutMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class GaConfig:
    population: int = 64
    crossover_prob: float = 0.7
    pmut_max: float = 0.4
    pmut_min: float = 0.01
    intra_divisor: float = 10.0
    alpha1: float = 0.9
    alpha2: float = 0.1
    stage1_sweeps: int = 10
    generations: int = 100
    combination_cap: int = 256
    pool_sigma: float = 0.05
    inter_scale: float = 0.1
    gap_min: int = 8
    gap_max: int = 24
    evolve_fuzzy: bool = True

    def __post_init__(self):
        for name in ("crossover_prob", "pmut_max", "pmut_min", "alpha1", "alpha2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError("%s must lie in [0, 1], got %r" % (name, v))
        if abs(self.alpha1 + self.alpha2 - 1.0) > 1e-12:
            raise ValueError("alpha1 + alpha2 must equal 1")
        if self.pmut_min > self.pmut_max:
            raise ValueError("pmut_min exceeds pmut_max")
        if self.population < 1 or self.generations < 0 or self.stage1_sweeps < 0:
            raise ValueError("population >= 1 and non-negative budgets required")
        if self.intra_divisor < 1:
            raise ValueError("intra_divisor must be >= 1")
        if not 1 <= self.gap_min <= self.gap_max:
            raise ValueError("bad crossover gap range")


# --- layout ----------------------------------------------------------------------

@dataclass
class Layout:
    sizes: tuple
    owners: list
    out_classes: list
    n_features: int      # 0 when fuzzy parameters are not part of the chromosome
    fuzzy_max: np.ndarray
    link_tags: np.ndarray = field(init=False)

    def __post_init__(self):
        self.sizes = tuple(int(s) for s in self.sizes)
        tmpl = ModularNetwork.blank(self.sizes, self.owners, self.out_classes)
        self.link_tags = np.concatenate([tmpl.tags(h).ravel() for h in range(len(self.sizes) - 1)])
        self.fuzzy_max = np.asarray(self.fuzzy_max, dtype=float).reshape(-1)
        if self.n_features and self.fuzzy_max.size != self.n_features:
            raise ValueError("fuzzy_max needs one entry per feature")

    @classmethod
    def of(cls, net: ModularNetwork, n_features: int = 0, fuzzy_max=None) -> "Layout":
        if fuzzy_max is None:
            fuzzy_max = np.ones(n_features)
        return cls(tuple(net.sizes), [o.copy() for o in net.owners], list(net.out_classes),
                   int(n_features), fuzzy_max)

    @property
    def n_links(self) -> int:
        return int(self.link_tags.size)

    @property
    def n_biases(self) -> int:
        return int(sum(self.sizes[1:]))

    @property
    def n_fuzzy(self) -> int:
        return 6 * self.n_features + 2 if self.n_features else 0

    @property
    def n_bits(self) -> int:
        return LINK_BITS * self.n_links + WORD_BITS * (self.n_biases + self.n_fuzzy)

    @property
    def weight_starts(self) -> np.ndarray:
        return LINK_BITS * np.arange(self.n_links, dtype=np.int64)

    @property
    def presence_bits(self) -> np.ndarray:
        return self.weight_starts + WORD_BITS

    @property
    def bias_starts(self) -> np.ndarray:
        return LINK_BITS * self.n_links + WORD_BITS * np.arange(self.n_biases, dtype=np.int64)

    @property
    def fuzzy_starts(self) -> np.ndarray:
        base = LINK_BITS * self.n_links + WORD_BITS * self.n_biases
        return base + WORD_BITS * np.arange(self.n_fuzzy, dtype=np.int64)

    def bit_is_inter(self) -> np.ndarray:
        """True for bits belonging to inter-module links."""
        out = np.zeros(self.n_bits, dtype=bool)
        inter = np.repeat(self.link_tags == INTER, LINK_BITS)
        out[:inter.size] = inter
        return out

    def same_as(self, other: "Layout") -> bool:
        return (self.sizes == other.sizes and self.n_features == other.n_features
                and all(np.array_equal(a, b) for a, b in zip(self.owners, other.owners))
                and list(self.out_classes) == list(other.out_classes))


@dataclass
class Chromosome:
    bits: np.ndarray  # uint8 0/1
    layout: Layout

    def __len__(self):
        return int(self.bits.size)


# --- word codecs -------------------------------------------------------------------

def _to_words(values, lo, hi, what) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    clipped = np.clip(values, lo, hi)
    n_bad = int(np.count_nonzero(clipped != values))
    if n_bad:
        log.warning("%d %s value(s) outside [%g, %g] clamped", n_bad, what, np.min(lo), np.max(hi))
    return np.rint((clipped - lo) / (hi - lo) * WORD_MAX).astype(np.int64)


def weight_from_word(k):
    return W_LO + (W_HI - W_LO) * np.asarray(k, dtype=float) / WORD_MAX


def weight_to_word(w):
    return _to_words(w, W_LO, W_HI, "weight")


def generator_from_word(k):
    # (0, 2]: the all-zero word maps to the smallest positive step
    return 2.0 * (np.asarray(k, dtype=float) + 1.0) / (WORD_MAX + 1)


def generator_to_word(v):
    v = np.asarray(v, dtype=float)
    k = np.rint(v * (WORD_MAX + 1) / 2.0 - 1.0)
    clipped = np.clip(k, 0, WORD_MAX)
    if np.any(clipped != k):
        log.warning("fuzzy generator outside (0, 2] clamped")
    return clipped.astype(np.int64)


def _words_to_bits(words: np.ndarray) -> np.ndarray:
    shifts = np.arange(WORD_BITS - 1, -1, -1)
    return ((words[..., None] >> shifts) & 1).astype(np.uint8)


def _fuzzy_vector(enc: FuzzyEncoding, gen: FuzzyGenerators) -> np.ndarray:
    cl = np.stack([enc.centers, enc.radii], axis=2).reshape(-1)  # c_L, l_L, c_M, ...
    return np.concatenate([cl, [gen.f_d, gen.f_e]])


def encode(net: ModularNetwork, layout: Layout, enc: FuzzyEncoding | None = None,
           gen: FuzzyGenerators | None = None) -> Chromosome:
    if tuple(net.sizes) != layout.sizes:
        raise LayoutMismatchError("network sizes %s do not match layout %s" % (net.sizes, layout.sizes))
    wflat, pflat, bflat = net.flat()
    bits = np.zeros(layout.n_bits, dtype=np.uint8)
    link_bits = bits[:LINK_BITS * layout.n_links].reshape(layout.n_links, LINK_BITS)
    link_bits[:, :WORD_BITS] = _words_to_bits(weight_to_word(wflat))
    link_bits[:, WORD_BITS] = pflat
    b0 = LINK_BITS * layout.n_links
    bits[b0:b0 + WORD_BITS * layout.n_biases] = _words_to_bits(weight_to_word(bflat)).ravel()
    if layout.n_features:
        if enc is None or gen is None:
            raise ValueError("layout carries fuzzy parameters; encoding and generators required")
        f0 = b0 + WORD_BITS * layout.n_biases
        hi = FUZZY_SCALE * np.repeat(layout.fuzzy_max, 6)
        fw = _to_words(_fuzzy_vector(enc, gen)[:-2], 0.0, hi, "fuzzy parameter")
        gw = generator_to_word([gen.f_d, gen.f_e])
        bits[f0:] = _words_to_bits(np.concatenate([fw, gw])).ravel()
    return Chromosome(bits, layout)


@dataclass
class DecodedBatch:
    weights: np.ndarray   # (P, n_links)
    present: np.ndarray   # (P, n_links) uint8
    biases: np.ndarray    # (P, n_biases)
    centers: np.ndarray | None = None  # (P, n, 3)
    radii: np.ndarray | None = None
    generators: np.ndarray | None = None  # (P, 2)


def decode_batch(pop: np.ndarray, layout: Layout) -> DecodedBatch:
    pop = np.ascontiguousarray(np.atleast_2d(pop), dtype=np.uint8)
    starts = np.concatenate([layout.weight_starts, layout.bias_starts, layout.fuzzy_starts])
    words = kernels.decode_words(pop, starts)
    L, B = layout.n_links, layout.n_biases
    out = DecodedBatch(weight_from_word(words[:, :L]), pop[:, layout.presence_bits],
                       weight_from_word(words[:, L:L + B]))
    if layout.n_features:
        P, n = pop.shape[0], layout.n_features
        fw = words[:, L + B:L + B + 6 * n].astype(float) / WORD_MAX
        vals = fw * (FUZZY_SCALE * np.repeat(layout.fuzzy_max, 6))
        vals = vals.reshape(P, n, 3, 2)
        out.centers = np.ascontiguousarray(vals[..., 0])
        out.radii = np.ascontiguousarray(np.maximum(vals[..., 1], MIN_RADIUS))
        out.generators = generator_from_word(words[:, -2:])
    return out


def decode(c: Chromosome, names=None):
    """Return ``(network, encoding or None, generators or None)``."""
    lay = c.layout
    d = decode_batch(c.bits[None, :], lay)
    tmpl = ModularNetwork.blank(lay.sizes, lay.owners, lay.out_classes)
    net = tmpl.with_flat(d.weights[0], d.present[0].astype(bool), d.biases[0])
    if not lay.n_features:
        return net, None, None
    enc = FuzzyEncoding(d.centers[0], d.radii[0], names)
    return net, enc, FuzzyGenerators(*map(float, d.generators[0]))


# --- operators ------------------------------------------------------------------

def crossover_points(n_bits: int, rng, gap_min: int = 8, gap_max: int = 24) -> list[int]:
    points, pos = [], 0
    while True:
        pos += int(rng.integers(gap_min, gap_max + 1))
        if pos >= n_bits:
            return points
        points.append(pos)


def splice(a: np.ndarray, b: np.ndarray, points) -> tuple[np.ndarray, np.ndarray]:
    """Children alternate parents at every point; bit p comes from ``a`` when an even
    number of points lie at or before p."""
    seg = np.searchsorted(np.asarray(points, dtype=np.int64), np.arange(a.size), side="right") & 1
    from_a = seg == 0
    return np.where(from_a, a, b), np.where(from_a, b, a)


def crossover(a: Chromosome, b: Chromosome, rng, prob: float = 0.7,
              gap_min: int = 8, gap_max: int = 24) -> tuple[Chromosome, Chromosome]:
    if not a.layout.same_as(b.layout) or a.bits.size != b.bits.size:
        raise LayoutMismatchError("crossover parents have different layouts")
    if rng.random() >= prob:
        return Chromosome(a.bits.copy(), a.layout), Chromosome(b.bits.copy(), b.layout)
    x, y = splice(a.bits, b.bits, crossover_points(a.bits.size, rng, gap_min, gap_max))
    return Chromosome(x, a.layout), Chromosome(y, b.layout)


def pmut_at(t: int, total: int, cfg: GaConfig) -> float:
    if total <= 0:
        return cfg.pmut_min
    if not 0 <= t <= total:
        raise ValueError("generation %d outside [0, %d]" % (t, total))
    return cfg.pmut_max - (cfg.pmut_max - cfg.pmut_min) * t / total


def bit_rates(layout: Layout, t: int, total: int, cfg: GaConfig) -> np.ndarray:
    """Per-bit flip probability: pmut on inter-module link bits, pmut/divisor elsewhere."""
    p = pmut_at(t, total, cfg)
    return np.where(layout.bit_is_inter(), p, p / cfg.intra_divisor)


def mutate_bits(pop: np.ndarray, rates: np.ndarray, rng) -> np.ndarray:
    flips = rng.random(pop.shape) < rates
    return pop ^ flips.astype(np.uint8)


def mutate(c: Chromosome, t: int, total: int, rng, cfg: GaConfig = GaConfig()) -> Chromosome:
    return Chromosome(mutate_bits(c.bits, bit_rates(c.layout, t, total, cfg), rng), c.layout)


# --- fitness -----------------------------------------------------------------------

@dataclass(frozen=True)
class FitnessReport:
    f1: float
    f2: float
    F: float
    links: int


def combine_fitness(f1, f2, cfg: GaConfig = GaConfig()):
    return cfg.alpha1 * np.asarray(f1) + cfg.alpha2 * np.asarray(f2)


class Evaluator:
    """Batched fitness of whole populations against a frozen training set.

    ``X`` holds the scaled raw features when the layout evolves fuzzy
    parameters, otherwise the fuzzified inputs. With ``target_class`` set the
    single-output network is scored as a one-vs-rest detector.
    """

    def __init__(self, layout: Layout, X, labels, cfg: GaConfig = GaConfig(),
                 target_class: int | None = None):
        self.layout = layout
        self.X = np.ascontiguousarray(np.asarray(X, dtype=float))
        self.labels = np.asarray(labels)
        self.cfg = cfg
        self.target_class = target_class
        self.sizes = np.asarray(layout.sizes, dtype=np.int64)
        self.out_classes = np.asarray(layout.out_classes)

    def outputs(self, pop) -> np.ndarray:
        d = decode_batch(pop, self.layout)
        P = d.weights.shape[0]
        if self.layout.n_features:
            inputs = kernels.fuzzify_batch(self.X, d.centers, d.radii)
        else:
            inputs = np.ascontiguousarray(np.broadcast_to(self.X, (P,) + self.X.shape))
        return kernels.batch_forward(d.weights, d.present, d.biases, self.sizes, inputs), d

    def __call__(self, pop):
        """Return arrays ``(F, f1, f2, links)`` for every member of ``pop``."""
        y, d = self.outputs(pop)
        if self.target_class is not None:
            hit = (y[:, :, 0] > 0.5) == (self.labels == self.target_class)[None, :]
        else:
            hit = self.out_classes[np.argmax(y, axis=2)] == self.labels[None, :]
        f1 = hit.mean(axis=1)
        links = d.present.sum(axis=1).astype(np.int64)
        f2 = 1.0 - links / self.layout.n_links
        return combine_fitness(f1, f2, self.cfg), f1, f2, links

    def report(self, c: Chromosome) -> FitnessReport:
        F, f1, f2, links = self(c.bits[None, :])
        return FitnessReport(float(f1[0]), float(f2[0]), float(F[0]), int(links[0]))


def fitness(c: Chromosome, X, labels, cfg: GaConfig = GaConfig()) -> FitnessReport:
    return Evaluator(c.layout, X, labels, cfg).report(c)


# --- selection -------------------------------------------------------------------

def rank_order(F, links, pop) -> np.ndarray:
    """Indices best first: higher F, then fewer links, then lexicographically smaller bits."""
    packed = np.packbits(np.atleast_2d(pop), axis=1)
    keys = [(-float(F[i]), int(links[i]), packed[i].tobytes()) for i in range(len(F))]
    return np.array(sorted(range(len(F)), key=keys.__getitem__), dtype=np.int64)


def rank_probabilities(order) -> np.ndarray:
    """Roulette probabilities proportional to rank, worst = 1 ... best = P."""
    P = len(order)
    p = np.empty(P)
    p[order] = np.arange(P, 0, -1, dtype=float)
    return p / p.sum()


def select(F, links, pop, rng, n: int | None = None) -> np.ndarray:
    """Parent indices drawn by rank-proportional roulette."""
    F = np.asarray(F)
    if F.size == 0:
        raise ValueError("empty population")
    probs = rank_probabilities(rank_order(F, links, pop))
    return rng.choice(F.size, size=F.size if n is None else n, p=probs)


# --- generational loop ---------------------------------------------------------------

@dataclass
class RunTrace:
    best_bits: np.ndarray
    best: FitnessReport
    log: list  # (generation, best_F, mean_F, best_links)


def _breed(pop, parents, t, total, rates_fn, rng, cfg):
    kids = np.empty((len(parents), pop.shape[1]), dtype=np.uint8)
    for i in range(0, len(parents) - 1, 2):
        a, b = pop[parents[i]], pop[parents[i + 1]]
        if rng.random() < cfg.crossover_prob:
            a, b = splice(a, b, crossover_points(a.size, rng, cfg.gap_min, cfg.gap_max))
        kids[i], kids[i + 1] = a, b
    if len(parents) % 2:
        kids[-1] = pop[parents[-1]]
    return mutate_bits(kids, rates_fn(t, total), rng)


def run_ga(pop0: np.ndarray, evaluator: Evaluator, generations: int, rng,
           cfg: GaConfig = GaConfig()) -> RunTrace:
    """Rank-roulette GA with elitism; the best-so-far F never decreases."""
    layout = evaluator.layout
    inter = layout.bit_is_inter()

    def rates(t, total):
        p = pmut_at(t, total, cfg)
        return np.where(inter, p, p / cfg.intra_divisor)

    pop = np.ascontiguousarray(pop0, dtype=np.uint8)
    F, f1, f2, links = evaluator(pop)
    order = rank_order(F, links, pop)
    b = order[0]
    best = (pop[b].copy(), FitnessReport(float(f1[b]), float(f2[b]), float(F[b]), int(links[b])))
    trace = [(0, float(F[b]), float(F.mean()), int(links[b]))]
    for g in range(1, generations + 1):
        parents = select(F, links, pop, rng, n=cfg.population)
        kids = _breed(pop, parents, g - 1, generations, rates, rng, cfg)
        kF, kf1, kf2, klinks = evaluator(kids)
        if kF.max() < best[1].F:
            slot = int(rng.integers(len(kids)))
            kids[slot] = best[0]
            kF[slot], kf1[slot], kf2[slot], klinks[slot] = best[1].F, best[1].f1, best[1].f2, best[1].links
        pop, F, f1, f2, links = kids, kF, kf1, kf2, klinks
        order = rank_order(F, links, pop)
        b = order[0]
        cand = FitnessReport(float(f1[b]), float(f2[b]), float(F[b]), int(links[b]))
        if cand.F > best[1].F or (cand.F == best[1].F and cand.links < best[1].links):
            best = (pop[b].copy(), cand)
        trace.append((g, float(F[b]), float(F.mean()), int(links[b])))
    return RunTrace(best[0], best[1], trace)


# --- modular evolution ------------------------------------------------------------

def perturb(net: ModularNetwork, rng, sigma: float) -> ModularNetwork:
    """Gaussian noise on present weights and on thresholds."""
    out = net.copy()
    for h in range(out.n_layers - 1):
        out.weights[h] = out.weights[h] + np.where(out.present[h], rng.normal(0.0, sigma, out.weights[h].shape), 0.0)
        out.biases[h] = out.biases[h] + rng.normal(0.0, sigma, out.biases[h].shape)
    return out


def pad_hidden(net: ModularNetwork, widths) -> ModularNetwork:
    """Grow hidden layers to ``widths`` with unconnected units so pool members share a shape."""
    sizes = [net.sizes[0]] + list(widths) + [net.sizes[-1]]
    if any(s < o for s, o in zip(sizes, net.sizes)):
        raise ValueError("cannot shrink a network")
    k = net.out_classes[0]
    owners = [net.owners[0]] + [np.full(s, k) for s in sizes[1:]]
    out = ModularNetwork.blank(sizes, owners, net.out_classes)
    for h in range(net.n_layers - 1):
        r, c = net.weights[h].shape
        out.weights[h][:r, :c] = net.weights[h]
        out.present[h][:r, :c] = net.present[h]
        out.biases[h][:r] = net.biases[h]
    return out


def merge_class_subnets(subnets) -> ModularNetwork:
    """One sub-network per class whose hidden layer stacks all of the class's rules."""
    q = sum(s.sizes[1] for s in subnets)
    out = pad_hidden(subnets[0], [q] + list(subnets[0].sizes[2:-1]))
    r = 0
    for s in subnets:
        h = s.sizes[1]
        out.weights[0][r:r + h] = s.weights[0]
        out.present[0][r:r + h] = s.present[0]
        out.biases[0][r:r + h] = s.biases[0]
        out.weights[1][:, r:r + h] = s.weights[1][:, :h]
        out.present[1][:, r:r + h] = s.present[1][:, :h]
        r += h
    return out


def knowledge_network(rules, n_features, classes, rng, hidden_layers: int = 1,
                      inter_scale: float = 0.1) -> ModularNetwork:
    """Fully encoded network: every dependency rule of a class feeds that class's output."""
    by_class = {k: [encode_rule(r, n_features, hidden_layers=hidden_layers) for r in rules if r.cls == k]
                for k in classes}
    missing = [k for k, v in by_class.items() if not v]
    if missing:
        raise ValueError("no dependency rule for class(es) %s" % missing)
    return concatenate([merge_class_subnets(by_class[k]) for k in classes], classes, rng, inter_scale)


@dataclass
class EvolutionResult:
    network: ModularNetwork
    encoding: FuzzyEncoding
    generators: FuzzyGenerators
    chromosome: Chromosome
    fitness: FitnessReport
    log: list
    stage1: list = field(default_factory=list)  # (class, rule index, best F)
    n_combinations: int = 0


def _stage1(subnets, fuzzified, labels, cfg, rng):
    best, scores = [], []
    for idx, sub in enumerate(subnets):
        k = sub.out_classes[0]
        lay = Layout.of(sub)
        members = [sub] + [perturb(sub, rng, cfg.pool_sigma) for _ in range(cfg.population - 1)]
        pop = np.stack([encode(m, lay).bits for m in members])
        ev = Evaluator(lay, fuzzified, labels, cfg, target_class=k)
        tr = run_ga(pop, ev, cfg.stage1_sweeps, rng, cfg)
        net, _, _ = decode(Chromosome(tr.best_bits, lay))
        best.append(net)
        scores.append((k, idx, tr.best.F))
    return best, scores


def evolve_modular(rules, X, labels, enc: FuzzyEncoding, gen: FuzzyGenerators,
                   cfg: GaConfig = GaConfig(), seed: int = 0, hidden_layers: int = 1,
                   subnets=None) -> EvolutionResult:
    """Stage 1 evolves one pool per rule sub-network; stage 2 evolves concatenations.

    ``X`` are scaled training features (not yet fuzzified); ``labels`` their classes.
    """
    rng = np.random.default_rng(seed)
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels)
    classes = sorted(int(c) for c in np.unique(labels))
    if subnets is None:
        subnets = [encode_rule(r, enc.n_features, hidden_layers=hidden_layers) for r in rules]
    by_class = {k: [] for k in classes}
    for s in subnets:
        by_class.setdefault(s.out_classes[0], []).append(s)
    missing = [k for k in classes if not by_class.get(k)]
    if missing:
        raise ValueError("no rule for class(es) %s" % missing)

    fz = fuzzify(X, enc)
    pools, stage1 = _stage1(subnets, fz, labels, cfg, rng)
    pooled = {k: [] for k in classes}
    for net in pools:
        pooled[net.out_classes[0]].append(net)

    # a common hidden width per class lets every combination share one layout
    depth = len(pools[0].sizes)
    widths = {k: [max(n.sizes[h] for n in pooled[k]) for h in range(1, depth - 1)] for k in classes}
    for k in classes:
        pooled[k] = [pad_hidden(n, widths[k]) for n in pooled[k]]

    combos = list(itertools.product(*(range(len(pooled[k])) for k in classes)))
    n_comb = len(combos)
    if n_comb > cfg.combination_cap:
        keep = np.sort(rng.choice(n_comb, size=cfg.combination_cap, replace=False))
        log.warning("%d combinations exceed the cap of %d; sampled uniformly", n_comb, cfg.combination_cap)
        combos = [combos[i] for i in keep]
    nets = [concatenate([pooled[k][i] for k, i in zip(classes, combo)], classes, rng, cfg.inter_scale)
            for combo in combos]
    while len(nets) < cfg.population:
        nets.append(perturb(nets[len(nets) % len(combos)], rng, cfg.pool_sigma))

    fuzzy_max = np.maximum(X.max(axis=0), 1e-12)
    lay = Layout.of(nets[0], enc.n_features if cfg.evolve_fuzzy else 0, fuzzy_max)
    if cfg.evolve_fuzzy:
        pop = np.stack([encode(n, lay, enc, gen).bits for n in nets])
        ev = Evaluator(lay, X, labels, cfg)
    else:
        pop = np.stack([encode(n, lay).bits for n in nets])
        ev = Evaluator(lay, fz, labels, cfg)
    tr = run_ga(pop, ev, cfg.generations, rng, cfg)
    chrom = Chromosome(tr.best_bits, lay)
    net, enc2, gen2 = decode(chrom, enc.names)
    if enc2 is None:
        enc2, gen2 = enc.copy(), gen
    return EvolutionResult(net, enc2, gen2, chrom, tr.best, tr.log, stage1, n_comb)


def log_to_csv(rows) -> str:
    lines = ["generation,best_f,mean_f,best_links"]
    lines += ["%d,%.6f,%.6f,%d" % r for r in rows]
    return "\n".join(lines) + "\n"
