"""Linguistic (low/medium/high) input encoding and fuzzy class-membership targets."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

TERMS = ("L", "M", "H")
ZERO_SPREAD_FRACTION = 1e-6


class DegenerateFeatureError(ValueError):
    pass


@dataclass(frozen=True)
class PiParams:
    center: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("pi radius must be positive, got %r" % self.radius)


@dataclass
class FuzzyEncoding:
    """Centers and radii of the L/M/H pi-sets, arrays of shape (n_features, 3)."""

    centers: np.ndarray
    radii: np.ndarray
    names: list[str] | None = None

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=float).reshape(-1, 3)
        self.radii = np.asarray(self.radii, dtype=float).reshape(-1, 3)
        if self.names is None:
            self.names = ["F%d" % (i + 1) for i in range(len(self.centers))]

    @property
    def n_features(self) -> int:
        return self.centers.shape[0]

    def params(self, feature: int, term: int) -> PiParams:
        return PiParams(float(self.centers[feature, term]), float(self.radii[feature, term]))

    def copy(self) -> "FuzzyEncoding":
        return FuzzyEncoding(self.centers.copy(), self.radii.copy(), list(self.names))

    def to_dict(self) -> dict:
        feats = []
        for f in range(self.n_features):
            d = {"name": self.names[f]}
            for t, term in enumerate(TERMS):
                d[term] = {"c": float(self.centers[f, t]), "lambda": float(self.radii[f, t])}
            feats.append(d)
        return {"features": feats}

    @classmethod
    def from_dict(cls, d: dict) -> "FuzzyEncoding":
        feats = d["features"]
        c = [[f[t]["c"] for t in TERMS] for f in feats]
        r = [[f[t]["lambda"] for t in TERMS] for f in feats]
        return cls(np.array(c), np.array(r), [f.get("name", "F%d" % (i + 1)) for i, f in enumerate(feats)])


@dataclass(frozen=True)
class FuzzyGenerators:
    f_d: float
    f_e: float

    def __post_init__(self):
        if not (self.f_d > 0 and self.f_e > 0):
            raise ValueError("fuzzy generators must be positive")

    def to_dict(self) -> dict:
        return {"f_d": float(self.f_d), "f_e": float(self.f_e)}


@dataclass
class ClassStatistics:
    means: np.ndarray   # (l, n)
    spreads: np.ndarray  # (l, n), strictly positive
    classes: np.ndarray  # labels, length l


def pi_membership(x, center, radius):
    """Pi-function: 1 at the center, 0 at distance >= radius, quadratic bands in between."""
    x = np.asarray(x, dtype=float)
    d = np.abs(x - center) / radius
    inner = 1.0 - 2.0 * d * d
    outer = 2.0 * (1.0 - d) ** 2
    out = np.where(d <= 0.5, inner, np.where(d <= 1.0, outer, 0.0))
    return out if out.ndim else float(out)


def fuzzify(pattern, enc: FuzzyEncoding) -> np.ndarray:
    """Map n-feature pattern(s) to 3n memberships ordered [L_1, M_1, H_1, L_2, ...]."""
    x = np.asarray(pattern, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != enc.n_features:
        raise ValueError("pattern has %d features, encoding expects %d" % (x.shape[1], enc.n_features))
    mu = pi_membership(x[:, :, None], enc.centers[None], enc.radii[None])
    mu = mu.reshape(x.shape[0], 3 * enc.n_features)
    return mu[0] if single else mu


def _radii_from_centers(c, fallback):
    gap_lm = c[1] - c[0]
    gap_mh = c[2] - c[1]
    gap_lm = gap_lm if gap_lm > 0 else fallback
    gap_mh = gap_mh if gap_mh > 0 else fallback
    # pi(x) = 0.5 at half the radius, so a radius equal to the center gap
    # makes neighbouring terms cross at membership 0.5
    return np.array([gap_lm, 0.5 * (gap_lm + gap_mh), gap_mh])


def init_encoding(values: np.ndarray, names=None) -> FuzzyEncoding:
    """Initial L/M/H parameters: centers at the 25/50/75th percentiles of each feature."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if values.shape[0] == 0:
        raise ValueError("empty training table")
    n = values.shape[1]
    names = list(names) if names is not None else ["F%d" % (i + 1) for i in range(n)]
    centers = np.empty((n, 3))
    radii = np.empty((n, 3))
    for f in range(n):
        col = values[:, f]
        lo, hi = col.min(), col.max()
        if hi <= lo:
            raise DegenerateFeatureError("feature %r is constant" % names[f])
        centers[f] = np.percentile(col, [25, 50, 75])
        radii[f] = _radii_from_centers(centers[f], 0.25 * (hi - lo))
    return FuzzyEncoding(centers, radii, names)


def class_statistics(values: np.ndarray, labels: np.ndarray) -> ClassStatistics:
    values = np.atleast_2d(np.asarray(values, dtype=float))
    labels = np.asarray(labels)
    classes = np.unique(labels)
    rng = values.max(axis=0) - values.min(axis=0)
    floor = np.where(rng > 0, ZERO_SPREAD_FRACTION * rng, ZERO_SPREAD_FRACTION)
    means = np.array([values[labels == c].mean(axis=0) for c in classes])
    spreads = np.array([values[labels == c].std(axis=0) for c in classes])
    spreads = np.where(spreads > 0, spreads, floor)
    return ClassStatistics(means, spreads, classes)


def weighted_distance(pattern, stats: ClassStatistics) -> np.ndarray:
    """Distance of pattern(s) to every class mean, scaled per feature by the class spread."""
    x = np.asarray(pattern, dtype=float)
    z = (x[..., None, :] - stats.means) / stats.spreads
    return np.sqrt((z * z).sum(axis=-1))


def class_membership(pattern, stats: ClassStatistics, gen: FuzzyGenerators) -> np.ndarray:
    z = weighted_distance(pattern, stats)
    return 1.0 / (1.0 + (z / gen.f_d) ** gen.f_e)


def init_generators(values, labels, stats: ClassStatistics) -> FuzzyGenerators:
    """f_d = mean distance of training patterns to their own class; f_e = 1."""
    z = weighted_distance(values, stats)
    own = z[np.arange(len(labels)), np.searchsorted(stats.classes, labels)]
    f_d = float(own.mean())
    if not f_d > 0:
        f_d = 1.0
    return FuzzyGenerators(f_d, 1.0)


def encoding_to_json(enc: FuzzyEncoding, gen: FuzzyGenerators | None = None) -> str:
    d = enc.to_dict()
    if gen is not None:
        d["generators"] = gen.to_dict()
    return json.dumps(d, indent=2)


def encoding_from_json(text: str):
    d = json.loads(text)
    gen = d.get("generators")
    return FuzzyEncoding.from_dict(d), (FuzzyGenerators(gen["f_d"], gen["f_e"]) if gen else None)
