"""Price-series ingestion, derived features with quantile class labels, synthetic data."""
from __future__ import annotations

import csv
import datetime as dt
import logging
from dataclasses import dataclass, field

import numpy as np

from .table import DecisionTable, minmax_apply, minmax_fit

log = logging.getLogger(__name__)

FEATURE_NAMES = ["F1", "F2", "F3"]
OPTIONAL_COLUMNS = ("open", "high", "low", "volume")


class SeriesError(ValueError):
    pass


@dataclass
class PriceSeries:
    dates: list
    close: np.ndarray
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.close = np.asarray(self.close, dtype=float)
        if len(self.dates) != len(self.close):
            raise SeriesError("dates and closes differ in length")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise SeriesError("dates must be strictly increasing")
        if (self.close <= 0).any() or not np.isfinite(self.close).all():
            raise SeriesError("closing prices must be positive")

    def __len__(self):
        return len(self.close)


def read_prices(path) -> PriceSeries:
    """CSV with a header holding ``date,close`` and optionally open/high/low/volume."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = [c.strip().lower() for c in (reader.fieldnames or [])]
        if "date" not in cols or "close" not in cols:
            raise SeriesError("price file needs 'date' and 'close' columns")
        rows = [{k.strip().lower(): v for k, v in r.items()} for r in reader]
    dates = [dt.date.fromisoformat(r["date"].strip()) for r in rows]
    close = [float(r["close"]) for r in rows]
    extra = {c: np.array([float(r[c]) for r in rows]) for c in OPTIONAL_COLUMNS if c in cols}
    return PriceSeries(dates, close, extra)


def write_prices(s: PriceSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "close"])
        for d, c in zip(s.dates, s.close):
            w.writerow([d.isoformat(), repr(float(c))])


def raw_features(s: PriceSeries, k: int, h: int):
    """Unscaled (F1, F2, F3) per usable day and the forward h-day return.

    F1 is the k-day return, F2 the close over its k-day simple moving average and
    F3 the standard deviation of the last k daily returns.
    """
    if k < 1 or h < 1:
        raise ValueError("window and horizon must be >= 1")
    c = s.close
    if len(c) <= k + h:
        raise SeriesError("series of length %d too short for window %d and horizon %d" % (len(c), k, h))
    t = np.arange(k, len(c) - h)
    daily = c[1:] / c[:-1] - 1.0
    f1 = c[t] / c[t - k] - 1.0
    sma = np.array([c[i - k + 1:i + 1].mean() for i in t])
    f2 = c[t] / sma
    f3 = np.array([daily[i - k:i].std() for i in t])
    fwd = c[t + h] / c[t] - 1.0
    return np.column_stack([f1, f2, f3]), fwd, t


def quantile_labels(x, l: int) -> np.ndarray:
    """Classes 1..l by rank so every bucket holds N/l objects up to one."""
    if l < 2:
        raise ValueError("need at least two classes")
    x = np.asarray(x)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x), dtype=np.int64)
    ranks[order] = np.arange(len(x))
    return ranks * l // len(x) + 1


def derive_features(s: PriceSeries, k: int = 5, h: int = 5, l: int = 6, fit_rows=None,
                    scale: bool = True) -> DecisionTable:
    """Decision table of derived features, min-max scaled on ``fit_rows`` (default all rows)."""
    X, fwd, t = raw_features(s, k, h)
    for j, name in enumerate(FEATURE_NAMES):
        if np.ptp(X[:, j]) == 0:
            log.warning("feature %s is constant over the series", name)
    if scale:
        rows = np.arange(len(X)) if fit_rows is None else np.asarray(fit_rows)
        lo, hi = minmax_fit(X[rows])
        X = minmax_apply(X, lo, hi)
    objects = [s.dates[i].isoformat() for i in t]
    return DecisionTable(X, quantile_labels(fwd, l), list(FEATURE_NAMES), objects)


def codewords(l: int) -> np.ndarray:
    """Level triples (a, b, (a+b) mod 3); any two coordinates identify the class."""
    if not 2 <= l <= 9:
        raise ValueError("synthetic data supports 2..9 classes")
    grid = [(a, b, (a + b) % 3) for a in range(3) for b in range(3)]
    ordered = [g for g in grid if g[0] != g[1]] + [g for g in grid if g[0] == g[1]]
    return np.array(ordered[:l], dtype=float)


def make_synthetic(n_per_class: int = 100, l: int = 6, separation: float = 2.0,
                   seed: int = 0) -> DecisionTable:
    """Unit-variance Gaussian blobs in three features.

    Each class sits on a low/medium/high level per feature with levels spaced
    ``2 * separation`` standard deviations apart, so single literals and pairs of
    literals separate the classes.
    """
    if n_per_class < 1:
        raise ValueError("n_per_class must be positive")
    rng = np.random.default_rng(seed)
    centers = 2.0 * separation * codewords(l)
    X = np.concatenate([rng.normal(c, 1.0, size=(n_per_class, 3)) for c in centers])
    y = np.repeat(np.arange(1, l + 1), n_per_class)
    return DecisionTable(X, y, list(FEATURE_NAMES))
