"""Classification and rule-base quality measures."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .extraction import NO_FIRE, infer_batch
from .network import ModularNetwork, forward_layers

log = logging.getLogger(__name__)


class UndefinedStatisticError(ValueError):
    pass


@dataclass
class ConfusionMatrix:
    """Counts ``n[i, j]`` of actual class i predicted as j, plus per-class no-fires."""

    counts: np.ndarray
    classes: list
    no_fire: np.ndarray | None = None

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        l = len(self.classes)
        if self.counts.shape != (l, l):
            raise ValueError("confusion matrix must be %d x %d" % (l, l))
        if (self.counts < 0).any():
            raise ValueError("negative counts")
        self.no_fire = np.zeros(l, dtype=np.int64) if self.no_fire is None else np.asarray(self.no_fire, dtype=np.int64)

    @classmethod
    def from_labels(cls, actual, predicted, classes=None) -> "ConfusionMatrix":
        actual = np.asarray(actual)
        predicted = np.asarray(predicted)
        if classes is None:
            classes = sorted(set(actual.tolist()))
        classes = [int(c) for c in classes]
        pos = {c: i for i, c in enumerate(classes)}
        m = np.zeros((len(classes), len(classes)), dtype=np.int64)
        nf = np.zeros(len(classes), dtype=np.int64)
        for a, p in zip(actual.tolist(), predicted.tolist()):
            if p == NO_FIRE or p not in pos:
                nf[pos[a]] += 1
            else:
                m[pos[a], pos[p]] += 1
        return cls(m, classes, nf)

    @property
    def row_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1) + self.no_fire

    @property
    def col_totals(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.row_totals.sum())


def _ratio(num, den):
    return None if den == 0 else float(num) / float(den)


def accuracy(m: ConfusionMatrix):
    """Per-class and overall percentage correct; classes without test patterns are None."""
    rows = m.row_totals
    diag = np.diag(m.counts)
    per = [None if r == 0 else 100.0 * d / r for d, r in zip(diag, rows)]
    overall = None if rows.sum() == 0 else 100.0 * diag.sum() / rows.sum()
    return per, overall


def users_accuracy(m: ConfusionMatrix):
    return [_ratio(d, c) for d, c in zip(np.diag(m.counts), m.col_totals)]


def kappa(m: ConfusionMatrix):
    n = m.total
    if n == 0:
        raise ValueError("kappa of an empty matrix")
    per, num_sum, den_sum = [], 0.0, 0.0
    for nic, ni, nci in zip(np.diag(m.counts), m.row_totals, m.col_totals):
        num = n * nic - ni * nci
        den = n * ni - ni * nci
        if den == 0:
            per.append(None)
            continue
        per.append(float(num) / den)
        num_sum += num
        den_sum += den
    return per, (num_sum / den_sum if den_sum else None)


def confusion_index(m: ConfusionMatrix):
    """Off-diagonal cells at or above the off-diagonal mean, divided by l.

    Returns ``(conf, degenerate)``; degenerate is True when every off-diagonal
    cell is zero, where the count is trivially maximal.
    """
    l = len(m.classes)
    if l < 2:
        raise ValueError("confusion index needs at least two classes")
    off = m.counts[~np.eye(l, dtype=bool)]
    degenerate = bool(off.sum() == 0)
    if degenerate:
        log.info("confusion index: no off-diagonal entries, value is maximal")
    return float((off >= off.mean()).sum()) / l, degenerate


def fidelity(net: ModularNetwork, rules, memberships, crispness: float = 0.5) -> float:
    """Percent of patterns where the rule base agrees with the network's decision.

    The network abstains when no output exceeds 0.5; a no-fire only agrees with that.
    """
    m = np.atleast_2d(np.asarray(memberships, dtype=float))
    if m.shape[0] == 0:
        raise ValueError("fidelity on an empty test set")
    y = forward_layers(net, m)[-1]
    net_pred = np.asarray(net.out_classes)[np.argmax(y, axis=1)]
    net_pred = np.where(y.max(axis=1) > 0.5, net_pred, NO_FIRE)
    rule_pred = infer_batch(rules, m, crispness) if rules else np.full(m.shape[0], NO_FIRE)
    return 100.0 * float(np.mean(rule_pred == net_pred))


def uncovered(rules, memberships, crispness: float = 0.5) -> float:
    m = np.atleast_2d(np.asarray(memberships, dtype=float))
    if not rules:
        return 100.0
    return 100.0 * float(np.mean(infer_batch(rules, m, crispness) == NO_FIRE))


def behrens_fisher(mean1, sd1, n1, mean2, sd2, n2) -> float:
    if n1 < 2 or n2 < 2:
        raise ValueError("both samples need at least two observations")
    if sd1 < 0 or sd2 < 0:
        raise ValueError("spreads must be non-negative")
    if sd1 == 0 and sd2 == 0:
        raise UndefinedStatisticError("both spreads are zero")
    return (mean1 - mean2) / math.sqrt(sd1 ** 2 / n1 + sd2 ** 2 / n2)


@dataclass
class MetricsReport:
    model: str
    accuracy: float | None
    accuracy_per_class: list
    users_accuracy: list
    kappa: float | None
    kappa_per_class: list
    fidelity: float | None
    conf: float
    conf_degenerate: bool
    uncovered: float | None
    rules: int
    cpu_sec: float | None
    certainty_mean: float | None
    certainty_min: float | None
    network_accuracy: float | None = None
    train_accuracy: float | None = None
    links: int | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=False)

    @classmethod
    def from_json(cls, text: str) -> "MetricsReport":
        return cls.from_dict(json.loads(text))


def _r(x, nd=6):
    return None if x is None else round(float(x), nd)


def build_report(model: str, cm: ConfusionMatrix, *, fidelity_pct=None, uncovered_pct=None,
                 rules=(), cpu_sec=None, network_accuracy=None, train_accuracy=None,
                 links=None) -> MetricsReport:
    per, overall = accuracy(cm)
    kper, kall = kappa(cm)
    conf, degen = confusion_index(cm)
    cfs = [r.cf for r in rules]
    return MetricsReport(
        model=model,
        accuracy=_r(overall),
        accuracy_per_class=[_r(x) for x in per],
        users_accuracy=[_r(x) for x in users_accuracy(cm)],
        kappa=_r(kall),
        kappa_per_class=[_r(x) for x in kper],
        fidelity=_r(fidelity_pct),
        conf=_r(conf),
        conf_degenerate=degen,
        uncovered=_r(uncovered_pct),
        rules=len(cfs),
        cpu_sec=None if cpu_sec is None else round(cpu_sec, 2),
        certainty_mean=_r(np.mean(cfs)) if cfs else None,
        certainty_min=_r(np.min(cfs)) if cfs else None,
        network_accuracy=_r(network_accuracy),
        train_accuracy=_r(train_accuracy),
        links=links,
    )
