"""Decision tables: completion, stratified splitting and RSBR discretization."""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

MISSING = np.nan


class EmptyTableError(ValueError):
    pass


class StratificationError(ValueError):
    pass


@dataclass
class DecisionTable:
    """Objects x condition attributes, plus a decision column with labels 1..l.

    Missing cells are NaN.
    """

    values: np.ndarray
    decision: np.ndarray
    attributes: list[str] = field(default_factory=list)
    objects: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim == 1:
            self.values = self.values[:, None]
        self.decision = np.asarray(self.decision, dtype=int)
        n, m = self.values.shape
        if len(self.decision) != n:
            raise ValueError("decision length %d != %d objects" % (len(self.decision), n))
        if not self.attributes:
            self.attributes = ["a%d" % (i + 1) for i in range(m)]
        if len(self.attributes) != m:
            raise ValueError("attribute names do not match value columns")
        if "class" in self.attributes:
            raise ValueError("decision attribute 'class' cannot be a condition attribute")
        if self.objects is None:
            self.objects = np.arange(n)
        self.objects = np.asarray(self.objects)

    @property
    def n_objects(self) -> int:
        return self.values.shape[0]

    @property
    def n_attributes(self) -> int:
        return self.values.shape[1]

    @property
    def classes(self) -> np.ndarray:
        return np.unique(self.decision)

    def subset(self, idx) -> "DecisionTable":
        idx = np.asarray(idx)
        return DecisionTable(self.values[idx].copy(), self.decision[idx].copy(),
                             list(self.attributes), self.objects[idx].copy())

    def with_values(self, values) -> "DecisionTable":
        return DecisionTable(values, self.decision.copy(), list(self.attributes), self.objects.copy())

    def has_missing(self) -> bool:
        return bool(np.isnan(self.values).any())


def read_table(path) -> DecisionTable:
    """Read a decision-table CSV (last column ``class``; empty cells are missing)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[-1].strip() != "class":
            raise ValueError("%s: last column must be 'class'" % path)
        rows = [r for r in reader if r]
    values = np.array([[float(c) if c.strip() != "" else np.nan for c in r[:-1]] for r in rows],
                      dtype=float).reshape(len(rows), len(header) - 1)
    decision = np.array([int(r[-1]) for r in rows], dtype=int)
    if len(decision) and decision.min() < 1:
        raise ValueError("class labels must be integers >= 1")
    return DecisionTable(values, decision, [h.strip() for h in header[:-1]])


def write_table(t: DecisionTable, path, fmt: str = "%.10g") -> None:
    """Write to a path or an open text stream."""
    if hasattr(path, "write"):
        _write_rows(t, path, fmt)
        return
    with open(path, "w", newline="") as fh:
        _write_rows(t, fh, fmt)


def _write_rows(t: DecisionTable, fh, fmt: str) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(list(t.attributes) + ["class"])
    for row, d in zip(t.values, t.decision):
        w.writerow(["" if np.isnan(v) else fmt % v for v in row] + [int(d)])


def complete_table(t: DecisionTable, policy: str = "drop") -> DecisionTable:
    """Remove missing cells: ``drop`` removes incomplete objects, ``mean`` imputes column means."""
    miss = np.isnan(t.values)
    if not miss.any():
        return t.subset(np.arange(t.n_objects))
    if policy == "drop":
        keep = ~miss.any(axis=1)
        if not keep.any():
            raise EmptyTableError("every object has a missing value")
        log.info("dropped %d incomplete objects", int((~keep).sum()))
        return t.subset(np.flatnonzero(keep))
    if policy == "mean":
        vals = t.values.copy()
        for j in range(t.n_attributes):
            col = vals[:, j]
            ok = ~np.isnan(col)
            if not ok.any():
                raise EmptyTableError("attribute %r has no observed values" % t.attributes[j])
            col[~ok] = col[ok].mean()
        return t.with_values(vals)
    raise ValueError("unknown completion policy %r" % policy)


def split(t: DecisionTable, fraction: float, seed: int):
    """Stratified random split into (train, test); deterministic for a given seed."""
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for c in t.classes:
        members = np.flatnonzero(t.decision == c)
        if len(members) < 2:
            raise StratificationError("class %d has fewer than 2 objects" % c)
        members = rng.permutation(members)
        k = int(round(fraction * len(members)))
        if k == 0:
            raise StratificationError("fraction %.3g leaves class %d empty in train" % (fraction, c))
        train_idx.append(members[:k])
        test_idx.append(members[k:])
    tr = np.sort(np.concatenate(train_idx))
    te = np.sort(np.concatenate(test_idx))
    return t.subset(tr), t.subset(te)


def split_indices(t: DecisionTable, fraction: float, seed: int):
    """Like :func:`split` but returns the row indices."""
    tr, te = split(DecisionTable(np.arange(t.n_objects, dtype=float), t.decision), fraction, seed)
    return tr.values[:, 0].astype(int), te.values[:, 0].astype(int)


# --- min-max scaling (fitted on training rows only) -----------------------

def minmax_fit(values: np.ndarray):
    lo = np.nanmin(values, axis=0)
    hi = np.nanmax(values, axis=0)
    return lo, hi


def minmax_apply(values: np.ndarray, lo, hi) -> np.ndarray:
    span = np.where(hi > lo, hi - lo, 1.0)
    return (values - lo) / span


# --- RSBR discretization ---------------------------------------------------

CutSet = list  # per attribute: sorted np.ndarray of cut points


def candidate_cuts(t: DecisionTable) -> CutSet:
    """Midpoints between consecutive distinct values whose neighbours disagree on the decision."""
    cuts = []
    for j in range(t.n_attributes):
        col = t.values[:, j]
        uniq = np.unique(col)
        out = []
        for lo, hi in zip(uniq[:-1], uniq[1:]):
            d = np.unique(t.decision[(col == lo) | (col == hi)])
            if len(d) > 1:
                out.append(0.5 * (lo + hi))
        cuts.append(np.array(out, dtype=float))
    return cuts


def _flat_cuts(cuts: CutSet):
    return [(j, float(c)) for j, cs in enumerate(cuts) for c in cs]


def _conflict_pairs(decision):
    n = len(decision)
    i, j = np.triu_indices(n, k=1)
    keep = decision[i] != decision[j]
    return i[keep], j[keep]


def _pair_cover(t: DecisionTable, flat, pi, pj):
    """Boolean matrix (pairs x cuts): cut discerns pair."""
    cover = np.zeros((len(pi), len(flat)), dtype=bool)
    for k, (a, c) in enumerate(flat):
        vi, vj = t.values[pi, a], t.values[pj, a]
        cover[:, k] = (np.minimum(vi, vj) < c) & (c < np.maximum(vi, vj))
    return cover


def greedy_cut_selection(cover: np.ndarray) -> list[int]:
    """Greedy set cover over the pair-incidence matrix, then drop redundant cuts.

    Ties go to the lowest column index, which is (attribute, cut value) order.
    """
    need = cover.any(axis=1)
    uncovered = need.copy()
    chosen: list[int] = []
    while uncovered.any():
        gains = cover[uncovered].sum(axis=0)
        k = int(np.argmax(gains))
        chosen.append(k)
        uncovered &= ~cover[:, k]
    # reverse pass: remove cuts whose pairs are all discerned by the rest
    for k in sorted(chosen, reverse=True):
        rest = [c for c in chosen if c != k]
        if not rest:
            continue
        if cover[need][:, rest].any(axis=1).all():
            chosen = rest
    return sorted(chosen)


def apply_cuts(t: DecisionTable, cuts: CutSet) -> DecisionTable:
    """Replace each value by the index of its interval."""
    vals = np.empty_like(t.values)
    for j, cs in enumerate(cuts):
        vals[:, j] = np.searchsorted(np.asarray(cs), t.values[:, j], side="left")
    return t.with_values(vals)


def rsbr_discretize(t: DecisionTable, cuts: CutSet | None = None):
    """Pick a small cut subset that keeps every inter-class pair discernible.

    Returns ``(discretized_table, selected_cuts, warnings)``. Pairs the candidate cuts
    cannot separate (identical conditions, different decisions) are reported in the
    warnings and left out of the cover requirement.
    """
    if cuts is None:
        cuts = candidate_cuts(t)
    flat = _flat_cuts(cuts)
    pi, pj = _conflict_pairs(t.decision)
    warnings = []
    if len(flat) == 0 or len(pi) == 0:
        cover = np.zeros((len(pi), len(flat)), dtype=bool)
    else:
        cover = _pair_cover(t, flat, pi, pj)
    bad = ~cover.any(axis=1) if len(flat) else np.ones(len(pi), dtype=bool)
    for a, b in zip(pi[bad], pj[bad]):
        warnings.append("objects %s and %s conflict and cannot be discerned"
                        % (t.objects[a], t.objects[b]))
    if warnings:
        log.warning("inconsistent table: %d indiscernible conflicting pairs", len(warnings))
    chosen = greedy_cut_selection(cover) if len(flat) else []
    selected = [[] for _ in range(t.n_attributes)]
    for k in chosen:
        a, c = flat[k]
        selected[a].append(c)
    selected = [np.array(sorted(s), dtype=float) for s in selected]
    return apply_cuts(t, selected), selected, warnings


def cuts_to_json(cuts: CutSet, attributes) -> str:
    return json.dumps([{"attribute": a, "cuts": [float(c) for c in cs]}
                       for a, cs in zip(attributes, cuts)], indent=2)


def cuts_from_json(text: str) -> tuple[list[str], CutSet]:
    data = json.loads(text)
    return [d["attribute"] for d in data], [np.array(d["cuts"], dtype=float) for d in data]

