"""Rough-set machinery: discernibility, reducts, CNF/DNF and dependency rules.

Attribute subsets and clauses are handled as Python int bitmasks. Literals over
linguistic attributes are ints ``2*attr + negated``; attribute ``a`` names term
``"LMH"[a % 3]`` of feature ``a // 3 + 1``.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

MAX_REDUCT_ATTRIBUTES = 20
DEFAULT_MAX_LITERALS = 6
TH_FLOOR = 0.1


class AttributeBudgetError(ValueError):
    pass


class EmptyClassError(ValueError):
    pass


# --- bitmask helpers -------------------------------------------------------

def mask_of(attrs) -> int:
    m = 0
    for a in attrs:
        m |= 1 << int(a)
    return m


def bits_of(mask: int) -> frozenset:
    out = []
    a = 0
    while mask:
        if mask & 1:
            out.append(a)
        mask >>= 1
        a += 1
    return frozenset(out)


def absorb_masks(masks) -> list[int]:
    """Keep only masks that contain no other mask (minimal elements)."""
    uniq = sorted(set(masks), key=lambda m: (bin(m).count("1"), m))
    kept: list[int] = []
    for m in uniq:
        if not any(k & m == k for k in kept):
            kept.append(m)
    return kept


# --- discernibility --------------------------------------------------------

@dataclass
class DiscernibilityMatrix:
    """Lower-triangular matrix of attribute bitmasks; cell (i, j) defined for j < i."""

    cells: np.ndarray  # object array (n, n) of int masks, zero on/above diagonal

    @property
    def size(self) -> int:
        return self.cells.shape[0]

    def cell(self, i: int, j: int) -> frozenset:
        if i == j:
            return frozenset()
        if j > i:
            i, j = j, i
        return bits_of(int(self.cells[i, j]))

    def clauses(self) -> list[int]:
        n = self.size
        return [int(self.cells[i, j]) for i in range(n) for j in range(i) if self.cells[i, j]]


def _matrix_from_diff(diff: np.ndarray) -> DiscernibilityMatrix:
    # diff: (n, n, m) boolean
    n, _, m = diff.shape
    weights = [1 << a for a in range(m)]
    cells = np.zeros((n, n), dtype=object)
    for i in range(n):
        for j in range(i):
            row = diff[i, j]
            cells[i, j] = sum(w for w, d in zip(weights, row) if d)
    return DiscernibilityMatrix(cells)


def discernibility_matrix(values) -> DiscernibilityMatrix:
    """Cell (i, j) = attributes on which crisp objects i and j differ."""
    v = np.asarray(getattr(values, "values", values))
    return _matrix_from_diff(v[:, None, :] != v[None, :, :])


def _check_threshold(th):
    th = np.asarray(th, dtype=float)
    if np.any(th <= 0) or np.any(th >= 1):
        raise ValueError("threshold must lie in (0, 1)")
    return th


def fuzzy_discernibility_matrix(rows, th) -> DiscernibilityMatrix:
    """Cell (i, j) = attributes whose memberships differ by more than ``th``.

    ``th`` is a scalar or one threshold per attribute.
    """
    rows = np.asarray(rows, dtype=float)
    th = _check_threshold(th)
    return _matrix_from_diff(np.abs(rows[:, None, :] - rows[None, :, :]) > th)


# --- prime implicants of monotone CNF (reducts) -----------------------------

def minimal_hitting_sets(clauses) -> list[int]:
    """All prime implicants of a monotone CNF given as clause bitmasks."""
    clauses = absorb_masks(c for c in clauses if c)
    found: list[int] = []

    def rec(cls, chosen):
        # unit propagation
        while True:
            units = [c for c in cls if c & (c - 1) == 0]
            if not units:
                break
            for u in units:
                chosen |= u
            cls = [c for c in cls if not c & chosen]
        if not cls:
            found.append(chosen)
            return
        pivot = min(cls, key=lambda c: (bin(c).count("1"), c))
        excluded = 0
        for a in sorted(bits_of(pivot)):
            bit = 1 << a
            rest = []
            dead = False
            for c in cls:
                if c & bit:
                    continue
                c2 = c & ~excluded
                if not c2:
                    dead = True
                    break
                rest.append(c2)
            if not dead:
                rec(rest, chosen | bit)
            excluded |= bit

    rec(list(clauses), 0)
    return absorb_masks(found)


def reducts(table, max_attributes: int = MAX_REDUCT_ATTRIBUTES) -> list[frozenset]:
    """All reducts (minimal attribute sets preserving the object partition)."""
    values = np.asarray(getattr(table, "values", table))
    m = values.shape[1]
    if m > max_attributes:
        raise AttributeBudgetError(
            "%d attributes exceed the exact-reduct budget of %d; compute d-reducts on a "
            "per-class or feature-restricted table instead" % (m, max_attributes))
    # unique objects suffice: identical rows contribute empty cells
    uniq = np.unique(values, axis=0)
    clauses = discernibility_matrix(uniq).clauses()
    hs = minimal_hitting_sets(clauses)
    return sorted((bits_of(h) for h in hs), key=lambda s: (len(s), sorted(s)))


# --- literals and DNF -------------------------------------------------------

def lit(attr: int, negated: bool = False) -> int:
    return 2 * int(attr) + int(bool(negated))


def lit_attr(l: int) -> int:
    return l >> 1


def lit_negated(l: int) -> bool:
    return bool(l & 1)


def attr_name(a: int) -> str:
    return "%s_%d" % ("LMH"[a % 3], a // 3 + 1)


def lit_name(l: int) -> str:
    return ("!" if lit_negated(l) else "") + attr_name(lit_attr(l))


_NAME_RE = re.compile(r"^(!?)([LMH])_(\d+)$")


def parse_lit(s: str) -> int:
    m = _NAME_RE.match(s.strip())
    if not m:
        raise ValueError("bad literal %r" % s)
    a = 3 * (int(m.group(3)) - 1) + "LMH".index(m.group(2))
    return lit(a, m.group(1) == "!")


def _term_key(t):
    return (len(t), sorted(t))


def absorb_terms(terms) -> list[frozenset]:
    terms = sorted(set(terms), key=_term_key)
    kept: list[frozenset] = []
    for t in terms:
        if not any(k <= t for k in kept):
            kept.append(t)
    return kept


def cnf_to_dnf(clauses, max_literals: int | None = None) -> list[frozenset]:
    """Distribute a CNF (iterable of literal sets) into an absorbed DNF.

    Conjuncts longer than ``max_literals`` are dropped and the drop is logged;
    with ``max_literals=None`` the result is logically equivalent to the input.
    """
    cl = []
    for c in clauses:
        c = frozenset(c)
        if any((l ^ 1) in c for l in c):
            continue  # tautological clause
        cl.append(c)
    cl = absorb_terms(cl)
    terms = [frozenset()]
    capped = 0
    for clause in cl:
        new = set()
        for t in terms:
            if t & clause:
                new.add(t)
                continue
            for l in clause:
                if (l ^ 1) in t:
                    continue
                nt = t | {l}
                if max_literals is not None and len(nt) > max_literals:
                    capped += 1
                    continue
                new.add(nt)
        terms = absorb_terms(new)
        if not terms:
            break
    if capped:
        log.info("cnf_to_dnf: %d conjuncts exceeded %d literals and were dropped", capped, max_literals)
    return terms


@dataclass(frozen=True)
class DnfFormula:
    conjuncts: tuple  # tuple of frozensets of literals, canonical order

    @classmethod
    def of(cls, terms) -> "DnfFormula":
        return cls(tuple(absorb_terms(frozenset(t) for t in terms)))

    def __len__(self):
        return len(self.conjuncts)

    def literals(self) -> frozenset:
        return frozenset().union(*self.conjuncts) if self.conjuncts else frozenset()

    def evaluate(self, truth) -> bool:
        """``truth`` maps attribute index -> bool (crisp)."""
        return any(all(bool(truth[lit_attr(l)]) != lit_negated(l) for l in t) for t in self.conjuncts)

    def format(self) -> str:
        if not self.conjuncts:
            return "FALSE"
        parts = []
        for t in self.conjuncts:
            if not t:
                parts.append("TRUE")
                continue
            names = [lit_name(l) for l in sorted(t)]
            s = " & ".join(names)
            parts.append("(%s)" % s if len(names) > 1 and len(self.conjuncts) > 1 else s)
        return " | ".join(parts)

    @classmethod
    def parse(cls, s: str) -> "DnfFormula":
        s = s.strip()
        if s == "FALSE":
            return cls(())
        terms = []
        for part in s.split("|"):
            part = part.strip().strip("()")
            if part == "TRUE":
                terms.append(frozenset())
            else:
                terms.append(frozenset(parse_lit(x) for x in part.split("&")))
        return cls.of(terms)


def crisp_satisfies(term, memberships: np.ndarray, crispness: float = 0.5) -> np.ndarray:
    """Rows of ``memberships`` (N x 3n) that satisfy a conjunct crisply."""
    m = np.atleast_2d(memberships)
    ok = np.ones(m.shape[0], dtype=bool)
    for l in term:
        col = m[:, lit_attr(l)] >= crispness
        ok &= ~col if lit_negated(l) else col
    return ok


# --- dependency rules ------------------------------------------------------

@dataclass(frozen=True)
class DependencyRule:
    cls: int
    formula: DnfFormula
    df: float

    def format(self) -> str:
        return "c%d <- %s ; df=%.3f" % (self.cls, self.formula.format(), self.df)

    @classmethod
    def parse(cls, line: str) -> "DependencyRule":
        m = re.match(r"^\s*c(\d+)\s*<-\s*(.*?)\s*;\s*df=([0-9.eE+-]+)\s*$", line)
        if not m:
            raise ValueError("bad dependency rule line %r" % line)
        return cls(int(m.group(1)), DnfFormula.parse(m.group(2)), float(m.group(3)))


def adaptive_threshold(class_table: np.ndarray) -> np.ndarray:
    """Per-attribute Th: half the largest within-class membership difference of the
    attribute's feature (L/M/H triple), floored at 0.1."""
    t = np.atleast_2d(np.asarray(class_table, dtype=float))
    span = t.max(axis=0) - t.min(axis=0)
    per_feature = span.reshape(-1, 3).max(axis=1)
    th = np.maximum(0.5 * per_feature, TH_FLOOR)
    return np.minimum(np.repeat(th, 3), 0.99)


def dependency_factor(per_class_tables, k: int, attrs=None, crispness: float = 0.5) -> float:
    """card(POS_k) / card(U_k) on the crisp (>= crispness) table restricted to ``attrs``."""
    allrows = np.vstack(per_class_tables)
    labels = np.concatenate([np.full(len(t), i) for i, t in enumerate(per_class_tables)])
    cols = sorted(attrs) if attrs is not None else list(range(allrows.shape[1]))
    crisp = allrows[:, cols] >= crispness
    keys = [r.tobytes() for r in crisp]
    blocks: dict = {}
    for key, lab in zip(keys, labels):
        blocks.setdefault(key, set()).add(int(lab))
    own = labels == k
    pos = sum(1 for key, o in zip(keys, own) if o and blocks[key] == {k})
    return pos / int(own.sum())


def object_dnf(per_class_tables, k: int, j: int, th_k, attrs=None,
               crispness: float = 0.5, max_literals=DEFAULT_MAX_LITERALS) -> list[frozenset] | None:
    """Per-object discernibility function of object ``j`` of class ``k`` in DNF.

    Clauses come from every object of the other classes; a clause keeps the
    discerning attributes that object ``j`` actually possesses (membership >=
    crispness). Returns None when nothing discerns the object.
    """
    tables = per_class_tables
    x = np.asarray(tables[k][j], dtype=float)
    n_attr = len(x)
    allowed = np.zeros(n_attr, dtype=bool)
    allowed[list(attrs) if attrs is not None else slice(None)] = True
    active = (x >= crispness) & allowed
    others = [np.asarray(t, dtype=float) for i, t in enumerate(tables) if i != k and len(t)]
    if not others:
        return [frozenset()]
    other = np.vstack(others)
    cells = (np.abs(other - x) > th_k) & active
    cells = np.unique(cells, axis=0)
    clauses = [frozenset(lit(a) for a in np.flatnonzero(row)) for row in cells if row.any()]
    if not clauses:
        return None
    return cnf_to_dnf(clauses, max_literals)


def dependency_rules(per_class_tables, th=None, subsets=None, labels=None,
                     crispness: float = 0.5, max_literals=DEFAULT_MAX_LITERALS) -> list[DependencyRule]:
    """One dependency rule per class (per attribute subset when ``subsets`` is given).

    ``per_class_tables[k]`` is the n_k x 3n membership table of class ``labels[k]``.
    ``th`` is None (adaptive), a scalar, or a per-attribute array.
    """
    tables = [np.atleast_2d(np.asarray(t, dtype=float)) for t in per_class_tables]
    labels = list(labels) if labels is not None else list(range(1, len(tables) + 1))
    if subsets is None:
        subsets = [None]
    rules = []
    for k, tab in enumerate(tables):
        if tab.shape[0] == 0 or tab.size == 0:
            raise EmptyClassError("class %s has no objects" % labels[k])
        th_k = adaptive_threshold(tab) if th is None else np.broadcast_to(
            _check_threshold(th), (tab.shape[1],))
        seen = set()
        for attrs in subsets:
            terms = []
            silent = 0
            for j in range(tab.shape[0]):
                dnf = object_dnf(tables, k, j, th_k, attrs, crispness, max_literals)
                if dnf is None:
                    silent += 1
                    continue
                terms.extend(dnf)
            if silent:
                log.info("class %s: %d objects not discernible by their own attributes", labels[k], silent)
            formula = DnfFormula.of(terms)
            if formula.conjuncts in seen:
                continue
            seen.add(formula.conjuncts)
            df = dependency_factor(tables, k, attrs, crispness)
            rules.append(DependencyRule(labels[k], formula, df))
    return rules


def prune_rule(rule: DependencyRule, per_class_tables, labels=None, crispness: float = 0.5,
               max_conjuncts: int = 2) -> DependencyRule:
    """Keep the few conjuncts that best cover the rule's own class.

    Greedy: each step adds the conjunct with the largest gain, i.e. newly covered
    own-class objects minus other-class objects it fires on; stops on
    non-positive gain. A rule always keeps at least one conjunct; an empty rule
    falls back to the single most class-specific literal.
    """
    tables = [np.atleast_2d(np.asarray(t, dtype=float)) for t in per_class_tables]
    labels = list(labels) if labels is not None else list(range(1, len(tables) + 1))
    k = labels.index(rule.cls)
    own = tables[k]
    other = np.vstack([t for i, t in enumerate(tables) if i != k]) if len(tables) > 1 else own[:0]
    terms = list(rule.formula.conjuncts)
    if not terms:
        diff = own.mean(axis=0) - (other.mean(axis=0) if len(other) else 0.0)
        a = int(np.argmax(diff))
        log.info("class %s: empty dependency rule, falling back to %s", rule.cls, attr_name(a))
        return DependencyRule(rule.cls, DnfFormula.of([{lit(a)}]), rule.df)
    sat_own = [crisp_satisfies(t, own, crispness) for t in terms]
    sat_oth = [int(crisp_satisfies(t, other, crispness).sum()) if len(other) else 0 for t in terms]
    covered = np.zeros(len(own), dtype=bool)
    chosen: list[int] = []
    while len(chosen) < max_conjuncts:
        best, best_gain = None, None
        for i in range(len(terms)):
            if i in chosen:
                continue
            gain = int((sat_own[i] & ~covered).sum()) - sat_oth[i]
            if best_gain is None or gain > best_gain:
                best, best_gain = i, gain
        if best is None or (best_gain <= 0 and chosen):
            break
        chosen.append(best)
        covered |= sat_own[best]
        if covered.all():
            break
    return DependencyRule(rule.cls, DnfFormula.of(terms[i] for i in chosen), rule.df)


def rules_to_text(rules) -> str:
    return "".join(r.format() + "\n" for r in rules)


def rules_from_text(text: str) -> list[DependencyRule]:
    return [DependencyRule.parse(line) for line in text.splitlines() if line.strip()]
