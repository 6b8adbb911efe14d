"""Decompositional rule extraction from a trained network and rule-based inference.

Each non-input unit is searched for minimal link subsets that force it on under
crisp inputs: chosen positive links at 1, chosen negative links at 0 (negated
literals), every other positive link at 0 and every other negative link at 1.
Conditions are then composed from the outputs back to the inputs.
"""
from __future__ import annotations

import itertools
import json
import logging
import re
from dataclasses import dataclass

import numpy as np

from .network import ModularNetwork
from .rough import lit, lit_attr, lit_name, lit_negated, parse_lit

log = logging.getLogger(__name__)

DEFAULT_MAX_ANTECEDENT = 5
DEFAULT_MAX_RULES = 64
DEFAULT_UNIT_BUDGET = 50_000


class EmptyNetworkError(ValueError):
    pass


@dataclass(frozen=True)
class WeightThresholds:
    p_mean: float | None
    p_threshold1: float | None
    p_threshold2: float | None
    n_mean: float | None
    n_threshold1: float | None
    n_threshold2: float | None


def _mean_or_none(a):
    return float(np.mean(a)) if len(a) else None


def thresholds_from_weights(w) -> WeightThresholds:
    w = np.asarray(w, dtype=float)
    pos, neg = w[w > 0], w[w < 0]
    pm, nm = _mean_or_none(pos), _mean_or_none(neg)
    pt1 = _mean_or_none(pos[pos < pm]) if pm is not None else None
    pt2 = _mean_or_none(pos[pos > pm]) if pm is not None else None
    # mirrored: threshold 1 is the weak (near-zero) side
    nt1 = _mean_or_none(neg[neg > nm]) if nm is not None else None
    nt2 = _mean_or_none(neg[neg < nm]) if nm is not None else None
    return WeightThresholds(pm, pt1, pt2, nm, nt1, nt2)


def compute_thresholds(net: ModularNetwork) -> WeightThresholds:
    """Step-1 statistics over the weights of present links."""
    w = np.concatenate([x[p] for x, p in zip(net.weights, net.present)])
    if w.size == 0:
        raise EmptyNetworkError("network has no present links")
    return thresholds_from_weights(w)


@dataclass(frozen=True)
class ExtractedRule:
    cls: int
    antecedent: frozenset
    cf: float

    def __post_init__(self):
        if not self.antecedent:
            raise ValueError("rule antecedent must be nonempty")

    def literals(self) -> list[int]:
        return sorted(self.antecedent)

    def fires(self, memberships, crispness: float = 0.5) -> np.ndarray:
        m = np.atleast_2d(memberships)
        ok = np.ones(m.shape[0], dtype=bool)
        for l in self.antecedent:
            on = m[:, lit_attr(l)] >= crispness
            ok &= ~on if lit_negated(l) else on
        return ok

    def format(self) -> str:
        body = " & ".join(lit_name(l) for l in self.literals())
        return "c%d <- %s ; cf=%.3f" % (self.cls, body, self.cf)

    @classmethod
    def parse(cls, line: str) -> "ExtractedRule":
        m = re.match(r"^\s*c(\d+)\s*<-\s*(.*?)\s*;\s*cf=([0-9.eE+-]+)\s*$", line)
        if not m:
            raise ValueError("bad rule line %r" % line)
        ante = frozenset(parse_lit(x.strip()) for x in m.group(2).split("&"))
        return cls(int(m.group(1)), ante, float(m.group(3)))

    def to_dict(self) -> dict:
        lits = [{"feature": lit_attr(l) // 3 + 1, "term": "LMH"[lit_attr(l) % 3],
                 "negated": lit_negated(l)} for l in self.literals()]
        return {"class": self.cls, "antecedent": lits, "cf": round(float(self.cf), 12)}

    @classmethod
    def from_dict(cls, d: dict) -> "ExtractedRule":
        ante = frozenset(lit(3 * (x["feature"] - 1) + "LMH".index(x["term"]), x["negated"])
                         for x in d["antecedent"])
        return cls(int(d["class"]), ante, float(d["cf"]))


# --- per-unit search ------------------------------------------------------------

@dataclass(frozen=True)
class UnitCondition:
    on: tuple    # source indices required on
    off: tuple   # source indices required off
    cf: float


def _candidates(w, present, th: WeightThresholds, allow_negated: bool):
    idx = np.flatnonzero(present)
    pos = [int(i) for i in idx if w[i] > 0 and (th.p_threshold1 is None or w[i] > th.p_threshold1)]
    neg = []
    if allow_negated:
        neg = [int(i) for i in idx if w[i] < 0 and (th.n_threshold1 is None or w[i] < th.n_threshold1)]
    return pos, neg


def _cf(s: float, theta: float) -> float:
    # a negative threshold would push the ratio above 1
    return min(1.0, (s - theta) / s)


def _cf_off(s: float, theta: float) -> float:
    return 1.0 if theta == 0 else min(1.0, (theta - s) / abs(theta))


def unit_conditions(w, present, theta, th: WeightThresholds, max_antecedent: int,
                    allow_negated: bool = True, budget: int = DEFAULT_UNIT_BUDGET,
                    unit: str = "", on: bool = True) -> list[UnitCondition]:
    """Minimal source subsets that force a unit on (``on=True``) or off.

    For the on case a strong positive link contributes a source that must be on
    and a strong negative link one that must be off; the off case swaps the
    roles. Sources left out take their least favourable value.
    """
    w = np.asarray(w, dtype=float)
    present = np.asarray(present, dtype=bool)
    neg_all = float(w[present & (w < 0)].sum())
    pos_all = float(w[present & (w > 0)].sum())
    pos, neg = _candidates(w, present, th, allow_negated)
    if on:
        cands = [(i, True) for i in pos] + [(i, False) for i in neg]
        base = neg_all
    else:
        cands = [(i, False) for i in pos] + [(i, True) for i in neg]
        base = pos_all
    if (on and base > theta) or (not on and base < theta):
        # settled regardless of the inputs
        cf = (1.0 if base <= 0 else _cf(base, theta)) if on else _cf_off(base, theta)
        return [UnitCondition((), (), cf)]
    found: list[frozenset] = []
    out = []
    tried = 0
    for size in range(1, max_antecedent + 1):
        for combo in itertools.combinations(cands, size):
            tried += 1
            if tried > budget:
                log.warning("unit %s: subset budget %d exhausted at size %d; search truncated",
                            unit, budget, size)
                return out
            key = frozenset(combo)
            if any(f <= key for f in found):
                continue
            # every chosen source moves the sum towards the wanted state by |w|
            gain = sum(abs(float(w[i])) for i, _ in combo)
            s = base + gain if on else base - gain
            if on and s > theta:
                found.append(key)
                out.append(UnitCondition(tuple(i for i, n in combo if n),
                                         tuple(i for i, n in combo if not n),
                                         1.0 if s <= 0 else _cf(s, theta)))
            elif not on and s < theta:
                found.append(key)
                out.append(UnitCondition(tuple(i for i, n in combo if n),
                                         tuple(i for i, n in combo if not n), _cf_off(s, theta)))
    return out


# --- composition ---------------------------------------------------------------

def _consistent(term) -> bool:
    attrs = {}
    for l in term:
        a = lit_attr(l)
        if attrs.setdefault(a, lit_negated(l)) != lit_negated(l):
            return False
    return True


def _absorb(rules: list[ExtractedRule]) -> list[ExtractedRule]:
    best: dict = {}
    for r in rules:
        key = (r.cls, r.antecedent)
        if key not in best or r.cf > best[key].cf:
            best[key] = r
    items = sorted(best.values(), key=lambda r: (r.cls, len(r.antecedent), sorted(r.antecedent), -r.cf))
    kept = []
    for r in items:
        if not any(k.cls == r.cls and k.antecedent <= r.antecedent for k in kept):
            kept.append(r)
    return kept


def extract_rules(net: ModularNetwork, th: WeightThresholds | None = None,
                  max_antecedent: int = DEFAULT_MAX_ANTECEDENT, max_rules: int = DEFAULT_MAX_RULES,
                  unit_budget: int = DEFAULT_UNIT_BUDGET) -> list[ExtractedRule]:
    """Network-level rules: output-unit conditions expanded through the hidden units."""
    if max_antecedent < 1:
        raise ValueError("max_antecedent must be >= 1")
    if th is None:
        th = compute_thresholds(net)
    L = net.n_layers
    memo: dict = {}

    def alternatives(h: int, j: int, on: bool = True):
        # conditions making unit j of layer h (h >= 1) on/off, as (literal set, cf)
        if (h, j, on) in memo:
            return memo[(h, j, on)]
        conds = unit_conditions(net.weights[h - 1][j], net.present[h - 1][j], net.biases[h - 1][j],
                                th, max_antecedent, budget=unit_budget,
                                unit="%d/%d" % (h, j), on=on)
        alts = []
        for c in conds:
            if h == 1:
                alts.append((frozenset([lit(i) for i in c.on] + [lit(i, True) for i in c.off]), c.cf))
                continue
            parts = [alternatives(h - 1, i, True) for i in c.on] + \
                    [alternatives(h - 1, i, False) for i in c.off]
            for pick in itertools.product(*parts):
                term = frozenset().union(*(p[0] for p in pick))
                if _consistent(term):
                    alts.append((term, min([c.cf] + [p[1] for p in pick])))
        memo[(h, j, on)] = alts
        return alts

    rules = []
    for j, k in enumerate(net.out_classes):
        for term, cf in alternatives(L - 1, j):
            if not term:
                log.warning("output for class %d is on for every input; no rule emitted", k)
                continue
            rules.append(ExtractedRule(int(k), term, float(cf)))
    rules = _absorb(rules)
    if len(rules) > max_rules:
        log.warning("%d rules extracted, keeping the %d with highest cf", len(rules), max_rules)
        keep = sorted(range(len(rules)), key=lambda i: (-rules[i].cf, i))[:max_rules]
        rules = [rules[i] for i in sorted(keep)]
    return rules


# --- inference ---------------------------------------------------------------------

NO_FIRE = 0


def infer_batch(rules, memberships, crispness: float = 0.5) -> np.ndarray:
    """Class of the strongest firing rule per pattern; NO_FIRE where nothing fires."""
    m = np.atleast_2d(np.asarray(memberships, dtype=float))
    out = np.full(m.shape[0], NO_FIRE, dtype=np.int64)
    best = np.full(m.shape[0], -np.inf)
    # lower class wins ties: visit rules by class, accept only strictly better cf
    for r in sorted(rules, key=lambda r: (r.cls, -r.cf)):
        f = r.fires(m, crispness) & (r.cf > best)
        out[f] = r.cls
        best[f] = r.cf
    return out


def infer(rules, memberships, crispness: float = 0.5):
    c = int(infer_batch(rules, np.asarray(memberships)[None, :], crispness)[0])
    return None if c == NO_FIRE else c


def rules_to_text(rules) -> str:
    return "".join(r.format() + "\n" for r in rules)


def rules_from_text(text: str) -> list[ExtractedRule]:
    return [ExtractedRule.parse(line) for line in text.splitlines() if line.strip()]


def rules_to_json(rules) -> str:
    return json.dumps({"rules": [r.to_dict() for r in rules]}, indent=1)


def rules_from_json(text: str) -> list[ExtractedRule]:
    return [ExtractedRule.from_dict(d) for d in json.loads(text)["rules"]]
