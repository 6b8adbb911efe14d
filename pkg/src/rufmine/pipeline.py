"""End-to-end orchestration: data, discretization, rules, training, extraction, metrics.

Every phase reads what it needs from the output directory, so phases can run
one at a time from the command line or all at once through :func:`run_pipeline`.
"""
from __future__ import annotations

import configparser
import hashlib
import json
import logging
import platform
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from ._accel import backend
from .evolution import GaConfig, evolve_modular, knowledge_network, log_to_csv
from .extraction import (extract_rules, infer_batch, rules_from_json, rules_to_json,
                         rules_to_text)
from .features import derive_features, make_synthetic, read_prices
from .fuzzy import (class_statistics, class_membership, encoding_from_json, encoding_to_json,
                    fuzzify, init_encoding, init_generators)
from .metrics import ConfusionMatrix, build_report, fidelity, uncovered
from .network import ModularNetwork, backprop_train, network_to_json, predict, random_network
from .rough import dependency_rules, prune_rule, reducts, rules_from_text, rules_to_text as dep_to_text
from .table import (DecisionTable, apply_cuts, complete_table, cuts_from_json, cuts_to_json,
                    minmax_apply, minmax_fit, read_table, rsbr_discretize, split_indices, write_table)

log = logging.getLogger(__name__)

PHASES = ("ingest", "discretize", "rules", "train", "extract", "evaluate")
EXIT_CODES = {"config": 2, "ingest": 10, "discretize": 11, "rules": 12, "train": 13,
              "extract": 14, "evaluate": 15}
MODELS = ("S", "F", "O", "R", "FM")
PARTIAL = ".partial"
SECTION = "rufmine"


class PhaseError(RuntimeError):
    def __init__(self, phase: str, message: str):
        super().__init__("[%s] %s" % (phase, message))
        self.phase = phase
        self.exit_code = EXIT_CODES.get(phase, 1)


class ManifestError(ValueError):
    pass


@dataclass
class PipelineConfig:
    input: str = ""
    synthetic_per_class: int = 100
    synthetic_separation: float = 2.0
    synthetic_seed: int = 0
    classes: int = 6
    window: int = 5
    horizon: int = 5
    split_fraction: float = 0.1
    seed: int = 0
    model: str = "S"
    completion: str = "drop"
    th: str = "adaptive"
    crispness: float = 0.5
    max_literals: int = 6
    prune_conjuncts: int = 2
    hidden_layers: int = 1
    population: int = 64
    generations: int = 100
    stage1_sweeps: int = 10
    crossover_prob: float = 0.7
    pmut_max: float = 0.4
    pmut_min: float = 0.01
    intra_divisor: float = 10.0
    alpha1: float = 0.9
    combination_cap: int = 256
    evolve_fuzzy: bool = True
    max_antecedent: int = 5
    max_rules: int = 64
    bp_epochs: int = 2000
    bp_rate: float = 2.0
    bp_decay: float = 1e-4
    bp_hidden: int = 0
    timing: bool = False

    def __post_init__(self):
        if self.window < 1 or self.horizon < 1:
            raise ValueError("window and horizon must be >= 1")
        if self.classes < 2:
            raise ValueError("need at least two classes")
        if self.model not in MODELS:
            raise ValueError("model must be one of %s" % ", ".join(MODELS))
        if not 0 < self.crispness < 1:
            raise ValueError("crispness must lie in (0, 1)")
        if self.th != "adaptive":
            v = float(self.th)
            if not 0 < v < 1:
                raise ValueError("th must be 'adaptive' or a number in (0, 1)")
        self.ga_config()

    def ga_config(self) -> GaConfig:
        return GaConfig(population=self.population, crossover_prob=self.crossover_prob,
                        pmut_max=self.pmut_max, pmut_min=self.pmut_min,
                        intra_divisor=self.intra_divisor, alpha1=self.alpha1,
                        alpha2=round(1.0 - self.alpha1, 12), stage1_sweeps=self.stage1_sweeps,
                        generations=self.generations, combination_cap=self.combination_cap,
                        evolve_fuzzy=self.evolve_fuzzy)

    def th_value(self):
        return None if self.th == "adaptive" else float(self.th)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def canonical(self) -> str:
        return "".join("%s = %s\n" % (k, _fmt(v)) for k, v in sorted(self.as_dict().items()))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def replace(self, **kw) -> "PipelineConfig":
        d = self.as_dict()
        d.update(kw)
        return PipelineConfig(**d)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _coerce(name: str, raw: str, kind):
    raw = raw.strip()
    if kind is bool or kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError("%s: expected a boolean, got %r" % (name, raw))
    if kind in (int, "int"):
        return int(raw)
    if kind in (float, "float"):
        return float(raw)
    return raw.strip('"').strip("'")


def parse_config(text: str, **overrides) -> PipelineConfig:
    """Flat ``key = value`` lines; ``#`` and ``;`` start comments."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.read_string("[%s]\n%s" % (SECTION, text))
    kinds = {f.name: f.type for f in fields(PipelineConfig)}
    values = {}
    for key, raw in cp[SECTION].items():
        if key not in kinds:
            raise ValueError("unknown config key %r" % key)
        values[key] = _coerce(key, raw, kinds[key])
    values.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineConfig(**values)


def load_config(path=None, **overrides) -> PipelineConfig:
    text = Path(path).read_text() if path else ""
    return parse_config(text, **overrides)


# --- artifact helpers ------------------------------------------------------------

def _write(path: Path, text: str) -> None:
    path.write_text(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=1) + "\n"


def _versions() -> dict:
    import numba
    import scipy
    return {"rufmine": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "numba": numba.__version__}


def write_manifest(cfg: PipelineConfig, out: Path) -> None:
    _write(out / "manifest.json", _json({
        "config": cfg.as_dict(), "config_hash": cfg.digest(), "seed": cfg.seed,
        "model": cfg.model, "versions": _versions(), "backend": backend()}))


def read_manifest(out) -> tuple[PipelineConfig, dict]:
    """Load a run manifest and verify the recorded configuration hash."""
    data = json.loads((Path(out) / "manifest.json").read_text())
    cfg = PipelineConfig(**data["config"])
    if cfg.digest() != data["config_hash"]:
        raise ManifestError("config hash mismatch: manifest was edited or is corrupt")
    return cfg, data


# --- run state -----------------------------------------------------------------

@dataclass
class RunState:
    cfg: PipelineConfig
    out: Path
    cache: dict = field(default_factory=dict)

    def path(self, name: str) -> Path:
        return self.out / name

    def need(self, key: str, phase: str):
        if key not in self.cache:
            loader = _LOADERS.get(key)
            if loader is None or not loader[0](self).exists():
                raise PhaseError(phase, "missing input %r; run the earlier phases first" % key)
            self.cache[key] = loader[1](self)
        return self.cache[key]


def _load_split(st: RunState):
    d = json.loads(st.path("split.json").read_text())
    return {k: np.asarray(v) for k, v in d.items()}


def _load_fuzzy(st: RunState):
    return encoding_from_json(st.path("fuzzy.json").read_text())


def _load_network(st: RunState):
    d = json.loads(st.path("network.json").read_text())
    net = ModularNetwork.from_dict(d)
    enc, gen = encoding_from_json(json.dumps(d["fuzzy"])) if d.get("fuzzy") else (None, None)
    return net, enc, gen


_LOADERS = {
    "table": (lambda s: s.path("decision_table.csv"), lambda s: read_table(s.path("decision_table.csv"))),
    "split": (lambda s: s.path("split.json"), _load_split),
    "cuts": (lambda s: s.path("cuts.json"), lambda s: cuts_from_json(s.path("cuts.json").read_text())[1]),
    "dep_rules": (lambda s: s.path("dependency_rules.txt"),
                  lambda s: rules_from_text(s.path("dependency_rules.txt").read_text())),
    "fuzzy": (lambda s: s.path("fuzzy.json"), _load_fuzzy),
    "network": (lambda s: s.path("network.json"), _load_network),
    "rules": (lambda s: s.path("rules.json"), lambda s: rules_from_json(s.path("rules.json").read_text())),
}


def _train_test(st: RunState, phase: str):
    t = st.need("table", phase)
    sp = st.need("split", phase)
    return t.subset(sp["train"]), t.subset(sp["test"])


# --- phases -----------------------------------------------------------------------

def phase_ingest(st: RunState) -> None:
    """Build the decision table, split it and scale it with train-only statistics."""
    cfg = st.cfg
    if cfg.input:
        series = read_prices(cfg.input)
        raw = derive_features(series, cfg.window, cfg.horizon, cfg.classes, scale=False)
    else:
        raw = make_synthetic(cfg.synthetic_per_class, cfg.classes, cfg.synthetic_separation,
                             cfg.synthetic_seed)
    t = complete_table(raw, cfg.completion)
    tr, te = split_indices(t, cfg.split_fraction, cfg.seed)
    lo, hi = minmax_fit(t.values[tr])
    scaled = t.with_values(minmax_apply(t.values, lo, hi))
    write_table(scaled, st.path("decision_table.csv"), fmt="%.17g")
    split = {"train": tr.tolist(), "test": te.tolist(), "lo": lo.tolist(), "hi": hi.tolist()}
    _write(st.path("split.json"), _json(split))
    st.cache["table"] = read_table(st.path("decision_table.csv"))
    st.cache["split"] = {k: np.asarray(v) for k, v in split.items()}


def phase_discretize(st: RunState) -> None:
    train, _ = _train_test(st, "discretize")
    _, cuts, warnings = rsbr_discretize(train)
    for w in warnings[:5]:
        log.warning(w)
    _write(st.path("cuts.json"), cuts_to_json(cuts, train.attributes) + "\n")
    st.cache["cuts"] = cuts


def _attribute_subsets(train: DecisionTable, cuts) -> list:
    disc = apply_cuts(train, cuts)
    try:
        reds = reducts(disc.values)
    except Exception as exc:  # reduct budget exceeded and similar
        log.warning("reduct computation failed (%s); using all attributes", exc)
        return [None]
    subsets = [sorted(a for f in r for a in (3 * f, 3 * f + 1, 3 * f + 2)) for r in reds if r]
    return subsets or [None]


def phase_rules(st: RunState) -> None:
    cfg = st.cfg
    train, _ = _train_test(st, "rules")
    cuts = st.need("cuts", "rules")
    enc = init_encoding(train.values, train.attributes)
    stats = class_statistics(train.values, train.decision)
    gen = init_generators(train.values, train.decision, stats)
    mem = fuzzify(train.values, enc)
    classes = [int(c) for c in train.classes]
    tabs = [mem[train.decision == c] for c in classes]
    subsets = _attribute_subsets(train, cuts)
    rules = dependency_rules(tabs, th=cfg.th_value(), subsets=subsets, labels=classes,
                             crispness=cfg.crispness, max_literals=cfg.max_literals)
    if cfg.prune_conjuncts > 0:
        rules = [prune_rule(r, tabs, classes, cfg.crispness, cfg.prune_conjuncts) for r in rules]
    # pruning can make rules of one class coincide
    uniq = []
    for r in rules:
        if all((u.cls, u.formula) != (r.cls, r.formula) for u in uniq):
            uniq.append(r)
    _write(st.path("dependency_rules.txt"), dep_to_text(uniq))
    _write(st.path("fuzzy.json"), encoding_to_json(enc, gen) + "\n")
    st.cache["dep_rules"] = uniq
    st.cache["fuzzy"] = (enc, gen)


def _hidden_width(rules, classes) -> int:
    widths = {k: 0 for k in classes}
    for r in rules:
        widths[r.cls] = max(widths[r.cls], len(r.formula.conjuncts))
    return max(2, sum(widths.values()))


def phase_train(st: RunState) -> None:
    cfg = st.cfg
    train, _ = _train_test(st, "train")
    rules = st.need("dep_rules", "train")
    enc, gen = st.need("fuzzy", "train")
    classes = [int(c) for c in train.classes]
    rng = np.random.default_rng(cfg.seed)
    n = train.n_attributes
    H = cfg.bp_hidden or _hidden_width(rules, classes)
    log_text = ""
    if cfg.model in ("S", "FM"):
        subnets = None
        if cfg.model == "FM":
            per = max(1, H // len(classes))
            subnets = []
            for k in classes:
                s = random_network([3 * n, per, 1], rng, out_classes=[k])
                s.owners = [np.zeros(3 * n, dtype=int), np.full(per, k), np.array([k])]
                subnets.append(s)
        res = evolve_modular(rules, train.values, train.decision, enc, gen, cfg.ga_config(),
                             seed=cfg.seed, hidden_layers=cfg.hidden_layers, subnets=subnets)
        net, enc, gen = res.network, res.encoding, res.generators
        log_text = log_to_csv(res.log)
        extra = {"fitness": {"f1": res.fitness.f1, "f2": res.fitness.f2, "F": res.fitness.F},
                 "combinations": res.n_combinations}
    else:
        stats = class_statistics(train.values, train.decision)
        if cfg.model == "O":
            X = train.values
            T = (train.decision[:, None] == np.array(classes)[None, :]).astype(float)
            net0 = random_network([n, H, len(classes)], rng, out_classes=classes)
        else:
            X = fuzzify(train.values, enc)
            T = class_membership(train.values, stats, gen)
            if cfg.model == "F":
                net0 = random_network([3 * n, H, len(classes)], rng, out_classes=classes)
            else:  # R: knowledge-based start, remaining links small and random
                net0 = knowledge_network(rules, n, classes, rng)
                for h in range(net0.n_layers - 1):
                    off = ~net0.present[h]
                    net0.weights[h][off] = rng.uniform(-0.1, 0.1, int(off.sum()))
                    net0.present[h][:] = True
        net, losses = backprop_train(net0, X, T, cfg.bp_epochs, cfg.bp_rate, cfg.bp_decay)
        log_text = "epoch,loss\n" + "".join("%d,%.8f\n" % (i + 1, l) for i, l in enumerate(losses))
        extra = {"final_loss": losses[-1]}
    st.cache["trained"] = (net, enc, gen)
    _write(st.path("evolution_log.csv"), log_text)
    _write(st.path("network.json"), network_to_json(
        net, model=cfg.model, fuzzy=json.loads(encoding_to_json(enc, gen)), training=extra) + "\n")
    st.cache["network"] = (net, enc, gen)


def _inputs(model: str, values, enc):
    return values if model == "O" else fuzzify(values, enc)


def phase_extract(st: RunState) -> None:
    cfg = st.cfg
    net, enc, gen = st.need("network", "extract")
    t0 = time.perf_counter()
    rules = [] if cfg.model == "O" else extract_rules(net, max_antecedent=cfg.max_antecedent,
                                                      max_rules=cfg.max_rules)
    st.cache["extract_sec"] = time.perf_counter() - t0
    _write(st.path("rules.txt"), rules_to_text(rules))
    _write(st.path("rules.json"), rules_to_json(rules) + "\n")
    st.cache["rules"] = rules


def phase_evaluate(st: RunState):
    cfg = st.cfg
    train, test = _train_test(st, "evaluate")
    net, enc, gen = st.need("network", "evaluate")
    rules = st.need("rules", "evaluate")
    classes = [int(c) for c in np.unique(np.concatenate([train.decision, test.decision]))]
    Xte = _inputs(cfg.model, test.values, enc)
    Xtr = _inputs(cfg.model, train.values, enc)
    net_acc = 100.0 * float(np.mean(predict(net, Xte) == test.decision))
    train_acc = 100.0 * float(np.mean(predict(net, Xtr) == train.decision))
    if cfg.model == "O":
        pred = predict(net, Xte)
        fid = unc = None
    else:
        pred = infer_batch(rules, Xte, cfg.crispness) if rules else np.zeros(len(Xte), dtype=int)
        fid = fidelity(net, rules, Xte, cfg.crispness)
        unc = uncovered(rules, Xte, cfg.crispness)
    cm = ConfusionMatrix.from_labels(test.decision, pred, classes)
    cpu = st.cache.get("extract_sec")
    report = build_report(cfg.model, cm, fidelity_pct=fid, uncovered_pct=unc, rules=rules,
                          cpu_sec=None, network_accuracy=net_acc, train_accuracy=train_acc,
                          links=net.links_present())
    report.extra = {"links_possible": net.links_possible(), "n_train": int(train.n_objects),
                    "n_test": int(test.n_objects),
                    "confusion": cm.counts.tolist(), "no_fire": cm.no_fire.tolist()}
    _write(st.path("metrics.json"), report.to_json() + "\n")
    if cfg.timing and cpu is not None:
        _write(st.path("timing.json"), _json({"cpu_sec": round(cpu, 2)}))
    st.cache["report"] = report
    return report


PHASE_FUNCS = {"ingest": phase_ingest, "discretize": phase_discretize, "rules": phase_rules,
               "train": phase_train, "extract": phase_extract, "evaluate": phase_evaluate}


def run_phase(name: str, cfg: PipelineConfig, out, state: RunState | None = None):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    st = state or RunState(cfg, out)
    try:
        return PHASE_FUNCS[name](st)
    except PhaseError:
        raise
    except Exception as exc:
        raise PhaseError(name, "%s: %s" % (type(exc).__name__, exc)) from exc


def run_pipeline(cfg: PipelineConfig, out) -> RunState:
    """Run every phase in order. A ``.partial`` marker stays behind if a phase fails."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    marker = out / PARTIAL
    marker.write_text("running\n")
    st = RunState(cfg, out)
    for name in PHASES:
        try:
            run_phase(name, cfg, out, st)
        except PhaseError as err:
            marker.write_text("failed in phase %s: %s\n" % (err.phase, err))
            raise
    write_manifest(cfg, out)
    marker.unlink()
    return st


def run_repeated(cfg: PipelineConfig, seeds, out_root) -> list:
    """Run the pipeline once per seed; returns the metrics reports in seed order."""
    reports = []
    for s in seeds:
        st = run_pipeline(cfg.replace(seed=int(s)), Path(out_root) / ("seed%d" % s))
        reports.append(st.cache["report"])
    return reports


def summarize(reports, keys=("accuracy", "network_accuracy", "fidelity", "uncovered", "rules", "links")) -> dict:
    out = {}
    for k in keys:
        vals = [getattr(r, k) for r in reports if getattr(r, k) is not None]
        if vals:
            out[k] = {"mean": float(np.mean(vals)),
                      "sd": float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0}
    return out
