import datetime as dt
import json

import numpy as np
import pytest

from rufmine.cli import main
from rufmine.extraction import rules_from_json, rules_from_text
from rufmine.features import PriceSeries, write_prices
from rufmine.fuzzy import encoding_from_json
from rufmine.metrics import MetricsReport
from rufmine.network import ModularNetwork
from rufmine.pipeline import (ManifestError, PhaseError, PipelineConfig, load_config, parse_config,
                              read_manifest, run_phase, run_pipeline)
from rufmine.rough import rules_from_text as dep_from_text
from rufmine.table import cuts_from_json, read_table

ARTIFACTS = ["decision_table.csv", "cuts.json", "dependency_rules.txt", "network.json",
             "evolution_log.csv", "rules.txt", "rules.json", "metrics.json", "manifest.json"]


@pytest.fixture(scope="module")
def run_s(tmp_path_factory):
    out = tmp_path_factory.mktemp("s")
    return run_pipeline(load_config(None, seed=2), out), out


def test_all_artifacts_exist_and_parse(run_s):
    _, out = run_s
    for name in ARTIFACTS:
        assert (out / name).is_file(), name
    assert not (out / ".partial").exists()
    read_table(out / "decision_table.csv")
    cuts_from_json((out / "cuts.json").read_text())
    assert dep_from_text((out / "dependency_rules.txt").read_text())
    net = ModularNetwork.from_dict(json.loads((out / "network.json").read_text()))
    encoding_from_json(json.dumps(json.loads((out / "network.json").read_text())["fuzzy"]))
    assert (out / "evolution_log.csv").read_text().startswith("generation,best_f,mean_f,best_links")
    assert rules_from_text((out / "rules.txt").read_text()) is not None
    assert len(rules_from_json((out / "rules.json").read_text())) == \
        len((out / "rules.txt").read_text().splitlines())
    rep = MetricsReport.from_json((out / "metrics.json").read_text())
    assert rep.model == "S" and rep.links == net.links_present()
    assert rep.cpu_sec is None and not (out / "timing.json").exists()
    cfg, man = read_manifest(out)
    assert man["seed"] == 2 and "numpy" in man["versions"]


def test_same_seed_same_bytes(run_s, tmp_path):
    _, out = run_s
    run_pipeline(load_config(None, seed=2), tmp_path)
    for name in ("rules.txt", "metrics.json"):
        assert (tmp_path / name).read_bytes() == (out / name).read_bytes()


def test_manifest_tamper_detected(run_s, tmp_path):
    _, out = run_s
    man = json.loads((out / "manifest.json").read_text())
    man["config"]["generations"] = 7
    (tmp_path / "manifest.json").write_text(json.dumps(man))
    with pytest.raises(ManifestError):
        read_manifest(tmp_path)


def test_scaling_fitted_on_train_rows(run_s):
    st, out = run_s
    t = read_table(out / "decision_table.csv")
    split = json.loads((out / "split.json").read_text())
    tr = t.values[split["train"]]
    np.testing.assert_allclose(tr.min(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(tr.max(axis=0), 1.0, atol=1e-12)


def test_baseline_model_f(tmp_path):
    st = run_pipeline(load_config(None, model="F", bp_epochs=200), tmp_path)
    rep = json.loads((tmp_path / "metrics.json").read_text())
    assert rep["model"] == "F"
    assert (tmp_path / "evolution_log.csv").read_text().startswith("epoch,loss")
    assert st.cache["report"].links == rep["extra"]["links_possible"]


@pytest.mark.parametrize("model", ["O", "R", "FM"])
def test_other_models_run(model, tmp_path):
    run_pipeline(load_config(None, model=model, bp_epochs=100, generations=5, stage1_sweeps=2), tmp_path)
    rep = json.loads((tmp_path / "metrics.json").read_text())
    assert rep["model"] == model
    if model == "O":
        assert rep["fidelity"] is None and rep["rules"] == 0


def test_far_blobs_reach_full_training_fit(tmp_path):
    run_pipeline(load_config(None, synthetic_separation=6.0, seed=1), tmp_path)
    net = json.loads((tmp_path / "network.json").read_text())
    assert net["training"]["fitness"]["f1"] == 1.0


def test_indistinguishable_classes_near_chance(tmp_path):
    st = run_pipeline(load_config(None, synthetic_separation=0.0, seed=1), tmp_path)
    assert abs(st.cache["report"].network_accuracy - 100 / 6) < 8


def test_price_input(tmp_path):
    rng = np.random.default_rng(0)
    close = 100 * np.exp(np.cumsum(rng.normal(0, 0.01, 400)))
    dates = [dt.date(2001, 1, 1) + dt.timedelta(days=i) for i in range(400)]
    write_prices(PriceSeries(dates, close), tmp_path / "prices.csv")
    cfg = load_config(None, input=str(tmp_path / "prices.csv"), classes=3, split_fraction=0.5,
                      generations=5, stage1_sweeps=2)
    st = run_pipeline(cfg, tmp_path / "out")
    assert st.cache["report"].accuracy is not None


def test_phase_failure_leaves_marker(tmp_path):
    cfg = load_config(None, input=str(tmp_path / "missing.csv"))
    with pytest.raises(PhaseError) as err:
        run_pipeline(cfg, tmp_path)
    assert err.value.phase == "ingest" and err.value.exit_code == 10
    assert "ingest" in (tmp_path / ".partial").read_text()


def test_phase_needs_predecessors(tmp_path):
    with pytest.raises(PhaseError) as err:
        run_phase("extract", PipelineConfig(), tmp_path)
    assert err.value.phase == "extract"


def test_config_parsing(tmp_path):
    cfg = parse_config("""
        # comment
        classes = 3
        th = 0.4      ; trailing comment
        evolve_fuzzy = no
        model = F
    """)
    assert (cfg.classes, cfg.th_value(), cfg.evolve_fuzzy, cfg.model) == (3, 0.4, False, "F")
    assert parse_config("seed = 4", seed=9).seed == 9
    for bad in ("classes = 1", "window = 0", "th = 2", "nonsense = 1", "model = Z"):
        with pytest.raises(ValueError):
            parse_config(bad)


def test_config_digest_stable():
    assert PipelineConfig().digest() == PipelineConfig().digest()
    assert PipelineConfig().digest() != PipelineConfig(seed=1).digest()


def test_cli_phases_match_pipeline(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("generations = 10\nstage1_sweeps = 2\n")
    a, b = tmp_path / "a", tmp_path / "b"
    for phase in ("ingest", "discretize", "rules", "train", "extract", "evaluate"):
        assert main([phase, "--config", str(cfg), "--seed", "3", "--out", str(a)]) == 0
    assert main(["pipeline", "--config", str(cfg), "--seed", "3", "--out", str(b)]) == 0
    assert (a / "rules.txt").read_bytes() == (b / "rules.txt").read_bytes()
    assert (a / "metrics.json").read_bytes() == (b / "metrics.json").read_bytes()
    assert json.loads(capsys.readouterr().out.splitlines()[-1])["model"] == "S"


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("model = Q\n")
    assert main(["pipeline", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert main(["train", "--out", str(tmp_path / "empty")]) == 13
    assert "[train]" in capsys.readouterr().err


def test_cli_synth_and_bf(tmp_path, capsys):
    assert main(["synth", "--classes", "3", "--per-class", "4", "--out", str(tmp_path / "s.csv")]) == 0
    assert read_table(tmp_path / "s.csv").n_objects == 12
    assert main(["bf", "--mean1", "88.6", "--sd1", ".26", "--n1", "10",
                 "--mean2", "86.6", "--sd2", ".46", "--n2", "10"]) == 0
    assert capsys.readouterr().out.strip() == "11.9694"


def test_timing_written_separately(tmp_path):
    run_pipeline(load_config(None, timing=True, generations=3, stage1_sweeps=1), tmp_path)
    assert json.loads((tmp_path / "timing.json").read_text())["cpu_sec"] >= 0
    assert json.loads((tmp_path / "metrics.json").read_text())["cpu_sec"] is None
