"""Convergence runs: schema, determinism, parallel equivalence, round trips."""

import math
import os

import pytest

from polylink.errors import ConfigurationError
from polylink.experiment import (
    CSV_COLUMNS,
    ExperimentConfig,
    KRule,
    format_row,
    read_rows,
    run_convergence_experiment,
)
from polylink.sampling import derive_seed


def _config(**overrides):
    base = dict(
        polytope={"shape": "hypercube", "dim": 2},
        density={"kind": "uniform"},
        k_rule=KRule("fixed", k=1),
        n_values=[50, 80],
        trials=3,
        master_seed=11,
        outputs=("L", "M"),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def test_k_rule_presets():
    assert KRule("fixed", k=3).k_of(1000) == 3
    rule = KRule("beta_log", beta=2.0)
    assert rule.k_of(1000) == math.ceil(2.0 * math.log(1000))
    assert rule.beta_mode().beta == 2.0
    pw = KRule("power", c=0.5, gamma=0.4)
    assert pw.k_of(10_000) == math.ceil(0.5 * 10_000 ** 0.4)
    assert pw.beta_mode().is_infinite
    assert KRule("fixed", k=1).beta_mode().beta == 0.0
    assert KRule.from_dict({"kind": "beta_log", "beta": 1.5}).beta == 1.5
    assert KRule.from_dict(rule) is rule
    round_trip = KRule.from_dict(pw.to_dict())
    assert round_trip == pw


def test_k_rule_validation():
    with pytest.raises(ConfigurationError):
        KRule("fixed", k=0)
    with pytest.raises(ConfigurationError):
        KRule("fixed")
    with pytest.raises(ConfigurationError):
        KRule("beta_log", beta=0.0)
    with pytest.raises(ConfigurationError):
        KRule("power", c=1.0, gamma=1.0)
    with pytest.raises(ConfigurationError):
        KRule("power", c=-1.0, gamma=0.5)
    with pytest.raises(ConfigurationError):
        KRule("sqrt")
    with pytest.raises(ConfigurationError):
        KRule.from_dict({"beta": 1.0})


def test_config_validation():
    with pytest.raises(ConfigurationError):
        _config(n_values=[]).validate()
    with pytest.raises(ConfigurationError):
        _config(n_values=[100, 100]).validate()
    with pytest.raises(ConfigurationError):
        _config(n_values=[80, 50]).validate()
    with pytest.raises(ConfigurationError):
        _config(n_values=[1, 50]).validate()
    with pytest.raises(ConfigurationError):
        _config(trials=0).validate()
    with pytest.raises(ConfigurationError):
        _config(outputs=()).validate()
    with pytest.raises(ConfigurationError):
        _config(outputs=("L", "Q")).validate()
    # k rule must stay below n on the whole grid
    with pytest.raises(ConfigurationError):
        _config(k_rule=KRule("fixed", k=60), n_values=[50, 80]).validate()
    _config().validate()


def test_config_json_round_trip(tmp_path):
    cfg = _config(output_path=str(tmp_path / "out.csv"))
    d = cfg.to_dict()
    back = ExperimentConfig.from_dict(d)
    assert back == cfg
    import json
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(d))
    assert ExperimentConfig.from_json_file(p) == cfg
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({"polytope": {"shape": "hypercube", "dim": 2}})


def test_run_shape_and_row_contents():
    cfg = _config()
    rows = run_convergence_experiment(cfg)
    assert len(rows) == 6  # 2 sizes x 3 trials
    for row in rows:
        assert set(row) == set(CSV_COLUMNS)
        assert row["k"] == 1
        assert 0.0 < row["L"] <= row["M"]
        assert row["seed"] == derive_seed(11, row["n"], row["trial"])
        d, n = 2, row["n"]
        assert row["nLd_log"] == pytest.approx(n * row["L"] ** d / math.log(n), rel=1e-15)
        assert row["nMd_log"] == pytest.approx(n * row["M"] ** d / math.log(n), rel=1e-15)
        assert row["nLd_k"] == pytest.approx(n * row["L"] ** d / row["k"], rel=1e-15)
        assert row["limit_const"] == pytest.approx(1.0 / math.pi, rel=1e-13)
    assert [(r["n"], r["trial"]) for r in rows] == \
        [(n, t) for n in (50, 80) for t in range(3)]


def test_repeat_runs_are_byte_identical(tmp_path):
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    run_convergence_experiment(_config(), csv_path=str(p1))
    run_convergence_experiment(_config(), csv_path=str(p2))
    assert p1.read_bytes() == p2.read_bytes()


def test_trial_prefix_is_independent_of_trial_count():
    rows3 = run_convergence_experiment(_config(trials=3))
    rows5 = run_convergence_experiment(_config(trials=5))
    by_key3 = {(r["n"], r["trial"]): r for r in rows3}
    by_key5 = {(r["n"], r["trial"]): r for r in rows5}
    for key, row in by_key3.items():
        assert by_key5[key] == row


def test_csv_round_trip_is_lossless(tmp_path):
    p = tmp_path / "run.csv"
    rows = run_convergence_experiment(_config(), csv_path=str(p))
    back = read_rows(str(p))
    assert back == rows
    header = p.read_text().splitlines()[0]
    assert header == ",".join(CSV_COLUMNS)


def test_outputs_subset_leaves_columns_empty(tmp_path):
    p = tmp_path / "lonly.csv"
    rows = run_convergence_experiment(_config(outputs=("L",)), csv_path=str(p))
    for row in rows:
        assert row["M"] is None and row["nMd_log"] is None and row["nMd_k"] is None
        assert row["L"] > 0.0
    line = format_row(rows[0])
    assert ",," in line  # empty M cells survive formatting
    back = read_rows(str(p))
    assert back[0]["M"] is None


def test_parallel_run_matches_sequential(tmp_path):
    seq = tmp_path / "seq.csv"
    par = tmp_path / "par.csv"
    run_convergence_experiment(_config(), csv_path=str(seq))
    old = os.environ.get("POLYLINK_THREADS")
    os.environ["POLYLINK_THREADS"] = "2"
    try:
        run_convergence_experiment(_config(), csv_path=str(par))
    finally:
        if old is None:
            del os.environ["POLYLINK_THREADS"]
        else:
            os.environ["POLYLINK_THREADS"] = old
    assert seq.read_bytes() == par.read_bytes()


def test_thread_env_validation():
    old = os.environ.get("POLYLINK_THREADS")
    os.environ["POLYLINK_THREADS"] = "two"
    try:
        with pytest.raises(ConfigurationError):
            run_convergence_experiment(_config())
    finally:
        if old is None:
            del os.environ["POLYLINK_THREADS"]
        else:
            os.environ["POLYLINK_THREADS"] = old


def test_beta_log_rule_end_to_end():
    cfg = _config(k_rule=KRule("beta_log", beta=0.8), n_values=[60], trials=2)
    rows = run_convergence_experiment(cfg)
    k = math.ceil(0.8 * math.log(60))
    for row in rows:
        assert row["k"] == k
        assert row["L"] <= row["M"]
