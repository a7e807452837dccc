"""End-to-end command line tests (in-process via cli.main)."""

import json
import math

import numpy as np
import pytest

from polylink.cli import main
from polylink.experiment import read_rows
from polylink.thresholds import compute_thresholds


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_limit_square(capsys):
    code, out, _ = run(capsys, "limit", "--shape", "hypercube", "--dim", "2", "--beta", "0")
    assert code == 0
    payload = json.loads(out)
    assert payload["constant"] == pytest.approx(1.0 / math.pi, rel=1e-13)
    assert payload["normalization"] == "per log n"
    assert len(payload["per_face"]) == 9


def test_limit_forms_agree(capsys):
    code, general, _ = run(capsys, "limit", "--shape", "hypercube", "--dim", "2",
                           "--beta", "1.5")
    assert code == 0
    code, special, _ = run(capsys, "limit", "--shape", "hypercube", "--dim", "2",
                           "--beta", "1.5", "--form", "hypercube")
    assert code == 0
    a, b = json.loads(general), json.loads(special)
    assert a["constant"] == pytest.approx(b["constant"], rel=1e-12)
    assert a["argmax_faces"] == b["argmax_faces"]


def test_limit_writes_file(tmp_path, capsys):
    out_file = tmp_path / "limit.json"
    code, out, _ = run(capsys, "limit", "--shape", "regular_polygon", "--sides", "6",
                       "--beta", "inf", "--output", str(out_file))
    assert code == 0 and out == ""
    payload = json.loads(out_file.read_text())
    assert payload["beta"] == "inf"
    assert payload["normalization"] == "per k(n)"


def test_limit_with_polytope_file_and_density(tmp_path, capsys):
    spec = tmp_path / "poly.json"
    spec.write_text(json.dumps({"shape": "hypercube", "dim": 2}))
    dens = json.dumps({"kind": "product", "factors": [[0.5, 1.0], [0.5, 1.0]]})
    code, out, _ = run(capsys, "limit", "--polytope", str(spec), "--density", dens,
                       "--beta", "1")
    assert code == 0
    payload = json.loads(out)
    assert payload["constant"] == pytest.approx(
        2.3576766739458987 / ((math.pi / 2) * 0.25), rel=1e-12)


def test_simulate(capsys):
    code, out, _ = run(capsys, "simulate", "--shape", "hypercube", "--dim", "2",
                       "--n", "200", "--k", "2", "--seed", "3")
    assert code == 0
    rep = json.loads(out)
    assert rep["n"] == 200 and rep["k"] == 2 and rep["seed"] == 3
    assert 0.0 < rep["L"] <= rep["M"]


def test_simulate_l_only(capsys):
    code, out, _ = run(capsys, "simulate", "--shape", "hypercube", "--dim", "2",
                       "--n", "100", "--k", "1", "--outputs", "L")
    assert code == 0
    assert json.loads(out)["M"] is None


def test_simulate_from_points_file(tmp_path, capsys):
    rng = np.random.default_rng(0)
    pts = rng.random((60, 2))
    f = tmp_path / "pts.csv"
    np.savetxt(f, pts, delimiter=",")
    code, out, _ = run(capsys, "simulate", "--points", str(f), "--k", "1")
    assert code == 0
    rep = json.loads(out)
    direct = compute_thresholds(np.loadtxt(f, delimiter=",", ndmin=2), 1)
    assert rep["L"] == direct.L
    assert rep["M"] == direct.M
    assert rep["source"].startswith("file:")


def test_simulate_needs_n_or_points(capsys):
    code, _, err = run(capsys, "simulate", "--shape", "hypercube", "--dim", "2", "--k", "1")
    assert code == 1
    assert "error" in err


def test_faces_cube(capsys):
    code, out, _ = run(capsys, "faces", "--shape", "hypercube", "--dim", "3")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "id,dimension,vertex_ids,angular_volume"
    assert len(lines) == 28  # header + 27 faces
    facet_rhos = {float(ln.split(",")[3]) for ln in lines[1:]
                  if ln.split(",")[1] == "2"}
    assert facet_rhos == {2.0 * math.pi / 3.0}


def test_converge_to_file_and_plots(tmp_path, capsys):
    out_csv = tmp_path / "run.csv"
    code, out, _ = run(capsys, "converge", "--shape", "hypercube", "--dim", "2",
                       "--k", "1", "--n-values", "40,60", "--trials", "2",
                       "--seed", "5", "--output", str(out_csv), "--plot")
    assert code == 0
    rows = read_rows(str(out_csv))
    assert len(rows) == 4
    assert all(r["L"] <= r["M"] for r in rows)
    for suffix in ("convergence", "distribution", "ratio"):
        assert (tmp_path / f"run_{suffix}.png").exists()
    assert str(out_csv) in out


def test_converge_stdout(capsys):
    code, out, _ = run(capsys, "converge", "--shape", "hypercube", "--dim", "2",
                       "--k", "1", "--n-values", "40", "--trials", "2")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("n,trial,seed,k,L,M")
    assert len(lines) == 3


def test_converge_with_config_file(tmp_path, capsys):
    cfg = {
        "polytope": {"shape": "hypercube", "dim": 2},
        "density": {"kind": "uniform"},
        "k_rule": {"kind": "fixed", "k": 1},
        "n_values": [30],
        "trials": 2,
        "master_seed": 4,
    }
    f = tmp_path / "cfg.json"
    f.write_text(json.dumps(cfg))
    out_csv = tmp_path / "cfg_run.csv"
    code, _, _ = run(capsys, "converge", "--config", str(f), "--output", str(out_csv))
    assert code == 0
    assert len(read_rows(str(out_csv))) == 2


def test_converge_plot_requires_output(capsys):
    code, _, err = run(capsys, "converge", "--shape", "hypercube", "--dim", "2",
                       "--k", "1", "--n-values", "30", "--trials", "1", "--plot")
    assert code == 1
    assert "--output" in err


def test_converge_needs_exactly_one_k_rule(capsys):
    code, _, err = run(capsys, "converge", "--shape", "hypercube", "--dim", "2",
                       "--n-values", "30", "--trials", "1")
    assert code == 1 and "exactly one" in err
    code, _, err = run(capsys, "converge", "--shape", "hypercube", "--dim", "2",
                       "--k", "1", "--beta-log", "0.5", "--n-values", "30")
    assert code == 1 and "exactly one" in err


def test_report_renders_figures(tmp_path, capsys):
    out_csv = tmp_path / "conv.csv"
    code, _, _ = run(capsys, "converge", "--shape", "hypercube", "--dim", "2",
                     "--k", "1", "--n-values", "40,60", "--trials", "2",
                     "--output", str(out_csv))
    assert code == 0
    figs = tmp_path / "figs"
    code, out, _ = run(capsys, "report", "--csv", str(out_csv),
                       "--outdir", str(figs), "--normalization", "k")
    assert code == 0
    written = [ln.split(" ", 1)[1] for ln in out.strip().splitlines()]
    assert len(written) == 3
    for p in written:
        assert p.startswith(str(figs))
    import pathlib
    for p in written:
        assert pathlib.Path(p).stat().st_size > 0


def test_usage_errors_exit_with_two(capsys):
    assert run(capsys, "bogus")[0] == 2
    assert run(capsys, "limit", "--no-such-flag")[0] == 2
    assert run(capsys, "simulate", "--shape", "hypercube", "--dim", "2", "--n", "10")[0] == 2
    assert run(capsys)[0] == 2


def test_runtime_errors_exit_with_one(capsys):
    code, _, err = run(capsys, "limit", "--shape", "box")  # missing --sides
    assert code == 1
    assert err.startswith("error:")
    code, _, _ = run(capsys, "report", "--csv", "/nonexistent/never.csv")
    assert code == 1


def test_help_exits_zero(capsys):
    assert run(capsys, "--help")[0] == 0
    assert run(capsys, "limit", "--help")[0] == 0
