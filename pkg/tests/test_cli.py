import json
import subprocess
import sys

import numpy as np
import pytest

from censtail.cli import main
from censtail.simulation import SCENARIOS, generate_censored


def _write_csv(path, z, delta):
    lines = ["z,delta"] + [f"{float(a)!r},{int(d)}" for a, d in zip(z, delta)]
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def uncensored_csv(tmp_path):
    rng = np.random.default_rng(0)
    return _write_csv(tmp_path / "unc.csv", rng.random(40) ** -0.5, np.ones(40, int))


@pytest.fixture
def censored_csv(tmp_path):
    s = generate_censored(SCENARIOS["frechet"].with_(n=300, seed=2))
    return _write_csv(tmp_path / "cens.csv", s.z, s.delta)


def _run(*argv):
    return main([str(a) for a in argv])


def test_censored_hill_equals_hill_on_uncensored(uncensored_csv, tmp_path):
    a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
    assert _run("estimate", uncensored_csv, "--family", "censored-hill", "-o", a) == 0
    assert _run("estimate", uncensored_csv, "--family", "hill-z", "-o", b) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = a.read_text().splitlines()
    assert rows[0] == "k\testimate\tdefined"
    assert len(rows) == 40


def test_missing_file_names_path(tmp_path, capsys):
    missing = tmp_path / "nope.csv"
    code = _run("estimate", missing)
    assert code == 2
    assert str(missing) in capsys.readouterr().err


def test_malformed_data_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("z,delta\n1.0,1\n-2.0,0\n")
    assert _run("estimate", bad) == 2
    assert "non-positive" in capsys.readouterr().err


def test_estimate_repeatable_bytes(censored_csv, tmp_path):
    outs = []
    for name in ("r1.tsv", "r2.tsv"):
        out = tmp_path / name
        assert _run("estimate", censored_csv, "--family", "br-worms-shrink", "--rho", -1,
                    "--rho", -2, "-o", out) == 0
        outs.append(out)
    assert outs[0].read_bytes() == outs[1].read_bytes()
    m1 = json.loads((tmp_path / "r1.tsv.manifest.json").read_text())
    m2 = json.loads((tmp_path / "r2.tsv.manifest.json").read_text())
    assert m1 == m2
    assert m1["subcommand"] == "estimate"
    assert len(m1["input_digest"]) == 64
    header, first = outs[0].read_text().splitlines()[:2]
    assert header == "estimator\tk\testimate\tdefined"
    assert first.startswith("br-worms-shrink:rho=-1,omega=1\t1\t")


def test_estimate_rho_sweep_default_grid(censored_csv, tmp_path):
    out = tmp_path / "sweep.tsv"
    assert _run("estimate", censored_csv, "--family", "ep", "--k-min", 10, "--k-max", 20,
                "-o", out) == 0
    rows = out.read_text().splitlines()[1:]
    assert len(rows) == 5 * 11
    assert len({r.split("\t")[0] for r in rows}) == 5


def test_km_uncensored_telescopes(uncensored_csv, capsys):
    assert _run("km", uncensored_csv) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "rank\tz\tsurvival"
    surv = [float(r.split("\t")[2]) for r in out[1:]]
    n = len(surv)
    np.testing.assert_allclose(surv, [(n - i) / n for i in range(1, n + 1)], rtol=1e-12, atol=0)
    assert surv[-1] == 0.0


def test_bootstrap_single_replicate_zero_width(censored_csv, tmp_path):
    out = tmp_path / "ci.txt"
    assert _run("bootstrap-ci", censored_csv, "--N", 1, "--alpha", 0.1, "--k-mode", "fixed",
                "-o", out) == 0
    rec = json.loads(out.read_text().splitlines()[-1])
    assert rec["lower"] == rec["upper"]
    assert rec["k1"] == rec["k2"] == 15
    man = json.loads((tmp_path / "ci.txt.manifest.json").read_text())
    assert man["config"]["n_boot"] == 1 and man["seed"] == 0


def test_bootstrap_manifest_equality_means_identical_output(censored_csv, tmp_path):
    outs = []
    for name in ("x", "y"):
        out = tmp_path / name
        assert _run("bootstrap-ci", censored_csv, "--N", 30, "--k-mode", "fixed", "--k1", 20,
                    "--k2", 20, "--seed", 4, "--threads", 3 if name == "x" else 1, "-o", out) == 0
        outs.append(out)
    assert outs[0].read_bytes() == outs[1].read_bytes()


def test_simulate_repeatable(tmp_path):
    outs = []
    for name in ("s1.tsv", "s2.tsv"):
        out = tmp_path / name
        assert _run("simulate", "--scenario", "frechet", "--reps", 10, "--seed", 7,
                    "--n", 100, "-o", out) == 0
        outs.append(out)
    assert outs[0].read_bytes() == outs[1].read_bytes()
    rows = outs[0].read_text().splitlines()
    assert rows[0] == "estimator\tk\tbias\trmse\tdefined_count"
    assert len(rows) == 1 + 5 * 10


def test_simulate_scenario_file(tmp_path):
    spec = tmp_path / "s.ini"
    spec.write_text("[scenario]\npreset = burr-light\nn = 120\nreplications = 4\n"
                    "estimators = worms\nk_grid = 10,20\n")
    out = tmp_path / "t.tsv"
    assert _run("simulate", "--scenario-file", spec, "-o", out) == 0
    assert len(out.read_text().splitlines()) == 3


def test_simulate_coverage_mode(tmp_path):
    out = tmp_path / "cov.json"
    assert _run("simulate", "--scenario", "frechet", "--mode", "coverage", "--datasets", 3,
                "--n", 200, "--N", 10, "--k-mode", "fixed", "--seed", 1, "-o", out) == 0
    rep = json.loads(out.read_text())
    assert rep["datasets"] == 3
    assert 0.0 <= rep["coverage"] <= 1.0


def test_usage_errors(censored_csv, capsys):
    with pytest.raises(SystemExit) as exc:
        _run("estimate")
    assert exc.value.code == 1
    assert _run("estimate", censored_csv, "--family", "worms", "--rho", -1) == 1
    assert _run("simulate") == 1
    assert _run("estimate", censored_csv, "--k-min", 0) == 1


def test_numeric_error_exit_code(censored_csv):
    assert _run("bootstrap-ci", censored_csv, "--epsilon", 1e-300, "--N", 5) == 3


def test_console_script_entry_point(uncensored_csv):
    proc = subprocess.run([sys.executable, "-m", "censtail.cli", "km", str(uncensored_csv)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("rank\tz\tsurvival\n")
    assert json.loads(proc.stderr)["subcommand"] == "km"
