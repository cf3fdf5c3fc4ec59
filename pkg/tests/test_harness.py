import csv
import subprocess
import sys

import numpy as np
import pytest

from activeris import harness
from activeris.capacity import SelfCheckError, estimate_from_samples
from activeris.harness import (
    CSV_HEADER,
    SweepSpec,
    load_scenarios,
    main,
    parse_grid,
    run_single,
    run_sweep,
)
from activeris.params import CONTINUOUS, ConfigError


@pytest.fixture
def write_config(tmp_path, default_config_path):
    def write(extra: str = "", name: str = "link.cfg"):
        path = tmp_path / name
        path.write_text(default_config_path.read_text() + "\n" + extra)
        return path

    return write


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_parse_grid_range_inclusive():
    values = parse_grid("-20:30:2", "rho_db")
    assert len(values) == 26
    assert values[0] == -20 and values[-1] == 30


def test_parse_grid_lists():
    assert parse_grid("1, 2,continuous", "quant_bits") == [1, 2, CONTINUOUS]
    assert parse_grid("16:64:16", "num_elements") == [16, 32, 48, 64]
    assert parse_grid("0.5,1.5", "beta") == [0.5, 1.5]


@pytest.mark.parametrize("text, param", [("1:2", "rho_db"), ("5:1:1", "rho_db"), ("a,b", "beta"), ("1.5", "num_elements"), ("0:1:0", "beta")])
def test_parse_grid_errors(text, param):
    with pytest.raises(ConfigError):
        parse_grid(text, param)


def test_sweep_spec_validation():
    with pytest.raises(ConfigError):
        SweepSpec("frequency", [1.0])
    with pytest.raises(ConfigError):
        SweepSpec("rho_db", [])


def test_load_scenarios_preset_and_file(tmp_path):
    assert [n for n, _ in load_scenarios("standard")] == [
        "b2_misaligned",
        "continuous_misaligned",
        "b2_aligned",
        "continuous_aligned",
    ]
    path = tmp_path / "sc.ini"
    path.write_text("[coarse]\nquant_bits = 1\n\n[fine]\nquant_bits = 4  # comment\nmisalignment = disabled\n")
    assert load_scenarios(str(path)) == [
        ("coarse", {"quant_bits": "1"}),
        ("fine", {"quant_bits": "4", "misalignment": "disabled"}),
    ]
    with pytest.raises(ConfigError):
        load_scenarios(str(tmp_path / "missing.ini"))


def test_run_single_defaults(default_config_path):
    est, report = run_single(default_config_path, seed=1, n_samples=20_000)
    assert np.isfinite(est.mean_bits) and est.mean_bits > 0
    assert est.ci_low < est.mean_bits < est.ci_high
    for needle in ("propagation gain h_P", "absorption gain h_A", "implied kappa", "SNR mode", "95% CI"):
        assert needle in report


def test_simulate_cli_zero_elements(write_config, capsys):
    path = write_config("num_elements = 0")
    assert main(["simulate", "--config", str(path), "--samples", "1000"]) == 0
    assert "ergodic capacity     : 0 bits/s/Hz" in capsys.readouterr().out


def test_simulate_cli_bad_noise_names_key(write_config, capsys):
    path = write_config("sigma_u_sq = 0")
    assert main(["simulate", "--config", str(path)]) == 2
    assert "sigma_u_sq" in capsys.readouterr().err


def test_simulate_cli_missing_file(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_simulate_cli_self_check_exit_code(default_config_path, monkeypatch):
    def broken(gammas):
        raise SelfCheckError("forced")

    monkeypatch.setattr(harness, "estimate_from_samples", broken)
    assert main(["simulate", "--config", str(default_config_path), "--samples", "200"]) == 3


def test_physical_config_runs(repo_root, capsys):
    assert main(["simulate", "--config", str(repo_root / "configs" / "physical.cfg"), "--samples", "2000"]) == 0
    assert "physical" in capsys.readouterr().out


def test_default_sweep_shape(default_config_path, tmp_path):
    out = tmp_path / "capacity_vs_rho.csv"
    rc = main(["sweep", "--config", str(default_config_path), "--output", str(out), "--samples", "500", "--seed", "9"])
    assert rc == 0
    rows = read_rows(out)
    assert rows[0] == CSV_HEADER
    body = rows[1:]
    assert len(body) == 104
    assert {r[0] for r in body} == {n for n, _ in harness.SCENARIO_PRESETS["standard"]}
    assert all(r[1] == "rho_db" and r[7] == "500" and r[8] == "9" for r in body)
    # 9 significant digits
    assert body[0][3] == format(float(body[0][3]), ".9g")
    assert [r[2] for r in body[:26]] == [str(v) for v in range(-20, 31, 2)]


def test_sweep_quant_bits_param(default_config_path, tmp_path):
    out = tmp_path / "bits.csv"
    spec = SweepSpec("quant_bits", [1, 2, CONTINUOUS], load_scenarios("base"))
    rows = run_sweep(default_config_path, spec, out, seed=3, n_samples=2000)
    caps = [r.estimate.mean_bits for r in rows]
    assert caps[0] < caps[1] < caps[2]
    assert read_rows(out)[3][2] == "continuous"


def test_sweep_rho_cache_is_bit_exact(default_config_path, tmp_path):
    # rescaled unit-rho samples equal freshly generated ones
    from activeris.capacity import snr_samples
    from activeris.params import load_config

    cfg = load_config(default_config_path)
    base = harness.read_config_mapping(default_config_path)
    spec = SweepSpec("rho_db", [-4.0, 7.0], [("x", {})])
    for _, value, gammas in harness.sweep_cells(base, spec, seed=2, n_samples=3000):
        assert np.array_equal(gammas, snr_samples(cfg.with_changes(rho_db=value), 3000, 2))


def test_sweep_failure_leaves_no_file(default_config_path, tmp_path, monkeypatch):
    calls = {"n": 0}

    def flaky(gammas):
        calls["n"] += 1
        if calls["n"] == 5:
            raise SelfCheckError("forced")
        return estimate_from_samples(gammas)

    monkeypatch.setattr(harness, "estimate_from_samples", flaky)
    out = tmp_path / "out.csv"
    rc = main(["sweep", "--config", str(default_config_path), "--output", str(out), "--samples", "200"])
    assert rc == 3
    assert list(tmp_path.iterdir()) == []


def test_sweep_bad_scenario_exit_2(default_config_path, tmp_path):
    sc = tmp_path / "sc.ini"
    sc.write_text("[bad]\nbeta = -1\n")
    out = tmp_path / "out.csv"
    rc = main(["sweep", "--config", str(default_config_path), "--scenarios", str(sc), "--output", str(out), "--samples", "200"])
    assert rc == 2
    assert not out.exists()


def test_module_entry_point(default_config_path):
    proc = subprocess.run(
        [sys.executable, "-m", "activeris", "simulate", "--config", str(default_config_path), "--samples", "500"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "ergodic capacity" in proc.stdout


def test_default_sweep_orderings(default_config_path, tmp_path):
    out = tmp_path / "capacity_vs_rho.csv"
    rows = run_sweep(default_config_path, SweepSpec("rho_db", parse_grid("-20:30:2", "rho_db")), out, seed=4, n_samples=3000)
    by = {}
    for r in rows:
        by.setdefault(r.scenario, []).append(r.estimate.mean_bits)
    for caps in by.values():
        assert np.all(np.diff(caps) > 0)
    best = np.array(by["continuous_aligned"])
    for name, caps in by.items():
        assert np.all(best >= np.array(caps)), name
