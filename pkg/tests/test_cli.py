import json
import math
import subprocess
import sys

import numpy as np
import pytest

from qsdsep import cli
from qsdsep.errors import NumericsError
from qsdsep.fpe import field_from_binary, field_from_csv
from qsdsep.sde import StepperConfig, simulate_trajectory, spec_rz

KL_MU2_5 = 0.351567707456


def run_cli(tmp_path, *args, name="run"):
    out = tmp_path / name
    rc = cli.main(["--out", str(out), *args])
    return rc, out


def manifest(out):
    with open(out / "manifest.json") as fh:
        return json.load(fh)


def read_csv(path):
    return np.genfromtxt(path, delimiter=",", names=True)


# ---------------------------------------------------------------------------
# Argument and config handling.

def test_help_exits_zero(capsys):
    assert cli.main(["--help"]) == 0
    assert "--experiment" in capsys.readouterr().out


def test_usage_errors_exit_one(capsys):
    assert cli.main(["--no-such-flag"]) == 1
    assert cli.main([]) == 1
    assert cli.main(["--experiment", "frobnicate"]) == 1


def test_flag_overrides_config_overrides_default(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# comment line\n"
        "\n"
        "n-traj = 7      # dashes normalize to underscores\n"
        "t_max = 1\n"
        "dt = 0.01\n"
    )
    rc, out = run_cli(tmp_path, "--experiment", "vn", "--config", str(cfg),
                      "--n-traj", "5", "--seed", "3")
    assert rc == 0
    params = manifest(out)["parameters"]
    assert params["n_traj"] == 5
    assert params["t_max"] == 1.0
    assert params["dt"] == 0.01
    assert params["alpha_z"] == 1.0


def test_config_file_errors(tmp_path, capsys):
    bad_key = tmp_path / "a.cfg"
    bad_key.write_text("frobnicate = 3\n")
    assert cli.main(["--experiment", "vn", "--config", str(bad_key)]) == 1
    assert "unknown key" in capsys.readouterr().err

    bad_value = tmp_path / "b.cfg"
    bad_value.write_text("n_traj = ten\n")
    assert cli.main(["--experiment", "vn", "--config", str(bad_value)]) == 1

    bad_line = tmp_path / "c.cfg"
    bad_line.write_text("just some words\n")
    assert cli.main(["--experiment", "vn", "--config", str(bad_line)]) == 1

    assert cli.main(["--experiment", "vn",
                     "--config", str(tmp_path / "missing.cfg")]) == 1


def test_invalid_parameters_exit_one(tmp_path):
    base = ["--experiment", "vn", "--out", str(tmp_path / "x")]
    assert cli.main(base + ["--dt", "-0.001"]) == 1
    assert cli.main(base + ["--mu", "0"]) == 1
    assert cli.main(base + ["--n-traj", "0"]) == 1
    assert cli.main(base + ["--t-max", "0"]) == 1
    assert cli.main(base + ["--threads", "0"]) == 1


def test_numerical_failure_exits_two(tmp_path, monkeypatch, capsys):
    def explode(out, seed, params):
        raise NumericsError("diverged")

    monkeypatch.setitem(cli.COMMANDS, "vn", explode)
    assert cli.main(["--experiment", "vn", "--out", str(tmp_path)]) == 2
    assert "numerical failure" in capsys.readouterr().err


def test_record_grid_validation(tmp_path):
    rc, _ = run_cli(tmp_path, "--experiment", "vn", "--n-traj", "2",
                    "--t-max", "1", "--record-dt", "0.0013")
    assert rc == 1
    # the two-channel ledger starts at fit_lo, which must sit on the grid
    rc, _ = run_cli(tmp_path, "--experiment", "entropy", "--alpha-x", "1",
                    "--n-traj", "12", "--t-max", "1", "--fit-lo", "0.50041")
    assert rc == 1


# ---------------------------------------------------------------------------
# trajectories

def test_trajectories_single_channel_output(tmp_path):
    args = ("--experiment", "trajectories", "--seed", "11",
            "--n-traj", "5", "--t-max", "1")
    rc, out = run_cli(tmp_path, *args, name="a")
    assert rc == 0
    lines = (out / "trajectories.csv").read_text().splitlines()
    assert lines[0] == "t,r_z,dW_z,trajectory_id"
    table = read_csv(out / "trajectories.csv")
    assert np.max(np.abs(table["r_z"])) <= 1.0
    assert set(table["trajectory_id"].astype(int)) == set(range(5))
    info = manifest(out)
    assert sorted(info["outputs"]) == ["manifest.json", "trajectories.csv"]

    # identical bytes for identical (config, seed), independent of threads
    rc, out_b = run_cli(tmp_path, *args, name="b")
    assert rc == 0
    assert (out / "trajectories.csv").read_bytes() \
        == (out_b / "trajectories.csv").read_bytes()
    assert (out / "manifest.json").read_bytes() \
        == (out_b / "manifest.json").read_bytes()
    rc, out_c = run_cli(tmp_path, *args, "--threads", "3", name="c")
    assert rc == 0
    assert (out / "trajectories.csv").read_bytes() \
        == (out_c / "trajectories.csv").read_bytes()


def test_trajectories_match_library_exactly(tmp_path):
    rc, out = run_cli(tmp_path, "--experiment", "trajectories", "--seed", "11",
                      "--n-traj", "2", "--t-max", "0.5")
    assert rc == 0
    table = read_csv(out / "trajectories.csv")
    rows = table["trajectory_id"].astype(int) == 1
    record = simulate_trajectory(spec_rz(1.0), 0.0,
                                 StepperConfig(dt=1e-3, t_max=0.5),
                                 seed=11, stream_index=1)
    # CSV carries full double precision: parsed floats are bitwise equal
    assert np.array_equal(table["r_z"][rows], record.states)


def test_trajectories_two_channel_purity(tmp_path):
    rc, out = run_cli(tmp_path, "--experiment", "trajectories", "--seed", "11",
                      "--alpha-x", "1", "--n-traj", "4", "--t-max", "1")
    assert rc == 0
    header = (out / "trajectories.csv").read_text().splitlines()[0]
    assert header == "t,r_x,r_z,dW_x,dW_z,trajectory_id"
    table = read_csv(out / "purity.csv")
    for j in range(4):
        rows = table["trajectory_id"].astype(int) == j
        purity = table["purity"][rows]
        assert abs(purity[0] - 0.5) < 1e-12
        assert purity[-1] > purity[0]
    assert manifest(out)["summary"]["mean_final_purity"] > 0.9


# ---------------------------------------------------------------------------
# fpe

def test_fpe_mass_conservation_and_roundtrip(tmp_path):
    rc, out = run_cli(tmp_path, "--experiment", "fpe", "--t-max", "1",
                      "--grid-n", "128")
    assert rc == 0
    mass = read_csv(out / "mass.csv")
    assert np.max(np.abs(mass["mass"] - 1.0)) < 1e-6
    field_csv = field_from_csv(out / "field.csv", kind="bounded")
    field_bin = field_from_binary(out / "field.bin")
    assert np.array_equal(field_csv.values, field_bin.values)
    summary = manifest(out)["summary"]
    assert summary["max_mass_defect"] < 1e-6
    # centred start splits toward the two boundaries evenly
    assert abs(summary["edge_mass_minus"] - 0.5 * summary["edge_mass"]) < 1e-9


def test_fpe_theta_needs_strengths(tmp_path):
    rc, _ = run_cli(tmp_path, "--experiment", "fpe", "--chart", "theta")
    assert rc == 1
    rc, out = run_cli(tmp_path, "--experiment", "fpe", "--chart", "theta",
                      "--mu", "1.2", "--t-max", "1", "--grid-n", "64",
                      name="ok")
    assert rc == 0
    assert manifest(out)["summary"]["max_mass_defect"] < 1e-9


def test_fpe_unknown_chart(tmp_path):
    rc, _ = run_cli(tmp_path, "--experiment", "fpe", "--chart", "psi")
    assert rc == 1


# ---------------------------------------------------------------------------
# entropy

def test_entropy_single_channel_rate(tmp_path):
    rc, out = run_cli(tmp_path, "--experiment", "entropy", "--seed", "2",
                      "--n-traj", "40", "--t-max", "2", "--dt", "2e-4")
    assert rc == 0
    summary = manifest(out)["summary"]
    assert 7.2 < summary["rate"] < 8.8
    assert summary["max_identity_defect"] < 1e-10
    assert summary["pdf_mode"] == "fpe"

    mean = read_csv(out / "mean_ledger.csv")
    assert mean.dtype.names == ("t", "mean_s_tot", "se_s_tot",
                                "mean_s_sys", "mean_s_meas")
    ledgers = read_csv(out / "ledgers.csv")
    assert set(ledgers["trajectory_id"].astype(int)) == set(range(4))
    rate_row = read_csv(out / "rate.csv")
    assert rate_row["rate"] == summary["rate"]
    assert rate_row["fit_lo"] == 1.0 and rate_row["fit_hi"] == 2.0


def test_entropy_two_channel_rate(tmp_path):
    rc, out = run_cli(tmp_path, "--experiment", "entropy", "--seed", "5",
                      "--alpha-x", "1", "--n-traj", "20", "--t-max", "2")
    assert rc == 0
    summary = manifest(out)["summary"]
    assert 16.2 < summary["rate"] < 19.8
    assert summary["pdf_mode"] == "asymptotic"
    assert summary["channels"] == 2
    mean = read_csv(out / "mean_ledger.csv")
    # the asymptotic pdf only covers the fit window, so the ledger starts there
    assert mean["t"][0] == 1.0


def test_entropy_two_channel_guards(tmp_path):
    rc, _ = run_cli(tmp_path, "--experiment", "entropy", "--alpha-x", "0.5",
                    "--n-traj", "12")
    assert rc == 1
    rc, _ = run_cli(tmp_path, "--experiment", "entropy", "--alpha-x", "1",
                    "--pdf-mode", "fpe", "--n-traj", "12")
    assert rc == 1
    rc, _ = run_cli(tmp_path, "--experiment", "entropy",
                    "--pdf-mode", "magic", "--n-traj", "12")
    assert rc == 1


# ---------------------------------------------------------------------------
# stationary

def test_stationary_tables(tmp_path):
    rc, out = run_cli(tmp_path, "--experiment", "stationary",
                      "--mu-list", "1,2.2360679774997896",
                      "--grid-n", "256")
    assert rc == 0
    table = read_csv(out / "stationary.csv")
    names = table.dtype.names
    assert names[0] == "theta" and len(names) == 3

    flat = table[names[1]]
    assert np.max(np.abs(flat - 1.0 / (2.0 * math.pi))) < 1e-13

    peaked = table[names[2]]
    theta = table["theta"]
    h = theta[1] - theta[0]
    assert abs(np.sum(peaked) * h - 1.0) < 1e-6
    for target in (-math.pi / 2.0, math.pi / 2.0):
        near = np.abs(theta - target) < 0.3
        assert np.max(peaked[near]) == np.max(peaked)

    moments = read_csv(out / "moments.csv")
    assert np.max(np.abs(moments["var_sum"] - 1.0)) < 1e-8
    assert manifest(out)["summary"]["max_var_sum_defect"] < 1e-8


def test_stationary_empty_mu_list(tmp_path):
    rc, _ = run_cli(tmp_path, "--experiment", "stationary", "--mu-list", " ")
    assert rc == 1


# ---------------------------------------------------------------------------
# quench

def test_quench_kl_table(tmp_path):
    rc, out = run_cli(tmp_path, "--experiment", "quench",
                      "--mu-list", "1,1.4142135623730951,2.2360679774997896")
    assert rc == 0
    table = read_csv(out / "quench.csv")
    assert abs(table["mean_dstot"][0]) < 1e-12
    assert np.max(np.abs(table["mean_dstot"]
                         - table["mean_dstot_inverse_mu"])) < 1e-8
    assert abs(table["mean_dstot"][2] - KL_MU2_5) < 1e-9


def test_quench_simulated_matches_kl(tmp_path):
    rc, out = run_cli(tmp_path, "--experiment", "quench", "--simulate", "1",
                      "--mu", "2.2360679774997896", "--n-traj", "400",
                      "--grid-n", "256", "--dt", "2e-3", "--seed", "22")
    assert rc == 0
    summary = manifest(out)["summary"]
    assert summary["sim_gap_in_se"] < 4.0
    assert abs(summary["kl_target"] - KL_MU2_5) < 1e-9


# ---------------------------------------------------------------------------
# vn

def test_vn_curves(tmp_path):
    rc, out = run_cli(tmp_path, "--experiment", "vn", "--seed", "9",
                      "--n-traj", "50", "--t-max", "4")
    assert rc == 0
    mean = read_csv(out / "vn_mean.csv")
    assert abs(mean["mean_s_vn"][0] - math.log(2.0)) < 1e-12
    assert mean["mean_s_vn"][-1] < 0.05
    # the unconditioned state stays maximally mixed up to sampling error
    assert np.max(np.abs(mean["s_vn_of_mean_state"] - math.log(2.0))) < 0.15

    curves = read_csv(out / "vn_curves.csv")
    assert set(curves["trajectory_id"].astype(int)) == set(range(4))
    assert len(curves) == 4 * len(mean)


def test_vn_pure_start_is_identically_zero(tmp_path):
    rc, out = run_cli(tmp_path, "--experiment", "vn", "--seed", "9",
                      "--n-traj", "3", "--t-max", "1", "--r0", "1")
    assert rc == 0
    mean = read_csv(out / "vn_mean.csv")
    assert np.max(np.abs(mean["mean_s_vn"])) == 0.0


# ---------------------------------------------------------------------------
# end-to-end through the interpreter

def test_console_entry_point(tmp_path):
    out = tmp_path / "sub"
    proc = subprocess.run(
        [sys.executable, "-m", "qsdsep.cli", "--experiment", "stationary",
         "--mu-list", "1", "--grid-n", "64", "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert (out / "manifest.json").exists()
    proc = subprocess.run(
        [sys.executable, "-m", "qsdsep.cli", "--experiment", "stationary",
         "--mu-list", "oops", "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 1
    assert "config error" in proc.stderr
