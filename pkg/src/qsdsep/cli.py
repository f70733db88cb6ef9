"""Command-line front end: named experiments writing CSV tables plus a run
manifest, for external plotting.

Every experiment is a pure function of (resolved parameters, seed): outputs
are byte-identical across reruns and thread counts. Parameter resolution is
defaults < config file < command-line flags; the config file is flat
``key = value`` text and every key has a flag of the same name.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .ensemble import (EnsembleConfig, born_fractions, ensemble_stats,
                       run_ensemble, run_paths, stats_to_csv,
                       trajectories_to_csv, vn_entropy_curves)
from .entropy import (SepSpec, asymptotic_mean_rate, asymptotic_Ytheta_logp,
                      kl_divergence, ledgers_to_csv, sep_stationary_shortcut)
from .errors import ConfigError, NumericsError
from .fpe import (Grid1D, default_y_halfwidth, evolve_fpe, field_to_binary,
                  field_to_csv, gaussian_profile, stationary_moments,
                  stationary_theta_pdf, uniform_profile)
from .sde import (StepperConfig, spec_rz, spec_theta, spec_xz, spec_y,
                  spec_Ytheta)
from .streams import trajectory_stream
from .bloch import von_neumann_entropy_from_norm

EXPERIMENTS = ("trajectories", "fpe", "entropy", "stationary", "quench", "vn")

# Initial-condition draws use a stream index far above any trajectory index.
INITIAL_STREAM_BASE = 1 << 40

DEFAULTS_VERSION = 1

# name -> (type, default); None defaults are resolved per experiment
PARAMETERS = {
    "alpha_z": (float, 1.0),
    "alpha_x": (float, 0.0),
    "mu": (float, None),
    "dt": (float, 1e-3),
    "t_max": (float, None),
    "n_traj": (int, 100),
    "grid_n": (int, 1024),
    "sigma0": (float, 0.5),
    "r0": (float, 0.0),
    "threads": (int, 1),
    "chart": (str, ""),
    "pdf_mode": (str, ""),
    "fit_lo": (float, None),
    "fit_hi": (float, None),
    "record_dt": (float, None),
    "n_keep": (int, 4),
    "mu_list": (str, "0.44721359549995793,1,1.4142135623730951,2.2360679774997896"),
    "simulate": (int, 0),
    "bins": (int, 64),
}


def parse_config_file(path) -> dict:
    """Flat key = value lines; '#' starts a comment; keys must be known."""
    raw = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = body.split("=", 1)
        key = key.strip().replace("-", "_")
        if key not in PARAMETERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        raw[key] = value.strip()
    return raw


def resolve_parameters(config_path, overrides: dict) -> dict:
    params = {name: default for name, (_, default) in PARAMETERS.items()}
    if config_path is not None:
        for key, text in parse_config_file(config_path).items():
            kind, _ = PARAMETERS[key]
            try:
                params[key] = kind(text)
            except ValueError as exc:
                raise ConfigError(f"config key {key}: {exc}") from exc
    for key, value in overrides.items():
        if value is not None:
            params[key] = value
    if params["mu"] is not None:
        if params["mu"] <= 0.0:
            raise ConfigError("mu must be positive")
        params["alpha_x"] = params["mu"] * params["alpha_z"]
    if params["dt"] <= 0.0 or params["sigma0"] <= 0.0:
        raise ConfigError("dt and sigma0 must be positive")
    if params["alpha_z"] < 0.0 or params["alpha_x"] < 0.0:
        raise ConfigError("measurement strengths must be nonnegative")
    if params["t_max"] is not None and params["t_max"] <= 0.0:
        raise ConfigError("t_max must be positive")
    if params["n_traj"] < 1 or params["grid_n"] < 16:
        raise ConfigError("n_traj and grid_n are too small")
    if params["threads"] < 1 or params["n_keep"] < 0:
        raise ConfigError("threads must be >= 1 and n_keep >= 0")
    return params


def write_manifest(out: Path, experiment: str, seed: int, params: dict,
                   outputs: list, summary: dict):
    payload = {
        "experiment": experiment,
        "seed": seed,
        "package_version": __version__,
        "defaults_version": DEFAULTS_VERSION,
        "parameters": {k: params[k] for k in sorted(params)},
        "outputs": sorted(outputs),
        "summary": summary,
    }
    with open(out / "manifest.json", "w", encoding="ascii", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_table(path, header: str, columns):
    rows = len(columns[0])
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(header + "\n")
        for k in range(rows):
            fh.write(",".join("%.17g" % col[k] for col in columns) + "\n")


def _record_grid(params, lo=0.0) -> np.ndarray:
    dt = params["dt"]
    t_max = params["t_max"]
    step = params["record_dt"]
    if step is None:
        k = max(1, int(round(max(dt, (t_max - lo) / 400.0) / dt)))
    else:
        k = int(round(step / dt))
        if k < 1 or abs(k * dt - step) > 1e-9:
            raise ConfigError("record_dt must be a multiple of dt")
    lo_step = int(round(lo / dt))
    if abs(lo_step * dt - lo) > 1e-9:
        raise ConfigError("the fit window must sit on the step grid")
    n_steps = int(round(t_max / dt))
    return dt * np.arange(lo_step, n_steps + 1, k)


def cmd_trajectories(out: Path, seed: int, params: dict) -> dict:
    t_max = params["t_max"] if params["t_max"] is not None else 4.0
    params["t_max"] = t_max
    stepper = StepperConfig(dt=params["dt"], t_max=t_max)
    n = params["n_traj"]
    two_channel = params["alpha_x"] > 0.0
    if two_channel:
        spec = spec_xz(params["alpha_x"], params["alpha_z"])
        initial = np.array([0.0, params["r0"]])
    else:
        spec = spec_rz(params["alpha_z"])
        initial = params["r0"]
    config = EnsembleConfig(spec=spec, stepper=stepper, n_trajectories=n,
                            master_seed=seed, initial=initial,
                            record=("state", "purity"), n_keep=n,
                            threads=params["threads"])
    stats, batch, _, kept = run_ensemble(config)
    trajectories_to_csv(out / "trajectories.csv", kept)
    outputs = ["trajectories.csv"]
    if two_channel:
        # rows grouped by trajectory_id, time-major within each group
        purity = 0.5 * (1.0 + np.square(batch.states).sum(axis=-1))
        cols = [np.tile(batch.times, n), purity.T.ravel(),
                np.repeat(np.arange(n), len(batch.times))]
        _write_table(out / "purity.csv", "t,purity,trajectory_id", cols)
        outputs.append("purity.csv")
    summary = {
        "max_abs_rz": float(np.max(np.abs(batch.states[..., -1] if two_channel
                                          else batch.states))),
        "mean_final_purity": float(stats.mean_purity[-1]),
    }
    return {"outputs": outputs, "summary": summary}


def _fpe_setup(params):
    chart = params["chart"] or "rz"
    if chart == "rz":
        spec = spec_rz(params["alpha_z"])
        grid = Grid1D.bounded(-1.0, 1.0, params["grid_n"])
        initial = gaussian_profile(grid, params["r0"], params["sigma0"])
    elif chart == "y":
        spec = spec_y(params["alpha_z"])
        half = default_y_halfwidth(params["alpha_z"], params["t_max"])
        grid = Grid1D.truncated(half, params["grid_n"])
        initial = gaussian_profile(grid, params["r0"], params["sigma0"])
    elif chart == "theta":
        if params["alpha_x"] <= 0.0:
            raise ConfigError("the theta chart needs alpha_x > 0 (or mu)")
        spec = spec_theta(params["alpha_x"], params["alpha_z"])
        grid = Grid1D.circle(params["grid_n"])
        initial = uniform_profile(grid)
    else:
        raise ConfigError(f"unknown fpe chart {chart!r}")
    return chart, spec, grid, initial


def cmd_fpe(out: Path, seed: int, params: dict) -> dict:
    if params["t_max"] is None:
        params["t_max"] = 2.0
    chart, spec, grid, initial = _fpe_setup(params)
    store = params["record_dt"] if params["record_dt"] is not None \
        else params["t_max"] / 50.0
    field = evolve_fpe(spec, grid, initial, params["t_max"], store)
    field_to_csv(field, out / "field.csv")
    field_to_binary(field, out / "field.bin")
    mass = field.mass()
    _write_table(out / "mass.csv", "t,mass", [field.times, mass])
    summary = {
        "chart": chart,
        "max_mass_defect": float(np.max(np.abs(mass - 1.0))),
        "final_mean": float(field.mean()[-1]),
    }
    if chart == "rz":
        final = field.values[-1]
        near = np.abs(grid.nodes) > 0.95
        lower = grid.nodes < 0
        summary["edge_mass"] = float(final[near].sum() * grid.h)
        summary["edge_mass_minus"] = float(final[near & lower].sum() * grid.h)
    return {"outputs": ["field.csv", "field.bin", "mass.csv"],
            "summary": summary}


def _entropy_single_channel(out: Path, seed: int, params: dict) -> dict:
    alpha = params["alpha_z"]
    record = _record_grid(params)
    fit_lo = params["fit_lo"] if params["fit_lo"] is not None \
        else params["t_max"] / 2.0
    fit_hi = params["fit_hi"] if params["fit_hi"] is not None \
        else params["t_max"]

    mode = params["pdf_mode"] or "fpe"
    spec = spec_y(alpha)
    if mode == "fpe":
        half = default_y_halfwidth(alpha, params["t_max"])
        grid = Grid1D.truncated(half, params["grid_n"])
        store = record[1] - record[0]
        field = evolve_fpe(spec, grid, gaussian_profile(grid, 0.0, params["sigma0"]),
                           params["t_max"], store)
        logp = field
    elif mode == "asymptotic":
        from .entropy import asymptotic_y_logp
        logp = asymptotic_y_logp(alpha)
        if record[0] == 0.0:
            record = record[1:]
    else:
        raise ConfigError(f"unknown pdf_mode {mode!r}")

    n = params["n_traj"]
    y0 = params["sigma0"] * trajectory_stream(seed, INITIAL_STREAM_BASE) \
        .standard_normal(n)
    stepper = StepperConfig(dt=params["dt"], t_max=params["t_max"])
    sep = SepSpec(process=spec, logp=logp, closed_form="y")
    _, ledgers = run_paths(spec, y0, stepper, seed, n, record_times=record,
                           sep=sep, threads=params["threads"])
    return _finish_entropy(out, ledgers, fit_lo, fit_hi, params,
                           {"pdf_mode": mode, "channels": 1,
                            "expected_rate": 8.0 * alpha * alpha})


def _entropy_two_channel(out: Path, seed: int, params: dict) -> dict:
    if abs(params["alpha_x"] - params["alpha_z"]) > 1e-12:
        raise ConfigError("the two-channel entropy experiment needs "
                          "alpha_x = alpha_z (asymptotic pdf assumption)")
    alpha = params["alpha_z"]
    mode = params["pdf_mode"] or "asymptotic"
    if mode != "asymptotic":
        raise ConfigError("no two-coordinate field solver: "
                          "two-channel entropy needs pdf_mode = asymptotic")
    fit_lo = params["fit_lo"] if params["fit_lo"] is not None \
        else params["t_max"] / 2.0
    fit_hi = params["fit_hi"] if params["fit_hi"] is not None \
        else params["t_max"]
    record = _record_grid(params, lo=fit_lo)

    spec = spec_Ytheta(alpha)
    n = params["n_traj"]
    theta0 = (trajectory_stream(seed, INITIAL_STREAM_BASE).random(n)
              * 2.0 - 1.0) * math.pi
    y_floor = spec.domain[0].lo
    start_y = max(math.atanh(min(abs(params["r0"]), 0.999999)), y_floor)
    initial = np.stack([np.full(n, start_y), theta0], axis=-1)
    stepper = StepperConfig(dt=params["dt"], t_max=params["t_max"])
    sep = SepSpec(process=spec, logp=asymptotic_Ytheta_logp(alpha),
                  closed_form="2d_asymptotic")
    _, ledgers = run_paths(spec, initial, stepper, seed, n,
                           record_times=record, sep=sep,
                           threads=params["threads"])
    return _finish_entropy(out, ledgers, fit_lo, fit_hi, params,
                           {"pdf_mode": mode, "channels": 2,
                            "expected_rate": 18.0 * alpha * alpha})


def _finish_entropy(out: Path, ledgers, fit_lo, fit_hi, params, summary) -> dict:
    rate, rate_se = asymptotic_mean_rate(ledgers, (fit_lo, fit_hi))
    mean_tot = ledgers.s_tot.mean(axis=1)
    se_tot = ledgers.s_tot.std(axis=1, ddof=1) / math.sqrt(ledgers.n_trajectories)
    mean_sys = ledgers.s_sys.mean(axis=1)
    mean_meas = ledgers.s_meas.mean(axis=1)
    identity = np.max(np.abs(ledgers.s_tot - ledgers.s_sys - ledgers.s_meas))
    _write_table(out / "mean_ledger.csv",
                 "t,mean_s_tot,se_s_tot,mean_s_sys,mean_s_meas",
                 [ledgers.times, mean_tot, se_tot, mean_sys, mean_meas])
    keep = min(params["n_keep"], ledgers.n_trajectories)
    ledgers_to_csv(out / "ledgers.csv",
                   [ledgers.trajectory(j) for j in range(keep)])
    _write_table(out / "rate.csv", "fit_lo,fit_hi,rate,rate_se",
                 [[fit_lo], [fit_hi], [rate], [rate_se]])
    summary.update({
        "rate": rate, "rate_se": rate_se,
        "fit_window": [fit_lo, fit_hi],
        "max_identity_defect": float(identity),
        "min_mean_s_tot": float(mean_tot.min()),
    })
    return {"outputs": ["mean_ledger.csv", "ledgers.csv", "rate.csv"],
            "summary": summary}


def cmd_entropy(out: Path, seed: int, params: dict) -> dict:
    if params["t_max"] is None:
        params["t_max"] = 2.0
    if params["alpha_x"] > 0.0:
        return _entropy_two_channel(out, seed, params)
    return _entropy_single_channel(out, seed, params)


def _parse_mu_list(text: str) -> list:
    try:
        mus = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"mu_list: {exc}") from exc
    if not mus:
        raise ConfigError("mu_list is empty")
    if any(mu <= 0.0 for mu in mus):
        raise ConfigError("mu_list entries must be positive")
    return mus


def cmd_stationary(out: Path, seed: int, params: dict) -> dict:
    mus = _parse_mu_list(params["mu_list"])
    thetas = Grid1D.circle(params["grid_n"]).nodes
    pdf_cols = {"theta": thetas}
    rows = {name: [] for name in
            ("mu", "mean_rx", "mean_rz", "var_rx", "var_rz", "var_sum")}
    tables = []
    for mu in mus:
        pst = stationary_theta_pdf(mu)
        tables.append(pst(thetas))
        mean_rx, mean_rz, var_rx, var_rz = stationary_moments(mu)
        rows["mu"].append(mu)
        rows["mean_rx"].append(mean_rx)
        rows["mean_rz"].append(mean_rz)
        rows["var_rx"].append(var_rx)
        rows["var_rz"].append(var_rz)
        rows["var_sum"].append(var_rx + var_rz)
    header = "theta," + ",".join("p_mu_%.17g" % mu for mu in mus)
    _write_table(out / "stationary.csv", header, [thetas, *tables])
    _write_table(out / "moments.csv",
                 "mu,mean_rx,mean_rz,var_rx,var_rz,var_sum",
                 [rows[k] for k in
                  ("mu", "mean_rx", "mean_rz", "var_rx", "var_rz", "var_sum")])
    summary = {
        "mus": mus,
        "max_var_sum_defect": float(max(abs(v - 1.0) for v in rows["var_sum"])),
    }
    return {"outputs": ["stationary.csv", "moments.csv"], "summary": summary}


def cmd_quench(out: Path, seed: int, params: dict) -> dict:
    mus = _parse_mu_list(params["mu_list"])
    span = (-math.pi, math.pi)
    uniform = lambda x: 1.0 / (2.0 * math.pi)
    kl = [kl_divergence(uniform, stationary_theta_pdf(mu), span) for mu in mus]
    kl_inv = [kl_divergence(uniform, stationary_theta_pdf(1.0 / mu), span)
              for mu in mus]
    columns = [mus, kl, kl_inv]
    header = "mu,mean_dstot,mean_dstot_inverse_mu"
    summary = {"mus": mus,
               "max_symmetry_defect": float(max(abs(a - b) for a, b
                                                in zip(kl, kl_inv)))}

    if params["simulate"]:
        mu_f = params["mu"] if params["mu"] is not None else mus[0]
        alpha_z = params["alpha_z"]
        horizon = params["t_max"] if params["t_max"] is not None \
            else 5.0 / alpha_z**2
        params["t_max"] = horizon
        spec = spec_theta(mu_f * alpha_z, alpha_z)
        grid = Grid1D.circle(params["grid_n"])
        field = evolve_fpe(spec, grid, uniform_profile(grid), horizon,
                           horizon / 50.0)
        n = params["n_traj"]
        theta0 = (trajectory_stream(seed, INITIAL_STREAM_BASE).random(n)
                  * 2.0 - 1.0) * math.pi
        stepper = StepperConfig(dt=params["dt"], t_max=horizon)
        batch, _ = run_paths(spec, theta0, stepper, seed, n,
                             record_times=[0.0, horizon],
                             threads=params["threads"])
        pst_f = stationary_theta_pdf(mu_f)
        totals = sep_stationary_shortcut(field, pst_f, batch.states[0], 0.0,
                                         batch.states[-1], horizon)
        sim_mean = float(np.mean(totals))
        sim_se = float(np.std(totals, ddof=1) / math.sqrt(n))
        kl_f = kl_divergence(uniform, pst_f, span)
        summary.update({"simulated_mu": mu_f, "sim_mean": sim_mean,
                        "sim_se": sim_se, "kl_target": kl_f,
                        "sim_gap_in_se": abs(sim_mean - kl_f) / sim_se})
    _write_table(out / "quench.csv", header, columns)
    return {"outputs": ["quench.csv"], "summary": summary}


def cmd_vn(out: Path, seed: int, params: dict) -> dict:
    if params["t_max"] is None:
        params["t_max"] = 4.0
    stepper = StepperConfig(dt=params["dt"], t_max=params["t_max"])
    spec = spec_rz(params["alpha_z"])
    record = _record_grid(params)
    batch, _ = run_paths(spec, params["r0"], stepper, seed, params["n_traj"],
                         record_times=record, threads=params["threads"])
    times, curves, mean_curve = vn_entropy_curves(batch)
    se_curve = curves.std(axis=1, ddof=1) / math.sqrt(batch.n_trajectories)
    # entropy of the ensemble-averaged state, constant under the dynamics
    vn_of_mean = von_neumann_entropy_from_norm(np.abs(batch.states.mean(axis=1)))
    _write_table(out / "vn_mean.csv", "t,mean_s_vn,se_s_vn,s_vn_of_mean_state",
                 [times, mean_curve, se_curve, vn_of_mean])
    keep = min(params["n_keep"], batch.n_trajectories)
    cols = [np.tile(times, keep), curves[:, :keep].T.ravel(),
            np.repeat(np.arange(keep), len(times))]
    _write_table(out / "vn_curves.csv", "t,s_vn,trajectory_id", cols)
    summary = {
        "initial_mean_vn": float(mean_curve[0]),
        "final_mean_vn": float(mean_curve[-1]),
        "max_vn_of_mean_state_drift": float(np.max(np.abs(
            vn_of_mean - vn_of_mean[0]))),
    }
    return {"outputs": ["vn_mean.csv", "vn_curves.csv"], "summary": summary}


COMMANDS = {
    "trajectories": cmd_trajectories,
    "fpe": cmd_fpe,
    "entropy": cmd_entropy,
    "stationary": cmd_stationary,
    "quench": cmd_quench,
    "vn": cmd_vn,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsdsep",
        description="Continuous-measurement trajectory experiments")
    parser.add_argument("--experiment", required=True, choices=EXPERIMENTS)
    parser.add_argument("--config", default=None, help="flat key=value file")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=".", help="output directory")
    for name, (kind, _) in PARAMETERS.items():
        flag = "--" + name.replace("_", "-")
        parser.add_argument(flag, dest=name, type=kind, default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which this tool reserves for
        # numerical failures
        return 0 if exc.code == 0 else 1
    try:
        params = resolve_parameters(args.config, {
            name: getattr(args, name) for name in PARAMETERS})
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        result = COMMANDS[args.experiment](out, args.seed, params)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (NumericsError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    write_manifest(out, args.experiment, args.seed, params,
                   result["outputs"] + ["manifest.json"], result["summary"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
