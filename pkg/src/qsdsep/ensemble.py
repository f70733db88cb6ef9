"""Monte Carlo ensembles: batched trajectory runs with deterministic
per-trajectory streams, summary statistics, and distribution checks.

The batch engine advances whole chunks of trajectories through the shared
Euler-Maruyama step, drawing each trajectory's noise from its own counter
stream. Chunking, threading and time blocking change only how the work is
sliced, never which numbers a trajectory sees, so a batch row is bit-for-bit
the path simulate_trajectory produces for the same (master seed, index).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from .bloch import von_neumann_entropy_from_norm
from .entropy import LedgerBatch, SepSpec, as_logpdf, path_terms
from .errors import ConfigError, NumericsError
from .sde import (ItoProcessSpec, StepperConfig, TrajectoryRecord,
                  euler_maruyama_step)
from .streams import trajectory_stream

ABSORBED_THRESHOLD = 0.99


def bloch_norm_of(chart: str) -> Callable:
    """|r| of the physical state as a function of chart coordinates."""
    if chart == "rz":
        return lambda x: np.abs(x)
    if chart == "y":
        return lambda x: np.abs(np.tanh(x))
    if chart == "xz":
        return lambda x: np.sqrt(np.square(x[..., 0]) + np.square(x[..., 1]))
    if chart == "Ytheta":
        return lambda x: np.tanh(x[..., 0])
    if chart == "theta":
        # the angle chart lives on the pure-state circle
        return lambda x: np.ones_like(np.asarray(x, dtype=float))
    if chart == "bloch":
        return lambda x: np.sqrt(np.sum(np.square(x), axis=-1))
    raise ConfigError(f"no Bloch-norm map for chart {chart!r}")


@dataclass(frozen=True)
class PathBatch:
    """State snapshots of an ensemble, time-major like LedgerBatch.

    ``states`` has shape (n_times, n_traj) for one-coordinate charts and
    (n_times, n_traj, 2) for two-coordinate charts.
    """

    chart: str
    labels: Tuple[str, ...]
    times: np.ndarray
    states: np.ndarray
    master_seed: int
    index_offset: int = 0

    def __post_init__(self):
        if self.states.shape[0] != len(self.times):
            raise ConfigError("snapshot count must match the time grid")

    @property
    def n_trajectories(self) -> int:
        return self.states.shape[1]

    @property
    def final_states(self) -> np.ndarray:
        return self.states[-1]

    def bloch_norms(self) -> np.ndarray:
        return bloch_norm_of(self.chart)(self.states)


@dataclass(frozen=True)
class EnsembleConfig:
    """What to run and what to keep."""

    spec: ItoProcessSpec
    stepper: StepperConfig
    n_trajectories: int
    master_seed: int
    initial: object = 0.0
    record: Tuple[str, ...] = ("state",)
    record_times: Optional[Sequence[float]] = None
    sep: Optional[SepSpec] = None
    n_keep: int = 0
    threads: int = 1
    chunk_size: int = 2048
    index_offset: int = 0

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise ConfigError("n_trajectories must be >= 1")
        if self.threads < 1 or self.chunk_size < 1:
            raise ConfigError("threads and chunk_size must be >= 1")
        if not (0 <= self.n_keep <= self.n_trajectories):
            raise ConfigError("n_keep must lie in [0, n_trajectories]")
        known = {"state", "purity", "vn", "ledger"}
        bad = set(self.record) - known
        if bad:
            raise ConfigError(f"unknown observables {sorted(bad)!r}")
        if "ledger" in self.record and self.sep is None:
            raise ConfigError("recording ledgers needs a SepSpec")


@dataclass(frozen=True)
class EnsembleStats:
    """Per-time ensemble summaries with independent-trajectory errors."""

    chart: str
    labels: Tuple[str, ...]
    n_trajectories: int
    times: np.ndarray
    mean_state: np.ndarray
    var_state: np.ndarray
    se_state: np.ndarray
    mean_purity: Optional[np.ndarray] = None
    se_purity: Optional[np.ndarray] = None
    mean_vn: Optional[np.ndarray] = None
    se_vn: Optional[np.ndarray] = None
    mean_s_tot: Optional[np.ndarray] = None
    se_s_tot: Optional[np.ndarray] = None
    absorbed_plus: int = 0
    absorbed_minus: int = 0
    undecided: int = 0

    def __post_init__(self):
        if np.any(self.var_state < 0.0):
            raise ConfigError("variances must be nonnegative")
        counted = self.absorbed_plus + self.absorbed_minus + self.undecided
        if counted not in (0, self.n_trajectories):
            raise ConfigError("absorption counts must partition the ensemble")


def _mean_var_se(values: np.ndarray):
    """Reduce over the trajectory axis (axis 1) of a time-major array."""
    n = values.shape[1]
    mean = values.mean(axis=1)
    if n > 1:
        var = values.var(axis=1, ddof=1)
    else:
        var = np.zeros_like(mean)
    return mean, var, np.sqrt(var / n)


def _locate_failure(spec, x, t, dt, dw, lo):
    a = np.asarray(spec.drift_rev(x, t), dtype=float) \
        + np.asarray(spec.drift_irr(x, t), dtype=float)
    b = np.asarray(spec.noise(x, t), dtype=float)
    if spec.dimension == 1:
        move = a * dt + b * dw
        bad = ~np.isfinite(move)
    else:
        move = a * dt + np.einsum("...ij,...j->...i", b, dw)
        bad = ~np.all(np.isfinite(move), axis=-1)
    idx = np.nonzero(bad)[0]
    return lo + int(idx[0]) if idx.size else lo


def run_paths(spec: ItoProcessSpec, initial, config: StepperConfig,
              master_seed: int, n_trajectories: int,
              record_times=None, sep: Optional[SepSpec] = None,
              chunk_size: int = 2048, time_block: int = 256,
              threads: int = 1, index_offset: int = 0):
    """Advance an ensemble; returns (PathBatch, LedgerBatch or None).

    Trajectory j draws from trajectory_stream(master_seed, index_offset + j).
    Failures surface as NumericsError naming the lowest failing trajectory.
    """
    n_steps = config.n_steps
    dt = config.dt
    if record_times is None:
        record_times = config.times()
    record_steps = []
    for t in record_times:
        k = int(round(t / dt))
        if not (0 <= k <= n_steps) or abs(k * dt - t) > 1e-9 * max(1.0, config.t_max):
            raise ConfigError(f"record time {t!r} not on the step grid")
        record_steps.append(k)
    if sorted(record_steps) != record_steps or len(set(record_steps)) != len(record_steps):
        raise ConfigError("record times must be strictly increasing")
    times = dt * np.asarray(record_steps, dtype=float)

    dim = spec.dimension
    x0 = np.asarray(initial, dtype=float)
    shape = (n_trajectories,) if dim == 1 else (n_trajectories, 2)
    start = np.empty(shape)
    start[...] = x0
    for j in range(n_trajectories):
        if not spec.contains(start[j]):
            raise ConfigError(f"initial state of trajectory {j} outside the domain")

    n_rec = len(record_steps)
    states_out = np.empty((n_rec,) + shape)
    want_ledger = sep is not None
    if want_ledger:
        logp = as_logpdf(sep.logp)
        s_meas_out = np.empty((n_rec, n_trajectories))
        lp_out = np.empty((n_rec, n_trajectories))

    def run_chunk(lo, hi):
        streams = [trajectory_stream(master_seed, index_offset + j)
                   for j in range(lo, hi)]
        x = start[lo:hi].copy()
        acc = np.zeros(hi - lo)
        slot = 0
        while slot < n_rec and record_steps[slot] == 0:
            states_out[slot, lo:hi] = x
            if want_ledger:
                s_meas_out[slot, lo:hi] = acc
                lp_out[slot, lo:hi] = logp(x, 0.0)
            slot += 1
        step = 0
        while step < n_steps:
            block = min(time_block, n_steps - step)
            if dim == 1:
                dw = np.stack([g.standard_normal(block) for g in streams],
                              axis=1) * math.sqrt(dt)
            else:
                dw = np.stack([g.standard_normal((block, 2)) for g in streams],
                              axis=1) * math.sqrt(dt)
            for i in range(block):
                t_now = step * dt
                if want_ledger:
                    acc = acc + path_terms(sep.process, x, t_now, dw[i], dt,
                                           derivatives=sep.derivatives)
                try:
                    x = euler_maruyama_step(spec, x, t_now, dt, dw[i],
                                            config.boundary)
                except NumericsError as exc:
                    at = _locate_failure(spec, x, t_now, dt, dw[i], lo)
                    failure = NumericsError(
                        f"trajectory {at}, step {step + 1}: {exc}")
                    failure.trajectory_index = at
                    raise failure from exc
                step += 1
                while slot < n_rec and record_steps[slot] == step:
                    states_out[slot, lo:hi] = x
                    if want_ledger:
                        s_meas_out[slot, lo:hi] = acc
                        lp_out[slot, lo:hi] = logp(x, step * dt)
                    slot += 1

    spans = [(lo, min(lo + chunk_size, n_trajectories))
             for lo in range(0, n_trajectories, chunk_size)]
    if threads == 1 or len(spans) == 1:
        for lo, hi in spans:
            run_chunk(lo, hi)
    else:
        # chunks write disjoint slices, so completion order is irrelevant
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(run_chunk, lo, hi) for lo, hi in spans]
            errors = []
            for fut in futures:
                exc = fut.exception()
                if exc is not None:
                    errors.append(exc)
            if errors:
                raise min(errors,
                          key=lambda e: getattr(e, "trajectory_index", 1 << 62))

    batch = PathBatch(chart=spec.name, labels=spec.labels, times=times,
                      states=states_out, master_seed=int(master_seed),
                      index_offset=int(index_offset))
    if not want_ledger:
        return batch, None
    s_sys = lp_out[0][None, :] - lp_out
    s_meas = s_meas_out - s_meas_out[0][None, :]
    ledgers = LedgerBatch(times=times, s_tot=s_sys + s_meas,
                          s_sys=s_sys, s_meas=s_meas)
    return batch, ledgers


def ensemble_stats(batch: PathBatch, ledgers: Optional[LedgerBatch] = None,
                   record: Tuple[str, ...] = ("state",),
                   threshold: float = ABSORBED_THRESHOLD) -> EnsembleStats:
    """Summarize a batch; absorption is judged on |r| at the final time."""
    per_coord = batch.states.reshape(batch.states.shape[0],
                                     batch.n_trajectories, -1)
    mean, var, se = _mean_var_se(per_coord)
    extras = {}
    if "purity" in record or "vn" in record:
        norms = batch.bloch_norms()
        if "purity" in record:
            p = 0.5 * (1.0 + np.square(norms))
            m, _, s = _mean_var_se(p)
            extras["mean_purity"], extras["se_purity"] = m, s
        if "vn" in record:
            vn = von_neumann_entropy_from_norm(norms)
            m, _, s = _mean_var_se(vn)
            extras["mean_vn"], extras["se_vn"] = m, s
    if ledgers is not None and "ledger" in record:
        m, _, s = _mean_var_se(ledgers.s_tot)
        extras["mean_s_tot"], extras["se_s_tot"] = m, s

    if batch.chart == "rz":
        final = batch.final_states
        plus = int(np.sum(final > threshold))
        minus = int(np.sum(final < -threshold))
        undecided = batch.n_trajectories - plus - minus
    else:
        plus = minus = undecided = 0

    if mean.shape[1] == 1:
        mean, var, se = mean[:, 0], var[:, 0], se[:, 0]
    return EnsembleStats(chart=batch.chart, labels=batch.labels,
                         n_trajectories=batch.n_trajectories,
                         times=batch.times,
                         mean_state=mean, var_state=var, se_state=se,
                         absorbed_plus=plus, absorbed_minus=minus,
                         undecided=undecided, **extras)


def run_ensemble(config: EnsembleConfig):
    """Run per EnsembleConfig; returns (stats, batch, ledgers, kept records).

    Kept trajectories are regenerated one-by-one from the same streams, so
    they match the batch rows exactly.
    """
    batch, ledgers = run_paths(
        config.spec, config.initial, config.stepper, config.master_seed,
        config.n_trajectories, record_times=config.record_times,
        sep=config.sep, chunk_size=config.chunk_size, threads=config.threads,
        index_offset=config.index_offset)
    stats = ensemble_stats(batch, ledgers, config.record)
    kept = []
    if config.n_keep:
        from .sde import simulate_trajectory
        x0 = np.asarray(config.initial, dtype=float)
        shared = x0.ndim == 0 if config.spec.dimension == 1 else x0.shape == (2,)
        for j in range(config.n_keep):
            init = x0 if shared else np.asarray(x0[j])
            kept.append(simulate_trajectory(config.spec, init, config.stepper,
                                            config.master_seed,
                                            stream_index=config.index_offset + j))
    return stats, batch, ledgers, kept


def born_fractions(trajectories, threshold: float = ABSORBED_THRESHOLD):
    """Fractions of sigma_z trajectories ending near each eigenstate.

    Accepts a PathBatch (rz chart), a sequence of trajectory records, or an
    array of final r_z values. Never assigns the undecided remainder.
    """
    if isinstance(trajectories, PathBatch):
        if trajectories.chart != "rz":
            raise ConfigError("born_fractions needs the single-channel chart")
        final = trajectories.final_states
    elif isinstance(trajectories, np.ndarray):
        final = trajectories
    else:
        final = np.array([rec.states[-1] for rec in trajectories])
    n = final.size
    f_plus = float(np.sum(final > threshold)) / n
    f_minus = float(np.sum(final < -threshold)) / n
    return f_plus, f_minus, 1.0 - f_plus - f_minus


@dataclass(frozen=True)
class HistogramComparison:
    """A binned sample set against a reference density."""

    tv_distance: float
    z_scores: np.ndarray
    edges: np.ndarray
    counts: np.ndarray
    expected: np.ndarray


def histogram_vs_pdf(samples, pdf: Callable, domain: Tuple[float, float],
                     bins: int = 64) -> HistogramComparison:
    """Total-variation distance and per-bin standardized residuals.

    Bin probabilities use the midpoint rule, adequate for the smooth
    densities compared here.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size < 1000:
        raise ConfigError("histogram comparison needs at least 10^3 samples")
    lo, hi = domain
    counts, edges = np.histogram(samples, bins=bins, range=(lo, hi))
    if counts.sum() != samples.size:
        raise ConfigError("samples fall outside the stated domain")
    width = (hi - lo) / bins
    mids = edges[:-1] + 0.5 * width
    q = np.asarray([float(pdf(m)) for m in mids]) * width
    q = np.maximum(q, 0.0)
    n = samples.size
    frac = counts / n
    tv = 0.5 * float(np.sum(np.abs(frac - q)))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (counts - n * q) / np.sqrt(n * q * (1.0 - q))
    return HistogramComparison(tv_distance=tv, z_scores=z, edges=edges,
                               counts=counts, expected=n * q)


def vn_entropy_curves(trajectories):
    """Von Neumann entropy along each trajectory plus the ensemble mean.

    Accepts a PathBatch or a sequence of trajectory records sharing a grid;
    returns (times, curves with shape (n_times, n_traj), mean curve).
    """
    if isinstance(trajectories, PathBatch):
        times = trajectories.times
        curves = von_neumann_entropy_from_norm(trajectories.bloch_norms())
    else:
        trajectories = list(trajectories)
        if not trajectories:
            raise ConfigError("no trajectories supplied")
        times = trajectories[0].times
        norm_of = bloch_norm_of(trajectories[0].chart)
        cols = []
        for rec in trajectories:
            if len(rec.times) != len(times):
                raise ConfigError("trajectories must share one time grid")
            cols.append(von_neumann_entropy_from_norm(norm_of(rec.states)))
        curves = np.stack(cols, axis=1)
    return times, curves, curves.mean(axis=1)


# ---------------------------------------------------------------------------
# Export.

def stats_to_csv(path, stats: EnsembleStats):
    """Per-time summary table; vector charts get one column pair per label."""
    mean = np.atleast_2d(stats.mean_state.T).T
    se = np.atleast_2d(stats.se_state.T).T
    cols = []
    for i, label in enumerate(stats.labels):
        cols.append((f"mean_{label}", mean[:, i]))
        cols.append((f"se_{label}", se[:, i]))
    for name in ("mean_purity", "se_purity", "mean_vn", "se_vn",
                 "mean_s_tot", "se_s_tot"):
        arr = getattr(stats, name)
        if arr is not None:
            cols.append((name, arr))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("t," + ",".join(name for name, _ in cols) + "\n")
        for k in range(len(stats.times)):
            row = ",".join("%.17g" % col[k] for _, col in cols)
            fh.write("%.17g,%s\n" % (stats.times[k], row))


def stats_to_json(path, stats: EnsembleStats):
    import json

    def listify(arr):
        return None if arr is None else np.asarray(arr).tolist()

    payload = {
        "chart": stats.chart,
        "labels": list(stats.labels),
        "n_trajectories": stats.n_trajectories,
        "times": listify(stats.times),
        "mean_state": listify(stats.mean_state),
        "var_state": listify(stats.var_state),
        "se_state": listify(stats.se_state),
        "mean_purity": listify(stats.mean_purity),
        "se_purity": listify(stats.se_purity),
        "mean_vn": listify(stats.mean_vn),
        "se_vn": listify(stats.se_vn),
        "mean_s_tot": listify(stats.mean_s_tot),
        "se_s_tot": listify(stats.se_s_tot),
        "absorbed_plus": stats.absorbed_plus,
        "absorbed_minus": stats.absorbed_minus,
        "undecided": stats.undecided,
    }
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def trajectories_to_csv(path, records: Sequence[TrajectoryRecord]):
    """Rows (t, coordinates, Wiener increments, trajectory_id); the dW value
    on a row is the increment applied over the step ending at that row's t."""
    if not records:
        raise ConfigError("no trajectories supplied")
    labels = records[0].labels
    wlabels = records[0].wiener_labels
    header = ("t," + ",".join(labels) + "," + ",".join(wlabels)
              + ",trajectory_id")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(header + "\n")
        for j, rec in enumerate(records):
            if rec.labels != labels:
                raise ConfigError("mixed charts in one trajectory file")
            states = rec.states.reshape(len(rec.times), -1)
            wiener = rec.wiener.reshape(len(rec.times), -1)
            for k in range(len(rec.times)):
                vals = [rec.times[k], *states[k], *wiener[k]]
                fh.write(",".join("%.17g" % v for v in vals) + ",%d\n" % j)
