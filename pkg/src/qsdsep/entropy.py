"""Stochastic entropy production along measurement trajectories.

The central object is the pathwise increment of total entropy production for
an Ito process dx = (A_rev + A_irr)dt + B dW with diffusion D = B^2/2:

    ds_tot = -dln p
             + (A_irr / D) dx - (A_rev A_irr / D) dt
             + A_irr' dt - A_rev' dt
             - (D'/D) dx + ((A_rev - A_irr)/D) D' dt - D'' dt + (D'^2 / D) dt

with primes denoting spatial derivatives. Everything else here is either a
closed-form specialization of that expression to one of the coordinate
charts, the independent discrete construction from forward/backward branch
probabilities of the measurement map, or bookkeeping (ledgers, slope fits,
Gibbs entropy, KL divergence).

Conventions: pdf sources passed to these functions are either a PdfField, a
StationaryThetaPdf, or a callable returning ln p (not p). The split
ds_sys = -dln p, ds_meas = everything else is applied throughout, so
s_tot = s_sys + s_meas holds identically in every ledger.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import quad
from scipy.special import xlogy

from .errors import ConfigError, NumericsError
from .fpe import PDF_FLOOR, PdfField, StationaryThetaPdf, logpdf_lookup
from .kraus import KrausStepOutcome, RzChainBatch, log_prob_ratio, rz_branch_map
from .sde import Domain, ItoProcessSpec, TrajectoryRecord

TWO_PI = 2.0 * math.pi

LEDGER_IDENTITY_TOL = 1e-10


@dataclass(frozen=True)
class EntropyLedger:
    """Cumulative entropy production along one trajectory, in nats."""

    times: np.ndarray
    s_tot: np.ndarray
    s_sys: np.ndarray
    s_meas: np.ndarray

    def __post_init__(self):
        for name in ("times", "s_tot", "s_sys", "s_meas"):
            object.__setattr__(self, name,
                               np.asarray(getattr(self, name), dtype=float))
        n = len(self.times)
        if any(len(getattr(self, f)) != n for f in ("s_tot", "s_sys", "s_meas")):
            raise ConfigError("ledger columns must share one time grid")
        if np.any(np.diff(self.times) <= 0.0):
            raise ConfigError("ledger times must increase")
        for f in ("s_tot", "s_sys", "s_meas"):
            if abs(getattr(self, f)[0]) > 1e-12:
                raise ConfigError("ledgers start at zero")
        gap = np.max(np.abs(self.s_tot - self.s_sys - self.s_meas))
        if gap > LEDGER_IDENTITY_TOL:
            raise ConfigError("ledger identity s_tot = s_sys + s_meas violated")


@dataclass(frozen=True)
class LedgerBatch:
    """Entropy ledgers of an ensemble, time-major: arrays (n_times, n_traj)."""

    times: np.ndarray
    s_tot: np.ndarray
    s_sys: np.ndarray
    s_meas: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", times)
        for name in ("s_tot", "s_sys", "s_meas"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 2 or arr.shape[0] != len(times):
                raise ConfigError("batch ledgers are (n_times, n_traj) arrays")
            object.__setattr__(self, name, arr)
        if np.any(np.diff(times) <= 0.0):
            raise ConfigError("ledger times must increase")
        gap = np.max(np.abs(self.s_tot - self.s_sys - self.s_meas))
        if gap > LEDGER_IDENTITY_TOL:
            raise ConfigError("ledger identity s_tot = s_sys + s_meas violated")

    @property
    def n_trajectories(self) -> int:
        return self.s_tot.shape[1]

    def trajectory(self, index: int) -> EntropyLedger:
        return EntropyLedger(times=self.times,
                             s_tot=self.s_tot[:, index] - self.s_tot[0, index],
                             s_sys=self.s_sys[:, index] - self.s_sys[0, index],
                             s_meas=self.s_meas[:, index] - self.s_meas[0, index])


LogPdfSource = Union[PdfField, StationaryThetaPdf, Callable]

CLOSED_FORMS = ("rz", "y", "theta", "2d_asymptotic")


def as_logpdf(source: LogPdfSource) -> Callable:
    """Normalize a pdf source to a callable (x, t) -> ln p."""
    if isinstance(source, PdfField):
        return lambda x, t: logpdf_lookup(source, x, t)
    if isinstance(source, StationaryThetaPdf):
        return lambda x, t: np.log(np.maximum(source(x), PDF_FLOOR))
    if callable(source):
        return source
    raise ConfigError("pdf source must be a PdfField, a stationary pdf, "
                      "or a log-density callable")


@dataclass(frozen=True)
class SepSpec:
    """A process together with the pdf source feeding its -dln p term.

    ``closed_form`` names the specialization that can cross-check the general
    formula on this chart, if any.
    """

    process: ItoProcessSpec
    logp: LogPdfSource
    closed_form: Optional[str] = None
    derivatives: str = "auto"

    def __post_init__(self):
        if self.closed_form is not None and self.closed_form not in CLOSED_FORMS:
            raise ConfigError(f"unknown closed form {self.closed_form!r}")

    def ledger(self, record: TrajectoryRecord) -> "EntropyLedger":
        return ledger_from_trajectory(record, self.process, self.logp,
                                      derivatives=self.derivatives)


# ---------------------------------------------------------------------------
# The general formula.

def _domain_span(domain: Domain) -> float:
    if domain.kind == "interval":
        return domain.hi - domain.lo
    if domain.kind == "periodic":
        return TWO_PI
    return 1.0


def _coeff_bundle_1d(spec: ItoProcessSpec, x, t, derivatives: str):
    a_rev = np.asarray(spec.drift_rev(x, t), dtype=float)
    a_irr = np.asarray(spec.drift_irr(x, t), dtype=float)
    if spec.diffusion is not None:
        d = np.asarray(spec.diffusion(x, t), dtype=float)
    else:
        d = 0.5 * np.square(np.asarray(spec.noise(x, t), dtype=float))

    analytic = all(f is not None for f in (spec.drift_rev_dx, spec.drift_irr_dx,
                                           spec.diffusion_dx, spec.diffusion_dxx))
    if derivatives == "analytic" and not analytic:
        raise ConfigError("spec lacks analytic coefficient derivatives")
    if derivatives not in ("auto", "analytic", "fd"):
        raise ConfigError("derivatives must be 'auto', 'analytic' or 'fd'")

    if derivatives == "fd" or (derivatives == "auto" and not analytic):
        h = 1e-6 * _domain_span(spec.domain)

        def d_fn(z):
            if spec.diffusion is not None:
                return np.asarray(spec.diffusion(z, t), dtype=float)
            return 0.5 * np.square(np.asarray(spec.noise(z, t), dtype=float))

        x = np.asarray(x, dtype=float)
        a_rev_p = (np.asarray(spec.drift_rev(x + h, t), dtype=float)
                   - np.asarray(spec.drift_rev(x - h, t), dtype=float)) / (2 * h)
        a_irr_p = (np.asarray(spec.drift_irr(x + h, t), dtype=float)
                   - np.asarray(spec.drift_irr(x - h, t), dtype=float)) / (2 * h)
        d_p = (d_fn(x + h) - d_fn(x - h)) / (2 * h)
        d_pp = (d_fn(x + h) - 2.0 * d + d_fn(x - h)) / (h * h)
    else:
        a_rev_p = np.asarray(spec.drift_rev_dx(x, t), dtype=float)
        a_irr_p = np.asarray(spec.drift_irr_dx(x, t), dtype=float)
        d_p = np.asarray(spec.diffusion_dx(x, t), dtype=float)
        d_pp = np.asarray(spec.diffusion_dxx(x, t), dtype=float)
    return a_rev, a_irr, d, a_rev_p, a_irr_p, d_p, d_pp


def _terms(a_rev, a_irr, d, a_rev_p, a_irr_p, d_p, d_pp, dx, dt):
    if np.any(d <= 0.0):
        raise NumericsError("entropy increment needs positive diffusion")
    return ((a_irr / d) * dx
            - (a_rev * a_irr / d) * dt
            + a_irr_p * dt
            - a_rev_p * dt
            - (d_p / d) * dx
            + ((a_rev - a_irr) / d) * d_p * dt
            - d_pp * dt
            + (d_p * d_p / d) * dt)


def _coeff_bundle_2d(spec: ItoProcessSpec, x, t, derivatives: str):
    x = np.asarray(x, dtype=float)
    a_rev = np.asarray(spec.drift_rev(x, t), dtype=float)
    a_irr = np.asarray(spec.drift_irr(x, t), dtype=float)
    b = np.asarray(spec.noise(x, t), dtype=float)
    off = max(float(np.max(np.abs(b[..., 0, 1]))),
              float(np.max(np.abs(b[..., 1, 0]))))
    if off > 1e-12:
        raise ConfigError("the decoupled entropy treatment needs diagonal noise")
    if spec.diffusion is not None:
        d = np.asarray(spec.diffusion(x, t), dtype=float)
    else:
        diag = np.stack([b[..., 0, 0], b[..., 1, 1]], axis=-1)
        d = 0.5 * np.square(diag)

    analytic = all(f is not None for f in (spec.drift_rev_dx, spec.drift_irr_dx,
                                           spec.diffusion_dx, spec.diffusion_dxx))
    if derivatives == "analytic" and not analytic:
        raise ConfigError("spec lacks analytic coefficient derivatives")

    if derivatives == "fd" or (derivatives == "auto" and not analytic):
        domains = spec.domain if isinstance(spec.domain, tuple) \
            else (spec.domain, spec.domain)

        def d_fn(z):
            if spec.diffusion is not None:
                return np.asarray(spec.diffusion(z, t), dtype=float)
            bz = np.asarray(spec.noise(z, t), dtype=float)
            return 0.5 * np.square(np.stack([bz[..., 0, 0], bz[..., 1, 1]],
                                            axis=-1))

        cols_rev, cols_irr, cols_dp, cols_dpp = [], [], [], []
        for i in (0, 1):
            h = 1e-6 * _domain_span(domains[i])
            shift = np.zeros(2)
            shift[i] = h
            cols_rev.append((np.asarray(spec.drift_rev(x + shift, t), float)[..., i]
                             - np.asarray(spec.drift_rev(x - shift, t), float)[..., i])
                            / (2 * h))
            cols_irr.append((np.asarray(spec.drift_irr(x + shift, t), float)[..., i]
                             - np.asarray(spec.drift_irr(x - shift, t), float)[..., i])
                            / (2 * h))
            cols_dp.append((d_fn(x + shift)[..., i] - d_fn(x - shift)[..., i])
                           / (2 * h))
            cols_dpp.append((d_fn(x + shift)[..., i] - 2.0 * d[..., i]
                             + d_fn(x - shift)[..., i]) / (h * h))
        a_rev_p = np.stack(cols_rev, axis=-1)
        a_irr_p = np.stack(cols_irr, axis=-1)
        d_p = np.stack(cols_dp, axis=-1)
        d_pp = np.stack(cols_dpp, axis=-1)
    else:
        a_rev_p = np.asarray(spec.drift_rev_dx(x, t), dtype=float)
        a_irr_p = np.asarray(spec.drift_irr_dx(x, t), dtype=float)
        d_p = np.asarray(spec.diffusion_dx(x, t), dtype=float)
        d_pp = np.asarray(spec.diffusion_dxx(x, t), dtype=float)
    return a_rev, a_irr, d, a_rev_p, a_irr_p, d_p, d_pp


def sep_increment_general(spec: ItoProcessSpec, x, t, dx, dt,
                          dlnp=0.0, derivatives: str = "auto"):
    """Entropy production of one step with raw displacement ``dx``.

    ``dx`` must be the unadjusted Ito move A dt + B dW; boundary wrapping or
    clamping artifacts do not belong in it. For two-dimensional specs the
    noise must be diagonal and the per-coordinate contributions are summed,
    which is exact precisely when the coordinates decouple.
    """
    if spec.dimension == 1:
        bundle = _coeff_bundle_1d(spec, x, t, derivatives)
        return _terms(*bundle, np.asarray(dx, dtype=float), dt) - dlnp
    bundle = _coeff_bundle_2d(spec, x, t, derivatives)
    per_coord = _terms(*bundle, np.asarray(dx, dtype=float), dt)
    return np.sum(per_coord, axis=-1) - dlnp


# ---------------------------------------------------------------------------
# Closed-form specializations. Each takes the Wiener increment, not dx.

def sep_rz(alpha_z: float, r, dw, dt, dlnp=0.0):
    """-dln p + 8 a^2 (1 + r^2) dt + 8 a r dW for the bare diagonal chart."""
    r = np.asarray(r, dtype=float)
    a2 = alpha_z * alpha_z
    return -np.asarray(dlnp, dtype=float) \
        + 8.0 * a2 * (1.0 + np.square(r)) * dt + 8.0 * alpha_z * r * np.asarray(dw)


def sep_y(alpha_z: float, y, dw, dt, dlnp=0.0):
    """-dln p + 4 a^2 (1 + tanh^2 y) dt + 4 a tanh(y) dW."""
    u = np.tanh(np.asarray(y, dtype=float))
    a2 = alpha_z * alpha_z
    return -np.asarray(dlnp, dtype=float) \
        + 4.0 * a2 * (1.0 + np.square(u)) * dt + 4.0 * alpha_z * u * np.asarray(dw)


def sep_theta(alpha_x: float, alpha_z: float, theta, dw, dt, dlnp=0.0):
    """Angle-chart specialization for two simultaneous channels."""
    th = np.asarray(theta, dtype=float)
    gap = alpha_x * alpha_x - alpha_z * alpha_z
    dhat = alpha_x**2 * np.square(np.cos(th)) + alpha_z**2 * np.square(np.sin(th))
    sin2 = np.sin(2.0 * th)
    drift_part = (6.0 * gap * np.cos(2.0 * th)
                  + 4.5 * gap * gap * np.square(sin2) / dhat) * dt
    noise_part = 3.0 * gap * sin2 / np.sqrt(dhat) * np.asarray(dw)
    return -np.asarray(dlnp, dtype=float) + drift_part + noise_part


def sep_2d_asymptotic(alpha: float, dw_y, dt, dlnp=0.0):
    """Late-time two-channel form: -dln p + 18 a^2 dt + 6 a dW_Y."""
    a2 = alpha * alpha
    return -np.asarray(dlnp, dtype=float) + 18.0 * a2 * dt \
        + 6.0 * alpha * np.asarray(dw_y)


def sep_stationary_shortcut(p_source: LogPdfSource,
                            p_stationary: LogPdfSource,
                            x, t, x_new, t_new):
    """-dln(p/p_st) between two path points.

    Valid when the dynamics admit a zero-current stationary density; the
    entropy production then measures only the deviation from stationarity.
    """
    if p_stationary is None:
        raise ConfigError("these dynamics have no zero-current stationary pdf")
    logp = as_logpdf(p_source)
    if isinstance(p_stationary, StationaryThetaPdf):
        log_st = lambda z: np.log(np.maximum(p_stationary(z), PDF_FLOOR))
    elif callable(p_stationary):
        log_st = p_stationary
    else:
        raise ConfigError("stationary pdf must be an evaluator")
    return (logp(x, t) - logp(x_new, t_new)) + (log_st(x_new) - log_st(x))


# ---------------------------------------------------------------------------
# Discrete forward/backward construction.

def phase_cell_halfwidth(alpha: float, dt: float, r):
    """Half the gap between the two branch images of r: the phase-space patch
    a discrete chain can resolve around its current state."""
    r_plus, r_minus, _, _ = rz_branch_map(alpha, dt, r)
    width = 0.5 * (r_plus - r_minus)
    if np.any(width <= 0.0):
        raise NumericsError("degenerate phase cell at an eigenstate")
    return width


def sep_discrete_oracle(chain: Sequence[KrausStepOutcome],
                        logp: LogPdfSource, t0: float = 0.0) -> EntropyLedger:
    """Entropy ledger of a discrete measurement chain.

    Per step: ln(p_fwd / p_bwd) + ln of the phase-cell contraction, plus the
    system part -dln p. The construction is independent of the diffusion-limit
    formulas, which is exactly why it serves as an oracle for them.
    """
    if not chain:
        raise ConfigError("empty chain")
    lp = as_logpdf(logp)
    dt = chain[0].dt
    n = len(chain)
    for out in chain:
        if out.channel.axis != "z":
            raise ConfigError("the discrete oracle covers sigma_z chains")
        if out.dt != dt:
            raise ConfigError("chain steps must share one dt")

    alpha = chain[0].channel.alpha
    times = t0 + dt * np.arange(n + 1)
    s_sys = np.zeros(n + 1)
    s_meas = np.zeros(n + 1)
    lp_prev = lp(chain[0].state_before.r_z, times[0])
    cell_prev = phase_cell_halfwidth(alpha, dt, chain[0].state_before.r_z)
    for k, out in enumerate(chain):
        r_new = out.state_after.r_z
        lp_new = lp(r_new, times[k + 1])
        cell_new = phase_cell_halfwidth(alpha, dt, r_new)
        s_sys[k + 1] = s_sys[k] + (lp_prev - lp_new)
        s_meas[k + 1] = s_meas[k] + log_prob_ratio(out) \
            + math.log(cell_prev / cell_new)
        lp_prev, cell_prev = lp_new, cell_new
    return EntropyLedger(times=times, s_tot=s_sys + s_meas,
                         s_sys=s_sys, s_meas=s_meas)


def discrete_ledger_batch(batch: RzChainBatch, logp: LogPdfSource) -> LedgerBatch:
    """Vectorized ledger for a batch of discrete chains.

    Both the system part and the phase-cell part telescope, so only the
    snapshot states and the accumulated probability log-ratios are needed.
    """
    lp = as_logpdf(logp)
    times = batch.times
    ln_cell = np.log(phase_cell_halfwidth(batch.alpha, batch.dt, batch.r))
    lp_snap = np.stack([np.asarray(lp(batch.r[k], times[k]), dtype=float)
                        for k in range(len(times))])
    s_sys = lp_snap[0][None, :] - lp_snap
    s_meas = batch.log_ratio_sum + (ln_cell[0][None, :] - ln_cell)
    return LedgerBatch(times=times, s_tot=s_sys + s_meas,
                       s_sys=s_sys, s_meas=s_meas)


# ---------------------------------------------------------------------------
# Ledgers for continuous trajectories.

def path_terms(spec: ItoProcessSpec, x, t, dw, dt, derivatives: str = "auto"):
    """Measurement part of one step's entropy increment (no pdf term).

    Rebuilds the raw move A dt + B dW from the stored noise so that boundary
    wrapping in the recorded states cannot contaminate the increment.
    """
    x = np.asarray(x, dtype=float)
    dw = np.asarray(dw, dtype=float)
    a = np.asarray(spec.drift_rev(x, t), dtype=float) \
        + np.asarray(spec.drift_irr(x, t), dtype=float)
    b = np.asarray(spec.noise(x, t), dtype=float)
    if spec.dimension == 1:
        dx = a * dt + b * dw
    else:
        dx = a * dt + np.einsum("...ij,...j->...i", b, dw)
    return sep_increment_general(spec, x, t, dx, dt, dlnp=0.0,
                                 derivatives=derivatives)


def ledger_from_trajectory(record: TrajectoryRecord, spec: ItoProcessSpec,
                           logp: LogPdfSource,
                           derivatives: str = "auto") -> EntropyLedger:
    """Entropy ledger along a stored trajectory.

    The system part telescopes through ln p snapshots; the measurement part
    accumulates the pathwise terms step by step. Coefficient evaluation is
    vectorized over time, which assumes the spec is autonomous (every chart
    factory here is).
    """
    lp = as_logpdf(logp)
    states = record.states
    times = record.times
    dt = record.dt
    x_old = states[:-1]
    t_old = times[:-1]
    dw = record.wiener[1:]
    increments = path_terms(spec, x_old, t_old, dw, dt, derivatives)
    s_meas = np.concatenate([[0.0], np.cumsum(increments)])
    lp_path = np.asarray(lp(states, times), dtype=float)
    s_sys = lp_path[0] - lp_path
    return EntropyLedger(times=times, s_tot=s_sys + s_meas,
                         s_sys=s_sys, s_meas=s_meas)


def asymptotic_Ytheta_logp(alpha: float) -> Callable:
    """ln p for the factorized late-time (Y, theta) density.

    Y carries a gaussian of mean 6 a^2 t and variance 4 a^2 t; theta is
    uniform on the circle.
    """
    if alpha <= 0.0:
        raise ConfigError("alpha must be positive")
    a2 = alpha * alpha

    def logp(x, t):
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0.0):
            raise ConfigError("asymptotic density needs t > 0")
        y = np.asarray(x, dtype=float)[..., 0]
        var = 4.0 * a2 * t
        return -np.square(y - 6.0 * a2 * t) / (2.0 * var) \
            - 0.5 * np.log(TWO_PI * var) - math.log(TWO_PI)

    return logp


def asymptotic_y_logp(alpha: float) -> Callable:
    """ln p for the late-time pair of drifting gaussians in y."""
    if alpha <= 0.0:
        raise ConfigError("alpha must be positive")
    a2 = alpha * alpha

    def logp(y, t):
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0.0):
            raise ConfigError("asymptotic density needs t > 0")
        y = np.asarray(y, dtype=float)
        drift = 4.0 * a2 * t
        var = 4.0 * a2 * t
        lo = -np.square(y - drift) / (2.0 * var)
        hi = -np.square(y + drift) / (2.0 * var)
        top = np.maximum(lo, hi)
        mix = top + np.log(np.exp(lo - top) + np.exp(hi - top))
        return mix - 0.5 * np.log(TWO_PI * var) - math.log(2.0)

    return logp


# ---------------------------------------------------------------------------
# Ensemble summaries.

def asymptotic_mean_rate(ledgers: Union[LedgerBatch, Sequence[EntropyLedger]],
                         window: Tuple[float, float]):
    """Least-squares slope of the ensemble-mean s_tot over a time window.

    Returns (slope, standard error of the slope).
    """
    if isinstance(ledgers, LedgerBatch):
        times = ledgers.times
        matrix = ledgers.s_tot
    else:
        ledgers = list(ledgers)
        if not ledgers:
            raise ConfigError("no ledgers supplied")
        times = ledgers[0].times
        for led in ledgers[1:]:
            if len(led.times) != len(times) or not np.allclose(led.times, times):
                raise ConfigError("ledgers must share one time grid")
        matrix = np.stack([led.s_tot for led in ledgers], axis=1)
    if matrix.shape[1] < 10:
        raise ConfigError("rate estimation needs at least 10 ledgers")

    t_lo, t_hi = window
    mask = (times >= t_lo - 1e-12) & (times <= t_hi + 1e-12)
    if int(mask.sum()) < 100:
        raise ConfigError("window too short: fewer than 100 ledger points")
    t = times[mask]
    y = matrix[mask].mean(axis=1)

    t_bar = t.mean()
    s_tt = float(np.sum((t - t_bar) ** 2))
    slope = float(np.sum((t - t_bar) * (y - y.mean())) / s_tt)
    intercept = float(y.mean() - slope * t_bar)
    resid = y - (intercept + slope * t)
    sigma2 = float(resid @ resid) / (len(t) - 2)
    return slope, math.sqrt(sigma2 / s_tt)


def gibbs_entropy(field: PdfField, t: float) -> float:
    """-sum p ln p h of the stored slice at time t (0 ln 0 = 0)."""
    p = field.slice_at(t)
    return float(-np.sum(xlogy(p, p)) * field.grid.h)


def kl_divergence(p: Callable, q: Callable, domain: Tuple[float, float]) -> float:
    """Quadrature of p ln(p/q) over the domain; p, q are density evaluators."""
    lo, hi = domain
    if not lo < hi:
        raise ConfigError("domain must be an ordered pair")

    def integrand(x):
        pv = float(p(x))
        if pv <= 0.0:
            return 0.0
        qv = float(q(x))
        if qv <= 0.0:
            raise ConfigError("support mismatch: q vanishes where p does not")
        return pv * math.log(pv / qv)

    value, _ = quad(integrand, lo, hi, epsabs=1e-11, epsrel=1e-10, limit=200)
    return value


# ---------------------------------------------------------------------------
# Export.

def ledgers_to_csv(path, ledgers: Union[LedgerBatch, Sequence[EntropyLedger]]):
    """Write ledgers as CSV rows (t, s_tot, s_sys, s_meas, trajectory_id)."""
    if isinstance(ledgers, LedgerBatch):
        ledgers = [ledgers.trajectory(j) for j in range(ledgers.n_trajectories)]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("t,s_tot,s_sys,s_meas,trajectory_id\n")
        for j, led in enumerate(ledgers):
            for k in range(len(led.times)):
                fh.write("%.17g,%.17g,%.17g,%.17g,%d\n"
                         % (led.times[k], led.s_tot[k], led.s_sys[k],
                            led.s_meas[k], j))


def ledgers_from_csv(path) -> list:
    """Read back ledgers written by ledgers_to_csv, ordered by trajectory id."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    data = np.atleast_1d(data)
    ids = data["trajectory_id"].astype(int)
    out = []
    for j in np.unique(ids):
        rows = data[ids == j]
        out.append(EntropyLedger(times=rows["t"], s_tot=rows["s_tot"],
                                 s_sys=rows["s_sys"], s_meas=rows["s_meas"]))
    return out
