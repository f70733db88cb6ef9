"""Fokker-Planck solvers and analytic probability densities.

The solver advances dp/dt = -dJ/dx with J = A p - d(D p)/dx in flux form on a
uniform 1D grid, so the discrete mass sum(p) * h is conserved to roundoff by
construction (zero-flux walls or periodic wraparound). Time stepping is
explicit with automatic sub-stepping against the stability bound
dt <= h^2 / (2 max D + h max|A|).

Alongside the solver live the closed-form densities used as references: the
stationary angle distribution under two unequal measurement channels (built
on the complete elliptic integral of the second kind) and the late-time
gaussian forms in the unbounded coordinates.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .errors import ConfigError, NumericsError
from .sde import ItoProcessSpec

SQRT2 = math.sqrt(2.0)
TWO_PI = 2.0 * math.pi

# Densities are floored here before taking logarithms.
PDF_FLOOR = 1e-300

_GRID_KINDS = ("bounded", "truncated_line", "periodic")
_KIND_CODES = {"bounded": 0, "truncated_line": 1, "periodic": 2}
_CODE_KINDS = {v: k for k, v in _KIND_CODES.items()}

BINARY_MAGIC = b"QSDPDF1"


@dataclass(frozen=True)
class Grid1D:
    """Uniform 1D grid; periodic grids cover (-pi, pi] without duplicating pi."""

    kind: str
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.kind not in _GRID_KINDS:
            raise ConfigError(f"unknown grid kind {self.kind!r}")
        if self.n < 16:
            raise ConfigError("grid needs at least 16 nodes")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)
                and self.lo < self.hi):
            raise ConfigError("grid needs finite lo < hi")
        if self.kind == "periodic":
            if abs(self.lo + math.pi) > 1e-12 or abs(self.hi - math.pi) > 1e-12:
                raise ConfigError("periodic grids span exactly (-pi, pi]")

    @classmethod
    def bounded(cls, lo: float, hi: float, n: int) -> "Grid1D":
        return cls("bounded", lo, hi, n)

    @classmethod
    def truncated(cls, half_width: float, n: int) -> "Grid1D":
        return cls("truncated_line", -half_width, half_width, n)

    @classmethod
    def circle(cls, n: int) -> "Grid1D":
        return cls("periodic", -math.pi, math.pi, n)

    @property
    def h(self) -> float:
        span = self.hi - self.lo
        return span / self.n if self.kind == "periodic" else span / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        if self.kind == "periodic":
            return self.lo + self.h * np.arange(self.n)
        return np.linspace(self.lo, self.hi, self.n)

    @property
    def mass_tolerance(self) -> float:
        # The truncated line only approximates an unbounded domain, so its
        # normalization budget is looser.
        return 1e-4 if self.kind == "truncated_line" else 1e-6


@dataclass(frozen=True)
class PdfField:
    """Density snapshots p(x_i, t_k) on a grid, at uniformly spaced times."""

    grid: Grid1D
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape != (len(times), self.grid.n):
            raise ConfigError("values must have shape (n_times, grid.n)")
        if len(times) < 1:
            raise ConfigError("at least one time slice required")
        if len(times) > 1:
            steps = np.diff(times)
            if np.any(steps <= 0) or not np.allclose(steps, steps[0],
                                                     rtol=1e-9, atol=1e-12):
                raise ConfigError("times must be uniformly increasing")
        if np.min(values) < -1e-12:
            raise ConfigError("density values must be nonnegative")
        masses = values.sum(axis=1) * self.grid.h
        if np.max(np.abs(masses - 1.0)) > self.grid.mass_tolerance:
            raise ConfigError("every stored slice must have unit mass")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def dt(self) -> float:
        if len(self.times) < 2:
            raise ConfigError("single-slice field has no time step")
        return float(self.times[1] - self.times[0])

    def mass(self) -> np.ndarray:
        return self.values.sum(axis=1) * self.grid.h

    def mean(self) -> np.ndarray:
        return self.values @ self.grid.nodes * self.grid.h

    def slice_at(self, t: float) -> np.ndarray:
        k = int(round((t - self.times[0]) / self.dt)) if len(self.times) > 1 else 0
        if not (0 <= k < len(self.times)) or abs(self.times[k] - t) > 1e-9:
            raise ConfigError(f"no stored slice at t = {t!r}")
        return self.values[k]


def logpdf_lookup(field: PdfField, x, t) -> np.ndarray:
    """Bilinear interpolation of ln p (never of p itself) at (x, t).

    Densities are floored at PDF_FLOOR before the logarithm; queries outside
    the grid span or the stored time window are errors.
    """
    grid = field.grid
    times = field.times
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)

    t_lo, t_hi = times[0], times[-1]
    slack_t = 1e-9 * max(1.0, abs(t_hi))
    if np.any(t < t_lo - slack_t) or np.any(t > t_hi + slack_t):
        raise ConfigError("time outside the stored window")
    if len(times) == 1:
        k = np.zeros(t.shape, dtype=int)
        frac_t = np.zeros(t.shape)
    else:
        u = (t - t_lo) / field.dt
        k = np.clip(np.floor(u).astype(int), 0, len(times) - 2)
        frac_t = np.clip(u - k, 0.0, 1.0)

    h = grid.h
    if grid.kind == "periodic":
        v = np.mod((x - grid.lo) / h, grid.n)
        i = np.minimum(np.floor(v).astype(int), grid.n - 1)
        frac_x = v - i
        i_next = (i + 1) % grid.n
    else:
        span = grid.hi - grid.lo
        if np.any(x < grid.lo - 1e-12 * span) or np.any(x > grid.hi + 1e-12 * span):
            raise ConfigError("position outside the grid span")
        v = (x - grid.lo) / h
        i = np.clip(np.floor(v).astype(int), 0, grid.n - 2)
        frac_x = np.clip(v - i, 0.0, 1.0)
        i_next = i + 1

    logp = np.log(np.maximum(field.values, PDF_FLOOR))
    lo_t = logp[k, i] * (1.0 - frac_x) + logp[k, i_next] * frac_x
    k_next = np.minimum(k + 1, len(times) - 1)
    hi_t = logp[k_next, i] * (1.0 - frac_x) + logp[k_next, i_next] * frac_x
    out = lo_t * (1.0 - frac_t) + hi_t * frac_t
    return out if out.shape else float(out)


def _grid_matches_domain(spec: ItoProcessSpec, grid: Grid1D) -> None:
    dom = spec.domain
    if isinstance(dom, tuple):
        raise ConfigError("FPE solves are one-dimensional")
    if dom.kind == "interval":
        if grid.kind != "bounded" or abs(grid.lo - dom.lo) > 1e-9 \
                or abs(grid.hi - dom.hi) > 1e-9:
            raise ConfigError("grid must cover the spec's interval domain")
    elif dom.kind == "line":
        if grid.kind != "truncated_line":
            raise ConfigError("line-domain specs need a truncated_line grid")
    elif dom.kind == "periodic":
        if grid.kind != "periodic":
            raise ConfigError("periodic specs need a periodic grid")
    else:
        raise ConfigError(f"no FPE support for domain kind {dom.kind!r}")


def stability_bound(spec: ItoProcessSpec, grid: Grid1D, t: float = 0.0) -> float:
    """Largest stable explicit step h^2 / (2 max D + h max|A|)."""
    x = grid.nodes
    d = np.asarray(spec.diffusion(x, t) if spec.diffusion is not None
                   else 0.5 * np.square(spec.noise(x, t)), dtype=float)
    a = np.abs(np.asarray(spec.drift_rev(x, t), dtype=float)
               + np.asarray(spec.drift_irr(x, t), dtype=float))
    denom = 2.0 * float(np.max(d)) + grid.h * float(np.max(a))
    if denom <= 0.0:
        return math.inf
    return grid.h ** 2 / denom


def evolve_fpe(spec: ItoProcessSpec, grid: Grid1D, initial, horizon: float,
               dt_store: float, substep_dt: float = None) -> PdfField:
    """Advance an initial density and store snapshots every ``dt_store``.

    The internal step is chosen automatically below the stability bound
    unless ``substep_dt`` forces one; a forced step above the bound is a
    numerics error, as is any density dipping below -1e-9.
    """
    if spec.dimension != 1:
        raise ConfigError("evolve_fpe handles one-dimensional specs only")
    _grid_matches_domain(spec, grid)
    p = np.array(initial, dtype=float)
    if p.shape != (grid.n,):
        raise ConfigError("initial slice must match the grid")
    if np.min(p) < -1e-12:
        raise ConfigError("initial density must be nonnegative")
    if abs(p.sum() * grid.h - 1.0) > grid.mass_tolerance:
        raise ConfigError("initial slice must be normalized")
    if not (dt_store > 0.0 and horizon >= dt_store):
        raise ConfigError("need horizon >= dt_store > 0")
    n_store = round(horizon / dt_store)
    if abs(n_store * dt_store - horizon) > 1e-9 * max(1.0, horizon):
        raise ConfigError("horizon must be an integer multiple of dt_store")

    h = grid.h
    x = grid.nodes
    periodic = grid.kind == "periodic"
    if periodic:
        # index-shift views beat np.roll in the substep loop
        fwd = np.arange(1, grid.n + 1) % grid.n
        back = np.arange(-1, grid.n - 1)

    values = np.empty((n_store + 1, grid.n))
    values[0] = np.maximum(p, 0.0)
    times = dt_store * np.arange(n_store + 1)

    for k in range(n_store):
        t_k = k * dt_store
        a = np.asarray(spec.drift_rev(x, t_k), dtype=float) \
            + np.asarray(spec.drift_irr(x, t_k), dtype=float)
        d = np.asarray(spec.diffusion(x, t_k) if spec.diffusion is not None
                       else 0.5 * np.square(spec.noise(x, t_k)), dtype=float)
        if np.any(d < 0.0):
            raise NumericsError("negative diffusion coefficient")
        denom = 2.0 * float(np.max(d)) + h * float(np.max(np.abs(a)))
        bound = math.inf if denom <= 0.0 else h * h / denom
        if substep_dt is not None:
            if substep_dt > bound * (1.0 + 1e-12):
                raise NumericsError(
                    f"substep {substep_dt:.3e} exceeds stability bound {bound:.3e}")
            n_sub = max(1, round(dt_store / substep_dt))
            if abs(n_sub * substep_dt - dt_store) > 1e-9 * dt_store:
                raise ConfigError("dt_store must be a multiple of substep_dt")
        else:
            n_sub = max(1, math.ceil(dt_store / (0.9 * bound))) \
                if math.isfinite(bound) else 1
        dt_sub = dt_store / n_sub

        for _ in range(n_sub):
            ap = a * p
            dp = d * p
            if periodic:
                flux = 0.5 * (ap + ap[fwd]) - (dp[fwd] - dp) / h
                p = p - (dt_sub / h) * (flux - flux[back])
            else:
                flux = 0.5 * (ap[:-1] + ap[1:]) - (dp[1:] - dp[:-1]) / h
                p = p.copy()
                p[0] -= (dt_sub / h) * flux[0]
                p[1:-1] -= (dt_sub / h) * (flux[1:] - flux[:-1])
                p[-1] += (dt_sub / h) * flux[-1]

        if not np.all(np.isfinite(p)):
            raise NumericsError(f"density diverged by t = {times[k + 1]:.6g}")
        if np.min(p) < -1e-9:
            raise NumericsError(
                f"density fell below -1e-9 at t = {times[k + 1]:.6g}")
        values[k + 1] = np.maximum(p, 0.0)

    return PdfField(grid=grid, times=times, values=values)


# ---------------------------------------------------------------------------
# Analytic densities.

def complete_elliptic_E(x: float) -> float:
    """E(x) = integral_0^{pi/2} sqrt(1 - x sin^2 phi) dphi, for x <= 1.

    Computed by adaptive quadrature of the defining integral, which keeps the
    (parameter, not modulus) convention unambiguous and covers negative x.
    """
    if not math.isfinite(x) or x > 1.0:
        raise ConfigError("complete_elliptic_E requires x <= 1")
    value, _ = quad(lambda phi: math.sqrt(1.0 - x * math.sin(phi) ** 2),
                    0.0, 0.5 * math.pi, epsabs=1e-13, epsrel=1e-13)
    return value


@dataclass(frozen=True)
class StationaryThetaPdf:
    """Zero-current stationary angle density for strength ratio mu = a_x/a_z.

    p_st(theta) = sqrt(2) mu^2 (1 + mu^2 - (1 - mu^2) cos 2theta)^(-3/2) / Z,
    Z = E(1 - mu^2) + mu E(1 - mu^(-2)).
    """

    mu: float
    normalization: float

    def __call__(self, theta):
        m2 = self.mu * self.mu
        core = 1.0 + m2 - (1.0 - m2) * np.cos(2.0 * np.asarray(theta, dtype=float))
        return SQRT2 * m2 * core ** (-1.5) / self.normalization


def stationary_theta_pdf(mu: float) -> StationaryThetaPdf:
    if not (math.isfinite(mu) and mu > 0.0):
        raise ConfigError("mu must be positive and finite")
    z = complete_elliptic_E(1.0 - mu * mu) \
        + mu * complete_elliptic_E(1.0 - 1.0 / (mu * mu))
    return StationaryThetaPdf(mu=float(mu), normalization=z)


def stationary_moments(mu: float):
    """First and second moments of (r_x, r_z) = (sin, cos) theta at stationarity."""
    pdf = stationary_theta_pdf(mu)

    def moment(f: Callable[[float], float]) -> float:
        value, _ = quad(lambda th: f(th) * pdf(th), -math.pi, math.pi,
                        epsabs=1e-12, epsrel=1e-12, limit=200)
        return value

    mean_rx = moment(math.sin)
    mean_rz = moment(math.cos)
    var_rx = moment(lambda th: math.sin(th) ** 2) - mean_rx ** 2
    var_rz = moment(lambda th: math.cos(th) ** 2) - mean_rz ** 2
    return mean_rx, mean_rz, var_rx, var_rz


def asymptotic_pdfs(alpha: float, coordinate: str) -> Callable:
    """Late-time analytic densities for the unbounded purity coordinates.

    coordinate "y": equal-weight gaussians drifting to +-4 a^2 t, each with
    variance 4 a^2 t. coordinate "Y": a single gaussian with mean 6 a^2 t and
    variance 4 a^2 t (two equal channels).
    """
    if alpha <= 0.0:
        raise ConfigError("alpha must be positive")
    a2 = alpha * alpha

    def gaussian(x, mean, var):
        return np.exp(-np.square(x - mean) / (2.0 * var)) / math.sqrt(TWO_PI * var)

    if coordinate == "y":
        def evaluator(y, t):
            if np.any(np.asarray(t) <= 0.0):
                raise ConfigError("asymptotic density needs t > 0")
            drift, var = 4.0 * a2 * t, 4.0 * a2 * t
            y = np.asarray(y, dtype=float)
            return 0.5 * (gaussian(y, drift, var) + gaussian(y, -drift, var))
        return evaluator
    if coordinate == "Y":
        def evaluator(big_y, t):
            if np.any(np.asarray(t) <= 0.0):
                raise ConfigError("asymptotic density needs t > 0")
            return gaussian(np.asarray(big_y, dtype=float), 6.0 * a2 * t,
                            4.0 * a2 * t)
        return evaluator
    raise ConfigError("coordinate must be 'y' or 'Y'")


def rz_logpdf_from_y_field(field: PdfField, r, t):
    """ln p(r_z, t) obtained from a density stored in y = atanh(r_z).

    Change of variables: p_r(r) = p_y(atanh r) / (1 - r^2).
    """
    r = np.clip(np.asarray(r, dtype=float), -1.0 + 1e-15, 1.0 - 1e-15)
    y = np.arctanh(r)
    return logpdf_lookup(field, y, t) - np.log1p(-np.square(r))


# ---------------------------------------------------------------------------
# Initial profiles (normalized discretely so the solver's mass is exactly 1).

def _discrete_normalize(grid: Grid1D, p: np.ndarray) -> np.ndarray:
    total = p.sum() * grid.h
    if total <= 0.0:
        raise ConfigError("profile has no mass on this grid")
    return p / total


def gaussian_profile(grid: Grid1D, center: float, sigma: float) -> np.ndarray:
    if sigma <= 0.0:
        raise ConfigError("sigma must be positive")
    x = grid.nodes
    return _discrete_normalize(grid, np.exp(-np.square(x - center)
                                            / (2.0 * sigma * sigma)))


def uniform_profile(grid: Grid1D) -> np.ndarray:
    return np.full(grid.n, 1.0 / (grid.n * grid.h))


def y_profile_from_rz_gaussian(grid: Grid1D, sigma0: float,
                               center: float = 0.0) -> np.ndarray:
    """Pushforward of a gaussian in r_z through y = atanh(r_z)."""
    if sigma0 <= 0.0:
        raise ConfigError("sigma0 must be positive")
    y = grid.nodes
    r = np.tanh(y)
    density = np.exp(-np.square(r - center) / (2.0 * sigma0 * sigma0)) \
        * (1.0 - np.square(r))
    return _discrete_normalize(grid, density)


def default_y_halfwidth(alpha: float, t_max: float) -> float:
    """Wall distance keeping the drifting gaussians clear of the truncation."""
    return 6.0 * alpha * alpha * t_max + 20.0 * alpha * math.sqrt(t_max)


# ---------------------------------------------------------------------------
# Export formats.

def field_to_csv(field: PdfField, path) -> None:
    with open(path, "w") as fh:
        fh.write("t,x,p\n")
        nodes = field.grid.nodes
        for t, row in zip(field.times, field.values):
            for x, p in zip(nodes, row):
                fh.write(f"{t:.17g},{x:.17g},{p:.17g}\n")


def field_from_csv(path, kind: str) -> PdfField:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    if data.ndim != 2 or data.shape[1] != 3:
        raise ConfigError("expected three columns t, x, p")
    t_col, x_col, p_col = data.T
    times = np.unique(t_col)
    nodes = x_col[t_col == times[0]]
    n = len(nodes)
    if len(t_col) != n * len(times):
        raise ConfigError("ragged CSV field")
    h = nodes[1] - nodes[0]
    hi = nodes[-1] + h if kind == "periodic" else nodes[-1]
    grid = Grid1D(kind, float(nodes[0]), float(hi), n)
    values = p_col.reshape(len(times), n)
    return PdfField(grid=grid, times=times, values=values)


def field_to_binary(field: PdfField, path) -> None:
    grid = field.grid
    header = BINARY_MAGIC + struct.pack("<B", _KIND_CODES[grid.kind]) \
        + struct.pack("<dd", grid.lo, grid.hi) \
        + struct.pack("<QQ", grid.n, len(field.times))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(field.times, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def field_from_binary(path) -> PdfField:
    with open(path, "rb") as fh:
        blob = fh.read()
    fixed = len(BINARY_MAGIC) + 1 + 16 + 16
    if len(blob) < fixed or not blob.startswith(BINARY_MAGIC):
        raise ConfigError("not a pdf-field binary file")
    offset = len(BINARY_MAGIC)
    (code,) = struct.unpack_from("<B", blob, offset)
    offset += 1
    lo, hi = struct.unpack_from("<dd", blob, offset)
    offset += 16
    n, n_times = struct.unpack_from("<QQ", blob, offset)
    offset += 16
    if code not in _CODE_KINDS:
        raise ConfigError(f"unknown grid kind code {code}")
    expected = offset + 8 * n_times * (n + 1)
    if len(blob) != expected:
        raise ConfigError("truncated pdf-field binary file")
    times = np.frombuffer(blob, dtype="<f8", count=n_times, offset=offset)
    offset += 8 * n_times
    values = np.frombuffer(blob, dtype="<f8", count=n * n_times,
                           offset=offset).reshape(n_times, n)
    grid = Grid1D(_CODE_KINDS[code], lo, hi, int(n))
    return PdfField(grid=grid, times=times.copy(), values=values.copy())
