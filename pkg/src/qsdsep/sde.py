"""Euler-Maruyama integration of the measurement diffusion processes.

Each coordinate chart of the conditioned qubit state is described by an
:class:`ItoProcessSpec`: an Ito process dx = (A_rev + A_irr)dt + B dW with the
drift split by time-reversal parity. The splitting matters only to the entropy
engine; the integrator uses the sum.

Coefficient functions are written with numpy ufuncs so they accept either a
single state or a batch. For one-dimensional specs the state is a scalar (or
an array of scalars); for two-dimensional specs the state has shape (..., 2),
drifts return (..., 2) and the noise function returns a (..., 2, 2) matrix
acting on independent Wiener increments.

Where a spec can supply analytic spatial derivatives of its coefficients
(needed by the entropy engine) they are attached to the spec; consumers fall
back to finite differences otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np

from .errors import ConfigError, NumericsError
from .streams import trajectory_stream

TWO_PI = 2.0 * math.pi

# Default floor for the Y coordinate: the (Y, theta) chart is singular at the
# maximally mixed state, so trajectories start at and reflect off Y = Y_FLOOR.
Y_FLOOR = 1e-3


def wrap_angle(x):
    """Map angles into the fundamental interval (-pi, pi]."""
    return x - TWO_PI * np.ceil((x - math.pi) / TWO_PI)


_DOMAIN_KINDS = ("interval", "line", "half_line", "periodic", "disc")
_POLICIES = ("clamp", "reflect", "none")


@dataclass(frozen=True)
class Domain:
    """State space of one coordinate (or of a 2-vector, for kind "disc").

    ``policy`` is the natural boundary rule for overshoot produced by the
    discrete stepper; the exact dynamics cannot leave the domain because the
    noise amplitude vanishes on its boundary.
    """

    kind: str
    lo: float = -math.inf
    hi: float = math.inf
    policy: str = "none"

    def __post_init__(self):
        if self.kind not in _DOMAIN_KINDS:
            raise ConfigError(f"unknown domain kind {self.kind!r}")
        if self.policy not in _POLICIES:
            raise ConfigError(f"unknown boundary policy {self.policy!r}")
        if self.kind == "interval":
            if not (math.isfinite(self.lo) and math.isfinite(self.hi)
                    and self.lo < self.hi):
                raise ConfigError("interval domain needs finite lo < hi")
        if self.kind == "half_line" and not math.isfinite(self.lo):
            raise ConfigError("half_line domain needs a finite lower edge")

    def contains(self, x, rtol: float = 1e-12) -> bool:
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            return False
        if self.kind == "interval":
            slack = rtol * (self.hi - self.lo)
            return bool(np.all(x >= self.lo - slack) and np.all(x <= self.hi + slack))
        if self.kind == "half_line":
            return bool(np.all(x >= self.lo - rtol * max(1.0, abs(self.lo))))
        if self.kind == "periodic":
            return bool(np.all(np.abs(x) <= math.pi + rtol))
        if self.kind == "disc":
            return bool(np.all(np.sum(x * x, axis=-1) <= 1.0 + rtol))
        return True

    def apply(self, x, policy: Optional[str] = None):
        """Return x adjusted by the boundary policy (vectorized)."""
        pol = self.policy if policy is None else policy
        if self.kind == "line":
            return x
        if self.kind == "periodic":
            # Wrapping is part of the representation, not an optional policy.
            return wrap_angle(x)
        if self.kind == "interval":
            if pol == "clamp":
                return np.clip(x, self.lo, self.hi)
            if pol == "reflect":
                span = self.hi - self.lo
                folded = np.mod(np.asarray(x, dtype=float) - self.lo, 2.0 * span)
                folded = np.where(folded > span, 2.0 * span - folded, folded)
                return self.lo + folded
            return x
        if self.kind == "half_line":
            if pol == "reflect":
                return self.lo + np.abs(x - self.lo)
            if pol == "clamp":
                return np.maximum(x, self.lo)
            return x
        # disc: act on the vector norm; reflecting off a curved boundary is
        # not meaningful for our charts, so overshoot is projected radially.
        if pol == "reflect":
            raise ConfigError("reflect is not supported on the disc domain")
        if pol == "none":
            return x
        norm = np.sqrt(np.sum(x * x, axis=-1, keepdims=True))
        scale = np.where(norm > 1.0, 1.0 / np.maximum(norm, 1e-300), 1.0)
        return x * scale


DomainLike = Union[Domain, Tuple[Domain, ...]]


@dataclass(frozen=True)
class ItoProcessSpec:
    """Coefficients of dx = (A_rev + A_irr)dt + B dW on a stated domain.

    The optional analytic-derivative callables follow the same batch
    conventions as the coefficients. For dimension 2 the noise matrix of every
    chart used here is diagonal wherever derivatives are consumed, and
    ``diffusion`` returns the per-coordinate diagonal D_i = B_ii^2 / 2 with
    ``*_dx`` derivatives taken along the matching coordinate.
    """

    dimension: int
    labels: Tuple[str, ...]
    wiener_labels: Tuple[str, ...]
    drift_rev: Callable
    drift_irr: Callable
    noise: Callable
    domain: DomainLike
    diffusion: Optional[Callable] = None
    diffusion_dx: Optional[Callable] = None
    diffusion_dxx: Optional[Callable] = None
    drift_rev_dx: Optional[Callable] = None
    drift_irr_dx: Optional[Callable] = None
    name: str = ""

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ConfigError("dimension must be 1 or 2")
        if len(self.labels) != self.dimension:
            raise ConfigError("one label per coordinate required")
        if len(self.wiener_labels) != self.dimension:
            raise ConfigError("one Wiener label per noise source required")
        if isinstance(self.domain, tuple):
            if len(self.domain) != self.dimension:
                raise ConfigError("one domain per coordinate required")

    def contains(self, state, rtol: float = 1e-12) -> bool:
        x = np.asarray(state, dtype=float)
        if isinstance(self.domain, tuple):
            return all(d.contains(x[..., i], rtol)
                       for i, d in enumerate(self.domain))
        return self.domain.contains(x, rtol)

    def apply_boundary(self, state, policy: Optional[str] = None):
        if isinstance(self.domain, tuple):
            out = np.array(state, dtype=float, copy=True)
            for i, d in enumerate(self.domain):
                out[..., i] = d.apply(out[..., i], policy)
            return out
        return self.domain.apply(state, policy)


@dataclass(frozen=True)
class StepperConfig:
    """Time grid and boundary handling for a single integration run.

    ``boundary`` of None defers to each domain's natural policy; "none"
    disables overshoot correction (periodic wrapping still applies).
    """

    dt: float
    t_max: float
    boundary: Optional[str] = None
    chart: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ConfigError("dt must be positive and finite")
        if not (math.isfinite(self.t_max) and self.t_max >= self.dt):
            raise ConfigError("t_max must satisfy t_max >= dt")
        if self.boundary is not None and self.boundary not in _POLICIES:
            raise ConfigError(f"unknown boundary policy {self.boundary!r}")
        n = round(self.t_max / self.dt)
        if abs(n * self.dt - self.t_max) > 1e-9 * max(1.0, self.t_max):
            raise ConfigError("t_max must be an integer multiple of dt")

    @property
    def n_steps(self) -> int:
        return round(self.t_max / self.dt)

    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)


@dataclass(frozen=True)
class TrajectoryRecord:
    """A realized path with the Wiener increments that produced it.

    Row k of ``wiener`` is the increment over (t_{k-1}, t_k]; row 0 is zero.
    Keeping the noise path lets the entropy engine re-use the identical
    realization instead of re-drawing.
    """

    labels: Tuple[str, ...]
    wiener_labels: Tuple[str, ...]
    times: np.ndarray
    states: np.ndarray
    wiener: np.ndarray
    seed: int
    stream_index: int = 0
    chart: str = ""

    def __post_init__(self):
        if len(self.times) != len(self.states) or len(self.times) != len(self.wiener):
            raise ConfigError("times, states and wiener must have equal length")
        if len(self.times) < 2:
            raise ConfigError("a trajectory needs at least one step")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1


def _coefficients(spec: ItoProcessSpec, x, t: float):
    a = np.asarray(spec.drift_rev(x, t), dtype=float) \
        + np.asarray(spec.drift_irr(x, t), dtype=float)
    b = np.asarray(spec.noise(x, t), dtype=float)
    return a, b


def euler_maruyama_step(spec: ItoProcessSpec, state, t: float, dt: float,
                        noise_increments, boundary: Optional[str] = None):
    """One Ito step x -> x + A dt + B dW, then the boundary policy.

    Accepts batches: for dimension 1, ``state`` and ``noise_increments`` share
    an arbitrary shape; for dimension 2 they have shape (..., 2).
    """
    x = np.asarray(state, dtype=float)
    dw = np.asarray(noise_increments, dtype=float)
    a, b = _coefficients(spec, x, t)
    if spec.dimension == 1:
        move = a * dt + b * dw
    else:
        move = a * dt + np.einsum("...ij,...j->...i", b, dw)
    if not np.all(np.isfinite(move)):
        raise NumericsError(f"non-finite SDE coefficients at t = {t:.6g}")
    return spec.apply_boundary(x + move, boundary)


def simulate_trajectory(spec: ItoProcessSpec, initial, config: StepperConfig,
                        seed: int, stream_index: int = 0) -> TrajectoryRecord:
    """Integrate one path; a pure function of (spec, initial, config, seed)."""
    x0 = np.asarray(initial, dtype=float)
    if spec.dimension == 2 and x0.shape != (2,):
        raise ConfigError("initial state must be a 2-vector for this spec")
    if spec.dimension == 1 and x0.shape != ():
        raise ConfigError("initial state must be a scalar for this spec")
    if not spec.contains(x0):
        raise ConfigError(f"initial state {x0!r} outside the spec domain")

    n = config.n_steps
    dt = config.dt
    rng = trajectory_stream(seed, stream_index)
    if spec.dimension == 1:
        dw = rng.standard_normal(n) * math.sqrt(dt)
        states = np.empty(n + 1)
        wiener = np.zeros(n + 1)
        wiener[1:] = dw
    else:
        dw = rng.standard_normal((n, 2)) * math.sqrt(dt)
        states = np.empty((n + 1, 2))
        wiener = np.zeros((n + 1, 2))
        wiener[1:] = dw
    states[0] = x0

    x = x0
    for k in range(n):
        try:
            x = euler_maruyama_step(spec, x, k * dt, dt, dw[k], config.boundary)
        except NumericsError as exc:
            raise NumericsError(f"step {k + 1}: {exc}") from exc
        states[k + 1] = x

    return TrajectoryRecord(labels=spec.labels, wiener_labels=spec.wiener_labels,
                            times=config.times(), states=states, wiener=wiener,
                            seed=int(seed), stream_index=int(stream_index),
                            chart=config.chart or spec.name)


# ---------------------------------------------------------------------------
# Chart factories.

def spec_rz(alpha_z: float) -> ItoProcessSpec:
    """Diagonal Bloch coordinate under a single sigma_z channel.

    dr_z = 2 alpha_z (1 - r_z^2) dW, a driftless martingale on [-1, 1].
    """
    if alpha_z < 0.0:
        raise ConfigError("alpha_z must be nonnegative")
    a = float(alpha_z)

    def zero(x, t):
        return np.zeros_like(np.asarray(x, dtype=float))

    def noise(x, t):
        return 2.0 * a * (1.0 - np.square(x))

    def diffusion(x, t):
        return 2.0 * a * a * np.square(1.0 - np.square(x))

    def diffusion_dx(x, t):
        return -8.0 * a * a * x * (1.0 - np.square(x))

    def diffusion_dxx(x, t):
        return -8.0 * a * a * (1.0 - 3.0 * np.square(x))

    return ItoProcessSpec(
        dimension=1, labels=("r_z",), wiener_labels=("dW_z",),
        drift_rev=zero, drift_irr=zero, noise=noise,
        domain=Domain("interval", -1.0, 1.0, policy="clamp"),
        diffusion=diffusion, diffusion_dx=diffusion_dx,
        diffusion_dxx=diffusion_dxx, drift_rev_dx=zero, drift_irr_dx=zero,
        name="rz")


def spec_y(alpha_z: float) -> ItoProcessSpec:
    """The unbounded coordinate y = atanh(r_z): dy = 4a^2 tanh(y) dt + 2a dW."""
    if alpha_z < 0.0:
        raise ConfigError("alpha_z must be nonnegative")
    a = float(alpha_z)

    def zero(x, t):
        return np.zeros_like(np.asarray(x, dtype=float))

    def drift_irr(y, t):
        return 4.0 * a * a * np.tanh(y)

    def drift_irr_dx(y, t):
        return 4.0 * a * a / np.square(np.cosh(y))

    def noise(y, t):
        return np.full_like(np.asarray(y, dtype=float), 2.0 * a)

    def diffusion(y, t):
        return np.full_like(np.asarray(y, dtype=float), 2.0 * a * a)

    return ItoProcessSpec(
        dimension=1, labels=("y",), wiener_labels=("dW_z",),
        drift_rev=zero, drift_irr=drift_irr, noise=noise,
        domain=Domain("line"),
        diffusion=diffusion, diffusion_dx=zero, diffusion_dxx=zero,
        drift_rev_dx=zero, drift_irr_dx=drift_irr_dx,
        name="y")


def spec_theta(alpha_x: float, alpha_z: float) -> ItoProcessSpec:
    """Bloch angle under simultaneous sigma_x and sigma_z measurement.

    dtheta = (ax^2 - az^2) sin(2 theta) dt
             + 2 sqrt(ax^2 cos^2 theta + az^2 sin^2 theta) dW,
    periodic on (-pi, pi]. The drift is irreversible: it encodes measurement
    backaction, not Hamiltonian motion.
    """
    if alpha_x < 0.0 or alpha_z < 0.0:
        raise ConfigError("measurement strengths must be nonnegative")
    if alpha_x == 0.0 and alpha_z == 0.0:
        raise ConfigError("at least one channel must have nonzero strength")
    ax2 = float(alpha_x) ** 2
    az2 = float(alpha_z) ** 2
    gap = ax2 - az2

    def zero(x, t):
        return np.zeros_like(np.asarray(x, dtype=float))

    def drift_irr(th, t):
        return gap * np.sin(2.0 * th)

    def drift_irr_dx(th, t):
        return 2.0 * gap * np.cos(2.0 * th)

    def dhat(th):
        return ax2 * np.square(np.cos(th)) + az2 * np.square(np.sin(th))

    def noise(th, t):
        return 2.0 * np.sqrt(dhat(th))

    def diffusion(th, t):
        return 2.0 * dhat(th)

    def diffusion_dx(th, t):
        return -2.0 * gap * np.sin(2.0 * th)

    def diffusion_dxx(th, t):
        return -4.0 * gap * np.cos(2.0 * th)

    return ItoProcessSpec(
        dimension=1, labels=("theta",), wiener_labels=("dW",),
        drift_rev=zero, drift_irr=drift_irr, noise=noise,
        domain=Domain("periodic", -math.pi, math.pi),
        diffusion=diffusion, diffusion_dx=diffusion_dx,
        diffusion_dxx=diffusion_dxx, drift_rev_dx=zero,
        drift_irr_dx=drift_irr_dx,
        name="theta")


def spec_xz(alpha_x: float, alpha_z: float) -> ItoProcessSpec:
    """Equatorial Bloch plane (r_x, r_z) under two channels.

    dr_x = 2 ax (1 - r_x^2) dW_x - 2 az^2 r_x dt - 2 az r_x r_z dW_z
    dr_z = 2 az (1 - r_z^2) dW_z - 2 ax^2 r_z dt - 2 ax r_z r_x dW_x
    on the closed unit disc; stepper overshoot is projected radially.
    """
    if alpha_x < 0.0 or alpha_z < 0.0:
        raise ConfigError("measurement strengths must be nonnegative")
    ax = float(alpha_x)
    az = float(alpha_z)

    def zero(x, t):
        return np.zeros_like(np.asarray(x, dtype=float))

    def drift_irr(x, t):
        x = np.asarray(x, dtype=float)
        rx, rz = x[..., 0], x[..., 1]
        return np.stack([-2.0 * az * az * rx, -2.0 * ax * ax * rz], axis=-1)

    def noise(x, t):
        x = np.asarray(x, dtype=float)
        rx, rz = x[..., 0], x[..., 1]
        row_x = np.stack([2.0 * ax * (1.0 - np.square(rx)),
                          -2.0 * az * rx * rz], axis=-1)
        row_z = np.stack([-2.0 * ax * rz * rx,
                          2.0 * az * (1.0 - np.square(rz))], axis=-1)
        return np.stack([row_x, row_z], axis=-2)

    return ItoProcessSpec(
        dimension=2, labels=("r_x", "r_z"), wiener_labels=("dW_x", "dW_z"),
        drift_rev=zero, drift_irr=drift_irr, noise=noise,
        domain=Domain("disc", policy="clamp"),
        name="xz")


def spec_Ytheta(alpha: float, y_floor: float = Y_FLOOR) -> ItoProcessSpec:
    """Radial chart Y = atanh(r^2) with the Bloch angle, for equal strengths.

    dY = (4 a^2 / (1 + u)^2)(2 + u + 3u^2) dt + (4 a sqrt(u) / (1 + u)) dW_Y
    dtheta = (2 a / sqrt(u)) dW_theta,          u = tanh Y.

    The chart is singular at the maximally mixed state, so Y starts at and
    reflects off the positive floor ``y_floor``. Both diffusion entries are
    diagonal, which is what the entropy engine's decoupled treatment assumes.
    """
    if alpha < 0.0:
        raise ConfigError("alpha must be nonnegative")
    if not (y_floor > 0.0):
        raise ConfigError("y_floor must be positive")
    a = float(alpha)

    def zero(x, t):
        return np.zeros_like(np.asarray(x, dtype=float))

    def drift_irr(x, t):
        x = np.asarray(x, dtype=float)
        u = np.tanh(x[..., 0])
        dy = 4.0 * a * a * (2.0 + u + 3.0 * np.square(u)) / np.square(1.0 + u)
        return np.stack([dy, np.zeros_like(dy)], axis=-1)

    def noise(x, t):
        x = np.asarray(x, dtype=float)
        u = np.tanh(x[..., 0])
        root = np.sqrt(u)
        b_y = 4.0 * a * root / (1.0 + u)
        b_th = 2.0 * a / root
        zeros = np.zeros_like(b_y)
        return np.stack([np.stack([b_y, zeros], axis=-1),
                         np.stack([zeros, b_th], axis=-1)], axis=-2)

    def diffusion(x, t):
        x = np.asarray(x, dtype=float)
        u = np.tanh(x[..., 0])
        d_y = 8.0 * a * a * u / np.square(1.0 + u)
        d_th = 2.0 * a * a / u
        return np.stack([d_y, d_th], axis=-1)

    # Per-coordinate derivatives along the matching coordinate; the theta
    # column is zero because no coefficient depends on theta.
    def drift_irr_dx(x, t):
        x = np.asarray(x, dtype=float)
        u = np.tanh(x[..., 0])
        dy = 4.0 * a * a * (5.0 * u - 3.0) * (1.0 - u) / np.square(1.0 + u)
        return np.stack([dy, np.zeros_like(dy)], axis=-1)

    def diffusion_dx(x, t):
        x = np.asarray(x, dtype=float)
        u = np.tanh(x[..., 0])
        dy = 8.0 * a * a * np.square(1.0 - u) / np.square(1.0 + u)
        return np.stack([dy, np.zeros_like(dy)], axis=-1)

    def diffusion_dxx(x, t):
        x = np.asarray(x, dtype=float)
        u = np.tanh(x[..., 0])
        dy = -32.0 * a * a * np.square(1.0 - u) / np.square(1.0 + u)
        return np.stack([dy, np.zeros_like(dy)], axis=-1)

    return ItoProcessSpec(
        dimension=2, labels=("Y", "theta"), wiener_labels=("dW_Y", "dW_theta"),
        drift_rev=zero, drift_irr=drift_irr, noise=noise,
        domain=(Domain("half_line", lo=float(y_floor), policy="reflect"),
                Domain("periodic", -math.pi, math.pi)),
        diffusion=diffusion, diffusion_dx=diffusion_dx,
        diffusion_dxx=diffusion_dxx, drift_rev_dx=zero,
        drift_irr_dx=drift_irr_dx,
        name="Ytheta")


def simulate_bloch_full(alpha_z: float, alpha_x: float, initial,
                        config: StepperConfig, seed: int,
                        stream_index: int = 0) -> TrajectoryRecord:
    """Integrate all three Bloch components under both channels.

    For a channel along axis k with strength a:
    dr_j = 2a (delta_jk - r_k r_j) dW  - 2a^2 r_j dt (j != k).
    The equatorial plane r_y = 0 is exactly invariant; this integrator exists
    to demonstrate that the planar charts lose nothing.
    """
    if alpha_z < 0.0 or alpha_x < 0.0:
        raise ConfigError("measurement strengths must be nonnegative")
    r = np.asarray(initial, dtype=float)
    if r.shape != (3,):
        raise ConfigError("initial state must be a 3-vector (r_x, r_y, r_z)")
    if r @ r > 1.0 + 1e-12:
        raise ConfigError("initial state outside the Bloch ball")

    n = config.n_steps
    dt = config.dt
    rng = trajectory_stream(seed, stream_index)
    dw = rng.standard_normal((n, 2)) * math.sqrt(dt)

    states = np.empty((n + 1, 3))
    wiener = np.zeros((n + 1, 2))
    wiener[1:] = dw
    states[0] = r

    unit_x = np.array([1.0, 0.0, 0.0])
    unit_z = np.array([0.0, 0.0, 1.0])
    channels = ((alpha_x, unit_x, 0), (alpha_z, unit_z, 2))
    for k in range(n):
        move = np.zeros(3)
        for a, unit, comp in channels:
            if a == 0.0:
                continue
            drift = -2.0 * a * a * r.copy()
            drift[comp] = 0.0
            col = 0 if comp == 0 else 1
            move += drift * dt + 2.0 * a * (unit - r[comp] * r) * dw[k, col]
        r = r + move
        norm = math.sqrt(r @ r)
        if norm > 1.0:
            r = r / norm
        states[k + 1] = r

    return TrajectoryRecord(labels=("r_x", "r_y", "r_z"),
                            wiener_labels=("dW_x", "dW_z"),
                            times=config.times(), states=states, wiener=wiener,
                            seed=int(seed), stream_index=int(stream_index),
                            chart="bloch3")
