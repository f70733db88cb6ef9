"""Kraus-pair maps for weak continuous measurement of a qubit.

One time step of a strength-alpha measurement of a Pauli observable applies
one of the two branches

    M_pm = nu (I - c^dag c dt/2 +- c sqrt(dt)),    c = alpha sigma_axis,

to the state, rho -> M rho M^dag / Tr(M rho M^dag), selecting the branch with
probability Tr(M rho M^dag).  With a single channel nu = 1/sqrt(2); with two
channels the step offers all four branches of both channels and nu = 1/2.
Branch-probability sums over a full step deviate from 1 only at O(dt^2).
"""

from __future__ import annotations

import dataclasses
import math
from typing import Sequence

import numpy as np

from .bloch import IDENTITY, SIGMA_X, SIGMA_Z, BlochState, bloch_to_matrix, matrix_to_bloch
from .errors import NumericsError
from .streams import trajectory_stream

__all__ = [
    "NU_ONE_CHANNEL",
    "NU_TWO_CHANNEL",
    "TRACE_FLOOR",
    "MeasurementChannel",
    "KrausStepOutcome",
    "kraus_pair",
    "reverse_kraus",
    "step_probabilities",
    "apply_map",
    "discrete_step",
    "log_prob_ratio",
    "run_discrete_chain",
    "rz_branch_map",
    "RzChainBatch",
    "run_rz_chains",
]

NU_ONE_CHANNEL = 1.0 / math.sqrt(2.0)
NU_TWO_CHANNEL = 0.5

# Below this, the post-measurement normalization Tr(M rho M^dag) is treated as
# degenerate and the map refuses to renormalize.
TRACE_FLOOR = 1e-30

_AXIS_MATRICES = {"z": SIGMA_Z, "x": SIGMA_X}


@dataclasses.dataclass(frozen=True)
class MeasurementChannel:
    """A continuously measured Pauli observable with coupling strength alpha."""

    axis: str
    alpha: float

    def __post_init__(self):
        if self.axis not in _AXIS_MATRICES:
            raise ValueError(f"axis must be one of {sorted(_AXIS_MATRICES)}, got {self.axis!r}")
        if not (math.isfinite(self.alpha) and self.alpha >= 0.0):
            raise ValueError(f"alpha must be finite and >= 0, got {self.alpha!r}")

    def operator(self) -> np.ndarray:
        """The Lindblad operator c = alpha sigma_axis."""
        return self.alpha * _AXIS_MATRICES[self.axis]


@dataclasses.dataclass(frozen=True)
class KrausStepOutcome:
    """Result of sampling one discrete measurement step.

    `sign` is +1 or -1 for the selected branch of channel `channel_index`.
    `p_forward` is the normalized probability with which the branch was
    selected; `p_backward` is the probability that the reversing branch would
    be selected from the post state under the same rule.
    """

    channel_index: int
    sign: int
    state_before: BlochState
    state_after: BlochState
    p_forward: float
    p_backward: float
    channel: MeasurementChannel
    dt: float


def _as_channels(channels) -> tuple[MeasurementChannel, ...]:
    if isinstance(channels, MeasurementChannel):
        channels = (channels,)
    channels = tuple(channels)
    if len(channels) not in (1, 2):
        raise ValueError(f"expected one or two channels, got {len(channels)}")
    return channels


def _check_dt(channels: Sequence[MeasurementChannel], dt: float) -> None:
    if not (math.isfinite(dt) and dt > 0.0):
        raise ValueError(f"dt must be positive and finite, got {dt!r}")
    for ch in channels:
        # |C| sqrt(dt) <= 2 alpha sqrt(dt) must stay below 1/2 for every
        # branch probability to remain inside (0, 1).
        if 2.0 * ch.alpha * math.sqrt(dt) >= 0.5:
            raise ValueError(
                f"dt = {dt:g} too large for alpha = {ch.alpha:g}: "
                "need 2 alpha sqrt(dt) < 1/2"
            )


def kraus_pair(channel: MeasurementChannel, dt: float, normalization: float = NU_ONE_CHANNEL):
    """The branch operators (M_plus, M_minus) for one channel and step dt.

    Args:
        channel: measured observable and strength.
        dt: time step, dt > 0.
        normalization: nu prefactor; NU_ONE_CHANNEL for a lone channel,
            NU_TWO_CHANNEL when two channels share the step.

    Returns:
        Tuple of two 2x2 complex arrays.
    """
    if not (math.isfinite(dt) and dt > 0.0):
        raise ValueError(f"dt must be positive and finite, got {dt!r}")
    c = channel.operator()
    base = IDENTITY - 0.5 * (c.conj().T @ c) * dt
    kick = c * math.sqrt(dt)
    return normalization * (base + kick), normalization * (base - kick)


def reverse_kraus(channel: MeasurementChannel, dt: float, normalization: float = NU_ONE_CHANNEL):
    """Operators reversing each branch: (reverse of plus, reverse of minus).

    For a Hermitian measured observable the reverse of M_pm is M_mp, and the
    product (reverse of pm) M_pm is proportional to the identity, so a
    reversed branch restores the pre-measurement state exactly.
    """
    m_plus, m_minus = kraus_pair(channel, dt, normalization)
    return m_minus, m_plus


def _branch_operators(channels: tuple[MeasurementChannel, ...], dt: float):
    nu = NU_ONE_CHANNEL if len(channels) == 1 else NU_TWO_CHANNEL
    ops = []
    for index, channel in enumerate(channels):
        m_plus, m_minus = kraus_pair(channel, dt, nu)
        ops.append((index, +1, m_plus))
        ops.append((index, -1, m_minus))
    return ops


def _branch_weights(rho: np.ndarray, ops) -> np.ndarray:
    return np.array([np.trace(m @ rho @ m.conj().T).real for _, _, m in ops])


def step_probabilities(state: BlochState, channel: MeasurementChannel, dt: float):
    """Normalized branch probabilities (p_plus, p_minus) for one channel.

    Probabilities are exact Kraus traces Tr(M rho M^dag) normalized over the
    two branches; they match (1 +- C sqrt(dt))/2 with C = Tr(rho (c + c^dag))
    up to O(dt^{3/2}).

    Raises:
        ValueError: if dt violates the weak-step guard 2 alpha sqrt(dt) < 1/2.
    """
    _check_dt((channel,), dt)
    rho = bloch_to_matrix(state)
    ops = _branch_operators((channel,), dt)
    w = _branch_weights(rho, ops)
    total = w.sum()
    return float(w[0] / total), float(w[1] / total)


def apply_map(state: BlochState, m: np.ndarray) -> BlochState:
    """Apply rho -> M rho M^dag / Tr(M rho M^dag).

    Raises:
        NumericsError: if the normalizing trace falls below TRACE_FLOOR.
    """
    rho = bloch_to_matrix(state)
    out = m @ rho @ np.asarray(m).conj().T
    norm = np.trace(out).real
    if norm <= TRACE_FLOOR:
        raise NumericsError(f"degenerate map normalization: trace = {norm:g}")
    return matrix_to_bloch(out / norm)


def discrete_step(state: BlochState, channels, dt: float, rng: np.random.Generator) -> KrausStepOutcome:
    """Sample one measurement step over all branches of the given channels.

    Branch selection is inverse-CDF sampling on the exact normalized trace
    probabilities; one uniform variate is consumed per step.

    Args:
        state: pre-measurement state.
        channels: a MeasurementChannel or a sequence of one or two.
        dt: time step, subject to the weak-step guard.
        rng: numpy Generator supplying the branch-selection uniform.

    Returns:
        KrausStepOutcome with the post state and forward/backward
        probabilities of the realized branch.
    """
    channels = _as_channels(channels)
    _check_dt(channels, dt)
    ops = _branch_operators(channels, dt)
    rho = bloch_to_matrix(state)
    w = _branch_weights(rho, ops)
    p = w / w.sum()
    u = rng.random()
    chosen = int(np.searchsorted(np.cumsum(p), u, side="right"))
    chosen = min(chosen, len(ops) - 1)
    channel_index, sign, m = ops[chosen]
    after = apply_map(state, m)
    # The reversing branch of (i, s) is (i, -s); pairs are adjacent in ops.
    w_back = _branch_weights(bloch_to_matrix(after), ops)
    p_back = w_back / w_back.sum()
    reverse_index = chosen ^ 1
    return KrausStepOutcome(
        channel_index=channel_index,
        sign=sign,
        state_before=state,
        state_after=after,
        p_forward=float(p[chosen]),
        p_backward=float(p_back[reverse_index]),
        channel=channels[channel_index],
        dt=dt,
    )


def log_prob_ratio(outcome: KrausStepOutcome) -> float:
    """ln(p_forward / p_backward) for one realized step."""
    return math.log(outcome.p_forward / outcome.p_backward)


def run_discrete_chain(
    state: BlochState,
    channels,
    dt: float,
    n_steps: int,
    rng: np.random.Generator,
) -> list[KrausStepOutcome]:
    """Iterate discrete_step n_steps times; returns the outcome sequence."""
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    chain = []
    for _ in range(n_steps):
        outcome = discrete_step(state, channels, dt, rng)
        chain.append(outcome)
        state = outcome.state_after
    return chain


# ---------------------------------------------------------------------------
# Vectorized single-channel sigma_z chains on the z axis.
#
# For states with r_x = r_y = 0 the sigma_z branch maps stay diagonal, and the
# whole step reduces to scalar arithmetic on r_z.  These closed forms are the
# exact matrix computation, not an expansion, so batch chains reproduce
# discrete_step bit-for-bit on shared uniforms.
# ---------------------------------------------------------------------------


def rz_branch_map(alpha: float, dt: float, r):
    """Exact branch updates and probabilities for z-axis states.

    Args:
        alpha: measurement strength of the lone sigma_z channel.
        dt: time step.
        r: r_z value(s), scalar or array.

    Returns:
        (r_plus, r_minus, p_plus, p_minus): post-branch values of r_z and the
        normalized branch probabilities, elementwise in r.
    """
    r = np.asarray(r, dtype=float)
    root = math.sqrt(dt)
    a = (1.0 - 0.5 * alpha**2 * dt + alpha * root) ** 2
    b = (1.0 - 0.5 * alpha**2 * dt - alpha * root) ** 2
    w_plus = 0.25 * (a * (1.0 + r) + b * (1.0 - r))
    w_minus = 0.25 * (b * (1.0 + r) + a * (1.0 - r))
    total = w_plus + w_minus
    r_plus = (a * (1.0 + r) - b * (1.0 - r)) / (4.0 * w_plus)
    r_minus = (b * (1.0 + r) - a * (1.0 - r)) / (4.0 * w_minus)
    return r_plus, r_minus, w_plus / total, w_minus / total


@dataclasses.dataclass
class RzChainBatch:
    """Snapshots of a batch of z-axis measurement chains.

    `r` has shape (n_times, n_chains); `log_ratio_sum` is the running sum of
    ln(p_forward / p_backward) up to each snapshot time, same shape.
    """

    alpha: float
    dt: float
    times: np.ndarray
    r: np.ndarray
    log_ratio_sum: np.ndarray

    @property
    def final_r(self) -> np.ndarray:
        return self.r[-1]


def run_rz_chains(
    alpha: float,
    dt: float,
    n_steps: int,
    r0,
    master_seed: int,
    record_times=None,
    chunk_size: int = 4096,
    time_block: int = 1024,
    index_offset: int = 0,
) -> RzChainBatch:
    """Run many single-channel sigma_z chains restricted to the z axis.

    Chain j draws its branch-selection uniforms from
    trajectory_stream(master_seed, index_offset + j), so results are
    independent of chunking and identical to looping discrete_step with the
    same stream.

    Args:
        alpha: measurement strength.
        dt: time step (weak-step guard applies).
        n_steps: number of steps; chains end at t = n_steps * dt.
        r0: initial r_z, scalar or shape (n_chains,) array in [-1, 1].
        master_seed: ensemble seed.
        record_times: times to snapshot (multiples of dt); defaults to
            (0, n_steps * dt).
        chunk_size: chains processed per vectorized block.
        time_block: steps per uniform-draw block, bounding memory.
        index_offset: first stream index, for splitting ensembles.

    Returns:
        RzChainBatch with snapshots at the requested times.
    """
    channel = MeasurementChannel("z", alpha)
    _check_dt((channel,), dt)
    r0 = np.atleast_1d(np.asarray(r0, dtype=float))
    if np.any(np.abs(r0) > 1.0):
        raise ValueError("initial r_z must lie in [-1, 1]")
    n_chains = r0.size
    if record_times is None:
        record_times = (0.0, n_steps * dt)
    record_steps = _record_steps(record_times, dt, n_steps)
    times = np.array([k * dt for k in record_steps])

    r_out = np.empty((len(record_steps), n_chains))
    lr_out = np.empty((len(record_steps), n_chains))
    for lo in range(0, n_chains, chunk_size):
        hi = min(lo + chunk_size, n_chains)
        streams = [trajectory_stream(master_seed, index_offset + j) for j in range(lo, hi)]
        r = r0[lo:hi].copy()
        lr = np.zeros(hi - lo)
        slot = 0
        while slot < len(record_steps) and record_steps[slot] == 0:
            r_out[slot, lo:hi] = r
            lr_out[slot, lo:hi] = lr
            slot += 1
        step = 0
        while step < n_steps:
            block = min(time_block, n_steps - step)
            uniforms = np.stack([g.random(block) for g in streams], axis=1)
            for i in range(block):
                r_plus, r_minus, p_plus, _ = rz_branch_map(alpha, dt, r)
                plus = uniforms[i] < p_plus
                p_fwd = np.where(plus, p_plus, 1.0 - p_plus)
                r = np.where(plus, r_plus, r_minus)
                _, _, p_plus_new, p_minus_new = rz_branch_map(alpha, dt, r)
                p_bwd = np.where(plus, p_minus_new, p_plus_new)
                lr += np.log(p_fwd) - np.log(p_bwd)
                step += 1
                while slot < len(record_steps) and record_steps[slot] == step:
                    r_out[slot, lo:hi] = r
                    lr_out[slot, lo:hi] = lr
                    slot += 1
    return RzChainBatch(alpha=alpha, dt=dt, times=times, r=r_out, log_ratio_sum=lr_out)


def _record_steps(record_times, dt: float, n_steps: int) -> list[int]:
    steps = []
    for t in record_times:
        k = int(round(t / dt))
        if abs(k * dt - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"record time {t!r} is not a multiple of dt = {dt!r}")
        if k < 0 or k > n_steps:
            raise ValueError(f"record time {t!r} outside the simulated range")
        steps.append(k)
    if steps != sorted(steps):
        raise ValueError("record times must be non-decreasing")
    return steps
