"""Bloch-vector representation of a single qubit.

A state is parametrized by r = (r_x, r_y, r_z) through rho = (I + r.sigma)/2.
Physical states satisfy |r| <= 1, with |r| = 1 on the pure-state sphere.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

__all__ = [
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "IDENTITY",
    "NORM_SLACK",
    "MATRIX_ATOL",
    "BlochState",
    "purity",
    "von_neumann_entropy",
    "bloch_to_matrix",
    "matrix_to_bloch",
]

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

# Numerical slack on |r|^2 <= 1.  Vectors inside the slack band are clamped
# onto the unit sphere; anything beyond is rejected outright.
NORM_SLACK = 1e-12

# Tolerance for hermiticity and unit trace when converting a matrix to a state.
MATRIX_ATOL = 1e-9


@dataclasses.dataclass(frozen=True)
class BlochState:
    """Qubit state as a Bloch vector.

    Construction validates |r|^2 <= 1 + NORM_SLACK.  A vector that exceeds the
    sphere by no more than the slack is clamped back onto it, so downstream
    code can rely on |r| <= 1 exactly.
    """

    r_x: float = 0.0
    r_y: float = 0.0
    r_z: float = 0.0

    def __post_init__(self):
        r = (float(self.r_x), float(self.r_y), float(self.r_z))
        if not all(math.isfinite(c) for c in r):
            raise ValueError(f"Bloch vector must be finite, got {r}")
        n2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2]
        if n2 > 1.0 + NORM_SLACK:
            raise ValueError(f"Bloch vector norm^2 = {n2!r} exceeds 1 beyond slack {NORM_SLACK}")
        if n2 > 1.0:
            scale = 1.0 / math.sqrt(n2)
            r = (r[0] * scale, r[1] * scale, r[2] * scale)
        object.__setattr__(self, "r_x", r[0])
        object.__setattr__(self, "r_y", r[1])
        object.__setattr__(self, "r_z", r[2])

    @classmethod
    def from_vector(cls, r) -> "BlochState":
        r = np.asarray(r, dtype=float)
        if r.shape != (3,):
            raise ValueError(f"expected a 3-vector, got shape {r.shape}")
        return cls(r[0], r[1], r[2])

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.r_x, self.r_y, self.r_z])

    @property
    def norm(self) -> float:
        return math.sqrt(self.r_x**2 + self.r_y**2 + self.r_z**2)


def purity(state: BlochState) -> float:
    """Tr(rho^2) = (1 + |r|^2)/2, ranging from 1/2 (maximally mixed) to 1."""
    return 0.5 * (1.0 + state.norm**2)


def von_neumann_entropy(state: BlochState) -> float:
    """-Tr(rho ln rho) from the eigenvalues (1 +- |r|)/2.  Natural log."""
    lam_plus = 0.5 * (1.0 + state.norm)
    lam_minus = 0.5 * (1.0 - state.norm)
    s = 0.0
    for lam in (lam_plus, lam_minus):
        if lam > 0.0:
            s -= lam * math.log(lam)
    return s


def von_neumann_entropy_from_norm(norm):
    """Vectorized entropy as a function of |r| alone (0 ln 0 = 0)."""
    from scipy.special import xlogy

    norm = np.minimum(np.asarray(norm, dtype=float), 1.0)
    lam_plus = 0.5 * (1.0 + norm)
    lam_minus = 0.5 * (1.0 - norm)
    return -(xlogy(lam_plus, lam_plus) + xlogy(lam_minus, lam_minus))


def bloch_to_matrix(state: BlochState) -> np.ndarray:
    """Density matrix rho = (I + r.sigma)/2 as a 2x2 complex array."""
    return 0.5 * (
        IDENTITY + state.r_x * SIGMA_X + state.r_y * SIGMA_Y + state.r_z * SIGMA_Z
    )


def matrix_to_bloch(rho, atol: float = MATRIX_ATOL) -> BlochState:
    """Inverse of bloch_to_matrix with validation.

    Args:
        rho: 2x2 complex array.
        atol: tolerance for hermiticity and unit trace.

    Returns:
        The BlochState with components r_j = Re Tr(rho sigma_j).

    Raises:
        ValueError: if rho is not 2x2, not Hermitian within atol, not unit
            trace within atol, or lands outside the Bloch ball.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {rho.shape}")
    herm_defect = np.max(np.abs(rho - rho.conj().T))
    if herm_defect > atol:
        raise ValueError(f"matrix is not Hermitian: max |rho - rho^dag| = {herm_defect:g}")
    trace_defect = abs(np.trace(rho) - 1.0)
    if trace_defect > atol:
        raise ValueError(f"matrix trace differs from 1 by {trace_defect:g}")
    return BlochState(
        float(np.trace(rho @ SIGMA_X).real),
        float(np.trace(rho @ SIGMA_Y).real),
        float(np.trace(rho @ SIGMA_Z).real),
    )
