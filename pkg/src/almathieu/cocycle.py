"""SL(2,R) cocycles over an irrational rotation.

Transfer matrices of the Harper equation

    x_{n+1} + x_{n-1} + b cos(2 pi omega n + phi) x_n = a x_n

their products, Lyapunov exponents, fibered rotation numbers and the
homotopy degree of circle maps into SL(2,R).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .frequency import Frequency, RationalFrequencyError, rational_neighbour

DET_TOL = 1e-10
RENORM_CADENCE = 32


@dataclass(frozen=True)
class SL2Matrix:
    """2x2 real matrix of unit determinant.

    The determinant is checked relative to the squared entry scale, which is
    the rounding floor of the determinant itself for large products.
    """

    m11: float
    m12: float
    m21: float
    m22: float

    def __post_init__(self):
        scale = max(1.0, self.m11**2 + self.m12**2 + self.m21**2 + self.m22**2)
        if abs(self.det() - 1.0) > DET_TOL * scale:
            raise ValueError(f"determinant {self.det()!r} is not 1")

    @classmethod
    def from_array(cls, m) -> "SL2Matrix":
        m = np.asarray(m, dtype=float)
        return cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))

    @classmethod
    def identity(cls) -> "SL2Matrix":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def rotation(cls, angle: float) -> "SL2Matrix":
        c, s = math.cos(angle), math.sin(angle)
        return cls(c, -s, s, c)

    def det(self) -> float:
        return self.m11 * self.m22 - self.m12 * self.m21

    def trace(self) -> float:
        return self.m11 + self.m22

    def to_array(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]])

    def inverse(self) -> "SL2Matrix":
        return SL2Matrix(self.m22, -self.m12, -self.m21, self.m11)

    def __matmul__(self, other: "SL2Matrix") -> "SL2Matrix":
        return SL2Matrix.from_array(self.to_array() @ other.to_array())


@dataclass(frozen=True)
class CocycleParams:
    """Parameters (a, b, omega, phi) of the Harper equation and its cocycle."""

    a: float
    b: float
    omega: float
    phi: float = 0.0

    def __post_init__(self):
        omega = self.omega.value if isinstance(self.omega, Frequency) else float(self.omega)
        near = rational_neighbour(omega)
        if near is not None:
            raise RationalFrequencyError(f"omega={omega} is within 1e-12 of {near}")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "phi", float(self.phi) % (2.0 * math.pi))

    def shifted(self, steps: int) -> "CocycleParams":
        """Same cocycle started `steps` rotations later."""
        return CocycleParams(self.a, self.b, self.omega, self.phi + 2.0 * math.pi * self.omega * steps)

    def with_a(self, a: float) -> "CocycleParams":
        return CocycleParams(a, self.b, self.omega, self.phi)


class RenormalizedProduct(NamedTuple):
    """Product = exp(log_norm) * matrix, with matrix of unit Frobenius norm.

    `log_det` is the logarithm of the determinant tracked through the QR
    factors; it stays near 0 up to accumulated rounding.
    """

    matrix: np.ndarray
    log_norm: float
    log_det: float


def transfer_matrix(a: float, b: float, theta: float) -> SL2Matrix:
    return SL2Matrix(a - b * math.cos(theta), -1.0, 1.0, 0.0)


def iterate_cocycle(p: CocycleParams, n: int, renormalize: bool = False):
    """Ordered product A(theta_{n-1}) ... A(theta_0), theta_j = phi + 2 pi omega j.

    With ``renormalize=True`` returns a :class:`RenormalizedProduct` built
    from a running QR factorisation, which does not overflow.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if not renormalize:
        return SL2Matrix(*K.schrodinger_product(p.a, p.b, p.omega, p.phi, n))
    c, s, l1, l2, t = K.schrodinger_product_qr(p.a, p.b, p.omega, p.phi, n)
    q = np.array([[c, -s], [s, c]])
    r = np.array([[1.0, t], [0.0, math.exp(l2 - l1)]])
    m = q @ r
    fro = float(np.linalg.norm(m))
    return RenormalizedProduct(m / fro, l1 + math.log(fro), l1 + l2)


def lyapunov_exponent(p: CocycleParams, N: int = 1_000_000) -> float:
    """(1/N) log ||A(theta_{N-1}) ... A(theta_0)||, rescaled every 32 steps."""
    if N < 1000:
        raise ValueError("N must be at least 1000")
    return K.lyapunov_sum(p.a, p.b, p.omega, p.phi, N, RENORM_CADENCE) / N


def fibered_rotation_number(p: CocycleParams, N: int = 1_000_000, t0: float = 0.0) -> float:
    """Fibered rotation number of the Harper cocycle, in [0, 1)."""
    if N < 1000:
        raise ValueError("N must be at least 1000")
    total = K.schrodinger_lift_sum(p.a, p.b, p.omega, p.phi, N, t0)
    return (total / (2.0 * math.pi * N)) % 1.0


def fibered_rotation_spread(p: CocycleParams, N: int = 1_000_000, phases: int = 8) -> tuple[float, float]:
    """Mean and spread of the fibered rotation number over equidistributed phases."""
    vals = np.array(
        [
            fibered_rotation_number(CocycleParams(p.a, p.b, p.omega, 2 * math.pi * j / phases), N)
            for j in range(phases)
        ]
    )
    # circular mean on R/Z
    ang = 2 * math.pi * vals
    mean = (math.atan2(np.sin(ang).mean(), np.cos(ang).mean()) / (2 * math.pi)) % 1.0
    dev = np.abs(((vals - mean) + 0.5) % 1.0 - 0.5)
    return mean, float(dev.max())


def _first_column_angles(Z, grid: int) -> np.ndarray:
    if hasattr(Z, "samples"):
        vals = Z.samples(grid)
    else:
        vals = Z(2.0 * np.pi * np.arange(grid) / grid)
    col = vals[..., :, 0]
    norms = np.hypot(col[..., 0], col[..., 1])
    if norms.min() < 1e-8:
        raise ValueError("first column nearly vanishes: map is degenerate")
    return np.arctan2(col[..., 1], col[..., 0])


def degree(Z, grid: int | None = None) -> int:
    """Winding number of the first column of a circle map into SL(2,R).

    `Z` is any callable mapping an array of angles to an array of shape
    (..., 2, 2); TorusMap instances qualify.
    """
    if grid is None:
        grid = max(2048, 16 * (2 * getattr(Z, "M", 0) + 1))
    ang = _first_column_angles(Z, grid)
    steps = np.diff(np.r_[ang, ang[0]])
    steps = (steps + np.pi) % (2.0 * np.pi) - np.pi
    if np.abs(steps).max() > 0.5 * np.pi:
        raise ValueError("sampling grid too coarse to follow the first column")
    return int(round(steps.sum() / (2.0 * np.pi)))


def conjugated_rotation_shift(rho2: float, k: int, omega: float) -> float:
    """Fibered rotation number after conjugation by a degree-k map: rho2 + k omega mod 1."""
    return (rho2 + k * float(omega)) % 1.0


def _lift_grid(A, grid: int) -> np.ndarray:
    vals = A.samples(grid)
    raw = np.arctan2(vals[:, 1, 0], vals[:, 0, 0])
    steps = (np.diff(np.r_[raw, raw[0]]) + np.pi) % (2.0 * np.pi) - np.pi
    if np.abs(steps).max() > 0.5 * np.pi:
        raise ValueError("lift grid too coarse")
    if abs(steps.sum()) > np.pi:
        raise ValueError("cocycle is not homotopic to the identity")
    return raw[0] + np.r_[0.0, np.cumsum(steps[:-1])]


def fibered_rotation_torus(A, omega, N: int = 200_000, theta0: float = 0.0, t0: float = 0.0) -> float:
    """Fibered rotation number of a general cocycle A: circle -> SL(2,R) in [0, 1).

    `A` must be a matrix-valued TorusMap homotopic to the identity.
    """
    omega = omega.value if isinstance(omega, Frequency) else float(omega)
    grid = max(4096, 16 * (2 * A.M + 1))
    alpha = _lift_grid(A, grid)
    total = K.torus_lift_sum(A.coeffs, A.M, alpha, omega, theta0, N, t0)
    return (total / (2.0 * math.pi * N)) % 1.0
