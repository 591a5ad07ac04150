"""Sturmian rotation number, eigenvalue counting and the integrated density of states.

Sign conventions. With the hopping written as x_{n+1} + x_{n-1}, the number
of sign changes of a solution decreases as the energy a grows, while the
eigenvalue count increases. The two are tied by

    S(N) = (N - 1) - #{eigenvalues <= a of the Dirichlet block on 1..N-1}

so that in the limit 2 rot(a) = 1 - ids(a), and rot = arccos(a/2) / 2 pi
for the free operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit

from . import _kernels as K
from .cocycle import CocycleParams, fibered_rotation_number


@dataclass(frozen=True)
class SolutionSequence:
    """Window x_{n0}, ..., x_{n0+len-1} of a solution of the Harper equation."""

    params: CocycleParams
    n0: int
    values: np.ndarray

    @property
    def n1(self) -> int:
        return self.n0 + len(self.values) - 1

    def residual(self) -> float:
        """Largest relative defect of the recurrence at interior indices."""
        x = self.values
        n = np.arange(self.n0 + 1, self.n1)
        v = self.params.b * np.cos(2 * np.pi * self.params.omega * n + self.params.phi)
        lhs = x[2:] + x[:-2] + v * x[1:-1]
        rhs = self.params.a * x[1:-1]
        scale = np.abs(x[2:]) + np.abs(x[:-2]) + (abs(self.params.a) + np.abs(v)) * np.abs(x[1:-1])
        scale = np.maximum(scale, np.finfo(float).tiny)
        return float(np.max(np.abs(lhs - rhs) / scale)) if len(n) else 0.0


def harper_solution(p: CocycleParams, n1: int, x0: float = 0.0, x1: float = 1.0) -> SolutionSequence:
    """Solution on 0..n1 from (x_0, x_1). No rescaling; keep n1 moderate."""
    x = np.empty(n1 + 1)
    x[0], x[1] = x0, x1
    v = K.potential(p.b, p.omega, p.phi, 0, n1 + 1)
    for n in range(1, n1):
        x[n + 1] = (p.a - v[n]) * x[n] - x[n - 1]
    return SolutionSequence(p, 0, x)


def sturmian_rotation(p: CocycleParams, N: int = 1_000_000, x0: float = 0.0, x1: float = 1.0) -> float:
    """S(N) / 2N, with S(N) the sign changes of the solution over 1 <= n <= N."""
    if N < 1000:
        raise ValueError("N must be at least 1000")
    if x0 == 0.0 and x1 == 0.0:
        raise ValueError("initial data must be non-trivial")
    s = K.sturmian_sign_changes(p.a, p.b, p.omega, p.phi, N, x0, x1)
    return s / (2.0 * N)


@dataclass(frozen=True)
class TruncationSpec:
    """Dirichlet block on sites 1..L-1 (zero boundary at 0 and L)."""

    L: int
    phi: float = 0.0

    def __post_init__(self):
        if self.L < 2:
            raise ValueError("L must be at least 2")

    @property
    def dim(self) -> int:
        return self.L - 1


def truncation_diagonal(t: TruncationSpec, b: float, omega: float) -> np.ndarray:
    return K.potential(b, float(omega), t.phi, 1, t.L)


def eigen_count(a: float, t: TruncationSpec, b: float, omega) -> int:
    """Eigenvalues <= a of the Dirichlet block, by Sturm sequence in O(L)."""
    return int(K.sturm_count(float(a), truncation_diagonal(t, b, float(omega))))


@njit(cache=True, nogil=True)
def _phase_averaged_count(a_values, b, omega, L, phases):
    out = np.zeros(a_values.shape[0])
    for j in range(phases):
        diag = K.potential(b, omega, 2.0 * np.pi * j / phases, 1, L)
        for i in range(a_values.shape[0]):
            out[i] += K.sturm_count(a_values[i], diag)
    return out / (phases * (L - 1.0))


def ids(a, b: float, omega, L: int = 10_000, phases: int = 16):
    """Integrated density of states, averaged over equidistributed phases.

    Accepts a scalar or an array of energies.
    """
    if L < 100:
        raise ValueError("L must be at least 100")
    if phases < 1:
        raise ValueError("phases must be positive")
    arr = np.atleast_1d(np.asarray(a, dtype=float))
    out = _phase_averaged_count(arr, float(b), float(omega), int(L), int(phases))
    return float(out[0]) if np.ndim(a) == 0 else out


def ids_rot(a, b: float, omega, L: int = 10_000, phases: int = 16):
    """Rotation number predicted by the IDS, (1 - ids)/2."""
    return 0.5 * (1.0 - ids(a, b, omega, L, phases))


class RelationsReport(NamedTuple):
    rot: float
    rho_f: float
    ids: float
    ids_deviation: float
    fibered_deviation: float

    @property
    def max_deviation(self) -> float:
        return max(self.ids_deviation, self.fibered_deviation)

    def as_dict(self) -> dict:
        d = self._asdict()
        d["max_deviation"] = self.max_deviation
        return d


def half_integer_distance(x: float) -> float:
    """Distance from x to the lattice (1/2) Z."""
    y = x % 0.5
    return min(y, 0.5 - y)


def check_relations(p: CocycleParams, N: int = 1_000_000, L: int = 10_000, phases: int = 16) -> RelationsReport:
    """Compare the Sturmian, fibered and IDS descriptions of the rotation number.

    ids_deviation = |2 rot - (1 - ids)|; fibered_deviation is the distance of
    rot - rho_f to (1/2) Z.
    """
    rot = sturmian_rotation(p, N)
    rho = fibered_rotation_number(p, N)
    k = ids(p.a, p.b, p.omega, L, phases)
    return RelationsReport(rot, rho, k, abs(2 * rot - (1 - k)), half_integer_distance(rot - rho))


# classification of rotation numbers against the frequency


@dataclass(frozen=True)
class Resonant:
    k: int


@dataclass(frozen=True)
class Diophantine:
    K: float
    tau: float


@dataclass(frozen=True)
class Undetermined:
    reason: str = ""


RotationClass = Resonant | Diophantine | Undetermined

RESONANCE_TOL = 1e-5


def resonance_distances(rot: float, omega, kmax: int) -> tuple[np.ndarray, np.ndarray]:
    """Labels k = 0, 1, -1, 2, -2, ... and |rot - {k omega}/2| measured mod 1/2."""
    w = float(omega)
    ks = np.array([0] + [s * m for m in range(1, kmax + 1) for s in (1, -1)])
    target = ((ks * w) % 1.0) / 2.0
    diff = (rot - target) % 0.5
    return ks, np.minimum(diff, 0.5 - diff)


def classify_rotation(rot: float, omega, kmax: int = 50, tol: float = RESONANCE_TOL) -> RotationClass:
    """Resonant(k) for the smallest |k| <= kmax within tol, else a Diophantine fit.

    The fit K / |k|^tau uses record minima of the resonance distance; it is
    Undetermined when fewer than three records exist or tau comes out
    non-positive.
    """
    if kmax < 1:
        raise ValueError("kmax must be at least 1")
    ks, dist = resonance_distances(rot, omega, kmax)
    hit = np.flatnonzero(dist <= tol)
    if hit.size:
        return Resonant(int(ks[hit[0]]))
    # best distance over 1 <= |k| <= m
    mags = np.arange(1, kmax + 1)
    per = np.minimum(dist[1::2], dist[2::2])
    best = np.minimum.accumulate(per)
    rec = np.flatnonzero(np.r_[True, best[1:] < best[:-1]])
    if rec.size < 3:
        return Undetermined("too few record minima")
    slope, _ = np.polyfit(np.log(mags[rec]), np.log(best[rec]), 1)
    tau = -slope
    if not np.isfinite(tau) or tau <= 0:
        return Undetermined("unstable fit")
    Kc = float(np.min(per * mags**tau))
    return Diophantine(Kc, float(tau))


def rotation_closed_form(a: float) -> float:
    """Free-operator rotation number arccos(a/2) / 2 pi for |a| <= 2."""
    return math.acos(max(-1.0, min(1.0, a / 2.0))) / (2.0 * math.pi)
