"""Reduction of a quasi-periodic cocycle with an invariant vector to Floquet form.

Given A: T -> SL(2,R) and an analytic v with v(theta + 2 pi omega) = A(theta) v(theta):

1. Z = [[v1, -v2/d], [v2, v1/d]], d = v1^2 + v2^2, has det 1 and first column v.
2. B1(theta) = Z(theta + 2 pi omega)^{-1} A(theta) Z(theta) = [[1, b12], [0, 1]].
3. y(theta + 2 pi omega) - y(theta) = b12 - [b12] is solved mode by mode.
4. W = Z [[1, y], [0, 1]] conjugates A to B = [[1, c], [0, 1]] with c = [b12].

The antiperiodic case (Floquet trace -2) runs the same steps on -A.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .cocycle import SL2Matrix, degree
from .frequency import as_frequency
from .torus import TorusMap, pointwise

DIVISOR_FLOOR = 1e-12
INVARIANCE_TOL = 1e-6
UNIPOTENT_TOL = 1e-5
MIN_NORM = 1e-8


class ReductionError(RuntimeError):
    """Raised with one of: vanishing-vector, not-invariant, not-unipotent, small-divisor overflow."""

    def __init__(self, kind: str, detail: str = ""):
        super().__init__(kind + (f": {detail}" if detail else ""))
        self.kind = kind


def _grid_size(*maps: TorusMap, minimum: int = 512) -> int:
    return max(minimum, 4 * (2 * max(m.M for m in maps) + 1))


def _on_grid(m: TorusMap, K: int, shift: float = 0.0) -> np.ndarray:
    """Values of m(theta_j + shift) on theta_j = 2 pi j / K, by FFT."""
    return (m.shift(shift) if shift else m).samples(K)


def _conj(v0, v1):
    d = v0 * v0 + v1 * v1
    out = np.empty(v0.shape + (2, 2))
    out[..., 0, 0] = v0
    out[..., 1, 0] = v1
    out[..., 0, 1] = -v1 / d
    out[..., 1, 1] = v0 / d
    return out


def build_conjugation(v: TorusMap) -> TorusMap:
    """Z = [[v1, -v2/d], [v2, v1/d]] as a matrix-valued TorusMap; det Z = 1."""
    if v.target != (2,):
        raise ValueError("v must be R^2-valued")
    vv = _on_grid(v, _grid_size(v, minimum=2048))
    dmin = float(np.min(vv[:, 0] ** 2 + vv[:, 1] ** 2))
    if dmin < MIN_NORM:
        raise ReductionError("vanishing-vector", f"min |v|^2 = {dmin:.2e}")
    return pointwise(lambda s: _conj(s[:, 0], s[:, 1]), v)


def _inv(m):
    out = np.empty_like(m)
    out[..., 0, 0] = m[..., 1, 1]
    out[..., 1, 1] = m[..., 0, 0]
    out[..., 0, 1] = -m[..., 0, 1]
    out[..., 1, 0] = -m[..., 1, 0]
    return out


def invariance_residual(A: TorusMap, v: TorusMap, omega: float, sign: int = 1) -> float:
    """max |v(theta + 2 pi omega) - s A(theta) v(theta)| / max |v| on a grid."""
    K = _grid_size(A, v)
    v0 = _on_grid(v, K)
    v1 = _on_grid(v, K, 2 * np.pi * omega)
    Av = np.einsum("nij,nj->ni", _on_grid(A, K), v0)
    return float(np.max(np.abs(v1 - sign * Av)) / np.max(np.abs(v0)))


def triangularize(A: TorusMap, v: TorusMap, omega, Z: TorusMap | None = None, invariance_tol: float = INVARIANCE_TOL, unipotent_tol: float = UNIPOTENT_TOL):
    """Return (b12, residual) for B1 = Z(theta + 2 pi omega)^{-1} A(theta) Z(theta).

    ``residual`` is the largest deviation of B1 from the unipotent pattern
    [[1, *], [0, 1]] on the sampling grid.
    """
    w = as_frequency(omega).value
    inv_res = invariance_residual(A, v, w)
    if inv_res > invariance_tol:
        raise ReductionError("not-invariant", f"residual {inv_res:.2e}")
    if Z is None:
        Z = build_conjugation(v)
    Zs = Z.shift(2 * np.pi * w)

    def b1(a, z, zs):
        return _inv(zs) @ a @ z

    K = _grid_size(A, Z)
    B1 = b1(_on_grid(A, K), _on_grid(Z, K), _on_grid(Zs, K))
    res = float(max(np.max(np.abs(B1[:, 0, 0] - 1)), np.max(np.abs(B1[:, 1, 0])), np.max(np.abs(B1[:, 1, 1] - 1))))
    if res > unipotent_tol:
        raise ReductionError("not-unipotent", f"deviation {res:.2e}")
    b12 = pointwise(lambda a, z, zs: b1(a, z, zs)[:, 0, 1], A, Z, Zs)
    return b12, res


def solve_cohomological(b12: TorusMap, omega, floor: float = DIVISOR_FLOOR) -> TorusMap:
    """y with y(theta + 2 pi omega) - y(theta) = b12(theta) - [b12], y_0 = 0."""
    w = as_frequency(omega).value
    m = b12.modes
    div = np.exp(2j * np.pi * m * w) - 1.0
    nz = m != 0
    if np.any(np.abs(div[nz]) < floor):
        bad = int(m[nz][np.argmin(np.abs(div[nz]))])
        raise ReductionError("small-divisor overflow", f"|e^(2 pi i m omega) - 1| < {floor} at m={bad}")
    y = np.zeros_like(b12.coeffs)
    y[nz] = b12.coeffs[nz] / div[nz]
    return TorusMap(y)


def cohomological_residual(y: TorusMap, b12: TorusMap, omega) -> float:
    w = as_frequency(omega).value
    K = _grid_size(y, b12)
    lhs = _on_grid(y, K, 2 * np.pi * w) - _on_grid(y, K)
    rhs = _on_grid(b12, K) - b12.mean()
    return float(np.max(np.abs(lhs - rhs)))


@dataclass(frozen=True, eq=False)
class FloquetResult:
    """A(theta) Z(theta) = Z(theta + 2 pi omega) B with B = s [[1, c], [0, 1]].

    With this c, adding alpha to the energy makes the cocycle hyperbolic
    on the side c * alpha < 0, for either sign s.
    """

    Z: TorusMap = field(repr=False)
    B: SL2Matrix
    c: float
    residual: float
    degreeZ: int
    sign: int = 1
    stages: dict = field(default_factory=dict)

    @property
    def M(self) -> int:
        return self.Z.M

    def as_record(self) -> dict:
        return {"c": self.c, "residual": self.residual, "degreeZ": self.degreeZ, "M": self.M}

    def to_json(self) -> str:
        return json.dumps(self.as_record())


def conjugacy_residual(A: TorusMap, W: TorusMap, B: np.ndarray, omega: float) -> float:
    K = _grid_size(A, W)
    lhs = _on_grid(A, K) @ _on_grid(W, K)
    rhs = _on_grid(W, K, 2 * np.pi * omega) @ B
    return float(np.max(np.abs(lhs - rhs)))


def floquet_reduce(A: TorusMap, v: TorusMap, omega, sign: int = 1) -> FloquetResult:
    """Conjugate A to s [[1, c], [0, 1]] using the invariant vector v of s A."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    w = as_frequency(omega).value
    As = A if sign == 1 else TorusMap(-A.coeffs)
    inv_res = invariance_residual(As, v, w)
    Z = build_conjugation(v)
    b12, tri_res = triangularize(As, v, omega, Z=Z)
    shear_c = float(b12.mean().real)
    y = solve_cohomological(b12, omega)
    coh_res = cohomological_residual(y, b12, omega)

    def shear(ys):
        out = np.zeros(ys.shape + (2, 2))
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = 1.0
        out[..., 0, 1] = ys
        return out

    W = pointwise(lambda z, ys: z @ shear(ys), Z, y)
    B = sign * np.array([[1.0, shear_c], [0.0, 1.0]]) + 0.0
    res = conjugacy_residual(A, W, B, w)
    stages = {"invariance": inv_res, "unipotent": tri_res, "cohomological": coh_res}
    return FloquetResult(W, SL2Matrix.from_array(B), shear_c, res, degree(Z), sign, stages)


def collapsed_test(f: FloquetResult) -> bool:
    """B is indistinguishable from the identity: |c| <= 10 * residual."""
    return abs(f.c) <= 10.0 * f.residual


@dataclass(frozen=True)
class DichotomyReport:
    lyapunov: float
    threshold: float
    min_angle: float
    hyperbolic: bool


def _dominant(m: np.ndarray, left: bool) -> np.ndarray:
    u, _, vt = np.linalg.svd(m)
    return u[:, 0] if left else vt[0]


def dichotomy_report(A: TorusMap, omega, N: int = 100_000, grid: int = 32, horizon: int | None = None, min_angle: float = 1e-3) -> DichotomyReport:
    """Finite-time Lyapunov exponent plus stable/unstable transversality.

    Unstable direction at theta: dominant left singular vector of the
    product arriving at theta after ``horizon`` steps. Stable direction:
    orthogonal complement of the dominant right singular vector of the
    product leaving theta.
    """
    w = as_frequency(omega).value
    coeffs = np.ascontiguousarray(A.coeffs)
    *_, log_scale = K.torus_product(coeffs, A.M, w, 0.0, N, 32)
    lyap = log_scale / N
    thr = 5.0 / math.sqrt(N)
    T = horizon if horizon is not None else min(N, 4000)
    angles = []
    for j in range(grid):
        th = 2 * np.pi * j / grid
        m_in = np.array(K.torus_product(coeffs, A.M, w, th - 2 * np.pi * w * T, T, 32)[:4]).reshape(2, 2)
        m_out = np.array(K.torus_product(coeffs, A.M, w, th, T, 32)[:4]).reshape(2, 2)
        u = _dominant(m_in, left=True)
        r = _dominant(m_out, left=False)
        s = np.array([-r[1], r[0]])
        angles.append(abs(u[0] * s[1] - u[1] * s[0]))
    ang = float(np.arcsin(min(1.0, min(angles))))
    return DichotomyReport(float(lyap), thr, ang, bool(lyap > thr and ang > min_angle))


def dichotomy_test(A: TorusMap, omega, N: int = 100_000, **kw) -> bool:
    """Numerical exponential dichotomy: see ``dichotomy_report``."""
    return dichotomy_report(A, omega, N, **kw).hyperbolic


def synthetic_cocycle(c0: float, omega, seed: int, M: int = 6, decay: float = 0.8, amplitude: float = 0.3):
    """A = Z0(theta + 2 pi omega) B0 Z0(theta)^{-1} with random analytic Z0 of degree 0.

    Returns (A, v, Z0) with v the first column of Z0, so v is A-invariant.
    """
    rng = np.random.default_rng(seed)
    w = as_frequency(omega).value

    def rand_trig(scale):
        c = np.zeros(2 * M + 1, dtype=complex)
        for m in range(1, M + 1):
            z = (rng.normal() + 1j * rng.normal()) * scale * math.exp(-decay * m)
            c[M + m] = z
            c[M - m] = np.conj(z)
        c[M] = rng.normal() * scale
        return c

    v1 = rand_trig(amplitude)
    v1[M] += 1.0
    v2 = rand_trig(amplitude)
    h = rand_trig(1.0)
    v = TorusMap(np.stack([v1, v2], axis=1))
    Zv = build_conjugation(v)
    H = TorusMap(h)

    def zmap(z, hs):
        sh = np.zeros(hs.shape + (2, 2))
        sh[..., 0, 0] = sh[..., 1, 1] = 1.0
        sh[..., 0, 1] = hs
        return z @ sh

    Z0 = pointwise(zmap, Zv, H)
    B0 = np.array([[1.0, c0], [0.0, 1.0]])
    A = pointwise(lambda zs, z: zs @ B0 @ _inv(z), Z0.shift(2 * np.pi * w), Z0)
    return A, v, Z0


def edge_candidates(b: float, phi: float = 0.0, omega="golden", L: int = 2001, gap: float = 1e-8) -> list:
    """Eigenpairs of the centered truncation usable for reduction, sorted by eigenvalue.

    Only pairs whose eigenvalue is separated from every other one by at least
    ``gap`` are kept: finite-size mirror doublets (centres at +-n0) are
    numerically degenerate and their dual vectors are badly conditioned.
    """
    from .localization import diagonalize_truncation, interior, isolated

    pairs = diagonalize_truncation(b, phi, omega, L)
    keep = isolated(pairs, gap)
    return sorted(interior(keep), key=lambda p: p.eigenvalue)


def reduce_eigenpair(e, omega=None) -> FloquetResult:
    """Floquet reduction of the dual cocycle at (2a/b, 4/b) built from an eigenpair."""
    from .localization import dual_solution
    from .torus import schrodinger_map

    s = dual_solution(e, omega=omega)
    a2, b2 = s.dual
    return floquet_reduce(schrodinger_map(a2, b2), s.invariant_vector(), s.omega, sign=s.sign)
