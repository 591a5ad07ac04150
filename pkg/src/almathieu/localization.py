"""Aubry duality and localization numerics for |b| > 2.

Eigenvectors of centered truncations (sites -M..M) are exponentially
localized with rate log(|b|/2). Read as Fourier coefficients they give
analytic functions psi~(theta) = sum_m psi_m e^{i m theta} whose samples
along the rotation orbit solve the dual Harper equation at (2a/b, 4/b).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .cocycle import CocycleParams
from .frequency import as_frequency
from .rotation import sturmian_rotation
from .torus import TorusMap

NOISE_FLOOR = 1e-28
DUAL_TOL = 1e-6


def dual_params(a: float, b: float) -> tuple[float, float]:
    """(a, b) -> (2a/b, 4/b)."""
    if b == 0:
        raise ValueError("duality needs b != 0")
    return 2.0 * a / b, 4.0 / b


def verify_duality(b: float, a_samples: int = 50, omega="golden", N: int = 1_000_000, phi: float = 0.0) -> float:
    """max |rot(a, b) - rot(2a/b, 4/b)| over a uniform grid on the norm bound of sigma_b."""
    if b == 0:
        raise ValueError("duality needs b != 0")
    w = as_frequency(omega).value
    r = 2.0 + abs(b)
    worst = 0.0
    for a in np.linspace(-r, r, a_samples):
        a2, b2 = dual_params(a, b)
        r1 = sturmian_rotation(CocycleParams(a, b, w, phi), N)
        r2 = sturmian_rotation(CocycleParams(a2, b2, w, phi), N)
        worst = max(worst, abs(r1 - r2))
    return worst


@dataclass(frozen=True, eq=False)
class EigenPair:
    """Eigenpair of the centered truncation of H_{b, phi}."""

    eigenvalue: float
    vector: np.ndarray = field(repr=False)
    beta: float
    center: int
    sites: np.ndarray = field(repr=False)
    b: float
    phi: float
    omega: float

    @property
    def M(self) -> int:
        return (len(self.sites) - 1) // 2

    def ipr(self) -> float:
        return float(np.sum(self.vector**4))

    def residual(self) -> float:
        """||H psi - a psi|| on interior sites, for unit psi."""
        x = self.vector
        v = self.b * np.cos(2 * np.pi * self.omega * self.sites + self.phi)
        r = x[2:] + x[:-2] + (v[1:-1] - self.eigenvalue) * x[1:-1]
        return float(np.linalg.norm(r))


def centered_diagonal(b: float, phi: float, omega: float, L: int) -> tuple[np.ndarray, np.ndarray]:
    if L < 3 or L % 2 == 0:
        raise ValueError("L must be odd and at least 3")
    M = (L - 1) // 2
    sites = np.arange(-M, M + 1)
    return sites, b * np.cos(2.0 * np.pi * omega * sites + phi)


def decay_exponent(psi: np.ndarray, sites: np.ndarray, center_index: int | None = None) -> float:
    """Least-squares rate beta in psi_n^2 + psi_{n+1}^2 ~ exp(-2 beta |n - center|).

    The fit uses the outer half of the support above the rounding floor,
    leaving out its last 5%.
    """
    if center_index is None:
        center_index = int(np.argmax(np.abs(psi)))
    s = psi[:-1] ** 2 + psi[1:] ** 2
    dist = np.abs(np.arange(len(s)) - center_index).astype(float)
    keep = s > NOISE_FLOOR * s.max()
    if not keep.any():
        return 0.0
    radius = dist[keep].max()
    lo, hi = 0.5 * radius, 0.95 * radius
    sel = keep & (dist >= lo) & (dist <= hi)
    if sel.sum() < 3:
        return 0.0
    slope = np.polyfit(dist[sel], np.log(s[sel]), 1)[0]
    return float(max(-slope / 2.0, 0.0))


def diagonalize_truncation(b: float, phi: float = 0.0, omega="golden", L: int = 2001, window=None) -> list[EigenPair]:
    """Eigenpairs of the centered truncation with eigenvalue in ``window``."""
    w = as_frequency(omega).value
    sites, d = centered_diagonal(b, phi, w, L)
    e = np.ones(L - 1)
    if window is None:
        vals, vecs = eigh_tridiagonal(d, e)
    else:
        vals, vecs = eigh_tridiagonal(d, e, select="v", select_range=tuple(window))
    out = []
    for i in range(len(vals)):
        psi = vecs[:, i]
        c = int(np.argmax(np.abs(psi)))
        # fix the overall sign so the largest entry is positive
        psi = psi * np.sign(psi[c])
        out.append(EigenPair(float(vals[i]), psi, decay_exponent(psi, sites, c), int(sites[c]), sites, float(b), float(phi), w))
    return out


def interior(pairs: list[EigenPair], margin: float = 0.5) -> list[EigenPair]:
    """Pairs centred within the middle ``margin`` fraction of the window."""
    return [p for p in pairs if abs(p.center) <= margin * p.M]


def median_beta(pairs: list[EigenPair], margin: float = 0.5) -> float:
    return float(np.median([p.beta for p in interior(pairs, margin)]))


def most_localized(pairs: list[EigenPair], count: int, margin: float = 0.5) -> list[EigenPair]:
    """Interior pairs with the largest inverse participation ratio."""
    return sorted(interior(pairs, margin), key=lambda p: -p.ipr())[:count]


def isolated(pairs: list[EigenPair], gap: float = 1e-8) -> list[EigenPair]:
    """Pairs whose eigenvalue is at least ``gap`` away from every other one."""
    vals = np.array([p.eigenvalue for p in pairs])
    out = []
    for i, p in enumerate(pairs):
        others = np.delete(vals, i)
        if others.size == 0 or np.min(np.abs(others - p.eigenvalue)) >= gap:
            out.append(p)
    return out


def near_degenerate(pairs: list[EigenPair], gap: float = 1e-10) -> list[tuple[float, float]]:
    """Eigenvalue pairs closer than ``gap`` (finite-size mirror doublets)."""
    vals = np.sort([p.eigenvalue for p in pairs])
    d = np.diff(vals)
    return [(float(vals[i]), float(vals[i + 1])) for i in np.flatnonzero(d < gap)]


class ResonantPhaseReport(NamedTuple):
    phi: float
    N: int
    r: float
    hits: list
    low_n: int

    @property
    def verdict(self) -> str:
        late = [n for n in self.hits if abs(n) > self.low_n]
        return "clean" if not late else "resonant-within-horizon"


def resonant_phase_test(phi: float, omega="golden", N: int = 10_000, low_n: int | None = None) -> ResonantPhaseReport:
    """Every 0 < |n| <= N with |sin(phi + pi n omega)| < exp(-|n|^(1/(2r))).

    Hits with |n| <= low_n (default isqrt(N)) do not change the verdict:
    the threshold is close to 1 for small |n| and finitely many such hits
    are expected for any phase.
    """
    f = as_frequency(omega)
    if low_n is None:
        low_n = math.isqrt(N)
    n = np.r_[np.arange(-N, 0), np.arange(1, N + 1)]
    lhs = np.abs(np.sin(phi + np.pi * n * f.value))
    rhs = np.exp(-np.abs(n) ** (1.0 / (2.0 * f.r)))
    hits = [int(x) for x in n[lhs < rhs]]
    return ResonantPhaseReport(float(phi), int(N), f.r, hits, int(low_n))


def symmetry_check(e: EigenPair, phi: float | None = None) -> float:
    """max_n ||psi_{-n}| - |psi_n|| on a centered truncation.

    Under phi = 0 the potential is even, eigenvectors are even or odd and
    the deviation is at rounding level. Under phi = -pi/2 the potential is
    odd; the reflection (-psi_{-n}) then solves the equation at the
    opposite energy, not the same one, and the deviation is O(1) in
    general. See ``chiral_partner_check`` for the identity that does hold.
    """
    if phi is not None and not (math.isclose(phi % (2 * math.pi), e.phi % (2 * math.pi), abs_tol=1e-12)):
        raise ValueError("phi does not match the eigenpair")
    x = np.abs(e.vector)
    return float(np.max(np.abs(x[::-1] - x)))


def chiral_partner_check(pairs: list[EigenPair], e: EigenPair) -> float:
    """For phi = -pi/2: psi'_n = (-1)^n psi_{-n} is the eigenvector at -a.

    Returns max_n ||psi'_n| - |psi_{-n}|| for the eigenpair of ``pairs``
    nearest to -a (infinite if the spectrum has no such partner).
    """
    vals = np.array([p.eigenvalue for p in pairs])
    j = int(np.argmin(np.abs(vals + e.eigenvalue)))
    if abs(vals[j] + e.eigenvalue) > 1e-8:
        return math.inf
    return float(np.max(np.abs(np.abs(pairs[j].vector) - np.abs(e.vector[::-1]))))


@dataclass(frozen=True, eq=False)
class DualSolution:
    """Real quasi-periodic solution x_n = s^n psi~(2 pi omega n) of the dual equation.

    ``coeffs`` are the Fourier coefficients of the real function psi~ on
    modes -M..M; ``sign`` is +1 for phi = 0 and -1 for phi = pi (the
    antiperiodic case, Floquet trace -2).
    """

    coeffs: np.ndarray = field(repr=False)
    a: float
    b: float
    omega: float
    sign: int
    parity: str
    imag_part: float
    residual: float

    @property
    def dual(self) -> tuple[float, float]:
        return dual_params(self.a, self.b)

    @property
    def torus(self) -> TorusMap:
        return TorusMap(self.coeffs)

    def __call__(self, theta):
        return self.torus(theta)

    def samples(self, n) -> np.ndarray:
        n = np.asarray(n)
        return (float(self.sign) ** n) * self(2.0 * np.pi * self.omega * n)

    def invariant_vector(self) -> TorusMap:
        """v(theta) = (psi~(theta), psi~(theta - 2 pi omega)).

        Satisfies v(theta + 2 pi omega) = s A(theta) v(theta) with
        A(theta) = [[2a/b - (4/b) cos theta, -1], [1, 0]].
        """
        t = self.torus
        ts = t.shift(-2 * np.pi * self.omega)
        if self.sign < 0:
            # x_n = (-1)^n psi~(theta_n): the lagged component flips sign
            ts = TorusMap(-ts.coeffs)
        return TorusMap(np.stack([t.coeffs, ts.coeffs], axis=1))

    def invariance_residual(self, grid: int = 512) -> float:
        a2, b2 = self.dual
        th = 2 * np.pi * np.arange(grid) / grid
        v = self.invariant_vector()
        v0, v1 = v(th), v(th + 2 * np.pi * self.omega)
        Av = np.stack([(a2 - b2 * np.cos(th)) * v0[:, 0] - v0[:, 1], v0[:, 0]], axis=1)
        return float(np.max(np.abs(v1 - self.sign * Av)) / np.max(np.abs(v0)))


class DualSolutionError(RuntimeError):
    pass


def dual_residual(x: np.ndarray, n: np.ndarray, a2: float, b2: float, omega: float) -> float:
    """max |x_{n+1} + x_{n-1} + b2 cos(2 pi omega n) x_n - a2 x_n| / max |x| at interior n."""
    r = x[2:] + x[:-2] + (b2 * np.cos(2 * np.pi * omega * n[1:-1]) - a2) * x[1:-1]
    return float(np.max(np.abs(r)) / np.max(np.abs(x)))


def dual_solution(e: EigenPair, b: float | None = None, omega=None, window: int = 100, tol: float = DUAL_TOL) -> DualSolution:
    """Quasi-periodic dual solution built from a localized eigenvector.

    psi~ = sum psi_m e^{i m theta} is real for even eigenvectors and purely
    imaginary for odd ones; the dominant real component is kept and the
    other one is reported as ``imag_part`` (relative size).
    """
    b = e.b if b is None else float(b)
    w = e.omega if omega is None else as_frequency(omega).value
    if abs(b) <= 2.0:
        raise ValueError("dual solutions need |b| > 2")
    if e.beta <= 0.0:
        raise DualSolutionError("eigenvector is not localized")
    ph = e.phi % (2 * math.pi)
    if math.isclose(ph, 0.0, abs_tol=1e-12) or math.isclose(ph, 2 * math.pi, abs_tol=1e-12):
        sign = 1
    elif math.isclose(ph, math.pi, abs_tol=1e-12):
        sign = -1
    else:
        raise ValueError("real dual solutions need phi = 0 or phi = pi")
    psi = e.vector
    even = 0.5 * (psi + psi[::-1])
    odd = 0.5 * (psi - psi[::-1])
    ne, no = np.linalg.norm(even), np.linalg.norm(odd)
    if ne >= no:
        coeffs, parity, other = even.astype(complex), "even", no / ne
    else:
        # the transform is i * sum odd_m sin(m theta); keep its imaginary part
        coeffs, parity, other = (-1j * odd).astype(complex), "odd", ne / no
    a2, b2 = dual_params(e.eigenvalue, b)
    n = np.arange(-window - 1, window + 2)
    s = DualSolution(coeffs, e.eigenvalue, b, w, sign, parity, float(other), 0.0)
    res = dual_residual(s.samples(n), n, a2, b2, w)
    s = DualSolution(coeffs, e.eigenvalue, b, w, sign, parity, float(other), res)
    if res > tol:
        raise DualSolutionError(f"dual residual {res:.3e} exceeds {tol:.1e}")
    return s


def evenness(e: EigenPair, grid: int = 256) -> float:
    """max |psi~(-theta) - psi~(theta)| for the complex transform of the eigenvector."""
    th = 2 * np.pi * np.arange(grid) / grid
    ph = np.exp(1j * np.outer(th, e.sites))
    f = ph @ e.vector
    g = ph.conj() @ e.vector
    return float(np.max(np.abs(f - g)) / np.max(np.abs(f)))


class NoCoexistenceReport(NamedTuple):
    wronskian_drift: float
    bounded_max: float
    companion_max: float
    companion_slope: float
    companion_exponent: float


def _recur(x0, x1, a2, b2, omega, sign, n_start, n_steps, direction):
    """Iterate the dual equation from (x_{n0}, x_{n0+dir}) in one direction."""
    out = np.empty(n_steps + 2)
    out[0], out[1] = x0, x1
    n = n_start + direction
    for i in range(1, n_steps + 1):
        v = b2 * math.cos(2 * math.pi * omega * n)
        out[i + 1] = (a2 - v) * out[i] - out[i - 1]
        n += direction
    return out


def no_coexistence_check(s: DualSolution, window: int = 100) -> NoCoexistenceReport:
    """Companion of the dual solution and the Wronskian of the pair.

    x is regenerated from its samples at n = 0, 1 by the recurrence, y
    starts from the orthogonal initial data with W = 1. The report holds
    the relative drift of W_n = x_{n+1} y_n - x_n y_{n+1} over |n| <= window,
    max |x|, max |y|, the linear growth rate max|y_n|/|n| and the
    exponential rate log max|y| / window.
    """
    a2, b2 = s.dual
    x0, x1 = s.samples(np.array([0, 1]))
    nrm = x0 * x0 + x1 * x1
    y0, y1 = x1 / nrm, -x0 / nrm  # x1 y0 - x0 y1 = 1
    xs_f = _recur(x0, x1, a2, b2, s.omega, s.sign, 0, window, 1)
    ys_f = _recur(y0, y1, a2, b2, s.omega, s.sign, 0, window, 1)
    xs_b = _recur(x1, x0, a2, b2, s.omega, s.sign, 1, window, -1)
    ys_b = _recur(y1, y0, a2, b2, s.omega, s.sign, 1, window, -1)
    # assemble n = -window .. window+1
    x = np.r_[xs_b[::-1][:-2], xs_f]
    y = np.r_[ys_b[::-1][:-2], ys_f]
    n = np.arange(-window, -window + len(x))
    W = x[1:] * y[:-1] - x[:-1] * y[1:]
    drift = float(np.max(np.abs(W - 1.0)))
    ymax = float(np.max(np.abs(y)))
    far = np.abs(n) >= window // 2
    slope = float(np.max(np.abs(y[far]) / np.abs(n[far])))
    exponent = float(math.log(max(ymax, 1e-300)) / window)
    return NoCoexistenceReport(drift, float(np.max(np.abs(x))), ymax, slope, exponent)


def original_companion_exponent(e: EigenPair, steps: int = 200) -> float:
    """Growth rate of a solution of H_{b,phi} x = a x independent of the eigenvector.

    Launched from the eigenvector centre with data orthogonal to it; grows
    like exp(log(|b|/2) n).
    """
    i = int(np.argmax(np.abs(e.vector)))
    p0, p1 = e.vector[i], e.vector[i + 1]
    nrm = p0 * p0 + p1 * p1
    y0, y1 = p1 / nrm, -p0 / nrm
    logs = 0.0
    ym, y = y0, y1
    n = e.sites[i] + 1
    for _ in range(steps):
        v = e.b * math.cos(2 * math.pi * e.omega * n + e.phi)
        ym, y = y, (e.eigenvalue - v) * y - ym
        n += 1
        s = abs(y) + abs(ym)
        if s > 1e100:
            logs += math.log(s)
            y /= s
            ym /= s
    return (logs + math.log(abs(y) + abs(ym))) / steps
