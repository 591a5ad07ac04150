"""Spectral gaps: location, labelling, the ten biggest, butterfly grids.

A gap labelled k is the interval of energies on which 2 rot = {k omega}
(equivalently ids = 1 - {k omega}). Two engines are available:

* ``approximant`` (default): exact counting for a convergent p/q with
  q >= q_min, union over phases; edges to ~1e-12. Couplings |b| > 2 are
  mapped to 4/|b| by duality, which dilates the spectrum by |b|/2.
* ``truncation``: phase-averaged Dirichlet IDS of a long truncation at the
  true omega; coarser, used as an independent cross-check.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict

import numpy as np

from .approximant import PeriodicApproximant
from .frequency import Frequency, as_frequency
from .rotation import ids

RESOLUTION = 1e-12
COLLAPSE_FACTOR = 10.0
Q_MIN = 5000


class GapNotResolved(RuntimeError):
    """Bisection could not bracket the plateau of the requested label."""

    def __init__(self, k: int, detail: str = ""):
        super().__init__(f"label-not-resolved: k={k}" + (f" ({detail})" if detail else ""))
        self.k = k


@dataclass(frozen=True)
class Gap:
    """Labelled gap. ``ids_value`` is the plateau of 2 rot, i.e. {k omega}."""

    k: int
    left: float
    right: float
    ids_value: float
    collapsed: bool
    edge_error: float = 0.0

    @property
    def width(self) -> float:
        return self.right - self.left

    @property
    def centre(self) -> float:
        return 0.5 * (self.left + self.right)

    def as_row(self) -> dict:
        d = asdict(self)
        d["width"] = self.width
        return d


def spectrum_bounds(b: float) -> tuple[float, float]:
    """Operator-norm enclosure [-2-|b|, 2+|b|] of the spectrum."""
    r = 2.0 + abs(float(b))
    return -r, r


def _dual_scale(b: float) -> tuple[float, float]:
    """(coupling actually computed, factor mapping its energies back)."""
    b = abs(float(b))
    if b > 2.0:
        return 4.0 / b, b / 2.0
    return b, 1.0


def _approximant(b: float, omega: Frequency, q_min: int) -> PeriodicApproximant:
    p, q = omega.approximant(q_min)
    return PeriodicApproximant(b, p, q)


def spectrum_extent(b: float, omega="golden", q_min: int = Q_MIN, resolution: float = RESOLUTION) -> tuple[float, float]:
    """Bottom and top of the spectrum (edges of the two unbounded gaps)."""
    omega = as_frequency(omega)
    bb, scale = _dual_scale(b)
    P = _approximant(bb, omega, q_min)
    lo, hi = spectrum_bounds(bb)
    bottom = _bisect(lambda a: P.count(a) > 0.0, lo - 1.0, hi + 1.0, resolution)
    top = _bisect(lambda a: P.count(a) >= P.q, lo - 1.0, hi + 1.0, resolution)
    return scale * bottom, scale * top


def _bisect(pred, lo: float, hi: float, resolution: float) -> float:
    """Smallest a in [lo, hi] with pred(a) true, pred monotone false->true."""
    while hi - lo > resolution * max(1.0, abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def spectrum_membership(a: float, b: float, omega="golden", tol: float = 1e-12, delta: float = 1e-6, q_min: int = Q_MIN) -> bool:
    """True iff rot varies by more than ``tol`` over [a - delta, a + delta]."""
    omega = as_frequency(omega)
    lo, hi = spectrum_bounds(b)
    if a + delta < lo or a - delta > hi:
        return False
    bb, scale = _dual_scale(b)
    P = _approximant(bb, omega, q_min)
    x0, x1 = (a - delta) / scale, (a + delta) / scale
    variation = 0.5 * (P.ids(x1) - P.ids(x0))
    return bool(variation > tol)


def _plateau(P: PeriodicApproximant, j: int, lo: float, hi: float, resolution: float, k: int):
    """Edges of {a : count(a) == j}; collapsed plateaus give left == right."""
    f_lo, f_hi = P.count(lo), P.count(hi)
    if not f_lo < j < f_hi:
        raise GapNotResolved(k, "level outside the counting range")
    inside = None
    a, b_ = lo, hi
    tol = resolution * max(1.0, abs(lo), abs(hi))
    while b_ - a > tol:
        mid = 0.5 * (a + b_)
        c = P.count(mid)
        if c == j:
            inside = mid
            break
        if c < j:
            a = mid
        else:
            b_ = mid
    if inside is None:
        # level crossed inside one resolution cell: a collapsed gap
        x = 0.5 * (a + b_)
        return x, x
    left = _bisect(lambda x: P.count(x) >= j, a, inside, resolution)
    right = _bisect(lambda x: P.count(x) > j, inside, b_, resolution)
    return left, right


def _find_gap_approximant(k, b, omega, q_min, resolution, with_error):
    bb, scale = _dual_scale(b)
    lo, hi = spectrum_bounds(bb)
    lo, hi = lo - 1.0, hi + 1.0

    def edges(pq):
        P = PeriodicApproximant(bb, *pq)
        return _plateau(P, P.level(k), lo, hi, resolution, k)

    left, right = edges(omega.approximant(q_min))
    err = 0.0
    if with_error:
        prev = omega.previous_approximant(q_min)
        if prev[1] > 2 * abs(k):
            l2, r2 = edges(prev)
            err = max(abs(l2 - left), abs(r2 - right))
    return scale * left, scale * right, scale * err


def _find_gap_truncation(k, b, omega, L, phases, resolution):
    """Gap from the phase-averaged Dirichlet IDS at the true frequency.

    Edge states of the truncation move the IDS by O(1/L) inside a gap, so
    the plateau is taken as {|ids - level| <= 4/(L-1)}.
    """
    level = 1.0 - omega.frac(k)
    band = 4.0 / (L - 1)
    lo, hi = spectrum_bounds(b)
    lo, hi = lo - 1.0, hi + 1.0
    w = omega.value

    def g(a):
        return ids(a, b, w, L, phases) - level

    a, c = lo, hi
    inside = None
    while c - a > resolution:
        mid = 0.5 * (a + c)
        v = g(mid)
        if abs(v) <= band:
            inside = mid
            break
        if v < 0:
            a = mid
        else:
            c = mid
    if inside is None:
        raise GapNotResolved(k, "truncation plateau not bracketed")
    left = _bisect(lambda x: g(x) >= -band, a, inside, resolution)
    right = _bisect(lambda x: g(x) > band, inside, c, resolution)
    return left, right


def find_gap(
    k: int,
    b: float,
    omega="golden",
    method: str = "approximant",
    *,
    q_min: int = Q_MIN,
    resolution: float = RESOLUTION,
    collapse_threshold: float | None = None,
    L: int = 1 << 14,
    phases: int = 16,
    with_error: bool = True,
) -> Gap:
    """Locate the gap on which 2 rot = {k omega}."""
    omega = as_frequency(omega)
    if k == 0:
        raise GapNotResolved(k, "k = 0 labels the unbounded gaps")
    if method == "approximant":
        left, right, err = _find_gap_approximant(k, b, omega, q_min, resolution, with_error)
    elif method == "truncation":
        res = max(resolution, 1e-9)
        left, right = _find_gap_truncation(k, b, omega, L, phases, res)
        err = 4.0 / (L - 1)
        resolution = res
    else:
        raise ValueError(f"unknown method {method!r}")
    if collapse_threshold is None:
        collapse_threshold = COLLAPSE_FACTOR * resolution * max(1.0, abs(left))
    width = right - left
    return Gap(int(k), float(left), float(right), omega.frac(k), bool(width <= collapse_threshold), float(err))


def _ordered_map(func, items, workers: int):
    """map() over threads; the numba kernels release the GIL. Order is preserved."""
    if workers <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def scan_gaps(b: float, omega="golden", kmax: int = 12, failures: list | None = None, workers: int = 1, **kw) -> list[Gap]:
    """All gaps with 1 <= |k| <= kmax, widest first. Unresolved labels go to ``failures``."""
    if kmax < 1:
        raise ValueError("kmax must be at least 1")
    omega = as_frequency(omega)

    def one(k):
        try:
            return find_gap(k, b, omega, **kw)
        except GapNotResolved as exc:
            return exc

    labels = [k for m in range(1, kmax + 1) for k in (m, -m)]
    out = []
    for k, g in zip(labels, _ordered_map(one, labels, workers)):
        if isinstance(g, GapNotResolved):
            if failures is not None:
                failures.append((k, str(g)))
        else:
            out.append(g)
    out.sort(key=lambda g: (-g.width, abs(g.k), -g.k))
    return out


def in_upper_half(k: int, omega) -> bool:
    """{k omega}/2 in [1/4, 1/2]: the representative of the mirror pair (k, -k)."""
    return as_frequency(omega).frac(k) >= 0.5


def upper_half_labels(omega="golden", count: int = 10) -> list[int]:
    """First ``count`` values of |k|, signed so that {k omega}/2 lies in [1/4, 1/2]."""
    omega = as_frequency(omega)
    out = []
    m = 1
    while len(out) < count:
        out.append(m if in_upper_half(m, omega) else -m)
        m += 1
    return out


def ten_biggest(gaps: list[Gap], omega="golden", count: int = 10) -> list[Gap]:
    """Widest gaps among those with {k omega}/2 in [1/4, 1/2].

    Gaps k and -k are mirror images under a -> -a and have equal widths,
    so only one member of each pair is kept.
    """
    omega = as_frequency(omega)
    kept = [g for g in gaps if in_upper_half(g.k, omega)]
    kept.sort(key=lambda g: (-g.width, abs(g.k)))
    return kept[:count]


def butterfly_grid(b_range, a_range, nb: int, na: int, omega="golden", L: int = 2000, phases: int = 8, workers: int = 1) -> np.ndarray:
    """IDS on an nb x na grid, row i at coupling b_i, column j at energy a_j."""
    if nb < 2 or na < 2:
        raise ValueError("nb and na must be at least 2")
    w = as_frequency(omega).value
    bs = np.linspace(b_range[0], b_range[1], nb)
    a_s = np.linspace(a_range[0], a_range[1], na)
    return np.array(_ordered_map(lambda bv: ids(a_s, bv, w, L, phases), bs, workers))
