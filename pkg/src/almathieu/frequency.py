"""Frequencies of the circle rotation: continued fractions and Diophantine constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

CF_TERMS = 40
N_CHECK = 10_000
RATIONAL_QMAX = 100
RATIONAL_TOL = 1e-12


class RationalFrequencyError(ValueError):
    """Frequency is (numerically) rational."""


def continued_fraction(x: float, terms: int = CF_TERMS) -> tuple[int, ...]:
    """Partial quotients [a0; a1, a2, ...] of x, stopping early if x becomes exact."""
    out = []
    for _ in range(terms):
        a = math.floor(x)
        out.append(int(a))
        rem = x - a
        if rem < 1e-15:
            break
        x = 1.0 / rem
    return tuple(out)


def convergents(cf: tuple[int, ...]) -> list[tuple[int, int]]:
    p0, q0, p1, q1 = 1, 0, cf[0], 1
    out = [(p1, q1)]
    for a in cf[1:]:
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        out.append((p1, q1))
    return out


def rational_neighbour(x: float, qmax: int = RATIONAL_QMAX, tol: float = RATIONAL_TOL):
    """Return p/q with q <= qmax and |x - p/q| <= tol, or None."""
    for q in range(1, qmax + 1):
        p = round(x * q)
        if abs(x - p / q) <= tol:
            return Fraction(p, q)
    return None


def _fit_diophantine(value: float, n_check: int) -> tuple[float, float]:
    n = np.arange(1, n_check + 1, dtype=float)
    s = np.abs(np.sin(2.0 * np.pi * n * value))
    # record minima carry the asymptotic exponent
    rec = np.minimum.accumulate(s)
    idx = np.flatnonzero(np.r_[True, rec[1:] < rec[:-1]])
    if idx.size >= 3:
        slope = -np.polyfit(np.log(n[idx]), np.log(rec[idx]), 1)[0]
    else:
        slope = 1.0
    r = max(float(slope), 1.0) + 0.05
    c = float(np.min(s * n**r)) * (1.0 - 1e-9)
    return c, r


@dataclass(frozen=True)
class Frequency:
    """An irrational rotation frequency with a Diophantine certificate.

    `c` and `r` satisfy |sin(2 pi n omega)| > c / |n|^r for 0 < n <= n_check.
    When not supplied they are fitted from record minima of |sin(2 pi n omega)|.
    """

    value: float
    c: float
    r: float
    cf: tuple[int, ...] = field(repr=False)
    n_check: int = field(default=N_CHECK, repr=False)

    @classmethod
    def from_value(
        cls,
        value: float,
        c: float | None = None,
        r: float | None = None,
        n_check: int = N_CHECK,
        qmax: int = RATIONAL_QMAX,
        rational_tol: float = RATIONAL_TOL,
    ) -> "Frequency":
        value = float(value)
        if not 0.0 < value < 1.0:
            raise ValueError(f"frequency must lie in (0, 1), got {value}")
        near = rational_neighbour(value, qmax, rational_tol)
        if near is not None:
            raise RationalFrequencyError(f"omega={value} is within {rational_tol} of {near}")
        if (c is None) != (r is None):
            raise ValueError("supply both c and r, or neither")
        if c is None:
            c, r = _fit_diophantine(value, n_check)
        else:
            if c <= 0 or r <= 1:
                raise ValueError("Diophantine constants need c > 0 and r > 1")
            n = np.arange(1, n_check + 1, dtype=float)
            bad = np.abs(np.sin(2.0 * np.pi * n * value)) <= c / n**r
            if bad.any():
                raise ValueError(
                    f"Diophantine bound fails at n={int(n[bad][0])} for c={c}, r={r}"
                )
        return cls(value, float(c), float(r), continued_fraction(value), n_check)

    @classmethod
    def golden(cls) -> "Frequency":
        return cls.from_value(GOLDEN)

    def __float__(self) -> float:
        return self.value

    def convergents(self) -> list[tuple[int, int]]:
        return convergents(self.cf)

    def approximant(self, q_min: int = 5000) -> tuple[int, int]:
        """First convergent p/q with q >= q_min (the last one if none reaches it)."""
        conv = self.convergents()
        for p, q in conv:
            if q >= q_min:
                return p, q
        return conv[-1]

    def previous_approximant(self, q_min: int = 5000) -> tuple[int, int]:
        conv = self.convergents()
        p, q = self.approximant(q_min)
        i = conv.index((p, q))
        return conv[max(i - 1, 0)]

    def frac(self, k: int) -> float:
        """Fractional part {k omega}."""
        return (k * self.value) % 1.0


def as_frequency(omega) -> Frequency:
    """Accept a Frequency, a float, or the string 'golden'."""
    if isinstance(omega, Frequency):
        return omega
    if isinstance(omega, str):
        if omega.strip().lower() == "golden":
            return Frequency.golden()
        return Frequency.from_value(float(omega))
    return Frequency.from_value(float(omega))
