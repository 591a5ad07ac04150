"""Real-analytic maps on the circle stored as truncated Fourier series."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class TorusMap:
    """theta -> sum_{|m| <= M} c_m exp(i m theta).

    ``coeffs`` has shape (2M+1, *target) and index ``m + M`` holds c_m.
    Targets are scalars (), vectors (2,) or matrices (2, 2). Maps are real
    valued when c_{-m} = conj(c_m); evaluation then returns real arrays.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim == 0 or c.shape[0] % 2 == 0:
            raise ValueError("need an odd number 2M+1 of Fourier coefficients")
        object.__setattr__(self, "coeffs", c)

    @property
    def M(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def target(self) -> tuple[int, ...]:
        return self.coeffs.shape[1:]

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.M, self.M + 1)

    # construction

    @classmethod
    def from_samples(cls, values, M: int | None = None) -> "TorusMap":
        """Interpolate samples on theta_j = 2 pi j / K (axis 0) into a Fourier series."""
        values = np.asarray(values)
        k = values.shape[0]
        top = (k - 1) // 2 if M is None else M
        if top > (k - 1) // 2:
            raise ValueError("M too large for the sampling grid")
        f = np.fft.fft(values, axis=0) / k
        idx = np.r_[np.arange(-top, 0) % k, np.arange(0, top + 1)]
        return cls(f[idx])

    @classmethod
    def from_function(cls, func, K: int = 256, M: int | None = None) -> "TorusMap":
        theta = 2.0 * np.pi * np.arange(K) / K
        return cls.from_samples(func(theta), M)

    @classmethod
    def constant(cls, value) -> "TorusMap":
        return cls(np.asarray(value, dtype=complex)[None, ...])

    @classmethod
    def trig(cls, M: int, modes: dict, target=()) -> "TorusMap":
        """Build from a {m: c_m} dictionary; missing modes are zero."""
        c = np.zeros((2 * M + 1, *target), dtype=complex)
        for m, val in modes.items():
            c[m + M] = val
        return cls(c)

    # evaluation

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        flat = theta.reshape(-1)
        out = np.empty((flat.size,) + self.target, dtype=complex)
        # chunk so the phase table stays small
        step = max(1, (1 << 22) // (2 * self.M + 1))
        for i in range(0, flat.size, step):
            phase = np.exp(1j * np.multiply.outer(flat[i : i + step], self.modes))
            out[i : i + step] = np.tensordot(phase, self.coeffs, axes=([-1], [0]))
        out = out.reshape(theta.shape + self.target)
        if self.is_real():
            return out.real
        return out

    def is_real(self, tol: float = 1e-12) -> bool:
        c = self.coeffs
        scale = max(1.0, float(np.abs(c).max()))
        return bool(np.abs(c[::-1].conj() - c).max() <= tol * scale)

    def samples(self, K: int) -> np.ndarray:
        """Values on theta_j = 2 pi j / K by FFT (modes beyond K alias exactly)."""
        bins = np.zeros((K,) + self.target, dtype=complex)
        np.add.at(bins, self.modes % K, self.coeffs)
        out = np.fft.ifft(bins, axis=0) * K
        if self.is_real():
            return out.real
        return out

    # algebra

    def shift(self, alpha: float) -> "TorusMap":
        """theta -> self(theta + alpha)."""
        ph = np.exp(1j * self.modes * alpha).reshape((-1,) + (1,) * len(self.target))
        return TorusMap(self.coeffs * ph)

    def mean(self):
        c0 = self.coeffs[self.M]
        return c0.real if self.is_real() else c0

    def resized(self, M: int) -> "TorusMap":
        if M >= self.M:
            pad = [(M - self.M, M - self.M)] + [(0, 0)] * len(self.target)
            return TorusMap(np.pad(self.coeffs, pad))
        return TorusMap(self.coeffs[self.M - M : self.M + M + 1])

    def trimmed(self, tol: float = 1e-16) -> "TorusMap":
        """Drop outer modes whose size is below ``tol`` times the largest one."""
        amp = np.abs(self.coeffs).reshape(self.coeffs.shape[0], -1).max(axis=1)
        top = amp.max()
        if top == 0.0:
            return self.resized(0)
        big = np.flatnonzero(amp > tol * top)
        return self.resized(int(np.max(np.abs(self.modes[big]))))

    def component(self, *index) -> "TorusMap":
        return TorusMap(self.coeffs[(slice(None),) + index])

    def tail_mass(self, fraction: float = 0.1) -> float:
        """Largest |c_m| over the outer `fraction` of modes, relative to the largest |c_m|."""
        amp = np.abs(self.coeffs).reshape(self.coeffs.shape[0], -1).max(axis=1)
        top = amp.max()
        if top == 0.0:
            return 0.0
        cut = max(1, int(math.ceil(fraction * self.M)))
        outer = np.r_[amp[:cut], amp[-cut:]]
        return float(outer.max() / top)

    def decay_width(self) -> tuple[float, float]:
        """Fit |c_m| <= C exp(-delta |m|) on the coefficients above the rounding floor.

        Returns (delta, C). delta is inf for a constant map.
        """
        amp = np.abs(self.coeffs).reshape(self.coeffs.shape[0], -1).max(axis=1)
        m = np.abs(self.modes)
        top = amp.max()
        keep = (amp > 1e-13 * top) & (m > 0)
        if keep.sum() < 2:
            return math.inf, float(top)
        slope, _ = np.polyfit(m[keep], np.log(amp[keep]), 1)
        delta = max(-slope, 0.0)
        C = float(np.max(amp * np.exp(delta * m)))
        return float(delta), C

    # serialisation

    def to_dict(self) -> dict:
        delta, _ = self.decay_width()
        return {
            "M": self.M,
            "target": list(self.target),
            "delta_estimate": None if math.isinf(delta) else delta,
            "re": self.coeffs.real.tolist(),
            "im": self.coeffs.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TorusMap":
        c = np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)
        return cls(c.reshape((2 * d["M"] + 1, *d["target"])))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "TorusMap":
        return cls.from_dict(json.loads(s))


def pointwise(func, *maps: TorusMap, K: int | None = None, tol: float = 1e-13, max_K: int = 1 << 15) -> TorusMap:
    """Apply ``func`` to sampled values of ``maps`` and re-expand.

    The grid doubles until the trailing Fourier coefficients fall below
    ``tol`` relative to the largest one.
    """
    if K is None:
        K = 4 * (2 * max(m.M for m in maps) + 1)
    K = 1 << int(math.ceil(math.log2(max(K, 16))))
    while True:
        vals = func(*(m.samples(K) for m in maps))
        out = TorusMap.from_samples(vals, M=K // 4)
        if out.tail_mass(0.25) <= tol or K >= max_K:
            return out.trimmed()
        K *= 2


def rotation_map(k: int = 1) -> TorusMap:
    """R_1(k theta) as a matrix-valued TorusMap."""
    M = abs(k)
    c = np.zeros((2 * M + 1, 2, 2), dtype=complex)
    if k == 0:
        c[0] = np.eye(2)
        return TorusMap(c)
    # cos = (e^{ik} + e^{-ik})/2, sin = (e^{ik} - e^{-ik})/(2i)
    cp = np.array([[0.5, 0.5j], [-0.5j, 0.5]])
    c[M + k] = cp
    c[M - k] = cp.conj()
    return TorusMap(c)


def schrodinger_map(a: float, b: float) -> TorusMap:
    """theta -> [[a - b cos(theta), -1], [1, 0]]."""
    c = np.zeros((3, 2, 2), dtype=complex)
    c[1] = [[a, -1.0], [1.0, 0.0]]
    c[0, 0, 0] = -b / 2
    c[2, 0, 0] = -b / 2
    return TorusMap(c)


def matmul(*maps: TorusMap, shifts=None, **kw) -> TorusMap:
    """Pointwise product of matrix-valued maps, each optionally shifted in theta."""
    if shifts is not None:
        maps = tuple(m.shift(s) if s else m for m, s in zip(maps, shifts))

    def prod(*vals):
        out = vals[0]
        for v in vals[1:]:
            out = out @ v
        return out

    return pointwise(prod, *maps, **kw)


def inverse_sl2(Z: TorusMap, **kw) -> TorusMap:
    def inv(v):
        out = np.empty_like(v)
        out[..., 0, 0] = v[..., 1, 1]
        out[..., 1, 1] = v[..., 0, 0]
        out[..., 0, 1] = -v[..., 0, 1]
        out[..., 1, 0] = -v[..., 1, 0]
        return out

    return pointwise(inv, Z, **kw)
