"""Periodic approximants: exact state counting for omega replaced by p/q.

For a q-periodic Jacobi operator the integrated density of states is
known in closed form from the Dirichlet count on one period and the trace
of the monodromy. It is exactly constant (equal to j/q) on every open gap,
which lets gap edges be bisected to rounding accuracy regardless of how
narrow the gap is.

Taking the union of spectra over all phases (the quasi-periodic spectrum
in the limit q -> infinity) amounts to intersecting the gaps at the two
extremal phases 0 and pi/q, because the discriminant depends on the phase
only through cos(q phi).
"""

from __future__ import annotations

import math

from . import _kernels as K


class PeriodicApproximant:
    """Counting function of H_{b, phi} with omega replaced by p/q.

    ``count(a)`` returns q times the phase-union IDS, averaged over the two
    extremal phases: it equals the integer j exactly on the j-th gap of the
    union spectrum and increases strictly inside the bands.
    """

    def __init__(self, b: float, p: int, q: int, phases=None):
        self.b = float(b)
        self.p, self.q = int(p), int(q)
        if phases is None:
            phases = (0.0, math.pi / q)
        self.phases = tuple(float(f) for f in phases)
        w = self.p / self.q
        self._period = [K.potential(self.b, w, f, 1, q + 1) for f in self.phases]
        self._dirichlet = [d[:-1].copy() for d in self._period]

    def counts(self, a: float) -> list[float]:
        """q * N(a) for each phase."""
        a = float(a)
        return [K.periodic_counting(a, dp, dd, self.q) for dp, dd in zip(self._period, self._dirichlet)]

    def count(self, a: float) -> float:
        c = self.counts(a)
        return sum(c) / len(c)

    def ids(self, a: float) -> float:
        return self.count(a) / self.q

    def level(self, k: int) -> int:
        """Gap index j = q {-k p/q}: the IDS plateau of the gap labelled k."""
        return (-k * self.p) % self.q
