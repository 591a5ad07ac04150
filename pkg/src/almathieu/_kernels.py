"""Compiled inner loops.

Everything here works on plain floats and arrays so numba can compile it;
the public modules wrap these with typed, validated entry points.
"""

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi

# rescale threshold for scalar recurrences
_BIG = 1e150
_SMALL = 1e-150


@njit(cache=True, nogil=True)
def sturmian_sign_changes(a, b, omega, phi, n_steps, x0, x1):
    """Sign changes of the Harper solution over 1 <= n <= n_steps.

    Exact zeros count as one change each (this includes x(N) = 0).
    """
    xm, x = x0, x1
    count = 0
    for n in range(1, n_steps):
        xp = (a - b * math.cos(TWO_PI * omega * n + phi)) * x - xm
        if xp == 0.0:
            count += 1
        elif x * xp < 0.0:
            count += 1
        xm, x = x, xp
        ax = abs(x)
        if ax > _BIG or (ax < _SMALL and ax != 0.0):
            s = 1.0 / ax
            x *= s
            xm *= s
    return count


@njit(cache=True, nogil=True)
def potential(b, omega, phi, n0, n1):
    """b*cos(2*pi*omega*n + phi) for n0 <= n < n1."""
    out = np.empty(n1 - n0)
    for i in range(n1 - n0):
        out[i] = b * math.cos(TWO_PI * omega * (n0 + i) + phi)
    return out


@njit(cache=True, nogil=True)
def sturm_count(a, diag):
    """Eigenvalues <= a of the tridiagonal matrix (diag, off-diagonal 1).

    LDL^T pivots q_i = d_i - a - 1/q_{i-1}; a zero pivot is nudged to the
    negative side so that an eigenvalue equal to a is counted.
    """
    count = 0
    q = 1.0
    first = True
    for i in range(diag.shape[0]):
        if first:
            q = diag[i] - a
            first = False
        else:
            q = diag[i] - a - 1.0 / q
        if q <= 0.0:
            count += 1
            if q == 0.0:
                q = -1e-300
    return count


@njit(cache=True, nogil=True)
def schrodinger_product(a, b, omega, phi, n_steps):
    """Plain product A(theta_{n-1})...A(theta_0), no rescaling."""
    m11, m12, m21, m22 = 1.0, 0.0, 0.0, 1.0
    for n in range(n_steps):
        e = a - b * math.cos(TWO_PI * omega * n + phi)
        # [[e, -1], [1, 0]] @ M
        t11 = e * m11 - m21
        t12 = e * m12 - m22
        m21, m22 = m11, m12
        m11, m12 = t11, t12
    return m11, m12, m21, m22


@njit(cache=True, nogil=True)
def schrodinger_product_qr(a, b, omega, phi, n_steps):
    """Product kept as Q(angle) @ [[r11, r12], [0, r22]].

    Returns (cos, sin, log r11, log r22, r12/r11). r22 is carried
    separately from r11 so determinant drift stays observable.
    """
    c, s = 1.0, 0.0
    l1, l2, t = 0.0, 0.0, 0.0
    for n in range(n_steps):
        e = a - b * math.cos(TWO_PI * omega * n + phi)
        # A @ Q with Q = [[c, -s], [s, c]]
        p = e * c - s
        r = -e * s - c
        u = c
        v = -s
        h = math.hypot(p, u)
        cc = p / h
        ss = u / h
        rp12 = cc * r + ss * v
        rp22 = -ss * r + cc * v
        t = t + (rp12 / h) * math.exp(l2 - l1)
        l1 += math.log(h)
        # rp22 = det(A Q) / h > 0
        l2 += math.log(rp22)
        c, s = cc, ss
    return c, s, l1, l2, t


@njit(cache=True, nogil=True)
def lyapunov_sum(a, b, omega, phi, n_steps, cadence):
    """Accumulated log-norm of the transfer product, rescaled every `cadence` steps."""
    m11, m12, m21, m22 = 1.0, 0.0, 0.0, 1.0
    acc = 0.0
    for n in range(n_steps):
        e = a - b * math.cos(TWO_PI * omega * n + phi)
        t11 = e * m11 - m21
        t12 = e * m12 - m22
        m21, m22 = m11, m12
        m11, m12 = t11, t12
        if (n + 1) % cadence == 0:
            nrm = math.sqrt(m11 * m11 + m12 * m12 + m21 * m21 + m22 * m22)
            acc += math.log(nrm)
            m11 /= nrm
            m12 /= nrm
            m21 /= nrm
            m22 /= nrm
    nrm = math.sqrt(m11 * m11 + m12 * m12 + m21 * m21 + m22 * m22)
    return acc + math.log(nrm)


@njit(cache=True, nogil=True)
def schrodinger_lift_sum(a, b, omega, phi, n_steps, t0):
    """Sum of lift increments for the Schrodinger cocycle.

    A(theta) = R(pi/2) @ [[1, 0], [-E, 1]]. The shear keeps the first
    coordinate, so its angle change lies in (-pi, pi) and is read off
    with atan2; the rotation contributes exactly pi/2.
    """
    x = math.cos(t0)
    y = math.sin(t0)
    total = 0.0
    for n in range(n_steps):
        e = a - b * math.cos(TWO_PI * omega * n + phi)
        total += math.atan2(-e * x * x, x * x + y * y - e * x * y) + HALF_PI
        nx = e * x - y
        ny = x
        h = math.hypot(nx, ny)
        x = nx / h
        y = ny / h
    return total


@njit(cache=True, nogil=True)
def _eval_matrix(coeffs, m_max, theta):
    """Real part of sum_m c_m exp(i m theta) for a (2M+1, 2, 2) coefficient array."""
    z = complex(math.cos(theta), math.sin(theta))
    zi = 1.0 / z
    a11 = coeffs[m_max, 0, 0].real
    a12 = coeffs[m_max, 0, 1].real
    a21 = coeffs[m_max, 1, 0].real
    a22 = coeffs[m_max, 1, 1].real
    zp = z
    zm = zi
    for m in range(1, m_max + 1):
        cp = coeffs[m_max + m]
        cm = coeffs[m_max - m]
        a11 += (cp[0, 0] * zp + cm[0, 0] * zm).real
        a12 += (cp[0, 1] * zp + cm[0, 1] * zm).real
        a21 += (cp[1, 0] * zp + cm[1, 0] * zm).real
        a22 += (cp[1, 1] * zp + cm[1, 1] * zm).real
        zp = zp * z
        zm = zm * zi
    return a11, a12, a21, a22


@njit(cache=True, nogil=True)
def torus_lift_sum(coeffs, m_max, alpha_grid, omega, theta0, n_steps, t0):
    """Sum of lift increments for a general cocycle given by Fourier coefficients.

    A = Q(alpha) @ U with U upper triangular, positive diagonal. The rotation
    angle alpha is taken on the continuous branch tabulated in `alpha_grid`
    (uniform grid over [0, 2*pi)); U preserves the open upper/lower half
    planes so its angle change is unambiguous.
    """
    k = alpha_grid.shape[0]
    x = math.cos(t0)
    y = math.sin(t0)
    total = 0.0
    theta = theta0
    step = TWO_PI * omega
    for n in range(n_steps):
        th = theta % TWO_PI
        a11, a12, a21, a22 = _eval_matrix(coeffs, m_max, th)
        alpha = math.atan2(a21, a11)
        j = int(round(th / TWO_PI * k)) % k
        ref = alpha_grid[j]
        d = alpha - ref
        d = d - TWO_PI * math.floor((d + math.pi) / TWO_PI)
        alpha_lift = ref + d
        h = math.hypot(a11, a21)
        ca = a11 / h
        sa = a21 / h
        u11 = h
        u12 = ca * a12 + sa * a22
        u22 = -sa * a12 + ca * a22
        ux = u11 * x + u12 * y
        uy = u22 * y
        total += math.atan2(x * uy - y * ux, x * ux + y * uy) + alpha_lift
        nx = a11 * x + a12 * y
        ny = a21 * x + a22 * y
        hn = math.hypot(nx, ny)
        x = nx / hn
        y = ny / hn
        theta = theta + step
    return total


@njit(cache=True, nogil=True)
def torus_product(coeffs, m_max, omega, theta0, n_steps, cadence):
    """Rescaled product A(theta_{n-1})...A(theta_0) for a Fourier cocycle.

    Returns (m11, m12, m21, m22, log_scale) with the true product equal to
    exp(log_scale) times the returned matrix.
    """
    m11, m12, m21, m22 = 1.0, 0.0, 0.0, 1.0
    acc = 0.0
    theta = theta0
    step = TWO_PI * omega
    for n in range(n_steps):
        a11, a12, a21, a22 = _eval_matrix(coeffs, m_max, theta % TWO_PI)
        t11 = a11 * m11 + a12 * m21
        t12 = a11 * m12 + a12 * m22
        t21 = a21 * m11 + a22 * m21
        t22 = a21 * m12 + a22 * m22
        m11, m12, m21, m22 = t11, t12, t21, t22
        if (n + 1) % cadence == 0:
            nrm = math.sqrt(m11 * m11 + m12 * m12 + m21 * m21 + m22 * m22)
            acc += math.log(nrm)
            m11 /= nrm
            m12 /= nrm
            m21 /= nrm
            m22 /= nrm
        theta = theta + step
    nrm = math.sqrt(m11 * m11 + m12 * m12 + m21 * m21 + m22 * m22)
    return m11 / nrm, m12 / nrm, m21 / nrm, m22 / nrm, acc + math.log(nrm)


@njit(cache=True, nogil=True)
def monodromy_trace(a, diag_period):
    """Trace of the one-period transfer product, as (scaled trace, log scale)."""
    m11, m12, m21, m22 = 1.0, 0.0, 0.0, 1.0
    acc = 0.0
    q = diag_period.shape[0]
    for n in range(q):
        e = a - diag_period[n]
        t11 = e * m11 - m21
        t12 = e * m12 - m22
        m21, m22 = m11, m12
        m11, m12 = t11, t12
        if (n + 1) % 32 == 0:
            nrm = max(abs(m11), abs(m12), abs(m21), abs(m22))
            if nrm > 1e30:
                acc += math.log(nrm)
                m11 /= nrm
                m12 /= nrm
                m21 /= nrm
                m22 /= nrm
    return m11 + m22, acc


@njit(cache=True, nogil=True)
def periodic_counting(a, diag_period, diag_dirichlet, q):
    """q times the integrated density of states of a q-periodic Jacobi operator.

    Dirichlet count c locates the band index; the discriminant gives the
    position inside the band. Exactly equal to an integer on closed gaps.
    """
    c = sturm_count(a, diag_dirichlet)
    tr, logs = monodromy_trace(a, diag_period)
    sign = 1.0 if (q - c) % 2 == 0 else -1.0
    if logs > 0.0:
        # |trace| astronomically large: inside a gap
        x = sign * tr
        f = 0.0 if x > 0.0 else 1.0
    else:
        x = sign * tr / 2.0
        if x >= 1.0:
            f = 0.0
        elif x <= -1.0:
            f = 1.0
        else:
            f = math.acos(x) / math.pi
    return c + f
