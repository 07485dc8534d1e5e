"""Independent reference computations used by the tests.

None of these share code paths with the package: they use mpmath
quadrature, brute-force enumeration over every interval index, direct
integration of the discrete-Gaussian mixture definition, and a
Hermite-free identity for Gaussian-correlated expectations.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np
from scipy import integrate
from scipy.stats import multivariate_normal

mpmath.mp.dps = 40


def mp_partial_moment(t, lo, hi):
    f = lambda x: x**t * mpmath.npdf(x)
    pts = sorted({mpmath.mpf(lo), mpmath.mpf(hi), mpmath.mpf(0) if lo < 0 < hi else mpmath.mpf(lo)})
    return float(mpmath.quad(f, pts))


def mp_cdf(x):
    return float(mpmath.ncdf(x))


def mp_hermite_integral(n, lo, hi):
    """``int_lo^hi h_n g`` with ``h_n = He_n / sqrt(n!)`` by mpmath quadrature."""
    scale = 1 / mpmath.sqrt(mpmath.factorial(n))
    f = lambda x: mpmath.hermite(n, x / mpmath.sqrt(2)) * 2 ** (-mpmath.mpf(n) / 2) * mpmath.npdf(x)
    grid = np.linspace(lo, hi, max(2, int((hi - lo) * 4) + 2)).tolist()
    return float(scale * mpmath.quad(f, grid))


def brute_counts(x, side, s, eps, m_range=400):
    """Count every index ``m`` in ``[-m_range, m_range]`` whose interval contains ``x``."""
    n = 0
    total_w = 0.0
    for m in range(-m_range, m_range + 1):
        k = m + 0.5
        if side == "plus":
            a, b = m * s, m * s + k * eps
        else:
            a, b = k * s, k * (s + eps)
        if min(a, b) <= x <= max(a, b):
            n += 1
            total_w += 1 / abs(k)
    return n, total_w


def mixture_window_mass(side, x, h, s, eps, coeff_scale):
    """Mass of ``[x-h, x+h]`` under the y-mixture of lattice Gaussians.

    Each lattice index contributes ``int g(atom(y)) 1{atom(y) in window} dy``
    over ``y`` in ``[0, eps]``; ``atom(y)`` is affine in ``y`` so the active
    ``y`` range is found exactly and integrated by adaptive quadrature.
    ``coeff_scale`` is the leading constant (``C`` or ``eta``).
    """
    total = 0.0
    span = int(math.ceil((abs(x) + 1) / s)) + 3
    for n in range(-span, span + 1):
        if side == "plus":
            a0, slope = n * s, n + 0.5  # atom n(s+y) + y/2
        else:
            a0, slope = (n + 0.5) * s, n + 0.5  # atom (n+1/2)(s+y)
        y1, y2 = sorted(((x - h - a0) / slope, (x + h - a0) / slope))
        y1, y2 = max(y1, 0.0), min(y2, eps)
        if y2 <= y1:
            continue
        val, _ = integrate.quad(lambda y: math.exp(-0.5 * (a0 + slope * y) ** 2) / math.sqrt(2 * math.pi),
                                y1, y2, epsabs=0, epsrel=1e-13)
        total += val
    return coeff_scale * (s / eps) * total


def correlated_expectation_chi(lo_a, hi_a, w_a, lo_b, hi_b, w_b, t, nodes=40):
    """``E[wA(X) wB(Y)] - 1`` for standard normals of correlation ``t``.

    ``wA``, ``wB`` are normalized density ratios given as piecewise-constant
    functions.  Uses ``d/drho E[f(X)f(Y)] = E[f'(X) g'(Y)]`` so the rate is
    a double sum over jump points of bivariate normal densities; the value at
    ``rho = 0`` is zero, and the rho-integral is done by Gauss-Legendre.
    """
    ja, da = _jumps(lo_a, hi_a, w_a)
    jb, db = _jumps(lo_b, hi_b, w_b)
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    rhos = 0.5 * t * (xg + 1)
    total = 0.0
    A, B = np.meshgrid(ja, jb, indexing="ij")
    D = np.outer(da, db)
    for rho, w in zip(rhos, wg):
        det = 1 - rho * rho
        q = (A * A - 2 * rho * A * B + B * B) / det
        dens = np.exp(-0.5 * q) / (2 * math.pi * math.sqrt(det))
        total += w * math.fsum((D * dens).ravel().tolist())
    return 0.5 * t * total


def _jumps(lo, hi, w):
    pts = {}
    for a, b, wt in zip(lo, hi, w):
        pts[a] = pts.get(a, 0.0) + wt
        pts[b] = pts.get(b, 0.0) - wt
    keys = np.array(sorted(pts))
    return keys, np.array([pts[k] for k in keys])


def rectangle_chi(lo_a, hi_a, w_a, lo_b, hi_b, w_b, t):
    """Same quantity as above summed over bivariate-normal rectangle masses (small inputs only)."""
    cov = [[1, t], [t, 1]]
    mvn = multivariate_normal(mean=[0, 0], cov=cov)
    total = 0.0
    for a1, a2, wa in zip(lo_a, hi_a, w_a):
        for b1, b2, wb in zip(lo_b, hi_b, w_b):
            p = mvn.cdf([a2, b2]) - mvn.cdf([a1, b2]) - mvn.cdf([a2, b1]) + mvn.cdf([a1, b1])
            total += wa * wb * p
    return total - 1
