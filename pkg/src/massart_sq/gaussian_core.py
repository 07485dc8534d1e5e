"""Standard-normal primitives.

Density, CDF, interval masses, partial moments ``int_lo^hi x^t g(x) dx`` and
probabilist's Hermite polynomials with their interval integrals.  All
functions are pure and broadcast over numpy arrays where sensible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

SQRT2 = math.sqrt(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)
LOG_SQRT2PI = 0.5 * math.log(2.0 * math.pi)

#: Stand-in for +/- infinity; the Gaussian tail beyond it is below 1e-300.
R_TRUNC = 40.0
T_MAX = 32
N_MAX = 64

# Pieces closer to the origin than sqrt(t) make the upward moment recurrence
# unstable; those are integrated with Gauss-Legendre panels of this width.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)
_GL_PANEL = 1.0


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError(f"interval endpoints must be finite, got {self}")
        if self.lo > self.hi:
            raise ValueError(f"interval has lo > hi: {self}")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x):
        return (np.asarray(x) >= self.lo) & (np.asarray(x) <= self.hi)


@dataclass(frozen=True)
class PartialMomentTable:
    """Values of ``int_lo^hi x^t g(x) dx`` for ``t = 0..len(values)-1``."""

    interval: Interval
    values: tuple

    @property
    def t_max(self) -> int:
        return len(self.values) - 1


def gaussian_log_pdf(x):
    x = np.asarray(x, dtype=float)
    return -0.5 * x * x - LOG_SQRT2PI


def gaussian_pdf(x):
    x = np.asarray(x, dtype=float)
    direct = np.exp(-0.5 * x * x) / SQRT2PI
    out = np.where(np.abs(x) > 30.0, np.exp(gaussian_log_pdf(x)), direct)
    return out if out.ndim else float(out)


def gaussian_cdf(x):
    x = np.asarray(x, dtype=float)
    out = 0.5 * special.erfc(-x / SQRT2)
    return out if out.ndim else float(out)


def gaussian_sf(x):
    return gaussian_cdf(-np.asarray(x, dtype=float))


def gaussian_mass(lo, hi):
    """``Phi(hi) - Phi(lo)`` evaluated on the side that avoids cancellation."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    right = gaussian_sf(lo) - gaussian_sf(hi)
    left = gaussian_cdf(hi) - gaussian_cdf(lo)
    out = np.where(lo >= 0.0, right, left)
    return out if out.ndim else float(out)


def gaussian_moment(t: int) -> float:
    """``E[G^t]``: ``(t-1)!!`` for even ``t``, zero for odd ``t``."""
    if t < 0:
        raise ValueError("moment order must be non-negative")
    if t % 2:
        return 0.0
    return float(math.prod(range(t - 1, 0, -2)))


def _moments_by_recurrence(lo, hi, t_max):
    out = np.empty(lo.shape + (t_max + 1,))
    glo = gaussian_pdf(lo)
    ghi = gaussian_pdf(hi)
    out[..., 0] = gaussian_mass(lo, hi)
    if t_max >= 1:
        out[..., 1] = glo - ghi
    plo = np.ones_like(lo)  # lo**(t-1)
    phi = np.ones_like(hi)
    for t in range(2, t_max + 1):
        plo = plo * lo
        phi = phi * hi
        out[..., t] = (t - 1) * out[..., t - 2] + plo * glo - phi * ghi
    return out


def _moments_by_quadrature(lo, hi, t_max):
    powers = np.arange(t_max + 1)
    out = np.zeros((lo.size, t_max + 1))
    for i, (a, b) in enumerate(zip(lo.ravel(), hi.ravel())):
        panels = max(1, math.ceil((b - a) / _GL_PANEL))
        edges = np.linspace(a, b, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        x = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
        w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel() * gaussian_pdf(x)
        out[i] = (x[:, None] ** powers[None, :] * w[:, None]).sum(axis=0)
    return out.reshape(lo.shape + (t_max + 1,))


def partial_moments(lo, hi, t_max: int = T_MAX):
    """Table of ``int_lo^hi x^t g(x) dx`` for ``t = 0..t_max``.

    The upward recurrence ``I_t = (t-1) I_{t-2} + lo^{t-1} g(lo) - hi^{t-1} g(hi)``
    is used wherever the interval stays at distance at least ``sqrt(t_max)``
    from the origin; closer intervals lose digits to cancellation there and
    are integrated by composite Gauss-Legendre instead.  Intervals that
    contain the origin are first reduced by symmetry.  The last axis of the
    result indexes ``t``.
    """
    lo, hi = np.broadcast_arrays(np.asarray(lo, float), np.asarray(hi, float))
    straddle = (lo < 0.0) & (hi > 0.0)
    if not np.any(straddle):
        return _one_sided_moments(lo, hi, t_max)
    # Split [lo, hi] into the symmetric core [-c, c] and a one-sided rest;
    # odd moments of the core vanish exactly, so they never cancel numerically.
    c = np.where(straddle, np.minimum(-lo, hi), 0.0)
    rest_lo = np.where(straddle & (hi > -lo), c, lo)
    rest_hi = np.where(straddle & (hi <= -lo), -c, hi)
    out = _one_sided_moments(rest_lo, rest_hi, t_max)
    core = _one_sided_moments(np.zeros_like(c), c, t_max)
    core[..., 1::2] = 0.0
    out += np.where(straddle[..., None], 2.0 * core, 0.0)
    return out


def _one_sided_moments(lo, hi, t_max):
    out = _moments_by_recurrence(lo, hi, t_max)
    dist = np.where((lo <= 0.0) & (hi >= 0.0), 0.0, np.minimum(np.abs(lo), np.abs(hi)))
    unstable = (dist * dist < t_max) & (hi > lo)
    if np.any(unstable):
        out[unstable] = _moments_by_quadrature(lo[unstable], hi[unstable], t_max)
    return out


def partial_moment(t: int, iv: Interval, t_max: int = T_MAX) -> float:
    if t < 0 or t > t_max:
        raise ValueError(f"moment order {t} outside 0..{t_max}")
    return float(partial_moments(iv.lo, iv.hi, t)[..., t])


def partial_moment_table(iv: Interval, t_max: int = T_MAX) -> PartialMomentTable:
    return PartialMomentTable(iv, tuple(float(v) for v in partial_moments(iv.lo, iv.hi, t_max)))


def _check_order(n, n_max):
    if n < 0 or n > n_max:
        raise ValueError(f"Hermite order {n} outside 0..{n_max}")


def hermite_He(n: int, x, n_max: int = N_MAX):
    """Probabilist's Hermite polynomial by ``He_{n+1} = x He_n - n He_{n-1}``."""
    _check_order(n, n_max)
    x = np.asarray(x, dtype=float)
    prev, cur = np.zeros_like(x), np.ones_like(x)
    for k in range(n):
        prev, cur = cur, x * cur - k * prev
    return cur if cur.ndim else float(cur)


def hermite_functions(n_max: int, x):
    """``h_n(x) g(x)`` for ``n = 0..n_max`` with ``h_n = He_n / sqrt(n!)``.

    Uses the normalized recurrence so no factorials are formed.  The
    leading axis indexes ``n``.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = gaussian_pdf(x)
    if n_max >= 1:
        out[1] = x * out[0]
    for n in range(1, n_max):
        out[n + 1] = (x * out[n] - math.sqrt(n) * out[n - 1]) / math.sqrt(n + 1)
    return out


def hermite_h(n: int, x, n_max: int = N_MAX):
    _check_order(n, n_max)
    x = np.asarray(x, dtype=float)
    prev, cur = np.zeros_like(x), np.ones_like(x)
    for k in range(n):
        prev, cur = cur, (x * cur - math.sqrt(k) * prev) / math.sqrt(k + 1)
    return cur if cur.ndim else float(cur)


def hermite_interval_integral(n: int, iv: Interval, n_max: int = N_MAX) -> float:
    """``int_lo^hi He_n(x) g(x) dx`` via ``(He_{n-1} g)' = -He_n g``."""
    _check_order(n, n_max)
    if n == 0:
        return float(gaussian_mass(iv.lo, iv.hi))
    return float(
        hermite_He(n - 1, iv.lo, n_max) * gaussian_pdf(iv.lo)
        - hermite_He(n - 1, iv.hi, n_max) * gaussian_pdf(iv.hi)
    )


def normalized_hermite_integrals(n_max: int, lo, hi):
    """``int_lo^hi h_n(x) g(x) dx`` for ``n = 0..n_max``; leading axis is ``n``."""
    lo, hi = np.broadcast_arrays(np.asarray(lo, float), np.asarray(hi, float))
    psi_lo = hermite_functions(max(n_max - 1, 0), lo)
    psi_hi = hermite_functions(max(n_max - 1, 0), hi)
    out = np.empty((n_max + 1,) + lo.shape)
    out[0] = gaussian_mass(lo, hi)
    for n in range(1, n_max + 1):
        out[n] = (psi_lo[n - 1] - psi_hi[n - 1]) / math.sqrt(n)
    return out
