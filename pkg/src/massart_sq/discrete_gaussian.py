"""Lattice Gaussians with spacing ``sigma`` and offset ``theta``.

The measure puts mass ``sigma * g(n*sigma + theta)`` on every lattice point
``n*sigma + theta``.  Its low-order moments agree with those of the standard
normal up to an error that vanishes very quickly as ``sigma`` shrinks; the
helpers here measure that gap directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussian_core import R_TRUNC, T_MAX, gaussian_moment


@dataclass(frozen=True)
class DiscreteGaussianSpec:
    sigma: float
    theta: float = 0.0
    r_trunc: float = R_TRUNC

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def n_range(self) -> tuple[int, int]:
        """Inclusive range of lattice indices with ``|n*sigma + theta| <= r_trunc``."""
        lo = math.ceil((-self.r_trunc - self.theta) / self.sigma)
        hi = math.floor((self.r_trunc - self.theta) / self.sigma)
        return lo, hi

    @property
    def n_cut(self) -> int:
        lo, hi = self.n_range
        return hi - lo + 1

    def truncation_bound(self) -> float:
        """Upper bound on the mass of the dropped atoms."""
        g = math.exp(-0.5 * self.r_trunc**2) / math.sqrt(2 * math.pi)
        return 2.0 * g * (1.0 + 1.0 / self.sigma)


def atoms(spec: DiscreteGaussianSpec) -> tuple[np.ndarray, np.ndarray]:
    """Points (strictly increasing) and their masses.

    Atoms whose mass underflows to zero in double precision (``|point|``
    beyond about 38.6) are dropped so every returned mass is positive.
    """
    lo, hi = spec.n_range
    points = np.arange(lo, hi + 1) * spec.sigma + spec.theta
    masses = spec.sigma * np.exp(-0.5 * points * points) / math.sqrt(2 * math.pi)
    keep = masses > 0
    return points[keep], masses[keep]


def moment(spec: DiscreteGaussianSpec, t: int, t_max: int = T_MAX) -> float:
    """``sum mass * point**t``.

    Accumulated in extended precision: at ``t >= 8`` the terms span many
    orders of magnitude and a double-precision sum leaves noise of a few
    ulps, enough to blur gap comparisons near ``1e-14``.
    """
    if t < 0 or t > t_max:
        raise ValueError(f"moment order {t} outside 0..{t_max}")
    lo, hi = spec.n_range
    n = np.arange(lo, hi + 1, dtype=np.longdouble)
    sigma = np.longdouble(spec.sigma)
    pts = n * sigma + np.longdouble(spec.theta)
    two_pi = np.longdouble(2) * np.pi
    mass = sigma * np.exp(-pts * pts / 2) / np.sqrt(two_pi)
    return float(np.sum(mass * pts**t))


def moment_gap(spec: DiscreteGaussianSpec, t: int) -> float:
    return abs(moment(spec, t) - gaussian_moment(t))


@dataclass(frozen=True)
class GapProfile:
    sigmas: tuple
    theta_fracs: tuple
    t_max: int
    gaps: np.ndarray  # shape (len(sigmas), len(theta_fracs), t_max + 1)

    def worst_over_theta(self) -> np.ndarray:
        """Largest gap over offsets, shape ``(len(sigmas), t_max + 1)``."""
        return self.gaps.max(axis=1)

    def monotone_in_sigma(self, noise: float = 1e-14) -> np.ndarray:
        """Per ``t``: does the worst gap shrink (within ``noise``) as sigma drops?"""
        order = np.argsort(self.sigmas)[::-1]
        worst = self.worst_over_theta()[order]
        return np.all(np.diff(worst, axis=0) <= noise, axis=0)


def moment_gap_profile(sigma_list, theta_fracs=(0.0, 1 / 3, 0.5), t_max: int = 8) -> GapProfile:
    """Gap table over a sigma grid with offsets given as fractions of sigma."""
    sigmas = tuple(float(s) for s in sigma_list)
    if any(not 0 < s <= 2 for s in sigmas):
        raise ValueError("sigma values must lie in (0, 2]")
    gaps = np.empty((len(sigmas), len(theta_fracs), t_max + 1))
    for i, s in enumerate(sigmas):
        for j, frac in enumerate(theta_fracs):
            spec = DiscreteGaussianSpec(s, frac * s)
            for t in range(t_max + 1):
                gaps[i, j, t] = moment_gap(spec, t)
    return GapProfile(sigmas, tuple(theta_fracs), t_max, gaps)


def gap_envelope(sigma: float, t: int) -> float:
    """Explicit test envelope ``t! (3 sigma)^t exp(-1/(8 sigma^2))``."""
    return math.factorial(t) * (3 * sigma) ** t * math.exp(-1.0 / (8 * sigma * sigma))
