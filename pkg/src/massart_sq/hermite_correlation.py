"""Hermite expansions of piecewise Gaussian measures.

A measure with density ``A(x)`` is written as ``sum_n a_n h_n(x) g(x)`` with
``h_n`` the orthonormal Hermite polynomials, so ``a_n = int h_n dA``.  Under
a rotation taking one hidden direction to another with cosine ``t``, the
Gaussian-smoothing operator scales the ``n``-th coefficient by ``t**n``; the
pairwise correlation of two hidden-direction distributions is therefore a
power series in ``t`` built from the two coefficient sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussian_core import N_MAX, gaussian_mass, normalized_hermite_integrals
from .massart_measures import PiecewiseGaussianMeasure, l1_norm

#: Envelope base for the near-matching parameter: ``nu_eff = max 4**s |a_s|``.
NU_ENVELOPE_BASE = 4.0
TAIL_TERMS = 8


@dataclass(frozen=True)
class HermiteExpansion:
    coeffs: np.ndarray  # a_0..a_N, unnormalized
    l1: float
    chi2: float  # closed-form chi-squared of the normalized measure

    @property
    def N(self) -> int:
        return len(self.coeffs) - 1

    @property
    def normalized(self) -> np.ndarray:
        return self.coeffs / self.l1

    def nu(self, k: int) -> float:
        """Largest normalized ``|a_s|`` for ``1 <= s <= k``."""
        k = min(k, self.N)
        if k < 1:
            return 0.0
        return float(np.max(np.abs(self.normalized[1 : k + 1])))

    def nu_envelope(self, k: int) -> float:
        k = min(k, self.N)
        if k < 1:
            return 0.0
        s = np.arange(1, k + 1)
        return float(np.max(NU_ENVELOPE_BASE**s * np.abs(self.normalized[1 : k + 1])))

    def series_tail_estimate(self) -> float:
        """Geometric extrapolation of ``sum (a_n/l1)^2`` beyond ``N`` from the last terms."""
        sq = self.normalized[1:] ** 2
        last = sq[-TAIL_TERMS:]
        if len(last) < 2 or last[0] <= 0:
            return float(last.sum()) if len(last) else 0.0
        ratio = (last[-1] / last[0]) ** (1.0 / (len(last) - 1)) if last[-1] > 0 else 0.0
        if ratio >= 1:
            return math.inf
        return float(last[-1] * ratio / (1 - ratio))


def hermite_coefficients(measure: PiecewiseGaussianMeasure, N: int = N_MAX, n_max: int = N_MAX) -> HermiteExpansion:
    if N < 0 or N > n_max:
        raise ValueError(f"expansion order {N} outside 0..{n_max}")
    ints = normalized_hermite_integrals(N, measure.lo, measure.hi)
    coeffs = np.array([math.fsum(row) for row in (measure.weight[None, :] * ints).tolist()])
    coeffs *= measure.coeff
    return HermiteExpansion(coeffs, l1_norm(measure), chi_squared(measure))


def chi_squared(measure: PiecewiseGaussianMeasure, method: str = "closed_form", N: int = N_MAX) -> float:
    """Chi-squared divergence of the normalized measure from the standard normal.

    ``closed_form`` uses ``int (c g W)^2 / g = c^2 sum W^2 * mass``;
    ``series`` sums ``(a_n/l1)^2`` for ``1 <= n <= N``.
    """
    l1 = l1_norm(measure)
    if method == "closed_form":
        terms = (measure.weight**2 * gaussian_mass(measure.lo, measure.hi)).tolist()
        return (measure.coeff / l1) ** 2 * math.fsum(terms) - 1.0
    if method == "series":
        ints = normalized_hermite_integrals(N, measure.lo, measure.hi)
        a = measure.coeff * np.array([math.fsum(row) for row in (measure.weight[None, :] * ints).tolist()])
        return math.fsum(((a[1:] / l1) ** 2).tolist())
    raise ValueError(f"unknown method {method!r}")


def pairwise_correlation(exp_a: HermiteExpansion, exp_b: HermiteExpansion, t: float) -> float:
    """``sum_{n>=1} (a_n/l1_a)(b_n/l1_b) t^n`` truncated at the shorter expansion."""
    if abs(t) > 1:
        raise ValueError("cosine must satisfy |t| <= 1")
    n = min(exp_a.N, exp_b.N)
    terms = exp_a.normalized[1 : n + 1] * exp_b.normalized[1 : n + 1] * t ** np.arange(1, n + 1)
    return math.fsum(terms.tolist())


def correlation_tail_bound(exp_a: HermiteExpansion, exp_b: HermiteExpansion, t: float) -> float:
    """Cauchy-Schwarz bound on the omitted terms ``n > N``."""
    n = min(exp_a.N, exp_b.N)
    return abs(t) ** (n + 1) * math.sqrt(max(exp_a.chi2, 0.0) * max(exp_b.chi2, 0.0))


@dataclass(frozen=True)
class CorrelationLemmaRow:
    t: float
    lhs: float
    rhs: float

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


@dataclass(frozen=True)
class CorrelationLemmaReport:
    k: int
    chi2: float
    nu: float
    nu_envelope: float
    rows: tuple

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows)


def correlation_lemma_check(measure_or_exp, k: int, t_grid=(0.1, 0.2, 0.3, 0.45)) -> CorrelationLemmaReport:
    """Check ``|corr(t)| <= |t|^(k+1) chi2 + nu_eff^2`` on ``t_grid``.

    ``nu_eff`` inflates the raw near-matching parameter by ``4**s``.  The
    left side includes the truncation tail bound so the check is rigorous.
    """
    if any(abs(t) > 0.45 for t in t_grid):
        raise ValueError("t grid must stay within |t| <= 0.45")
    exp = measure_or_exp
    if isinstance(measure_or_exp, PiecewiseGaussianMeasure):
        exp = hermite_coefficients(measure_or_exp)
    nu_eff = exp.nu_envelope(k)
    rows = []
    for t in t_grid:
        lhs = abs(pairwise_correlation(exp, exp, t)) + correlation_tail_bound(exp, exp, t)
        rhs = abs(t) ** (k + 1) * exp.chi2 + nu_eff**2
        rows.append(CorrelationLemmaRow(float(t), lhs, rhs))
    return CorrelationLemmaReport(k, exp.chi2, exp.nu(k), nu_eff, tuple(rows))
