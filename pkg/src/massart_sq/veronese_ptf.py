"""Veronese lift and the target threshold function over lifted features.

The target labels a point negative exactly when its projection on the
hidden direction falls in ``J``.  Because ``J`` is a union of at most ``d``
intervals, that rule is the sign of a univariate polynomial of degree at
most ``2d`` in ``v.x``; expanding the polynomial in monomials of ``x`` turns
it into a linear threshold over all monomials of degree ``<= 2d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations_with_replacement

import numpy as np

from .hidden_direction import HiddenDirectionInstance
from .massart_measures import IntervalFamily, MeasurePair, mass_on, max_flip, opt_error

MAX_BASIS_DIMENSION = 10**7
MAX_DEGREE_CAP = 20


def basis_dimension(m: int, d: int) -> int:
    """Number of monomials in ``m`` variables of degree at most ``2d``."""
    if m < 0 or d < 0:
        raise ValueError("m and d must be non-negative")
    out = math.comb(2 * d + m, m)
    if out > MAX_BASIS_DIMENSION:
        raise OverflowError(f"basis dimension {out} exceeds {MAX_BASIS_DIMENSION}")
    return out


@dataclass(frozen=True)
class MonomialBasis:
    """Graded-lexicographic monomials: by degree, then by sorted variable index tuple."""

    m: int
    degree_cap: int

    @cached_property
    def index_tuples(self) -> tuple:
        out = []
        for deg in range(self.degree_cap + 1):
            out.extend(combinations_with_replacement(range(self.m), deg))
        return tuple(out)

    @cached_property
    def exponents(self) -> np.ndarray:
        """Multi-indices, shape ``(M, m)``."""
        ex = np.zeros((len(self.index_tuples), self.m), dtype=np.int64)
        for row, idx in enumerate(self.index_tuples):
            for i in idx:
                ex[row, i] += 1
        return ex

    @cached_property
    def _parents(self):
        pos = {idx: row for row, idx in enumerate(self.index_tuples)}
        parent = np.array([pos[idx[:-1]] if idx else -1 for idx in self.index_tuples])
        last = np.array([idx[-1] if idx else -1 for idx in self.index_tuples])
        return parent, last

    @property
    def M(self) -> int:
        return len(self.index_tuples)

    def degrees(self) -> np.ndarray:
        return self.exponents.sum(axis=1)

    def descriptor(self) -> dict:
        return {"m": self.m, "degree_cap": self.degree_cap, "order": "graded_lex", "M": self.M}


def embed(x, basis: MonomialBasis) -> np.ndarray:
    """All monomials of ``x`` (shape ``(m,)`` or ``(n, m)``) in basis order."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xs = np.atleast_2d(x)
    if xs.shape[1] != basis.m:
        raise ValueError(f"expected {basis.m} coordinates, got {xs.shape[1]}")
    parent, last = basis._parents
    out = np.empty((xs.shape[0], basis.M))
    out[:, 0] = 1.0
    for col in range(1, basis.M):
        out[:, col] = out[:, parent[col]] * xs[:, last[col]]
    return out[0] if single else out


def poly_from_roots(roots) -> np.ndarray:
    """Monic polynomial coefficients (ascending powers) with the given roots.

    Factors are multiplied in order of increasing magnitude to limit
    cancellation among the intermediate coefficients.
    """
    coeffs = np.array([1.0])
    for r in sorted(roots, key=abs):
        nxt = np.zeros(len(coeffs) + 1)
        nxt[1:] += coeffs
        nxt[:-1] -= r * coeffs
        coeffs = nxt
    return coeffs


def multinomial(exponent) -> int:
    out = math.factorial(int(sum(exponent)))
    for e in exponent:
        out //= math.factorial(int(e))
    return out


@dataclass(frozen=True)
class VeroneseTarget:
    basis: MonomialBasis
    v: np.ndarray
    J: IntervalFamily
    poly_coeffs: np.ndarray  # ascending powers of v.x

    @cached_property
    def ltf_weights(self) -> np.ndarray:
        """Weights ``w`` with ``<w, embed(x)> = poly(v.x)``."""
        ex = self.basis.exponents
        deg = ex.sum(axis=1)
        coeff = np.zeros(self.basis.M)
        live = deg < len(self.poly_coeffs)
        vpow = np.prod(self.v[None, :] ** ex, axis=1)
        multi = np.array([float(multinomial(e)) for e in ex])
        coeff[live] = self.poly_coeffs[deg[live]] * multi[live] * vpow[live]
        return coeff

    def poly(self, t):
        return np.polynomial.polynomial.polyval(np.asarray(t, dtype=float), self.poly_coeffs)

    def label_by_poly(self, t):
        """Sign of the polynomial from its factored form.

        The monic product over the ``J`` endpoints is negative exactly when
        an odd number of endpoints lie strictly right of ``t``.  Counting
        them gives the exact sign at any degree, where the expanded
        coefficients lose it beyond about degree 30.
        """
        t = np.asarray(t, dtype=float)
        ends = self.J.endpoints()
        right = len(ends) - np.searchsorted(ends, t, side="right")
        on_root = np.isin(t, ends)
        return np.where((right % 2 == 1) & ~on_root, -1, 1)

    def label_by_membership(self, t):
        return np.where(self.J.contains(t), -1, 1)

    def scores(self, x, chunk: int = 1024) -> np.ndarray:
        """``<ltf_weights, embed(x)>`` for a batch, embedding in chunks to bound memory."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        w = self.ltf_weights
        out = np.empty(len(x))
        for start in range(0, len(x), chunk):
            out[start : start + chunk] = embed(x[start : start + chunk], self.basis) @ w
        return out

    def predict(self, x, chunk: int = 1024) -> np.ndarray:
        return np.where(self.scores(x, chunk) < 0, -1, 1)

    def predict_by_membership(self, x) -> np.ndarray:
        return self.label_by_membership(np.atleast_2d(x) @ self.v)


def build_target(v, J: IntervalFamily, basis: MonomialBasis) -> VeroneseTarget:
    """Polynomial with a simple root at each endpoint of ``J``, positive off ``J``.

    ``J`` has an even number of endpoints, so the monic product is already
    positive right of the largest one and negative exactly inside ``J``.
    """
    v = np.asarray(v, dtype=float)
    if len(v) != basis.m:
        raise ValueError("direction dimension does not match the basis")
    ends = J.endpoints()
    if len(ends) > basis.degree_cap:
        raise ValueError(
            f"J has {len(ends)} endpoints but the degree cap is {basis.degree_cap}; increase d"
        )
    return VeroneseTarget(basis, v, J, poly_from_roots(ends))


@dataclass(frozen=True)
class MassartLTFReport:
    opt_error: float
    opt_error_formula: float
    max_flip: float
    eta: float
    zeta_target: float
    agreement: float

    @property
    def ok(self) -> bool:
        return self.max_flip <= self.eta and self.opt_error <= self.zeta_target and self.agreement == 1.0


def verify_massart_ltf(pair: MeasurePair, inst: HiddenDirectionInstance, target: VeroneseTarget,
                       x_samples, zeta_target: float | None = None) -> MassartLTFReport:
    """Exact error of the target, worst pointwise flip rate, and PTF/membership agreement.

    ``x_samples`` are points in the unlifted space; the lifted-score sign is
    compared against interval membership of their projections.
    """
    eta = pair.params.eta
    if zeta_target is None:
        zeta_target = eta / 10
    x = np.atleast_2d(np.asarray(x_samples, dtype=float))
    agree = float(np.mean(target.predict(x) == target.predict_by_membership(x)))
    formula = (1 - inst.p) * mass_on(pair.minus, pair.J_complement) / pair.l1_minus
    return MassartLTFReport(opt_error(pair), formula, max_flip(pair), eta, zeta_target, agree)

