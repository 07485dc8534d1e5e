"""Statistical-query simulation and experiment arithmetic.

Includes a tolerance-``tau`` expectation oracle with two answer policies,
the error floor and query-count arithmetic, the parameter planner, a
moment-statistic battery for testing label/feature dependence, and
hypothesis evaluation on labeled datasets.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .gaussian_core import R_TRUNC, gaussian_moment, gaussian_pdf
from .hidden_direction import (
    HiddenDirectionInstance,
    LabeledDataset,
    NullDistribution,
    draw,
    random_unit_vector,
    stream_rng,
)
from .massart_measures import PiecewiseGaussianMeasure, l1_norm
from .veronese_ptf import MAX_BASIS_DIMENSION, MAX_DEGREE_CAP, MonomialBasis, embed

EXACT_MC = "exact_mc"
ADVERSARIAL = "adversarial_toward_null"
SPOT_CHECK_SAMPLES = 256
DETECTION_Z = 5.0

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


@dataclass(frozen=True)
class SQOracleConfig:
    tau: float
    policy: str = EXACT_MC
    seed: int = 0
    n_samples: int | None = None

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.policy not in (EXACT_MC, ADVERSARIAL):
            raise ValueError(f"unknown policy {self.policy!r}")

    def mc_size(self) -> int:
        """Samples making four Monte-Carlo standard errors of a [-1, 1] query at most tau."""
        return self.n_samples or math.ceil((4.0 / self.tau) ** 2)


@dataclass(frozen=True)
class LatentQuery:
    """Query known to depend on a sample only through ``(v.x, y)``.

    ``fn(t, y)`` receives arrays.  For the null distribution ``t`` is a
    standard normal coordinate, so the truth reduces to 1-D integrals.
    """

    fn: object

    def __call__(self, x, y, v=None):
        if v is None:
            v = np.eye(x.shape[1])[0]
        return self.fn(x @ v, y)


def _check_range(f, sample: LabeledDataset, v):
    vals = np.asarray(_evaluate(f, sample, v), dtype=float)
    if np.any(~np.isfinite(vals)) or np.any(np.abs(vals) > 1):
        raise ValueError("query values must lie in [-1, 1]")


def _evaluate(f, data: LabeledDataset, v):
    if isinstance(f, LatentQuery):
        return f(data.x, data.y, v)
    return f(data.x, data.y)


def _gl_piece_expectation(fn, lo, hi, weight, coeff, l1, y):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    w = (half[:, None] * _GL_WEIGHTS[None, :] * (coeff * weight)[:, None]).ravel()
    vals = np.asarray(fn(x, np.full(x.shape, y)), dtype=float)
    return math.fsum((w * gaussian_pdf(x) * vals).tolist()) / l1


def _measure_expectation(fn, measure: PiecewiseGaussianMeasure, y: int) -> float:
    return _gl_piece_expectation(fn, measure.lo, measure.hi, measure.weight, measure.coeff, l1_norm(measure), y)


def _gaussian_expectation(fn, y: int) -> float:
    edges = np.linspace(-R_TRUNC, R_TRUNC, 801)
    lo, hi = edges[:-1], edges[1:]
    return _gl_piece_expectation(fn, lo, hi, np.ones_like(lo), 1.0, 1.0, y)


def latent_truth(q: LatentQuery, dist) -> float:
    """Exact expectation of a latent query by piecewise Gauss-Legendre quadrature."""
    p = dist.p
    if isinstance(dist, NullDistribution):
        return p * _gaussian_expectation(q.fn, 1) + (1 - p) * _gaussian_expectation(q.fn, -1)
    return p * _measure_expectation(q.fn, dist.plus, 1) + (1 - p) * _measure_expectation(q.fn, dist.minus, -1)


def _null_of(dist) -> NullDistribution:
    if isinstance(dist, NullDistribution):
        return dist
    return NullDistribution(dist.m, dist.p)


def _mc_mean(f, dist, n, rng, v):
    total = []
    chunk = 200_000
    for start in range(0, n, chunk):
        data = draw(dist, min(chunk, n - start), rng)
        total.append(float(np.sum(_evaluate(f, data, v))))
    return math.fsum(total) / n


def stat_query(f, dist, cfg: SQOracleConfig, query_index: int = 0) -> float:
    """Answer ``E f(x, y)`` within ``cfg.tau`` under the configured policy.

    ``exact_mc`` returns a fresh Monte-Carlo mean.  ``adversarial_toward_null``
    returns the null expectation whenever it lies within tau of the truth and
    otherwise the band edge nearest the null.  Truths of latent queries are
    computed by quadrature; other queries fall back to Monte Carlo.
    """
    rng = stream_rng(cfg.seed, query_index)
    v = getattr(dist, "v", None)
    spot = draw(dist, SPOT_CHECK_SAMPLES, stream_rng(cfg.seed, 10**9 + query_index))
    _check_range(f, spot, v)
    n = cfg.mc_size()
    if cfg.policy == EXACT_MC:
        return _mc_mean(f, dist, n, rng, v)

    null = _null_of(dist)
    if isinstance(f, LatentQuery):
        truth = latent_truth(f, dist)
        base = latent_truth(f, null)
    else:
        truth = _mc_mean(f, dist, n, rng, v)
        base = _mc_mean(f, null, n, stream_rng(cfg.seed + 1, query_index), None)
    if abs(truth - base) <= cfg.tau:
        return base
    return truth - math.copysign(cfg.tau, truth - base)


def error_floor(p: float, tau: float) -> float:
    """``min(p, 1 - p) - 4 sqrt(tau)``, floored at zero."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    if tau < 0:
        raise ValueError("tau must be non-negative")
    return max(0.0, min(p, 1 - p) - 4 * math.sqrt(tau))


def query_budget(s_dim: int, gamma: float, gamma_prime: float, beta: float) -> float:
    """Lower bound on queries: ``s_dim * gamma_prime / (beta - gamma)``."""
    if not beta > gamma:
        raise ValueError("beta must exceed gamma")
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    return s_dim * gamma_prime / (beta - gamma)


def generic_bound_tau(chi_a: float, chi_b: float, k: int, nu: float) -> float:
    """Tolerance ``nu^2 + 2^-k (chi_a + chi_b)`` below which the test is hard."""
    if min(chi_a, chi_b, nu) < 0 or k < 0:
        raise ValueError("inputs must be non-negative")
    return nu * nu + 2.0**-k * (chi_a + chi_b)


@dataclass(frozen=True)
class PlannerConstants:
    C_plan: float = 1.0
    c_k: float = 0.25
    eta: float = 0.3
    ratio_floor: float = 20.0


@dataclass(frozen=True)
class PlannedParams:
    OPT_target: float
    tau: float
    M: int
    m: int
    d: int
    k: int
    s: float
    eps: float
    nu_estimate: float
    p: float
    constants: PlannerConstants = field(default_factory=PlannerConstants)
    warnings: tuple = ()

    @property
    def feasible(self) -> bool:
        return not self.warnings


class InfeasibleParameters(ValueError):
    pass


def plan_parameters(opt_target: float, tau_target: float, constants: PlannerConstants = PlannerConstants()) -> PlannedParams:
    """Derive ``(m, d, s, eps, k, M)`` from a target error and tolerance.

    Desk-scale caps and the s/eps floor produce warnings rather than errors;
    only a derivation leaving ``0 < eps < s < 1`` is rejected.
    """
    if not 0 < opt_target <= 0.01:
        raise ValueError("OPT target must lie in (0, 0.01]")
    if not 0 < tau_target < 0.1:
        raise ValueError("tau target must lie in (0, 0.1)")
    C = constants.C_plan
    log_opt = math.log(1 / opt_target)
    log_tau = math.log(1 / tau_target)
    m = math.ceil(C * log_tau)
    d = math.ceil(C * math.sqrt(log_opt * log_tau * math.log(log_tau)))
    s = C**2 * math.sqrt(log_opt) / d
    eps = C**3 * math.sqrt(log_opt) / d**2
    if not 0 < eps < s < 1:
        raise InfeasibleParameters(f"derived s={s:.4g}, eps={eps:.4g} violate 0 < eps < s < 1")
    k = math.floor(constants.c_k * math.log(1 / s) / s**2)
    M = math.comb(2 * d + m, m)
    notes = []
    if M > MAX_BASIS_DIMENSION:
        notes.append(f"M = {M} exceeds the desk cap {MAX_BASIS_DIMENSION}")
    if 2 * d > MAX_DEGREE_CAP:
        notes.append(f"2d = {2 * d} exceeds the desk cap {MAX_DEGREE_CAP}")
    if s / eps < constants.ratio_floor:
        notes.append(f"s/eps = {s / eps:.4g} is below the floor {constants.ratio_floor}")
    if notes:
        notes.append("supply s, eps, eta, m, d directly for a desk-scale run")
        warnings.warn("; ".join(notes), stacklevel=2)
    return PlannedParams(
        OPT_target=opt_target, tau=tau_target, M=M, m=m, d=d, k=k, s=s, eps=eps,
        nu_estimate=math.exp(-1.0 / (8 * s * s)), p=1 / (1 + constants.eta),
        constants=constants, warnings=tuple(notes),
    )


@dataclass(frozen=True)
class BatteryReport:
    n: int
    degree_cap: int
    max_abs_z: float
    argmax: str
    n_statistics: int
    probe_z: dict
    monomial_stats: np.ndarray = field(repr=False, default=None)

    @property
    def detects(self) -> bool:
        return self.max_abs_z > DETECTION_Z

    @property
    def probe_detects(self) -> bool:
        return any(abs(z) > DETECTION_Z for z in self.probe_z.values())


def _zscores(features, y):
    """z-scores of ``E[(y - mean y) f]`` for each feature column."""
    yc = y - y.mean()
    prods = features * yc[:, None]
    mean = prods.mean(axis=0)
    sd = prods.std(axis=0, ddof=1)
    n = len(y)
    return np.divide(mean * math.sqrt(n), sd, out=np.zeros_like(mean), where=sd > 0)


def moment_test_battery(data: LabeledDataset, degree_cap: int, n_directions: int = 8, seed: int = 0,
                        probe_direction=None, probe_degrees=()) -> BatteryReport:
    """Label-correlation z-scores for monomials and random-direction Hermite statistics.

    Every monomial of degree ``1..degree_cap`` and ``h_n(u.x)`` for random unit
    ``u`` and ``n <= degree_cap`` is tested.  ``probe_direction`` adds
    ``h_n(v.x)`` statistics at ``probe_degrees``, reported separately.
    """
    x = np.asarray(data.x, dtype=float)
    y = np.asarray(data.y, dtype=float)
    m = x.shape[1]
    basis = MonomialBasis(m, degree_cap)
    labels = []
    zs = []
    chunk = 64
    if basis.M > 1:
        rows = basis.index_tuples[1:]
        feats = embed(x, basis)[:, 1:]
        for start in range(0, feats.shape[1], chunk):
            zs.append(_zscores(feats[:, start : start + chunk], y))
        labels.extend(f"x^{r}" for r in rows)
    rng = stream_rng(seed, 7)
    for j in range(n_directions):
        u = random_unit_vector(m, rng)
        herm = _hermite_h_table(degree_cap, x @ u)
        zs.append(_zscores(herm[1:].T, y))
        labels.extend(f"h{n}(u{j}.x)" for n in range(1, degree_cap + 1))
    z = np.concatenate(zs) if zs else np.zeros(0)
    probe = {}
    if probe_direction is not None and len(probe_degrees):
        t = x @ np.asarray(probe_direction, dtype=float)
        top = max(probe_degrees)
        herm = _hermite_h_table(top, t)
        for n in probe_degrees:
            probe[int(n)] = float(_zscores(herm[n][:, None], y)[0])
    i = int(np.argmax(np.abs(z))) if len(z) else 0
    return BatteryReport(
        n=len(y), degree_cap=degree_cap, max_abs_z=float(np.abs(z)[i]) if len(z) else 0.0,
        argmax=labels[i] if labels else "", n_statistics=len(z), probe_z=probe,
        monomial_stats=z,
    )


def _hermite_h_table(n_max, t):
    out = np.empty((n_max + 1,) + t.shape)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = t
    for n in range(1, n_max):
        out[n + 1] = (t * out[n] - math.sqrt(n) * out[n - 1]) / math.sqrt(n + 1)
    return out


def predicted_probe_z(inst: HiddenDirectionInstance, n: int, n_samples: int, a_plus, a_minus) -> float:
    """Expected z of the ``h_n(v.x)`` label-correlation statistic.

    ``a_plus`` and ``a_minus`` are normalized Hermite coefficient arrays.  The
    centered statistic has mean ``2 p (1-p) (a+_n - a-_n)`` and, to leading
    order, standard deviation ``2 sqrt(p(1-p))`` per sample.
    """
    p = inst.p
    mean = 2 * p * (1 - p) * (a_plus[n] - a_minus[n])
    sd = 2 * math.sqrt(p * (1 - p))
    return mean * math.sqrt(n_samples) / sd


def evaluate_hypothesis(h, data: LabeledDataset) -> float:
    """Empirical misclassification rate of ``h: x -> {+1, -1}``."""
    pred = np.asarray(h(data.x))
    return float(np.mean(pred != data.y))


def constant_hypothesis(label: int):
    return lambda x: np.full(len(x), label)


def battery_hypothesis(train: LabeledDataset, degree_cap: int):
    """Sign of the label-weighted monomial fit learned from ``train``.

    Scores are ``mean(y) + sum_alpha c_alpha (x^alpha - E_G x^alpha)`` with
    ``c_alpha`` the empirical label correlation divided by the Gaussian
    second moment of the monomial.  It uses only statistics of degree at
    most ``degree_cap``, as a low-degree SQ learner would.
    """
    m = train.x.shape[1]
    basis = MonomialBasis(m, degree_cap)
    ex = basis.exponents[1:]
    g_mean = np.array([math.prod(gaussian_moment(int(e)) for e in row) for row in ex])
    g_sq = np.array([math.prod(gaussian_moment(2 * int(e)) for e in row) for row in ex])
    feats = embed(train.x, basis)[:, 1:] - g_mean
    y = train.y.astype(float)
    ybar = y.mean()
    coef = ((y - ybar)[:, None] * feats).mean(axis=0) / g_sq

    def h(x):
        f = embed(np.atleast_2d(x), basis)[:, 1:] - g_mean
        return np.where(ybar + f @ coef < 0, -1, 1)

    return h
