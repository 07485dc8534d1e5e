"""End-to-end experiment drivers shared by the CLI and the demos."""

from __future__ import annotations

import math

import numpy as np

from .hermite_correlation import chi_squared, correlation_lemma_check, hermite_coefficients
from .hidden_direction import HiddenDirectionInstance, random_unit_vector, sample_labeled, stream_rng
from .massart_measures import MeasurePair, opt_error
from .sq_harness import (
    battery_hypothesis,
    constant_hypothesis,
    error_floor,
    evaluate_hypothesis,
    generic_bound_tau,
)
from .veronese_ptf import MAX_DEGREE_CAP, MonomialBasis, build_target, verify_massart_ltf

DIRECTION_STREAM = 0
SAMPLE_STREAM = 1
CHECK_STREAM = 2


def default_k(s: float, c_k: float = 0.25) -> int:
    """Moment-matching degree ``floor(c_k log(1/s) / s^2)``."""
    return math.floor(c_k * math.log(1 / s) / s**2)


def hidden_direction(m: int, seed: int) -> np.ndarray:
    return random_unit_vector(m, stream_rng(seed, DIRECTION_STREAM))


def hermite_summary(pair: MeasurePair, k: int, t_grid=(0.1, 0.2, 0.3, 0.45)) -> dict:
    out = {}
    for side, meas in (("plus", pair.plus), ("minus", pair.minus)):
        exp = hermite_coefficients(meas)
        lemma = correlation_lemma_check(exp, k, t_grid)
        out[side] = {
            "chi2_closed_form": exp.chi2,
            "chi2_series": chi_squared(meas, "series"),
            "series_tail_estimate": exp.series_tail_estimate(),
            "nu": exp.nu(k),
            "nu_envelope": lemma.nu_envelope,
            "correlation_lemma_ok": lemma.ok,
            "correlation_lemma": [{"t": r.t, "lhs": r.lhs, "rhs": r.rhs} for r in lemma.rows],
        }
    out["k"] = k
    return out


def measured_tau(pair: MeasurePair, k: int) -> float:
    ea = hermite_coefficients(pair.plus)
    eb = hermite_coefficients(pair.minus)
    return generic_bound_tau(ea.chi2, eb.chi2, k, max(ea.nu(k), eb.nu(k)))


def floor_experiment(pair: MeasurePair, v, n: int, seed: int, k: int | None = None,
                     battery_degree: int | None = None) -> dict:
    """Errors of constant, low-degree and target hypotheses on one sample.

    The low-degree hypothesis is fitted on the first half of the sample and
    scored on the second.
    """
    if k is None:
        k = default_k(pair.params.s)
    deg = k if battery_degree is None else battery_degree
    inst = HiddenDirectionInstance.from_pair(pair, v)
    data = sample_labeled(inst, n, stream_rng(seed, SAMPLE_STREAM))
    train, test = data.split()
    const = {lab: evaluate_hypothesis(constant_hypothesis(lab), data) for lab in (1, -1)}
    if deg >= 1:
        battery_err = evaluate_hypothesis(battery_hypothesis(train, deg), test)
    else:
        battery_err = min(const.values())
    J = pair.J
    target_err = evaluate_hypothesis(lambda x: np.where(J.contains(x @ inst.v), -1, 1), data)
    tau = measured_tau(pair, k)
    p = inst.p
    return {
        "n": n,
        "k": k,
        "battery_degree": deg,
        "p": p,
        "min_p": min(p, 1 - p),
        "constant_error": min(const.values()),
        "constant_error_plus": const[1],
        "constant_error_minus": const[-1],
        "battery_error": battery_err,
        "target_error": target_err,
        "opt_error": opt_error(pair),
        "tau_measured": tau,
        "error_floor": error_floor(p, tau),
    }


class LiftRefused(ValueError):
    pass


def lift_experiment(pair: MeasurePair, v, d: int, n_check: int, seed: int):
    """Build the lifted target and check it against interval membership."""
    if 2 * d > MAX_DEGREE_CAP:
        raise LiftRefused(f"2d = {2 * d} exceeds the degree cap {MAX_DEGREE_CAP}")
    basis = MonomialBasis(len(v), 2 * d)
    target = build_target(v, pair.J, basis)
    inst = HiddenDirectionInstance.from_pair(pair, v)
    x = stream_rng(seed, CHECK_STREAM).standard_normal((n_check, len(v)))
    return target, verify_massart_ltf(pair, inst, target, x)
