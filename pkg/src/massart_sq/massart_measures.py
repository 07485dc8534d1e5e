"""Exact piecewise construction of the label-conditional measures.

Both measures have density ``coeff * g(x) * W(x)`` where ``W`` is a finite sum
of indicator functions of intervals, each weighted by ``1/|m + 1/2|``:

* plus side: intervals with endpoints ``m*s`` and ``m*s + (m + 1/2)*eps``
* minus side: intervals with endpoints ``(m + 1/2)*s`` and ``(m + 1/2)*(s + eps)``

for every integer ``m``.  Raw intervals are cut at all of their endpoints so
that ``W`` is constant on every stored piece.  Every check below (density
ratios, the negative region ``J``, masses) is then exact piecewise algebra
in which the Gaussian factor cancels or integrates in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .gaussian_core import R_TRUNC, T_MAX, gaussian_mass, gaussian_moment, gaussian_pdf, partial_moments

PLUS = "plus"
MINUS = "minus"
STANDARD = "standard"
LARGE_ETA = "large_eta"

#: Count of J intervals allowed per unit of s/eps.
C_J = 4.0
#: Allowed ratio of plus density to ``(s/eps) * C * g``; minus uses ``(s/eps) * eta * g``.
PROP4_FACTOR = 4.0
L1_BAND = (0.2, 5.0)


class BandCheckError(ValueError):
    """Large-eta construction produced density ratios inside the forbidden band."""

    def __init__(self, message, violations):
        super().__init__(message)
        self.violations = violations


@dataclass(frozen=True)
class ConstructionParams:
    s: float
    eps: float
    eta: float
    C: float | None = None
    variant: str = STANDARD
    m0: int = 0
    r_trunc: float = R_TRUNC
    ratio_floor: float = 20.0
    m0_cap_factor: float = 0.35

    def __post_init__(self):
        if not 0 < self.eps < self.s <= 1:
            raise ValueError(f"need 0 < eps < s <= 1, got s={self.s}, eps={self.eps}")
        if self.s / self.eps < self.ratio_floor:
            raise ValueError(
                f"s/eps = {self.s / self.eps:.4g} is below the floor {self.ratio_floor}"
            )
        if not 0 < self.eta <= 0.5:
            raise ValueError(f"eta must lie in (0, 1/2], got {self.eta}")
        if self.C is not None and not self.C > 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if self.variant not in (STANDARD, LARGE_ETA):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == LARGE_ETA:
            if self.m0 < 1:
                raise ValueError("large-eta variant needs m0 >= 1")
            cap = self.m0_cap
            if self.m0 > cap:
                raise ValueError(f"m0 = {self.m0} exceeds the cap {cap:.4g} for eta={self.eta}")

    @property
    def m0_cap(self) -> float:
        f = self.m0_cap_factor
        if self.eta >= 0.5:
            return f * self.s / self.eps
        return min(f * self.s / self.eps, f / math.sqrt(0.5 - self.eta))

    @property
    def ratio(self) -> float:
        return self.s / self.eps

    def with_C(self, C: float) -> "ConstructionParams":
        return replace(self, C=float(C))

    def coefficient(self, side: str) -> float:
        if side == PLUS:
            if self.C is None:
                raise ValueError("C has not been set; see calibrate_C")
            return self.C * self.s / self.eps
        if side == MINUS:
            scale = 1.0 if self.variant == LARGE_ETA else self.eta
            return scale * self.s / self.eps
        raise ValueError(f"unknown side {side!r}")

    def band(self) -> tuple[float, float]:
        """Ratios ``D+/D-`` in this closed band would push a flip rate above eta."""
        return self.eta / (1 - self.eta), (1 - self.eta) / self.eta


@dataclass(frozen=True)
class IntervalFamily:
    lo: np.ndarray
    hi: np.ndarray
    label: str = ""

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be 1-d arrays of equal length")
        if np.any(lo > hi) or np.any(hi[:-1] > lo[1:]):
            raise ValueError("intervals must be sorted and disjoint")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __len__(self):
        return len(self.lo)

    def intervals(self):
        return list(zip(self.lo.tolist(), self.hi.tolist()))

    def endpoints(self) -> np.ndarray:
        return np.column_stack([self.lo, self.hi]).ravel()

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.lo, x, side="right") - 1
        ok = idx >= 0
        safe = np.clip(idx, 0, None)
        out = ok & (x <= self.hi[safe]) if len(self) else np.zeros(x.shape, bool)
        return out if out.ndim else bool(out)

    def complement(self, r: float, label: str = "") -> "IntervalFamily":
        """``[-r, r]`` minus the family, as closed intervals."""
        edges_lo = np.concatenate([[-r], self.hi])
        edges_hi = np.concatenate([self.lo, [r]])
        keep = edges_hi > edges_lo
        return IntervalFamily(edges_lo[keep], edges_hi[keep], label)

    def total_length(self) -> float:
        return math.fsum((self.hi - self.lo).tolist())


def _merge(lo, hi, label):
    """Join touching intervals of an already-sorted sequence."""
    if len(lo) == 0:
        return IntervalFamily(np.empty(0), np.empty(0), label)
    out_lo, out_hi = [lo[0]], [hi[0]]
    for a, b in zip(lo[1:], hi[1:]):
        if a <= out_hi[-1]:
            out_hi[-1] = max(out_hi[-1], b)
        else:
            out_lo.append(a)
            out_hi.append(b)
    return IntervalFamily(np.array(out_lo), np.array(out_hi), label)


@dataclass(frozen=True)
class PiecewiseGaussianMeasure:
    """Density ``coeff * g(x) * weight`` on each of a sorted list of pieces."""

    coeff: float
    lo: np.ndarray
    hi: np.ndarray
    weight: np.ndarray
    label: str = ""

    def __post_init__(self):
        arrs = [np.array(a, dtype=float) for a in (self.lo, self.hi, self.weight)]
        lo, hi, w = arrs
        if not (lo.shape == hi.shape == w.shape) or lo.ndim != 1:
            raise ValueError("lo, hi and weight must be 1-d arrays of equal length")
        if np.any(lo >= hi) or np.any(hi[:-1] > lo[1:]):
            raise ValueError("pieces must be sorted, non-degenerate and disjoint")
        if np.any(w <= 0):
            raise ValueError("piece weights must be positive")
        for name, a in zip(("lo", "hi", "weight"), arrs):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def __len__(self):
        return len(self.lo)

    def piece_index(self, x):
        """Index of the piece containing ``x``, or -1.  Shared endpoints go right."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.lo, x, side="right") - 1
        safe = np.clip(idx, 0, None)
        inside = (idx >= 0) & (x <= self.hi[safe])
        return np.where(inside, idx, -1)

    def weight_at(self, x):
        idx = self.piece_index(x)
        out = np.where(idx >= 0, self.weight[np.clip(idx, 0, None)], 0.0)
        return out if out.ndim else float(out)

    def density_over_gaussian(self, x):
        return self.coeff * self.weight_at(x)

    def density(self, x):
        return self.density_over_gaussian(x) * gaussian_pdf(x)

    @cached_property
    def piece_masses(self) -> np.ndarray:
        return self.coeff * self.weight * gaussian_mass(self.lo, self.hi)

    def support(self) -> IntervalFamily:
        return _merge(self.lo, self.hi, f"support_{self.label}" if self.label else "support")

    def scaled(self, factor: float) -> "PiecewiseGaussianMeasure":
        return replace(self, coeff=self.coeff * factor)


def l1_norm(measure: PiecewiseGaussianMeasure) -> float:
    return math.fsum(measure.piece_masses.tolist())


def moments(measure: PiecewiseGaussianMeasure, t_max: int) -> np.ndarray:
    """``int x^t dmeasure`` for ``t = 0..t_max``."""
    table = partial_moments(measure.lo, measure.hi, t_max)
    terms = measure.coeff * measure.weight[:, None] * table
    return np.array([math.fsum(col) for col in terms.T.tolist()])


def moment(measure: PiecewiseGaussianMeasure, t: int, t_max: int = T_MAX) -> float:
    if t < 0 or t > t_max:
        raise ValueError(f"moment order {t} outside 0..{t_max}")
    return float(moments(measure, t)[t])


def mass_on(measure: PiecewiseGaussianMeasure, fam: IntervalFamily) -> float:
    """Measure of the union of ``fam``, summed over exact piece intersections."""
    terms = []
    for a, b in zip(fam.lo.tolist(), fam.hi.tolist()):
        i0 = np.searchsorted(measure.hi, a, side="right")
        i1 = np.searchsorted(measure.lo, b, side="left")
        if i1 <= i0:
            continue
        lo = np.maximum(measure.lo[i0:i1], a)
        hi = np.minimum(measure.hi[i0:i1], b)
        ok = hi > lo
        terms.extend((measure.weight[i0:i1][ok] * gaussian_mass(lo[ok], hi[ok])).tolist())
    return measure.coeff * math.fsum(terms)


def raw_intervals(side: str, s: float, eps: float, r: float = R_TRUNC):
    """Unclipped raw intervals meeting ``[-r, r]``: arrays ``(m, lo, hi, weight)``."""
    m_max = int(math.ceil(r / s)) + 3
    m = np.arange(-m_max, m_max + 1)
    k = m + 0.5
    if side == PLUS:
        a, b = m * s, m * s + k * eps
    elif side == MINUS:
        a, b = k * s, k * (s + eps)
    else:
        raise ValueError(f"unknown side {side!r}")
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    keep = (hi > -r) & (lo < r)
    return m[keep], lo[keep], hi[keep], 1.0 / np.abs(k[keep])


def interval_count_n(x: float, side: str, params: ConstructionParams) -> int:
    """Number of raw intervals of ``side`` containing ``x`` (closed intervals).

    Membership can only occur for ``m`` between ``x/s`` and
    ``(x - eps/2)/(s + eps)`` on the plus side, or between ``x/(s+eps)`` and
    ``x/s`` (shifted by one half) on the minus side; this window, widened
    by three on each end, is enumerated exhaustively.
    """
    s, eps = params.s, params.eps
    if abs(x) > params.r_trunc:
        raise ValueError(f"|x| must not exceed {params.r_trunc}")
    if side == PLUS:
        ends = (x / s, (x - eps / 2) / (s + eps))
    elif side == MINUS:
        ends = (x / s - 0.5, x / (s + eps) - 0.5)
    else:
        raise ValueError(f"unknown side {side!r}")
    count = 0
    for m in range(math.floor(min(ends)) - 3, math.ceil(max(ends)) + 4):
        k = m + 0.5
        if side == PLUS:
            a, b = m * s, m * s + k * eps
        else:
            a, b = k * s, k * (s + eps)
        if min(a, b) <= x <= max(a, b):
            count += 1
    return count


def _split_pieces(lo, hi, w, r):
    lo = np.clip(lo, -r, r)
    hi = np.clip(hi, -r, r)
    bps = np.unique(np.concatenate([lo, hi]))
    i0 = np.searchsorted(bps, lo)
    i1 = np.searchsorted(bps, hi)
    weight = np.zeros(len(bps) - 1)
    count = np.zeros(len(bps) - 1, dtype=int)
    for a, b, wt in zip(i0, i1, w):
        weight[a:b] += wt
        count[a:b] += 1
    return bps[:-1], bps[1:], weight, count


def build_measure(side: str, params: ConstructionParams) -> PiecewiseGaussianMeasure:
    _, lo, hi, w = raw_intervals(side, params.s, params.eps, params.r_trunc)
    plo, phi, weight, count = _split_pieces(lo, hi, w, params.r_trunc)
    keep = count > 0
    return PiecewiseGaussianMeasure(
        params.coefficient(side), plo[keep], phi[keep], weight[keep], label=side
    )


@dataclass(frozen=True)
class JointPieces:
    """Common refinement of two measures; zero weight where a measure is absent."""

    lo: np.ndarray
    hi: np.ndarray
    w_plus: np.ndarray
    w_minus: np.ndarray
    coeff_plus: float
    coeff_minus: float

    @property
    def d_plus(self):
        return self.coeff_plus * self.w_plus

    @property
    def d_minus(self):
        return self.coeff_minus * self.w_minus

    @property
    def overlap(self):
        return (self.w_plus > 0) & (self.w_minus > 0)


def joint_pieces(plus: PiecewiseGaussianMeasure, minus: PiecewiseGaussianMeasure) -> JointPieces:
    bps = np.unique(np.concatenate([plus.lo, plus.hi, minus.lo, minus.hi]))
    lo, hi = bps[:-1], bps[1:]
    mid = 0.5 * (lo + hi)
    return JointPieces(
        lo, hi, plus.weight_at(mid), minus.weight_at(mid), plus.coeff, minus.coeff
    )


def build_J(params: ConstructionParams, plus=None, minus=None) -> IntervalFamily:
    """Region where the target labels negative.

    Standard variant: the gaps of the plus support.  Raises if the plus
    intervals have not started to overlap inside the truncation window, as
    the family would then extend past it.  Large-eta variant: pieces where
    the minus density exceeds the plus density.
    """
    if plus is None:
        plus = build_measure(PLUS, params.with_C(params.C or 1.0))
    if params.variant == STANDARD:
        r = params.r_trunc
        if plus.lo[0] > -r or plus.hi[-1] < r:
            raise ValueError("plus support does not cover the truncation edges; increase r_trunc")
        gap = plus.lo[1:] > plus.hi[:-1]
        return IntervalFamily(plus.hi[:-1][gap], plus.lo[1:][gap], "J")
    if minus is None:
        minus = build_measure(MINUS, params)
    jp = joint_pieces(plus, minus)
    neg = jp.d_minus > jp.d_plus
    return _merge(jp.lo[neg], jp.hi[neg], "J")


def calibrate_C(params: ConstructionParams) -> float:
    """Twice the smallest plus amplitude keeping every flip rate at most eta.

    Outside ``J`` the flip rate is ``D-/(D+ + D-)`` which stays at most eta
    iff ``C * W+ >= (1 - eta) * W-`` on every piece where both weights are
    positive.  With no such piece any amplitude works and 1.0 is returned.
    """
    if params.variant != STANDARD:
        raise ValueError("calibrate_C applies to the standard variant only")
    unit = params.with_C(1.0)
    jp = joint_pieces(build_measure(PLUS, unit), build_measure(MINUS, unit))
    both = jp.overlap
    if not np.any(both):
        return 1.0
    c_min = (1 - params.eta) * float(np.max(jp.w_minus[both] / jp.w_plus[both]))
    return 2.0 * c_min


@dataclass(frozen=True)
class MeasurePair:
    params: ConstructionParams
    plus: PiecewiseGaussianMeasure
    minus: PiecewiseGaussianMeasure
    J: IntervalFamily

    @cached_property
    def joint(self) -> JointPieces:
        return joint_pieces(self.plus, self.minus)

    @cached_property
    def l1_plus(self) -> float:
        return l1_norm(self.plus)

    @cached_property
    def l1_minus(self) -> float:
        return l1_norm(self.minus)

    @property
    def p(self) -> float:
        return self.l1_plus / (self.l1_plus + self.l1_minus)

    @cached_property
    def J_complement(self) -> IntervalFamily:
        return self.J.complement(self.params.r_trunc, "J_complement")


def build_pair(params: ConstructionParams) -> MeasurePair:
    """Standard-variant pair; calibrates C when the params leave it unset."""
    if params.variant == LARGE_ETA:
        return build_large_eta_pair(params)
    if params.C is None:
        params = params.with_C(calibrate_C(params))
    plus = build_measure(PLUS, params)
    minus = build_measure(MINUS, params)
    return MeasurePair(params, plus, minus, build_J(params, plus))


def band_violations(jp: JointPieces, band) -> list[tuple[float, float, float]]:
    """Pieces ``(lo, hi, ratio)`` with both densities positive and ratio inside ``band``."""
    both = jp.overlap
    ratio = np.full(jp.lo.shape, np.nan)
    ratio[both] = jp.d_plus[both] / jp.d_minus[both]
    bad = both & (ratio >= band[0]) & (ratio <= band[1])
    return list(zip(jp.lo[bad].tolist(), jp.hi[bad].tolist(), ratio[bad].tolist()))


def build_large_eta_pair(params: ConstructionParams) -> MeasurePair:
    """Pair with plus amplitude ``1 + 1/m0`` and the no-band guarantee checked.

    Raises :class:`BandCheckError` listing the offending pieces when some
    density ratio lands inside ``[eta/(1-eta), (1-eta)/eta]``.
    """
    if params.variant != LARGE_ETA:
        raise ValueError("params must use the large_eta variant")
    params = params.with_C(1.0 + 1.0 / params.m0)
    plus = build_measure(PLUS, params)
    minus = build_measure(MINUS, params)
    jp = joint_pieces(plus, minus)
    bad = band_violations(jp, params.band())
    if bad:
        lo, hi, ratio = bad[0]
        raise BandCheckError(
            f"{len(bad)} pieces have density ratio inside the forbidden band, "
            f"first at [{lo:.6g}, {hi:.6g}] with ratio {ratio:.6g}",
            bad,
        )
    return MeasurePair(params, plus, minus, build_J(params, plus, minus))


def flip_probability(x, pair: MeasurePair):
    """Chance the observed label disagrees with the target at ``v.x = x``.

    Evaluated on weights so the Gaussian factor cancels exactly; zero where
    neither measure has support.
    """
    dp = pair.plus.density_over_gaussian(x)
    dm = pair.minus.density_over_gaussian(x)
    total = dp + dm
    in_j = pair.J.contains(x)
    num = np.where(in_j, dp, dm)
    out = np.divide(num, total, out=np.zeros_like(total, dtype=float), where=total > 0)
    return out if out.ndim else float(out)


def max_flip(pair: MeasurePair) -> float:
    jp = pair.joint
    live = (jp.w_plus > 0) | (jp.w_minus > 0)
    if not np.any(live):
        return 0.0
    mid = 0.5 * (jp.lo[live] + jp.hi[live])
    return float(np.max(flip_probability(mid, pair)))


def opt_error(pair: MeasurePair) -> float:
    """Error of the target: minus mass off ``J`` plus plus mass on ``J``."""
    p = pair.p
    miss_minus = mass_on(pair.minus, pair.J_complement) / pair.l1_minus
    miss_plus = mass_on(pair.plus, pair.J) / pair.l1_plus
    return (1 - p) * miss_minus + p * miss_plus


@dataclass(frozen=True)
class VerificationReport:
    variant: str
    prop1a_ok: bool
    prop1b_min_ratio: float
    prop1b_threshold: float
    band_ok: bool
    prop2_mass_outside: float
    prop2_mass_outside_raw: float
    prop3_max_moment_gap: tuple
    prop3_tol: float
    prop4_max_density_ratio_to_G: dict
    prop4_bounds: dict
    prop5_l1_plus: float
    prop5_l1_minus: float
    prop5_bands: dict
    j_count: int
    j_count_bound: float
    opt_error: float
    max_flip: float
    truncation_residual: float
    constants: dict = field(default_factory=dict)

    @property
    def prop1b_margin(self) -> float:
        return self.prop1b_min_ratio / self.prop1b_threshold

    def checks(self) -> dict:
        b = self.prop5_bands
        return {
            "prop1a": self.prop1a_ok,
            "prop1b": self.prop1b_min_ratio > self.prop1b_threshold,
            "band": self.band_ok,
            "prop3": all(g < self.prop3_tol for g in self.prop3_max_moment_gap),
            "prop4": all(
                self.prop4_max_density_ratio_to_G[k] <= self.prop4_bounds[k] for k in self.prop4_bounds
            ),
            "prop5_plus": b["plus"][0] <= self.prop5_l1_plus <= b["plus"][1],
            "prop5_minus": b["minus"][0] <= self.prop5_l1_minus <= b["minus"][1],
            "j_count": self.j_count <= self.j_count_bound,
            "max_flip": self.max_flip <= self.constants.get("eta", 0.5),
        }

    @property
    def all_pass(self) -> bool:
        return all(self.checks().values())


def verify_properties(pair: MeasurePair, t_check: int = 6, gap_tol: float = 1e-3) -> VerificationReport:
    """Run the full property suite exactly on the stored pieces."""
    prm = pair.params
    jp = pair.joint
    mid = 0.5 * (jp.lo + jp.hi)
    in_j = pair.J.contains(mid)
    band = prm.band()

    if prm.variant == STANDARD:
        prop1a = not np.any(in_j & (jp.w_plus > 0))
    else:
        # Inside J the plus side must be the rarer label by the Massart margin.
        on_j = in_j & (jp.w_plus > 0)
        prop1a = bool(np.all(jp.d_plus[on_j] / jp.d_minus[on_j] < band[0]))
    outside = ~in_j & jp.overlap
    ratios = jp.d_plus[outside] / jp.d_minus[outside]
    min_ratio = float(ratios.min()) if ratios.size else math.inf

    gaps = [0.0] * (t_check + 1)
    for meas, l1 in ((pair.plus, pair.l1_plus), (pair.minus, pair.l1_minus)):
        mom = moments(meas, t_check) / l1
        for t in range(t_check + 1):
            gaps[t] = max(gaps[t], abs(mom[t] - gaussian_moment(t)))

    minus_scale = prm.eta if prm.variant == STANDARD else 1.0
    prop4 = {PLUS: float(pair.plus.coeff * pair.plus.weight.max()),
             MINUS: float(pair.minus.coeff * pair.minus.weight.max())}
    prop4_bounds = {PLUS: PROP4_FACTOR * prm.C * prm.ratio, MINUS: PROP4_FACTOR * minus_scale * prm.ratio}

    raw_out = mass_on(pair.minus, pair.J_complement)
    residual = 2 * gaussian_pdf(prm.r_trunc) * max(prop4.values())
    return VerificationReport(
        variant=prm.variant,
        prop1a_ok=bool(prop1a),
        prop1b_min_ratio=min_ratio,
        prop1b_threshold=band[1],
        band_ok=not band_violations(jp, band),
        prop2_mass_outside=raw_out / pair.l1_minus,
        prop2_mass_outside_raw=raw_out,
        prop3_max_moment_gap=tuple(gaps),
        prop3_tol=gap_tol,
        prop4_max_density_ratio_to_G=prop4,
        prop4_bounds=prop4_bounds,
        prop5_l1_plus=pair.l1_plus,
        prop5_l1_minus=pair.l1_minus,
        prop5_bands={PLUS: L1_BAND, MINUS: (L1_BAND[0] * minus_scale, L1_BAND[1] * minus_scale)},
        j_count=len(pair.J),
        j_count_bound=C_J * prm.ratio,
        opt_error=opt_error(pair),
        max_flip=max_flip(pair),
        truncation_residual=residual,
        constants={"C_J": C_J, "PROP4_FACTOR": PROP4_FACTOR, "L1_BAND": L1_BAND,
                   "eta": prm.eta, "C": prm.C, "t_check": t_check},
    )
