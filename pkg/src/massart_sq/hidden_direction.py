"""Hidden-direction labeled distributions and their samplers.

A draw picks a label ``y = +1`` with probability ``p`` (otherwise ``-1``),
then a latent value ``t`` from the normalized plus or minus measure, and
returns ``x = t v + z`` where ``z`` is standard normal on the orthogonal
complement of the unit direction ``v``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .gaussian_core import gaussian_cdf, gaussian_sf
from .massart_measures import MeasurePair, PiecewiseGaussianMeasure, l1_norm

PACK_ATTEMPTS_PER_VECTOR = 1000


def stream_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for ``(seed, stream)``; same pair, same draws."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(stream),)))


def random_unit_vector(m: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(m)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class DirectionPack:
    m: int
    vectors: np.ndarray  # shape (count, m)
    c_bound: float

    def max_abs_inner(self) -> float:
        if len(self.vectors) < 2:
            return 0.0
        gram = self.vectors @ self.vectors.T
        np.fill_diagonal(gram, 0.0)
        return float(np.abs(gram).max())


class PackInfeasible(RuntimeError):
    pass


def make_direction_pack(m: int, count: int, c: float, seed: int) -> DirectionPack:
    """Rejection-sample ``count`` unit vectors with pairwise ``|u.v| < c``."""
    if not 0 < c <= 0.5:
        raise ValueError("c must lie in (0, 1/2]")
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = stream_rng(seed)
    accepted = np.empty((count, m))
    n = 0
    cap = count * PACK_ATTEMPTS_PER_VECTOR
    for _ in range(cap):
        u = random_unit_vector(m, rng)
        if n == 0 or np.max(np.abs(accepted[:n] @ u)) < c:
            accepted[n] = u
            n += 1
            if n == count:
                return DirectionPack(m, accepted, c)
    raise PackInfeasible(
        f"accepted {n} of {count} vectors in dimension {m} with |u.v| < {c} after {cap} attempts"
    )


def _truncated_normal(lo, hi, u):
    """Inverse-CDF draw of a standard normal restricted to ``[lo, hi]``.

    Pieces on the positive side are inverted through the survival function
    so tail pieces keep full relative precision.
    """
    right = lo >= 0
    out = np.empty_like(u)
    s_lo, s_hi = gaussian_sf(lo[right]), gaussian_sf(hi[right])
    out[right] = -ndtri(s_lo - u[right] * (s_lo - s_hi))
    c_lo, c_hi = gaussian_cdf(lo[~right]), gaussian_cdf(hi[~right])
    out[~right] = ndtri(c_lo + u[~right] * (c_hi - c_lo))
    return np.clip(out, lo, hi)


def sample_univariate(measure: PiecewiseGaussianMeasure, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """Draws from the normalized measure: pick a piece by mass, then invert within it."""
    prob = measure.piece_masses / measure.piece_masses.sum()
    idx = rng.choice(len(measure), size=size, p=prob)
    u = rng.random(size)
    return _truncated_normal(measure.lo[idx], measure.hi[idx], u)


@dataclass(frozen=True)
class HiddenDirectionInstance:
    v: np.ndarray
    plus: PiecewiseGaussianMeasure
    minus: PiecewiseGaussianMeasure
    p: float

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        if abs(np.linalg.norm(v) - 1) > 1e-12:
            raise ValueError("direction must be a unit vector")
        if not 0 < self.p < 1:
            raise ValueError("label prior must lie in (0, 1)")
        object.__setattr__(self, "v", v)

    @property
    def m(self) -> int:
        return len(self.v)

    @classmethod
    def from_pair(cls, pair: MeasurePair, v) -> "HiddenDirectionInstance":
        return cls(v, pair.plus, pair.minus, pair.p)

    @classmethod
    def from_measures(cls, plus, minus, v) -> "HiddenDirectionInstance":
        lp, lm = l1_norm(plus), l1_norm(minus)
        return cls(v, plus, minus, lp / (lp + lm))


@dataclass(frozen=True)
class LabeledSample:
    x: np.ndarray
    y: int
    latent_t: float


@dataclass(frozen=True)
class LabeledDataset:
    """Columnar batch of labeled samples; ``t`` is the latent projection."""

    x: np.ndarray  # (n, m)
    y: np.ndarray  # (n,) of +1/-1
    t: np.ndarray  # (n,)

    def __len__(self):
        return len(self.y)

    def __getitem__(self, i) -> LabeledSample:
        return LabeledSample(self.x[i], int(self.y[i]), float(self.t[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def split(self, frac: float = 0.5):
        k = int(len(self) * frac)
        return (LabeledDataset(self.x[:k], self.y[:k], self.t[:k]),
                LabeledDataset(self.x[k:], self.y[k:], self.t[k:]))


def _embed_latent(t, v, rng):
    z = rng.standard_normal((len(t), len(v)))
    z -= np.outer(z @ v, v)
    return z + np.outer(t, v)


def sample_labeled(inst: HiddenDirectionInstance, n: int, rng: np.random.Generator) -> LabeledDataset:
    if n < 1:
        raise ValueError("n must be at least 1")
    y = np.where(rng.random(n) < inst.p, 1, -1)
    t = np.empty(n)
    pos = y == 1
    t[pos] = sample_univariate(inst.plus, rng, int(pos.sum()))
    t[~pos] = sample_univariate(inst.minus, rng, int((~pos).sum()))
    x = _embed_latent(t, inst.v, rng)
    return LabeledDataset(x, y, t)


@dataclass(frozen=True)
class NullDistribution:
    """Standard normal features with an independent label of prior ``p``."""

    m: int
    p: float


def reference_null_sampler(m: int, p: float, n: int, rng: np.random.Generator) -> LabeledDataset:
    y = np.where(rng.random(n) < p, 1, -1)
    x = rng.standard_normal((n, m))
    return LabeledDataset(x, y, np.full(n, np.nan))


def draw(dist, n: int, rng: np.random.Generator) -> LabeledDataset:
    if isinstance(dist, NullDistribution):
        return reference_null_sampler(dist.m, dist.p, n, rng)
    return sample_labeled(dist, n, rng)
