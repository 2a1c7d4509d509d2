"""Model extensions beyond the bounded categorical offspring law.

Covers: (a) unobserved offspring sex with a conjugate Beta sex ratio and
the induced binomially-thinned female offspring law; (b) unbounded Poisson
offspring with a conjugate Gamma prior on the rate; (c) composition of a
survival step with a reproduction step into one offspring law; (d) a joint
Dirichlet law over offspring-type combinations when per-type independence
is untenable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import optimize, stats

__all__ = [
    "BetaParams",
    "GammaParams",
    "PoissonLaw",
    "sex_ratio_posterior",
    "thinned_offspring_law",
    "poisson_posterior",
    "poisson_extinction_fixed_point",
    "convolve_survival_reproduction",
    "joint_offspring_posterior",
]


@dataclass(frozen=True)
class BetaParams:
    """Beta(a, b) prior/posterior, e.g. for the probability a newborn is female."""

    a: float
    b: float

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError("Beta parameters must be positive")

    @property
    def mean(self) -> float:
        return self.a / (self.a + self.b)

    def credible_interval(self, level: float = 0.90) -> tuple[float, float]:
        lo = (1 - level) / 2
        d = stats.beta(self.a, self.b)
        return float(d.ppf(lo)), float(d.ppf(1 - lo))


@dataclass(frozen=True)
class GammaParams:
    """Gamma(shape, rate) prior/posterior for a Poisson offspring rate."""

    shape: float
    rate: float

    def __post_init__(self):
        if self.shape <= 0 or self.rate <= 0:
            raise ValueError("Gamma parameters must be positive")

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    def credible_interval(self, level: float = 0.90) -> tuple[float, float]:
        lo = (1 - level) / 2
        d = stats.gamma(self.shape, scale=1.0 / self.rate)
        return float(d.ppf(lo)), float(d.ppf(1 - lo))


def sex_ratio_posterior(prior: BetaParams, females: int, males: int) -> BetaParams:
    """Conjugate update of the female-birth probability from sexed newborns."""
    if females < 0 or males < 0:
        raise ValueError("counts must be nonnegative")
    return BetaParams(prior.a + females, prior.b + males)


def thinned_offspring_law(law: Sequence[float], p_female: float) -> np.ndarray:
    """Female-only offspring law from a total-offspring law.

    Each of k total offspring is independently female with probability
    p_female, so the female count given k is Binomial(k, p_female) and the
    marginal is the binomial thinning of ``law``."""
    q = np.asarray(law, dtype=float)
    if not 0 <= p_female <= 1:
        raise ValueError("p_female must be in [0,1]")
    if (q < 0).any() or abs(q.sum() - 1.0) > 1e-9:
        raise ValueError("law must be a probability vector")
    kap = len(q) - 1
    out = np.zeros(kap + 1)
    for k in range(kap + 1):
        if q[k] == 0:
            continue
        out[: k + 1] += q[k] * stats.binom.pmf(np.arange(k + 1), k, p_female)
    return out


def poisson_posterior(prior: GammaParams, offspring_counts: Sequence[int]) -> GammaParams:
    """Conjugate Gamma update of a Poisson offspring rate.

    ``offspring_counts`` holds one entry per observed parent (its number of
    offspring); the posterior is Gamma(shape + sum, rate + #parents)."""
    c = np.asarray(offspring_counts)
    if len(c) == 0:
        return prior
    if (c < 0).any():
        raise ValueError("offspring counts must be nonnegative")
    return GammaParams(prior.shape + float(c.sum()), prior.rate + float(len(c)))


def poisson_extinction_fixed_point(mean: float) -> float:
    """Minimal root of s = exp(mean * (s - 1)) in [0, 1].

    Equals 1 for mean <= 1 (certain extinction); below 1 the root is found
    by bracketing, which the single-crossing structure of the pgf makes safe."""
    if mean < 0:
        raise ValueError("mean must be nonnegative")
    if mean <= 1:
        return 1.0

    def f(s):
        return math.exp(mean * (s - 1.0)) - s

    # f(0) = e^-mean > 0 and f(1 - eps) < 0 for mean > 1
    hi = 1.0 - 1e-12
    if f(hi) >= 0:
        return 1.0
    return float(optimize.brentq(f, 0.0, hi, xtol=1e-15, rtol=8.9e-16))


@dataclass(frozen=True)
class PoissonLaw:
    """Unbounded Poisson offspring law with rate ``mean``.

    Satisfies the duck-typed law interface used by the per-draw numerics
    (mean, pgf, pgf_derivative, second_moment, sample_counts)."""

    rate: float

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("rate must be nonnegative")

    def mean(self) -> float:
        return self.rate

    def second_moment(self) -> float:
        return self.rate + self.rate ** 2

    def pgf(self, s: float) -> float:
        return math.exp(self.rate * (s - 1.0))

    def pgf_derivative(self, s: float) -> float:
        return self.rate * math.exp(self.rate * (s - 1.0))

    def sample_counts(self, rng: np.random.Generator, n_parents: int) -> dict[int, int]:
        """Histogram {k: #parents with k offspring} for n_parents parents."""
        draws = rng.poisson(self.rate, size=n_parents)
        ks, ns = np.unique(draws, return_counts=True)
        return {int(k): int(n) for k, n in zip(ks, ns)}


def convolve_survival_reproduction(p_survival: Sequence[float],
                                   p_reproduction: Sequence[float]) -> np.ndarray:
    """One-period offspring law from independent survival and reproduction.

    ``p_survival`` = (P(die), P(survive)). Every individual leaves a brood
    drawn from ``p_reproduction`` and additionally contributes itself when
    it survives, so p(k) = pS(1) pR(k-1) + pS(0) pR(k): the convolution of
    the survival indicator with the brood law."""
    ps = np.asarray(p_survival, dtype=float)
    pr = np.asarray(p_reproduction, dtype=float)
    if ps.shape != (2,):
        raise ValueError("p_survival must be (P(die), P(survive))")
    for v in (ps, pr):
        if (v < 0).any() or abs(v.sum() - 1.0) > 1e-9:
            raise ValueError("inputs must be probability vectors")
    return np.convolve(ps, pr)


def joint_offspring_posterior(prior: Mapping[tuple, float],
                              counts: Mapping[tuple, int]) -> dict[tuple, float]:
    """Dirichlet update over joint offspring-type combinations.

    Keys are K-tuples (k_1, ..., k_K) of per-type offspring counts; this
    drops the per-type independence assumption at the cost of a Dirichlet
    over the whole product space. Counted combinations must appear in the
    prior support."""
    post = {tuple(key): float(a) for key, a in prior.items()}
    for key, a in post.items():
        if a <= 0:
            raise ValueError(f"prior weight for {key} must be positive")
    for key, n in counts.items():
        key = tuple(key)
        if n < 0:
            raise ValueError(f"negative count for {key}")
        if key not in post:
            raise ValueError(f"combination {key} outside the prior support")
        post[key] += n
    return post
