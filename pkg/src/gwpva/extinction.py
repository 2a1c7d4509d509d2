"""Extinction probabilities, survival bounds and extinction-time bounds.

For a fixed parameterization the extinction probability starting from one
type-i individual is the i-th coordinate of the minimal fixed point of the
offspring generating function phi in [0, 1]^K; independence across founders
turns a population into the product of per-founder coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .model import ParameterDraw, PopulationState, _is_categorical
from .spectral import SpectralTriple

__all__ = [
    "ExtinctionProfile",
    "SurvivalBounds",
    "TimeBounds",
    "generating_function",
    "minimal_fixed_point",
    "extinction_probability",
    "survival_bounds",
    "extinction_time_bounds",
    "quasi_extinction_time",
]


@dataclass(frozen=True)
class ExtinctionProfile:
    """Per-type extinction probabilities s with solver diagnostics."""

    s: np.ndarray
    converged: bool
    iterations: int
    residual: float


@dataclass(frozen=True)
class SurvivalBounds:
    """Pointwise bounds on P(population alive at time t) for a subcritical draw.

    ``upper(t)`` is the Markov bound lambda^t sum_j v_j N_j / min(v);
    ``lower(t)`` the second-moment bound
    (max v / min v)^2 * ((1 - lambda) / xi) * lambda^(t+1) * sum_j v_j N_j,
    with xi = sum_j (v_j^2 / min v) * sup_i sum_{k>=1} (k^2 - M_ij^2) p_ij(k).
    Both are clamped to [0, 1]. ``lower_exact(t)`` is the sharper
    non-asymptotic bound available in the single-type case.
    """

    lam: float
    xi: float
    weighted_size: float
    upper: Callable[[np.ndarray], np.ndarray]
    lower: Callable[[np.ndarray], np.ndarray]
    lower_exact: Callable[[np.ndarray], np.ndarray] | None = None


@dataclass(frozen=True)
class TimeBounds:
    """Extinction-time bracket: P(T_ext <= t_minus) <= alpha and
    P(T_ext > t_plus) <= alpha, so T_ext lies in (t_minus, t_plus] with
    probability at least 1 - 2*alpha. ``t_plus`` is None when the upper
    survival bound never falls below alpha within the search horizon."""

    t_minus: int
    t_plus: int | None
    alpha: float


def generating_function(draw: ParameterDraw, s) -> np.ndarray:
    """Multi-type offspring pgf phi_i(s) = prod_j sum_k p_ij(k) s_j^k."""
    s = np.asarray(s, dtype=float)
    if s.shape != (draw.K,):
        raise ValueError(f"s must have shape ({draw.K},)")
    out = np.ones(draw.K)
    for (i, j), law in draw.p.items():
        if _is_categorical(law):
            v = np.asarray(law, dtype=float)
            out[i - 1] *= float(np.polynomial.polynomial.polyval(s[j - 1], v))
        else:
            out[i - 1] *= float(law.pgf(s[j - 1]))
    return out


def _pgf_jacobian(draw: ParameterDraw, s: np.ndarray) -> np.ndarray:
    """d phi_i / d s_j, using phi_i(s) = prod_j g_ij(s_j)."""
    K = draw.K
    g = np.ones((K, K))
    dg = np.zeros((K, K))
    for (i, j), law in draw.p.items():
        if _is_categorical(law):
            v = np.asarray(law, dtype=float)
            g[i - 1, j - 1] = np.polynomial.polynomial.polyval(s[j - 1], v)
            if len(v) > 1:
                dv = v[1:] * np.arange(1, len(v))
                dg[i - 1, j - 1] = np.polynomial.polynomial.polyval(s[j - 1], dv)
        else:
            g[i - 1, j - 1] = law.pgf(s[j - 1])
            dg[i - 1, j - 1] = law.pgf_derivative(s[j - 1])
    J = np.zeros((K, K))
    for i in range(K):
        row = g[i]
        for j in range(K):
            others = np.prod(np.delete(row, j))
            J[i, j] = dg[i, j] * others
    return J


def minimal_fixed_point(draw: ParameterDraw, tol: float = 1e-14,
                        max_iter: int = 5000) -> ExtinctionProfile:
    """Minimal fixed point of phi in [0, 1]^K.

    Subcritical and critical draws where every type can die childless are
    certainly extinct, so s = 1 is returned exactly (the iterative scheme
    converges only at rate O(1/t) at criticality). Otherwise monotone
    iteration from 0 converges to the minimal root from below; near-critical
    draws are polished with a damped Newton step accepted only while
    phi(s) - s stays nonnegative, which pins the iterate below the minimal
    root and prevents jumping to the trivial root at 1. Non-convergence is
    reported in the profile, never raised.
    """
    K = draw.K
    if float(generating_function(draw, np.zeros(K)).min()) > 0.0:
        from .spectral import mean_matrix, perron_triple
        M = mean_matrix(draw)
        lam = perron_triple(M).lam if M.any() else 0.0
        if lam <= 1.0 + 1e-12:
            ones = np.ones(K)
            residual = float(np.abs(generating_function(draw, ones) - ones).max())
            return ExtinctionProfile(s=ones, converged=True, iterations=0,
                                     residual=residual)
    s = np.zeros(K)
    it = 0
    for it in range(1, max_iter + 1):
        s_new = generating_function(draw, s)
        step = float(np.abs(s_new - s).max())
        s = s_new
        if step < tol:
            break
    for _ in range(60):
        f = generating_function(draw, s) - s
        if np.abs(f).max() < 1e-15:
            break
        J = _pgf_jacobian(draw, s) - np.eye(K)
        try:
            delta = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError:
            break
        moved = False
        for _halving in range(6):
            s_try = np.clip(s + delta, 0.0, 1.0)
            f_try = generating_function(draw, s_try) - s_try
            if np.abs(f_try).max() <= np.abs(f).max() and f_try.min() >= -1e-12:
                s = s_try
                moved = True
                break
            delta = delta * 0.5
        if not moved:
            break
    residual = float(np.abs(generating_function(draw, s) - s).max())
    return ExtinctionProfile(s=np.clip(s, 0.0, 1.0), converged=residual < 1e-9,
                             iterations=it, residual=residual)


def extinction_probability(profile: ExtinctionProfile | np.ndarray,
                           population: PopulationState | Sequence[int]) -> float:
    """P(eventual extinction) = prod_i s_i^{N_i} by founder independence."""
    s = profile.s if isinstance(profile, ExtinctionProfile) else np.asarray(profile, float)
    N = np.asarray(population.N if isinstance(population, PopulationState) else population)
    if N.shape != s.shape:
        raise ValueError("population and profile dimension mismatch")
    return float(np.prod(s ** N))


def _second_moment_column(draw: ParameterDraw, M: np.ndarray, j: int) -> float:
    """sup_i sum_{k>=1} (k^2 - M_ij^2) p_ij(k) over parent types i."""
    best = 0.0
    for i in range(1, draw.K + 1):
        law = draw.p.get((i, j))
        if law is None:
            continue
        if _is_categorical(law):
            v = np.asarray(law, dtype=float)
            ks = np.arange(len(v), dtype=float)
            val = float(((ks[1:] ** 2 - M[i - 1, j - 1] ** 2) * v[1:]).sum())
        else:
            val = float(law.second_moment() - M[i - 1, j - 1] ** 2 * (1 - law.pgf(0.0)))
        best = max(best, val)
    return best


def survival_bounds(draw: ParameterDraw, triple: SpectralTriple,
                    population: PopulationState | Sequence[int],
                    M: np.ndarray | None = None) -> SurvivalBounds:
    """Upper and lower bounds on the survival curve of a subcritical draw."""
    if triple.lam >= 1:
        raise ValueError(f"survival bounds require lambda < 1, got {triple.lam}")
    if M is None:
        from .spectral import mean_matrix
        M = mean_matrix(draw)
    N = np.asarray(population.N if isinstance(population, PopulationState) else population,
                   dtype=float)
    v = triple.v
    vmin, vmax = float(v.min()), float(v.max())
    if vmin <= 0:
        raise ValueError("left eigenvector must be strictly positive (irreducible M)")
    w = float(v @ N)
    lam = triple.lam
    xi = sum((v[j - 1] ** 2 / vmin) * _second_moment_column(draw, M, j)
             for j in range(1, draw.K + 1))

    def upper(t):
        t = np.asarray(t, dtype=float)
        return np.minimum(1.0, (w / vmin) * lam ** t)

    if xi <= 0:
        lower = None
    else:
        c = (vmax / vmin) ** 2 * (1 - lam) / xi * w

        def lower(t):
            t = np.asarray(t, dtype=float)
            return np.clip(c * lam ** (t + 1), 0.0, 1.0)

    lower_exact = None
    if xi > 0:
        r2 = (vmax / vmin) ** 2

        def lower_exact(t):
            # non-asymptotic second-moment (Paley-Zygmund style) bound whose
            # large-t limit is the geometric lower() curve
            t = np.asarray(t, dtype=float)
            num = lam ** (2 * t) * w ** 2
            den = xi * lam ** (t - 1) * (1 - lam ** t) / (1 - lam) * w + num
            with np.errstate(invalid="ignore", divide="ignore"):
                out = np.where(den > 0, r2 * num / den, 1.0)
            return np.clip(out, 0.0, 1.0)

    return SurvivalBounds(lam=lam, xi=xi, weighted_size=w,
                          upper=upper, lower=lower, lower_exact=lower_exact)


def extinction_time_bounds(upper: Callable, lower: Callable | None, alpha: float,
                           horizon_cap: int = 10 ** 6) -> TimeBounds:
    """Bracket the extinction time from averaged survival-bound curves.

    ``t_plus`` is the smallest t with upper(t) <= alpha (None if not reached
    within ``horizon_cap``); ``t_minus`` the largest t with
    lower(t) >= 1 - alpha (0 if none), guaranteeing P(T_ext <= t_minus) <= alpha.
    Both curves must be nonincreasing in t.
    """
    if not 0 < alpha < 0.5:
        raise ValueError("alpha must be in (0, 0.5)")
    t_plus: int | None = None
    t = 0
    block = 256
    while t <= horizon_cap:
        ts = np.arange(t, min(t + block, horizon_cap + 1))
        u = np.asarray(upper(ts), dtype=float)
        hit = np.nonzero(u <= alpha)[0]
        if len(hit):
            t_plus = int(ts[hit[0]])
            break
        t += block

    t_minus = 0
    if lower is not None:
        # lower is nonincreasing: scan until it drops below 1 - alpha
        end = t_plus if t_plus is not None else horizon_cap
        t = 0
        while t <= end:
            ts = np.arange(t, min(t + block, end + 1))
            lo = np.asarray(lower(ts), dtype=float)
            below = np.nonzero(lo < 1 - alpha)[0]
            if len(below):
                t_minus = int(ts[below[0]]) - 1 if ts[below[0]] > 0 else 0
                break
            t_minus = int(ts[-1])
            t += block
    return TimeBounds(t_minus=max(t_minus, 0), t_plus=t_plus, alpha=alpha)


def quasi_extinction_time(N0: float, threshold: float, rate: float) -> float:
    """Deterministic time for N0 * rate^t to fall to ``threshold``.

    Defined only for declining populations (0 < rate < 1) above the
    threshold; returns log(threshold / N0) / log(rate).
    """
    if not 0 < rate < 1:
        raise ValueError(f"rate must be in (0,1), got {rate}")
    if threshold <= 0 or N0 <= 0:
        raise ValueError("N0 and threshold must be positive")
    if N0 <= threshold:
        return 0.0
    return math.log(threshold / N0) / math.log(rate)
