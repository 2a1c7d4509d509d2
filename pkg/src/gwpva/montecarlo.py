"""Monte Carlo engine over the posterior parameter ensemble.

All population-level answers (viability, extinction probability,
extinction-time bounds, reintroduction summaries) are posterior
expectations of per-draw functionals. One shared ensemble of parameter
draws serves every estimate, so the quantities reported together are
consistent with each other.

Determinism: replicate r always uses the stream SeedSpec(master_seed, r),
and reductions are fixed-order numpy sums over preallocated per-replicate
arrays, so results are bit-identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .inference import HyperParams
from .model import PopulationState
from .sampling import SeedSpec
from .spectral import is_primitive

__all__ = [
    "MCEstimate",
    "PosteriorEnsemble",
    "TimeBoundsEstimate",
    "ReintroductionSummary",
    "error_bound",
    "mc_viability_probability",
    "mc_extinction_probability",
    "mc_short_time_abundance",
    "mc_time_bounds",
    "mc_reintroduction",
    "effective_population_size",
]

DEFAULT_N_PREC = 2500
_EIG_TOL = 1e-13
_EIG_SHIFT = 1e-12
_FP_TOL = 1e-14
_FP_RESIDUAL_OK = 1e-9


def error_bound(n_prec: int) -> float:
    """Worst-case Monte Carlo error for probability estimates, (4 sqrt(n))^-1."""
    if n_prec < 1:
        raise ValueError("n_prec must be >= 1")
    return 1.0 / (4.0 * np.sqrt(n_prec))


@dataclass(frozen=True)
class MCEstimate:
    """A Monte Carlo answer with its precision and provenance."""

    value: float | np.ndarray
    std_error: float | np.ndarray
    n_prec: int
    n_used: int
    master_seed: int
    error_bound: float | None = None
    warnings: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TimeBoundsEstimate:
    """Averaged survival-bound curves and the extinction-time bracket.

    The bracket guarantees P(T_ext <= t_minus) <= alpha and
    P(T_ext > t_plus) <= alpha under the averaged (lambda < 1 conditioned)
    posterior, so T_ext falls in (t_minus, t_plus] with probability at
    least 1 - 2*alpha."""

    t_minus: int
    t_plus: int | None
    alpha: float
    times: np.ndarray
    upper_curve: np.ndarray
    lower_curve: np.ndarray
    n_prec: int
    n_used: int
    master_seed: int
    warnings: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ReintroductionSummary:
    """Posterior distribution of per-founder extinction probabilities s_i."""

    mean: np.ndarray
    std_error: np.ndarray
    bin_edges: np.ndarray
    histograms: np.ndarray  # (K, bins) counts of s_i over draws
    n_prec: int
    n_used: int
    master_seed: int
    warnings: dict = field(default_factory=dict)


class PosteriorEnsemble:
    """A reproducible batch of posterior parameter draws and derived arrays.

    Draw r equals sample_parameter_draw(params, SeedSpec(master_seed, r));
    heavy derived quantities (mean matrices, dominant eigenpairs, pgf fixed
    points) are computed lazily on the whole batch.
    """

    def __init__(self, params: HyperParams, n_prec: int = DEFAULT_N_PREC,
                 master_seed: int = 0, workers: int = 1):
        if n_prec < 1:
            raise ValueError("n_prec must be >= 1")
        if workers < 1:
            raise ValueError("workers must be >= 1")
        self.params = params
        self.n_prec = int(n_prec)
        self.master_seed = int(master_seed)
        self.workers = int(workers)
        self.pairs = sorted(params.alpha)
        self.K = params.K
        self._laws = self._sample_all()

    # ---- sampling -------------------------------------------------------

    def _sample_range(self, out: dict, lo: int, hi: int) -> None:
        for r in range(lo, hi):
            rng = SeedSpec(self.master_seed, r).rng()
            for pair in self.pairs:
                a = np.asarray(self.params.alpha[pair], dtype=float)
                g = rng.gamma(shape=a)
                s = g.sum()
                while s <= 0:
                    g = rng.gamma(shape=a)
                    s = g.sum()
                out[pair][r] = g / s

    def _sample_all(self) -> dict:
        out = {pair: np.empty((self.n_prec, len(self.params.alpha[pair])))
               for pair in self.pairs}
        if self.workers == 1:
            self._sample_range(out, 0, self.n_prec)
        else:
            edges = np.linspace(0, self.n_prec, self.workers + 1).astype(int)
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                futs = [pool.submit(self._sample_range, out, int(lo), int(hi))
                        for lo, hi in zip(edges[:-1], edges[1:])]
                for f in futs:
                    f.result()
        return out

    def law(self, pair) -> np.ndarray:
        """(n_prec, kappa+1) array of sampled laws for one pair."""
        return self._laws[pair]

    # ---- derived batch quantities ---------------------------------------

    @cached_property
    def mean_matrices(self) -> np.ndarray:
        M = np.zeros((self.n_prec, self.K, self.K))
        for (i, j), d in self._laws.items():
            ks = np.arange(d.shape[1], dtype=float)
            M[:, i - 1, j - 1] = d @ ks
        return M

    @cached_property
    def primitive_warning(self) -> bool:
        # Dirichlet draws are a.s. positive wherever the cap allows, so the
        # nonnegative pattern is the cap pattern, shared by every draw
        pattern = np.zeros((self.K, self.K))
        for (i, j) in self.pairs:
            pattern[i - 1, j - 1] = 1.0
        return not is_primitive(pattern)

    @cached_property
    def _eigen(self) -> tuple[np.ndarray, np.ndarray]:
        """Dominant eigenvalue and left eigenvector per draw.

        Shifted power iteration accelerated by normalized repeated squaring
        (A^(2^60) collapses every draw onto its dominant eigenspace at once),
        then a few plain power steps against A to wash out round-off."""
        n, K = self.n_prec, self.K
        A = self.mean_matrices + _EIG_SHIFT * np.eye(K)
        B = A / np.abs(A).max(axis=(1, 2), keepdims=True)
        for _ in range(60):
            B = B @ B
            B /= np.abs(B).max(axis=(1, 2), keepdims=True)
        u = B.sum(axis=2)
        v = B.sum(axis=1)
        u /= u.sum(axis=1, keepdims=True)
        v /= v.sum(axis=1, keepdims=True)
        for _ in range(8):
            u = np.einsum("rij,rj->ri", A, u)
            v = np.einsum("ri,rij->rj", v, A)
            u /= u.sum(axis=1, keepdims=True)
            v /= v.sum(axis=1, keepdims=True)
        Au = np.einsum("rij,rj->ri", A, u)
        lam = np.einsum("ri,ri->r", u, Au) / np.einsum("ri,ri->r", u, u) - _EIG_SHIFT
        return np.maximum(lam, 0.0), v

    @property
    def lambdas(self) -> np.ndarray:
        return self._eigen[0]

    @property
    def left_vectors(self) -> np.ndarray:
        return self._eigen[1]

    def _pgf(self, s: np.ndarray) -> np.ndarray:
        """phi applied draw-wise: s is (n, K) in [0,1]^K."""
        out = np.ones_like(s)
        for (i, j), d in self._laws.items():
            powers = s[:, j - 1][:, None] ** np.arange(d.shape[1])
            out[:, i - 1] *= (d * powers).sum(axis=1)
        return out

    def _pgf_jacobian(self, s: np.ndarray) -> np.ndarray:
        n, K = s.shape
        g = np.ones((n, K, K))
        dg = np.zeros((n, K, K))
        for (i, j), d in self._laws.items():
            kap = d.shape[1] - 1
            powers = s[:, j - 1][:, None] ** np.arange(kap + 1)
            g[:, i - 1, j - 1] = (d * powers).sum(axis=1)
            if kap >= 1:
                dpow = np.arange(1, kap + 1) * s[:, j - 1][:, None] ** np.arange(kap)
                dg[:, i - 1, j - 1] = (d[:, 1:] * dpow).sum(axis=1)
        J = np.empty((n, K, K))
        for j in range(K):
            others = np.prod(np.delete(g, j, axis=2), axis=2)
            J[:, :, j] = dg[:, :, j] * others
        return J

    @cached_property
    def _fixed_point(self) -> tuple[np.ndarray, np.ndarray]:
        """Minimal pgf fixed point per draw, plus a per-draw failure mask."""
        n, K = self.n_prec, self.K
        s = np.zeros((n, K))
        for _ in range(3000):
            s_new = self._pgf(s)
            step = np.abs(s_new - s).max()
            s = s_new
            if step < _FP_TOL:
                break
        # Newton polish for near-critical draws. Monotone iterates approach
        # the minimal root from below, where phi(s) - s >= 0; a step is
        # accepted (with damping) only while it stays in that region, so the
        # polish cannot jump past the minimal root to the trivial root 1.
        eye = np.eye(K)
        for _ in range(60):
            f = self._pgf(s) - s
            worst = np.abs(f).max(axis=1)
            if worst.max() < 1e-15:
                break
            J = self._pgf_jacobian(s) - eye
            try:
                delta = np.linalg.solve(J, -f[..., None])[..., 0]
            except np.linalg.LinAlgError:
                break
            accepted = np.zeros(n, dtype=bool)
            for _halving in range(6):
                s_try = np.clip(s + np.where(accepted[:, None], 0.0, delta), 0.0, 1.0)
                f_try = self._pgf(s_try) - s_try
                ok = (~accepted) & (np.abs(f_try).max(axis=1) <= worst) \
                    & (f_try.min(axis=1) >= -1e-12)
                s = np.where(ok[:, None], s_try, s)
                accepted |= ok
                if accepted.all():
                    break
                delta = delta * 0.5
        residual = np.abs(self._pgf(s) - s).max(axis=1)
        return np.clip(s, 0.0, 1.0), residual > _FP_RESIDUAL_OK

    @property
    def extinction_profiles(self) -> np.ndarray:
        return self._fixed_point[0]

    @property
    def fixed_point_failures(self) -> np.ndarray:
        return self._fixed_point[1]


def _as_abundance(population) -> np.ndarray:
    if isinstance(population, PopulationState):
        return np.asarray(population.N, dtype=float)
    return np.asarray(population, dtype=float)


def _ensemble(params, n_prec, master_seed, workers, ensemble):
    if ensemble is not None:
        return ensemble
    return PosteriorEnsemble(params, n_prec=n_prec, master_seed=master_seed,
                             workers=workers)


def mc_viability_probability(params: HyperParams, n_prec: int = DEFAULT_N_PREC,
                             master_seed: int = 0, workers: int = 1,
                             ensemble: PosteriorEnsemble | None = None) -> MCEstimate:
    """Posterior probability that the population is viable (lambda > 1)."""
    ens = _ensemble(params, n_prec, master_seed, workers, ensemble)
    hits = (ens.lambdas > 1.0).astype(float)
    p = float(np.sum(hits) / ens.n_prec)
    se = float(np.sqrt(max(p * (1 - p), 0.0) / ens.n_prec))
    warnings = {"non-primitive-pattern": int(ens.primitive_warning) * ens.n_prec}
    return MCEstimate(value=p, std_error=se, n_prec=ens.n_prec, n_used=ens.n_prec,
                      master_seed=ens.master_seed, error_bound=error_bound(ens.n_prec),
                      warnings=warnings)


def mc_extinction_probability(params: HyperParams, population,
                              n_prec: int = DEFAULT_N_PREC, master_seed: int = 0,
                              workers: int = 1,
                              ensemble: PosteriorEnsemble | None = None) -> MCEstimate:
    """Posterior mean of P(eventual extinction | parameters) for a population."""
    ens = _ensemble(params, n_prec, master_seed, workers, ensemble)
    N = _as_abundance(population)
    if N.shape != (ens.K,):
        raise ValueError(f"population must have {ens.K} types")
    s = ens.extinction_profiles
    bad = ens.fixed_point_failures
    per_draw = np.prod(s ** N[None, :], axis=1)
    per_draw = np.where(bad, 0.0, per_draw)
    n_used = int(ens.n_prec - np.sum(bad))
    if n_used == 0:
        raise RuntimeError("all fixed-point solves failed")
    p = float(np.sum(per_draw) / n_used)
    good_vals = per_draw[~bad]
    se = float(good_vals.std(ddof=1) / np.sqrt(n_used)) if n_used > 1 else float("nan")
    warnings = {"fixed-point-failures": int(np.sum(bad)),
                "non-primitive-pattern": int(ens.primitive_warning) * ens.n_prec}
    if np.sum(bad) > 0.01 * ens.n_prec:
        warnings["data-quality"] = 1
    return MCEstimate(value=p, std_error=se, n_prec=ens.n_prec, n_used=n_used,
                      master_seed=ens.master_seed, error_bound=error_bound(n_used),
                      warnings=warnings)


def mc_short_time_abundance(params: HyperParams, initial, horizon: int,
                            n_prec: int = DEFAULT_N_PREC, master_seed: int = 0,
                            workers: int = 1,
                            ensemble: PosteriorEnsemble | None = None) -> list[MCEstimate]:
    """Posterior-mean abundance path E[N(t)] for t = 0..horizon.

    Per draw the conditional expectation N(0) M^t is exact; averaging over
    draws integrates out parameter uncertainty. Demographic noise around
    the conditional mean is not included."""
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    ens = _ensemble(params, n_prec, master_seed, workers, ensemble)
    N0 = _as_abundance(initial)
    if N0.shape != (ens.K,):
        raise ValueError(f"initial state must have {ens.K} types")
    x = np.broadcast_to(N0, (ens.n_prec, ens.K)).copy()
    out = []
    for t in range(horizon + 1):
        mean = np.sum(x, axis=0) / ens.n_prec
        se = x.std(axis=0, ddof=1) / np.sqrt(ens.n_prec) if ens.n_prec > 1 \
            else np.full(ens.K, np.nan)
        out.append(MCEstimate(value=mean, std_error=se, n_prec=ens.n_prec,
                              n_used=ens.n_prec, master_seed=ens.master_seed))
        if t < horizon:
            x = np.einsum("ri,rij->rj", x, ens.mean_matrices)
    return out


def _xi_per_draw(ens: PosteriorEnsemble, v: np.ndarray) -> np.ndarray:
    """Xi = sum_j (v_j^2 / min v) sup_i sum_{k>=1} (k^2 - M_ij^2) p_ij(k)."""
    n, K = ens.n_prec, ens.K
    M = ens.mean_matrices
    col_sup = np.zeros((n, K))
    seen = np.zeros((n, K), dtype=bool)
    for (i, j), d in ens._laws.items():
        ks = np.arange(d.shape[1], dtype=float)
        val = d[:, 1:] @ (ks[1:] ** 2) - M[:, i - 1, j - 1] ** 2 * (1 - d[:, 0])
        col = j - 1
        col_sup[:, col] = np.where(seen[:, col], np.maximum(col_sup[:, col], val), val)
        seen[:, col] = True
    vmin = v.min(axis=1, keepdims=True)
    return np.sum(np.where(seen, (v ** 2 / vmin) * col_sup, 0.0), axis=1)


def mc_time_bounds(params: HyperParams, population, alpha: float = 0.05,
                   n_prec: int = DEFAULT_N_PREC, master_seed: int = 0,
                   workers: int = 1, horizon_cap: int = 10 ** 6,
                   ensemble: PosteriorEnsemble | None = None) -> TimeBoundsEstimate:
    """Extinction-time bracket from posterior-averaged survival bounds.

    Per subcritical draw the survival curve is bracketed by the spectral
    upper bound and the second-moment lower bound (both clamped to [0, 1]);
    curves are averaged over draws with lambda < 1 and the bracket read off
    at level alpha: t_plus = first t with mean upper <= alpha, t_minus =
    last t with mean lower >= 1 - alpha."""
    if not 0 < alpha < 0.5:
        raise ValueError("alpha must be in (0, 0.5)")
    ens = _ensemble(params, n_prec, master_seed, workers, ensemble)
    N = _as_abundance(population)
    if N.shape != (ens.K,):
        raise ValueError(f"population must have {ens.K} types")
    lam, v = ens.lambdas, ens.left_vectors
    sub = lam < 1.0
    n_used = int(np.sum(sub))
    if n_used == 0:
        raise RuntimeError("no subcritical draws; time bounds require lambda < 1")
    lam_s = lam[sub]
    v_s = v[sub]
    vmin = v_s.min(axis=1)
    vmax = v_s.max(axis=1)
    w = v_s @ N
    xi = _xi_per_draw(ens, v)[sub]
    pos = xi > 0
    cU = w / vmin
    cL = np.where(pos, (vmax / vmin) ** 2 * (1 - lam_s) / np.where(pos, xi, 1.0) * w, 0.0)

    block = 512
    t_plus = None
    times_list, ubar_list, lbar_list = [], [], []
    t0 = 0
    while t0 <= horizon_cap:
        ts = np.arange(t0, min(t0 + block, horizon_cap + 1))
        pw = lam_s[:, None] ** ts[None, :]
        ubar = np.sum(np.minimum(1.0, cU[:, None] * pw), axis=0) / n_used
        lbar = np.sum(np.clip(cL[:, None] * pw * lam_s[:, None], 0.0, 1.0), axis=0) / n_used
        times_list.append(ts)
        ubar_list.append(ubar)
        lbar_list.append(lbar)
        hit = np.nonzero(ubar <= alpha)[0]
        if len(hit):
            t_plus = int(ts[hit[0]])
            break
        t0 += block
    times = np.concatenate(times_list)
    upper_curve = np.concatenate(ubar_list)
    lower_curve = np.concatenate(lbar_list)
    keep = times <= (t_plus if t_plus is not None else horizon_cap)
    times, upper_curve, lower_curve = times[keep], upper_curve[keep], lower_curve[keep]

    ok = np.nonzero(lower_curve >= 1 - alpha)[0]
    t_minus = int(times[ok[-1]]) if len(ok) else 0
    warnings = {"supercritical-draws": int(ens.n_prec - n_used),
                "degenerate-xi": int(np.sum(~pos)),
                "non-primitive-pattern": int(ens.primitive_warning) * ens.n_prec}
    return TimeBoundsEstimate(t_minus=t_minus, t_plus=t_plus, alpha=alpha,
                              times=times, upper_curve=upper_curve,
                              lower_curve=lower_curve, n_prec=ens.n_prec,
                              n_used=n_used, master_seed=ens.master_seed,
                              warnings=warnings)


def mc_reintroduction(params: HyperParams, n_prec: int = DEFAULT_N_PREC,
                      master_seed: int = 0, workers: int = 1, bins: int = 100,
                      ensemble: PosteriorEnsemble | None = None) -> ReintroductionSummary:
    """Posterior distribution of per-founder extinction probabilities.

    s_i is the probability that the line of one type-i founder dies out;
    its posterior spread tells a planner which founder types make a
    reintroduction robust."""
    ens = _ensemble(params, n_prec, master_seed, workers, ensemble)
    s = ens.extinction_profiles
    bad = ens.fixed_point_failures
    good = s[~bad]
    n_used = good.shape[0]
    if n_used == 0:
        raise RuntimeError("all fixed-point solves failed")
    mean = np.sum(good, axis=0) / n_used
    se = good.std(axis=0, ddof=1) / np.sqrt(n_used) if n_used > 1 \
        else np.full(ens.K, np.nan)
    edges = np.linspace(0.0, 1.0, bins + 1)
    hists = np.stack([np.histogram(good[:, i], bins=edges)[0] for i in range(ens.K)])
    warnings = {"fixed-point-failures": int(np.sum(bad))}
    if np.sum(bad) > 0.01 * ens.n_prec:
        warnings["data-quality"] = 1
    return ReintroductionSummary(mean=mean, std_error=se, bin_edges=edges,
                                 histograms=hists, n_prec=ens.n_prec, n_used=n_used,
                                 master_seed=ens.master_seed, warnings=warnings)


def effective_population_size(params: HyperParams, type_index: int,
                              threshold: float = 0.05,
                              n_prec: int = DEFAULT_N_PREC, master_seed: int = 0,
                              workers: int = 1, max_founders: int = 10 ** 6,
                              ensemble: PosteriorEnsemble | None = None) -> int | None:
    """Smallest number n of type-``type_index`` founders with posterior
    extinction probability E[s_i^n] below ``threshold`` (None if even
    ``max_founders`` founders do not reach it)."""
    if not 0 < threshold < 1:
        raise ValueError("threshold must be in (0,1)")
    ens = _ensemble(params, n_prec, master_seed, workers, ensemble)
    if not 1 <= type_index <= ens.K:
        raise ValueError(f"type_index outside 1..{ens.K}")
    s = ens.extinction_profiles[:, type_index - 1]
    bad = ens.fixed_point_failures
    good = s[~bad]
    n_used = good.shape[0]
    if n_used == 0:
        raise RuntimeError("all fixed-point solves failed")

    def pext(n: int) -> float:
        return float(np.sum(good ** n) / n_used)

    # E[s^n] is nonincreasing in n: gallop then bisect
    if pext(1) < threshold:
        return 1
    lo, hi = 1, 2
    while pext(hi) >= threshold:
        lo = hi
        hi *= 2
        if hi > max_founders:
            return None
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pext(mid) >= threshold:
            lo = mid
        else:
            hi = mid
    return hi
