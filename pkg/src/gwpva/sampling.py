"""Seeded sampling: posterior draws and forward simulation.

Reproducibility contract: every stochastic routine takes a SeedSpec built
from a user-visible master seed and a replicate index. Streams use the
counter-based Philox generator keyed on (master_seed, replicate_index), so
replicate r's stream is identical no matter how many replicates run, in
what order, or on how many workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .inference import HyperParams
from .model import LifeTable, OffspringCap, ParameterDraw, PopulationState, _is_categorical

__all__ = [
    "SeedSpec",
    "Trajectory",
    "sample_dirichlet",
    "sample_parameter_draw",
    "simulate",
    "simulate_extinction_time",
]

_KEY_MOD = 1 << 64


@dataclass(frozen=True)
class SeedSpec:
    """Deterministic stream identity: (master_seed, replicate_index)."""

    master_seed: int
    replicate_index: int = 0

    def __post_init__(self):
        if self.replicate_index < 0:
            raise ValueError("replicate_index must be >= 0")

    def rng(self) -> np.random.Generator:
        key = (self.master_seed % _KEY_MOD) * _KEY_MOD + self.replicate_index % _KEY_MOD
        return np.random.Generator(np.random.Philox(key=key))


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, SeedSpec):
        return seed.rng()
    raise TypeError(f"expected SeedSpec or Generator, got {type(seed).__name__}")


def sample_dirichlet(alpha: np.ndarray, seed) -> np.ndarray:
    """One Dirichlet draw via normalized Gamma variates.

    Gamma draws are taken in category order from a single stream, which
    pins the exact output for a given seed. A zero normalizer (possible
    only by extreme underflow) is redrawn.
    """
    rng = _as_rng(seed)
    a = np.asarray(alpha, dtype=float)
    if (a <= 0).any():
        raise ValueError("alpha must be strictly positive")
    for _ in range(100):
        g = rng.gamma(shape=a)
        s = g.sum()
        if s > 0:
            return g / s
    raise RuntimeError("Dirichlet sampling underflowed repeatedly")


def sample_parameter_draw(params: HyperParams, seed) -> ParameterDraw:
    """Draw all offspring laws from independent Dirichlet posteriors.

    Pairs are visited in sorted (i, j) order on one stream, so the draw is
    a pure function of (params, seed).
    """
    rng = _as_rng(seed)
    laws = {}
    for pair in sorted(params.alpha):
        laws[pair] = sample_dirichlet(params.alpha[pair], rng)
    return ParameterDraw(params.cap, laws)


@dataclass(frozen=True)
class Trajectory:
    """A simulated population path with its induced life table.

    ``extinct_at`` is the first time the population is empty (None if it
    survives to the horizon); ``truncated`` is set when the total size
    exceeded the overflow cap and the run stopped early.
    """

    states: list[PopulationState]
    table: LifeTable
    extinct_at: int | None
    truncated: bool = False

    @property
    def final(self) -> PopulationState:
        return self.states[-1]


def _step(draw: ParameterDraw, N: tuple[int, ...], t: int, rng: np.random.Generator,
          counts: dict) -> tuple[int, ...]:
    """One generation; records n[i, j](k, t) for all nonzero counts."""
    K = draw.K
    new = [0] * K
    for (i, j) in sorted(draw.p):
        n_parents = N[i - 1]
        if n_parents == 0:
            continue
        law = draw.p[(i, j)]
        if _is_categorical(law):
            v = np.asarray(law, dtype=float)
            c = rng.multinomial(n_parents, v / v.sum())
            for k, n in enumerate(c):
                if n:
                    counts[(i, j, k, t)] = int(n)
                    new[j - 1] += k * int(n)
        else:
            ks = law.sample_counts(rng, n_parents)
            for k, n in sorted(ks.items()):
                if n:
                    counts[(i, j, k, t)] = int(n)
                    new[j - 1] += k * int(n)
    return tuple(new)


def simulate(draw: ParameterDraw, initial: PopulationState, horizon: int, seed,
             overflow_cap: int = 10 ** 12) -> Trajectory:
    """Simulate the branching process for ``horizon`` steps.

    Offspring are realized pair-by-pair with multinomial draws over parent
    counts, which is distributionally identical to summing independent
    per-individual offspring. Stops early at extinction or overflow.
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if initial.K != draw.K:
        raise ValueError("initial state dimension mismatch")
    rng = _as_rng(seed)
    states = [PopulationState(initial.N, time=0)]
    counts: dict = {}
    extinct_at = None
    truncated = False
    N = initial.N
    last_t = -1
    for t in range(horizon):
        if sum(N) == 0:
            extinct_at = t
            break
        if sum(N) > overflow_cap:
            truncated = True
            break
        N = _step(draw, N, t, rng, counts)
        last_t = t
        states.append(PopulationState(N, time=t + 1))
    else:
        if sum(N) == 0:
            extinct_at = horizon
    table = LifeTable(draw.K, max(last_t, 0), counts)
    return Trajectory(states=states, table=table, extinct_at=extinct_at,
                      truncated=truncated)


def simulate_extinction_time(draw: ParameterDraw, initial: PopulationState, seed,
                             max_time: int = 10 ** 6,
                             overflow_cap: int = 10 ** 12) -> int | None:
    """First time the population is empty; None if censored at max_time
    or stopped by the overflow cap (an exploding path)."""
    rng = _as_rng(seed)
    N = initial.N
    for t in range(1, max_time + 1):
        if sum(N) > overflow_cap:
            return None
        N = _step(draw, N, t - 1, rng, {})
        if sum(N) == 0:
            return t
    return None
