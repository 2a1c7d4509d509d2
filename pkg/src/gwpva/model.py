"""Domain types for multi-type branching populations and life-table data.

Types are 1-based: an individual of type ``i`` (1..K) produces, per unit
time and independently for each child type ``j``, a random number of
type-``j`` offspring bounded by a structural cap ``kappa[i, j]``.
``kappa == 0`` marks a transition as structurally impossible; such pairs
carry no estimated parameters (all mass on zero offspring).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

Pair = tuple[int, int]

__all__ = [
    "OffspringCap",
    "LifeTable",
    "PopulationState",
    "ParameterDraw",
    "Violation",
    "validate_life_table",
    "aggregate_counts",
    "abundances_from_table",
]


@dataclass(frozen=True)
class OffspringCap:
    """Structural offspring caps kappa[i, j] for a K-type population.

    Pairs absent from ``kappa`` (or mapped to 0) are forbidden transitions.
    """

    K: int
    kappa: Mapping[Pair, int]

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        for (i, j), cap in self.kappa.items():
            if not (1 <= i <= self.K and 1 <= j <= self.K):
                raise ValueError(f"pair ({i},{j}) outside 1..{self.K}")
            if cap < 0:
                raise ValueError(f"kappa[{i},{j}] = {cap} is negative")

    @classmethod
    def full(cls, K: int, cap: int) -> "OffspringCap":
        """Every transition allowed with the same cap."""
        return cls(K, {(i, j): cap for i in range(1, K + 1) for j in range(1, K + 1)})

    def cap_of(self, i: int, j: int) -> int:
        return self.kappa.get((i, j), 0)

    def is_forbidden(self, i: int, j: int) -> bool:
        return self.cap_of(i, j) == 0

    def pairs(self) -> list[Pair]:
        """Non-forbidden pairs in deterministic (row-major) order."""
        return sorted(p for p, c in self.kappa.items() if c > 0)


@dataclass(frozen=True)
class LifeTable:
    """Observed transition counts n[i, j](k, t).

    ``counts`` maps (i, j, k, t) to the number of type-i individuals that
    produced exactly k type-j offspring between times t and t+1. Entries
    are exact integers; absent keys mean zero. ``horizon`` is the last
    observation time T (transitions cover t = 0..T).
    """

    K: int
    horizon: int
    counts: Mapping[tuple[int, int, int, int], int] = field(default_factory=dict)

    def __post_init__(self):
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        for (i, j, k, t) in self.counts:
            if not (1 <= i <= self.K and 1 <= j <= self.K):
                raise ValueError(f"type pair ({i},{j}) outside 1..{self.K}")
            if k < 0 or t < 0 or t > self.horizon:
                raise ValueError(f"bad key (i={i}, j={j}, k={k}, t={t})")

    def count(self, i: int, j: int, k: int, t: int) -> int:
        return self.counts.get((i, j, k, t), 0)

    def observed_pairs(self) -> list[Pair]:
        return sorted({(i, j) for (i, j, _, _) in self.counts})

    def concat(self, other: "LifeTable") -> "LifeTable":
        """Append another table after this one on the time axis."""
        if other.K != self.K:
            raise ValueError("type counts differ")
        merged = dict(self.counts)
        offset = self.horizon + 1
        for (i, j, k, t), n in other.counts.items():
            merged[(i, j, k, t + offset)] = merged.get((i, j, k, t + offset), 0) + n
        return LifeTable(self.K, self.horizon + other.horizon + 1, merged)


@dataclass(frozen=True)
class PopulationState:
    """Abundance per type at a given time; extinct iff all zero."""

    N: tuple[int, ...]
    time: int = 0

    def __post_init__(self):
        if any(n < 0 for n in self.N):
            raise ValueError("abundances must be nonnegative")

    @property
    def K(self) -> int:
        return len(self.N)

    @property
    def total(self) -> int:
        return sum(self.N)

    @property
    def extinct(self) -> bool:
        return self.total == 0


def _is_categorical(law) -> bool:
    return isinstance(law, (np.ndarray, list, tuple))


@dataclass(frozen=True)
class ParameterDraw:
    """One realization of all offspring laws p[i, j].

    Values are probability vectors of length kappa[i, j] + 1 over offspring
    counts 0..kappa. Forbidden pairs are omitted (point mass at zero).
    A value may instead be any object exposing ``mean()``, ``pgf(s)``,
    ``second_moment()`` and ``sample_counts(rng, n)`` (e.g. an unbounded
    Poisson offspring law); numeric code dispatches on that.
    """

    cap: OffspringCap
    p: Mapping[Pair, np.ndarray]

    def __post_init__(self):
        for pair in self.cap.pairs():
            if pair not in self.p:
                raise ValueError(f"missing law for pair {pair}")
        for pair, law in self.p.items():
            if self.cap.is_forbidden(*pair):
                raise ValueError(f"law supplied for forbidden pair {pair}")
            if _is_categorical(law):
                v = np.asarray(law, dtype=float)
                if v.ndim != 1 or len(v) != self.cap.cap_of(*pair) + 1:
                    raise ValueError(f"law for {pair} has wrong length")
                if (v < -1e-15).any() or (v > 1 + 1e-12).any():
                    raise ValueError(f"law for {pair} has entries outside [0,1]")
                if abs(v.sum() - 1.0) > 1e-12:
                    raise ValueError(f"law for {pair} sums to {v.sum()!r}, not 1")

    @property
    def K(self) -> int:
        return self.cap.K


@dataclass(frozen=True)
class Violation:
    kind: str
    location: tuple
    message: str


def validate_life_table(table: LifeTable, cap: OffspringCap) -> list[Violation]:
    """Report every structural violation in a life table.

    Violations are data, not exceptions: an empty list means valid.
    Checks negative counts, offspring beyond the cap, counts on forbidden
    transitions, and row-consistency (for fixed i and t the number of
    classified parents must agree across observed child types).
    """
    out: list[Violation] = []
    if cap.K != table.K:
        out.append(Violation("type-mismatch", (), f"table K={table.K}, cap K={cap.K}"))
        return out
    for (i, j, k, t), n in sorted(table.counts.items()):
        if n < 0:
            out.append(Violation("negative-count", (i, j, k, t), f"count {n} < 0"))
        if k > cap.cap_of(i, j):
            kind = "forbidden-pair" if cap.is_forbidden(i, j) else "offspring-exceeds-cap"
            out.append(Violation(kind, (i, j, k, t), f"k={k} > kappa={cap.cap_of(i, j)}"))
    # row-consistency among child types actually observed for each parent type
    sums: dict[tuple[int, int, int], int] = {}
    for (i, j, k, t), n in table.counts.items():
        sums[(i, t, j)] = sums.get((i, t, j), 0) + n
    by_row: dict[tuple[int, int], dict[int, int]] = {}
    for (i, t, j), s in sums.items():
        by_row.setdefault((i, t), {})[j] = s
    for (i, t), row in sorted(by_row.items()):
        vals = set(row.values())
        if len(vals) > 1:
            out.append(Violation(
                "row-inconsistent", (i, t),
                f"parent totals differ across child types: { {j: row[j] for j in sorted(row)} }"))
    return out


def aggregate_counts(table: LifeTable) -> dict[tuple[int, int, int], int]:
    """Sum counts over time: (i, j, k) -> sum_t n[i, j](k, t). Exact."""
    agg: dict[tuple[int, int, int], int] = {}
    for (i, j, k, _), n in table.counts.items():
        agg[(i, j, k)] = agg.get((i, j, k), 0) + n
    return agg


def abundances_from_table(table: LifeTable) -> list[PopulationState]:
    """Recover abundances N(t) for t = 0..T+1 from a complete table.

    N_i(t) is the parent total of type i at time t (identical across
    observed child types, else the table is rejected); N_j(t+1) is the
    offspring total sum_i sum_k k * n[i, j](k, t).
    """
    bad = [v for v in validate_life_table(table, OffspringCap.full(table.K, 10**18))
           if v.kind == "row-inconsistent"]
    if bad:
        raise ValueError(f"row-inconsistent table at (type, time) {bad[0].location}")
    T, K = table.horizon, table.K
    N = np.zeros((T + 2, K), dtype=object)  # exact integer arithmetic
    for (i, j, k, t), n in table.counts.items():
        N[t + 1][j - 1] += k * n
    # parent totals: take the (consistent) per-type sum from any child type
    parents = np.zeros((T + 1, K), dtype=object)
    seen = np.zeros((T + 1, K), dtype=bool)
    tmp: dict[tuple[int, int, int], int] = {}
    for (i, j, k, t), n in table.counts.items():
        tmp[(i, j, t)] = tmp.get((i, j, t), 0) + n
    for (i, j, t), s in tmp.items():
        parents[t][i - 1] = s
        seen[t][i - 1] = True
    # observed parent totals override offspring-derived values at t >= 1
    out = []
    for t in range(T + 2):
        if t <= T:
            row = tuple(int(parents[t][c]) if seen[t][c] else int(N[t][c]) for c in range(K))
        else:
            row = tuple(int(x) for x in N[t])
        out.append(PopulationState(row, time=t))
    return out
