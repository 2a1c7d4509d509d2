"""On-disk formats: life-table CSV, prior-config JSON, posterior JSON.

Life tables are CSV with header ``i,j,k,t,count``; ``#`` starts a comment
and blank lines are ignored. Counts are exact integers; a repeated
(i, j, k, t) key is an error, not a merge.

Prior configs and fitted posteriors are JSON documents (schemas in the
README); unknown keys are rejected so that typos fail loudly.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .extensions import BetaParams, GammaParams, thinned_offspring_law
from .inference import (HyperParams, PosteriorParams, credible_interval,
                        posterior_mean_matrix, prior_expert, prior_from_moments)
from .model import LifeTable, OffspringCap, Pair

__all__ = [
    "ParseError",
    "PriorConfig",
    "parse_life_table",
    "format_life_table",
    "parse_abundance_series",
    "parse_prior_config",
    "posterior_to_document",
    "posterior_from_document",
    "FORMAT_VERSION",
]

FORMAT_VERSION = 1
_TABLE_HEADER = ["i", "j", "k", "t", "count"]


class ParseError(ValueError):
    """Malformed input file; message carries the line or field at fault."""


def parse_life_table(text: str, K: int | None = None) -> LifeTable:
    """Parse life-table CSV; K defaults to the largest type index seen."""
    counts: dict[tuple[int, int, int, int], int] = {}
    lines = text.splitlines()
    header_seen = False
    first: dict[tuple, int] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = [f.strip() for f in next(csv.reader(io.StringIO(line)))]
        if not header_seen:
            if [f.lower() for f in fields] != _TABLE_HEADER:
                raise ParseError(f"line {lineno}: expected header {','.join(_TABLE_HEADER)}")
            header_seen = True
            continue
        if len(fields) != 5:
            raise ParseError(f"line {lineno}: expected 5 fields, got {len(fields)}")
        try:
            i, j, k, t, n = (int(f) for f in fields)
        except ValueError:
            raise ParseError(f"line {lineno}: all fields must be integers") from None
        if n < 0:
            raise ParseError(f"line {lineno}: negative count {n}")
        key = (i, j, k, t)
        if key in counts:
            raise ParseError(
                f"line {lineno}: duplicate entry for (i={i}, j={j}, k={k}, t={t}) "
                f"(first at line {first[key]})")
        counts[key] = n
        first[key] = lineno
    if not header_seen:
        raise ParseError("empty input: missing header")
    if not counts:
        return LifeTable(K if K is not None else 1, 0, {})
    inferred = max(max(i for i, _, _, _ in counts), max(j for _, j, _, _ in counts))
    horizon = max(t for _, _, _, t in counts)
    try:
        return LifeTable(K if K is not None else inferred, horizon, counts)
    except ValueError as e:
        raise ParseError(str(e)) from None


def format_life_table(table: LifeTable) -> str:
    """Serialize to CSV; parse_life_table is its exact inverse."""
    out = [",".join(_TABLE_HEADER)]
    for (i, j, k, t), n in sorted(table.counts.items()):
        out.append(f"{i},{j},{k},{t},{n}")
    return "\n".join(out) + "\n"


def parse_abundance_series(text: str) -> tuple[np.ndarray, np.ndarray]:
    """Parse an abundance series CSV with header ``t,N``."""
    ts, Ns = [], []
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        if not header_seen:
            if [f.lower() for f in fields] != ["t", "n"]:
                raise ParseError(f"line {lineno}: expected header t,N")
            header_seen = True
            continue
        if len(fields) != 2:
            raise ParseError(f"line {lineno}: expected 2 fields")
        try:
            ts.append(float(fields[0]))
            Ns.append(float(fields[1]))
        except ValueError:
            raise ParseError(f"line {lineno}: fields must be numeric") from None
    if not Ns:
        raise ParseError("no data rows")
    return np.asarray(ts), np.asarray(Ns)


@dataclass(frozen=True)
class PriorConfig:
    """Parsed prior specification: structure plus hyperparameters.

    Categorical pairs live in ``hyper``; Poisson-rate pairs (unbounded
    offspring) in ``poisson`` and are absent from the cap."""

    cap: OffspringCap
    hyper: HyperParams
    poisson: Mapping[Pair, GammaParams] = field(default_factory=dict)
    warnings: tuple[str, ...] = ()


def _build_alpha(spec: dict, kappa: int, where: str,
                 warnings: list[str]) -> np.ndarray:
    rule = spec.get("rule")
    known = {
        "flat": {"rule"},
        "alpha": {"rule", "alpha"},
        "moments": {"rule", "means", "variances"},
        "expert": {"rule", "weight", "guess"},
    }
    if rule not in known:
        raise ParseError(f"{where}: unknown prior rule {rule!r}")
    extra = set(spec) - known[rule]
    if extra:
        raise ParseError(f"{where}: unexpected keys {sorted(extra)}")
    try:
        if rule == "flat":
            return np.ones(kappa + 1)
        if rule == "alpha":
            a = np.asarray(spec["alpha"], dtype=float)
            if len(a) != kappa + 1:
                raise ParseError(f"{where}: alpha must have kappa+1 = {kappa + 1} entries")
            return a
        if rule == "moments":
            a = prior_from_moments(spec["means"], spec["variances"])
            if len(a) != kappa + 1:
                raise ParseError(f"{where}: moments must cover kappa+1 = {kappa + 1} categories")
            if (np.asarray(spec["variances"], dtype=float) >= 1).any():
                warnings.append(f"{where}: elicited variance >= 1; "
                                "falling back to the flat prior for those categories")
            return a
        return prior_expert(spec["weight"], spec["guess"])
    except KeyError as e:
        raise ParseError(f"{where}: missing key {e}") from None
    except ValueError as e:
        raise ParseError(f"{where}: {e}") from None


def parse_prior_config(text: str) -> PriorConfig:
    """Parse a prior-config JSON document.

    Pairs omitted from the document are structurally forbidden."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ParseError(f"format_version must be {FORMAT_VERSION}")
    extra = set(doc) - {"format_version", "K", "pairs"}
    if extra:
        raise ParseError(f"unexpected top-level keys {sorted(extra)}")
    K = doc.get("K")
    if not isinstance(K, int) or K < 1:
        raise ParseError("K must be a positive integer")
    pairs = doc.get("pairs")
    if not isinstance(pairs, list) or not pairs:
        raise ParseError("pairs must be a nonempty list")
    kappa: dict[Pair, int] = {}
    alpha: dict[Pair, np.ndarray] = {}
    poisson: dict[Pair, GammaParams] = {}
    warnings: list[str] = []
    for idx, entry in enumerate(pairs):
        where = f"pairs[{idx}]"
        if not isinstance(entry, dict):
            raise ParseError(f"{where}: must be an object")
        try:
            i, j = int(entry["i"]), int(entry["j"])
        except (KeyError, TypeError, ValueError):
            raise ParseError(f"{where}: needs integer i and j") from None
        if not (1 <= i <= K and 1 <= j <= K):
            raise ParseError(f"{where}: pair ({i},{j}) outside 1..{K}")
        if (i, j) in kappa or (i, j) in poisson:
            raise ParseError(f"{where}: duplicate pair ({i},{j})")
        law = entry.get("law", "categorical")
        if law == "categorical":
            extra = set(entry) - {"i", "j", "law", "kappa", "prior"}
            if extra:
                raise ParseError(f"{where}: unexpected keys {sorted(extra)}")
            kap = entry.get("kappa")
            if not isinstance(kap, int) or kap < 1:
                raise ParseError(f"{where}: kappa must be an integer >= 1")
            kappa[(i, j)] = kap
            alpha[(i, j)] = _build_alpha(entry.get("prior", {"rule": "flat"}), kap,
                                         where, warnings)
        elif law == "thinned":
            # sex-ratio-thinned litter model, materialized as an expert-rule
            # categorical prior: the induced female-offspring law at the
            # prior-mean sex ratio, carrying the stated pseudo-observation weight
            extra = set(entry) - {"i", "j", "law", "prior"}
            if extra:
                raise ParseError(f"{where}: unexpected keys {sorted(extra)}")
            spec = entry.get("prior", {})
            try:
                litter = np.asarray(spec["litter"], dtype=float)
                a, b = (float(x) for x in spec["sex_ratio"])
                weight = float(spec.get("weight", 1.0))
            except (KeyError, TypeError, ValueError) as e:
                raise ParseError(f"{where}: thinned prior needs litter, sex_ratio "
                                 f"({e})") from None
            try:
                guess = thinned_offspring_law(litter, BetaParams(a, b).mean)
                alpha[(i, j)] = prior_expert(weight, guess)
            except ValueError as e:
                raise ParseError(f"{where}: {e}") from None
            kappa[(i, j)] = len(litter) - 1
        elif law == "poisson":
            extra = set(entry) - {"i", "j", "law", "prior"}
            if extra:
                raise ParseError(f"{where}: unexpected keys {sorted(extra)}")
            prior = entry.get("prior", {})
            try:
                poisson[(i, j)] = GammaParams(float(prior["shape"]), float(prior["rate"]))
            except (KeyError, TypeError, ValueError) as e:
                raise ParseError(f"{where}: poisson prior needs positive shape and rate "
                                 f"({e})") from None
        else:
            raise ParseError(f"{where}: unknown law {law!r}")
    cap = OffspringCap(K, kappa)
    return PriorConfig(cap=cap, hyper=HyperParams(cap, alpha), poisson=poisson,
                       warnings=tuple(warnings))


def posterior_to_document(post: PosteriorParams,
                          poisson: Mapping[Pair, GammaParams] | None = None,
                          level: float = 0.90, meta: dict | None = None) -> dict:
    """Render a fitted posterior as a JSON-ready document with summaries."""
    pairs = []
    for (i, j) in sorted(post.alpha):
        a = np.asarray(post.alpha[(i, j)], dtype=float)
        tot = float(a.sum())
        pairs.append({
            "i": i, "j": j, "law": "categorical",
            "alpha": [float(x) for x in a],
            "mean": [float(x / tot) for x in a],
            f"credible_{int(round(level * 100))}": [
                list(credible_interval(a, k, level)) for k in range(len(a))],
        })
    for (i, j) in sorted(poisson or {}):
        g = poisson[(i, j)]
        pairs.append({
            "i": i, "j": j, "law": "poisson",
            "shape": g.shape, "rate": g.rate, "mean": g.mean,
            f"credible_{int(round(level * 100))}": list(g.credible_interval(level)),
        })
    doc = {
        "format_version": FORMAT_VERSION,
        "K": post.K,
        "pairs": pairs,
        "mean_matrix": [[float(x) for x in row] for row in posterior_mean_matrix(post)],
    }
    if meta:
        doc["meta"] = meta
    return doc


def posterior_from_document(doc: dict) -> tuple[PosteriorParams, dict[Pair, GammaParams]]:
    """Rebuild posterior parameters from a fitted-posterior document."""
    if not isinstance(doc, dict) or doc.get("format_version") != FORMAT_VERSION:
        raise ParseError(f"format_version must be {FORMAT_VERSION}")
    K = doc.get("K")
    if not isinstance(K, int) or K < 1:
        raise ParseError("K must be a positive integer")
    kappa: dict[Pair, int] = {}
    alpha: dict[Pair, np.ndarray] = {}
    poisson: dict[Pair, GammaParams] = {}
    for idx, entry in enumerate(doc.get("pairs", [])):
        where = f"pairs[{idx}]"
        try:
            i, j = int(entry["i"]), int(entry["j"])
            law = entry.get("law", "categorical")
            if law == "categorical":
                a = np.asarray(entry["alpha"], dtype=float)
                kappa[(i, j)] = len(a) - 1
                alpha[(i, j)] = a
            elif law == "poisson":
                poisson[(i, j)] = GammaParams(float(entry["shape"]), float(entry["rate"]))
            else:
                raise ParseError(f"{where}: unknown law {law!r}")
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"{where}: {e}") from None
    cap = OffspringCap(K, kappa)
    try:
        return PosteriorParams(cap, alpha), poisson
    except ValueError as e:
        raise ParseError(str(e)) from None
