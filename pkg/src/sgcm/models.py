"""Microcanonical likelihoods of subgraph configurations.

All functions return natural logarithms.  The degree-corrected likelihoods
count stub matchings exactly and then apply two first-order corrections for
matchings that are not valid configurations: copies whose vertices collapse
onto the same graph vertex, and pairs of identical copies.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Hashable, Mapping

import numpy as np
from scipy.special import gammaln

from .configurations import Granularity, OrbitDegreeTable, motif_layout
from .graphs import Motif


class ModelVariant(str, enum.Enum):
    HOMOGENEOUS = "homogeneous"
    DC_ORBIT = "dc_orbit"
    DC_MOTIF = "dc_motif"
    DC_TOTAL = "dc_total"
    DC_DIRECTED = "dc_directed"

    @property
    def granularity(self) -> Granularity | None:
        return {
            ModelVariant.DC_ORBIT: Granularity.ORBIT,
            ModelVariant.DC_MOTIF: Granularity.MOTIF,
            ModelVariant.DC_TOTAL: Granularity.TOTAL,
            ModelVariant.DC_DIRECTED: Granularity.DIRECTED,
        }.get(self)

    @property
    def degree_corrected(self) -> bool:
        return self is not ModelVariant.HOMOGENEOUS


@dataclass
class LikelihoodTerms:
    """Pieces of a likelihood; ``log_p = -log_omega + contraction + duplicate``."""

    log_p: float
    log_omega: float = 0.0
    contraction: dict[Motif, float] = field(default_factory=dict)
    duplicate: dict[Motif, float] = field(default_factory=dict)
    per_motif: dict[Motif, float] = field(default_factory=dict)


def log_falling(n: int, k: int) -> float:
    """log(n (n-1) ... (n-k+1))."""
    if k < 0 or k > n:
        return -math.inf
    return float(np.log(np.arange(n - k + 1, n + 1, dtype=np.float64)).sum())


def log_binom_big(h: int | float, log_h: float, n: int) -> float:
    """log C(h, n) for possibly astronomically large ``h`` without cancellation.

    ``log_h`` must be log(h) computed accurately by the caller.
    """
    if n == 0:
        return 0.0
    if n > h:
        return -math.inf
    j = np.arange(n, dtype=np.float64)
    return float(n * log_h + np.log1p(-j / h).sum() - gammaln(n + 1))


def loglik_homogeneous(counts: Mapping[Motif, int], n_vertices: int) -> LikelihoodTerms:
    """Uniform distribution over configurations with fixed atom counts."""
    total = 0.0
    per = {}
    for m, n in counts.items():
        if n == 0:
            per[m] = 0.0
            continue
        log_h = log_falling(n_vertices, m.size) - math.log(m.aut_order)
        if m.size > n_vertices:
            raise ValueError(f"{m!r} does not fit in {n_vertices} vertices")
        h = math.perm(n_vertices, m.size) // m.aut_order
        if n > h:
            # more copies than distinct placements: no configuration exists
            return LikelihoodTerms(log_p=-math.inf, log_omega=math.inf)
        per[m] = -log_binom_big(h, log_h, n)
        total += per[m]
    return LikelihoodTerms(log_p=total, log_omega=-total, per_motif=per)


def _component_stats(vec: np.ndarray) -> tuple[float, float, float]:
    d = vec.astype(np.float64)
    return float(d.sum()), float((d * (d - 1.0)).sum()), float(gammaln(d + 1.0).sum())


def _dc_terms(entries: Mapping[Hashable, np.ndarray], layouts: Mapping[Motif, Mapping[Hashable, int]],
              counts: Mapping[Motif, int], corrections: bool = True) -> LikelihoodTerms:
    stats = {k: _component_stats(v) for k, v in entries.items()}
    for k, (s, _, _) in stats.items():
        if s != int(s):
            raise ValueError("non-integer degrees")
    # stub totals must be consistent with the atom counts
    need: dict[Hashable, int] = {}
    for m, n in counts.items():
        for k, c in layouts[m].items():
            need[k] = need.get(k, 0) + c * n
    for k in set(need) | set(stats):
        have = stats.get(k, (0.0, 0.0, 0.0))[0]
        if int(have) != need.get(k, 0):
            raise ValueError(f"degree sum of component {k!r} is {have:g}, atom counts need {need.get(k, 0)}")

    log_omega = 0.0
    for s, _, lf in stats.values():
        log_omega += float(gammaln(s + 1.0)) - lf
    per = {}
    for m, n in counts.items():
        t = float(gammaln(n + 1.0)) + n * math.log(m.aut_order)
        per[m] = t
        log_omega -= t

    contraction: dict[Motif, float] = {}
    duplicate: dict[Motif, float] = {}
    if corrections:
        cross_cache: dict[tuple, float] = {}
        for m, n in counts.items():
            if n == 0:
                continue
            lay = list(layouts[m].items())
            lam = 0.0
            dup = m.aut_order * n * n / 2.0
            for a, (k, c) in enumerate(lay):
                s, q, _ = stats[k]
                lam += c * (c - 1) / 2.0 * q / (s * s)
                dup *= (q / (s * s)) ** c
                for k2, c2 in lay[a + 1:]:
                    key = (k, k2)
                    if key not in cross_cache:
                        x = float(np.dot(entries[k].astype(np.float64), entries[k2].astype(np.float64)))
                        cross_cache[key] = x / (s * stats[k2][0])
                    lam += c * c2 * cross_cache[key]
            contraction[m] = n * lam
            duplicate[m] = dup
    log_p = -log_omega + sum(contraction.values()) + sum(duplicate.values())
    return LikelihoodTerms(log_p=log_p, log_omega=log_omega, contraction=contraction,
                           duplicate=duplicate, per_motif=per)


def log_matchings(m: Motif, orbit_degrees: Mapping[int, np.ndarray], n: int) -> float:
    """log of the number of ways to match the orbit stubs of ``n`` copies of ``m``.

    Stub permutations per orbit, divided by the orderings of the copies and
    their automorphisms.  Vertices are distinguishable, so this counts stub
    matchings up to permutations of each vertex's own stubs.
    """
    entries = {(m, i): np.asarray(v) for i, v in orbit_degrees.items()}
    return _dc_terms(entries, {m: motif_layout(m, Granularity.ORBIT)}, {m: n}, corrections=False).log_omega


def _table_terms(table: OrbitDegreeTable, counts: Mapping[Motif, int] | None,
                 corrections: bool) -> LikelihoodTerms:
    counts = dict(table.counts if counts is None else counts)
    layouts = {m: motif_layout(m, table.granularity) for m in counts}
    entries = {k: v for k, v in table.entries.items() if np.any(v)}
    return _dc_terms(entries, layouts, counts, corrections)


def loglik_dc_orbit(table: OrbitDegreeTable, counts: Mapping[Motif, int] | None = None,
                    corrections: bool = True) -> LikelihoodTerms:
    """Orbit-level degree-corrected likelihood."""
    if table.granularity is not Granularity.ORBIT:
        raise ValueError("expected an orbit-level degree table")
    return _table_terms(table, counts, corrections)


def loglik_dc_coarse(table: OrbitDegreeTable, counts: Mapping[Motif, int] | None = None,
                     corrections: bool = True) -> LikelihoodTerms:
    """Motif-, total- or directed-level likelihood; orbit tables are aggregated first."""
    if table.granularity is Granularity.ORBIT:
        raise ValueError("pass an aggregated table, or use loglik_dc_orbit")
    return _table_terms(table, counts, corrections)


def loglik(variant: ModelVariant, table: OrbitDegreeTable,
           counts: Mapping[Motif, int] | None = None, corrections: bool = True) -> LikelihoodTerms:
    """Dispatch on the model variant; ``table`` is an orbit-level table."""
    variant = ModelVariant(variant)
    if variant is ModelVariant.HOMOGENEOUS:
        return loglik_homogeneous(table.counts if counts is None else counts, table.n_vertices)
    if variant is ModelVariant.DC_ORBIT:
        return loglik_dc_orbit(table, counts, corrections)
    return loglik_dc_coarse(table.aggregate(variant.granularity), counts, corrections)
