"""Prior code lengths for the motif set, the atom counts and the degree tables."""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln, spence

from . import catalog
from .configurations import OrbitDegreeTable
from .graphs import Motif

#: normalizer of the universal integer code, sum over n >= 1 of 2^-log2*(n)
UNIVERSAL_CODE_CONSTANT = 2.865064

#: the exact partition-count table is used up to this many quanta
PARTITION_DP_LIMIT = 10_000


def log2_star(n: int) -> float:
    """log2(n) + log2(log2(n)) + ... over the positive terms."""
    if n < 1:
        raise ValueError("log2* is defined for n >= 1")
    total = 0.0
    x = math.log2(n)
    while x > 0:
        total += x
        x = math.log2(x)
    return total


def universal_probability(n: int) -> float:
    return 2.0 ** (-log2_star(n)) / UNIVERSAL_CODE_CONSTANT


def motif_index(m: Motif, max_size: int | None = None) -> int:
    return catalog.motif_index(m, max_size)


@lru_cache(maxsize=None)
def _log_normalizer(directed: bool, max_size: int | None) -> float:
    u = catalog.universe_size(directed, max_size)
    p = np.array([universal_probability(n) for n in range(1, u + 1)])
    return float(-np.log1p(-p).sum())


def motif_set_log_prior(motifs: Iterable[Motif], max_size: int | None = None) -> float:
    """log P(M): independent inclusion of each universe member, conditioned on M nonempty.

    Only the universe of the first motif's directedness is used.
    """
    ms = list(set(motifs))
    if not ms:
        raise ValueError("the motif set must be nonempty")
    directed = ms[0].directed
    if any(m.directed != directed for m in ms):
        raise ValueError("mixed directed and undirected motifs")
    total = -_log_normalizer(directed, max_size)
    for m in ms:
        p = universal_probability(motif_index(m, max_size))
        total += math.log(p) - math.log1p(-p)
    return total


def solve_lambda(n_edges: int, motif_edges: Iterable[int], support: str = "positive") -> float:
    """Rate of the exponential counts prior whose expected edge total is ``n_edges``.

    Returns ``inf`` when only the minimal counts fit (every n_m at its lowest value).
    """
    e = np.asarray(list(motif_edges), dtype=np.float64)
    if e.size == 0:
        raise ValueError("no motifs")
    if support == "positive":
        floor = e.sum()
        if n_edges < floor:
            raise ValueError(f"{n_edges} edges cannot cover one copy of every motif ({floor:g})")
        if n_edges == floor:
            return math.inf

        def excess(lam):
            return float((e / -np.expm1(-lam * e)).sum()) - n_edges
    elif support == "nonnegative":
        if n_edges <= 0:
            return math.inf

        def excess(lam):
            return float((e / np.expm1(lam * e)).sum()) - n_edges
    else:
        raise ValueError(f"unknown support {support!r}")
    hi = 1.0
    while excess(hi) > 0:
        hi *= 2.0
    lo = hi / 2.0
    while excess(lo) < 0 and lo > 1e-300:
        lo /= 2.0
    return brentq(excess, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def counts_log_prior(counts: Mapping[Motif, int], n_edges: int | None = None,
                     support: str = "positive", lam: float | None = None) -> float:
    """log P(n | M) with P(n_m) proportional to exp(-lambda e_m n_m).

    ``n_edges`` defaults to the edge total implied by the counts.
    """
    ms = list(counts)
    e = np.array([m.n_edges for m in ms], dtype=np.float64)
    n = np.array([counts[m] for m in ms], dtype=np.float64)
    if n_edges is None:
        n_edges = int((e * n).sum())
    if lam is None:
        lam = solve_lambda(n_edges, e, support)
    if support == "positive":
        if np.any(n < 1):
            return -math.inf
        if math.isinf(lam):
            return 0.0 if np.all(n == 1) else -math.inf
        return float((-lam * e * (n - 1) + np.log(-np.expm1(-lam * e))).sum())
    if np.any(n < 0):
        return -math.inf
    if math.isinf(lam):
        return 0.0 if np.all(n == 0) else -math.inf
    return float((-lam * e * n + np.log(-np.expm1(-lam * e))).sum())


def _log_binom(n: float, k: float) -> float:
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


def degree_logprior_uniform(degrees: np.ndarray) -> float:
    """Uniform over all degree sequences of N vertices with the observed total."""
    d = np.asarray(degrees)
    n, total = d.size, int(d.sum())
    return -_log_binom(n + total - 1, total)


@lru_cache(maxsize=64)
def _partition_table(parts: int) -> np.ndarray:
    """q(m, parts) for m = 0..PARTITION_DP_LIMIT, as floats."""
    size = PARTITION_DP_LIMIT + 1
    q = np.zeros(size)
    q[0] = 1.0
    for k in range(1, min(parts, PARTITION_DP_LIMIT) + 1):
        rows = -(-size // k)
        buf = np.zeros(rows * k)
        buf[:size] = q
        q = np.cumsum(buf.reshape(rows, k), axis=0).reshape(-1)[:size]
    return q


def _log_q_asymptotic(m: int, n: int) -> float:
    """Large-m approximation of the number of partitions of m into at most n parts."""
    n = min(n, m)
    if n < m ** 0.25:
        return _log_binom(m - 1, n - 1) - float(gammaln(n + 1))
    u = n / math.sqrt(m)

    def fixed(v):
        return v - u * math.sqrt(float(spence(math.exp(-v))))

    # spence(z) is Li2(1 - z); v solves v = u sqrt(Li2(1 - e^-v))
    v = brentq(fixed, 1e-12, 10.0 * u + 10.0)
    ev = math.exp(-v)
    f = v / (2 ** 1.5 * math.pi * u) / math.sqrt(1.0 - (1.0 + u * u / 2.0) * ev)
    g = 2.0 * v / u - u * math.log1p(-ev)
    return math.log(f) - math.log(m) + math.sqrt(m) * g


def restricted_partitions_log(m: int, n: int, limit: int | None = None) -> float:
    """log q(m, n): partitions of ``m`` into at most ``n`` parts."""
    if m < 0 or n < 0:
        raise ValueError("negative arguments")
    if m == 0:
        return 0.0
    if n == 0:
        return -math.inf
    limit = PARTITION_DP_LIMIT if limit is None else limit
    if m <= min(limit, PARTITION_DP_LIMIT):
        return float(np.log(_partition_table(min(n, PARTITION_DP_LIMIT))[m]))
    return _log_q_asymptotic(m, n)


def degree_logprior_hyper(degrees: np.ndarray) -> float:
    """Degree sequence drawn uniformly given its histogram, histogram uniform given the total."""
    d = np.asarray(degrees, dtype=np.int64)
    n, total = d.size, int(d.sum())
    hist = np.bincount(d)
    return float(gammaln(hist + 1).sum() - gammaln(n + 1)) - restricted_partitions_log(total, n)


def degree_logprior(table: OrbitDegreeTable) -> float:
    """Sum over degree components of the better of the two degree priors."""
    total = 0.0
    for vec in table.entries.values():
        total += max(degree_logprior_uniform(vec), degree_logprior_hyper(vec))
    return total
