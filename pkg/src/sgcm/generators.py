"""Samplers for the homogeneous and degree-corrected ensembles, plus a brute-force oracle."""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Hashable, Iterator, Mapping

import numpy as np

from .configurations import (Granularity, OrbitDegreeTable, Placement, SubgraphConfiguration,
                             motif_layout, position_component, project)
from .graphs import Graph, Motif

POLICIES = ("reject", "discard")


class GeneratorError(ValueError):
    """Infeasible spec or too many rejected samples."""


@dataclass
class GeneratorSpec:
    """What to sample.

    Homogeneous specs give ``counts``; degree-corrected specs give a degree
    ``table`` (any granularity) and the counts it implies.
    """

    n_vertices: int
    counts: dict[Motif, int]
    table: OrbitDegreeTable | None = None
    seed: int | None = None
    policy: str = "reject"
    max_attempts: int = 100_000

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise GeneratorError(f"unknown policy {self.policy!r}")
        if self.table is not None:
            _check_table(self.table, self.counts)


@dataclass
class Sample:
    configuration: SubgraphConfiguration
    graph: Graph
    multiplicity: Counter
    attempts: int = 1


def _check_table(table: OrbitDegreeTable, counts: Mapping[Motif, int]) -> None:
    need: dict[Hashable, int] = {}
    for m, n in counts.items():
        for k, c in motif_layout(m, table.granularity).items():
            need[k] = need.get(k, 0) + c * n
    for k in set(need) | set(table.entries):
        vec = table.component(k)
        if np.any(vec < 0):
            raise GeneratorError(f"negative degrees in component {k!r}")
        if int(vec.sum()) != need.get(k, 0):
            raise GeneratorError(f"component {k!r} has {int(vec.sum())} stubs, counts need {need.get(k, 0)}")


def _rng(spec_or_rng) -> np.random.Generator:
    if isinstance(spec_or_rng, np.random.Generator):
        return spec_or_rng
    return np.random.default_rng(spec_or_rng)


def sample_homogeneous(spec: GeneratorSpec, rng: np.random.Generator | None = None) -> Sample:
    """Uniform draw of n_m distinct m-subgraphs of the complete graph for every m."""
    rng = _rng(spec.seed if rng is None else rng)
    n = spec.n_vertices
    placements: list[Placement] = []
    for m in sorted(spec.counts, key=lambda m: (m.size, m.n_edges, m.code)):
        want = spec.counts[m]
        if want == 0:
            continue
        if m.size > n:
            raise GeneratorError(f"{m!r} does not fit in {n} vertices")
        total = math.perm(n, m.size) // m.aut_order
        if want > total:
            raise GeneratorError(f"{want} copies of {m!r} exceed the {total} available")
        chosen: set[Placement] = set()
        if 2 * want > total:
            # dense request: enumerate and choose directly
            every = sorted({Placement.make(m, t) for t in itertools.permutations(range(n), m.size)},
                           key=lambda p: p.vertices)
            idx = rng.choice(len(every), size=want, replace=False)
            chosen = {every[i] for i in sorted(idx)}
        while len(chosen) < want:
            vs = rng.choice(n, size=m.size, replace=False)
            chosen.add(Placement.make(m, vs.tolist()))
        placements.extend(sorted(chosen, key=lambda p: p.vertices))
    c = SubgraphConfiguration(n, placements)
    g, mult = project(c, directed=_directed(spec.counts))
    return Sample(c, g, mult)


def _directed(counts: Mapping[Motif, int]) -> bool:
    return any(m.directed for m in counts)


def _slots(counts: Mapping[Motif, int], granularity: Granularity):
    """For each component, the (motif, position) slots in fill order."""
    order = sorted((m for m in counts if counts[m] > 0), key=lambda m: (m.size, m.n_edges, m.code))
    slots: dict[Hashable, list[tuple[Motif, int]]] = {}
    for m in order:
        for p in range(m.size):
            slots.setdefault(position_component(m, p, granularity), []).append((m, p))
    return order, slots


def _fill(order, slots, counts, stubs: Mapping[Hashable, np.ndarray]) -> dict[Motif, np.ndarray]:
    """Assign shuffled stubs (last axis) to placement arrays of shape (..., n_m, |m|)."""
    batch = next(iter(stubs.values())).shape[:-1]
    out = {m: np.empty(batch + (counts[m], m.size), dtype=np.int64) for m in order}
    for k, sl in slots.items():
        arr = stubs[k]
        start = 0
        for m, p in sl:
            n = counts[m]
            out[m][..., :, p] = arr[..., start:start + n]
            start += n
    return out


def _edge_codes(m: Motif, arr: np.ndarray, n_vertices: int) -> np.ndarray:
    """Integer code of every placed edge, shape (..., n_m, e_m)."""
    e = np.asarray(m.edges, dtype=np.int64)
    a = arr[..., e[:, 0]]
    b = arr[..., e[:, 1]]
    if not m.directed:
        a, b = np.minimum(a, b), np.maximum(a, b)
    return a * n_vertices + b


def _has_repeat(x: np.ndarray) -> np.ndarray:
    """Whether the last axis contains a repeated value."""
    if x.shape[-1] < 2:
        return np.zeros(x.shape[:-1], dtype=bool)
    s = np.sort(x, axis=-1)
    return (s[..., 1:] == s[..., :-1]).any(axis=-1)


def _validity(placed: Mapping[Motif, np.ndarray], n_vertices: int, policy: str) -> np.ndarray:
    """Boolean mask over the batch axes: True where the matching is accepted."""
    ok = None
    all_codes = []
    for m, arr in placed.items():
        contracted = _has_repeat(arr).any(axis=-1)
        ok = ~contracted if ok is None else ok & ~contracted
        codes = _edge_codes(m, arr, n_vertices)
        all_codes.append(codes.reshape(codes.shape[:-2] + (-1,)))
        if policy == "discard":
            ok &= ~_duplicate_copies(np.sort(codes, axis=-1))
    if policy == "reject":
        ok &= ~_has_repeat(np.concatenate(all_codes, axis=-1))
    return ok


def _duplicate_copies(sorted_codes: np.ndarray) -> np.ndarray:
    """Whether two copies (axis -2) carry the same sorted edge-code row."""
    n = sorted_codes.shape[-2]
    if n < 2:
        return np.zeros(sorted_codes.shape[:-2], dtype=bool)
    flat = sorted_codes.reshape(-1, n, sorted_codes.shape[-1])
    b = flat.shape[0]
    rows = np.concatenate([np.repeat(np.arange(b), n)[:, None], flat.reshape(b * n, -1)], axis=1)
    uniq = np.unique(rows, axis=0)
    res = np.bincount(uniq[:, 0], minlength=b) < n
    return res.reshape(sorted_codes.shape[:-2])


def _stub_lists(table: OrbitDegreeTable) -> dict[Hashable, np.ndarray]:
    return {k: np.repeat(np.arange(table.n_vertices), v) for k, v in table.entries.items() if v.sum() > 0}


def sample_dc(spec: GeneratorSpec, rng: np.random.Generator | None = None) -> Sample:
    """Stub matching with rejection; accepted samples are uniform over valid configurations."""
    if spec.table is None:
        raise GeneratorError("degree-corrected sampling needs a degree table")
    rng = _rng(spec.seed if rng is None else rng)
    table, counts = spec.table, {m: n for m, n in spec.counts.items() if n > 0}
    if not counts:
        c = SubgraphConfiguration(table.n_vertices)
        return Sample(c, Graph(table.n_vertices, [], _directed(spec.counts)), Counter())
    order, slots = _slots(counts, table.granularity)
    stubs = _stub_lists(table)
    keys = sorted(stubs, key=repr)
    attempts = 0
    batch = 1
    while attempts < spec.max_attempts:
        # grow the batch geometrically so that easy specs stay cheap
        b = min(batch, spec.max_attempts - attempts)
        shuffled = {k: rng.permuted(np.broadcast_to(stubs[k], (b, stubs[k].size)), axis=1) for k in keys}
        placed = _fill(order, slots, counts, shuffled)
        ok = np.flatnonzero(_validity(placed, table.n_vertices, spec.policy))
        if ok.size:
            i = int(ok[0])
            c = SubgraphConfiguration(table.n_vertices, (Placement.make(m, row)
                                                         for m, arr in placed.items() for row in arr[i].tolist()))
            g, mult = project(c, directed=_directed(counts))
            return Sample(c, g, mult, attempts + i + 1)
        attempts += b
        batch = min(batch * 4, 4096)
    raise GeneratorError(f"no valid matching in {spec.max_attempts} attempts "
                         f"(acceptance rate below {1 / spec.max_attempts:.2e})")


def acceptance_rate(table: OrbitDegreeTable, counts: Mapping[Motif, int], n_samples: int,
                    rng: np.random.Generator | int | None = None, policy: str = "discard",
                    batch: int = 20_000) -> tuple[float, int]:
    """Fraction of uniform stub matchings that are valid; returns (rate, accepted)."""
    rng = _rng(rng)
    counts = {m: n for m, n in counts.items() if n > 0}
    order, slots = _slots(counts, table.granularity)
    stubs = _stub_lists(table)
    keys = sorted(stubs, key=repr)
    accepted = 0
    done = 0
    while done < n_samples:
        b = min(batch, n_samples - done)
        shuffled = {k: rng.permuted(np.broadcast_to(stubs[k], (b, stubs[k].size)), axis=1) for k in keys}
        placed = _fill(order, slots, counts, shuffled)
        accepted += int(_validity(placed, table.n_vertices, policy).sum())
        done += b
    return accepted / n_samples, accepted


# -- brute-force oracle -------------------------------------------------------

ORACLE_MAX_VERTICES = 6
ORACLE_MAX_PLACEMENTS = 4


def _brute_automorphisms(m: Motif) -> list[tuple[int, ...]]:
    edges = set(m.edges)
    if not m.directed:
        edges |= {(b, a) for a, b in m.edges}
    return [p for p in itertools.permutations(range(m.size))
            if all((p[a], p[b]) in edges for a, b in edges)]


def _brute_position_keys(m: Motif, granularity: Granularity) -> list[Hashable]:
    """Component of every motif position, with orbits found by brute force."""
    g = Granularity(granularity)
    if g is Granularity.TOTAL:
        return ["total"] * m.size
    if g is Granularity.MOTIF:
        return [m] * m.size
    if g is Granularity.DIRECTED:
        outs = Counter(a for a, _ in m.edges)
        ins = Counter(b for _, b in m.edges)
        return ["mixed" if ins[p] and outs[p] else ("out" if outs[p] else "in") for p in range(m.size)]
    auts = _brute_automorphisms(m)
    orbit = [min(a[p] for a in auts) for p in range(m.size)]
    return [("orbit", m, o) for o in orbit]


def _all_placements(m: Motif, n_vertices: int) -> list[tuple[tuple[int, ...], frozenset]]:
    """Every m-subgraph of the complete graph as (vertex tuple, edge set), deduplicated by edge set."""
    seen: dict[frozenset, tuple[int, ...]] = {}
    for t in itertools.permutations(range(n_vertices), m.size):
        if m.directed:
            es = frozenset((t[a], t[b]) for a, b in m.edges)
        else:
            es = frozenset(frozenset((t[a], t[b])) for a, b in m.edges)
        if es not in seen:
            seen[es] = t
    return sorted((t, es) for es, t in seen.items())


def _check_guard(n_vertices: int, counts: Mapping[Motif, int], max_placements: int) -> None:
    if n_vertices > ORACLE_MAX_VERTICES:
        raise GeneratorError(f"oracle limited to {ORACLE_MAX_VERTICES} vertices")
    if sum(counts.values()) > max_placements:
        raise GeneratorError(f"oracle limited to {max_placements} placements")


def _oracle_degrees(n_vertices, chosen, keys_of) -> dict:
    deg: dict[Hashable, list[int]] = {}
    for m, t in chosen:
        for p, v in enumerate(t):
            k = keys_of[m][p]
            deg.setdefault(k, [0] * n_vertices)[v] += 1
    return {k: tuple(v) for k, v in deg.items()}


def _table_key(table: OrbitDegreeTable, counts: Mapping[Motif, int]) -> dict:
    """Translate a table's component keys to the oracle's brute-force keys."""
    out = {}
    for k, vec in table.entries.items():
        if not np.any(vec):
            continue
        if table.granularity is Granularity.ORBIT:
            m, i = k
            keys = _brute_position_keys(m, Granularity.ORBIT)
            k = keys[m.orbits[i].vertices[0]]
        out[k] = tuple(int(x) for x in vec)
    return out


def enumerate_configurations(n_vertices: int, counts: Mapping[Motif, int],
                             table: OrbitDegreeTable | None = None,
                             max_placements: int = ORACLE_MAX_PLACEMENTS) -> Iterator[SubgraphConfiguration]:
    """Every configuration with the given atom counts (and degree table, if given)."""
    counts = {m: n for m, n in counts.items() if n > 0}
    _check_guard(n_vertices, counts, max_placements)
    motifs = sorted(counts, key=lambda m: (m.size, m.n_edges, m.code))
    granularity = table.granularity if table is not None else Granularity.ORBIT
    keys_of = {m: _brute_position_keys(m, granularity) for m in motifs}
    target = _table_key(table, counts) if table is not None else None
    per_motif = [list(itertools.combinations(_all_placements(m, n_vertices), counts[m])) for m in motifs]
    for combo in itertools.product(*per_motif):
        chosen = [(m, t) for m, group in zip(motifs, combo) for t, _ in group]
        if target is not None and _oracle_degrees(n_vertices, chosen, keys_of) != target:
            continue
        yield SubgraphConfiguration(n_vertices, (Placement.make(m, t) for m, t in chosen))


def count_configurations(n_vertices: int, counts: Mapping[Motif, int]) -> int:
    """Exhaustive count under fixed atom counts, one motif at a time.

    Configurations are sets of placements and placements of different motifs
    never coincide, so the count factorizes over motifs.
    """
    counts = {m: n for m, n in counts.items() if n > 0}
    if n_vertices > ORACLE_MAX_VERTICES:
        raise GeneratorError(f"oracle limited to {ORACLE_MAX_VERTICES} vertices")
    total = 1
    for m, n in counts.items():
        total *= sum(1 for _ in itertools.combinations(_all_placements(m, n_vertices), n))
    return total


def count_stub_matchings(counts: Mapping[Motif, int], table: OrbitDegreeTable) -> int:
    """Exhaustive count of ways to group labeled stubs into unordered motif copies.

    Stubs are distinguishable; a copy is a map from motif positions to stubs of
    the right component, taken up to automorphisms of the motif.
    """
    counts = {m: n for m, n in counts.items() if n > 0}
    order, slots = _slots(counts, table.granularity)
    auts = {m: _brute_automorphisms(m) for m in order}
    stubs = {k: list(range(int(table.component(k).sum()))) for k in slots}
    seen = set()
    keys = list(slots)
    for perms in itertools.product(*(itertools.permutations(stubs[k]) for k in keys)):
        placed = {m: [[None] * m.size for _ in range(counts[m])] for m in order}
        for k, perm in zip(keys, perms):
            i = 0
            for m, p in slots[k]:
                for j in range(counts[m]):
                    placed[m][j][p] = (k, perm[i])
                    i += 1
        state = []
        for m in order:
            copies = frozenset(min(tuple(copy[a[p]] for p in range(m.size)) for a in auts[m])
                               for copy in placed[m])
            state.append(copies)
        seen.add(tuple(state))
    return len(seen)


def count_simple_graphs(degrees) -> int:
    """Number of labeled simple graphs with the given degree sequence."""
    from functools import lru_cache

    @lru_cache(maxsize=None)
    def rec(seq: tuple[int, ...]) -> int:
        # seq sorted descending; connect the first vertex to a subset of the rest
        if not seq or seq[0] == 0:
            return 1
        d, rest = seq[0], seq[1:]
        if d > len(rest):
            return 0
        # vertices with equal residual degree are interchangeable: pick how many of each
        groups = Counter(rest)
        vals = sorted(groups, reverse=True)

        def choose(i, left, new):
            if i == len(vals):
                if left:
                    return 0
                return rec(tuple(sorted((x for x in new if x > 0), reverse=True)))
            v, c = vals[i], groups[vals[i]]
            acc = 0
            for t in range(min(c, left) + 1):
                acc += math.comb(c, t) * choose(i + 1, left - t, new + [v - 1] * t + [v] * (c - t))
            return acc

        return choose(0, d, [])

    # isolated vertices take no part in the choices
    seq = tuple(sorted((int(x) for x in degrees if int(x) > 0), reverse=True))
    if sum(seq) % 2:
        return 0
    return rec(seq)
