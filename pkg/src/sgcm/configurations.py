"""Subgraph configurations: placed motif copies over a vertex set."""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping

import numpy as np

from .graphs import Graph, Motif


class Granularity(str, enum.Enum):
    ORBIT = "orbit"
    MOTIF = "motif"
    TOTAL = "total"
    DIRECTED = "directed"


#: component keys of the directed granularity
DIRECTED_COMPONENTS = ("in", "out", "mixed")


def _lex_min_labeling(motif: Motif, vertices: tuple[int, ...]) -> tuple[int, ...]:
    """Lexicographically least vertex tuple describing the same placed subgraph."""
    k = motif.size
    placed = {(vertices[a], vertices[b]) for a, b in motif.edges}
    if not motif.directed:
        placed |= {(b, a) for a, b in placed}
    medges = set(motif.edges)
    if not motif.directed:
        medges |= {(b, a) for a, b in motif.edges}
    pool = sorted(vertices)
    assign: list[int] = []

    def fits(p: int, x: int) -> bool:
        for q in range(p):
            y = assign[q]
            if ((q, p) in medges) != ((y, x) in placed):
                return False
            if ((p, q) in medges) != ((x, y) in placed):
                return False
        return True

    def dfs(p: int) -> bool:
        if p == k:
            return True
        for x in pool:
            if x in assign or not fits(p, x):
                continue
            assign.append(x)
            if dfs(p + 1):
                return True
            assign.pop()
        return False

    dfs(0)
    return tuple(assign)


@dataclass(frozen=True)
class Placement:
    """One copy of ``motif``; motif vertex ``p`` sits on graph vertex ``vertices[p]``.

    Build through :meth:`make` so that automorphic vertex assignments collapse
    to one representative.
    """

    motif: Motif
    vertices: tuple[int, ...]

    @classmethod
    def make(cls, motif: Motif, vertices: Iterable[int]) -> "Placement":
        vs = tuple(int(v) for v in vertices)
        if len(vs) != motif.size:
            raise ValueError(f"{motif!r} needs {motif.size} vertices, got {len(vs)}")
        if len(set(vs)) != len(vs):
            raise ValueError(f"placement vertices must be distinct: {vs}")
        return cls(motif, _lex_min_labeling(motif, vs))

    def edges(self) -> list[tuple[int, int]]:
        """Graph edges of this copy (undirected edges as ``(min, max)``)."""
        vs = self.vertices
        if self.motif.directed:
            return [(vs[a], vs[b]) for a, b in self.motif.edges]
        return [(min(vs[a], vs[b]), max(vs[a], vs[b])) for a, b in self.motif.edges]


@dataclass(frozen=True)
class SubgraphConfiguration:
    """A set of placements over ``n_vertices`` vertices."""

    n_vertices: int
    placements: frozenset[Placement] = field(default_factory=frozenset)

    def __init__(self, n_vertices: int, placements: Iterable[Placement] = ()):
        ps = frozenset(placements)
        for p in ps:
            if max(p.vertices) >= n_vertices or min(p.vertices) < 0:
                raise ValueError(f"placement {p.vertices} outside vertex range")
        object.__setattr__(self, "n_vertices", int(n_vertices))
        object.__setattr__(self, "placements", ps)

    def __len__(self):
        return len(self.placements)

    def __iter__(self):
        return iter(self.sorted())

    @property
    def directed(self) -> bool:
        return any(p.motif.directed for p in self.placements)

    def atoms(self) -> list[Motif]:
        return sorted({p.motif for p in self.placements}, key=lambda m: (m.size, m.n_edges, m.code))

    def sorted(self) -> list[Placement]:
        return sorted(self.placements,
                      key=lambda p: (p.motif.size, p.motif.n_edges, p.motif.code, p.vertices))

    def by_motif(self) -> dict[Motif, np.ndarray]:
        """Placement vertex arrays per atom, shape ``(n_m, |m|)``."""
        groups: dict[Motif, list[tuple[int, ...]]] = {}
        for p in self.sorted():
            groups.setdefault(p.motif, []).append(p.vertices)
        return {m: np.asarray(vs, dtype=np.int64).reshape(len(vs), m.size)
                for m, vs in groups.items()}

    def union(self, placements: Iterable[Placement]) -> "SubgraphConfiguration":
        return SubgraphConfiguration(self.n_vertices, self.placements | frozenset(placements))

    @classmethod
    def single_edges(cls, g: Graph) -> "SubgraphConfiguration":
        from .graphs import directed_edge, edge

        m = directed_edge() if g.directed else edge()
        rows = edge_assignments(m, np.asarray(sorted(g.edges), dtype=np.int64).reshape(-1, 2))
        return cls(g.n_vertices, (Placement.make(m, r) for r in rows.tolist()))


def edge_assignments(m: Motif, edges: np.ndarray) -> np.ndarray:
    """Position assignments of a single-edge motif for rows of (tail, head) pairs."""
    (t, h), = m.edges
    out = np.empty_like(edges)
    out[:, t], out[:, h] = edges[:, 0], edges[:, 1]
    return out


def project(c: SubgraphConfiguration, directed: bool | None = None) -> tuple[Graph, Counter]:
    """Edge union of the configuration, plus the multiplicity of every edge."""
    if directed is None:
        directed = c.directed
    mult: Counter = Counter()
    for p in c.placements:
        mult.update(p.edges())
    return Graph(c.n_vertices, mult.keys(), directed), mult


def is_cover(c: SubgraphConfiguration, g: Graph) -> bool:
    if c.n_vertices != g.n_vertices:
        return False
    edges = set()
    for p in c.placements:
        edges.update(p.edges())
    return edges == set(g.edges)


def atom_counts(c: SubgraphConfiguration) -> dict[Motif, int]:
    return dict(Counter(p.motif for p in c.placements))


def position_component(m: Motif, position: int, granularity: Granularity) -> Hashable:
    """Degree-table component that motif vertex ``position`` contributes to."""
    g = Granularity(granularity)
    if g is Granularity.ORBIT:
        return (m, m.orbit_of[position])
    if g is Granularity.MOTIF:
        return m
    if g is Granularity.TOTAL:
        return "total"
    if not m.directed:
        raise ValueError("directed granularity needs directed motifs")
    return DIRECTED_COMPONENTS[m.direction_groups[position]]


def motif_layout(m: Motif, granularity: Granularity) -> dict[Hashable, int]:
    """How many vertices of ``m`` fall in each component."""
    out: dict[Hashable, int] = {}
    for p in range(m.size):
        k = position_component(m, p, granularity)
        out[k] = out.get(k, 0) + 1
    return out


@dataclass
class OrbitDegreeTable:
    """Per-vertex atomic degrees, one vector per component.

    Component keys are ``(motif, orbit_index)`` at orbit level, the motif at
    motif level, ``"total"`` at total level and ``"in"``/``"out"``/``"mixed"``
    at directed level.
    """

    granularity: Granularity
    n_vertices: int
    entries: dict[Hashable, np.ndarray]
    counts: dict[Motif, int]

    def component(self, key: Hashable) -> np.ndarray:
        return self.entries.get(key, np.zeros(self.n_vertices, dtype=np.int64))

    def aggregate(self, granularity: Granularity) -> "OrbitDegreeTable":
        """Coarser table obtained by summing components (only from orbit level)."""
        granularity = Granularity(granularity)
        if granularity is self.granularity:
            return self
        if self.granularity is not Granularity.ORBIT:
            raise ValueError("aggregation starts from an orbit-level table")
        entries: dict[Hashable, np.ndarray] = {}
        for (m, i), vec in self.entries.items():
            pos = m.orbits[i].vertices[0]
            key = position_component(m, pos, granularity)
            entries[key] = entries.get(key, 0) + vec
        return OrbitDegreeTable(granularity, self.n_vertices, entries, dict(self.counts))

    def implied_degrees(self) -> np.ndarray:
        """Multigraph degree of each vertex; needs an orbit-level table."""
        if self.granularity is not Granularity.ORBIT:
            raise ValueError("implied degrees need the orbit-level table")
        deg = np.zeros(self.n_vertices, dtype=np.int64)
        for (m, i), vec in self.entries.items():
            deg += vec * m.orbits[i].degree
        return deg


def degree_table_from_arrays(by_motif: Mapping[Motif, np.ndarray], n_vertices: int,
                             granularity: Granularity) -> OrbitDegreeTable:
    granularity = Granularity(granularity)
    entries: dict[Hashable, np.ndarray] = {}
    counts = {}
    for m, arr in by_motif.items():
        counts[m] = int(arr.shape[0])
        if arr.shape[0] == 0:
            continue
        for p in range(m.size):
            key = position_component(m, p, granularity)
            vec = np.bincount(arr[:, p], minlength=n_vertices)
            if key in entries:
                entries[key] = entries[key] + vec
            else:
                entries[key] = vec.astype(np.int64)
    return OrbitDegreeTable(granularity, n_vertices, entries, counts)


def orbit_degree_table(c: SubgraphConfiguration,
                       granularity: Granularity = Granularity.ORBIT) -> OrbitDegreeTable:
    return degree_table_from_arrays(c.by_motif(), c.n_vertices, granularity)
