"""Graphs, motifs and canonical labeling.

Canonical forms are computed with an individualization-refinement search:
vertices are colored by iterated neighbourhood refinement, non-singleton
cells are split by individualizing one vertex at a time, and every leaf of
the search tree gives a labeling whose adjacency bit string is compared
against the best seen so far.  Leaves reproducing the best code yield
automorphisms, which are used to prune equivalent branches and, at the end,
to read off the orbit partition.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from scipy.special import gammaln

#: default size caps for canonicalization
MAX_SIZE_UNDIRECTED = 8
MAX_SIZE_DIRECTED = 5


class GraphError(ValueError):
    """Raised for invalid graph input (self-loops, bad ids, disconnected motifs)."""


@dataclass(frozen=True)
class Graph:
    """Simple graph on vertices ``0..n_vertices-1``.

    Undirected edges are stored as ``(min, max)`` pairs.
    """

    n_vertices: int
    edges: frozenset[tuple[int, int]]
    directed: bool = False

    def __init__(self, n_vertices: int, edges: Iterable[tuple[int, int]] = (),
                 directed: bool = False):
        norm = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            if not (0 <= u < n_vertices and 0 <= v < n_vertices):
                raise GraphError(f"edge ({u}, {v}) outside vertex range 0..{n_vertices - 1}")
            norm.add((u, v) if directed or u < v else (v, u))
        object.__setattr__(self, "n_vertices", int(n_vertices))
        object.__setattr__(self, "edges", frozenset(norm))
        object.__setattr__(self, "directed", bool(directed))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    @cached_property
    def neighbors(self) -> tuple[frozenset[int], ...]:
        """Undirected neighbourhoods (direction ignored)."""
        nb: list[set[int]] = [set() for _ in range(self.n_vertices)]
        for u, v in self.edges:
            nb[u].add(v)
            nb[v].add(u)
        return tuple(frozenset(s) for s in nb)

    def degree(self, v: int) -> int:
        """Number of incident edges (in + out for directed graphs)."""
        if not self.directed:
            return len(self.neighbors[v])
        return sum(1 for e in self.edges if v in e)

    def degrees(self) -> list[int]:
        deg = [0] * self.n_vertices
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def is_connected(self) -> bool:
        if self.n_vertices == 0:
            return False
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for w in self.neighbors[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n_vertices

    def has_edge(self, u: int, v: int) -> bool:
        if self.directed:
            return (u, v) in self.edges
        return (min(u, v), max(u, v)) in self.edges

    def relabel(self, mapping: Sequence[int]) -> "Graph":
        """Graph with vertex ``v`` renamed to ``mapping[v]``."""
        return Graph(self.n_vertices, ((mapping[u], mapping[v]) for u, v in self.edges),
                     self.directed)

    def induced(self, vertices: Sequence[int]) -> "Graph":
        """Induced subgraph, vertex ``vertices[i]`` becomes ``i``."""
        pos = {v: i for i, v in enumerate(vertices)}
        return Graph(len(vertices),
                     ((pos[u], pos[v]) for u, v in self.edges if u in pos and v in pos),
                     self.directed)


# ---------------------------------------------------------------------------
# individualization-refinement search on bitmask adjacency


def _masks(n: int, edges: Iterable[tuple[int, int]], directed: bool):
    out = [0] * n
    inn = [0] * n
    for u, v in edges:
        out[u] |= 1 << v
        inn[v] |= 1 << u
        if not directed:
            out[v] |= 1 << u
            inn[u] |= 1 << v
    return out, inn


def _refine(cells: list[list[int]], out: list[int], inn: list[int], directed: bool):
    """Equitable refinement of an ordered partition; new cells are ordered by signature."""
    cells = [list(c) for c in cells]
    while True:
        masks = []
        for c in cells:
            m = 0
            for v in c:
                m |= 1 << v
            masks.append(m)
        new_cells: list[list[int]] = []
        changed = False
        for c in cells:
            if len(c) == 1:
                new_cells.append(c)
                continue
            if directed:
                sig = {v: tuple((out[v] & m).bit_count() for m in masks)
                       + tuple((inn[v] & m).bit_count() for m in masks) for v in c}
            else:
                sig = {v: tuple((out[v] & m).bit_count() for m in masks) for v in c}
            keys = sorted(set(sig.values()))
            if len(keys) == 1:
                new_cells.append(c)
                continue
            changed = True
            for k in keys:
                new_cells.append([v for v in c if sig[v] == k])
        cells = new_cells
        if not changed:
            return cells


def _leaf_code(order: list[int], out: list[int], directed: bool) -> int:
    code = 0
    n = len(order)
    if directed:
        for i in range(n):
            row = out[order[i]]
            for j in range(n):
                if i != j:
                    code = (code << 1) | ((row >> order[j]) & 1)
    else:
        for i in range(n):
            row = out[order[i]]
            for j in range(i + 1, n):
                code = (code << 1) | ((row >> order[j]) & 1)
    return code


def _orbit_roots(n: int, perms: Iterable[Sequence[int]]) -> list[int]:
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p in perms:
        for v in range(n):
            a, b = find(v), find(p[v])
            if a != b:
                parent[max(a, b)] = min(a, b)
    return [find(v) for v in range(n)]


class _Search:
    def __init__(self, n: int, out: list[int], inn: list[int], directed: bool):
        self.n = n
        self.out = out
        self.inn = inn
        self.directed = directed
        self.best_code: int | None = None
        self.best_order: list[int] | None = None
        self.automorphisms: list[tuple[int, ...]] = []

    def run(self, cells: list[list[int]]) -> None:
        self._visit(cells, [])

    def _visit(self, cells: list[list[int]], path: list[int]) -> None:
        cells = _refine(cells, self.out, self.inn, self.directed)
        if len(cells) == self.n:
            self._leaf([c[0] for c in cells])
            return
        ti = min((i for i, c in enumerate(cells) if len(c) > 1),
                 key=lambda i: (len(cells[i]), i))
        target = cells[ti]
        explored: list[int] = []
        for v in sorted(target):
            if explored:
                fixing = [a for a in self.automorphisms if all(a[p] == p for p in path)]
                if fixing:
                    roots = _orbit_roots(self.n, fixing)
                    if any(roots[v] == roots[u] for u in explored):
                        continue
            rest = [u for u in target if u != v]
            child = cells[:ti] + [[v], rest] + cells[ti + 1:]
            self._visit(child, path + [v])
            explored.append(v)

    def _leaf(self, order: list[int]) -> None:
        code = _leaf_code(order, self.out, self.directed)
        if self.best_code is None or code < self.best_code:
            self.best_code = code
            self.best_order = order
        elif code == self.best_code:
            perm = [0] * self.n
            for a, b in zip(self.best_order, order):
                perm[a] = b
            perm = tuple(perm)
            if any(perm[i] != i for i in range(self.n)) and perm not in self.automorphisms:
                self.automorphisms.append(perm)


def _initial_cells(n: int, colors: Sequence[int] | None) -> list[list[int]]:
    if colors is None:
        return [list(range(n))]
    return [[v for v in range(n) if colors[v] == c] for c in sorted(set(colors))]


def _aut_order(n: int, out: list[int], inn: list[int], directed: bool,
               cells: list[list[int]]) -> int:
    # orbit-stabilizer down a chain of individualized vertices
    order = 1
    while True:
        cells = _refine(cells, out, inn, directed)
        if len(cells) == n:
            return order
        search = _Search(n, out, inn, directed)
        search.run(cells)
        ti = next(i for i, c in enumerate(cells) if len(c) > 1)
        v = min(cells[ti])
        roots = _orbit_roots(n, search.automorphisms)
        order *= sum(1 for u in range(n) if roots[u] == roots[v])
        rest = [u for u in cells[ti] if u != v]
        cells = cells[:ti] + [[v], rest] + cells[ti + 1:]


def _encode(n: int, code: int, directed: bool) -> bytes:
    nbits = n * (n - 1) if directed else n * (n - 1) // 2
    nbytes = (nbits + 7) // 8
    # left-align so byte-wise comparison agrees with bit-string comparison
    return bytes([n]) + (code << (nbytes * 8 - nbits)).to_bytes(nbytes, "big")


def decode(code: bytes, directed: bool) -> Graph:
    """Graph in canonical labeling from a canonical code."""
    n = code[0]
    nbits = n * (n - 1) if directed else n * (n - 1) // 2
    nbytes = len(code) - 1
    bits = int.from_bytes(code[1:], "big") >> (nbytes * 8 - nbits)
    pairs = ([(i, j) for i in range(n) for j in range(n) if i != j] if directed
             else [(i, j) for i in range(n) for j in range(i + 1, n)])
    edges = [p for k, p in enumerate(pairs) if (bits >> (nbits - 1 - k)) & 1]
    return Graph(n, edges, directed)


def _check_size(g: Graph, max_size: int | None) -> None:
    cap = max_size if max_size is not None else (
        MAX_SIZE_DIRECTED if g.directed else MAX_SIZE_UNDIRECTED)
    if g.n_vertices > cap:
        raise GraphError(f"graph has {g.n_vertices} vertices, above the cap of {cap}")
    if not g.is_connected():
        raise GraphError("motifs must be connected")


def canonical_form(g: Graph, max_size: int | None = None) -> tuple[bytes, tuple[int, ...]]:
    """Canonical code of a connected graph and the relabeling ``v -> position``.

    Two graphs get the same code iff they are isomorphic (respecting edge
    direction for directed graphs).
    """
    _check_size(g, max_size)
    out, inn = _masks(g.n_vertices, g.edges, g.directed)
    search = _Search(g.n_vertices, out, inn, g.directed)
    search.run([list(range(g.n_vertices))])
    relabel = [0] * g.n_vertices
    for pos, v in enumerate(search.best_order):
        relabel[v] = pos
    return _encode(g.n_vertices, search.best_code, g.directed), tuple(relabel)


def _canonical_search(g: Graph):
    out, inn = _masks(g.n_vertices, g.edges, g.directed)
    search = _Search(g.n_vertices, out, inn, g.directed)
    search.run([list(range(g.n_vertices))])
    return search, out, inn


# ---------------------------------------------------------------------------
# motifs


@dataclass(frozen=True)
class Orbit:
    vertices: tuple[int, ...]
    degree: int
    in_degree: int = 0
    out_degree: int = 0

    @property
    def size(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True, eq=False)
class Motif:
    """A connected unlabeled graph in canonical labeling.

    Equality and hashing go through the canonical code.
    """

    size: int
    edges: tuple[tuple[int, int], ...]
    directed: bool
    code: bytes
    aut_order: int
    orbits: tuple[Orbit, ...]
    name: str = field(default="", compare=False)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], directed: bool = False,
                   name: str = "", max_size: int | None = None) -> "Motif":
        return cls.from_graph(Graph(n, edges, directed), name=name, max_size=max_size)

    @classmethod
    def from_graph(cls, g: Graph, name: str = "", max_size: int | None = None) -> "Motif":
        _check_size(g, max_size)
        code, relabel = canonical_form(g, max_size=max_size)
        return _motif_from_code(code, g.directed, name)

    @classmethod
    def from_code(cls, code: bytes, directed: bool, name: str = "") -> "Motif":
        return _motif_from_code(code, directed, name)

    def __eq__(self, other):
        return isinstance(other, Motif) and (self.code, self.directed) == (other.code, other.directed)

    def __hash__(self):
        return hash((self.code, self.directed))

    def __repr__(self):
        label = self.name or self.code.hex()
        return f"Motif({label}, size={self.size}, edges={self.n_edges})"

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def label(self) -> str:
        """Human-readable name for common shapes, the hex code otherwise."""
        if self.name:
            return self.name
        k, e = self.size, self.n_edges
        deg = sorted(o.degree for o in self.orbits for _ in o.vertices)
        if self.directed:
            outs = Counter(a for a, _ in self.edges)
            if k == 2:
                return "directed-edge" if e == 1 else "mutual-edge"
            if e == k and all(outs[v] == 1 for v in range(k)) and deg == [2] * k:
                return f"directed-{k}-cycle"
            if k == 3 and e == 3 and self.aut_order == 1 and sorted(outs.values()) == [1, 2]:
                return "ffl"
            return self.code.hex()
        if e == k * (k - 1) // 2:
            return {2: "edge", 3: "triangle"}.get(k, f"clique-{k}")
        if e == k and deg == [2] * k:
            return f"{k}-cycle"
        if e == k - 1 and deg == [1, 1] + [2] * (k - 2):
            return f"path-{k}"
        if e == k - 1 and deg == [1] * (k - 1) + [k - 1]:
            return f"star-{k - 1}"
        if k == 4 and e == 5:
            return "diamond"
        return self.code.hex()

    @property
    def graph(self) -> Graph:
        return Graph(self.size, self.edges, self.directed)

    @cached_property
    def orbit_of(self) -> tuple[int, ...]:
        """Orbit index of each canonical vertex."""
        idx = [0] * self.size
        for i, orb in enumerate(self.orbits):
            for v in orb.vertices:
                idx[v] = i
        return tuple(idx)

    @cached_property
    def mu(self) -> int:
        """Number of distinct motif copies on a fixed assignment of vertices to orbits."""
        num = 1
        for orb in self.orbits:
            num *= math.factorial(orb.size)
        return num // self.aut_order

    @cached_property
    def direction_groups(self) -> tuple[int, ...]:
        """Per vertex: 0 in-only, 1 out-only, 2 both (directed motifs only)."""
        indeg = [0] * self.size
        outdeg = [0] * self.size
        for u, v in self.edges:
            outdeg[u] += 1
            indeg[v] += 1
        return tuple(0 if o == 0 else 1 if i == 0 else 2 for i, o in zip(indeg, outdeg))

    @cached_property
    def automorphisms(self) -> tuple[tuple[int, ...], ...]:
        """Full automorphism group as permutations (closure of the search generators)."""
        search, _, _ = _canonical_search(self.graph)
        ident = tuple(range(self.size))
        group = {ident}
        frontier = [ident]
        while frontier:
            nxt = []
            for p in frontier:
                for a in search.automorphisms:
                    q = tuple(a[p[i]] for i in range(self.size))
                    if q not in group:
                        group.add(q)
                        nxt.append(q)
            frontier = nxt
        return tuple(sorted(group))


_MOTIF_CACHE: dict[tuple[bytes, bool], Motif] = {}


def _motif_from_code(code: bytes, directed: bool, name: str = "") -> Motif:
    key = (code, directed)
    cached = _MOTIF_CACHE.get(key)
    if cached is not None:
        if name and not cached.name:
            object.__setattr__(cached, "name", name)
        return cached
    g = decode(code, directed)
    search, out, inn = _canonical_search(g)
    n = g.n_vertices
    if _encode(n, search.best_code, directed) != code:
        raise GraphError("code is not canonical")
    roots = _orbit_roots(n, search.automorphisms)
    indeg = [0] * n
    outdeg = [0] * n
    for u, v in g.edges:
        outdeg[u] += 1
        indeg[v] += 1
    groups: dict[int, list[int]] = {}
    for v in range(n):
        groups.setdefault(roots[v], []).append(v)
    orbits = []
    for r in sorted(groups):
        vs = tuple(groups[r])
        v0 = vs[0]
        if directed:
            orbits.append(Orbit(vs, indeg[v0] + outdeg[v0], indeg[v0], outdeg[v0]))
        else:
            orbits.append(Orbit(vs, indeg[v0] + outdeg[v0]))
    aut = _aut_order(n, out, inn, directed, [list(range(n))])
    motif = Motif(n, tuple(sorted(g.edges)), directed, code, aut, tuple(orbits), name)
    _MOTIF_CACHE[key] = motif
    return motif


def automorphism_group_order(m: Motif) -> int:
    return m.aut_order


def orbits(m: Motif) -> tuple[Orbit, ...]:
    return m.orbits


def count_placements_log(n: int, m: Motif) -> float:
    """log |H_{N,m}|: number of copies of ``m`` in the complete graph on ``n`` vertices."""
    if n < m.size:
        raise ValueError(f"need at least {m.size} vertices, got {n}")
    return float(gammaln(n + 1) - gammaln(n - m.size + 1) - math.log(m.aut_order))


def count_placements(n: int, m: Motif) -> int:
    if n < m.size:
        return 0
    return math.perm(n, m.size) // m.aut_order


# ---------------------------------------------------------------------------
# named motifs


def edge() -> Motif:
    return Motif.from_edges(2, [(0, 1)], name="edge")


def directed_edge() -> Motif:
    return Motif.from_edges(2, [(0, 1)], directed=True, name="directed-edge")


def path(k: int) -> Motif:
    return Motif.from_edges(k, [(i, i + 1) for i in range(k - 1)], name=f"path-{k}")


def cycle(k: int) -> Motif:
    name = "triangle" if k == 3 else f"{k}-cycle"
    return Motif.from_edges(k, [(i, (i + 1) % k) for i in range(k)], name=name)


def triangle() -> Motif:
    return cycle(3)


def clique(k: int) -> Motif:
    if k == 2:
        return edge()
    if k == 3:
        return triangle()
    return Motif.from_edges(k, [(i, j) for i in range(k) for j in range(i + 1, k)],
                            name=f"clique-{k}")


def star(leaves: int) -> Motif:
    return Motif.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)],
                            name=f"star-{leaves}")


def diamond() -> Motif:
    return Motif.from_edges(4, [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)], name="diamond")


def feed_forward_loop() -> Motif:
    return Motif.from_edges(3, [(0, 1), (1, 2), (0, 2)], directed=True, name="ffl")


def directed_cycle(k: int) -> Motif:
    return Motif.from_edges(k, [(i, (i + 1) % k) for i in range(k)], directed=True,
                            name=f"directed-{k}-cycle")
