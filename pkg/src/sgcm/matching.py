"""Backtracking subgraph monomorphism restricted to a mutable set of free edges."""

from __future__ import annotations

from typing import Iterable, Iterator

from .graphs import Graph, Motif

CHOICES = 64


class EdgePool:
    """Adjacency over the edges of ``g`` that are still free to be used."""

    def __init__(self, g: Graph, used: Iterable[tuple[int, int]] = ()):
        self.directed = g.directed
        self.n_vertices = g.n_vertices
        n = g.n_vertices
        self.out: list[set[int]] = [set() for _ in range(n)]
        self.inc: list[set[int]] = [set() for _ in range(n)] if g.directed else self.out
        for a, b in g.edges:
            self.out[a].add(b)
            self.inc[b].add(a)
        for e in used:
            self.remove(e)

    def has(self, a: int, b: int) -> bool:
        return b in self.out[a]

    def remove(self, e: tuple[int, int]) -> None:
        a, b = e
        self.out[a].discard(b)
        self.inc[b].discard(a)

    def add(self, e: tuple[int, int]) -> None:
        a, b = e
        self.out[a].add(b)
        self.inc[b].add(a)

    def degree(self, v: int) -> int:
        if self.directed:
            return len(self.out[v]) + len(self.inc[v])
        return len(self.out[v])

    def edges(self) -> list[tuple[int, int]]:
        if self.directed:
            return [(a, b) for a in range(self.n_vertices) for b in sorted(self.out[a])]
        return [(a, b) for a in range(self.n_vertices) for b in sorted(self.out[a]) if a < b]


class Pattern:
    """Search plan for one motif: position order, parent links and checks."""

    def __init__(self, m: Motif, root: int):
        self.motif = m
        k = m.size
        outs = [set() for _ in range(k)]
        ins = [set() for _ in range(k)]
        for a, b in m.edges:
            outs[a].add(b)
            ins[b].add(a)
        if not m.directed:
            for a, b in m.edges:
                outs[b].add(a)
                ins[a].add(b)
        self.root = root
        order = [root]
        seen = {root}
        # BFS, preferring positions with many links back into the placed prefix
        while len(order) < k:
            best = None
            for p in range(k):
                if p in seen:
                    continue
                back = len((outs[p] | ins[p]) & seen)
                if back == 0:
                    continue
                key = (-back, -(len(outs[p]) + len(ins[p])), p)
                if best is None or key < best:
                    best = key
            p = best[2]
            order.append(p)
            seen.add(p)
        self.order = order
        rank = {p: i for i, p in enumerate(order)}
        self.steps = []
        for i, p in enumerate(order):
            if i == 0:
                self.steps.append((p, None, None, (), ()))
                continue
            earlier = [q for q in order[:i]]
            parent = min((q for q in earlier if q in outs[p] or q in ins[p]), key=lambda q: rank[q])
            # direction of the parent link: True if parent -> p
            fwd = p in outs[parent]
            need_out = tuple(q for q in earlier if q in outs[p])  # p -> q
            need_in = tuple(q for q in earlier if q in ins[p])  # q -> p
            self.steps.append((p, parent, fwd, need_out, need_in))
        self.degree = [len(outs[p]) + len(ins[p]) if m.directed else len(outs[p]) for p in range(k)]
        self.out_degree = [len(outs[p]) for p in range(k)]
        self.in_degree = [len(ins[p]) for p in range(k)]

    def embeddings(self, pool: EdgePool, anchor: int) -> Iterator[list[int]]:
        """Yield vertex assignments (indexed by motif position) with the root on ``anchor``."""
        k = self.motif.size
        assign = [-1] * k
        used: set[int] = set()
        directed = pool.directed
        out, inc = pool.out, pool.inc
        steps = self.steps
        odeg, ideg, deg = self.out_degree, self.in_degree, self.degree

        def fits(p, v):
            if directed:
                return len(out[v]) >= odeg[p] and len(inc[v]) >= ideg[p]
            return len(out[v]) >= deg[p]

        root = self.order[0]
        if not fits(root, anchor):
            return
        assign[root] = anchor
        used.add(anchor)

        def rec(i):
            if i == k:
                yield list(assign)
                return
            p, parent, fwd, need_out, need_in = steps[i]
            pv = assign[parent]
            cands = out[pv] if fwd or not directed else inc[pv]
            for v in sorted(cands):
                if v in used or not fits(p, v):
                    continue
                ov = out[v]
                if any(assign[q] not in ov for q in need_out):
                    continue
                iv = inc[v]
                if any(assign[q] not in iv for q in need_in):
                    continue
                assign[p] = v
                used.add(v)
                yield from rec(i + 1)
                used.discard(v)
                assign[p] = -1

        yield from rec(1)


def patterns(m: Motif) -> list[Pattern]:
    """One plan per orbit, rooted at the orbit representative; high-degree orbits first."""
    reps = [o.vertices[0] for o in m.orbits]
    reps.sort(key=lambda p: (-(m.orbits[m.orbit_of[p]].degree), p))
    return [Pattern(m, r) for r in reps]


def placed_edges(m: Motif, assign: list[int]) -> list[tuple[int, int]]:
    if m.directed:
        return [(assign[a], assign[b]) for a, b in m.edges]
    return [(min(assign[a], assign[b]), max(assign[a], assign[b])) for a, b in m.edges]


def disjoint_embeddings(pool: EdgePool, m: Motif, anchors: Iterable[int] | None = None,
                        plans: list[Pattern] | None = None, choices: int = CHOICES) -> list[tuple[int, ...]]:
    """Greedy maximal set of edge-disjoint embeddings using only free edges.

    Anchors are visited in ascending order of free degree (ties by id).  At each
    anchor up to ``choices`` embeddings are enumerated and the one whose vertices
    have the smallest total free degree is taken, as it blocks the fewest other
    copies.  Edges of accepted embeddings are removed from ``pool``.
    """
    plans = plans or patterns(m)
    if anchors is None:
        anchors = range(pool.n_vertices)
    order = sorted((v for v in anchors if pool.degree(v) > 0), key=lambda v: (pool.degree(v), v))
    found: list[tuple[int, ...]] = []
    for v in order:
        while True:
            best = None
            seen = 0
            for plan in plans:
                for assign in plan.embeddings(pool, v):
                    key = (sum(pool.degree(u) for u in assign), assign)
                    if best is None or key < best:
                        best = key
                    seen += 1
                    if seen >= choices:
                        break
                if seen >= choices:
                    break
            if best is None:
                break
            assign = best[1]
            for e in placed_edges(m, assign):
                pool.remove(e)
            found.append(tuple(assign))
    return found


def count_disjoint_embeddings_brute(g: Graph, m: Motif) -> int:
    """Maximum number of edge-disjoint copies of ``m`` by exhaustive search (tiny graphs only)."""
    import itertools

    copies = set()
    medges = list(m.edges)
    for t in itertools.permutations(range(g.n_vertices), m.size):
        es = [(t[a], t[b]) for a, b in medges]
        if not g.directed:
            es = [(min(a, b), max(a, b)) for a, b in es]
        if all(g.has_edge(*e) for e in es):
            copies.add(frozenset(es))
    copies = sorted(copies, key=sorted)
    best = 0

    def rec(i, taken, count):
        nonlocal best
        best = max(best, count)
        if i == len(copies) or count + (len(copies) - i) <= best:
            return
        c = copies[i]
        if not (c & taken):
            rec(i + 1, taken | c, count + 1)
        rec(i + 1, taken, count)

    rec(0, frozenset(), 0)
    return best
