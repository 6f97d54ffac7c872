"""Description lengths, greedy cover inference and model selection.

The description length of a configuration is the negative log of its
posterior mass, Σ = S + ε, where S = −log P(C | params) and ε collects the
priors on the degree tables, the atom counts and the atom set.

The greedy adds one atom at a time, scoring each candidate by the change in
Σ per newly covered edge.  It runs in two modes.  In partial mode Σ counts
only the covered edges, so an empty configuration costs nothing; finishing
the remainder with single edges is one more move scored the same way, and
picking it ends the run.  In completion mode every stage is completed with
single edges, so the greedy stops once no atom lowers Σ.  By default both
run and the cheaper final cover wins, ties going to partial mode.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np
from scipy.special import gammaln

from . import catalog, models, priors
from .configurations import (Granularity, Placement, SubgraphConfiguration, degree_table_from_arrays,
                             edge_assignments, is_cover, motif_layout, orbit_degree_table,
                             position_component)
from .graphs import MAX_SIZE_DIRECTED, MAX_SIZE_UNDIRECTED, Graph, Motif, canonical_form, directed_edge, edge
from .matching import EdgePool, disjoint_embeddings, patterns, placed_edges
from .models import ModelVariant

DEFAULT_BUDGET = 20_000


class InferenceError(ValueError):
    pass


def _motif_key(m: Motif) -> tuple:
    return (m.size, m.n_edges, m.code)


def applicable_variants(directed: bool) -> list[ModelVariant]:
    vs = [ModelVariant.HOMOGENEOUS, ModelVariant.DC_ORBIT, ModelVariant.DC_MOTIF, ModelVariant.DC_TOTAL]
    if directed:
        vs.append(ModelVariant.DC_DIRECTED)
    return vs


# -- description length --------------------------------------------------------

@dataclass
class DLEntry:
    """Description length of one configuration under one variant, in nats."""

    variant: ModelVariant
    sigma: float
    entropy: float
    degree_prior: float
    counts_prior: float
    motif_prior: float

    @property
    def complexity(self) -> float:
        return self.degree_prior + self.counts_prior + self.motif_prior


def description_length(c: SubgraphConfiguration, variant: ModelVariant | str, g: Graph,
                       max_size: int | None = None, support: str = "positive",
                       corrections: bool = True) -> DLEntry:
    """Σ of a cover of ``g``, evaluated from scratch."""
    variant = ModelVariant(variant)
    if not is_cover(c, g):
        raise InferenceError("description lengths are defined for covers of the graph")
    if variant is ModelVariant.DC_DIRECTED and not g.directed:
        raise InferenceError("the directed-degree model needs a directed graph")
    table = orbit_degree_table(c)
    counts = dict(table.counts)
    ll = models.loglik(variant, table, counts, corrections=corrections).log_p
    deg = 0.0
    if variant.degree_corrected:
        deg = -priors.degree_logprior(table.aggregate(variant.granularity))
    cnt = -priors.counts_log_prior(counts, g.n_edges, support)
    mot = -priors.motif_set_log_prior(counts, max_size)
    return DLEntry(variant, -ll + deg + cnt + mot, -ll, deg, cnt, mot)


# -- incremental evaluator ---------------------------------------------------------

@lru_cache(maxsize=100_000)
def _lambda(n_edges: int, edge_counts: tuple[int, ...], support: str) -> float:
    return priors.solve_lambda(n_edges, edge_counts, support)


@lru_cache(maxsize=None)
def _motif_prior_term(m: Motif, max_size: int | None) -> float:
    p = priors.universal_probability(priors.motif_index(m, max_size))
    return math.log(p) - math.log1p(-p)


@dataclass
class _Comp:
    vec: np.ndarray
    s: float
    q: float
    lf: float
    prior: float


def _summarize(vec: np.ndarray, with_prior: bool) -> _Comp:
    d = vec.astype(np.float64)
    s = float(d.sum())
    q = float((d * (d - 1.0)).sum())
    lf = float(gammaln(d + 1.0).sum())
    prior = 0.0
    if with_prior:
        prior = max(priors.degree_logprior_uniform(vec), priors.degree_logprior_hyper(vec))
    return _Comp(vec, s, q, lf, prior)


class _Evaluator:
    """Σ of covers built from nontrivial atoms plus residual single edges."""

    def __init__(self, variant: ModelVariant, g: Graph, max_size: int | None, support: str):
        self.variant = variant
        self.granularity = variant.granularity
        self.dc = variant.degree_corrected
        self.n = g.n_vertices
        self.n_edges = g.n_edges
        self.max_size = max_size
        self.support = support
        self.edge_motif = directed_edge() if g.directed else edge()
        self._homog_cache: dict[tuple[Motif, int], float] = {}
        self._layouts: dict[Motif, list[tuple[Hashable, int]]] = {}

    def layout(self, m: Motif) -> list[tuple[Hashable, int]]:
        if m not in self._layouts:
            self._layouts[m] = sorted(motif_layout(m, self.granularity).items(), key=lambda kv: repr(kv[0]))
        return self._layouts[m]

    # component vectors contributed by placement arrays
    def contributions(self, m: Motif, arr: np.ndarray) -> dict[Hashable, np.ndarray]:
        out: dict[Hashable, np.ndarray] = {}
        if arr.shape[0] == 0:
            return out
        for p in range(m.size):
            k = position_component(m, p, self.granularity)
            vec = np.bincount(arr[:, p], minlength=self.n)
            out[k] = out[k] + vec if k in out else vec
        return out

    def homog_term(self, m: Motif, n: int) -> float:
        key = (m, n)
        if key not in self._homog_cache:
            self._homog_cache[key] = models.loglik_homogeneous({m: n}, self.n).log_p
        return self._homog_cache[key]

    def priors_part(self, counts: Mapping[Motif, int], n_edges: int) -> tuple[float, float]:
        ms = sorted(counts, key=_motif_key)
        e = tuple(sorted(m.n_edges for m in ms))
        lam = _lambda(n_edges, e, self.support)
        cnt = priors.counts_log_prior({m: counts[m] for m in ms}, n_edges, self.support, lam=lam)
        mot = -priors._log_normalizer(ms[0].directed, self.max_size) + sum(
            _motif_prior_term(m, self.max_size) for m in ms)
        return -cnt, -mot

    def sigma(self, comps: Mapping[Hashable, _Comp], counts: Mapping[Motif, int],
              cross: dict) -> DLEntry:
        counts = {m: n for m, n in counts.items() if n > 0}
        if not counts:
            return DLEntry(self.variant, 0.0, 0.0, 0.0, 0.0, 0.0)
        cnt, mot = self.priors_part(counts, sum(m.n_edges * n for m, n in counts.items()))
        if not self.dc:
            ll = sum(self.homog_term(m, n) for m, n in counts.items())
            return DLEntry(self.variant, -ll + cnt + mot, -ll, 0.0, cnt, mot)
        log_omega = 0.0
        deg = 0.0
        for c in comps.values():
            if c.s == 0:
                continue
            log_omega += math.lgamma(c.s + 1.0) - c.lf
            deg -= c.prior
        corr = 0.0
        for m, n in counts.items():
            log_omega -= math.lgamma(n + 1.0) + n * math.log(m.aut_order)
            lay = self.layout(m)
            lam = 0.0
            dup = m.aut_order * n * n / 2.0
            for a, (k, c) in enumerate(lay):
                ck = comps[k]
                r = ck.q / (ck.s * ck.s)
                lam += c * (c - 1) / 2.0 * r
                dup *= r ** c
                for k2, c2 in lay[a + 1:]:
                    pair = (k, k2)
                    x = cross.get(pair)
                    if x is None:
                        x = float(np.dot(ck.vec.astype(np.float64), comps[k2].vec.astype(np.float64)))
                        x /= ck.s * comps[k2].s
                        cross[pair] = x
                    lam += c * c2 * x
            corr += n * lam + dup
        ll = -log_omega + corr
        return DLEntry(self.variant, -ll + deg + cnt + mot, -ll, deg, cnt, mot)


class _State:
    """Current cover: atom placement arrays and the uncovered edge set."""

    def __init__(self, ev: _Evaluator, g: Graph, partial: bool = False):
        self.ev = ev
        self.g = g
        self.partial = partial
        self.atoms: dict[Motif, np.ndarray] = {}
        self.residual: set[tuple[int, int]] = set(g.edges)
        self.comps: dict[Hashable, _Comp] = {}
        self.atom_vecs: dict[Hashable, np.ndarray] = {}
        self.cross: dict = {}
        self.refresh()

    def residual_array(self) -> np.ndarray:
        return np.asarray(sorted(self.residual), dtype=np.int64).reshape(-1, 2)

    def counts(self) -> dict[Motif, int]:
        out = {m: a.shape[0] for m, a in self.atoms.items()}
        if self.residual and not self.partial:
            out[self.ev.edge_motif] = len(self.residual)
        return out

    def edge_vecs(self, edges: np.ndarray) -> dict[Hashable, np.ndarray]:
        m = self.ev.edge_motif
        return self.ev.contributions(m, edge_assignments(m, edges))

    def refresh(self) -> None:
        ev = self.ev
        vecs: dict[Hashable, np.ndarray] = {}
        if not ev.dc:
            self.comps, self.cross = {}, {}
            self.current = ev.sigma({}, self.counts(), {})
            return
        for m, arr in self.atoms.items():
            for k, v in ev.contributions(m, arr).items():
                vecs[k] = vecs[k] + v if k in vecs else v
        self.atom_vecs = vecs
        full = dict(vecs)
        if not self.partial:
            for k, v in self.edge_vecs(self.residual_array()).items():
                full[k] = full[k] + v if k in full else v
        self.comps = {k: _summarize(v, ev.dc) for k, v in full.items()}
        self.cross = {}
        self.current = ev.sigma(self.comps, self.counts(), self.cross)

    def propose(self, m: Motif, arr: np.ndarray) -> DLEntry:
        """Σ after adding the placements ``arr`` of the new atom ``m``."""
        ev = self.ev
        counts = self.counts()
        covered = np.asarray([e for row in arr.tolist() for e in placed_edges(m, row)], dtype=np.int64)
        left = len(self.residual) - covered.shape[0]
        counts[m] = arr.shape[0]
        if self.partial:
            pass
        elif left:
            counts[ev.edge_motif] = left
        else:
            counts.pop(ev.edge_motif, None)
        if not ev.dc:
            return ev.sigma({}, counts, {})
        delta: dict[Hashable, np.ndarray] = {}
        for k, v in ev.contributions(m, arr).items():
            delta[k] = v
        if not self.partial:
            for k, v in self.edge_vecs(covered).items():
                delta[k] = delta[k] - v if k in delta else -v
        comps = dict(self.comps)
        for k, dv in delta.items():
            base = comps[k].vec if k in comps else 0
            comps[k] = _summarize(base + dv, True)
        cross = {pair: x for pair, x in self.cross.items() if pair[0] not in delta and pair[1] not in delta}
        return ev.sigma(comps, counts, cross)

    def propose_completion(self) -> DLEntry:
        """Σ of the cover obtained by adding every uncovered edge as a single edge."""
        return self.ev.sigma(*self._completed())

    def _completed(self):
        ev = self.ev
        counts = {m: a.shape[0] for m, a in self.atoms.items()}
        if self.residual:
            counts[ev.edge_motif] = len(self.residual)
        if not ev.dc:
            return {}, counts, {}
        full = dict(self.atom_vecs)
        for k, v in self.edge_vecs(self.residual_array()).items():
            full[k] = full[k] + v if k in full else v
        return {k: _summarize(v, True) for k, v in full.items()}, counts, {}

    def apply(self, m: Motif, arr: np.ndarray) -> None:
        self.atoms[m] = arr
        for row in arr.tolist():
            for e in placed_edges(m, row):
                self.residual.discard(e)
        self.refresh()

    def _rest(self, m: Motif) -> tuple[dict[Motif, np.ndarray], set[tuple[int, int]]]:
        atoms = {k: a for k, a in self.atoms.items() if k != m}
        residual = self.residual | {e for row in self.atoms[m].tolist() for e in placed_edges(m, row)}
        return atoms, residual

    def without(self, m: Motif) -> DLEntry:
        """Σ of the cover with the placements of ``m`` replaced by single edges."""
        saved = self.atoms, self.residual, self.comps, self.atom_vecs, self.cross, self.current
        self.atoms, self.residual = self._rest(m)
        self.refresh()
        out = self.current
        self.atoms, self.residual, self.comps, self.atom_vecs, self.cross, self.current = saved
        return out

    def drop(self, m: Motif) -> None:
        self.atoms, self.residual = self._rest(m)
        self.refresh()

    def configuration(self) -> SubgraphConfiguration:
        placements = [Placement.make(m, row) for m, arr in self.atoms.items() for row in arr.tolist()]
        m = self.ev.edge_motif
        placements += [Placement.make(m, r) for r in edge_assignments(m, self.residual_array()).tolist()]
        return SubgraphConfiguration(self.g.n_vertices, placements)


# -- candidates --------------------------------------------------------------------

def _grow(g: Graph, nbrs, start: int, size: int, rng: np.random.Generator) -> tuple[int, ...] | None:
    chosen = [start]
    inside = {start}
    frontier: list[int] = sorted(nbrs[start])
    fset = set(frontier)
    while len(chosen) < size:
        if not frontier:
            return None
        v = frontier[int(rng.integers(len(frontier)))]
        chosen.append(v)
        inside.add(v)
        frontier.remove(v)
        fset.discard(v)
        for w in sorted(nbrs[v]):
            if w not in inside and w not in fset:
                frontier.append(w)
                fset.add(w)
    return tuple(chosen)


def _undirected_neighbors(g: Graph) -> list[set[int]]:
    nb = [set() for _ in range(g.n_vertices)]
    for a, b in g.edges:
        nb[a].add(b)
        nb[b].add(a)
    return nb


def _esu(nbrs, size: int):
    """Connected vertex sets of exactly ``size`` vertices, each once (lazy)."""

    def extend(sub, ext, v, excl):
        if len(sub) == size:
            yield sub
            return
        ext = list(ext)
        while ext:
            w = ext.pop()
            new_ext = ext + [u for u in nbrs[w] if u > v and u not in excl]
            yield from extend(sub + (w,), new_ext, v, excl | nbrs[w])

    for v in range(len(nbrs)):
        yield from extend((v,), sorted(u for u in nbrs[v] if u > v), v, nbrs[v] | {v})


def _spanning_classes(code: bytes, directed: bool, max_edges: int = 6) -> set[bytes]:
    from .graphs import decode

    g = decode(code, directed)
    edges = list(g.edges)
    if len(edges) > max_edges:
        return set()
    out = set()
    for r in range(g.n_vertices - 1, len(edges) + 1):
        for sub in itertools.combinations(edges, r):
            h = Graph(g.n_vertices, sub, directed)
            if len({v for e in sub for v in e}) == g.n_vertices and h.is_connected():
                out.add(canonical_form(h)[0])
    return out


def discover_candidates(g: Graph, max_size: int | None = None, budget: int = DEFAULT_BUDGET,
                        seed: int = 0) -> list[Motif]:
    """Classes of connected subgraphs present in ``g``, up to ``max_size`` vertices.

    Connected vertex sets are enumerated size by size.  Once a size has more
    than ``budget`` sets, that size and all larger ones are sampled instead,
    ``budget`` random connected sets each, grown from random start vertices.  For
    every induced class found, its connected spanning subgraphs with at most
    six edges are added too, since those occur as (non-induced) subgraphs.
    """
    cap = MAX_SIZE_DIRECTED if g.directed else MAX_SIZE_UNDIRECTED
    max_size = min(max_size or cap, cap, g.n_vertices)
    if max_size < 2:
        return []
    nbrs = _undirected_neighbors(g)
    active = [v for v in range(g.n_vertices) if nbrs[v]]
    rng = np.random.default_rng(seed)
    vertex_sets: set[tuple[int, ...]] = set()
    sampling = False
    for size in range(2, max_size + 1):
        if not sampling:
            found = []
            for sub in _esu(nbrs, size):
                found.append(tuple(sorted(sub)))
                if len(found) > budget:
                    sampling = True
                    break
            if not sampling:
                vertex_sets.update(found)
                continue
        for _ in range(budget):
            vs = _grow(g, nbrs, active[int(rng.integers(len(active)))], size, rng)
            if vs is not None:
                vertex_sets.add(tuple(sorted(vs)))
    codes: set[bytes] = set()
    for vs in sorted(vertex_sets):
        codes.add(canonical_form(g.induced(vs))[0])
    for code in sorted(codes):
        codes = codes | _spanning_classes(code, g.directed)
    motifs = [Motif.from_code(c, g.directed) for c in codes]
    return sorted(motifs, key=_motif_key)


def find_disjoint_embeddings(g: Graph, m: Motif, covered: Iterable[tuple[int, int]] = ()) -> list[Placement]:
    pool = EdgePool(g, covered)
    return [Placement.make(m, a) for a in disjoint_embeddings(pool, m)]


# -- greedy --------------------------------------------------------------------------

@dataclass
class Step:
    motif: Motif
    copies: int
    sigma_per_edge: float
    sigma_after: float


@dataclass
class GreedyResult:
    variant: ModelVariant
    configuration: SubgraphConfiguration
    dl: DLEntry
    steps: list[Step] = field(default_factory=list)
    partial: bool = True


class _Candidate:
    def __init__(self, m: Motif):
        self.motif = m
        self.plans = patterns(m)
        self.embeddings: list[tuple[int, ...]] = []

    def array(self) -> np.ndarray:
        return np.asarray(self.embeddings, dtype=np.int64).reshape(-1, self.motif.size)


def _initial_embeddings(g: Graph, motifs: Sequence[Motif], threads: int) -> dict[Motif, list[tuple[int, ...]]]:
    def work(m):
        return m, disjoint_embeddings(EdgePool(g), m)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return dict(ex.map(work, motifs))
    return dict(map(work, motifs))


def _repair(pool: EdgePool, cand: _Candidate, newly: set[tuple[int, int]]) -> None:
    """Drop embeddings hitting newly covered edges and search again around the freed edges."""
    m = cand.motif
    keep, freed = [], set()
    for a in cand.embeddings:
        es = placed_edges(m, list(a))
        if newly.intersection(es):
            freed.update(e for e in es if e not in newly)
        else:
            keep.append(a)
    if len(keep) == len(cand.embeddings):
        return
    cand.embeddings = keep
    if not freed:
        return
    taken = [e for a in keep for e in placed_edges(m, list(a))]
    for e in taken:
        pool.remove(e)
    anchors = {v for e in freed for v in e}
    found = disjoint_embeddings(pool, m, anchors, cand.plans)
    for a in found:
        for e in placed_edges(m, list(a)):
            pool.add(e)
    for e in taken:
        pool.add(e)
    cand.embeddings = sorted(keep + found)


def greedy_infer(g: Graph, candidates: Sequence[Motif], variant: ModelVariant | str,
                 max_size: int | None = None, support: str = "positive", threads: int = 1,
                 initial: Mapping[Motif, list[tuple[int, ...]]] | None = None,
                 partial: bool | None = None, prune: bool = False) -> GreedyResult:
    """Greedy cover: repeatedly add the atom whose copies cost the least Σ per newly covered edge.

    With ``partial`` Σ is taken over the covered part only and the single edge
    competes as an atom whose copies are all uncovered edges; picking it
    completes the cover.  Without it every state is completed with single edges
    and the greedy stops once no atom lowers Σ.  The default runs both and
    keeps the shorter description (ties go to the partial run).

    ``prune`` adds a pass after the greedy that turns an atom's placements back
    into single edges whenever that shortens the description, repeated until
    no such atom is left.
    """
    variant = ModelVariant(variant)
    if variant is ModelVariant.DC_DIRECTED and not g.directed:
        raise InferenceError("the directed-degree model needs a directed graph")
    if partial is None:
        motifs = [m for m in candidates if m.directed == g.directed and m.n_edges > 1]
        if initial is None:
            initial = _initial_embeddings(g, motifs, threads)
        runs = [greedy_infer(g, motifs, variant, max_size, support, threads, initial, mode, prune)
                for mode in (True, False)]
        return min(runs, key=lambda r: r.dl.sigma)
    ev = _Evaluator(variant, g, max_size, support)
    state = _State(ev, g, partial)
    motifs = [m for m in candidates if m != ev.edge_motif and m.directed == g.directed and m.n_edges > 1]
    if initial is None:
        initial = _initial_embeddings(g, motifs, threads)
    active = []
    for m in sorted(motifs, key=_motif_key):
        c = _Candidate(m)
        c.embeddings = sorted(initial.get(m, []))
        if c.embeddings:
            active.append(c)
    pool = EdgePool(g)
    steps: list[Step] = []
    index = {c.motif: catalog.motif_index(c.motif, max_size) for c in active}

    def score(c: _Candidate):
        arr = c.array()
        new = state.propose(c.motif, arr)
        return (new.sigma - state.current.sigma) / (arr.shape[0] * c.motif.n_edges), new

    while active and state.residual:
        if threads > 1:
            with ThreadPoolExecutor(threads) as ex:
                scored = list(ex.map(score, active))
        else:
            scored = [score(c) for c in active]
        best = None
        if partial:
            done = state.propose_completion()
            best = ((done.sigma - state.current.sigma) / len(state.residual), 0, b""), None, done
        for c, (s, new) in zip(active, scored):
            key = (s, index[c.motif], c.motif.code)
            if best is None or key < best[0]:
                best = (key, c, new)
        (s, _, _), chosen, new = best
        if chosen is None or not (partial or s < 0):
            break
        arr = chosen.array()
        newly = {e for row in arr.tolist() for e in placed_edges(chosen.motif, row)}
        state.apply(chosen.motif, arr)
        for e in newly:
            pool.remove(e)
        steps.append(Step(chosen.motif, arr.shape[0], s, state.current.sigma))
        rest = []
        for c in active:
            if c is chosen:
                continue
            _repair(pool, c, newly)
            if c.embeddings:
                rest.append(c)
        active = rest
    if partial:
        state.partial = False
        state.refresh()
    if prune:
        _prune(state)
    return GreedyResult(variant, state.configuration(), state.current, steps, partial)


def _prune(state: _State) -> None:
    while state.atoms:
        best = None
        for m in sorted(state.atoms, key=_motif_key):
            trial = state.without(m)
            if trial.sigma < state.current.sigma and (best is None or trial.sigma < best[0]):
                best = (trial.sigma, m)
        if best is None:
            return
        state.drop(best[1])


# -- model selection -------------------------------------------------------------------

@dataclass
class DLReport:
    results: dict[ModelVariant, GreedyResult]
    selected: ModelVariant
    edge_only: DLEntry
    homogeneous_sigma: float | None

    @property
    def best(self) -> GreedyResult:
        return self.results[self.selected]

    @property
    def log_odds_vs_edges(self) -> float:
        """log Λ = Σ_e − Σ of the selected model."""
        return self.edge_only.sigma - self.best.dl.sigma


def edge_only_dl(g: Graph, max_size: int | None = None, support: str = "positive") -> DLEntry:
    return description_length(SubgraphConfiguration.single_edges(g), ModelVariant.DC_TOTAL, g, max_size, support)


TIE_ORDER = (ModelVariant.HOMOGENEOUS, ModelVariant.DC_TOTAL, ModelVariant.DC_DIRECTED, ModelVariant.DC_MOTIF,
             ModelVariant.DC_ORBIT)


def select_model(g: Graph, candidates: Sequence[Motif], variants: Iterable[ModelVariant | str] | None = None,
                 max_size: int | None = None, support: str = "positive", threads: int = 1,
                 prune: bool = False) -> DLReport:
    """Run the greedy under every variant and keep the one with the shortest description."""
    vs = [ModelVariant(v) for v in (variants or applicable_variants(g.directed))]
    if not g.directed and ModelVariant.DC_DIRECTED in vs:
        raise InferenceError("the directed-degree model needs a directed graph")
    if g.n_edges == 0:
        raise InferenceError("the graph has no edges")
    motifs = [m for m in candidates if m.directed == g.directed and m.n_edges > 1]
    initial = _initial_embeddings(g, motifs, threads)
    results = {v: greedy_infer(g, motifs, v, max_size, support, threads, initial, prune=prune) for v in vs}
    # on equal Σ prefer the model with fewer degree parameters
    selected = min(vs, key=lambda v: (round(results[v].dl.sigma, 9), TIE_ORDER.index(v)))
    homog = results[ModelVariant.HOMOGENEOUS].dl.sigma if ModelVariant.HOMOGENEOUS in results else None
    return DLReport(results, selected, edge_only_dl(g, max_size, support), homog)
