import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sgcm.configurations import SubgraphConfiguration, atom_counts, is_cover
from sgcm.graphs import Graph, clique, cycle, diamond, directed_edge, edge, path, star, triangle
from sgcm.inference import (InferenceError, applicable_variants, description_length, discover_candidates,
                            edge_only_dl, find_disjoint_embeddings, greedy_infer, select_model)
from sgcm.matching import EdgePool, disjoint_embeddings
from sgcm.models import ModelVariant


def from_nx(h, directed=False):
    h = nx.convert_node_labels_to_integers(h)
    return Graph(h.number_of_nodes(), list(h.edges()), directed)


def max_disjoint_copies(g, m):
    """Largest number of edge-disjoint copies, by trying every subset of copies."""
    copies = set()
    for t in itertools.permutations(range(g.n_vertices), m.size):
        es = frozenset(tuple(sorted((t[a], t[b]))) for a, b in m.edges)
        if all(g.has_edge(*e) for e in es):
            copies.add(es)
    copies = sorted(copies, key=sorted)

    def best(i, taken):
        if i == len(copies):
            return 0
        skip = best(i + 1, taken)
        if copies[i] & taken:
            return skip
        return max(skip, 1 + best(i + 1, taken | copies[i]))

    return best(0, frozenset())


@pytest.mark.parametrize("h, m, expected", [
    (nx.complete_graph(4), triangle(), 1),
    (nx.disjoint_union(nx.complete_graph(3), nx.complete_graph(3)), triangle(), 2),
    (nx.cycle_graph(6), path(3), 3),
    (nx.cycle_graph(8), cycle(4), 0),
    (nx.complete_graph(5), cycle(4), 1),
])
def test_disjoint_embedding_examples(h, m, expected):
    g = from_nx(h)
    assert max_disjoint_copies(g, m) == expected
    assert len(find_disjoint_embeddings(g, m)) == expected


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.sampled_from([triangle(), path(3), cycle(4), star(3)]))
def test_disjoint_embeddings_are_disjoint_and_maximal(seed, m):
    g = from_nx(nx.gnm_random_graph(7, 10, seed=seed))
    pool = EdgePool(g)
    found = disjoint_embeddings(pool, m)
    used = [e for a in found for e in (tuple(sorted((a[x], a[y]))) for x, y in m.edges)]
    assert len(used) == len(set(used))
    assert all(g.has_edge(*e) for e in used)
    assert len(found) <= max_disjoint_copies(g, m)
    # nothing more fits in what is left
    assert disjoint_embeddings(pool, m) == []


def test_discovery_small_graphs():
    assert {m.label for m in discover_candidates(from_nx(nx.complete_graph(3)))} == {"edge", "path-3", "triangle"}
    assert {m.label for m in discover_candidates(from_nx(nx.star_graph(3)))} == {"edge", "path-3", "star-3"}
    assert {m.label for m in discover_candidates(from_nx(nx.complete_graph(4)), max_size=4)} >= {
        "triangle", "4-cycle", "diamond", "star-3", "path-4", clique(4).label}


def test_discovery_sampling_still_finds_common_classes():
    g = from_nx(nx.gnm_random_graph(60, 200, seed=1))
    exact = set(discover_candidates(g, max_size=4))
    sampled = set(discover_candidates(g, max_size=4, budget=50))
    assert {triangle(), path(3), star(3)} <= sampled <= exact


def planted_triangles(n=30, seed=0):
    rng = np.random.default_rng(seed)
    perm = rng.permutation(3 * n)
    es = []
    for i in range(n):
        a, b, c = (int(x) for x in perm[3 * i:3 * i + 3])
        es += [(a, b), (b, c), (a, c)]
    return Graph(3 * n, es)


def test_planted_triangles_recovered():
    g = planted_triangles()
    rep = select_model(g, discover_candidates(g, max_size=5), max_size=5)
    assert atom_counts(rep.best.configuration) == {triangle(): 30}
    assert rep.log_odds_vs_edges > 0
    for v, r in rep.results.items():
        assert atom_counts(r.configuration) == {triangle(): 30}


def test_greedy_sigma_matches_fresh_evaluation():
    g = from_nx(nx.gnm_random_graph(40, 90, seed=3))
    cands = discover_candidates(g, max_size=4)
    for v in applicable_variants(False):
        for partial in (True, False):
            r = greedy_infer(g, cands, v, max_size=4, partial=partial)
            assert is_cover(r.configuration, g)
            fresh = description_length(r.configuration, v, g, max_size=4)
            assert r.dl.sigma == pytest.approx(fresh.sigma, rel=1e-9, abs=1e-9)


def test_default_greedy_takes_the_better_mode():
    g = from_nx(nx.gnm_random_graph(30, 70, seed=4))
    cands = discover_candidates(g, max_size=4)
    both = greedy_infer(g, cands, "dc_total", max_size=4)
    modes = [greedy_infer(g, cands, "dc_total", max_size=4, partial=p).dl.sigma for p in (True, False)]
    assert both.dl.sigma == pytest.approx(min(modes))


def test_prune_never_lengthens():
    g = from_nx(nx.gnm_random_graph(40, 110, seed=5))
    cands = discover_candidates(g, max_size=4)
    for v in ("dc_orbit", "homogeneous"):
        plain = greedy_infer(g, cands, v, max_size=4)
        pruned = greedy_infer(g, cands, v, max_size=4, prune=True)
        assert pruned.dl.sigma <= plain.dl.sigma + 1e-9
        assert is_cover(pruned.configuration, g)


def test_log_odds_definition():
    g = from_nx(nx.karate_club_graph())
    rep = select_model(g, discover_candidates(g, max_size=4), max_size=4)
    e = edge_only_dl(g, max_size=4)
    assert e.sigma == pytest.approx(description_length(SubgraphConfiguration.single_edges(g), "dc_total", g,
                                                       max_size=4).sigma)
    assert rep.log_odds_vs_edges == pytest.approx(e.sigma - rep.best.dl.sigma)
    assert rep.best.dl.sigma == pytest.approx(min(r.dl.sigma for r in rep.results.values()), abs=1e-8)


def test_deterministic():
    g = from_nx(nx.gnm_random_graph(50, 120, seed=6))
    a = select_model(g, discover_candidates(g, max_size=4, seed=1), max_size=4)
    b = select_model(g, discover_candidates(g, max_size=4, seed=1), max_size=4, threads=4)
    assert a.selected == b.selected
    for v in a.results:
        assert a.results[v].configuration == b.results[v].configuration
        assert a.results[v].dl.sigma == b.results[v].dl.sigma


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.integers(5, 12), st.integers(1, 20))
def test_every_result_is_a_cover(seed, n, m):
    m = min(m, n * (n - 1) // 2)
    g = from_nx(nx.gnm_random_graph(n, m, seed=seed))
    rep = select_model(g, discover_candidates(g, max_size=4, seed=seed), max_size=4)
    for r in rep.results.values():
        assert is_cover(r.configuration, g)
        assert r.dl.sigma <= rep.edge_only.sigma + 1e-9 or r.variant is ModelVariant.HOMOGENEOUS


def test_directed_graph_variants():
    g = Graph(4, [(0, 1), (1, 2), (2, 0), (2, 3)], directed=True)
    assert ModelVariant.DC_DIRECTED in applicable_variants(True)
    rep = select_model(g, discover_candidates(g, max_size=3), max_size=3)
    assert all(m.directed for m in atom_counts(rep.best.configuration))
    assert is_cover(rep.best.configuration, g)


def test_directed_sigma_matches_fresh_evaluation():
    # residual edges must keep their orientation in the in/out degree vectors
    g = from_nx(nx.gnm_random_graph(30, 80, seed=7, directed=True), directed=True)
    cands = discover_candidates(g, max_size=3)
    for v in applicable_variants(True):
        for partial in (True, False):
            r = greedy_infer(g, cands, v, max_size=3, partial=partial)
            fresh = description_length(r.configuration, v, g, max_size=3)
            assert r.dl.sigma == pytest.approx(fresh.sigma, rel=1e-9, abs=1e-9)


def test_errors():
    g = from_nx(nx.path_graph(4))
    with pytest.raises(InferenceError):
        greedy_infer(g, [], "dc_directed")
    with pytest.raises(InferenceError):
        select_model(g, [], variants=["dc_directed"])
    with pytest.raises(InferenceError):
        select_model(Graph(3, []), [])
    with pytest.raises(InferenceError):
        description_length(SubgraphConfiguration(4), "dc_orbit", g)
    with pytest.raises(ValueError):
        greedy_infer(g, [], "no-such-variant")
