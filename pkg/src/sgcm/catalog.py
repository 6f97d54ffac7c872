"""The universe of connected motifs and its total order.

Motifs are ranked by (vertex count, edge count, canonical code); the single
edge gets index 1.  The full universe up to the default size caps (12112
undirected motifs on 2..8 vertices, 9578 directed motifs on 2..5 vertices)
ships as package data so ranking never needs to enumerate 8-vertex graphs
at run time.  ``enumerate_motifs`` regenerates any layer from scratch.
"""

from __future__ import annotations

import bisect
import itertools
from functools import lru_cache
from importlib import resources

from .graphs import MAX_SIZE_DIRECTED, MAX_SIZE_UNDIRECTED, Graph, Motif, canonical_form, decode

#: number of connected graphs by vertex count (OEIS A001349, A003085)
CONNECTED_UNDIRECTED = {2: 1, 3: 2, 4: 6, 5: 21, 6: 112, 7: 853, 8: 11117}
CONNECTED_DIRECTED = {2: 2, 3: 13, 4: 199, 5: 9364}


def _sort_key(code: bytes, directed: bool) -> tuple[int, int, bytes]:
    return code[0], sum(bin(b).count("1") for b in code[1:]), code


def enumerate_motifs(size: int, directed: bool = False) -> list[bytes]:
    """Canonical codes of all connected motifs with ``size`` vertices, in rank order.

    Every connected graph has a vertex whose removal keeps it connected, so
    each layer is obtained by attaching one new vertex to the previous layer
    in every possible way.
    """
    if size < 2:
        raise ValueError("motifs have at least two vertices")
    if size == 2:
        layer = {canonical_form(Graph(2, [(0, 1)], directed))[0]}
        if directed:
            layer.add(canonical_form(Graph(2, [(0, 1), (1, 0)], True))[0])
        return sorted(layer, key=lambda c: _sort_key(c, directed))
    new = size - 1
    states = ((0, 1), (1, 0), (1, 1), (0, 0)) if directed else ((1,), (0,))
    found: set[bytes] = set()
    for code in enumerate_motifs(size - 1, directed):
        base = decode(code, directed)
        for choice in itertools.product(states, repeat=new):
            extra = []
            for v, st in enumerate(choice):
                if directed:
                    if st[0]:
                        extra.append((new, v))
                    if st[1]:
                        extra.append((v, new))
                elif st[0]:
                    extra.append((v, new))
            if not extra:
                continue
            g = Graph(size, list(base.edges) + extra, directed)
            found.add(canonical_form(g, max_size=size)[0])
    return sorted(found, key=lambda c: _sort_key(c, directed))


def _data_name(directed: bool) -> str:
    return "motifs_directed.txt" if directed else "motifs_undirected.txt"


@lru_cache(maxsize=None)
def _packaged(directed: bool) -> tuple[bytes, ...]:
    try:
        text = resources.files("sgcm.data").joinpath(_data_name(directed)).read_text()
    except (FileNotFoundError, ModuleNotFoundError):
        return ()
    return tuple(bytes.fromhex(line) for line in text.split())


@lru_cache(maxsize=None)
def universe(directed: bool = False, max_size: int | None = None) -> tuple[bytes, ...]:
    """All motif codes up to ``max_size`` vertices, sorted by rank."""
    cap = max_size or (MAX_SIZE_DIRECTED if directed else MAX_SIZE_UNDIRECTED)
    packaged = _packaged(directed)
    if packaged and packaged[-1][0] >= cap:
        return tuple(c for c in packaged if c[0] <= cap)
    codes: list[bytes] = []
    for size in range(2, cap + 1):
        codes.extend(enumerate_motifs(size, directed))
    return tuple(codes)


def universe_size(directed: bool = False, max_size: int | None = None) -> int:
    cap = max_size or (MAX_SIZE_DIRECTED if directed else MAX_SIZE_UNDIRECTED)
    table = CONNECTED_DIRECTED if directed else CONNECTED_UNDIRECTED
    if cap in table:
        return sum(v for k, v in table.items() if k <= cap)
    return len(universe(directed, cap))


@lru_cache(maxsize=None)
def _keys(directed: bool, max_size: int | None) -> list[tuple[int, int, bytes]]:
    return [_sort_key(c, directed) for c in universe(directed, max_size)]


def motif_index(m: Motif, max_size: int | None = None) -> int:
    """1-based rank of ``m`` in the motif universe."""
    cap = max_size or (MAX_SIZE_DIRECTED if m.directed else MAX_SIZE_UNDIRECTED)
    if m.size > cap:
        raise ValueError(f"{m!r} exceeds the universe size cap {cap}")
    keys = _keys(m.directed, cap)
    key = _sort_key(m.code, m.directed)
    i = bisect.bisect_left(keys, key)
    if i == len(keys) or keys[i] != key:
        raise ValueError(f"{m!r} not found in the motif universe")
    return i + 1


def write_packaged_data(path) -> None:
    """Regenerate the shipped universe files (slow: enumerates all 8-vertex graphs)."""
    from pathlib import Path

    out = Path(path)
    for directed, cap in ((False, MAX_SIZE_UNDIRECTED), (True, MAX_SIZE_DIRECTED)):
        codes = []
        for size in range(2, cap + 1):
            codes.extend(enumerate_motifs(size, directed))
        (out / _data_name(directed)).write_text("\n".join(c.hex() for c in codes) + "\n")
