"""Command line front end: ingest edge lists, run inference, sample benchmarks.

Exit codes: 0 success, 2 input error, 3 infeasible model or spec, 4 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .configurations import Granularity, OrbitDegreeTable, SubgraphConfiguration, atom_counts, project
from .generators import GeneratorError, GeneratorSpec, sample_dc, sample_homogeneous
from .graphs import (MAX_SIZE_DIRECTED, MAX_SIZE_UNDIRECTED, Graph, GraphError, Motif, clique, cycle, diamond,
                     directed_cycle, directed_edge, edge, feed_forward_loop, path, star)
from .inference import (DEFAULT_BUDGET, DLReport, InferenceError, applicable_variants, description_length,
                        discover_candidates, select_model)
from .models import ModelVariant

log = logging.getLogger("sgcm")

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 2, 3, 4


class InputError(ValueError):
    pass


class InvariantError(RuntimeError):
    pass


# -- edge lists -----------------------------------------------------------------

@dataclass
class EdgeList:
    graph: Graph
    labels: list[str]
    duplicates: int = 0
    self_loops: int = 0


def ingest_edge_list(path: str | os.PathLike, directed: bool = False) -> EdgeList:
    """Read whitespace-separated ``u v`` lines into a graph with dense ids.

    Labels that are all integers keep their numeric order; otherwise ids follow
    first appearance.  Duplicate edges and self-loops are dropped and counted.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    pairs = []
    for no, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InputError(f"{path}:{no}: expected two vertex labels, got {len(parts)} fields")
        pairs.append((parts[0], parts[1]))
    if not pairs:
        raise InputError(f"{path}: no edges")
    seen = list(dict.fromkeys(x for p in pairs for x in p))
    if all(re.fullmatch(r"-?\d+", x) for x in seen):
        seen.sort(key=int)
    ids = {x: i for i, x in enumerate(seen)}
    edges, loops, dups = set(), 0, 0
    for a, b in pairs:
        u, v = ids[a], ids[b]
        if u == v:
            loops += 1
            continue
        e = (u, v) if directed else (min(u, v), max(u, v))
        if e in edges:
            dups += 1
        edges.add(e)
    if not edges:
        raise InputError(f"{path}: only self-loops")
    if dups:
        log.warning("%s: collapsed %d duplicate edge(s)", path, dups)
    if loops:
        log.warning("%s: dropped %d self-loop(s)", path, loops)
    return EdgeList(Graph(len(seen), sorted(edges), directed), seen, dups, loops)


def write_edge_list(path: Path, g: Graph) -> None:
    with open(path, "w") as fh:
        fh.write(f"# {g.n_vertices} vertices, {g.n_edges} edges{', directed' if g.directed else ''}\n")
        for a, b in g.sorted_edges():
            fh.write(f"{a} {b}\n")


# -- motifs by name --------------------------------------------------------------

_NAMED = [
    (r"edge", lambda: edge()),
    (r"triangle", lambda: clique(3)),
    (r"diamond", lambda: diamond()),
    (r"clique-(\d+)", lambda k: clique(k)),
    (r"(\d+)-cycle", lambda k: cycle(k)),
    (r"path-(\d+)", lambda k: path(k)),
    (r"star-(\d+)", lambda k: star(k)),
    (r"directed-edge", lambda: directed_edge()),
    (r"ffl", lambda: feed_forward_loop()),
    (r"directed-(\d+)-cycle", lambda k: directed_cycle(k)),
]


def parse_motif(token: str, directed: bool) -> Motif:
    """A motif from a common name (``triangle``, ``4-cycle``, ``path-3``...) or a hex canonical code."""
    token = token.strip()
    for pattern, make in _NAMED:
        hit = re.fullmatch(pattern, token)
        if hit:
            m = make(*(int(x) for x in hit.groups()))
            if m.directed != directed:
                raise InputError(f"motif {token!r} does not match the graph's directedness")
            return m
    try:
        code = bytes.fromhex(token)
    except ValueError:
        raise InputError(f"unknown motif {token!r}") from None
    try:
        return Motif.from_code(code, directed)
    except (GraphError, ValueError, IndexError) as exc:
        raise InputError(f"bad motif code {token!r}: {exc}") from exc


def read_motif_file(path: str | os.PathLike, directed: bool) -> list[Motif]:
    out = []
    for no, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if line:
            try:
                out.append(parse_motif(line, directed))
            except InputError as exc:
                raise InputError(f"{path}:{no}: {exc}") from exc
    return out


# -- serialization -----------------------------------------------------------------

def motif_record(m: Motif) -> dict:
    return {"code": m.code.hex(), "label": m.label, "n_vertices": m.size, "edges": [list(e) for e in m.edges]}


def configuration_json(c: SubgraphConfiguration, directed: bool, labels: Sequence[str] | None = None) -> dict:
    motifs = sorted(atom_counts(c), key=lambda m: (m.size, m.n_edges, m.code))
    rows = sorted((m.code.hex(), list(p.vertices)) for p in c.placements for m in [p.motif])
    out = {
        "n_vertices": c.n_vertices,
        "directed": directed,
        "motifs": [motif_record(m) for m in motifs],
        "placements": [{"motif": code, "vertices": vs} for code, vs in rows],
    }
    if labels is not None:
        out["vertex_labels"] = list(labels)
    return out


def read_configuration(path: str | os.PathLike) -> SubgraphConfiguration:
    from .configurations import Placement

    data = json.loads(Path(path).read_text())
    directed = bool(data["directed"])
    motifs = {r["code"]: Motif.from_code(bytes.fromhex(r["code"]), directed) for r in data["motifs"]}
    return SubgraphConfiguration(data["n_vertices"], (Placement.make(motifs[p["motif"]], p["vertices"])
                                                      for p in data["placements"]))


def dumps(obj) -> str:
    """Indented JSON with numeric arrays kept on one line."""
    text = json.dumps(obj, indent=1)
    text = re.sub(r"\[\s*(-?[\d.eE+-]+(?:,\s*-?[\d.eE+-]+)*)\s*\]",
                  lambda m: "[" + ", ".join(x.strip() for x in m.group(1).split(",")) + "]", text)
    # placements, one per line
    text = re.sub(r'\{\s*("motif": "[0-9a-f]+"),\s*("vertices": \[[^\]]*\])\s*\}', r"{\1, \2}", text)
    return text + "\n"


def _round(x: float) -> float:
    # fixed precision keeps reports diff-able
    return float(f"{x:.10g}")


def build_report(g: Graph, rep: DLReport, name: str, settings: Mapping[str, Any]) -> dict:
    variants = {}
    for v, r in rep.results.items():
        counts = atom_counts(r.configuration)
        variants[v.value] = {
            "sigma": _round(r.dl.sigma),
            "entropy": _round(r.dl.entropy),
            "complexity": _round(r.dl.complexity),
            "degree_prior": _round(r.dl.degree_prior),
            "counts_prior": _round(r.dl.counts_prior),
            "motif_prior": _round(r.dl.motif_prior),
            "log_odds_vs_edges": _round(rep.edge_only.sigma - r.dl.sigma),
            "atoms": {m.label: n for m, n in sorted(counts.items(), key=lambda kv: (kv[0].size, kv[0].code))},
        }
    best = atom_counts(rep.best.configuration)
    table = []
    for m, n in sorted(best.items(), key=lambda kv: (-kv[1] * kv[0].n_edges, kv[0].size, kv[0].code)):
        row = motif_record(m)
        row.update(count=n, edge_share=_round(n * m.n_edges / g.n_edges))
        table.append(row)
    return {
        "network": name,
        "n_vertices": g.n_vertices,
        "n_edges": g.n_edges,
        "directed": g.directed,
        "settings": dict(settings),
        "selected": rep.selected.value,
        "edge_only_sigma": _round(rep.edge_only.sigma),
        "log_odds_vs_edges": _round(rep.log_odds_vs_edges),
        "variants": variants,
        "atoms": table,
    }


SUMMARY_COLUMNS = ["network", "n_vertices", "n_edges", "variant", "selected", "sigma", "entropy", "complexity",
                   "edge_only_sigma", "log_odds_vs_edges", "n_atom_types", "nontrivial_edge_share"]


def summary_rows(report: dict) -> list[list[str]]:
    rows = []
    for v, r in report["variants"].items():
        nontrivial = sum(n for lbl, n in r["atoms"].items() if lbl not in ("edge", "directed-edge"))
        share = 1 - r["atoms"].get("edge", r["atoms"].get("directed-edge", 0)) / report["n_edges"]
        rows.append([report["network"], report["n_vertices"], report["n_edges"], v, int(v == report["selected"]),
                     r["sigma"], r["entropy"], r["complexity"], report["edge_only_sigma"], r["log_odds_vs_edges"],
                     len(r["atoms"]), _round(share) if nontrivial else 0.0])
    return [[str(x) for x in row] for row in rows]


# -- run -----------------------------------------------------------------------------

@dataclass
class RunConfig:
    input: str
    out: str = "sgcm-out"
    directed: bool = False
    max_size: int | None = None
    budget: int = DEFAULT_BUDGET
    variants: list[str] | None = None
    seed: int = 0
    motifs: str | None = None
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)
    prune: bool = False

    def __post_init__(self):
        cap = MAX_SIZE_DIRECTED if self.directed else MAX_SIZE_UNDIRECTED
        if self.max_size is not None and not 2 <= self.max_size <= cap:
            raise InputError(f"max size must lie in [2, {cap}]")
        if self.budget < 1 or self.threads < 1:
            raise InputError("budget and threads must be positive")
        if self.variants is not None:
            try:
                self.variants = [ModelVariant(v).value for v in self.variants]
            except ValueError as exc:
                raise InputError(str(exc)) from exc


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (InputError, InvariantError) as exc:
        raise type(exc)(f"{name}: {exc}") from exc
    except (GraphError, InferenceError, GeneratorError) as exc:
        raise type(exc)(f"{name}: {exc}") from exc


def run(config: RunConfig) -> dict:
    """Discovery, inference and model selection; writes the three report files and returns the report."""
    data = _stage("ingest", ingest_edge_list, config.input, config.directed)
    g = data.graph
    if config.motifs:
        candidates = _stage("motifs", read_motif_file, config.motifs, g.directed)
    else:
        candidates = _stage("discover", discover_candidates, g, config.max_size, config.budget, config.seed)
    variants = config.variants or [v.value for v in applicable_variants(g.directed)]
    rep = _stage("infer", select_model, g, candidates, variants, config.max_size, threads=config.threads,
                 prune=config.prune)
    # every reported Σ must survive a from-scratch recomputation
    for v, r in rep.results.items():
        fresh = description_length(r.configuration, v, g, config.max_size).sigma
        if not math.isclose(fresh, r.dl.sigma, rel_tol=1e-8, abs_tol=1e-8):
            raise InvariantError(f"verify: {v.value} Σ {r.dl.sigma} does not match recomputed {fresh}")
    settings = {"directed": g.directed, "max_size": config.max_size, "budget": config.budget,
                "variants": variants, "seed": config.seed, "prune": config.prune,
                "motifs": Path(config.motifs).name if config.motifs else None,
                "n_candidates": len(candidates)}
    report = build_report(g, rep, Path(config.input).stem, settings)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(dumps(report))
    conf = configuration_json(rep.best.configuration, g.directed, data.labels)
    conf["variant"] = rep.selected.value
    (out / "configuration.json").write_text(dumps(conf))
    with open(out / "summary.tsv", "w") as fh:
        fh.write("\t".join(SUMMARY_COLUMNS) + "\n")
        for row in summary_rows(report):
            fh.write("\t".join(row) + "\n")
    return report


# -- generate ---------------------------------------------------------------------------

def _degree_key(name: str, granularity: Granularity, directed: bool):
    if granularity is Granularity.TOTAL:
        return "total"
    if granularity is Granularity.DIRECTED:
        if name not in ("in", "out", "mixed"):
            raise InputError(f"directed degree components are in/out/mixed, not {name!r}")
        return name
    if granularity is Granularity.MOTIF:
        return parse_motif(name, directed)
    motif, _, orbit = name.rpartition(":")
    if not motif:
        raise InputError(f"orbit components are written motif:orbit, not {name!r}")
    return parse_motif(motif, directed), int(orbit)


def generator_spec(data: Mapping[str, Any]) -> GeneratorSpec:
    """A GeneratorSpec from its JSON form.

    Keys: ``n_vertices``, ``counts`` (motif name or hex code to count),
    optional ``directed``, ``seed``, ``policy``, ``max_attempts`` and, for
    degree-corrected sampling, ``granularity`` plus ``degrees`` (component name
    to per-vertex list; components are ``total``, ``in``/``out``, a motif, or
    ``motif:orbit``).
    """
    try:
        directed = bool(data.get("directed", False))
        n = int(data["n_vertices"])
        counts: dict[Motif, int] = {}
        for k, v in data["counts"].items():
            m = parse_motif(k, directed)
            counts[m] = counts.get(m, 0) + int(v)
        table = None
        if "degrees" in data:
            gran = Granularity(data.get("granularity", "total"))
            entries = {}
            for k, vec in data["degrees"].items():
                arr = np.asarray(vec, dtype=np.int64)
                if arr.shape != (n,):
                    raise InputError(f"degree component {k!r} needs {n} entries")
                entries[_degree_key(k, gran, directed)] = arr
            table = OrbitDegreeTable(gran, n, entries, dict(counts))
        return GeneratorSpec(n, counts, table, data.get("seed"), data.get("policy", "reject"),
                             int(data.get("max_attempts", 100_000)))
    except KeyError as exc:
        raise InputError(f"generator spec is missing {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, (InputError, GeneratorError)):
            raise
        raise InputError(f"bad generator spec: {exc}") from exc


def generate(spec: GeneratorSpec, out: str | os.PathLike) -> Graph:
    """Sample from ``spec``; writes edges.txt and the ground-truth configuration.json."""
    sample = sample_dc(spec) if spec.table is not None else sample_homogeneous(spec)
    directed = any(m.directed for m in spec.counts)
    g = project(sample.configuration, directed=directed)[0]
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    write_edge_list(out / "edges.txt", g)
    conf = configuration_json(sample.configuration, directed)
    conf["attempts"] = sample.attempts
    (out / "configuration.json").write_text(dumps(conf))
    return g


# -- entry point ------------------------------------------------------------------------------

RUN_KEYS = ("input", "directed", "max_size", "budget", "variants", "seed", "out", "motifs", "threads", "prune")


def _read_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InputError(f"config {path}: expected a JSON object")
    return data


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sgcm", description="Decompose networks into atomic subgraphs.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="infer the MAP configuration and select a model")
    r.add_argument("--config", help="JSON file with the same keys as the flags; explicit flags win")
    r.add_argument("--input")
    r.add_argument("--directed", action="store_const", const=True, default=None)
    r.add_argument("--max-size", type=int)
    r.add_argument("--budget", type=int)
    r.add_argument("--variants", help="comma-separated variant names")
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--motifs", help="file of motif names or hex codes, one per line")
    r.add_argument("--threads", type=int)
    r.add_argument("--prune", action="store_const", const=True, default=None,
                   help="after the greedy, turn atoms back into edges when that shortens the description")

    i = sub.add_parser("ingest", help="parse an edge list and print its size and label mapping")
    i.add_argument("input")
    i.add_argument("--directed", action="store_true")
    i.add_argument("--labels", help="write the label mapping here (one label per line, in id order)")

    gen = sub.add_parser("generate", help="sample a benchmark graph with its ground truth")
    gen.add_argument("spec", help="JSON generator spec, or a config file with a 'generator' section")
    gen.add_argument("--out", default="sgcm-generated")
    gen.add_argument("--seed", type=int)
    return p


def _run_config(args: argparse.Namespace) -> RunConfig:
    values = _read_config(args.config)
    unknown = set(values) - set(RUN_KEYS) - {"generator"}
    if unknown:
        raise InputError(f"unknown config keys: {', '.join(sorted(unknown))}")
    values = {k: v for k, v in values.items() if k in RUN_KEYS}
    for k in RUN_KEYS:
        v = getattr(args, k)
        if v is not None:
            values[k] = v
    if isinstance(values.get("variants"), str):
        values["variants"] = [x.strip() for x in values["variants"].split(",") if x.strip()]
    if "input" not in values:
        raise InputError("no input given")
    return RunConfig(**values)


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "ingest":
            data = ingest_edge_list(args.input, args.directed)
            print(f"vertices\t{data.graph.n_vertices}\nedges\t{data.graph.n_edges}\n"
                  f"duplicates\t{data.duplicates}\nself_loops\t{data.self_loops}")
            if args.labels:
                Path(args.labels).write_text("".join(x + "\n" for x in data.labels))
        elif args.command == "run":
            report = run(_run_config(args))
            print(f"selected {report['selected']}  log odds vs edges {report['log_odds_vs_edges']:.1f}")
        else:
            data = _read_config(args.spec)
            spec = generator_spec(data.get("generator", data))
            if args.seed is not None:
                spec.seed = args.seed
            g = generate(spec, args.out)
            print(f"wrote {g.n_vertices} vertices, {g.n_edges} edges to {args.out}")
    except InputError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except (GraphError, InferenceError, GeneratorError) as exc:
        log.error("%s", exc)
        return EXIT_INFEASIBLE
    except InvariantError as exc:
        log.error("%s", exc)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
