"""Command-line experiment runner.

Every subcommand is a thin shell around one module operation: it parses a
graph/kernel mini-spec, derives all randomness from ``--seed`` through
deterministic child streams, and writes flat CSV/JSON artifacts plus a
``manifest.json`` into ``--out``. Identical invocations produce byte-identical
files except for the wall-time field of the manifest.

Exit codes: 0 success, 1 tolerance/capacity/state failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .backend import backend_name
from .coupling import (
    Coupling,
    NotDominated,
    bound_suite,
    dbar,
    dbar_monotone,
    finitely_dependent_approx,
    mdependence_check,
    monotone_coupling,
    return_prob_compare,
    circulant_kernel,
)
from .dpp import DeterminantalMeasure, SubsetDistribution, exact_distribution, sample
from .errors import CapacityExceeded, InvalidArgument, InvalidState, NumericalFailure
from .forests import (
    bounded_cycle_space,
    degree_limit_rows,
    expected_degree,
    fsf_L_kernel,
    girth_check,
    torus_graph,
    torus_square_cycle_space,
    transfer_current,
    wilson_sample,
)
from .graphs import Graph, complete_graph, cycle_graph, grid_graph, path_graph
from .operators import (
    FreeGroup,
    GroupRingElement,
    GroupWord,
    Zd,
    element_trace,
    kernel_fraction,
    limit_trace,
    matrix_from,
    normalized_trace,
    parse_element,
    represent,
    spectral_measure,
)
from .rng import RandomStream
from .schreier import (
    SchreierGraph,
    ball_distance,
    build_torus,
    label_as_schreier,
    local_statistics,
    paired_generators,
    random_schreier,
    subdivide as subdivide_any,
)


# ---------------------------------------------------------------------------
# deterministic formatting
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    """Shortest round-trip text for one CSV cell."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(cell) for cell in row))
    return "\n".join(lines) + "\n"


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj).__name__}")


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"


def _matrix_csv(mat: np.ndarray) -> str:
    rows = np.asarray(mat, dtype=np.float64)
    return "\n".join(",".join(repr(float(x)) for x in row) for row in rows) + "\n"


# ---------------------------------------------------------------------------
# mini-spec parsers (graphs, Schreier graphs, kernels)
# ---------------------------------------------------------------------------

def _parse_int_list(text: str) -> List[int]:
    """Comma-separated integers and inclusive ``a..b`` ranges."""
    out: List[int] = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if ".." in token:
            lo, _, hi = token.partition("..")
            try:
                a, b = int(lo), int(hi)
            except ValueError:
                raise InvalidArgument(f"bad range token {token!r}") from None
            if b < a:
                raise InvalidArgument(f"empty range {token!r}")
            out.extend(range(a, b + 1))
        else:
            try:
                out.append(int(token))
            except ValueError:
                raise InvalidArgument(f"bad integer token {token!r}") from None
    if not out:
        raise InvalidArgument(f"no integers in {text!r}")
    return out


def _parse_float_list(text: str) -> List[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise InvalidArgument(f"bad float list {text!r}") from None
    if not values:
        raise InvalidArgument(f"no floats in {text!r}")
    return values


def parse_graph_spec(spec: str) -> Graph:
    """``complete:N | cycle:N | path:N | grid:RxC | torus:N | file:PATH``."""
    kind, _, rest = spec.partition(":")
    if kind == "complete":
        return complete_graph(int(rest))
    if kind == "cycle":
        return cycle_graph(int(rest))
    if kind == "path":
        return path_graph(int(rest))
    if kind == "grid":
        r, _, c = rest.partition("x")
        return grid_graph(int(r), int(c))
    if kind == "torus":
        return torus_graph(int(rest))
    if kind == "file":
        return Graph.from_json(Path(rest).read_text())
    raise InvalidArgument(f"unknown graph spec {spec!r}")


def parse_schreier_spec(spec: str, stream: RandomStream) -> SchreierGraph:
    """``torus:AxB | random:KxN | file:PATH`` (random uses the given stream)."""
    kind, _, rest = spec.partition(":")
    if kind == "torus":
        dims = [int(tok) for tok in rest.split("x") if tok]
        return build_torus(dims)
    if kind == "random":
        k, _, n = rest.partition("x")
        return random_schreier(int(k), int(n), stream)
    if kind == "file":
        return SchreierGraph.from_json(Path(rest).read_text())
    raise InvalidArgument(f"unknown schreier spec {spec!r}")


def parse_kernel_spec(spec: str) -> Tuple[np.ndarray, Tuple[int, ...], Optional[Graph]]:
    """Kernel matrix + ground labels (+ underlying graph if edge-indexed).

    ``diag:p1,p2,... | circulant:N:c0,c1,... | transfer:GRAPH |
    fsf:L:GRAPH | file:PATH``
    """
    kind, _, rest = spec.partition(":")
    if kind == "diag":
        probs = _parse_float_list(rest)
        mat = np.diag(np.asarray(probs, dtype=np.float64))
        return mat, tuple(range(len(probs))), None
    if kind == "circulant":
        size, _, coeffs = rest.partition(":")
        mat = circulant_kernel(_parse_float_list(coeffs), int(size))
        return mat, tuple(range(mat.shape[0])), None
    if kind == "transfer":
        g = parse_graph_spec(rest)
        y = transfer_current(g)
        return y.entries, y.ground_labels, g
    if kind == "fsf":
        length, _, graph_spec = rest.partition(":")
        g = parse_graph_spec(graph_spec)
        meas = fsf_L_kernel(g, int(length))
        return meas.kernel, meas.ground_labels, g
    if kind == "file":
        data = json.loads(Path(rest).read_text())
        mat = np.asarray(data["entries"], dtype=np.float64)
        labels = tuple(int(x) for x in data.get("labels", range(mat.shape[0])))
        return mat, labels, None
    raise InvalidArgument(f"unknown kernel spec {spec!r}")


def _measure_from_spec(spec: str) -> Tuple[DeterminantalMeasure, Optional[Graph]]:
    mat, labels, g = parse_kernel_spec(spec)
    return DeterminantalMeasure(mat, labels), g


# ---------------------------------------------------------------------------
# subcommand registry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Param:
    name: str
    kind: type = str
    default: object = None  # None with flag=False means required
    help: str = ""
    flag: bool = False


@dataclass
class RunContext:
    seed: int
    out: Path
    jobs: int
    files: Dict[str, str] = field(default_factory=dict)

    def stream(self, tag: int) -> RandomStream:
        return RandomStream(self.seed).child(tag)

    def write(self, name: str, content: str) -> None:
        self.files[name] = content


@dataclass(frozen=True)
class Subcommand:
    name: str
    help: str
    params: Tuple[Param, ...]
    run: Callable[[dict, RunContext], None]


REGISTRY: Dict[str, Subcommand] = {}


def _register(name: str, help_text: str, params: Sequence[Param]):
    def deco(fn):
        REGISTRY[name] = Subcommand(name, help_text, tuple(params), fn)
        return fn

    return deco


# ---------------------------------------------------------------------------
# Schreier-graph subcommands
# ---------------------------------------------------------------------------

def _schreier_summary(s: SchreierGraph) -> dict:
    g = s.underlying_graph()
    return {
        "num_vertices": s.num_vertices,
        "num_symbols": len(s.generators.symbols),
        "num_edges": g.num_edges,
        "flagged_loops": len(s.loop_flags),
    }


@_register("torus", "Cayley diagram of a product of cyclic groups", [
    Param("dims", str, help="side lengths, e.g. 3x3"),
])
def _run_torus(args: dict, ctx: RunContext) -> None:
    toks = args["dims"].split("x")
    if not all(tok.isdigit() for tok in toks):
        raise InvalidArgument(f"malformed dims {args['dims']!r}; expected e.g. 3x4")
    dims = [int(tok) for tok in toks]
    s = build_torus(dims)
    ctx.write("schreier.json", s.to_json() + "\n")
    summary = _schreier_summary(s)
    summary["dims"] = dims
    ctx.write("summary.json", _json_text(summary))


@_register("schreier-random", "uniform random Schreier graph on k paired symbols", [
    Param("k", int, help="number of generator pairs"),
    Param("n", int, help="number of vertices"),
])
def _run_schreier_random(args: dict, ctx: RunContext) -> None:
    s = random_schreier(args["k"], args["n"], ctx.stream(1))
    ctx.write("schreier.json", s.to_json() + "\n")
    ctx.write("summary.json", _json_text(_schreier_summary(s)))


@_register("label", "greedy proper edge-labelling of a plain graph", [
    Param("graph", str, help="graph spec, e.g. grid:3x3"),
    Param("symbols", int, help="number of self-inverse symbols"),
])
def _run_label(args: dict, ctx: RunContext) -> None:
    g = parse_graph_spec(args["graph"])
    s = label_as_schreier(g, args["symbols"], ctx.stream(1))
    back = s.underlying_graph(include_flagged_loops=False)
    round_trip = sorted(
        (min(u, v), max(u, v)) for u, v in back.edges
    ) == sorted((min(u, v), max(u, v)) for u, v in g.edges)
    summary = _schreier_summary(s)
    summary["round_trip_ok"] = bool(round_trip)
    ctx.write("schreier.json", s.to_json() + "\n")
    ctx.write("summary.json", _json_text(summary))


@_register("subdivide", "insert a midpoint vertex on every edge", [
    Param("graph", str, default="", help="graph spec"),
    Param("schreier", str, default="", help="schreier spec (alternative input)"),
])
def _run_subdivide(args: dict, ctx: RunContext) -> None:
    if bool(args["graph"]) == bool(args["schreier"]):
        raise InvalidArgument("give exactly one of --graph / --schreier")
    if args["graph"]:
        original = parse_graph_spec(args["graph"])
    else:
        original = parse_schreier_spec(args["schreier"], ctx.stream(1))
    result = subdivide_any(original)
    ctx.write("graph.json", result.to_json() + "\n")
    ctx.write("summary.json", _json_text({
        "num_vertices": result.num_vertices,
        "num_edges": result.num_edges,
    }))


def _class_sort_key(cls):
    return (cls.radius, cls.symbols, cls.involution, cls.table, cls.marks, cls.flags)


@_register("local-stats", "rooted r-ball class frequencies (and TV distance)", [
    Param("schreier", str, help="schreier spec"),
    Param("other", str, default="", help="second schreier spec for a distance"),
    Param("radius", int, default=2),
])
def _run_local_stats(args: dict, ctx: RunContext) -> None:
    g = parse_schreier_spec(args["schreier"], ctx.stream(1))
    stats = local_statistics(g, args["radius"])
    other_stats = None
    if args["other"]:
        h = parse_schreier_spec(args["other"], ctx.stream(2))
        other_stats = local_statistics(h, args["radius"])
    classes = sorted(
        set(stats) | set(other_stats or {}), key=_class_sort_key
    )
    class_rows = [
        {
            "index": i,
            "radius": cls.radius,
            "symbols": list(cls.symbols),
            "involution": list(cls.involution),
            "table": [list(row) for row in cls.table],
            "marks": list(cls.marks),
            "flags": [list(row) for row in cls.flags],
        }
        for i, cls in enumerate(classes)
    ]
    if other_stats is None:
        header = ["index", "prob"]
        rows = [(i, stats.get(cls, 0.0)) for i, cls in enumerate(classes)]
        tv = None
    else:
        header = ["index", "prob_1", "prob_2"]
        rows = [
            (i, stats.get(cls, 0.0), other_stats.get(cls, 0.0))
            for i, cls in enumerate(classes)
        ]
        tv = ball_distance(stats, other_stats)
    ctx.write("classes.json", _json_text(class_rows))
    ctx.write("stats.csv", _csv_text(header, rows))
    ctx.write("summary.json", _json_text({
        "num_classes": len(classes),
        "radius": args["radius"],
        "tv_distance": tv,
    }))


# ---------------------------------------------------------------------------
# trace / kernel-dimension subcommands
# ---------------------------------------------------------------------------

_GROUPS = {
    "Z": Zd(1),
    "Z2": Zd(2),
    "Z3": Zd(3),
    "F2": FreeGroup(2),
    "F3": FreeGroup(3),
}


def _group_rank(group) -> int:
    return group.d if isinstance(group, Zd) else group.rank


def _random_words(stream: RandomStream, count: int, max_len: int, rank: int) -> List[str]:
    letters = paired_generators(rank).symbols
    words = []
    for _ in range(count):
        length = 1 + int(stream.integers(1, max_len)[0])
        idx = stream.integers(length, len(letters))
        words.append("".join(letters[int(i)] for i in idx))
    return words


def _word_element(word: str) -> GroupRingElement:
    return GroupRingElement.from_terms([(1, GroupWord(word))])


@_register("traces", "finite traces of words/elements against the group limit", [
    Param("group", str, help="Z | Z2 | Z3 | F2 | F3"),
    Param("word", str, default="", help="comma-separated explicit words"),
    Param("element", str, default="", help="one group-ring element expression"),
    Param("random_words", int, default=0, help="draw this many random words"),
    Param("max_len", int, default=6, help="max random word length"),
    Param("n", str, default="", help="vertex counts, e.g. 2..50 or 100,1000"),
    Param("graphs", int, default=20, help="random Schreier graphs per n (free groups)"),
])
def _run_traces(args: dict, ctx: RunContext) -> None:
    if args["group"] not in _GROUPS:
        raise InvalidArgument(f"unknown group {args['group']!r}")
    group = _GROUPS[args["group"]]
    rank = _group_rank(group)
    if not args["n"]:
        raise InvalidArgument("--n is required")
    n_values = _parse_int_list(args["n"])

    items: List[Tuple[str, GroupRingElement]] = []
    if args["word"]:
        for w in args["word"].split(","):
            items.append((w or "e", _word_element(w)))
    if args["element"]:
        items.append((args["element"], parse_element(args["element"])))
    if args["random_words"]:
        for w in _random_words(ctx.stream(2), args["random_words"], args["max_len"], rank):
            items.append((w, _word_element(w)))
    if not items:
        raise InvalidArgument("give --word, --element, or --random-words")

    rows = []
    if isinstance(group, Zd):
        for label, elem in items:
            limit = limit_trace(elem, group)
            for n in n_values:
                g = build_torus([n] * group.d)
                tr = element_trace(elem, g)
                rows.append((label, n, 0, tr, limit, abs(tr - limit)))
    else:
        graph_stream = ctx.stream(1)
        for n in n_values:
            for gi in range(args["graphs"]):
                g = random_schreier(rank, n, graph_stream.child(n * 100003 + gi))
                for label, elem in items:
                    limit = limit_trace(elem, group)
                    tr = element_trace(elem, g)
                    rows.append((label, n, gi, tr, limit, abs(tr - limit)))
    diffs = [row[5] for row in rows]
    ctx.write("traces.csv", _csv_text(
        ["word", "n", "graph", "trace", "limit", "abs_diff"], rows
    ))
    ctx.write("summary.json", _json_text({
        "num_rows": len(rows),
        "mean_abs_diff": float(np.mean(diffs)),
        "max_abs_diff": float(np.max(diffs)),
    }))


@_register("lueck", "normalized kernel dimension of an integer element vs n", [
    Param("a", str, help='element, e.g. "2 - s - S"'),
    Param("group", str, default="Z", help="Z | F2"),
    Param("n", str, default="", help="vertex counts, e.g. 10..100"),
    Param("seeds", int, default=1, help="random Schreier graphs per n (F2)"),
    Param("self_adjoint_square", bool, default=False, flag=True,
          help="replace a by a * adjoint(a)"),
    Param("tol", float, default=1e-9),
])
def _run_lueck(args: dict, ctx: RunContext) -> None:
    if args["group"] not in ("Z", "F2"):
        raise InvalidArgument(f"unknown group {args['group']!r}")
    if not args["n"]:
        raise InvalidArgument("--n is required")
    elem = parse_element(args["a"])
    if args["self_adjoint_square"]:
        elem = elem * elem.adjoint()
    n_values = _parse_int_list(args["n"])
    rows = []
    means = []
    if args["group"] == "Z":
        for n in n_values:
            frac = kernel_fraction(elem, build_torus([n]), tol=args["tol"])
            rows.append((n, 0, frac, 1.0 / n))
            means.append(frac)
        header = ["n", "seed", "fraction", "inv_n"]
        extra = {"max_gap_inv_n": float(max(abs(r[2] - r[3]) for r in rows))}
    else:
        graph_stream = ctx.stream(1)
        for n in n_values:
            per_n = []
            for si in range(args["seeds"]):
                g = random_schreier(2, n, graph_stream.child(n * 100003 + si))
                frac = kernel_fraction(elem, g, tol=args["tol"])
                rows.append((n, si, frac))
                per_n.append(frac)
            means.append(float(np.mean(per_n)))
        header = ["n", "seed", "fraction"]
        extra = {}
    summary = {
        "mean_fraction_per_n": means,
        "spread_across_n": float(max(means) - min(means)),
        **extra,
    }
    ctx.write("fractions.csv", _csv_text(header, rows))
    ctx.write("summary.json", _json_text(summary))


@_register("spectral", "eigenvalue atoms of a symmetric kernel or represented element", [
    Param("kernel", str, default="", help="kernel spec"),
    Param("schreier", str, default="", help="schreier spec (with --element)"),
    Param("element", str, default="", help="element to represent on --schreier"),
])
def _run_spectral(args: dict, ctx: RunContext) -> None:
    if bool(args["kernel"]) == bool(args["schreier"]):
        raise InvalidArgument("give exactly one of --kernel / --schreier+--element")
    if args["kernel"]:
        mat, labels, _ = parse_kernel_spec(args["kernel"])
        op = matrix_from(mat, labels, symmetric=True)
    else:
        if not args["element"]:
            raise InvalidArgument("--schreier requires --element")
        g = parse_schreier_spec(args["schreier"], ctx.stream(1))
        op = represent(parse_element(args["element"]), g)
    sm = spectral_measure(op)
    entries = np.asarray(op.entries, dtype=np.float64)
    power = np.eye(entries.shape[0])
    moments = {}
    for k in range(1, 7):
        power = power @ entries
        moments[str(k)] = {
            "measure": sm.moment(k),
            "trace": normalized_trace(power),
        }
    ctx.write("atoms.csv", _csv_text(
        ["eigenvalue", "weight"], [(lam, w) for lam, w in sm.atoms]
    ))
    ctx.write("summary.json", _json_text({
        "num_atoms": len(sm.atoms),
        "total_weight": sm.total,
        "moments": moments,
    }))


# ---------------------------------------------------------------------------
# determinantal-measure subcommands
# ---------------------------------------------------------------------------

@_register("dpp-exact", "full exact subset distribution of a kernel", [
    Param("kernel", str, help="kernel spec"),
])
def _run_dpp_exact(args: dict, ctx: RunContext) -> None:
    meas, _ = _measure_from_spec(args["kernel"])
    dist = exact_distribution(meas)
    table = [(mask, float(dist.probs[mask])) for mask in range(dist.probs.shape[0])]
    ctx.write("table.csv", _csv_text(["mask", "probability"], table))
    ctx.write("summary.json", _json_text({
        "num_sites": meas.size,
        "trace": meas.trace,
        "mean_size": dist.mean_size(),
        "max_clamp": dist.max_clamp,
    }))


@_register("dpp-sample", "exact sequential sampling from a kernel", [
    Param("kernel", str, help="kernel spec"),
    Param("draws", int, default=1000),
])
def _run_dpp_sample(args: dict, ctx: RunContext) -> None:
    meas, _ = _measure_from_spec(args["kernel"])
    stream = ctx.stream(3)
    counts = np.zeros(meas.size)
    rows = []
    for i in range(args["draws"]):
        picked = sample(meas, stream)
        mask = 0
        for pos in picked:
            mask |= 1 << pos
            counts[pos] += 1
        rows.append((i, mask))
    freq = counts / max(args["draws"], 1)
    gap = float(np.max(np.abs(freq - meas.inclusion_marginals()), initial=0.0))
    ctx.write("samples.csv", _csv_text(["index", "mask"], rows))
    ctx.write("summary.json", _json_text({
        "draws": args["draws"],
        "num_sites": meas.size,
        "max_marginal_gap": gap,
    }))


@_register("ust", "Wilson-algorithm uniform spanning trees", [
    Param("graph", str, help="graph spec"),
    Param("draws", int, default=100),
])
def _run_ust(args: dict, ctx: RunContext) -> None:
    g = parse_graph_spec(args["graph"])
    stream = ctx.stream(3)
    rows = []
    seen = set()
    for i in range(args["draws"]):
        tree = wilson_sample(g, stream)
        seen.add(tree)
        rows.append((i, ";".join(str(e) for e in tree)))
    ctx.write("trees.csv", _csv_text(["index", "edges"], rows))
    ctx.write("summary.json", _json_text({
        "draws": args["draws"],
        "num_vertices": g.num_vertices,
        "edges_per_tree": g.num_vertices - 1,
        "distinct_trees": len(seen),
    }))


@_register("transfer-current", "edge-pair current-response kernel of a graph", [
    Param("graph", str, help="graph spec"),
])
def _run_transfer_current(args: dict, ctx: RunContext) -> None:
    g = parse_graph_spec(args["graph"])
    y = transfer_current(g)
    mat = y.entries
    defect = float(np.max(np.abs(mat @ mat - mat), initial=0.0))
    ctx.write("kernel.csv", _matrix_csv(mat))
    ctx.write("labels.json", _json_text({
        "edge_ids": list(y.ground_labels),
        "edges": [[int(g.edges[e][0]), int(g.edges[e][1])] for e in y.ground_labels],
    }))
    ctx.write("summary.json", _json_text({
        "num_vertices": g.num_vertices,
        "num_edges": g.num_edges,
        "trace": float(np.trace(mat)),
        "idempotency_defect": defect,
    }))


def _resolve_cycle_span(g: Graph, torus_n: int, max_len: int, mode: str, budget: int):
    """Pick the short-cycle span construction; returns (subspace, mode_used)."""
    squares_ok = torus_n >= 3 and max_len == 4
    if mode == "auto":
        mode = "squares" if squares_ok else "enumerate"
    if mode == "squares":
        if not squares_ok:
            raise InvalidArgument("squares span needs a torus of side >= 3 and --L 4")
        return torus_square_cycle_space(g, torus_n), "squares"
    if mode == "enumerate":
        return bounded_cycle_space(g, max_len, budget), "enumerate"
    raise InvalidArgument(f"unknown cycle-span mode {mode!r}")


@_register("fsf", "short-cycle-free spanning forest kernel, samples, girth audit", [
    Param("torus", int, default=0, help="torus side (alternative to --graph)"),
    Param("graph", str, default="", help="graph spec"),
    Param("L", int, help="cycle length cutoff"),
    Param("cycle_span", str, default="auto", help="auto | enumerate | squares"),
    Param("draws", int, default=0, help="samples to draw and girth-check"),
    Param("budget", int, default=10 ** 6, help="cycle enumeration budget"),
])
def _run_fsf(args: dict, ctx: RunContext) -> None:
    if bool(args["torus"]) == bool(args["graph"]):
        raise InvalidArgument("give exactly one of --torus / --graph")
    torus_n = args["torus"]
    g = torus_graph(torus_n) if torus_n else parse_graph_spec(args["graph"])
    span, mode_used = _resolve_cycle_span(
        g, torus_n, args["L"], args["cycle_span"], args["budget"]
    )
    containment_checked = False
    if mode_used == "squares" and torus_n and torus_n <= 4:
        enumerated = bounded_cycle_space(g, args["L"], args["budget"])
        if not enumerated.contains_subspace(span):
            raise NumericalFailure(
                "square span escapes the enumerated short-cycle span"
            )
        containment_checked = True
    meas = fsf_L_kernel(g, args["L"], cycle_space=span, budget=args["budget"])
    # a draw is guaranteed cycle-free below the cutoff only when the span
    # holds every short cycle: always true for enumerate; true for squares
    # once the side exceeds 4 (shorter tori have non-square short cycles)
    girth_guaranteed = mode_used == "enumerate" or torus_n >= 5
    rows = []
    girth_failures = 0
    if args["draws"]:
        stream = ctx.stream(3)
        for i in range(args["draws"]):
            picked = sample(meas, stream)
            edge_ids = tuple(meas.ground_labels[p] for p in picked)
            if not girth_check(edge_ids, g, args["L"]):
                girth_failures += 1
            rows.append((i, ";".join(str(e) for e in edge_ids)))
        ctx.write("samples.csv", _csv_text(["index", "edges"], rows))
    ctx.write("kernel.csv", _matrix_csv(meas.kernel))
    ctx.write("summary.json", _json_text({
        "num_vertices": g.num_vertices,
        "num_edges": g.num_edges,
        "L": args["L"],
        "cycle_span": mode_used,
        "dim_cycle_span": span.dim,
        "kernel_trace": meas.trace,
        "expected_degree": expected_degree(meas, g),
        "containment_checked": containment_checked,
        "girth_guaranteed": girth_guaranteed,
        "draws": args["draws"],
        "girth_failures": girth_failures,
    }))
    if girth_failures and girth_guaranteed:
        raise NumericalFailure(
            f"{girth_failures} draws contain a cycle of length <= {args['L']}"
        )


@_register("degree-limit", "expected forest degree across torus sizes", [
    Param("torus2", str, default="4..16", help="square-torus sides, e.g. 4..16"),
    Param("L", int, default=4),
])
def _run_degree_limit(args: dict, ctx: RunContext) -> None:
    n_values = _parse_int_list(args["torus2"])
    rows = degree_limit_rows(n_values, args["L"])
    table = [
        (r["n"], r["L"], r["num_edges"], r["dim_cycle_span"],
         r["dim_per_vertex"], r["expected_degree"])
        for r in rows
    ]
    degrees = [r["expected_degree"] for r in rows]
    monotone = all(b < a for a, b in zip(degrees, degrees[1:]))
    report = {
        "rows": rows,
        "monotone_decreasing": bool(monotone),
        "limit": 2.0,
        "final_expected_degree": degrees[-1],
        "final_gap_to_limit": degrees[-1] - 2.0,
        "constant_check": {
            "target_constant": 2.0,
            "observed_dim_per_vertex": rows[-1]["dim_per_vertex"],
            "status": "unresolved",
        },
    }
    if args["L"] == 4:
        formula_gap = max(
            abs(r["expected_degree"] - 2.0 * (r["n"] ** 2 + 1) / r["n"] ** 2)
            for r in rows
        )
        dims_exact = all(r["dim_cycle_span"] == r["n"] ** 2 - 1 for r in rows)
        report["formula_max_gap"] = formula_gap
        report["dims_exact"] = bool(dims_exact)
    ctx.write("table.csv", _csv_text(
        ["n", "L", "num_edges", "dim_cycle_span", "dim_per_vertex", "expected_degree"],
        table,
    ))
    ctx.write("report.json", _json_text(report))
    if args["L"] == 4:
        if report["formula_max_gap"] > 1e-9:
            raise NumericalFailure(
                f"expected degree misses the closed form by {report['formula_max_gap']!r}"
            )
        if not report["dims_exact"]:
            raise NumericalFailure("cycle-span dimension is not n^2 - 1")
    if not monotone:
        raise NumericalFailure("expected degree is not strictly decreasing")


# ---------------------------------------------------------------------------
# coupling subcommands
# ---------------------------------------------------------------------------

def _distribution_pair(spec1: str, spec2: str) -> Tuple[SubsetDistribution, SubsetDistribution]:
    meas1, _ = _measure_from_spec(spec1)
    meas2, _ = _measure_from_spec(spec2)
    return exact_distribution(meas1), exact_distribution(meas2)


@_register("couple", "monotone coupling of two kernels, or a blocking event", [
    Param("kernel1", str, help="kernel spec of the sparser law"),
    Param("kernel2", str, help="kernel spec of the denser law"),
])
def _run_couple(args: dict, ctx: RunContext) -> None:
    d1, d2 = _distribution_pair(args["kernel1"], args["kernel2"])
    result = monotone_coupling(d1, d2)
    if isinstance(result, Coupling):
        ctx.write("coupling.json", result.to_json() + "\n")
        ctx.write("summary.json", _json_text({
            "feasible": True,
            "num_atoms": len(result.atoms),
            "expected_hamming": result.expected_hamming(),
            "per_site_distance": result.per_site_distance(),
        }))
    else:
        ctx.write("witness.json", _json_text({
            "generators": [int(m) for m in result.generators],
            "mass1": result.mass1,
            "mass2": result.mass2,
        }))
        ctx.write("summary.json", _json_text({
            "feasible": False,
            "mass_gap": result.mass1 - result.mass2,
        }))


@_register("dbar", "exact per-site transport distance of two kernels", [
    Param("kernel1", str, help="kernel spec"),
    Param("kernel2", str, help="kernel spec"),
])
def _run_dbar(args: dict, ctx: RunContext) -> None:
    d1, d2 = _distribution_pair(args["kernel1"], args["kernel2"])
    value, coupling = dbar(d1, d2)
    try:
        mono = dbar_monotone(d1, d2)
        gap = abs(mono - value)
    except InvalidState:
        mono = None
        gap = None
    ctx.write("coupling.json", coupling.to_json() + "\n")
    ctx.write("summary.json", _json_text({
        "dbar": value,
        "dbar_monotone": mono,
        "agreement_gap": gap,
        "expected_hamming": coupling.expected_hamming(),
    }))


def _random_contraction(stream: RandomStream, n: int) -> np.ndarray:
    """Symmetric matrix with iid-uniform spectrum in [0,1) and random frame."""
    a = stream.uniforms(n * n).reshape(n, n) * 2.0 - 1.0
    _, vecs = np.linalg.eigh((a + a.T) / 2.0)
    vals = stream.uniforms(n)
    return (vecs * vals) @ vecs.T


def _dominated_pair(stream: RandomStream, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Contraction plus a scaled PSD bump that keeps the spectrum below 1."""
    q1 = _random_contraction(stream, n)
    headroom = 1.0 - float(np.linalg.eigvalsh(q1)[-1])
    r = stream.uniforms(n * n).reshape(n, n) * 2.0 - 1.0
    bump = r.T @ r
    top = float(np.linalg.eigvalsh(bump)[-1])
    scale = 0.999 * headroom * stream.uniform() / max(top, 1e-30)
    q2 = q1 + scale * bump
    return q1, 0.5 * (q2 + q2.T)


def _bounds_trial(packed: Tuple[int, int, int, str]) -> dict:
    seed, trial, n_max, kind = packed
    stream = RandomStream(seed).child(trial + 1)
    n = 2 + int(stream.integers(1, n_max - 1)[0])
    if kind == "dominated":
        q1, q2 = _dominated_pair(stream, n)
    else:
        q1 = _random_contraction(stream, n)
        q2 = _random_contraction(stream, n)
    report = bound_suite(q1, q2)
    row = {
        "seed": trial,
        "kind": kind,
        "n": n,
        "dbar": report.dbar,
        "op_norm_diff": report.op_norm_diff,
        "trace_norm_diff": report.trace_norm_diff,
        "norm_bound": report.norm_bound,
        "schatten_bound": report.schatten_bound,
        "conj_bound": report.conjecture_bound,
        "slack_norm": report.slack_norm,
        "slack_schatten": report.slack_schatten,
        "slack_conj": report.slack_conjecture,
        "dbar_monotone": "",
        "monotone_gap": "",
        "flow_feasible": "",
    }
    if kind == "dominated":
        d1 = exact_distribution(DeterminantalMeasure(q1))
        d2 = exact_distribution(DeterminantalMeasure(q2))
        feasible = isinstance(monotone_coupling(d1, d2), Coupling)
        row["flow_feasible"] = 1 if feasible else 0
        if feasible:
            mono = dbar_monotone(d1, d2)
            row["dbar_monotone"] = mono
            row["monotone_gap"] = abs(mono - report.dbar)
    if row["slack_conj"] < 0.05:
        row["_flag"] = {
            "seed": trial,
            "n": n,
            "slack_conj": report.slack_conjecture,
            "dbar": report.dbar,
            "conj_bound": report.conjecture_bound,
            "q1": q1.tolist(),
            "q2": q2.tolist(),
        }
    return row


_BOUND_COLUMNS = [
    "seed", "kind", "n", "dbar", "op_norm_diff", "trace_norm_diff",
    "norm_bound", "schatten_bound", "conj_bound",
    "slack_norm", "slack_schatten", "slack_conj",
    "dbar_monotone", "monotone_gap", "flow_feasible",
]


@_register("bounds-scan", "randomized audit of the distance bounds", [
    Param("n", int, default=6, help="max ground-set size (>= 2)"),
    Param("trials", int, default=200),
    Param("kind", str, default="general", help="general | dominated"),
])
def _run_bounds_scan(args: dict, ctx: RunContext) -> None:
    if args["kind"] not in ("general", "dominated"):
        raise InvalidArgument(f"unknown pair kind {args['kind']!r}")
    if args["n"] < 2:
        raise InvalidArgument("--n must be at least 2")
    packed = [(ctx.seed, t, args["n"], args["kind"]) for t in range(args["trials"])]
    if ctx.jobs > 1:
        # warm the compiled transport kernel before forking workers
        dbar(
            SubsetDistribution((0,), np.array([0.5, 0.5])),
            SubsetDistribution((0,), np.array([0.25, 0.75])),
        )
        with ProcessPoolExecutor(max_workers=ctx.jobs) as pool:
            results = list(pool.map(_bounds_trial, packed))
    else:
        results = [_bounds_trial(p) for p in packed]
    results.sort(key=lambda r: r["seed"])
    flagged = [r.pop("_flag") for r in results if "_flag" in r]
    rows = [[r[c] for c in _BOUND_COLUMNS] for r in results]
    min_slack_norm = min(r["slack_norm"] for r in results)
    min_slack_schatten = min(r["slack_schatten"] for r in results)
    min_slack_conj = min(r["slack_conj"] for r in results)
    summary = {
        "trials": args["trials"],
        "kind": args["kind"],
        "min_slack_norm": min_slack_norm,
        "min_slack_schatten": min_slack_schatten,
        "min_slack_conj": min_slack_conj,
        "num_conj_counterexamples": sum(1 for r in results if r["slack_conj"] < 0),
        "num_flagged": len(flagged),
    }
    if args["kind"] == "dominated":
        gaps = [r["monotone_gap"] for r in results if r["monotone_gap"] != ""]
        summary["num_infeasible"] = sum(1 for r in results if r["flow_feasible"] == 0)
        summary["max_monotone_gap"] = max(gaps) if gaps else None
    ctx.write("bounds.csv", _csv_text(_BOUND_COLUMNS, rows))
    ctx.write("flagged.json", _json_text(flagged))
    ctx.write("summary.json", _json_text(summary))
    if min_slack_norm < -1e-9 or min_slack_schatten < -1e-9:
        raise NumericalFailure("a proven bound came out below the exact distance")
    if args["kind"] == "dominated":
        if summary["num_infeasible"]:
            raise NumericalFailure(f"{summary['num_infeasible']} dominated pairs had no monotone coupling")
        if summary["max_monotone_gap"] is not None and summary["max_monotone_gap"] > 1e-9:
            raise NumericalFailure("marginal-gap distance disagrees with the exact transport")


@_register("mdep", "finite-range factorization audit of a cyclic kernel", [
    Param("kernel", str, help="kernel spec (circulant recommended)"),
    Param("m", int, help="required independence range"),
    Param("window", int, default=2),
    Param("expect_below", float, default=-1.0, help="fail if defect exceeds this"),
    Param("expect_above", float, default=-1.0, help="fail if defect is at most this"),
])
def _run_mdep(args: dict, ctx: RunContext) -> None:
    meas, _ = _measure_from_spec(args["kernel"])
    defect = mdependence_check(meas, args["m"], args["window"])
    ctx.write("defect.csv", _csv_text(
        ["m", "window", "defect"], [(args["m"], args["window"], defect)]
    ))
    ctx.write("summary.json", _json_text({
        "num_sites": meas.size,
        "m": args["m"],
        "window": args["window"],
        "defect": defect,
    }))
    if args["expect_below"] >= 0 and defect > args["expect_below"]:
        raise NumericalFailure(f"defect {defect!r} above {args['expect_below']!r}")
    if args["expect_above"] >= 0 and defect <= args["expect_above"]:
        raise NumericalFailure(f"defect {defect!r} not above {args['expect_above']!r}")


@_register("findep", "band-truncation distances of a circulant symbol", [
    Param("coeffs", str, help="symbol coefficients c0,c1,..."),
    Param("n", int, help="cycle length"),
    Param("bands", str, default="0,1,2,3", help="band cutoffs to test"),
    Param("window", int, default=8, help="transport window (<= 10)"),
])
def _run_findep(args: dict, ctx: RunContext) -> None:
    coeffs = _parse_float_list(args["coeffs"])
    bands = _parse_int_list(args["bands"])
    values = []
    for band in bands:
        _, value = finitely_dependent_approx(coeffs, args["n"], band, window=args["window"])
        values.append(value)
    non_increasing = all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
    ctx.write("findep.csv", _csv_text(
        ["band", "dbar"], list(zip(bands, values))
    ))
    ctx.write("summary.json", _json_text({
        "n": args["n"],
        "window": args["window"],
        "bands": bands,
        "values": values,
        "non_increasing": bool(non_increasing),
    }))


def _maximal_forest(g: Graph, edge_ids: Sequence[int]) -> Tuple[int, ...]:
    """Greedy spanning forest of the subgraph, by ascending edge id."""
    parent = list(range(g.num_vertices))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    kept = []
    for e in sorted(edge_ids):
        u, v = g.edges[e]
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            kept.append(e)
    return tuple(kept)


@_register("return-prob", "heat-trace comparison along a sampled forest coupling", [
    Param("torus", int, default=3, help="torus side"),
    Param("L", int, default=4, help="cycle length cutoff of the denser law"),
    Param("times", str, default="0.1,1,10"),
    Param("draws", int, default=1000),
])
def _run_return_prob(args: dict, ctx: RunContext) -> None:
    g = torus_graph(args["torus"])
    span, _ = _resolve_cycle_span(g, args["torus"], args["L"], "auto", 10 ** 6)
    meas = fsf_L_kernel(g, args["L"], cycle_space=span)
    labels = meas.ground_labels
    position = {e: i for i, e in enumerate(labels)}
    stream = ctx.stream(3)
    pairs = []
    fallbacks = 0
    for _ in range(args["draws"]):
        picked = sample(meas, stream)
        dense_ids = tuple(labels[p] for p in picked)
        sub = Graph(g.num_vertices, tuple(g.edges[e] for e in dense_ids))
        try:
            tree_pos = wilson_sample(sub, stream)
            sparse_ids = tuple(dense_ids[p] for p in tree_pos)
        except InvalidArgument:
            sparse_ids = _maximal_forest(g, dense_ids)
            fallbacks += 1
        m1 = 0
        for e in sparse_ids:
            m1 |= 1 << position[e]
        m2 = 0
        for e in dense_ids:
            m2 |= 1 << position[e]
        pairs.append((m1, m2))
    coupling = Coupling.from_draws(labels, pairs, monotone=True)
    times = _parse_float_list(args["times"])
    table = return_prob_compare(g, coupling, times, args["draws"], ctx.stream(4))
    rows = [
        (r["t"], r["mean_trace_sparse"], r["mean_trace_dense"], r["max_violation"])
        for r in table
    ]
    worst = max(r["max_violation"] for r in table)
    ctx.write("coupling.json", coupling.to_json() + "\n")
    ctx.write("table.csv", _csv_text(
        ["t", "mean_trace_sparse", "mean_trace_dense", "max_violation"], rows
    ))
    ctx.write("summary.json", _json_text({
        "draws": args["draws"],
        "torus": args["torus"],
        "L": args["L"],
        "fallback_forests": fallbacks,
        "max_violation": worst,
    }))
    if worst > 1e-12:
        raise NumericalFailure(f"heat-trace order violated by {worst!r}")


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

_TYPE_NAMES = {int: "integer", float: "number", str: "string", bool: "boolean"}


def config_schema() -> dict:
    """JSON-schema (draft-07) for ``--config`` files, built from the registry."""
    blocks = []
    for name in sorted(REGISTRY):
        sub = REGISTRY[name]
        props = {}
        required = []
        for p in sub.params:
            entry = {"type": "boolean" if p.flag else _TYPE_NAMES[p.kind]}
            if p.help:
                entry["description"] = p.help
            if p.flag:
                entry["default"] = bool(p.default)
            elif p.default is not None:
                entry["default"] = p.default
            else:
                required.append(p.name)
            props[p.name] = entry
        parameters = {
            "type": "object",
            "additionalProperties": False,
            "properties": props,
        }
        if required:
            parameters["required"] = sorted(required)
        blocks.append({
            "if": {"properties": {"subcommand": {"const": name}}},
            "then": {"properties": {"parameters": parameters}},
        })
    return {
        "$schema": "http://json-schema.org/draft-07/schema#",
        "title": "detgraph experiment config",
        "type": "object",
        "additionalProperties": False,
        "required": ["subcommand"],
        "properties": {
            "subcommand": {"enum": sorted(REGISTRY)},
            "seed": {"type": "integer", "minimum": 0, "default": 0},
            "out": {"type": "string"},
            "jobs": {"type": "integer", "minimum": 1, "default": 1},
            "parameters": {"type": "object"},
        },
        "allOf": blocks,
    }


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detgraph",
        description="deterministic experiment runner for graph determinantal measures",
    )
    parser.add_argument("--config", type=str, default=None,
                        help="JSON config file replacing all other flags")
    subparsers = parser.add_subparsers(dest="subcommand")
    for sub in REGISTRY.values():
        sp = subparsers.add_parser(sub.name, help=sub.help)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", type=str, default=None)
        sp.add_argument("--jobs", type=int, default=1)
        for p in sub.params:
            flag = "--" + p.name.replace("_", "-")
            if p.flag:
                sp.add_argument(flag, dest=p.name, action="store_true",
                                default=bool(p.default), help=p.help)
            elif p.default is None:
                sp.add_argument(flag, dest=p.name, type=p.kind, required=True,
                                help=p.help)
            else:
                sp.add_argument(flag, dest=p.name, type=p.kind,
                                default=p.default, help=p.help)
    return parser


def _args_from_config(path: str) -> Tuple[str, dict, int, str, int]:
    data = json.loads(Path(path).read_text())
    allowed = {"subcommand", "seed", "out", "jobs", "parameters"}
    unknown = set(data) - allowed
    if unknown:
        raise InvalidArgument(f"unknown config keys: {sorted(unknown)}")
    name = data.get("subcommand")
    if name not in REGISTRY:
        raise InvalidArgument(f"unknown subcommand {name!r}")
    sub = REGISTRY[name]
    params = data.get("parameters", {})
    if not isinstance(params, dict):
        raise InvalidArgument("parameters must be an object")
    known = {p.name for p in sub.params}
    bad = set(params) - known
    if bad:
        raise InvalidArgument(f"unknown parameters for {name}: {sorted(bad)}")
    args = {}
    for p in sub.params:
        if p.name in params:
            args[p.name] = p.kind(params[p.name]) if not p.flag else bool(params[p.name])
        elif p.default is None and not p.flag:
            raise InvalidArgument(f"missing required parameter {p.name!r}")
        else:
            args[p.name] = p.default if not p.flag else bool(p.default)
    seed = int(data.get("seed", 0))
    out = data.get("out") or f"out/{name}"
    jobs = int(data.get("jobs", 1))
    return name, args, seed, out, jobs


def _execute(name: str, args: dict, seed: int, out: str, jobs: int) -> None:
    sub = REGISTRY[name]
    ctx = RunContext(seed=seed, out=Path(out), jobs=jobs)
    start = time.perf_counter()
    sub.run(args, ctx)
    elapsed = time.perf_counter() - start
    ctx.out.mkdir(parents=True, exist_ok=True)
    for fname in sorted(ctx.files):
        (ctx.out / fname).write_text(ctx.files[fname])
    manifest = {
        "command": name,
        "parameters": args,
        "seed": seed,
        "jobs": jobs,
        "backend": backend_name(),
        "versions": {
            "package": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "wall_time_s": elapsed,
    }
    try:
        import numba

        manifest["versions"]["numba"] = numba.__version__
    except ImportError:
        manifest["versions"]["numba"] = None
    (ctx.out / "manifest.json").write_text(_json_text(manifest))


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if argv and argv[0] == "--config":
            if len(argv) != 2:
                raise InvalidArgument("--config takes exactly one path and no other flags")
            name, args, seed, out, jobs = _args_from_config(argv[1])
        else:
            parser = _build_parser()
            ns = parser.parse_args(argv)
            if ns.subcommand is None:
                parser.print_usage(sys.stderr)
                return 2
            sub = REGISTRY[ns.subcommand]
            args = {p.name: getattr(ns, p.name) for p in sub.params}
            name = ns.subcommand
            seed = ns.seed
            out = ns.out or f"out/{name}"
            jobs = ns.jobs
        _execute(name, args, seed, out, jobs)
        return 0
    except InvalidArgument as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CapacityExceeded, NumericalFailure, InvalidState) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
