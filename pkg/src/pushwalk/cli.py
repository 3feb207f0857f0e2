"""Command-line front end.

Every subcommand prints one JSON record per line: first a ``config`` record
echoing the full effective configuration, then ``result`` records. Records
round-trip losslessly through :meth:`RunRecord.to_line` /
:meth:`RunRecord.from_line`. Exit codes: 0 success, 1 usage error, 2 data
error (unreadable/malformed graph, unknown node or keyword), 3 numerical
failure (non-convergence, exhausted sampling budget).

Directed graphs are loaded with the dangling-node sink convention applied,
so estimators, oracles, and walks all see the same chain. Undirected graphs
are loaded symmetrically and left untouched.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import pickle
import statistics
import sys
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .bidir import (
    PprParams,
    choose_delta_from_target,
    default_r_max,
    estimate_ppr,
    estimate_ppr_balanced,
    monte_carlo_ppr,
    num_walks,
)
from .graph import Graph, GraphFormatError, apply_sink_convention, load_edge_list
from .multistep import (
    HeatKernelParams,
    MstpParams,
    estimate_heat_kernel,
    estimate_mstp,
    estimate_truncated_hitting,
)
from .oracle import (
    ConvergenceError,
    UnreachableTargetError,
    exact_global_pagerank,
    exact_mstp,
    exact_ppr,
    exact_ppr_matrix,
)
from .pathsampling import precompute_path_samplers, sample_path_to_target
from .push import reverse_push
from .sampling import WalkConfig, build_alias
from .search import (
    KeywordIndex,
    adaptive_r_max,
    build_forward_vector,
    build_grouped_index,
    build_target_sampler,
    load_index,
    sample_targets,
    save_index,
    score_targets_direct,
    score_targets_grouped,
)
from .sharding import (
    BrokerQuery,
    SharedWalkParams,
    broker_estimate,
    build_shared_walk_vectors,
    query_shared_walks,
    shard_vectors,
)
from .undirected import estimate_ppr_undirected

__all__ = [
    "RunRecord",
    "BenchSpec",
    "run_benchmark",
    "generate_synthetic",
    "main",
]


# ---------------------------------------------------------------------------
# Records


@dataclass
class RunRecord:
    """One line of CLI output: what ran, with what, and what came out."""

    command: str
    graph: str | None
    parameters: dict
    seed: int | None
    estimates: dict
    counters: dict
    wall_time_s: float
    record: str = "result"

    def to_line(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)

    @classmethod
    def from_line(cls, line: str) -> "RunRecord":
        return cls(**json.loads(line))


# ---------------------------------------------------------------------------
# Synthetic graphs


def generate_synthetic(kind: str, n: int, seed: int = 0) -> list[str]:
    """Deterministic edge-list lines for the named family.

    cycle: directed n-cycle. star: hub 0 with reciprocal spokes. grid:
    row-major lattice with reciprocal 4-neighbor edges (side = ceil(sqrt(n)),
    truncated to n nodes). power-law: preferential attachment, two edges per
    arriving node, endpoint drawn degree-proportionally.
    """
    if n < 2:
        raise ValueError("need at least 2 nodes")
    lines: list[str] = []
    if kind == "cycle":
        lines = [f"{i} {(i + 1) % n}" for i in range(n)]
    elif kind == "star":
        for i in range(1, n):
            lines.append(f"0 {i}")
            lines.append(f"{i} 0")
    elif kind == "grid":
        side = math.isqrt(n - 1) + 1
        for v in range(n):
            r, c = divmod(v, side)
            for nb in (v + 1 if c + 1 < side else None, v + side):
                if nb is not None and nb < n:
                    lines.append(f"{v} {nb}")
                    lines.append(f"{nb} {v}")
    elif kind == "power-law":
        rng = np.random.default_rng(seed)
        lines = ["0 1", "1 0"]
        endpoints = [0, 1, 0, 1]
        for j in range(2, n):
            chosen: set[int] = set()
            for _ in range(2):
                t = -1
                for _attempt in range(8):
                    t = int(endpoints[int(rng.integers(len(endpoints)))])
                    if t != j and t not in chosen:
                        break
                else:
                    t = int(rng.integers(j))
                    if t in chosen:
                        continue
                chosen.add(t)
            for t in sorted(chosen):
                lines.append(f"{j} {t}")
                endpoints.extend((j, t))
    else:
        raise ValueError(f"unknown synthetic kind {kind!r}")
    return lines


# ---------------------------------------------------------------------------
# Benchmark harness


@dataclass
class BenchSpec:
    """What to benchmark: pair sampling, pair count, per-algorithm knobs."""

    pair_mode: str = "uniform"  # or "pagerank": targets drawn by global rank
    n_pairs: int = 20
    alpha: float = 0.2
    delta: float | None = None  # default 4/n
    epsilon: float = 0.5
    p_fail: float = 0.1
    c: float = 7.0
    mc_walks: int | None = None  # default: Chernoff-matched 3 ln(2/pf)/(eps^2 delta)
    seed: int = 0
    oracle_limit: int = 2000  # skip accuracy above this many nodes

    def resolved_delta(self, g: Graph) -> float:
        return self.delta if self.delta is not None else 4.0 / g.n

    def resolved_mc_walks(self, g: Graph) -> int:
        if self.mc_walks is not None:
            return self.mc_walks
        d = self.resolved_delta(g)
        return max(
            1, math.ceil(3.0 * math.log(2.0 / self.p_fail) / (self.epsilon**2 * d))
        )


def _sample_pairs(g: Graph, spec: BenchSpec, rng: np.random.Generator):
    if spec.pair_mode == "uniform":
        targets = rng.integers(g.n, size=spec.n_pairs)
    elif spec.pair_mode == "pagerank":
        pr = exact_global_pagerank(g, spec.alpha)
        table = build_alias([(v, float(pr[v])) for v in range(g.n) if pr[v] > 0])
        targets = table.sample_many(rng, spec.n_pairs)
    else:
        raise ValueError(f"unknown pair mode {spec.pair_mode!r}")
    sources = rng.integers(g.n, size=spec.n_pairs)
    return [(int(s), int(t)) for s, t in zip(sources, targets)]


def run_benchmark(g: Graph, spec: BenchSpec) -> list[dict]:
    """Time the estimators on sampled pairs; one summary row per algorithm.

    Accuracy columns compare against the exact solver and cover only pairs
    whose true score is at least delta. On graphs past spec.oracle_limit the
    solver is skipped with a warning and the accuracy columns are None.
    """
    rows: list[dict] = []
    if spec.n_pairs <= 0:
        return rows
    rng = np.random.default_rng(spec.seed)
    pairs = _sample_pairs(g, spec, rng)
    delta = spec.resolved_delta(g)
    params = PprParams(
        delta=delta,
        alpha=spec.alpha,
        epsilon=spec.epsilon,
        p_fail=spec.p_fail,
        c=spec.c,
    )
    truth = None
    if g.n <= spec.oracle_limit:
        truth = exact_ppr_matrix(g, spec.alpha)
    else:
        warnings.warn(
            f"graph has {g.n} nodes > oracle_limit={spec.oracle_limit}; "
            "accuracy columns omitted",
            stacklevel=2,
        )
    mc_walks = spec.resolved_mc_walks(g)
    algorithms = [
        ("bidirectional", lambda s, t, k: estimate_ppr(g, s, t, params, seed=k)),
        ("balanced", lambda s, t, k: estimate_ppr_balanced(g, s, t, params, seed=k)),
        (
            "monte-carlo",
            lambda s, t, k: monte_carlo_ppr(g, s, t, params, walks=mc_walks, seed=k),
        ),
    ]
    for name, fn in algorithms:
        times: list[float] = []
        rel_errs: list[float] = []
        walks_used = 0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # r_max guarantee-floor warnings
            for k, (s, t) in enumerate(pairs):
                t0 = time.perf_counter()
                est = fn(s, t, spec.seed + k)
                times.append(time.perf_counter() - t0)
                walks_used += est.walks_used
                if truth is not None and truth[s, t] >= delta:
                    rel_errs.append(abs(est.value - truth[s, t]) / truth[s, t])
        rows.append(
            {
                "algorithm": name,
                "pairs": len(pairs),
                "median_time_s": statistics.median(times),
                "mean_time_s": statistics.fmean(times),
                "mean_rel_err": statistics.fmean(rel_errs) if rel_errs else None,
                "scored_pairs": len(rel_errs) if truth is not None else None,
                "mean_walks": walks_used / len(pairs),
            }
        )
    return rows


# ---------------------------------------------------------------------------
# Plumbing


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    top = _Parser(prog="pushwalk", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", help="edge-list file: 'u v [w]' per line")
    common.add_argument(
        "--undirected", action="store_true", help="symmetrize edges on load"
    )
    common.add_argument("--alpha", type=float, default=0.2, help="teleport rate")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument(
        "--threads",
        type=int,
        default=1,
        help="worker cap (reserved; the current build is single-threaded)",
    )
    common.add_argument("--output", help="write records here instead of stdout")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="write a synthetic graph")
    p.add_argument("--kind", required=True, choices=["cycle", "star", "grid", "power-law"])
    p.add_argument("--n", type=int, required=True)

    p = sub.add_parser("oracle", parents=[common], help="exact reference values")
    p.add_argument("--source", required=True)
    p.add_argument("--target")
    p.add_argument("--ell", type=int, help="exact multi-step probability at this horizon")
    p.add_argument("--global-rank", action="store_true", help="global PageRank instead")
    p.add_argument("--top", type=int, default=10, help="entries to print without --target")

    p = sub.add_parser("estimate", parents=[common], help="single-pair score estimate")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--delta", type=float, help="default: max(pr[t], 1/n)")
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--pfail", type=float, default=0.1)
    p.add_argument("--c", type=float, default=7.0)
    p.add_argument("--rmax", type=float)
    p.add_argument("--use-theorem-c", action="store_true")
    p.add_argument("--balanced", action="store_true", help="work-balanced reverse phase")
    p.add_argument("--walk-time-constant", type=float)
    p.add_argument(
        "--undirected-variant",
        action="store_true",
        help="degree-symmetric estimator (undirected graphs only)",
    )
    p.add_argument("--monte-carlo", action="store_true", help="walk-only baseline")
    p.add_argument("--walks", type=int, help="override the walk budget")

    p = sub.add_parser("estimate-mstp", parents=[common], help="multi-step transition probabilities")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--ell-max", type=int, required=True)
    p.add_argument("--delta", type=float)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--pfail", type=float, default=0.1)
    p.add_argument("--c", type=float, default=7.0)
    p.add_argument("--eps-r", type=float)
    p.add_argument("--use-theorem-c", action="store_true")
    p.add_argument(
        "--first-passage",
        action="store_true",
        help="probability of hitting the target for the first time at each step",
    )

    p = sub.add_parser("heat-kernel", parents=[common], help="heat-kernel score of a pair")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--t", type=float, required=True, dest="t_param")
    p.add_argument("--ell-max", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--pfail", type=float, default=0.1)
    p.add_argument("--c", type=float, default=7.0)

    p = sub.add_parser("search", parents=[common], help="rank a keyword's targets for a source")
    p.add_argument("--source", required=True)
    p.add_argument("--keyword", required=True)
    p.add_argument("--keywords", help="sidecar file: 'keyword<TAB>node' per line")
    p.add_argument("--index", help="index file from precompute-search")
    p.add_argument("--topk", type=int, default=10)
    p.add_argument("--method", choices=["direct", "grouped", "sampling"], default="grouped")
    p.add_argument("--nsamples", type=int, default=10000)
    p.add_argument("--rmax", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--walks", type=int)

    p = sub.add_parser("precompute-search", parents=[common], help="build keyword search indexes")
    p.add_argument("--keywords", required=True)
    p.add_argument("--rmax", type=float)
    p.add_argument("--adaptive", action="store_true", help="size rmax from target popularity")
    p.add_argument("--walks", type=int, default=1000, help="query-time walk budget (adaptive)")
    p.add_argument("--topk", type=int, default=10, help="k assumed by --adaptive")
    p.add_argument("--beta", type=float, default=0.77)
    p.add_argument("--c", type=float, default=20.0)

    p = sub.add_parser("sample-path", parents=[common], help="draw conditioned walk paths")
    p.add_argument("--source", required=True)
    p.add_argument("--targets", help="comma-separated node list")
    p.add_argument("--targets-file", help="file with one node per line")
    p.add_argument("--epsr", type=float, default=1.0)
    p.add_argument("--count", type=int, default=1)

    p = sub.add_parser("precompute", parents=[common], help="build the shared-walk store")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--dmax", type=float, default=1000.0)
    p.add_argument("--shards", type=int, default=4)
    p.add_argument("--c1", type=float, default=7.0)
    p.add_argument("--c2", type=float, default=0.5)
    p.add_argument("--c3", type=float, default=10.0)

    p = sub.add_parser("serve-sim", parents=[common], help="answer queries from a store")
    p.add_argument("--store", required=True, help="file written by precompute")
    p.add_argument("--query", action="append", default=[], help="'s,t' (repeatable)")
    p.add_argument("--queries", help="file with one 's t' pair per line")

    p = sub.add_parser("bench", parents=[common], help="timing/accuracy comparison")
    p.add_argument("--pairs", type=int, default=20)
    p.add_argument("--mode", choices=["uniform", "pagerank"], default="uniform")
    p.add_argument("--delta", type=float)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--pfail", type=float, default=0.1)
    p.add_argument("--c", type=float, default=7.0)
    p.add_argument("--mc-walks", type=int)

    return top


def _load_graph(args) -> Graph:
    if not args.graph:
        raise SystemExit2("--graph is required for this command")
    g = load_edge_list(args.graph, undirected=args.undirected)
    if not args.undirected:
        g = apply_sink_convention(g)
    return g


class SystemExit2(Exception):
    """Usage-level problem detected after parsing."""


def _node(g: Graph, token: str) -> int:
    try:
        return g.node_id(token)
    except KeyError:
        pass
    try:
        idx = int(token)
    except ValueError:
        raise KeyError(f"unknown node {token!r}") from None
    if 0 <= idx < g.n:
        return idx
    raise KeyError(f"node index {idx} out of range (n={g.n})")


def _name(g: Graph, v: int) -> str:
    return g.names[v] if g.names else str(v)


def _emit(out, rec: RunRecord) -> None:
    print(rec.to_line(), file=out)


def _config_record(args, extra: dict | None = None) -> RunRecord:
    params = {
        k: v
        for k, v in vars(args).items()
        if k not in ("command", "graph", "seed", "output") and not callable(v)
    }
    if extra:
        params.update(extra)
    return RunRecord(
        command=args.command,
        graph=args.graph,
        parameters=params,
        seed=getattr(args, "seed", None),
        estimates={},
        counters={},
        wall_time_s=0.0,
        record="config",
    )


# ---------------------------------------------------------------------------
# Subcommand handlers


def _cmd_gen(args, out) -> int:
    lines = generate_synthetic(args.kind, args.n, seed=args.seed)
    config = _config_record(args, {"edges": len(lines)})
    if args.output:
        _emit(sys.stdout, config)  # keep the edge file loadable as-is
        print("# " + config.to_line(), file=out)
    else:
        print("# " + config.to_line(), file=out)
    for line in lines:
        print(line, file=out)
    return 0


def _cmd_oracle(args, out) -> int:
    g = _load_graph(args)
    s = _node(g, args.source)
    t0 = time.perf_counter()
    if args.global_rank:
        vec = exact_global_pagerank(g, args.alpha)
        kind = "global-pagerank"
    elif args.ell is not None:
        vec = exact_mstp(g, s, args.ell)
        kind = f"mstp-ell-{args.ell}"
    else:
        vec = exact_ppr(g, s, args.alpha)
        kind = "ppr"
    wall = time.perf_counter() - t0
    _emit(out, _config_record(args, {"n": g.n, "m": g.m, "kind": kind}))
    if args.target is not None:
        t = _node(g, args.target)
        estimates = {"value": float(vec[t]), "target": _name(g, t)}
    else:
        order = np.argsort(-vec)[: args.top]
        estimates = {"top": [[_name(g, int(v)), float(vec[v])] for v in order]}
    _emit(
        out,
        RunRecord(args.command, args.graph, {"kind": kind}, args.seed, estimates, {}, wall),
    )
    return 0


def _cmd_estimate(args, out) -> int:
    g = _load_graph(args)
    s = _node(g, args.source)
    t = _node(g, args.target)
    delta = args.delta if args.delta is not None else choose_delta_from_target(g, t, args.alpha)
    params = PprParams(
        delta=delta,
        alpha=args.alpha,
        epsilon=args.eps,
        p_fail=args.pfail,
        c=args.c,
        r_max=args.rmax,
        use_theorem_c=args.use_theorem_c,
    )
    method = "bidirectional"
    t0 = time.perf_counter()
    if args.monte_carlo:
        method = "monte-carlo"
        est = monte_carlo_ppr(g, s, t, params, walks=args.walks, seed=args.seed)
    elif args.undirected_variant:
        method = "undirected"
        est = estimate_ppr_undirected(g, s, t, params, seed=args.seed)
    elif args.balanced:
        method = "balanced"
        est = estimate_ppr_balanced(
            g, s, t, params, walk_time_constant=args.walk_time_constant, seed=args.seed
        )
    else:
        est = estimate_ppr(g, s, t, params, seed=args.seed)
    wall = time.perf_counter() - t0
    _emit(out, _config_record(args, {"n": g.n, "m": g.m, "delta": delta, "method": method}))
    pushes = getattr(est, "reverse_pushes", None)
    if pushes is None:
        pushes = getattr(est, "forward_pushes", 0)
    _emit(
        out,
        RunRecord(
            args.command,
            args.graph,
            {"method": method, "delta": delta, "alpha": args.alpha},
            args.seed,
            {"value": est.value, "source": _name(g, s), "target": _name(g, t)},
            {
                "walks": est.walks_used,
                "pushes": pushes,
                "r_max": est.r_max_used if math.isfinite(est.r_max_used) else "inf",
            },
            wall,
        ),
    )
    return 0


def _cmd_estimate_mstp(args, out) -> int:
    g = _load_graph(args)
    s = _node(g, args.source)
    t = _node(g, args.target)
    delta = args.delta if args.delta is not None else 1.0 / g.n
    params = MstpParams(
        ell_max=args.ell_max,
        delta=delta,
        epsilon=args.eps,
        p_fail=args.pfail,
        c=args.c,
        eps_r=args.eps_r,
        use_theorem_c=args.use_theorem_c,
    )
    t0 = time.perf_counter()
    fn = estimate_truncated_hitting if args.first_passage else estimate_mstp
    values = fn(g, s, t, params, seed=args.seed)
    wall = time.perf_counter() - t0
    _emit(
        out,
        _config_record(
            args,
            {"n": g.n, "m": g.m, "delta": delta, "eps_r": params.effective_eps_r()},
        ),
    )
    _emit(
        out,
        RunRecord(
            args.command,
            args.graph,
            {
                "ell_max": args.ell_max,
                "delta": delta,
                "first_passage": args.first_passage,
            },
            args.seed,
            {
                "per_ell": [float(x) for x in values],
                "source": _name(g, s),
                "target": _name(g, t),
            },
            {"paths": params.num_paths()},
            wall,
        ),
    )
    return 0


def _cmd_heat_kernel(args, out) -> int:
    g = _load_graph(args)
    s = _node(g, args.source)
    t = _node(g, args.target)
    hk = HeatKernelParams(args.t_param, args.ell_max)
    delta = args.delta if args.delta is not None else 1.0 / g.n
    params = MstpParams(
        ell_max=hk.ell_max,
        delta=delta,
        epsilon=args.eps,
        p_fail=args.pfail,
        c=args.c,
    )
    t0 = time.perf_counter()
    value = estimate_heat_kernel(g, s, t, hk, params=params, seed=args.seed)
    wall = time.perf_counter() - t0
    _emit(
        out,
        _config_record(
            args, {"n": g.n, "m": g.m, "delta": delta, "ell_max": params.ell_max}
        ),
    )
    _emit(
        out,
        RunRecord(
            args.command,
            args.graph,
            {"t": args.t_param, "ell_max": params.ell_max, "delta": delta},
            args.seed,
            {"value": float(value), "source": _name(g, s), "target": _name(g, t)},
            {"paths": params.num_paths()},
            wall,
        ),
    )
    return 0


def _cmd_search(args, out) -> int:
    g = _load_graph(args)
    s = _node(g, args.source)
    payload = None
    if args.index:
        payload = load_index(args.index)
        kw_map = payload["keywords"]
    elif args.keywords:
        kw_map = KeywordIndex.from_file(args.keywords, g=g).mapping
    else:
        raise SystemExit2("search needs --index or --keywords")
    if args.keyword not in kw_map:
        raise KeyError(f"unknown keyword {args.keyword!r}")
    targets = list(kw_map[args.keyword])
    delta = args.delta if args.delta is not None else 1.0 / g.n
    r_max = args.rmax
    if payload is not None:
        r_max = payload["per_keyword"][args.keyword]["r_max"]
    elif r_max is None:
        r_max = default_r_max(g, PprParams(delta=delta, alpha=args.alpha))
    params = PprParams(delta=delta, alpha=args.alpha, r_max=r_max)
    w = args.walks if args.walks is not None else num_walks(params, r_max)
    t0 = time.perf_counter()
    forward = build_forward_vector(g, s, w, WalkConfig(args.alpha, args.seed))
    if args.method == "direct":
        ranked = score_targets_direct(
            g, s, targets, params, seed=args.seed, forward=forward
        )
    elif args.method == "grouped":
        if payload is not None:
            gi = payload["per_keyword"][args.keyword]["grouped"]
        else:
            gi = build_grouped_index(g, targets, r_max, args.alpha)
        ranked = score_targets_grouped(forward, gi)
    else:
        if payload is not None:
            si = payload["per_keyword"][args.keyword]["sampler"]
        else:
            si = build_target_sampler(g, targets, r_max, args.alpha)
        ranked = sample_targets(forward, si, args.nsamples, seed=args.seed)
    wall = time.perf_counter() - t0
    _emit(
        out,
        _config_record(
            args, {"n": g.n, "m": g.m, "r_max": r_max, "walks": w, "targets": len(targets)}
        ),
    )
    top = [[_name(g, v), float(score)] for v, score in ranked[: args.topk]]
    _emit(
        out,
        RunRecord(
            args.command,
            args.graph,
            {"keyword": args.keyword, "method": args.method, "r_max": r_max},
            args.seed,
            {"ranking": top, "source": _name(g, s)},
            {"walks": w, "targets": len(targets)},
            wall,
        ),
    )
    return 0


def _cmd_precompute_search(args, out) -> int:
    if not args.output:
        raise SystemExit2("precompute-search needs --output for the index file")
    g = _load_graph(args)
    kw = KeywordIndex.from_file(args.keywords, g=g)
    if args.rmax is None and not args.adaptive:
        raise SystemExit2("give --rmax or --adaptive")
    global_pr = exact_global_pagerank(g, args.alpha) if args.adaptive else None
    per_keyword: dict = {}
    t0 = time.perf_counter()
    for keyword in sorted(kw.mapping):
        targets = list(kw.mapping[keyword])
        if args.adaptive:
            r_max = adaptive_r_max(
                targets, global_pr, args.walks, args.topk, beta=args.beta, c=args.c
            )
        else:
            r_max = args.rmax
        per_keyword[keyword] = {
            "targets": targets,
            "r_max": r_max,
            "grouped": build_grouped_index(g, targets, r_max, args.alpha),
            "sampler": build_target_sampler(g, targets, r_max, args.alpha),
        }
    wall = time.perf_counter() - t0
    payload = {
        "alpha": args.alpha,
        "keywords": kw.mapping,
        "per_keyword": per_keyword,
    }
    save_index(args.output, payload)
    _emit(sys.stdout, _config_record(args, {"n": g.n, "m": g.m}))
    _emit(
        sys.stdout,
        RunRecord(
            args.command,
            args.graph,
            {"keywords": len(per_keyword), "adaptive": args.adaptive},
            args.seed,
            {"index": args.output},
            {"targets": sum(len(v["targets"]) for v in per_keyword.values())},
            wall,
        ),
    )
    return 0


def _cmd_sample_path(args, out) -> int:
    g = _load_graph(args)
    s = _node(g, args.source)
    tokens: list[str] = []
    if args.targets:
        tokens += [tok for tok in args.targets.split(",") if tok]
    if args.targets_file:
        with open(args.targets_file, "r", encoding="utf-8") as fh:
            tokens += fh.read().split()
    if not tokens:
        raise SystemExit2("sample-path needs --targets or --targets-file")
    targets = sorted({_node(g, tok) for tok in tokens})
    cfg = WalkConfig(args.alpha, args.seed)
    t0 = time.perf_counter()
    state = precompute_path_samplers(g, targets, args.epsr, args.alpha)
    rng = cfg.stream()
    attempts_total = 0
    paths = []
    for _ in range(args.count):
        path, attempts = sample_path_to_target(g, s, state, cfg, rng=rng, return_attempts=True)
        attempts_total += attempts
        paths.append(path)
    wall = time.perf_counter() - t0
    header = _config_record(
        args, {"n": g.n, "m": g.m, "targets": [_name(g, t) for t in targets]}
    )
    print("# " + header.to_line(), file=out)
    for path in paths:
        print(" ".join(_name(g, v) for v in path), file=out)
    print(
        f"# paths={args.count} attempts={attempts_total} wall_time_s={wall:.6f}",
        file=out,
    )
    return 0


def _cmd_precompute(args, out) -> int:
    if not args.output:
        raise SystemExit2("precompute needs --output for the store file")
    g = _load_graph(args)
    params = SharedWalkParams(args.c1, args.c2, args.c3)
    t0 = time.perf_counter()
    store = build_shared_walk_vectors(
        g, args.alpha, args.delta, args.dmax, params=params, seed=args.seed
    )
    shards = shard_vectors(store.as_coord_vectors(g.n), args.shards)
    wall = time.perf_counter() - t0
    with open(args.output, "wb") as fh:
        pickle.dump(
            {
                "store": store,
                "shards": shards,
                "k": args.shards,
                "alpha": args.alpha,
                "delta": args.delta,
            },
            fh,
        )
    _emit(
        sys.stdout,
        _config_record(
            args,
            {
                "n": g.n,
                "m": g.m,
                "r_max_f": store.r_max_f,
                "r_max_r": store.r_max_r,
                "shared_walks": params.shared_walks(args.delta),
                "full_walks": params.full_walks(args.delta),
            },
        ),
    )
    _emit(
        sys.stdout,
        RunRecord(
            args.command,
            args.graph,
            {"delta": args.delta, "dmax": args.dmax, "shards": args.shards},
            args.seed,
            {"store": args.output},
            {
                "walk_entries": sum(len(f) for f in store.endpoint_freqs),
                "full_walk_nodes": sum(store.full_walk),
            },
            wall,
        ),
    )
    return 0


def _cmd_serve_sim(args, out) -> int:
    g = _load_graph(args)
    with open(args.store, "rb") as fh:
        bundle = pickle.load(fh)
    store = bundle["store"]
    shards = bundle["shards"]
    raw_queries: list[tuple[str, str]] = []
    for q in args.query:
        parts = [p.strip() for p in q.split(",")]
        if len(parts) != 2:
            raise SystemExit2(f"--query wants 's,t', got {q!r}")
        raw_queries.append((parts[0], parts[1]))
    if args.queries:
        with open(args.queries, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip() and not line.startswith("#"):
                    a, b = line.split()[:2]
                    raw_queries.append((a, b))
    if not raw_queries:
        raise SystemExit2("serve-sim needs --query or --queries")
    _emit(out, _config_record(args, {"n": g.n, "k": bundle["k"]}))
    for s_tok, t_tok in raw_queries:
        s = _node(g, s_tok)
        t = _node(g, t_tok)
        t0 = time.perf_counter()
        local = query_shared_walks(g, store, s, t)
        rev = reverse_push(g, t, store.r_max_r, store.alpha)
        y_vec = {int(v): float(val) for v, val in rev.estimates.items()}
        for u, val in rev.residuals.items():
            y_vec[g.n + int(u)] = float(val)
        key = ("y", t)
        for shard in shards:
            shard.owners.add(key)
            mine = {c: v for c, v in y_vec.items() if c % bundle["k"] == shard.shard_id}
            if mine:
                shard.entries[key] = mine
        payload = {("x", int(v)): float(rv) for v, rv in store.fwd_residuals[s].items()}
        sharded = store.fwd_estimates[s].get(t, 0.0) + broker_estimate(
            BrokerQuery(target=key, payload=payload), shards
        )
        for shard in shards:
            shard.owners.discard(key)
            shard.entries.pop(key, None)
        wall = time.perf_counter() - t0
        _emit(
            out,
            RunRecord(
                args.command,
                args.graph,
                {"k": bundle["k"]},
                args.seed,
                {
                    "source": _name(g, s),
                    "target": _name(g, t),
                    "value": sharded,
                    "in_process_value": local,
                },
                {"shards": bundle["k"]},
                wall,
            ),
        )
    return 0


def _cmd_bench(args, out) -> int:
    g = _load_graph(args)
    spec = BenchSpec(
        pair_mode=args.mode,
        n_pairs=args.pairs,
        alpha=args.alpha,
        delta=args.delta,
        epsilon=args.eps,
        p_fail=args.pfail,
        c=args.c,
        mc_walks=args.mc_walks,
        seed=args.seed,
    )
    t0 = time.perf_counter()
    rows = run_benchmark(g, spec)
    wall = time.perf_counter() - t0
    _emit(
        out,
        _config_record(
            args,
            {
                "n": g.n,
                "m": g.m,
                "delta": spec.resolved_delta(g),
                "mc_walks": spec.resolved_mc_walks(g),
            },
        ),
    )
    for row in rows:
        _emit(
            out,
            RunRecord(
                args.command,
                args.graph,
                {"mode": args.mode, "pairs": args.pairs},
                args.seed,
                dict(row),
                {},
                wall,
            ),
        )
    return 0


_HANDLERS = {
    "gen": _cmd_gen,
    "oracle": _cmd_oracle,
    "estimate": _cmd_estimate,
    "estimate-mstp": _cmd_estimate_mstp,
    "heat-kernel": _cmd_heat_kernel,
    "search": _cmd_search,
    "precompute-search": _cmd_precompute_search,
    "sample-path": _cmd_sample_path,
    "precompute": _cmd_precompute,
    "serve-sim": _cmd_serve_sim,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be at least 1")
    out = sys.stdout
    close_out = False
    try:
        if args.output and args.command not in ("precompute", "precompute-search"):
            out = open(args.output, "w", encoding="utf-8")
            close_out = True
        return _HANDLERS[args.command](args, out)
    except SystemExit2 as exc:
        print(f"pushwalk {args.command}: {exc}", file=sys.stderr)
        return 1
    except GraphFormatError as exc:
        print(f"pushwalk {args.command}: bad graph data: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"pushwalk {args.command}: cannot read input: {exc}", file=sys.stderr)
        return 2
    except KeyError as exc:
        print(f"pushwalk {args.command}: {exc.args[0]}", file=sys.stderr)
        return 2
    except UnreachableTargetError as exc:
        print(f"pushwalk {args.command}: {exc}", file=sys.stderr)
        return 2
    except (pickle.UnpicklingError, EOFError) as exc:
        print(f"pushwalk {args.command}: bad store/index file: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"pushwalk {args.command}: invalid parameters: {exc}", file=sys.stderr)
        return 1
    except (ConvergenceError, RuntimeError, FloatingPointError, ZeroDivisionError) as exc:
        print(f"pushwalk {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 3
    finally:
        if close_out:
            out.close()


if __name__ == "__main__":
    sys.exit(main())
