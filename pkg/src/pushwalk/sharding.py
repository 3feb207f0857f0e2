"""In-process simulation of a sharded precomputation/serving deployment.

Score vectors live in 2n coordinates; a sharding function h assigns each
coordinate to one of k shards. A query's dot product decomposes into
per-shard partial sums, which the broker combines in shard-id order.
Partials are carried as exact dyadic rationals (every float is one), so the
combined result is bit-identical to the unsharded dot product no matter how
the coordinates were split.

The walk-sharing store answers the "how many walks must we precompute"
problem: instead of w walks from every node, store a few walks per node
plus each node's forward-push residuals, and synthesize a source's walk
distribution from its residual-weighted neighborhood at query time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .graph import Graph
from .push import SparseVec, forward_push, reverse_push
from .sampling import WalkConfig, walk_endpoints

__all__ = [
    "Shard",
    "ShardResponse",
    "BrokerQuery",
    "shard_vectors",
    "reassemble",
    "exact_dot",
    "broker_estimate",
    "SharedWalkParams",
    "SharedWalkStore",
    "build_shared_walk_vectors",
    "query_shared_walks",
    "storage_model",
    "storage_report",
    "StorageReport",
    "variable_delta_r_max",
]


@dataclass
class Shard:
    """One server's slice: every vector restricted to coordinates it owns."""

    shard_id: int
    k: int
    entries: dict = field(default_factory=dict)  # owner key -> {coord: value}
    owners: set = field(default_factory=set)

    def partial_dot(self, query: "BrokerQuery") -> "ShardResponse":
        """Exact partial sum of the query's dot product over local coords."""
        y = self.entries.get(query.target, {})
        total = Fraction(0)
        if query.payload is None:
            x = self.entries.get(query.source, {})
            for coord, xv in x.items():
                yv = y.get(coord)
                if yv is not None:
                    total += Fraction(xv * yv)
        else:
            for owner, weight in query.payload.items():
                x = self.entries.get(owner, {})
                for coord, xv in x.items():
                    yv = y.get(coord)
                    if yv is not None:
                        total += Fraction(weight * xv * yv)
        return ShardResponse(self.shard_id, total)


@dataclass
class ShardResponse:
    shard_id: int
    partial: Fraction

    @property
    def value(self) -> float:
        return float(self.partial)


@dataclass
class BrokerQuery:
    """Either a (source, target) pair or a target plus a residual payload
    broadcast to every shard (walk-sharing mode)."""

    target: object
    source: object | None = None
    payload: dict | None = None


def shard_vectors(vectors: dict, k: int, h=None) -> list[Shard]:
    """Partition every vector's coordinates across k shards (default
    h(coord) = coord mod k). Lossless: each coordinate lands on exactly one
    shard and reassemble() rebuilds the input."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if h is None:
        h = lambda coord: coord % k
    shards = [Shard(i, k) for i in range(k)]
    for owner, vec in vectors.items():
        for shard in shards:
            shard.owners.add(owner)
        for coord, val in vec.items():
            i = h(coord)
            if not 0 <= i < k:
                raise ValueError(f"sharding function sent coordinate {coord} to {i}")
            shards[i].entries.setdefault(owner, {})[coord] = val
    return shards


def reassemble(shards: list[Shard]) -> dict:
    out: dict = {}
    for shard in sorted(shards, key=lambda s: s.shard_id):
        for owner in shard.owners:
            out.setdefault(owner, {})
        for owner, vec in shard.entries.items():
            out.setdefault(owner, {}).update(vec)
    return out


def exact_dot(x: dict, y: dict) -> float:
    """Reference dot product with exact accumulation of the float products."""
    total = Fraction(0)
    for coord, xv in x.items():
        yv = y.get(coord)
        if yv is not None:
            total += Fraction(xv * yv)
    return float(total)


def broker_estimate(query: BrokerQuery, shards: list[Shard]) -> float:
    """Sum of per-shard partials, combined in shard-id order.

    Because partials are exact rationals, the result equals the unsharded
    dot product exactly for every shard count.
    """
    known = set()
    for shard in shards:
        known |= shard.owners
    if query.target not in known:
        raise KeyError(f"unknown vector {query.target!r}")
    if query.payload is None and query.source not in known:
        raise KeyError(f"unknown vector {query.source!r}")
    responses = [shard.partial_dot(query) for shard in shards]
    responses.sort(key=lambda r: r.shard_id)
    total = Fraction(0)
    for resp in responses:
        total += resp.partial
    return float(total)


# ---------------------------------------------------------------------------
# Walk sharing


@dataclass
class SharedWalkParams:
    """Cost constants of the three storage ingredients.

    c1 scales walk counts, c2 reverse-residual storage, c3 forward-residual
    storage. The cube-root thresholds equalize the three terms' growth:
    r_max_r = (c2^2 d / (c1 c3))^(1/3), r_max_f = (c3^2 d / (c1 c2))^(1/3),
    and each shared node stores n_w = c1 * r_max_f * r_max_r / d walks.
    """

    c1: float = 7.0
    c2: float = 0.5
    c3: float = 10.0

    def r_max_r(self, delta: float) -> float:
        return (self.c2**2 * delta / (self.c1 * self.c3)) ** (1.0 / 3.0)

    def r_max_f(self, delta: float) -> float:
        return (self.c3**2 * delta / (self.c1 * self.c2)) ** (1.0 / 3.0)

    def shared_walks(self, delta: float) -> int:
        return max(1, math.ceil(self.c1 * self.r_max_f(delta) * self.r_max_r(delta) / delta))

    def full_walks(self, delta: float) -> int:
        return max(1, math.ceil(self.c1 * self.r_max_r(delta) / delta))


@dataclass
class SharedWalkStore:
    """Per-node stored walks plus per-node forward push results."""

    alpha: float
    delta: float
    d_max: float
    params: SharedWalkParams
    r_max_f: float
    r_max_r: float
    walk_counts: list[int] = field(default_factory=list)
    endpoint_freqs: list[SparseVec] = field(default_factory=list)
    full_walk: list[bool] = field(default_factory=list)
    fwd_estimates: list[SparseVec] = field(default_factory=list)
    fwd_residuals: list[SparseVec] = field(default_factory=list)

    def as_coord_vectors(self, n: int) -> dict:
        """Walk vectors in 2n-coordinate form for sharding: key ("x", v)."""
        out = {}
        for v in range(len(self.walk_counts)):
            vec = {v: 1.0}
            for u, freq in self.endpoint_freqs[v].items():
                vec[n + u] = vec.get(n + u, 0.0) + freq
            out[("x", v)] = vec
        return out


def build_shared_walk_vectors(
    g: Graph,
    alpha: float,
    delta: float,
    d_max: float,
    params: SharedWalkParams | None = None,
    seed: int = 0,
) -> SharedWalkStore:
    """Precompute every node's walk endpoints and forward residuals.

    Nodes with degree above d_max are flagged full-walk: they store the
    complete per-node budget c1*r_max_r/delta and no push result (pushing
    forward from a hub floods the graph for no savings). Everyone else
    stores the reduced budget n_w plus a forward push at r_max_f, whose
    residuals let queries borrow the neighborhood's walks.
    """
    if params is None:
        params = SharedWalkParams()
    r_max_f = params.r_max_f(delta)
    r_max_r = params.r_max_r(delta)
    store = SharedWalkStore(alpha, delta, d_max, params, r_max_f, r_max_r)
    n_w = params.shared_walks(delta)
    n_full = params.full_walks(delta)
    cfg = WalkConfig(alpha=alpha, seed=seed)
    rng = cfg.stream()
    for v in range(g.n):
        full = g.degree(v) > d_max
        count = n_full if full else n_w
        freqs = SparseVec()
        for u in walk_endpoints(g, v, count, cfg, rng=rng):
            freqs.add(u, 1.0 / count)
        store.walk_counts.append(count)
        store.endpoint_freqs.append(freqs)
        store.full_walk.append(full)
        if full:
            store.fwd_estimates.append(SparseVec())
            store.fwd_residuals.append(SparseVec({v: 1.0}))
        else:
            pr = forward_push(g, v, r_max_f, alpha)
            store.fwd_estimates.append(pr.estimates)
            store.fwd_residuals.append(pr.residuals)
    return store


def query_shared_walks(
    g: Graph,
    store: SharedWalkStore,
    s: int,
    t: int,
    r_max_rev: float | None = None,
) -> float:
    """Estimate pi_s[t] from the store plus one reverse push at t.

    The source's stored push supplies (p_s, r_s); each node v in the
    residual support contributes its own stored walks:
    p_s(t) + sum_v r_s(v) * (p_t[v] + mean over v's endpoints of r_t).
    A full-walk source is its own single support node with unit residual.
    """
    if r_max_rev is None:
        r_max_rev = store.r_max_r
    rev = reverse_push(g, t, r_max_rev, store.alpha)
    value = store.fwd_estimates[s].get(t, 0.0)
    rev_p = rev.estimates
    rev_r = rev.residuals
    for v, rs in store.fwd_residuals[s].items():
        inner = rev_p.get(v, 0.0)
        for u, freq in store.endpoint_freqs[v].items():
            ru = rev_r.get(u, 0.0)
            if ru:
                inner += freq * ru
        value += rs * inner
    return value


def storage_model(
    n: int,
    delta: float,
    c1: float = 7.0,
    c2: float = 0.5,
    c3: float = 10.0,
    r_max_r: float | None = None,
    r_max_f: float | None = None,
) -> dict:
    """Predicted total stored entries under the two-term and three-term
    models, plus their optimized closed forms."""
    params = SharedWalkParams(c1, c2, c3)
    rr = r_max_r if r_max_r is not None else params.r_max_r(delta)
    rf = r_max_f if r_max_f is not None else params.r_max_f(delta)
    unshared_rr = math.sqrt(c2 * delta / c1)  # minimizer of the 2-term form
    return {
        "unshared": n * c1 * rr / delta + n * c2 / rr,
        "unshared_optimal": 2.0 * n * math.sqrt(c1 * c2 / delta),
        "unshared_optimal_r_max_r": unshared_rr,
        "shared": n * c3 / rf + n * c1 * rr * rf / delta + n * c2 / rr,
        "shared_optimal": 3.0 * n * (c1 * c2 * c3 / delta) ** (1.0 / 3.0),
        "r_max_r": rr,
        "r_max_f": rf,
    }


@dataclass
class StorageReport:
    measured_walk_entries: int
    measured_forward_entries: int
    measured_reverse_entries: int
    fitted_c2: float
    fitted_c3: float
    model: dict


def storage_report(
    g: Graph,
    store: SharedWalkStore,
    sample_targets: list[int] | None = None,
) -> StorageReport:
    """Measured non-zeros next to the storage model's predictions.

    c2 and c3 are fitted from the measurements themselves (mean reverse
    vector size times r_max_r, and likewise forward), then fed back into
    the model for the side-by-side comparison.
    """
    if sample_targets is None:
        sample_targets = list(range(min(g.n, 20)))
    walk_entries = sum(len(f) for f in store.endpoint_freqs)
    fwd_entries = sum(len(r) for r in store.fwd_residuals) + sum(
        len(p) for p in store.fwd_estimates
    )
    rev_entries = 0
    for t in sample_targets:
        pr = reverse_push(g, t, store.r_max_r, store.alpha)
        rev_entries += len(pr.estimates) + len(pr.residuals)
    mean_rev = rev_entries / max(1, len(sample_targets))
    fitted_c2 = mean_rev * store.r_max_r
    shared_nodes = [v for v in range(g.n) if not store.full_walk[v]]
    if shared_nodes:
        mean_fwd = sum(
            len(store.fwd_residuals[v]) + len(store.fwd_estimates[v])
            for v in shared_nodes
        ) / len(shared_nodes)
    else:
        mean_fwd = 0.0
    fitted_c3 = mean_fwd * store.r_max_f
    model = storage_model(
        g.n,
        store.delta,
        store.params.c1,
        max(fitted_c2, 1e-12),
        max(fitted_c3, 1e-12),
        r_max_r=store.r_max_r,
        r_max_f=store.r_max_f,
    )
    return StorageReport(
        walk_entries, fwd_entries, rev_entries, fitted_c2, fitted_c3, model
    )


def variable_delta_r_max(
    w: int, delta: float, global_pr_t: float, c1: float = 7.0
) -> float:
    """Reverse threshold that spends a fixed walk budget per target:
    r_max_r = w * max(delta, pr[t]) / c1."""
    if w < 1:
        raise ValueError("stored walk count must be at least 1")
    return w * max(delta, global_pr_t) / c1
