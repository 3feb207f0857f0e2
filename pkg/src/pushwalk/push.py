"""Local push primitives over the reverse and forward residual systems.

Three routines share one bookkeeping idea: maintain an estimate vector ``p``
and a residual vector ``r`` such that an exact identity holds at every step —

* reverse (target ``t``):  pi_s[t] = p[s] + sum_v pi_s[v] * r[v]   for all s
* forward (source ``s``):  pi_s[t] = p[t] + sum_v r[v] * pi_v[t]   for all t

Each push moves mass from ``r`` into ``p`` (scaled by alpha) and spreads the
rest one edge outward, so the identity is preserved while the residual mass
shrinks. Termination leaves every residual below a threshold, which bounds
the estimate error without ever touching the whole graph.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass

from .graph import Graph

__all__ = [
    "SparseVec",
    "PushResult",
    "reverse_push",
    "forward_push",
    "reverse_push_balanced",
]


class SparseVec(dict):
    """Sparse real vector over node ids; missing keys read as 0.0.

    Entries are removed rather than set to zero, so iteration only ever
    visits non-zeros.
    """

    def __missing__(self, key) -> float:
        return 0.0

    def add(self, key: int, delta: float) -> float:
        new = self.get(key, 0.0) + delta
        if new == 0.0:
            self.pop(key, None)
        else:
            self[key] = new
        return new

    def max_value(self) -> float:
        return max(self.values(), default=0.0)


@dataclass
class PushResult:
    """Outcome of one push run: estimates, residuals, and work accounting."""

    estimates: SparseVec
    residuals: SparseVec
    pushes_performed: int
    achieved_rmax: float
    work_units: int = 0
    degree_sum: float = 0.0

    def residual_mass(self) -> float:
        return sum(self.residuals.values())


def reverse_push(g: Graph, t: int, r_max: float, alpha: float) -> PushResult:
    """Drain residuals toward in-neighbors until all fall to <= r_max.

    Starting from a unit residual at the target, repeatedly take any node v
    with r[v] > r_max (strictly), credit alpha*r[v] to p[v], and hand
    (1-alpha)*w(u,v)*r[v] to every in-neighbor u. On return p[s] lower-bounds
    pi_s[t] with additive error at most r_max, for every source s at once.

    r_max >= 1 returns immediately with p empty and r the unit vector at t.
    """
    if r_max <= 0.0:
        raise ValueError("r_max must be positive")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    _check_node(g, t)
    p = SparseVec()
    r = SparseVec({t: 1.0})
    queue: deque[int] = deque()
    queued = set()
    if 1.0 > r_max:
        queue.append(t)
        queued.add(t)
    in_adj = g.in_adj
    keep = 1.0 - alpha
    pushes = 0
    work = 0
    while queue:
        v = queue.popleft()
        queued.discard(v)
        rv = r.get(v, 0.0)
        if not rv > r_max:
            continue
        r.pop(v, None)
        for u, w in in_adj[v]:
            if r.add(u, keep * w * rv) > r_max and u not in queued:
                queue.append(u)
                queued.add(u)
        p.add(v, alpha * rv)
        pushes += 1
        work += len(in_adj[v])
    return PushResult(p, r, pushes, r.max_value(), work)


def forward_push(g: Graph, s: int, r_max: float, alpha: float) -> PushResult:
    """Spread residual along out-edges until r[u]/d_u <= r_max everywhere.

    The degree-scaled threshold (strict >) keeps the touched region local.
    Nodes of degree zero are never pushed; their residual simply remains.
    On return p[t] approximates pi_s[t] with the residual term
    sum_v r[v]*pi_v[t] as the exact correction.
    """
    if r_max <= 0.0:
        raise ValueError("r_max must be positive")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    _check_node(g, s)
    p = SparseVec()
    r = SparseVec({s: 1.0})
    queue: deque[int] = deque()
    queued = set()

    def eligible(u: int, ru: float) -> bool:
        d = g.degree(u)
        return d > 0 and ru / d > r_max

    if eligible(s, 1.0):
        queue.append(s)
        queued.add(s)
    out_adj = g.out_adj
    keep = 1.0 - alpha
    pushes = 0
    work = 0
    degree_sum = 0.0
    while queue:
        u = queue.popleft()
        queued.discard(u)
        ru = r.get(u, 0.0)
        if not eligible(u, ru):
            continue
        r.pop(u, None)
        p.add(u, alpha * ru)
        for v, w in out_adj[u]:
            if eligible(v, r.add(v, keep * w * ru)) and v not in queued:
                queue.append(v)
                queued.add(v)
        pushes += 1
        work += len(out_adj[u])
        degree_sum += g.degree(u)
    achieved = max(
        (ru / g.degree(u) for u, ru in r.items() if g.degree(u) > 0),
        default=0.0,
    )
    return PushResult(p, r, pushes, achieved, work, degree_sum)


def reverse_push_balanced(
    g: Graph,
    t: int,
    alpha: float,
    delta: float,
    c: float = 7.0,
    walk_time_constant: float | None = None,
) -> PushResult:
    """Reverse push run until its cost balances the walks it would save.

    There is no fixed residual threshold: the node with the largest residual
    is always pushed next (lazy-deletion max-heap), and the run stops once
    the accumulated deterministic work (in-degree per push, including the
    push about to happen) would exceed the predicted sampling cost
    c * eps_r / delta for the current maximum residual eps_r, scaled by
    ``walk_time_constant`` (cost of one walk relative to one work unit;
    defaults to alpha, i.e. about 1/alpha work units per walk).

    achieved_rmax is the largest residual left standing — zero when the
    queue empties, in which case the estimates are exact.
    """
    if delta <= 0.0 or c <= 0.0:
        raise ValueError("delta and c must be positive")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    if walk_time_constant is None:
        walk_time_constant = alpha
    if walk_time_constant <= 0.0:
        raise ValueError("walk_time_constant must be positive")
    _check_node(g, t)
    p = SparseVec()
    r = SparseVec({t: 1.0})
    # Max-heap with lazy deletion: every residual increase files a new entry
    # carrying the value at filing time; stale entries are skipped on pop.
    heap: list[tuple[float, int]] = [(-1.0, t)]
    in_adj = g.in_adj
    keep = 1.0 - alpha
    pushes = 0
    work = 0
    achieved = 0.0
    while heap:
        neg, v = heapq.heappop(heap)
        rv = -neg
        if r.get(v, 0.0) != rv:
            continue  # stale entry
        # rv is the current maximum residual. Stop when the reverse work
        # through this push would outweigh the walks it replaces.
        cost = walk_time_constant * (work + len(in_adj[v]))
        if math.isnan(cost) or cost >= c * rv / delta:
            achieved = rv
            break
        r.pop(v, None)
        for u, w in in_adj[v]:
            heapq.heappush(heap, (-r.add(u, keep * w * rv), u))
        p.add(v, alpha * rv)
        pushes += 1
        work += len(in_adj[v])
    return PushResult(p, r, pushes, achieved, work)


def _check_node(g: Graph, v: int) -> None:
    if not 0 <= v < g.n:
        raise ValueError(f"node {v} out of range for graph with {g.n} nodes")
