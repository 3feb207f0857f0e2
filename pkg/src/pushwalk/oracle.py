"""Exact reference computations used as ground truth in tests and benchmarks.

Everything here is dense and deliberately simple: desk-scale graphs are a few
thousand nodes at most, where an n x n matrix and full power iteration are
cheap and leave no room for the approximation bugs these oracles exist to
catch.
"""

from __future__ import annotations

import math

import numpy as np

from .graph import Graph

__all__ = [
    "ConvergenceError",
    "UnreachableTargetError",
    "transition_matrix",
    "as_distribution",
    "exact_ppr",
    "exact_ppr_matrix",
    "exact_global_pagerank",
    "exact_mstp",
    "exact_first_passage",
    "exact_conditional_path_dist",
]


class ConvergenceError(RuntimeError):
    """Power iteration failed to converge (signals a normalization bug)."""


class UnreachableTargetError(ValueError):
    """No walk from the source ever reaches the requested target set."""


def transition_matrix(g: Graph) -> np.ndarray:
    """Dense row-stochastic transition matrix W (dangling rows are zero)."""
    W = np.zeros((g.n, g.n))
    for u in range(g.n):
        for v, w in g.out_adj[u]:
            W[u, v] += w
    return W


def as_distribution(g: Graph, source) -> np.ndarray:
    """Coerce a source (node id, dict, or array) to a dense distribution."""
    if isinstance(source, (int, np.integer)):
        vec = np.zeros(g.n)
        vec[int(source)] = 1.0
        return vec
    if isinstance(source, dict):
        vec = np.zeros(g.n)
        for node, mass in source.items():
            vec[node] = mass
    else:
        vec = np.asarray(source, dtype=float)
        if vec.shape != (g.n,):
            raise ValueError(f"source has shape {vec.shape}, expected ({g.n},)")
    total = vec.sum()
    if not vec.min() >= 0.0 or not total > 0.0:
        raise ValueError("source must be a nonnegative vector with positive mass")
    return vec / total


def exact_ppr(g: Graph, source, alpha: float, tol: float = 1e-12) -> np.ndarray:
    """Exact personalized PageRank by power iteration.

    Iterates p <- alpha*s + (1-alpha)*p@W from p0 = s until the successive
    infinity-norm change drops below tol*alpha, which bounds the final
    infinity-norm error by ~tol. Raises ConvergenceError after
    ceil(log(tol)/log(1-alpha)) + 64 iterations — on a properly normalized
    graph with the sink convention applied that never happens.
    """
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    s = as_distribution(g, source)
    W = transition_matrix(g)
    max_iters = math.ceil(math.log(tol) / math.log(1.0 - alpha)) + 64
    p = s.copy()
    for _ in range(max_iters):
        nxt = alpha * s + (1.0 - alpha) * (p @ W)
        delta = float(np.max(np.abs(nxt - p)))
        p = nxt
        if delta < tol * alpha:
            return p
    raise ConvergenceError(
        f"power iteration did not converge in {max_iters} iterations; "
        "check that the graph is normalized and has no dangling nodes"
    )


def exact_ppr_matrix(g: Graph, alpha: float) -> np.ndarray:
    """Full PPR matrix via a single dense solve: row s is pi_s.

    pi_s solves pi = alpha*e_s + (1-alpha)*pi@W, i.e. pi = alpha*e_s@M with
    M = inv(I - (1-alpha)W). One factorization serves all sources, which the
    pair-sweep tests exploit; tests cross-check it against exact_ppr.

    Requires every row of W to be stochastic (apply the sink convention
    first); with a dangling row the matrix is still invertible but rows no
    longer sum to 1.
    """
    W = transition_matrix(g)
    A = np.eye(g.n) - (1.0 - alpha) * W
    return alpha * np.linalg.inv(A)


def exact_global_pagerank(g: Graph, alpha: float, tol: float = 1e-12) -> np.ndarray:
    """Global PageRank: PPR from the uniform source distribution."""
    return exact_ppr(g, np.full(g.n, 1.0 / g.n), alpha, tol)


def exact_mstp(g: Graph, source, ell: int) -> np.ndarray:
    """Exact ell-step transition distribution s @ W^ell."""
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    if ell > 10_000:
        raise ValueError("ell > 10000 exceeds the desk-scale oracle bound")
    vec = as_distribution(g, source)
    W = transition_matrix(g)
    for _ in range(ell):
        vec = vec @ W
    return vec


def exact_first_passage(g: Graph, source, t: int, ell_max: int) -> np.ndarray:
    """First-passage probabilities to t for lengths 1..ell_max (inclusive).

    Entry ell-1 is P[X_ell = t and X_j != t for 1 <= j < ell | X_0 ~ source]
    under the fixed-length chain W. Time-0 occupancy of t is ignored, so for
    source = t this is the first-return distribution.
    """
    if ell_max < 1:
        return np.zeros(0)
    W = transition_matrix(g)
    s = as_distribution(g, source)
    # h[v] = P[first hit of t happens in exactly `steps` more steps | at v],
    # built backwards: h_1[v] = W[v, t]; h_{k}[v] = sum_{u != t} W[v,u] h_{k-1}[u].
    out = np.zeros(ell_max)
    h = W[:, t].copy()
    out[0] = float(s @ h)
    mask = np.ones(g.n)
    mask[t] = 0.0
    for ell in range(2, ell_max + 1):
        h = W @ (h * mask)
        out[ell - 1] = float(s @ h)
    return out


def exact_conditional_path_dist(
    g: Graph,
    s: int,
    targets,
    alpha: float,
    max_len: int,
    path_cap: int = 2_000_000,
) -> tuple[dict[tuple[int, ...], float], float]:
    """Exhaustive conditional path distribution for tiny graphs.

    Enumerates every walk from s of length <= max_len, keeps those ending in
    ``targets``, and divides each absolute probability
    alpha*(1-alpha)^len * prod(edge weights) by the total conditioning mass
    pi_s(targets) (computed by exact_ppr over the full horizon). Returns
    (path -> conditional probability, tail_mass) where tail_mass is the
    conditional mass of target-terminated walks longer than max_len.

    Raises UnreachableTargetError when pi_s(targets) is zero, and
    RuntimeError when the enumeration would exceed ``path_cap`` paths.
    """
    target_set = set(targets)
    if not target_set:
        raise ValueError("targets must be non-empty")
    pi = exact_ppr(g, s, alpha)
    total = float(sum(pi[t] for t in target_set))
    if total < 1e-15:
        raise UnreachableTargetError(
            f"targets {sorted(target_set)} are unreachable from node {s}"
        )
    dist: dict[tuple[int, ...], float] = {}
    enumerated = 0.0
    count = 0
    # Iterative frontier expansion: prob of the walk *prefix* (edge factors
    # and (1-alpha) step factors applied), stopping mass alpha*prefix.
    frontier: list[tuple[tuple[int, ...], float]] = [((s,), 1.0)]
    for _ in range(max_len + 1):
        nxt: list[tuple[tuple[int, ...], float]] = []
        for path, prob in frontier:
            count += 1
            if count > path_cap:
                raise RuntimeError(f"path enumeration exceeded cap {path_cap}")
            if path[-1] in target_set:
                dist[path] = dist.get(path, 0.0) + alpha * prob / total
                enumerated += alpha * prob
            if len(path) <= max_len:
                for v, w in g.out_adj[path[-1]]:
                    nxt.append((path + (v,), prob * (1.0 - alpha) * w))
        frontier = nxt
    tail = 1.0 - enumerated / total
    return dist, max(tail, 0.0)
