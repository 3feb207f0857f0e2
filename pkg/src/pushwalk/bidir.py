"""Bidirectional single-pair estimation: reverse push meets forward walks.

The reverse identity pi_s[t] = p[s] + sum_v pi_s[v] r[v] reads, for random V
distributed as pi_s, as an expectation: pi_s[t] = p[s] + E[r[V]]. Estimating
E[r[V]] by the empirical mean over w geometric walks gives an unbiased
estimator whose per-sample range is bounded by the push threshold r_max —
that bound is what makes far fewer walks suffice compared to plain endpoint
counting.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .graph import Graph
from .oracle import as_distribution, exact_global_pagerank
from .push import PushResult, SparseVec, reverse_push, reverse_push_balanced
from .sampling import WalkConfig, walk_endpoints

__all__ = [
    "PprParams",
    "PprEstimate",
    "default_r_max",
    "num_walks",
    "estimate_ppr",
    "estimate_ppr_balanced",
    "monte_carlo_ppr",
    "choose_delta_from_target",
]


@dataclass
class PprParams:
    """Accuracy knobs shared by the estimators.

    delta is the smallest score the caller wants resolved, epsilon the target
    relative error above that scale, p_fail the allowed failure probability.
    c scales the walk count; the empirically tuned default is 7, while
    use_theorem_c switches to the worst-case constant (3/eps^2)·ln(2/p_fail).
    r_max, when set, overrides the runtime-balancing default threshold.
    """

    delta: float
    alpha: float = 0.2
    epsilon: float = 0.5
    p_fail: float = 0.1
    c: float = 7.0
    r_max: float | None = None
    use_theorem_c: bool = False

    def __post_init__(self) -> None:
        if self.delta <= 0.0:
            raise ValueError("delta must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly between 0 and 1")
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in (0, 1]")
        if not 0.0 < self.p_fail < 1.0:
            raise ValueError("p_fail must lie strictly between 0 and 1")
        if self.c <= 0.0:
            raise ValueError("c must be positive")

    def effective_c(self) -> float:
        if self.use_theorem_c:
            return (3.0 / self.epsilon**2) * math.log(2.0 / self.p_fail)
        return self.c

    def guarantee_floor(self) -> float:
        """Smallest r_max for which the accuracy guarantee is proven."""
        return 2.0 * math.e * self.delta / (self.alpha * self.epsilon)


@dataclass
class PprEstimate:
    value: float
    walks_used: int
    reverse_pushes: int
    r_max_used: float


def default_r_max(g: Graph, params: PprParams) -> float:
    """Residual threshold balancing push time against walk time.

    epsilon * sqrt(davg * delta / ln(2/p_fail)) with davg = m/n; derived by
    equating the two phases' costs under the worst-case walk count.
    """
    davg = g.average_degree()
    return params.epsilon * math.sqrt(
        davg * params.delta / math.log(2.0 / params.p_fail)
    )


def num_walks(params: PprParams, r_max: float) -> int:
    """Walk budget c * r_max / delta, rounded up, never below one."""
    if r_max <= 0.0:
        raise ValueError("r_max must be positive")
    return max(1, math.ceil(params.effective_c() * r_max / params.delta))


def _settle_r_max(g: Graph, params: PprParams) -> float:
    r_max = params.r_max if params.r_max is not None else default_r_max(g, params)
    if r_max <= 0.0:
        raise ValueError("r_max must be positive")
    floor = params.guarantee_floor()
    if r_max <= floor:
        warnings.warn(
            f"r_max={r_max:.6g} is at or below the guaranteed-accuracy floor "
            f"2e*delta/(alpha*epsilon)={floor:.6g}; estimates remain unbiased "
            "but the stated error bound is not proven in this regime",
            UserWarning,
            stacklevel=3,
        )
    return r_max


def _estimate_side(g: Graph, source, estimates: SparseVec) -> float:
    """p[s] for a node source, or sum_v sigma[v]*p[v] for a distribution."""
    if isinstance(source, (int, np.integer)):
        return estimates.get(int(source), 0.0)
    sigma = as_distribution(g, source)
    return float(sum(sigma[v] * pv for v, pv in estimates.items()))


def _residual_mean(
    g: Graph,
    source,
    residuals: SparseVec,
    w: int,
    cfg: WalkConfig,
    rng: np.random.Generator | None,
) -> tuple[float, int]:
    endpoints = walk_endpoints(g, source, w, cfg, rng=rng)
    total = 0.0
    for v in endpoints:
        total += residuals.get(v, 0.0)
    return total / w, w


def estimate_ppr(
    g: Graph,
    s,
    t: int,
    params: PprParams,
    seed: int = 0,
    rng: np.random.Generator | None = None,
) -> PprEstimate:
    """Unbiased estimate of pi_s[t]: push estimate plus sampled residual mean.

    ``s`` may be a node id or a source distribution (dict or dense array);
    for a distribution the push estimate is averaged under it and each walk
    starts from an independently sampled node.
    """
    r_max = _settle_r_max(g, params)
    pr = reverse_push(g, t, r_max, params.alpha)
    value = _estimate_side(g, s, pr.estimates)
    w = num_walks(params, r_max)
    cfg = WalkConfig(alpha=params.alpha, seed=seed)
    if pr.residuals:
        mean, w = _residual_mean(g, s, pr.residuals, w, cfg, rng)
        value += mean
    return PprEstimate(value, w if pr.residuals else 0, pr.pushes_performed, r_max)


def estimate_ppr_balanced(
    g: Graph,
    s,
    t: int,
    params: PprParams,
    walk_time_constant: float | None = None,
    seed: int = 0,
    rng: np.random.Generator | None = None,
) -> PprEstimate:
    """Like estimate_ppr, but the push phase picks its own stopping point.

    The walk budget is then c * achieved_rmax / delta. When the push queue
    drains completely the answer is already exact and no walks run.
    """
    pr = reverse_push_balanced(
        g, t, params.alpha, params.delta, params.effective_c(), walk_time_constant
    )
    value = _estimate_side(g, s, pr.estimates)
    if pr.achieved_rmax == 0.0:
        return PprEstimate(value, 0, pr.pushes_performed, 0.0)
    w = num_walks(params, pr.achieved_rmax)
    cfg = WalkConfig(alpha=params.alpha, seed=seed)
    mean, w = _residual_mean(g, s, pr.residuals, w, cfg, rng)
    return PprEstimate(value + mean, w, pr.pushes_performed, pr.achieved_rmax)


def monte_carlo_ppr(
    g: Graph,
    s,
    t: int | None,
    params: PprParams,
    walks: int | None = None,
    seed: int = 0,
    rng: np.random.Generator | None = None,
):
    """Plain endpoint-frequency estimate.

    With a target node, returns a PprEstimate of pi_s[t]; with t=None,
    returns a SparseVec of endpoint frequencies for all targets at once.
    The default budget is the union-bound count 3*ln(2/p_fail)/(eps^2*delta).
    """
    if walks is None:
        c_mc = 3.0 * math.log(2.0 / params.p_fail)
        walks = math.ceil(c_mc / (params.epsilon**2 * params.delta))
    if walks <= 0:
        raise ValueError("walk count must be positive")
    cfg = WalkConfig(alpha=params.alpha, seed=seed)
    endpoints = walk_endpoints(g, s, walks, cfg, rng=rng)
    if t is not None:
        hits = sum(1 for v in endpoints if v == t)
        return PprEstimate(hits / walks, walks, 0, math.inf)
    freq = SparseVec()
    for v in endpoints:
        freq.add(v, 1.0 / walks)
    return freq


def choose_delta_from_target(
    g: Graph,
    t: int,
    alpha: float,
    global_pr: np.ndarray | None = None,
) -> float:
    """Score threshold tied to the target's own global importance.

    Returns max(pr[t], 1/n) where pr is the global (uniform-teleport)
    stationary vector — resolving scores much below a node's typical share
    costs more than it informs. Pass a precomputed vector to amortize.
    """
    if global_pr is None:
        global_pr = exact_global_pagerank(g, alpha)
    return max(float(global_pr[t]), 1.0 / g.n)
