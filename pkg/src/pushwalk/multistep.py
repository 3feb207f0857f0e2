"""Fixed-horizon transition probabilities via layered reverse push.

For an arbitrary chain (no teleportation), the probability of standing at t
after exactly ell steps satisfies a layered identity: with per-level
estimates p^i and residuals r^i seeded by r^0 = e_t,

    P[X_ell = t | X_0 ~ s] = <s, p^ell> + sum_{k=0..ell} <s W^k, r^{ell-k}>

holds after any sequence of pushes. A push at (v, i) banks r^i[v] into
p^i[v] and forwards it one level up through in-edges; the forward phase
replaces the unknowable <s W^k, .> terms by sampling positions of
fixed-length paths. One reverse sweep plus one path set serves every
horizon up to ell_max at once, which is what makes diffusion sums cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph
from .oracle import as_distribution
from .push import SparseVec
from .sampling import WalkConfig, build_alias, random_walk_path

__all__ = [
    "MstpParams",
    "HeatKernelParams",
    "LayeredReverseState",
    "reverse_push_mstp",
    "estimate_mstp",
    "estimate_heat_kernel",
    "estimate_truncated_hitting",
    "poisson_weights",
]


@dataclass
class MstpParams:
    """Horizon and accuracy knobs for the multi-step estimators.

    eps_r (the reverse residual threshold) defaults to sqrt(delta/c); c
    defaults to the empirically tuned 7, or the worst-case constant
    max(6e/eps^2, 1/ln 2) * ln(2*ell_max/p_fail) when use_theorem_c is set.
    shrunk_multiplier selects the walk-score factor ell instead of the
    unbiased ell+1 (kept for comparison; see estimate_mstp).
    """

    ell_max: int
    delta: float
    epsilon: float = 0.5
    p_fail: float = 0.1
    c: float = 7.0
    eps_r: float | None = None
    use_theorem_c: bool = False
    shrunk_multiplier: bool = False

    def __post_init__(self) -> None:
        if self.ell_max < 1:
            raise ValueError("ell_max must be at least 1")
        if self.delta <= 0.0:
            raise ValueError("delta must be positive")
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in (0, 1]")
        if not 0.0 < self.p_fail < 1.0:
            raise ValueError("p_fail must lie strictly between 0 and 1")
        if self.c <= 0.0:
            raise ValueError("c must be positive")

    def effective_c(self) -> float:
        if self.use_theorem_c:
            return max(6.0 * math.e / self.epsilon**2, 1.0 / math.log(2.0)) * math.log(
                2.0 * self.ell_max / self.p_fail
            )
        return self.c

    def effective_eps_r(self) -> float:
        if self.eps_r is not None:
            if self.eps_r <= 0.0:
                raise ValueError("eps_r must be positive")
            return self.eps_r
        return math.sqrt(self.delta / self.effective_c())

    def num_paths(self) -> int:
        return max(
            1,
            math.ceil(self.effective_c() * self.ell_max * self.effective_eps_r() / self.delta),
        )


def poisson_weights(t_param: float, ell_max: int) -> tuple[np.ndarray, float]:
    """Weights e^{-t} t^l / l! for l = 0..ell_max, plus the truncated tail."""
    if t_param <= 0.0:
        raise ValueError("t_param must be positive")
    weights = np.empty(ell_max + 1)
    weights[0] = math.exp(-t_param)
    for ell in range(1, ell_max + 1):
        weights[ell] = weights[ell - 1] * t_param / ell
    return weights, max(0.0, 1.0 - float(weights.sum()))


@dataclass
class HeatKernelParams:
    """Poisson jump-length weighting with a tail-safe truncation.

    ell_max defaults to round(t + 10*sqrt(t)) — ten standard deviations
    above the mean jump count — and any explicit choice must leave a tail
    below 1e-9.
    """

    t_param: float
    ell_max: int | None = None

    def __post_init__(self) -> None:
        if self.t_param <= 0.0:
            raise ValueError("t_param must be positive")
        if self.ell_max is None:
            self.ell_max = int(round(self.t_param + 10.0 * math.sqrt(self.t_param)))
        _, tail = poisson_weights(self.t_param, self.ell_max)
        if tail > 1e-9:
            raise ValueError(
                f"truncation at ell_max={self.ell_max} leaves a weight tail of "
                f"{tail:.3g} > 1e-9; raise ell_max"
            )


@dataclass
class LayeredReverseState:
    """Per-level estimate/residual pairs indexed 0..ell_max."""

    ell_max: int
    estimates: list[SparseVec] = field(default_factory=list)
    residuals: list[SparseVec] = field(default_factory=list)

    @classmethod
    def initial(cls, ell_max: int, t: int) -> "LayeredReverseState":
        state = cls(
            ell_max,
            [SparseVec() for _ in range(ell_max + 1)],
            [SparseVec() for _ in range(ell_max + 1)],
        )
        state.residuals[0][t] = 1.0
        return state


def reverse_push_mstp(
    state: LayeredReverseState, g: Graph, v: int, i: int
) -> LayeredReverseState:
    """One push at node v, level i: bank the residual, forward it one level.

    p^i[v] += r^i[v]; r^{i+1}[u] += w(u,v) * r^i[v] for every in-neighbor u;
    r^i[v] = 0. Pushing a zero residual is a no-op. Levels are capped at
    ell_max, where residual has nowhere left to go (see _absorb).
    """
    if not 0 <= i < state.ell_max:
        raise ValueError("push level must satisfy 0 <= i < ell_max")
    rv = state.residuals[i].get(v, 0.0)
    if rv == 0.0:
        return state
    state.residuals[i].pop(v)
    state.estimates[i].add(v, rv)
    nxt = state.residuals[i + 1]
    for u, w in g.in_adj[v]:
        nxt.add(u, w * rv)
    return state

def _absorb(state: LayeredReverseState, v: int, i: int) -> None:
    """Bank r^i[v] into p^i[v] without forwarding (top level, or the
    first-passage target)."""
    rv = state.residuals[i].pop(v, 0.0)
    if rv:
        state.estimates[i].add(v, rv)


def _drain(
    g: Graph,
    t: int,
    ell_max: int,
    eps_r: float,
    absorb_at_target: bool,
) -> LayeredReverseState:
    """Push every (v, i) with r^i[v] > eps_r, level by level.

    Level-i pushes only feed level i+1, so one ordered sweep settles the
    whole ladder. With absorb_at_target set, residual arriving at t on
    levels >= 1 is banked without forwarding — the walk is considered
    finished the moment it first reaches t.
    """
    state = LayeredReverseState.initial(ell_max, t)
    for i in range(ell_max + 1):
        level = state.residuals[i]
        for v in sorted(k for k, rv in level.items() if rv > eps_r):
            if i == ell_max or (absorb_at_target and v == t and i >= 1):
                _absorb(state, v, i)
            else:
                reverse_push_mstp(state, g, v, i)
    return state


def _source_dot(g: Graph, source, vec: SparseVec) -> float:
    if isinstance(source, (int, np.integer)):
        return vec.get(int(source), 0.0)
    sigma = as_distribution(g, source)
    return float(sum(sigma[v] * x for v, x in vec.items()))


def _source_mass_at(g: Graph, source, t: int) -> float:
    if isinstance(source, (int, np.integer)):
        return 1.0 if int(source) == t else 0.0
    return float(as_distribution(g, source)[t])


def _sample_paths(
    g: Graph, source, count: int, ell_max: int, cfg: WalkConfig, rng
) -> list[list[int]]:
    if isinstance(source, (int, np.integer)):
        starts = [int(source)] * count
    else:
        sigma = as_distribution(g, source)
        table = build_alias([(i, float(w)) for i, w in enumerate(sigma)])
        starts = table.sample_many(rng, count)
    return [
        random_walk_path(g, u, cfg, fixed_len=ell_max, rng=rng) for u in starts
    ]


def estimate_mstp(
    g: Graph,
    s,
    t: int,
    params: MstpParams,
    seed: int = 0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Estimates of P[X_ell = t] for every horizon ell = 1..ell_max.

    Reverse phase: drain all residuals above eps_r. Forward phase: sample
    fixed-length paths from s; for each horizon, each path contributes
    (ell+1) * r^{ell-k}[V_k] with k drawn uniformly from {0..ell} — an
    unbiased single-position probe of the (ell+1)-term residual sum. Setting
    params.shrunk_multiplier replaces ell+1 by ell, kept for comparison at
    the cost of a systematic ell/(ell+1) shrinkage.

    Returns a length-ell_max array (index 0 holds horizon 1).
    """
    eps_r = params.effective_eps_r()
    state = _drain(g, t, params.ell_max, eps_r, absorb_at_target=False)
    if rng is None:
        rng = WalkConfig(alpha=0.5, seed=seed).stream()
    cfg = WalkConfig(alpha=0.5, seed=seed)  # alpha unused in fixed-length mode
    n_f = params.num_paths()
    paths = _sample_paths(g, s, n_f, params.ell_max, cfg, rng)
    out = np.zeros(params.ell_max)
    residuals = state.residuals
    for ell in range(1, params.ell_max + 1):
        base = _source_dot(g, s, state.estimates[ell])
        ks = rng.integers(0, ell + 1, size=n_f)
        mult = float(ell if params.shrunk_multiplier else ell + 1)
        total = 0.0
        for path, k in zip(paths, ks):
            rv = residuals[ell - k].get(path[k], 0.0)
            if rv:
                total += mult * rv
        out[ell - 1] = base + total / n_f
    return out


def estimate_heat_kernel(
    g: Graph,
    s,
    t: int,
    hk: HeatKernelParams,
    params: MstpParams | None = None,
    seed: int = 0,
    rng: np.random.Generator | None = None,
) -> float:
    """Poisson-weighted diffusion score sum_l alpha_l P[X_l = t].

    The horizon comes from hk; remaining accuracy knobs from params (its
    ell_max is overridden). The l=0 term is the source's own mass at t.
    """
    if params is None:
        params = MstpParams(ell_max=hk.ell_max, delta=1e-3)
    elif params.ell_max != hk.ell_max:
        params = MstpParams(
            ell_max=hk.ell_max,
            delta=params.delta,
            epsilon=params.epsilon,
            p_fail=params.p_fail,
            c=params.c,
            eps_r=params.eps_r,
            use_theorem_c=params.use_theorem_c,
            shrunk_multiplier=params.shrunk_multiplier,
        )
    weights, _ = poisson_weights(hk.t_param, hk.ell_max)
    per_ell = estimate_mstp(g, s, t, params, seed=seed, rng=rng)
    value = weights[0] * _source_mass_at(g, s, t)
    for ell in range(1, hk.ell_max + 1):
        value += weights[ell] * per_ell[ell - 1]
    return float(value)


def estimate_truncated_hitting(
    g: Graph,
    s,
    t: int,
    params: MstpParams,
    seed: int = 0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """First-arrival probabilities: P[X_ell = t and no earlier visit].

    Time zero does not count as a visit, so with s = t this is the
    first-return distribution. The reverse phase banks residual that reaches
    t (levels >= 1) instead of forwarding it; the forward phase voids a
    path's contribution at position k once the path has already visited t
    strictly before k — and a pickup standing on t itself only counts when
    that first arrival closes the queried horizon exactly (k == ell), or at
    time zero. Validated against a dynamic-programming oracle; no
    concentration guarantee is claimed for this variant.
    """
    eps_r = params.effective_eps_r()
    state = _drain(g, t, params.ell_max, eps_r, absorb_at_target=True)
    if rng is None:
        rng = WalkConfig(alpha=0.5, seed=seed).stream()
    cfg = WalkConfig(alpha=0.5, seed=seed)
    n_f = params.num_paths()
    paths = _sample_paths(g, s, n_f, params.ell_max, cfg, rng)
    first_hit = []
    for path in paths:
        j = next((k for k in range(1, len(path)) if path[k] == t), None)
        first_hit.append(j if j is not None else params.ell_max + 1)
    out = np.zeros(params.ell_max)
    residuals = state.residuals
    for ell in range(1, params.ell_max + 1):
        base = _source_dot(g, s, state.estimates[ell])
        ks = rng.integers(0, ell + 1, size=n_f)
        mult = float(ell if params.shrunk_multiplier else ell + 1)
        total = 0.0
        for path, k, j in zip(paths, ks, first_hit):
            if k > j or (k == j and k != ell):
                continue
            rv = residuals[ell - k].get(path[k], 0.0)
            if rv:
                total += mult * rv
        out[ell - 1] = base + total / n_f
    return out
