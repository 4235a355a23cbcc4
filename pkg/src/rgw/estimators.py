"""Robust estimators of the alignment cost from contaminated observations.

Three estimators are provided: the plug-in (solve on the observations as
given), the trimmed estimator (partial alignment that discards a mass
fraction per side), and a minimum-distance estimator for bounded-support
priors (drop all mass outside a radius around a robust center, renormalize,
then solve).  Resilience quantities bound how far a measure can move, in
alignment cost, under bounded mass deletion.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._rng import substream
from .measures import DiscreteMeasure, MMSpace, normalize
from .solvers import SolverConfig, solve_gw, solve_pgw

__all__ = [
    "EstimatorSpec",
    "ResilienceQuery",
    "estimate",
    "resilience_bound",
    "resilience_search",
    "sandwich_bound",
]

_KINDS = ("pgw", "plugin_gw", "tv_projection")


@dataclass
class EstimatorSpec:
    """Which estimator to run and with what solver configuration.

    ``trim`` is the per-side discarded mass fraction for the trimmed
    estimator; guarantees require trim < 1/3, but larger values are accepted
    so breakdown behaviour can be studied.  ``trim_slack`` multiplies the
    contamination level when sweeps set the trim adaptively.
    """

    kind: str
    trim: float = 0.0
    radius: float = 1.0
    trim_slack: float = 1.0
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown estimator kind {self.kind!r}")
        if not 0.0 <= self.trim < 1.0:
            raise ValueError("trim must lie in [0, 1)")
        if self.kind == "tv_projection" and self.radius <= 0:
            raise ValueError("tv_projection needs a positive radius")
        if self.trim_slack <= 0:
            raise ValueError("trim_slack must be positive")


@dataclass
class ResilienceQuery:
    measure: MMSpace
    eps: float

    def __post_init__(self):
        if not 0.0 <= self.eps < 1.0:
            raise ValueError("deletion fraction must lie in [0, 1)")


def estimate(spec: EstimatorSpec, mu_obs: MMSpace, nu_obs: MMSpace) -> float:
    """Run the estimator on an observed pair and return the estimated cost."""
    cfg = spec.solver
    if spec.kind == "pgw":
        trimmed_cfg = _with_trim(cfg, spec.trim)
        return solve_pgw(mu_obs, nu_obs, trimmed_cfg).value
    if spec.kind == "plugin_gw":
        return solve_gw(mu_obs, nu_obs, cfg).value
    mu_proj = _project_bounded_support(mu_obs, spec.radius)
    nu_proj = _project_bounded_support(nu_obs, spec.radius)
    return solve_gw(mu_proj, nu_proj, cfg).value


def _with_trim(cfg: SolverConfig, trim: float) -> SolverConfig:
    return SolverConfig(
        trim=trim,
        restarts=cfg.restarts,
        max_iters=cfg.max_iters,
        fw_gap_tol=cfg.fw_gap_tol,
        obj_rel_tol=cfg.obj_rel_tol,
        seed=cfg.seed,
        dummy_penalty_margin=cfg.dummy_penalty_margin,
        polish=cfg.polish,
    )


def weighted_median_center(points: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Coordinatewise weighted median; unmoved by any < 1/2 mass of outliers."""
    total = weights.sum()
    center = np.empty(points.shape[1])
    for c in range(points.shape[1]):
        order = np.argsort(points[:, c])
        cum = np.cumsum(weights[order])
        center[c] = points[order[np.searchsorted(cum, 0.5 * total)], c]
    return center


def _project_bounded_support(space: MMSpace, radius: float) -> MMSpace:
    """Drop all mass farther than ``radius`` from a robust center, renormalize.

    For the bounded-support prior this *is* the closest in-family measure in
    total variation: the projection distance equals the removed mass.  The
    center is a weighted coordinatewise median (a grouped-means center
    degenerates on small weighted supports, where two groups reduce it to a
    midpoint that one far atom can drag away).
    """
    meas = space.measure
    center = weighted_median_center(meas.points, meas.weights)
    dist = np.linalg.norm(meas.points - center, axis=1)
    keep = dist <= radius
    if not np.any(keep):
        raise ValueError("tv_projection removed all mass; increase the radius")
    kept = DiscreteMeasure(meas.points[keep], meas.weights[keep])
    return MMSpace.from_points(normalize(kept))


def resilience_bound(sigma: float, k: float, eps: float) -> float:
    """Rate envelope sigma^2 * eps^(1/2 - 2/k) with unit constant.

    The constant in front of the rate is not pinned down, so this reports the
    envelope with C = 1; treat comparisons against it as constant-free
    diagnostics, not certified bounds.  Zero at eps = 0 by convention.
    """
    if k < 4:
        raise ValueError("moment order k must be at least 4")
    if not 0.0 <= eps <= 0.99:
        raise ValueError("eps must lie in [0, 0.99]")
    if eps == 0.0:
        return 0.0
    return sigma**2 * eps ** (0.5 - 2.0 / k)


def resilience_search(query: ResilienceQuery, restarts: int, seed: int) -> float:
    """Lower bound on the resilience of a measure by explicit deletion search.

    Candidates are renormalized restrictions mu' <= mu / (1 - eps): a
    deterministic greedy deletion of the mass farthest from the weighted
    mean, plus ``restarts`` random deletion orders; each candidate is scored
    by solving the alignment against the original measure.  Monotone
    nondecreasing in ``restarts`` (candidates accumulate).
    """
    space = query.measure
    if space.size > 30:
        raise ValueError("support too large for resilience search (> 30 atoms)")
    eps = query.eps
    if eps == 0.0:
        return 0.0
    meas = space.measure
    if not meas.is_probability:
        raise ValueError("resilience is defined for probability measures")
    p = meas.weights
    center = p @ meas.points
    dist = np.linalg.norm(meas.points - center, axis=1)
    orders = [np.argsort(-dist)]
    for r in range(restarts):
        orders.append(substream(seed, "resilience-order", r).permutation(p.size))
    best = 0.0
    cfg = SolverConfig(restarts=6, seed=seed)
    for order in orders:
        deleted = np.zeros_like(p)
        budget = eps
        for i in order:
            take = min(p[i], budget)
            deleted[i] = take
            budget -= take
            if budget <= 1e-15:
                break
        kept = p - deleted
        keep = kept > 1e-15
        mu_prime = MMSpace.from_points(
            normalize(DiscreteMeasure(meas.points[keep], kept[keep]))
        )
        best = max(best, solve_gw(mu_prime, space, cfg).value)
    return best


def sandwich_bound(gw_clean, pgw_observed, sampling_errs, resiliences, eps):
    """Interval that the clean cost must inhabit around the trimmed estimate.

    The radius adds the two sampling errors, the two resilience terms at
    deletion level 3*eps, and the multiplicative 3*eps correction; the
    estimate obeys |clean - observed| <= radius whenever the inputs are valid
    bounds.  Only valid for eps < 1/3.
    """
    if not 0.0 <= eps < 1.0 / 3.0:
        raise ValueError("the sandwich bound requires eps < 1/3")
    err_mu, err_nu = sampling_errs
    rho_mu, rho_nu = resiliences
    radius = err_mu + err_nu + rho_mu + rho_nu + 3.0 * eps * gw_clean
    return (pgw_observed - radius, pgw_observed + radius)
