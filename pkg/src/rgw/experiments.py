"""Monte Carlo harness: risk sweeps, rate fits, convergence and metric checks.

Every record is a pure function of the master seed and its cell indices, so
sweeps rerun byte-identically, in any execution order and at any parallelism.
Measured wall times are kept in memory but serialized only on request, since
timings are the one non-reproducible field.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ._rng import derive_seed, substream
from .contamination import (
    ContaminationSpec,
    FamilySpec,
    corrupt_samples,
    mirror_blend,
    random_discrete_measure,
    sample_family,
    two_point_gap,
    two_point_pair,
)
from .estimators import EstimatorSpec, estimate
from .measures import DiscreteMeasure, MMSpace, point_mass, scale_points
from .objective import gw_to_point_from_samples, pgw_to_point
from .solvers import SolverConfig, brute_force_gw, solve_gw, solve_pgw

__all__ = [
    "SweepConfig",
    "RiskRecord",
    "SlopeFit",
    "MetricCheck",
    "MetricSuiteReport",
    "run_sweep",
    "fit_exponent",
    "convergence_study",
    "metric_suite",
    "write_records_csv",
    "write_summary_json",
]

RECORD_COLUMNS = (
    "family",
    "k",
    "sigma",
    "eps",
    "n",
    "trial",
    "estimator_kind",
    "estimate",
    "clean_gw",
    "abs_error",
    "wall_time_s",
    "seed",
)


@dataclass
class RiskRecord:
    """One Monte Carlo trial of a (family, adversary, estimator, eps, n) cell."""

    family: str
    k: float
    sigma: float
    eps: float
    n: int  # 0 means population limit
    trial: int
    estimator_kind: str
    estimate: float
    clean_gw: float
    abs_error: float
    wall_time_s: float
    seed: int


@dataclass
class SlopeFit:
    """Least-squares slope of log mean error against log contamination level."""

    exponent: float
    intercept: float
    r_squared: float
    eps_range: tuple[float, float]


@dataclass
class SweepConfig:
    """One sweep: a family, an adversary, estimators, and the (eps, n) grid.

    An empty ``n_grid`` selects the population-limit mode, which evaluates the
    estimators on exact measure constructions; otherwise n points per side are
    sampled and an eps fraction of them corrupted.
    """

    family: FamilySpec
    adversary: str
    estimators: list[EstimatorSpec]
    eps_grid: list[float]
    n_grid: list[int] = field(default_factory=list)
    trials: int = 1
    master_seed: int = 0

    def __post_init__(self):
        if not self.eps_grid:
            raise ValueError("eps_grid must be nonempty")
        if any(not 0.0 <= e <= 0.49 for e in self.eps_grid):
            raise ValueError("eps_grid values must lie in [0, 0.49]")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.estimators:
            raise ValueError("need at least one estimator")
        if self.n_grid:
            if self.adversary != "sample_replacement":
                raise ValueError("finite-sample sweeps use the sample_replacement adversary")
            if any(n < 1 for n in self.n_grid):
                raise ValueError("n_grid entries must be positive")
        else:
            if self.adversary not in ("two_point", "mirror_blend"):
                raise ValueError("population sweeps use the two_point or mirror_blend adversary")
            if self.adversary == "two_point" and any(e == 0.0 for e in self.eps_grid):
                raise ValueError("the two_point construction degenerates at eps = 0")


def _effective_trim(spec: EstimatorSpec, eps: float) -> float:
    if spec.kind != "pgw":
        return 0.0
    return min(eps * spec.trim_slack, 0.9999)


def _estimator_with(spec: EstimatorSpec, trim: float, seed: int) -> EstimatorSpec:
    solver = SolverConfig(
        trim=0.0,
        restarts=spec.solver.restarts,
        max_iters=spec.solver.max_iters,
        fw_gap_tol=spec.solver.fw_gap_tol,
        obj_rel_tol=spec.solver.obj_rel_tol,
        seed=seed,
        dummy_penalty_margin=spec.solver.dummy_penalty_margin,
        polish=spec.solver.polish,
    )
    return EstimatorSpec(
        kind=spec.kind,
        trim=trim,
        radius=spec.radius,
        trim_slack=spec.trim_slack,
        solver=solver,
    )


def _population_cell(config: SweepConfig, ei: int, eps: float, trial: int):
    fam = config.family
    records = []
    if config.adversary == "two_point":
        pair = two_point_pair(fam.sigma, fam.k, eps)
        obs_x = MMSpace.from_points(pair.observed_mu)
        obs_y = MMSpace.from_points(pair.observed_nu)
        clean = pair.gap
    else:  # mirror_blend
        rng = substream(config.master_seed, "mirror-pair", ei, trial)
        mu = random_discrete_measure(rng, 6, 2, scale=fam.sigma)
        nu = scale_points(random_discrete_measure(rng, 6, 2, scale=fam.sigma), 2.0)
        mu_t, nu_t = mirror_blend(mu, nu, eps)
        obs_x, obs_y = MMSpace.from_points(mu_t), MMSpace.from_points(nu_t)
        ref_seed = derive_seed(config.master_seed, "mirror-ref", ei, trial)
        clean = solve_gw(
            MMSpace.from_points(mu),
            MMSpace.from_points(nu),
            SolverConfig(restarts=40, seed=ref_seed),
        ).value
    for est in config.estimators:
        seed = derive_seed(config.master_seed, "estimator", ei, 0, trial, est.kind)
        spec = _estimator_with(est, _effective_trim(est, eps), seed)
        t0 = time.perf_counter()
        try:
            value = estimate(spec, obs_x, obs_y)
        except (ValueError, RuntimeError):
            value = float("nan")
        records.append(
            RiskRecord(
                family=fam.family,
                k=fam.k,
                sigma=fam.sigma,
                eps=eps,
                n=0,
                trial=trial,
                estimator_kind=est.kind,
                estimate=value,
                clean_gw=clean,
                abs_error=abs(value - clean),
                wall_time_s=time.perf_counter() - t0,
                seed=seed,
            )
        )
    return records


def _finite_cell(config: SweepConfig, ei: int, eps: float, ni: int, n: int, trial: int):
    """Sample both sides, corrupt an eps fraction of each, run the estimators.

    The second side is the one-point reference measure, so the clean cost has
    the exact closed form for the two-atom member; empirical supports are
    merged before solving (duplicates carry no geometric information).
    """
    fam = config.family
    records = []
    x_seed = derive_seed(config.master_seed, "sample-x", ei, ni, trial)
    y_seed = derive_seed(config.master_seed, "sample-y", ei, ni, trial)
    xs = sample_family(fam, n, x_seed)
    ys = np.zeros((n, fam.dim))
    if eps > 0.0:
        attack_x = ContaminationSpec(eps, "sample_replacement", {"R": 1000.0 * fam.sigma}, x_seed)
        attack_y = ContaminationSpec(eps, "sample_replacement", {"R": 1000.0 * fam.sigma}, y_seed)
        xs, _ = corrupt_samples(xs, eps, attack_x)
        ys, _ = corrupt_samples(ys, eps, attack_y)
    obs_x = MMSpace.from_points(DiscreteMeasure(xs, np.full(n, 1.0 / n)).merged())
    obs_y = MMSpace.from_points(DiscreteMeasure(ys, np.full(n, 1.0 / n)).merged())
    if fam.family == "bounded_moment_k" and fam.member == "two_atom":
        clean = two_point_gap(fam.sigma, fam.k, fam.member_eps)
    else:
        clean_x = MMSpace.from_points(
            DiscreteMeasure(sample_family(fam, n, x_seed), np.full(n, 1.0 / n)).merged()
        )
        ref_seed = derive_seed(config.master_seed, "clean-ref", ei, ni, trial)
        clean = solve_gw(
            clean_x,
            MMSpace.from_points(point_mass(np.zeros(fam.dim))),
            SolverConfig(restarts=40, seed=ref_seed),
        ).value
    for est in config.estimators:
        seed = derive_seed(config.master_seed, "estimator", ei, ni, trial, est.kind)
        spec = _estimator_with(est, _effective_trim(est, eps), seed)
        t0 = time.perf_counter()
        try:
            value = estimate(spec, obs_x, obs_y)
        except (ValueError, RuntimeError):
            value = float("nan")
        records.append(
            RiskRecord(
                family=fam.family,
                k=fam.k,
                sigma=fam.sigma,
                eps=eps,
                n=n,
                trial=trial,
                estimator_kind=est.kind,
                estimate=value,
                clean_gw=clean,
                abs_error=abs(value - clean),
                wall_time_s=time.perf_counter() - t0,
                seed=seed,
            )
        )
    return records


def run_sweep(config: SweepConfig, jobs: int = 1, on_record=None) -> list[RiskRecord]:
    """Run every (eps, n, trial) cell of the sweep and return its records.

    With ``jobs = 1`` each record is handed to ``on_record`` before the next
    trial starts, so partial output survives a crash; parallel runs hand the
    records over after the deterministic merge.  The record list is identical
    for every ``jobs`` value.
    """
    cells = []
    if config.n_grid:
        for ei, eps in enumerate(config.eps_grid):
            for ni, n in enumerate(config.n_grid):
                for trial in range(config.trials):
                    cells.append(("finite", ei, eps, ni, n, trial))
    else:
        for ei, eps in enumerate(config.eps_grid):
            for trial in range(config.trials):
                cells.append(("population", ei, eps, 0, 0, trial))

    def run_cell(cell):
        mode, ei, eps, ni, n, trial = cell
        if mode == "finite":
            return _finite_cell(config, ei, eps, ni, n, trial)
        return _population_cell(config, ei, eps, trial)

    records: list[RiskRecord] = []
    if jobs <= 1:
        for cell in cells:
            for rec in run_cell(cell):
                records.append(rec)
                if on_record is not None:
                    on_record(rec)
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for recs in pool.map(run_cell, cells):
                records.extend(recs)
        if on_record is not None:
            for rec in records:
                on_record(rec)
    return records


def fit_exponent(records: list[RiskRecord], estimator_kind: str) -> SlopeFit:
    """OLS fit of log mean |error| against log eps for one estimator."""
    by_eps: dict[float, list[float]] = {}
    for rec in records:
        if rec.estimator_kind == estimator_kind and np.isfinite(rec.abs_error):
            by_eps.setdefault(rec.eps, []).append(rec.abs_error)
    if len(by_eps) < 3:
        raise ValueError("need at least 3 distinct eps levels with records")
    eps_vals = np.array(sorted(by_eps))
    means = np.array([np.mean(by_eps[e]) for e in eps_vals])
    if np.any(eps_vals <= 0.0) or np.any(means <= 0.0):
        raise ValueError("log-log fit needs positive eps levels and positive mean errors")
    lx, ly = np.log(eps_vals), np.log(means)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    total = ly - ly.mean()
    r2 = 1.0 - float(resid @ resid) / float(total @ total) if float(total @ total) > 0 else 1.0
    return SlopeFit(
        exponent=float(slope),
        intercept=float(intercept),
        r_squared=max(0.0, min(1.0, r2)),
        eps_range=(float(eps_vals[0]), float(eps_vals[-1])),
    )


def member_fourth_moment(spec: FamilySpec) -> float:
    """Analytic E ||X - X'||^4 for the designated family member."""
    d = spec.dim
    if spec.family == "bounded_moment_k":
        if spec.member == "two_atom":
            e = spec.member_eps
            a = spec.sigma * e ** (-1.0 / spec.k)
            return 2.0 * e * (1.0 - e) * a**4
        alpha = spec.k + 0.5
        r0 = spec.sigma * (alpha / (alpha - spec.k)) ** (-1.0 / spec.k)
        m2 = alpha * r0**2 / (alpha - 2.0)
        m4 = alpha * r0**4 / (alpha - 4.0)
        return 2.0 * m4 + 2.0 * m2**2 + 4.0 * m2**2 / d
    if spec.family == "sub_gaussian":
        c2 = spec.sigma**2 * 3.0 / 8.0
        return 4.0 * c2**2 * d * (d + 2.0)
    e = spec.member_eps
    c2 = (spec.sigma * e ** (-1.0 / spec.k) / math.sqrt(spec.k)) ** 2
    return 2.0 * e * (1.0 + e) * c2**2 * d * (d + 2.0)


def convergence_study(family: FamilySpec, n_grid: list[int], trials: int, seed: int) -> list[RiskRecord]:
    """Error of the empirical one-point cost against its analytic value.

    The reference side is a point mass, so the cost is a closed form of the
    sample fourth moments and no solver noise enters; suitable for checking
    that the error trend decreases with n.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])) or not n_grid:
        raise ValueError("n_grid must be nonempty and strictly increasing")
    analytic = float(np.sqrt(member_fourth_moment(family)))
    records = []
    for ni, n in enumerate(n_grid):
        for trial in range(trials):
            s = derive_seed(seed, "convergence", ni, trial)
            t0 = time.perf_counter()
            pts = sample_family(family, n, s)
            value = gw_to_point_from_samples(pts)
            records.append(
                RiskRecord(
                    family=family.family,
                    k=family.k,
                    sigma=family.sigma,
                    eps=0.0,
                    n=n,
                    trial=trial,
                    estimator_kind="point_plugin",
                    estimate=value,
                    clean_gw=analytic,
                    abs_error=abs(value - analytic),
                    wall_time_s=time.perf_counter() - t0,
                    seed=s,
                )
            )
    return records


@dataclass
class MetricCheck:
    name: str
    passed: bool
    details: dict


@dataclass
class MetricSuiteReport:
    checks: list[MetricCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> str:
        return json.dumps(
            {"passed": self.passed, "checks": [asdict(c) for c in self.checks]},
            indent=2,
            sort_keys=True,
        )


def metric_suite(seed: int) -> MetricSuiteReport:
    """Structural checks of the trimmed alignment cost on solvable instances.

    Covers symmetry of the solve, nullity under isometries plus small mass
    perturbations, the relaxed triangle inequality with added trim levels on
    oracle-verifiable triples, and the three-space counterexample showing the
    plain triangle inequality genuinely fails.
    """
    from .contamination import far_outlier  # local import avoids cycle at module load
    from .measures import apply_isometry, random_rotation

    checks = []

    # (a) symmetry of the solve value in its two arguments
    rng = substream(seed, "metric-symmetry")
    worst = 0.0
    for i in range(5):
        a = MMSpace.from_points(random_discrete_measure(rng, 6, 2))
        b = MMSpace.from_points(random_discrete_measure(rng, 6, 2))
        cfg = SolverConfig(trim=0.1, restarts=16, seed=derive_seed(seed, "sym", i))
        fwd = solve_pgw(a, b, cfg)
        bwd = solve_pgw(b, a, cfg, extra_inits=[fwd.coupling.mass.T])
        fwd2 = solve_pgw(a, b, cfg, extra_inits=[bwd.coupling.mass.T])
        worst = max(worst, abs(fwd2.value - bwd.value))
    checks.append(MetricCheck("symmetry", worst <= 1e-6, {"max_asymmetry": worst}))

    # (b) nullity under isometry plus a TV-eps perturbation
    rng = substream(seed, "metric-nullity")
    worst = 0.0
    for i in range(4):
        mu = random_discrete_measure(rng, 8, 3)
        iso = apply_isometry(mu, random_rotation(3, rng), rng.standard_normal(3))
        pert = far_outlier(iso, 0.1, 25.0, derive_seed(seed, "nullity", i))
        val = solve_pgw(
            MMSpace.from_points(mu),
            MMSpace.from_points(pert),
            SolverConfig(trim=0.1, restarts=12, fw_gap_tol=1e-12, seed=derive_seed(seed, "nul", i)),
        ).value
        worst = max(worst, val)
    checks.append(MetricCheck("isometry_nullity", worst <= 1e-6, {"max_value": worst}))

    # (c) relaxed triangle inequality on oracle-verifiable triples
    rng = substream(seed, "metric-triangle")
    worst_slack = np.inf
    for i in range(6):
        mu = MMSpace.from_points(random_discrete_measure(rng, 3, 1))
        kappa = MMSpace.from_points(random_discrete_measure(rng, 3, 1))
        nu = MMSpace.from_points(random_discrete_measure(rng, 3, 1))
        for e1 in (0.0, 0.05):
            for e2 in (0.0, 0.05):
                lhs = brute_force_gw(mu, nu, e1 + e2)
                rhs = brute_force_gw(mu, kappa, e1) + brute_force_gw(kappa, nu, e2)
                worst_slack = min(worst_slack, rhs - lhs)
    checks.append(
        MetricCheck("relaxed_triangle", worst_slack >= -1e-4, {"min_slack": worst_slack})
    )

    # (d) the counterexample triple: zero legs but a separated endpoint pair
    mu = MMSpace.from_points(point_mass([0.0]))
    nu = MMSpace.from_points(DiscreteMeasure([[0.0], [1.0]], [0.9, 0.1]))
    kap = MMSpace.from_points(DiscreteMeasure([[0.0], [1.0], [2.0]], [0.8, 0.1, 0.1]))
    cfg = SolverConfig(trim=0.1, restarts=12, fw_gap_tol=1e-12, seed=derive_seed(seed, "cex"))
    v1 = solve_pgw(mu, nu, cfg).value
    v2 = solve_pgw(nu, kap, cfg).value
    v3 = solve_pgw(mu, kap, cfg).value
    oracle = pgw_to_point(kap, 0.1)
    ok = v1 <= 1e-6 and v2 <= 1e-6 and v3 >= 0.4 - 1e-3 and abs(v3 - oracle) <= 1e-3
    checks.append(
        MetricCheck(
            "triangle_counterexample",
            ok,
            {"leg_mu_nu": v1, "leg_nu_kappa": v2, "endpoint_mu_kappa": v3, "oracle": oracle},
        )
    )
    return MetricSuiteReport(checks)


def _format_float(x: float) -> str:
    return repr(float(x))


def write_records_csv(records: list[RiskRecord], path, timing: bool = False) -> None:
    """Write records with the canonical column order; shortest-round-trip floats.

    Wall times are the one field that cannot rerun identically, so they are
    serialized as ``nan`` unless ``timing`` is requested.
    """
    lines = [",".join(RECORD_COLUMNS)]
    for rec in records:
        row = [
            rec.family,
            _format_float(rec.k),
            _format_float(rec.sigma),
            _format_float(rec.eps),
            str(rec.n),
            str(rec.trial),
            rec.estimator_kind,
            _format_float(rec.estimate),
            _format_float(rec.clean_gw),
            _format_float(rec.abs_error),
            _format_float(rec.wall_time_s) if timing else "nan",
            str(rec.seed),
        ]
        lines.append(",".join(row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_summary_json(records: list[RiskRecord], path, fits: dict[str, SlopeFit] | None = None, timing: bool = False) -> None:
    """Per-cell means and standard errors, plus any slope fits."""
    cells: dict[tuple, list[RiskRecord]] = {}
    for rec in records:
        key = (rec.family, rec.k, rec.sigma, rec.eps, rec.n, rec.estimator_kind)
        cells.setdefault(key, []).append(rec)
    cell_rows = []
    for key in sorted(cells):
        errs = np.array([r.abs_error for r in cells[key]], dtype=float)
        finite = errs[np.isfinite(errs)]
        row = {
            "family": key[0],
            "k": key[1],
            "sigma": key[2],
            "eps": key[3],
            "n": key[4],
            "estimator_kind": key[5],
            "trials": len(cells[key]),
            "mean_abs_error": float(finite.mean()) if finite.size else None,
            "stderr_abs_error": (
                float(finite.std(ddof=1) / math.sqrt(finite.size)) if finite.size > 1 else 0.0
            ),
        }
        if timing:
            row["mean_wall_time_s"] = float(np.mean([r.wall_time_s for r in cells[key]]))
        cell_rows.append(row)
    doc = {"cells": cell_rows}
    if fits:
        doc["slope_fits"] = {kind: asdict(fit) for kind, fit in fits.items()}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
