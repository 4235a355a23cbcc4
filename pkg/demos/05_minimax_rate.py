"""Recovering the risk scaling in the contamination level.

The two-point construction places mass eps at distance sigma * eps^(-1/k), the
farthest point allowed by a k-th moment budget.  Its alignment cost against a
point mass is sqrt(2 (1 - eps)) * sigma^2 * eps^(1/2 - 2/k), and since the
trimmed estimator cannot distinguish the pair from two point masses, exactly
this gap shows up as estimation error.  Sweeping eps and fitting a log-log
slope recovers the exponent 1/2 - 2/k.

Run from the repository root:  python3 demos/05_minimax_rate.py
"""

import numpy as np

from rgw import EstimatorSpec, FamilySpec, SolverConfig, SweepConfig, fit_exponent, run_sweep

eps_grid = list(np.logspace(-3, -1, 8))
estimator = EstimatorSpec("pgw", solver=SolverConfig(restarts=6, fw_gap_tol=1e-12))

print(f"{'k':>4} {'target 1/2-2/k':>15} {'fitted slope':>13} {'r^2':>7}")
for k in (4.0, 6.0, 8.0, 12.0):
    family = FamilySpec("bounded_moment_k", sigma=1.0, k=k, dim=1, member="two_atom")
    config = SweepConfig(
        family, "two_point", [estimator], eps_grid=eps_grid, trials=1, master_seed=5
    )
    records = run_sweep(config)
    fit = fit_exponent(records, "pgw")
    print(f"{k:4.0f} {0.5 - 2 / k:15.4f} {fit.exponent:13.4f} {fit.r_squared:7.4f}")

print(
    "\nThe small downward bias comes from the sqrt(1 - eps) factor in the gap;"
    "\nover eps in [1e-3, 1e-1] it shifts the slope by about -0.01."
)
