"""Structural properties of the trimmed alignment cost.

The trimmed cost is symmetric and nullifies exactly on isometric pairs up to
the trim budget, but it is not a metric: the plain triangle inequality fails.
Adding the trim levels repairs it.  The failure is witnessed by three measures
on the line where both legs are zero while the endpoints stay 0.4 apart.

Run from the repository root:  python3 demos/06_metric_structure.py
"""

from rgw import (
    DiscreteMeasure,
    MMSpace,
    SolverConfig,
    brute_force_gw,
    metric_suite,
    point_mass,
    solve_pgw,
)

# The counterexample triple at trim 0.1.
mu = MMSpace.from_points(point_mass([0.0]))
nu = MMSpace.from_points(DiscreteMeasure([[0.0], [1.0]], [0.9, 0.1]))
kappa = MMSpace.from_points(DiscreteMeasure([[0.0], [1.0], [2.0]], [0.8, 0.1, 0.1]))
cfg = SolverConfig(trim=0.1, restarts=10, fw_gap_tol=1e-12, seed=0)
print("leg  mu -> nu   :", solve_pgw(mu, nu, cfg).value)
print("leg  nu -> kappa:", solve_pgw(nu, kappa, cfg).value)
print("end  mu -> kappa:", solve_pgw(mu, kappa, cfg).value, " (both legs are zero!)")

# With added trim levels the inequality holds:  cost at trim e1+e2 between the
# endpoints is below the sum of the legs at trims e1 and e2.
for e1, e2 in ((0.0, 0.1), (0.05, 0.05), (0.1, 0.1)):
    lhs = brute_force_gw(mu, kappa, e1 + e2)
    rhs = brute_force_gw(mu, nu, e1) + brute_force_gw(nu, kappa, e2)
    print(f"trim ({e1}, {e2}): endpoint {lhs:.4f} <= legs {rhs:.4f}")

# The bundled property suite checks symmetry, nullity, the relaxed triangle
# inequality and this counterexample in one deterministic run.
report = metric_suite(seed=0)
print("\nmetric suite:")
for check in report.checks:
    print(f"  [{'ok' if check.passed else 'FAIL'}] {check.name}")
print("all passed:", report.passed)
