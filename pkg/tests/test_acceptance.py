"""Acceptance suite: every top-level guarantee, at its stated tolerance.

Each test prints a final pass/fail line through the conftest reporter; run

    pytest tests/test_acceptance.py -q

to see the twelve lines in the terminal summary.
"""

import json
import time

import numpy as np

from rgw import cli
from rgw.contamination import FamilySpec, far_outlier, mirror_blend, two_point_pair
from rgw.estimators import EstimatorSpec
from rgw.experiments import (
    SweepConfig,
    convergence_study,
    fit_exponent,
    run_sweep,
    write_records_csv,
)
from rgw.measures import (
    DiscreteMeasure,
    MMSpace,
    apply_isometry,
    point_mass,
    random_rotation,
    save_measure,
    scale_points,
)
from rgw.objective import _decomp_quad, gw_to_point, pgw_to_point
from rgw.solvers import SolverConfig, brute_force_gw, solve_gw, solve_pgw

from conftest import record_acceptance


def _space(points, weights):
    return MMSpace.from_points(DiscreteMeasure(points, weights))


def _rand_prob_measure(rng, max_atoms, dim, scale=1.0):
    n = int(rng.integers(2, max_atoms + 1))
    w = rng.random(n) + 0.05
    return DiscreteMeasure(rng.standard_normal((n, dim)) * scale, w / w.sum())


def _cli_json(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr().out
    assert code == 0, f"command {argv} exited {code}"
    return json.loads(out)


def test_criterion_01_nullity_isometry(tmp_path, capsys):
    """Trimmed cost nullifies between a measure and its perturbed isometric copy."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for trial in range(20):
        eps = (0.05, 0.1)[trial % 2]
        dim = int(rng.integers(1, 6))
        mu = _rand_prob_measure(rng, 15, dim, scale=float(rng.uniform(0.5, 3.0)))
        moved = apply_isometry(mu, random_rotation(dim, rng), rng.standard_normal(dim))
        perturbed = far_outlier(moved, eps, R=40.0, direction_seed=trial)
        f_mu, f_nu = tmp_path / f"mu{trial}.json", tmp_path / f"nu{trial}.json"
        save_measure(mu, f_mu)
        save_measure(perturbed, f_nu)
        doc = _cli_json(
            ["pgw", str(f_mu), str(f_nu), "--eps", str(eps), "--tol", "1e-12", "--seed", "7"],
            capsys,
        )
        worst = max(worst, doc["value"])
    elapsed = time.perf_counter() - t0
    record_acceptance(
        "1 nullity under isometry + TV-eps", worst <= 1e-6, f"max value {worst:.2e}", elapsed
    )
    assert worst <= 1e-6


def test_criterion_02_counterexample_triple():
    """Zero legs but a separated endpoint pair: the plain triangle bound fails."""
    t0 = time.perf_counter()
    mu = MMSpace.from_points(point_mass([0.0]))
    nu = _space([[0.0], [1.0]], [0.9, 0.1])
    kap = _space([[0.0], [1.0], [2.0]], [0.8, 0.1, 0.1])
    cfg = SolverConfig(trim=0.1, restarts=10, fw_gap_tol=1e-12, seed=2)
    v1 = solve_pgw(mu, nu, cfg).value
    v2 = solve_pgw(nu, kap, cfg).value
    v3 = solve_pgw(mu, kap, cfg).value
    oracle = pgw_to_point(kap, 0.1)
    ok = v1 <= 1e-6 and v2 <= 1e-6 and v3 >= 0.399 and abs(v3 - oracle) <= 1e-3
    record_acceptance(
        "2 counterexample triple",
        ok,
        f"values ({v1:.1e}, {v2:.1e}, {v3:.6f}), oracle {oracle:.6f}",
        time.perf_counter() - t0,
    )
    assert v1 <= 1e-6 and v2 <= 1e-6
    assert v3 >= 0.399
    assert abs(v3 - oracle) <= 1e-3


def _two_point_family():
    return FamilySpec("bounded_moment_k", sigma=1.0, k=8.0, dim=1, member="two_atom")


def test_criterion_03_two_point_exactness():
    """Trimmed estimate nullifies and the plug-in hits the closed form exactly."""
    t0 = time.perf_counter()
    worst_pgw, worst_plugin, worst_risk = 0.0, 0.0, 0.0
    for eps in (0.01, 0.02, 0.05, 0.1):
        pair = two_point_pair(1.0, 8.0, eps)
        x, y = MMSpace.from_points(pair.mu1), MMSpace.from_points(pair.nu)
        closed = np.sqrt(2 * (1 - eps)) * eps**0.25
        pgw_val = solve_pgw(x, y, SolverConfig(trim=eps, restarts=8, fw_gap_tol=1e-12, seed=3)).value
        plugin_val = solve_gw(x, y, SolverConfig(restarts=8, seed=3)).value
        worst_pgw = max(worst_pgw, pgw_val)
        worst_plugin = max(worst_plugin, abs(plugin_val - closed))
        config = SweepConfig(
            _two_point_family(),
            "two_point",
            [EstimatorSpec("pgw", solver=SolverConfig(restarts=8, fw_gap_tol=1e-12))],
            eps_grid=[eps],
            trials=1,
            master_seed=3,
        )
        (rec,) = run_sweep(config)
        worst_risk = max(worst_risk, abs(rec.abs_error - pair.gap))
    ok = worst_pgw <= 1e-6 and worst_plugin <= 1e-6 and worst_risk <= 1e-6
    record_acceptance(
        "3 two-point exactness",
        ok,
        f"max pgw {worst_pgw:.1e}, plugin dev {worst_plugin:.1e}, risk dev {worst_risk:.1e}",
        time.perf_counter() - t0,
    )
    assert worst_pgw <= 1e-6
    assert worst_plugin <= 1e-6
    assert worst_risk <= 1e-6


def test_criterion_04_rate_recovery():
    """Log-log slope of the construction risk matches 1/2 - 2/k within 0.03."""
    t0 = time.perf_counter()
    eps_grid = list(np.logspace(-3, -1, 8))
    devs = {}
    for k in (4.0, 6.0, 8.0, 12.0):
        family = FamilySpec("bounded_moment_k", sigma=1.0, k=k, dim=1, member="two_atom")
        config = SweepConfig(
            family,
            "two_point",
            [EstimatorSpec("pgw", solver=SolverConfig(restarts=6, fw_gap_tol=1e-12))],
            eps_grid=eps_grid,
            trials=1,
            master_seed=4,
        )
        fit = fit_exponent(run_sweep(config), "pgw")
        devs[k] = abs(fit.exponent - (0.5 - 2.0 / k))
    ok = all(d <= 0.03 for d in devs.values())
    record_acceptance(
        "4 rate recovery over k",
        ok,
        "slope deviations " + ", ".join(f"k={k:g}: {d:.4f}" for k, d in devs.items()),
        time.perf_counter() - t0,
    )
    assert ok, devs


def _breakdown_pairs(rng, count):
    """Pairs whose clean cost certifiably exceeds 0.1 (one-point cost gap)."""
    pairs = []
    while len(pairs) < count:
        mu = _rand_prob_measure(rng, 5, 2)
        base = gw_to_point(MMSpace.from_points(mu))
        if base < 0.05:
            continue
        c = np.sqrt(1.0 + 0.15 / base)  # (c^2 - 1) * base = 0.15 > 0.1
        pairs.append((mu, scale_points(mu, c)))
    return pairs


def test_criterion_05_breakdown(tmp_path, capsys):
    """At trim 1/3 + a bit, cross-blended pairs are indistinguishable from equal."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(105)
    worst = 0.0
    for i, (mu, nu) in enumerate(_breakdown_pairs(rng, 10)):
        mu_t, nu_t = mirror_blend(mu, nu, 0.34)
        f_mu, f_nu = tmp_path / f"bd_mu{i}.json", tmp_path / f"bd_nu{i}.json"
        save_measure(mu_t, f_mu)
        save_measure(nu_t, f_nu)
        doc = _cli_json(
            ["pgw", str(f_mu), str(f_nu), "--eps", "0.34", "--tol", "1e-12", "--seed", "5"],
            capsys,
        )
        worst = max(worst, doc["value"])
    record_acceptance(
        "5 breakdown at trim 0.34", worst <= 1e-6, f"max value {worst:.2e}", time.perf_counter() - t0
    )
    assert worst <= 1e-6


def _triangle_triples(rng, count):
    """Triples of small spaces (pairwise coupling size <= 9) for oracle checks."""
    triples = []
    pair = two_point_pair(1.0, 8.0, 0.1)
    triples.append(
        (
            MMSpace.from_points(pair.mu1),
            MMSpace.from_points(point_mass([0.0])),
            MMSpace.from_points(point_mass([0.0])),
        )
    )
    while len(triples) < count:
        dim = int(rng.integers(1, 3))
        spaces = [
            MMSpace.from_points(_rand_prob_measure(rng, 3, dim, scale=float(rng.uniform(0.5, 2.0))))
            for _ in range(3)
        ]
        triples.append(tuple(spaces))
    return triples


def test_criterion_06_relaxed_triangle():
    """Adding the trim levels restores the triangle inequality within 1e-4."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(106)
    levels = (0.0, 0.05, 0.1)
    min_slack = np.inf
    for mu, kap, nu in _triangle_triples(rng, 50):
        leg_mk = {e: brute_force_gw(mu, kap, e) for e in levels}
        leg_kn = {e: brute_force_gw(kap, nu, e) for e in levels}
        ends = {s: brute_force_gw(mu, nu, s) for s in sorted({a + b for a in levels for b in levels})}
        for e1 in levels:
            for e2 in levels:
                slack = leg_mk[e1] + leg_kn[e2] - ends[e1 + e2]
                min_slack = min(min_slack, slack)
    record_acceptance(
        "6 relaxed triangle inequality",
        min_slack >= -1e-4,
        f"min slack {min_slack:.2e} over 50 triples x 9 level pairs",
        time.perf_counter() - t0,
    )
    assert min_slack >= -1e-4


def _sized_space(rng, n, dim):
    w = rng.random(n) + 0.05
    return _space(rng.standard_normal((n, dim)), w / w.sum())


def test_criterion_07_oracle_equivalence():
    """Best-of-20-restarts descent sits in [-1e-6, +1e-3] of the enumeration oracle."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(107)
    shapes = [(2, 2), (2, 3), (3, 3), (2, 4), (1, 6), (3, 2), (4, 2), (1, 9), (2, 2), (3, 3)]
    low, high = 0.0, 0.0
    for trial in range(30):
        m, n = shapes[trial % len(shapes)]
        dim = int(rng.integers(1, 4))
        x = _sized_space(rng, m, dim)
        y = _sized_space(rng, n, dim)
        for trim in (0.0, 0.1):
            oracle = brute_force_gw(x, y, trim, grid=40)
            value = solve_pgw(x, y, SolverConfig(trim=trim, restarts=20, seed=7)).value
            low = max(low, oracle - value)
            high = max(high, value - oracle)
    ok = low <= 1e-6 and high <= 1e-3
    record_acceptance(
        "7 oracle equivalence band",
        ok,
        f"max below {low:.1e}, max above {high:.1e}",
        time.perf_counter() - t0,
    )
    assert low <= 1e-6
    assert high <= 1e-3


def test_criterion_08_gradient_correctness():
    """Analytic gradient of the squared objective against central differences."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(108)
    h = 1e-6
    worst = 0.0
    for _ in range(30):
        m, n = (int(v) for v in rng.integers(2, 6, size=2))
        x = MMSpace.from_points(_rand_prob_measure(rng, m, 2))
        y = MMSpace.from_points(_rand_prob_measure(rng, n, 2))
        m, n = x.size, y.size
        pi = np.outer(x.weights, y.weights)
        a_mat, b_mat = x.cost * x.cost, y.cost * y.cost
        grad = 2.0 * ((a_mat @ pi.sum(1))[:, None] + (b_mat @ pi.sum(0))[None, :] - 2.0 * x.cost @ pi @ y.cost)
        for i in range(m):
            for j in range(n):
                up, dn = pi.copy(), pi.copy()
                up[i, j] += h
                dn[i, j] -= h
                fd = (_decomp_quad(x.cost, y.cost, up, up) - _decomp_quad(x.cost, y.cost, dn, dn)) / (2 * h)
                worst = max(worst, abs(fd - grad[i, j]) / max(1.0, abs(grad[i, j]), abs(fd)))
    record_acceptance(
        "8 gradient vs finite differences", worst <= 1e-5, f"max rel err {worst:.2e}",
        time.perf_counter() - t0,
    )
    assert worst <= 1e-5


def test_criterion_09_invariances():
    """Isometry invariance, exact quadratic scale covariance, and symmetry."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(109)
    worst_iso, worst_scale, worst_sym = 0.0, 0.0, 0.0
    for trial in range(5):
        dim = int(rng.integers(2, 4))
        mu = _rand_prob_measure(rng, 6, dim)
        nu = _rand_prob_measure(rng, 7, dim)
        x, y = MMSpace.from_points(mu), MMSpace.from_points(nu)
        cfg = SolverConfig(trim=0.05, restarts=12, seed=9)
        base = solve_pgw(x, y, cfg)

        moved = apply_isometry(nu, random_rotation(dim, rng), rng.standard_normal(dim))
        v_iso = solve_pgw(x, MMSpace.from_points(moved), cfg).value
        worst_iso = max(worst_iso, abs(v_iso - base.value))

        for c in (0.1, 3.0):
            xs = MMSpace.from_points(scale_points(mu, c))
            ys = MMSpace.from_points(scale_points(nu, c))
            v_scaled = solve_pgw(xs, ys, cfg).value
            worst_scale = max(worst_scale, abs(v_scaled - c * c * base.value) / max(c * c * base.value, 1e-12))

        bwd = solve_pgw(y, x, cfg, extra_inits=[base.coupling.mass.T])
        fwd = solve_pgw(x, y, cfg, extra_inits=[bwd.coupling.mass.T])
        worst_sym = max(worst_sym, abs(fwd.value - bwd.value))
    ok = worst_iso <= 1e-6 and worst_scale <= 1e-6 and worst_sym <= 1e-6
    record_acceptance(
        "9 invariances (isometry/scale/symmetry)",
        ok,
        f"iso {worst_iso:.1e}, scale rel {worst_scale:.1e}, sym {worst_sym:.1e}",
        time.perf_counter() - t0,
    )
    assert worst_iso <= 1e-6
    assert worst_scale <= 1e-6
    assert worst_sym <= 1e-6


def test_criterion_10_finite_sample_structure():
    """Corrupted finite-sample error splits into population plus sampling terms."""
    t0 = time.perf_counter()
    family = FamilySpec(
        "bounded_moment_k", sigma=1.0, k=8.0, dim=1, member="two_atom", member_eps=0.05
    )
    pgw = EstimatorSpec("pgw", solver=SolverConfig(restarts=6, fw_gap_tol=1e-12))
    pop = run_sweep(
        SweepConfig(family, "two_point", [pgw], eps_grid=[0.05], trials=1, master_seed=10)
    )
    pop_err = {0.0: 0.0, 0.05: pop[0].abs_error}
    records = run_sweep(
        SweepConfig(
            family,
            "sample_replacement",
            [pgw],
            eps_grid=[0.0, 0.05],
            n_grid=[100, 400, 1600],
            trials=100,
            master_seed=10,
        )
    )
    mean_err = {}
    for rec in records:
        mean_err.setdefault((rec.eps, rec.n), []).append(rec.abs_error)
    mean_err = {key: float(np.mean(v)) for key, v in mean_err.items()}
    checks = []
    for n in (100, 400, 1600):
        clean_term = mean_err[(0.0, n)]
        for eps in (0.0, 0.05):
            lhs = mean_err[(eps, n)]
            rhs = pop_err[eps] + 3.0 * clean_term
            checks.append((eps, n, lhs, rhs, lhs <= rhs))
    ok = all(c[-1] for c in checks)
    detail = "; ".join(f"(eps={e:g}, n={n}): {l:.4f} <= {r:.4f}" for e, n, l, r, _ in checks)
    record_acceptance("10 finite-sample structure", ok, detail, time.perf_counter() - t0)
    assert ok, checks


def test_criterion_11_empirical_convergence_trend():
    """One-point cost error strictly decreases from n=100 to n=10000."""
    t0 = time.perf_counter()
    family = FamilySpec(
        "bounded_moment_k", sigma=1.0, k=8.0, dim=1, member="two_atom", member_eps=0.1
    )
    records = convergence_study(family, [100, 10_000], trials=200, seed=11)
    errs = {n: np.array([r.abs_error for r in records if r.n == n]) for n in (100, 10_000)}
    m100, m10k = errs[100].mean(), errs[10_000].mean()
    se = np.sqrt(
        errs[100].var(ddof=1) / errs[100].size + errs[10_000].var(ddof=1) / errs[10_000].size
    )
    ok = m100 - m10k > 3.0 * se
    record_acceptance(
        "11 empirical convergence trend",
        ok,
        f"mean err {m100:.4f} (n=100) -> {m10k:.4f} (n=10000), 3 se = {3 * se:.4f}",
        time.perf_counter() - t0,
    )
    assert ok


def test_criterion_12_determinism(tmp_path, capsys):
    """Reruns of the sweep-based criteria produce byte-identical CSVs at any job count."""
    t0 = time.perf_counter()
    # criterion-3/4 style sweep (two-point construction risk over an eps grid)
    sweep_doc = {
        "family": {"family": "bounded_moment_k", "sigma": 1.0, "k": 8.0, "dim": 1, "member": "two_atom"},
        "adversary": "two_point",
        "estimators": [{"kind": "pgw", "solver": {"restarts": 6, "fw_gap_tol": 1e-12}}],
        "eps_grid": [0.01, 0.02, 0.05, 0.1],
        "trials": 2,
        "seed": 12,
    }
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps(sweep_doc))
    outs = []
    for tag, jobs in (("a", 1), ("b", 1), ("c", 3)):
        out = tmp_path / f"sweep_{tag}.csv"
        code = cli.main(["risk-sweep", str(cfg), "--out", str(out), "--jobs", str(jobs)])
        capsys.readouterr()
        assert code == 0
        outs.append(out.read_bytes())
    sweeps_ok = outs[0] == outs[1] == outs[2]

    # criterion-5 style sweep (mirror blend at the breakdown level)
    breakdown = SweepConfig(
        _two_point_family(),
        "mirror_blend",
        [EstimatorSpec("pgw", solver=SolverConfig(restarts=6, fw_gap_tol=1e-12))],
        eps_grid=[0.34],
        trials=4,
        master_seed=12,
    )
    paths = []
    for tag, jobs in (("x", 1), ("y", 4)):
        path = tmp_path / f"breakdown_{tag}.csv"
        write_records_csv(run_sweep(breakdown, jobs=jobs), path)
        paths.append(path.read_bytes())
    breakdown_ok = paths[0] == paths[1]

    ok = sweeps_ok and breakdown_ok
    record_acceptance(
        "12 determinism (reruns and --jobs)",
        ok,
        f"two-point sweep byte-identical: {sweeps_ok}; breakdown sweep: {breakdown_ok}",
        time.perf_counter() - t0,
    )
    assert ok
