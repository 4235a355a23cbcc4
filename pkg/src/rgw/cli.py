"""Command-line interface.

Commands: ``gw``, ``pgw``, ``contaminate``, ``risk-sweep``, ``metric-suite``,
``convergence``.  Exit codes: 0 success, 1 property failure, 2 usage or input
error, 3 numerical failure.  All randomness flows from one seed (flag, then
config file, then the RGW_SEED environment variable, then 0) through named
substreams, so reruns are byte-identical; wall-clock timings are printed only
with ``--timing`` for the same reason.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .contamination import ContaminationSpec, FamilySpec, corrupt_samples, far_outlier, mirror_blend
from .estimators import EstimatorSpec
from .experiments import (
    SweepConfig,
    convergence_study,
    fit_exponent,
    metric_suite,
    run_sweep,
    write_records_csv,
    write_summary_json,
)
from .measures import DiscreteMeasure, MMSpace, load_measure, save_measure, tv_distance
from .solvers import SolverConfig, solve_pgw

EXIT_OK = 0
EXIT_PROPERTY = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3


class SchemaError(ValueError):
    pass


def _resolve_seed(flag_seed, config_seed=None) -> int:
    if flag_seed is not None:
        return int(flag_seed)
    if config_seed is not None:
        return int(config_seed)
    env = os.environ.get("RGW_SEED")
    if env is not None:
        return int(env)
    return 0


def _load_space(path: str) -> MMSpace:
    return MMSpace.from_points(load_measure(path))


def _solve_command(args, trim: float) -> int:
    try:
        x = _load_space(args.mu)
        y = _load_space(args.nu)
        cfg = SolverConfig(
            trim=trim,
            restarts=args.restarts,
            fw_gap_tol=args.tol,
            seed=_resolve_seed(args.seed),
        )
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        report = solve_pgw(x, y, cfg)
    except (RuntimeError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.dump_coupling:
        doc = {"trim": trim, "mass": report.coupling.mass.tolist()}
        Path(args.dump_coupling).write_text(json.dumps(doc) + "\n")
    out = {
        "value": report.value,
        "fw_gap": report.fw_gap_final,
        "restarts": len(report.restart_values),
        "wall_time": report.wall_time if args.timing else None,
    }
    print(json.dumps(out))
    return EXIT_OK


def _cmd_gw(args) -> int:
    return _solve_command(args, trim=0.0)


def _cmd_pgw(args) -> int:
    if not 0.0 <= args.eps < 1.0:
        print("error: --eps must lie in [0, 1)", file=sys.stderr)
        return EXIT_USAGE
    return _solve_command(args, trim=args.eps)


def _cmd_contaminate(args) -> int:
    try:
        mu = load_measure(args.measure)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    seed = _resolve_seed(args.seed)
    sidecar = {"kind": args.kind, "eps": args.eps, "seed": seed}
    try:
        if args.kind == "far_outlier":
            out = far_outlier(mu, args.eps, args.radius, seed)
            sidecar["tv_budget"] = args.eps
            sidecar["tv_actual"] = tv_distance(out, mu)
            sidecar["atoms_added"] = out.size - mu.size
        elif args.kind == "mirror_blend":
            if not args.partner:
                print("error: mirror_blend needs --partner", file=sys.stderr)
                return EXIT_USAGE
            nu = load_measure(args.partner)
            out, partner_out = mirror_blend(mu, nu, args.eps)
            partner_path = args.partner_out or str(Path(args.out).with_suffix(".partner.json"))
            save_measure(partner_out, partner_path)
            sidecar["tv_budget"] = args.eps
            sidecar["tv_actual"] = tv_distance(out, mu)
            sidecar["tv_between"] = tv_distance(out, partner_out)
            sidecar["tv_between_identity"] = abs(1.0 - 2.0 * args.eps) * tv_distance(mu, nu)
            sidecar["partner_out"] = partner_path
        elif args.kind == "sample_replacement":
            spec = ContaminationSpec(args.eps, "sample_replacement", {"R": args.radius}, seed)
            pts, idx = corrupt_samples(mu.points, args.eps, spec)
            out = DiscreteMeasure(pts, mu.weights)
            sidecar["tv_budget"] = float(np.ceil(args.eps * mu.size) / mu.size)
            sidecar["tv_actual"] = tv_distance(out, mu)
            sidecar["modified_indices"] = [int(i) for i in idx]
        else:
            print(f"error: cannot apply kind {args.kind!r} to a measure file", file=sys.stderr)
            return EXIT_USAGE
    except (ValueError, AssertionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    save_measure(out, args.out)
    Path(str(args.out) + ".sidecar.json").write_text(json.dumps(sidecar, sort_keys=True) + "\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# JSON config schemas (unknown keys rejected, defaults echoed back resolved)
# --------------------------------------------------------------------------


def _check_keys(doc: dict, allowed: dict, path: str) -> None:
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: expected an object")
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise SchemaError(f"{path}: unknown key(s) {unknown}")
    for key, required in allowed.items():
        if required and key not in doc:
            raise SchemaError(f"{path}: missing required key {key!r}")


def _parse_family(doc, path="family") -> FamilySpec:
    _check_keys(
        doc,
        {"family": True, "sigma": True, "k": False, "dim": False, "member": False, "member_eps": False},
        path,
    )
    try:
        return FamilySpec(
            family=doc["family"],
            sigma=float(doc["sigma"]),
            k=float(doc.get("k", 4.0)),
            dim=int(doc.get("dim", 1)),
            member=doc.get("member", "two_atom"),
            member_eps=(None if doc.get("member_eps") is None else float(doc["member_eps"])),
        )
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def _parse_solver(doc, path="solver") -> SolverConfig:
    _check_keys(
        doc,
        {
            "restarts": False,
            "max_iters": False,
            "fw_gap_tol": False,
            "obj_rel_tol": False,
            "seed": False,
            "dummy_penalty_margin": False,
            "polish": False,
        },
        path,
    )
    try:
        return SolverConfig(
            restarts=int(doc.get("restarts", 10)),
            max_iters=int(doc.get("max_iters", 1000)),
            fw_gap_tol=float(doc.get("fw_gap_tol", 1e-8)),
            obj_rel_tol=float(doc.get("obj_rel_tol", 1e-10)),
            seed=int(doc.get("seed", 0)),
            dummy_penalty_margin=float(doc.get("dummy_penalty_margin", 1.0)),
            polish=bool(doc.get("polish", True)),
        )
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def _parse_estimator(doc, idx: int) -> EstimatorSpec:
    path = f"estimators[{idx}]"
    _check_keys(
        doc,
        {"kind": True, "trim": False, "radius": False, "trim_slack": False, "solver": False},
        path,
    )
    try:
        return EstimatorSpec(
            kind=doc["kind"],
            trim=float(doc.get("trim", 0.0)),
            radius=float(doc.get("radius", 1.0)),
            trim_slack=float(doc.get("trim_slack", 1.0)),
            solver=_parse_solver(doc.get("solver", {}), f"{path}.solver"),
        )
    except SchemaError:
        raise
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SchemaError(str(exc)) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _estimator_doc(spec: EstimatorSpec) -> dict:
    doc = asdict(spec)
    doc["solver"].pop("trim")  # the sweep owns the trim level, not the solver
    return doc


def _resolved_sweep_doc(config: SweepConfig, out_path: str) -> dict:
    return {
        "family": asdict(config.family),
        "adversary": config.adversary,
        "estimators": [_estimator_doc(e) for e in config.estimators],
        "eps_grid": list(config.eps_grid),
        "n_grid": list(config.n_grid),
        "trials": config.trials,
        "seed": config.master_seed,
        "out_path": out_path,
    }


def _cmd_risk_sweep(args) -> int:
    try:
        doc = _load_config(args.config)
        _check_keys(
            doc,
            {
                "family": True,
                "adversary": True,
                "estimators": True,
                "eps_grid": True,
                "n_grid": False,
                "trials": False,
                "seed": False,
                "out_path": False,
            },
            "config",
        )
        if not isinstance(doc["estimators"], list) or not doc["estimators"]:
            raise SchemaError("config.estimators: expected a nonempty list")
        config = SweepConfig(
            family=_parse_family(doc["family"]),
            adversary=doc["adversary"],
            estimators=[_parse_estimator(e, i) for i, e in enumerate(doc["estimators"])],
            eps_grid=[float(e) for e in doc["eps_grid"]],
            n_grid=[int(n) for n in doc.get("n_grid", [])],
            trials=int(doc.get("trials", 1)),
            master_seed=_resolve_seed(args.seed, doc.get("seed")),
        )
    except (SchemaError, ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out_path = args.out or doc.get("out_path") or "risk_sweep.csv"
    records = run_sweep(config, jobs=args.jobs)
    write_records_csv(records, out_path, timing=args.timing)
    fits = {}
    for est in config.estimators:
        try:
            fits[est.kind] = fit_exponent(records, est.kind)
        except ValueError:
            pass
    write_summary_json(records, str(out_path) + ".summary.json", fits, timing=args.timing)
    Path(str(out_path) + ".resolved.json").write_text(
        json.dumps(_resolved_sweep_doc(config, str(out_path)), indent=2, sort_keys=True) + "\n"
    )
    bad = [r for r in records if np.isfinite(r.estimate) and abs(r.abs_error - abs(r.estimate - r.clean_gw)) > 1e-12]
    return EXIT_PROPERTY if bad else EXIT_OK


def _cmd_metric_suite(args) -> int:
    report = metric_suite(_resolve_seed(args.seed))
    text = report.to_json()
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return EXIT_OK if report.passed else EXIT_PROPERTY


def _cmd_convergence(args) -> int:
    try:
        doc = _load_config(args.config)
        _check_keys(
            doc,
            {"family": True, "n_grid": True, "trials": True, "seed": False, "out_path": False},
            "config",
        )
        family = _parse_family(doc["family"])
        n_grid = [int(n) for n in doc["n_grid"]]
        trials = int(doc["trials"])
        seed = _resolve_seed(args.seed, doc.get("seed"))
        records = convergence_study(family, n_grid, trials, seed)
    except (SchemaError, ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out_path = args.out or doc.get("out_path") or "convergence.csv"
    write_records_csv(records, out_path, timing=args.timing)
    write_summary_json(records, str(out_path) + ".summary.json", timing=args.timing)
    resolved = {
        "family": asdict(family),
        "n_grid": n_grid,
        "trials": trials,
        "seed": seed,
        "out_path": str(out_path),
    }
    Path(str(out_path) + ".resolved.json").write_text(json.dumps(resolved, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def _add_solve_flags(sub):
    sub.add_argument("mu", help="first measure file (.json or .csv)")
    sub.add_argument("nu", help="second measure file (.json or .csv)")
    sub.add_argument("--restarts", type=int, default=10)
    sub.add_argument("--tol", type=float, default=1e-8, help="relative Frank-Wolfe gap tolerance")
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--dump-coupling", default=None, metavar="PATH")
    sub.add_argument("--timing", action="store_true", help="include wall time in the output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rgw", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    gw = subs.add_parser("gw", help="alignment cost between two measure files")
    _add_solve_flags(gw)
    gw.set_defaults(func=_cmd_gw)

    pgw = subs.add_parser("pgw", help="trimmed alignment cost between two measure files")
    _add_solve_flags(pgw)
    pgw.add_argument("--eps", type=float, required=True, help="trimmed mass fraction per side")
    pgw.set_defaults(func=_cmd_pgw)

    cont = subs.add_parser("contaminate", help="write a corrupted copy of a measure file")
    cont.add_argument("measure")
    cont.add_argument("--eps", type=float, required=True)
    cont.add_argument("--kind", required=True)
    cont.add_argument("--seed", type=int, default=None)
    cont.add_argument("--out", required=True)
    cont.add_argument("--radius", type=float, default=1000.0, help="outlier relocation distance")
    cont.add_argument("--partner", default=None, help="second measure (mirror_blend)")
    cont.add_argument("--partner-out", default=None)
    cont.set_defaults(func=_cmd_contaminate)

    sweep = subs.add_parser("risk-sweep", help="Monte Carlo risk sweep from a JSON config")
    sweep.add_argument("config")
    sweep.add_argument("--out", default=None)
    sweep.add_argument("--seed", type=int, default=None)
    sweep.add_argument("--jobs", type=int, default=1)
    sweep.add_argument("--timing", action="store_true")
    sweep.set_defaults(func=_cmd_risk_sweep)

    suite = subs.add_parser("metric-suite", help="structural property checks")
    suite.add_argument("--seed", type=int, default=None)
    suite.add_argument("--out", default=None)
    suite.set_defaults(func=_cmd_metric_suite)

    conv = subs.add_parser("convergence", help="empirical convergence study from a JSON config")
    conv.add_argument("config")
    conv.add_argument("--out", default=None)
    conv.add_argument("--seed", type=int, default=None)
    conv.add_argument("--timing", action="store_true")
    conv.set_defaults(func=_cmd_convergence)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
