"""Command-line entry point.

Exit status is 0 when every assertion passes, 1 when a check or solve fails
(the first counterexample is written to summary.json) and 2 on a bad
configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import suites
from .errors import ConfigError, InstanceTooLargeError
from .extremal import ORDER_TOL, brute_force_extremal, extremal_solutions, verify_subsolution, verify_supersolution
from .grid import PRESETS, GridProblem, load_problem, preset_config, problem_from_config

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
VERIFY = ("verify-order", "verify-fixpoint", "verify-qvip", "verify-grid")


def fmt(x) -> str:
    """Floats with 17 significant digits; everything else via str."""
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    return str(x)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])


def write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


# -- problem loading -------------------------------------------------------------

def resolve_problem(spec: str) -> GridProblem:
    """A config path, or the name of a shipped preset."""
    path = Path(spec)
    if path.is_file():
        return load_problem(path)
    name = spec[:-5] if spec.endswith(".json") else spec
    name = name.removeprefix("preset-")
    if name in PRESETS:
        return problem_from_config(preset_config(name))
    if path.suffix == ".json" or "/" in spec:
        raise ConfigError("<path>", f"no such file {spec!r}")
    raise ConfigError("preset", f"unknown preset {spec!r}; choose from {', '.join(PRESETS)}")


def check_bounds(prob: GridProblem, tol: float) -> None:
    sub = verify_subsolution(prob, prob.sub, tol)
    if not sub:
        raise ConfigError("sub", f"not a subsolution at node {sub.witness}: {sub.detail}")
    sup = verify_supersolution(prob, prob.sup, tol)
    if not sup:
        raise ConfigError("super", f"not a supersolution at node {sup.witness}: {sup.detail}")


# -- commands --------------------------------------------------------------------

def run_verify(names, args, out: Path) -> int:
    results = []
    for name in names:
        kwargs = {"seed": args.seed, "scale": args.scale}
        if name == "verify-grid":
            kwargs.update(tol=args.tol if args.tol is not None else suites.SAMPLE_TOL, max_iter=args.max_iter)
        for r in suites.SUITES[name](**kwargs):
            results.append(r)
            status = "PASS" if r.passed else "FAIL"
            print(f"{status} {r.suite} {r.name}: {r.samples} samples, {r.failures} failures", flush=True)
    write_csv(
        out / "checks.csv",
        ["suite", "check", "samples", "failures", "passed"],
        [(r.suite, r.name, r.samples, r.failures, r.passed) for r in results],
    )
    failed = [r for r in results if not r.passed]
    summary = {
        "command": args.command,
        "seed": args.seed,
        "checks": [r.summary() for r in results],
        "passed": len(results) - len(failed),
        "failed": len(failed),
        "first_counterexample": failed[0].summary() if failed else None,
    }
    write_json(out / "summary.json", summary)
    if failed:
        print(json.dumps(summary["first_counterexample"], sort_keys=True), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def solve_problem(prob: GridProblem, tol: float, max_iter: int):
    return extremal_solutions(prob, tol=tol, inner_tol=tol, max_iter=max_iter)


def _solve_ok(prob, ex) -> bool:
    return (
        all(ex.converged)
        and ex.both_fixed
        and ex.monotone_ok
        and ex.ordered
        and bool(np.all(prob.sub <= ex.u_smallest + ORDER_TOL))
        and bool(np.all(ex.u_greatest <= prob.sup + ORDER_TOL))
    )


def write_solution(out: Path, prob: GridProblem, ex) -> None:
    active = ex.u_greatest >= prob.psi(ex.u_greatest) - 1e-9
    write_csv(
        out / "solution.csv",
        ["node", "x", "u_smallest", "u_greatest", "eta", "active_obstacle_flag"],
        zip(range(prob.n), prob.x, ex.u_smallest, ex.u_greatest, ex.eta_greatest, active),
    )
    for side in ("smallest", "greatest"):
        write_csv(
            out / f"run_{side}.csv",
            ["outer_iter", "max_update", "residual", "u_min", "u_max", "inner_iterations"],
            ex.trace[side],
        )


def run_solve(args, out: Path) -> int:
    prob = resolve_problem(args.config)
    check_bounds(prob, 1e-9)
    ex = solve_problem(prob, args.tol or 1e-10, args.max_iter)
    write_solution(out, prob, ex)
    ok = _solve_ok(prob, ex)
    summary = {
        "command": "solve",
        "problem": prob.name,
        "outer_iterations": list(ex.outer_iterations),
        "converged": list(ex.converged),
        "residuals": [float(r) for r in ex.residuals],
        "monotone_ok": ex.monotone_ok,
        "ordered": ex.ordered,
        "passed": ok,
    }
    write_json(out / "summary.json", summary)
    print(f"{'PASS' if ok else 'FAIL'} solve {prob.name}: outer iterations {ex.outer_iterations}, "
          f"residuals {ex.residuals[0]:.2e} {ex.residuals[1]:.2e}")
    return EXIT_OK if ok else EXIT_FAIL


def load_sweep(path: str) -> list[dict]:
    """A sweep file holds a base problem (preset name or config object) and a
    list of override objects, one per instance."""
    try:
        spec = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError("<path>", f"no such file {path!r}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", str(exc)) from None
    if not isinstance(spec, dict) or "instances" not in spec:
        raise ConfigError("instances", "sweep file needs an 'instances' list")
    base = spec.get("base", {})
    if isinstance(base, str):
        base = preset_config(base)
    if not isinstance(base, dict):
        raise ConfigError("base", "must be a preset name or a config object")
    if not isinstance(spec["instances"], list) or not spec["instances"]:
        raise ConfigError("instances", "need a nonempty list of override objects")
    configs = []
    for k, over in enumerate(spec["instances"]):
        if not isinstance(over, dict):
            raise ConfigError(f"instances[{k}]", "must be an object")
        cfg = {**base, **over}
        cfg["name"] = over.get("name", f"{base.get('name', 'instance')}-{k}")
        problem_from_config(cfg)  # validate up front
        configs.append(cfg)
    return configs


def _sweep_one(job):
    cfg, tol, max_iter = job
    prob = problem_from_config(cfg)
    check_bounds(prob, 1e-9)
    ex = solve_problem(prob, tol, max_iter)
    return (
        prob.name, prob.p, prob.n, ex.outer_iterations[0], ex.outer_iterations[1],
        float(ex.residuals[0]), float(ex.residuals[1]),
        float(ex.u_smallest.max()), float(ex.u_greatest.max()), _solve_ok(prob, ex),
    )


def run_sweep(args, out: Path) -> int:
    configs = load_sweep(args.config)
    jobs = [(cfg, args.tol or 1e-10, args.max_iter) for cfg in configs]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    header = ["instance", "name", "p", "n", "outer_smallest", "outer_greatest", "residual_smallest",
              "residual_greatest", "max_u_smallest", "max_u_greatest", "passed"]
    write_csv(out / "sweep.csv", header, [(k, *row) for k, row in enumerate(rows)])
    failed = [k for k, row in enumerate(rows) if not row[-1]]
    write_json(out / "summary.json", {"command": "sweep", "instances": len(rows),
                                      "failed": len(failed), "first_failure": failed[0] if failed else None})
    for k, row in enumerate(rows):
        print(f"{'PASS' if row[-1] else 'FAIL'} sweep {k} {row[0]}")
    return EXIT_FAIL if failed else EXIT_OK


def run_oracle(args, out: Path) -> int:
    prob = resolve_problem(args.config)
    levels = prob.meta.get("levels")
    if levels is None:
        raise ConfigError("meta.levels", "oracle needs quantization levels")
    check_bounds(prob, 1e-9)
    try:
        bf = brute_force_extremal(prob, levels)
    except InstanceTooLargeError as exc:
        raise ConfigError("n", str(exc)) from None
    ex = solve_problem(prob, args.tol or 1e-10, args.max_iter)
    levels = sorted(float(x) for x in levels)
    step = min(b - a for a, b in zip(levels, levels[1:])) if len(levels) > 1 else 0.0
    ok = bf.minimum is not None and _solve_ok(prob, ex)
    if bf.minimum is not None:
        ok = ok and bool(np.all(np.abs(ex.u_smallest - bf.minimum) <= step + ORDER_TOL))
        ok = ok and bool(np.all(np.abs(ex.u_greatest - bf.maximum) <= step + ORDER_TOL))
        write_csv(
            out / "oracle.csv",
            ["node", "x", "oracle_min", "oracle_max", "u_smallest", "u_greatest"],
            zip(range(prob.n), prob.x, bf.minimum, bf.maximum, ex.u_smallest, ex.u_greatest),
        )
    write_json(out / "summary.json", {
        "command": "oracle",
        "problem": prob.name,
        "quantized_solutions": len(bf.solutions),
        "has_smallest": bool(bf.minimum is not None and bf.has_smallest),
        "has_greatest": bool(bf.minimum is not None and bf.has_greatest),
        "passed": ok,
    })
    print(f"{'PASS' if ok else 'FAIL'} oracle {prob.name}: {len(bf.solutions)} quantized solutions")
    return EXIT_OK if ok else EXIT_FAIL


# -- argument parsing ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for randomized suites")
    common.add_argument("--tol", type=float, default=None,
                        help="solver tolerance (solve, sweep, oracle) or residual tolerance (verify-grid)")
    common.add_argument("--max-iter", type=int, default=500, help="inner iteration cap per solve")
    common.add_argument("--out", default=".", help="output directory (created if missing)")
    parser = argparse.ArgumentParser(prog="qvilat", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*VERIFY, "verify-all"):
        p = sub.add_parser(name, parents=[common], help=f"run the {name[7:]} property suite")
        p.add_argument("--scale", type=float, default=1.0, help="fraction of the randomized sample counts")
    p = sub.add_parser("solve", parents=[common], help="smallest and greatest solutions of a grid problem")
    p.add_argument("config", help="config file or preset name")
    p = sub.add_parser("sweep", parents=[common], help="solve every instance of a sweep file")
    p.add_argument("config", help="sweep file")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p = sub.add_parser("oracle", parents=[common], help="compare the drivers with brute-force enumeration")
    p.add_argument("config", help="config file or preset name with meta.levels")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "verify-all":
            return run_verify(VERIFY, args, out)
        if args.command in VERIFY:
            return run_verify([args.command], args, out)
        return {"solve": run_solve, "sweep": run_sweep, "oracle": run_oracle}[args.command](args, out)
    except ConfigError as exc:
        print(f"config error in field {exc.field!r}: {exc.message}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
