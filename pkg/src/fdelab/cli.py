"""Command-line entry point: config-driven runs, single checks, and parameter sweeps."""

from __future__ import annotations

import argparse
import copy
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import reports
from .config import (
    SCHEMA_VERSION,
    RunConfig,
    build_aux,
    build_geometry,
    build_nonlinearity,
    build_scenario,
    build_weight,
    load_config,
    parse_config,
    parse_profile,
)
from .errors import ConfigError, DomainError, FDELabError, HypothesisFailure
from .estimates import (
    ancient_positivity,
    build_cutoff,
    check_cutoff,
    estimate_stability,
    liouville_probe,
    max_principle_check,
)
from .exponents import exponent_data, maximum_exponent_range, q_admissible
from .geometry import Cylinder
from .identities import AnalyticSource, OracleSource, SolvedSource, Tolerances, check_identity, matrix_variational_check
from .nonlinearity import condition_check
from .solver import convergence_study, solve

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


# -------------------------------------------------------------- task runners


def _exponents(cfg: RunConfig, task, out: Path, stem: str) -> dict:
    ex = cfg.exponents
    data = exponent_data(ex.p, ex.m, ex.beta).as_dict()
    result = {"exponents": data, "range": maximum_exponent_range(ex.m)}
    if ex.p is not None:
        windows = {}
        for cor in ("Cor6_4", "Cor6_5"):
            try:
                windows[cor] = q_admissible(ex.p, ex.m, ex.s if cor == "Cor6_4" else 2.0, cor).as_dict()
            except DomainError as exc:
                windows[cor] = {"error": str(exc)}
        result["q_windows"] = windows
    result["pass"] = True
    return result


def _solve(cfg: RunConfig, task, out: Path, stem: str) -> dict:
    fld = solve(build_scenario(cfg))
    if task.csv:
        fld.to_csv(out / f"{stem}_field.csv")
    return {"meta": fld.meta, "slices": fld.slice_summary(), "pass": True}


def _identity(cfg: RunConfig, task, out: Path, stem: str) -> dict:
    tol = cfg.tolerances
    params = {"beta": cfg.exponents.beta, "s": cfg.exponents.s, "q": cfg.exponents.q,
              "zeta": build_weight(task.zeta), "Gamma": build_aux(task.gamma)}
    if task.source == "solved":
        source = SolvedSource(build_scenario(cfg))
    elif task.source == "analytic":
        geom = build_geometry(cfg)
        lo, hi = (0.0, geom.domain.length) if geom.closed else (geom.domain.x_lo, geom.domain.x_hi)
        nodes = tuple(np.linspace(lo, hi, task.nodes + 2)[1:-1])
        source = AnalyticSource(geom, build_nonlinearity(cfg), cfg.exponents.p, parse_profile(task.profile),
                                task.t_star, nodes)
    else:
        geom = build_geometry(cfg)
        scn = build_scenario(cfg)
        nodes = tuple(np.linspace(geom.domain.x_lo, geom.domain.x_hi, task.nodes))
        source = OracleSource(geom, scn.nonlinearity, scn.oracle, task.t_star, nodes)
    rep = check_identity(task.id, source, params, task.levels,
                         Tolerances(tol.order, tol.order_tol, tol.analytic_residual, tol.c_spread, tol.finest_violation))
    rows = [[lv.dx if lv.dx is not None else "", lv.residual_linf, lv.residual_l2, lv.max_violation]
            for lv in rep.per_level]
    reports.write_rows(out / f"{stem}_residual_vs_dx.csv", ["dx", "residual_linf", "residual_l2", "max_violation"], rows)
    return rep.as_dict()


def _default_cylinder(cfg: RunConfig, task) -> Cylinder:
    s = cfg.solver
    t_end = s.t_start + s.horizon
    t0 = t_end if task.t0 is None else task.t0
    T = (t0 - s.t_start) if task.T is None else task.T
    return Cylinder(task.x0, t0, task.R, T)


def _estimate(cfg: RunConfig, task, out: Path, stem: str) -> dict:
    rep = estimate_stability(task.id, build_scenario(cfg), _default_cylinder(cfg, task), task.levels,
                             cfg.exponents.beta, cfg.tolerances.estimate_variation)
    reports.write_rows(out / f"{stem}_cstar_vs_level.csv", ["nx", "C_star"],
                       [[lv["nx"], lv["C_star"]] for lv in rep.per_level])
    return rep.as_dict()


def _max_principle(cfg: RunConfig, task, out: Path, stem: str) -> dict:
    ex = cfg.exponents
    params = {"s": ex.s, "q": ex.q, "a": task.a, "Gamma": build_aux(task.gamma)}
    try:
        rep = max_principle_check(task.id, build_scenario(cfg), params, cfg.tolerances.max_principle,
                                  cfg.tolerances.slack_coeff)
    except HypothesisFailure as exc:
        return {"id": task.id, "hypothesis_failure": {"hypothesis": exc.hypothesis, "text": exc.text,
                                                      "worst": exc.worst}, "pass": False}
    return rep.as_dict()


def _liouville(cfg: RunConfig, task, out: Path, stem: str) -> dict:
    try:
        rep = liouville_probe(task.id, build_scenario(cfg), task.radii, task.x0, cfg.exponents.beta, task.min_decay)
    except HypothesisFailure as exc:
        return {"id": task.id, "hypothesis_failure": {"hypothesis": exc.hypothesis, "text": exc.text,
                                                      "worst": exc.worst}, "pass": False}
    reports.write_rows(out / f"{stem}_bound_vs_R.csv", ["R", "bound", "C_star"],
                       [[r["R"], r["bound"], r["C_star"]] for r in rep["per_radius"]])
    return rep


def _ancient(cfg: RunConfig, task, out: Path, stem: str) -> dict:
    try:
        return ancient_positivity(build_nonlinearity(cfg), task.u0, task.a)
    except HypothesisFailure as exc:
        return {"hypothesis_failure": {"hypothesis": exc.hypothesis, "text": exc.text}, "pass": False}


def _convergence(cfg: RunConfig, task, out: Path, stem: str) -> dict:
    rep = convergence_study(build_scenario(cfg), task.levels, task.reference)
    tol = cfg.tolerances
    ok = rep.monotone and all(abs(o - tol.order) <= tol.order_tol for o in rep.order_linf)
    reports.write_rows(out / f"{stem}_error_vs_dx.csv", ["dx", "err_linf", "err_l2"],
                       [[d, a, b] for d, a, b in zip(rep.dx, rep.err_linf, rep.err_l2)])
    return {**rep.as_dict(), "pass": bool(ok)}


def _cutoff(cfg: RunConfig, task, out: Path, stem: str) -> dict:
    cyl = Cylinder(0.0, 0.0, task.R, task.T)
    tau = cyl.t0 - cyl.T + task.tau_fraction * cyl.T
    return check_cutoff(build_cutoff(cyl, tau, task.a), task.samples).as_dict()


def _matrix(cfg: RunConfig, task, out: Path, stem: str) -> dict:
    return matrix_variational_check(task.n, task.samples, cfg.seed, task.restarts)


def _condition(cfg: RunConfig, task, out: Path, stem: str) -> dict:
    ex = cfg.exponents
    params = {"p": ex.p, "beta": ex.beta, "q": ex.q, "s": ex.s, "a": task.a, "Gamma": build_aux(task.gamma)}
    if params["beta"] is None and ex.p is not None and task.hypothesis == "Thm2_4":
        params["beta"] = exponent_data(ex.p, ex.m).beta
    res = condition_check(build_nonlinearity(cfg), task.hypothesis, params, (task.u_lo, task.u_hi), task.samples)
    return {**res.as_dict(), "pass": res.holds}


RUNNERS = {
    "exponents": _exponents,
    "solve": _solve,
    "identity": _identity,
    "estimate": _estimate,
    "max_principle": _max_principle,
    "liouville": _liouville,
    "ancient": _ancient,
    "convergence": _convergence,
    "cutoff": _cutoff,
    "matrix": _matrix,
    "condition": _condition,
}


def task_label(task) -> str:
    ident = getattr(task, "id", None) or getattr(task, "hypothesis", None)
    return f"{task.kind}_{ident}" if ident else task.kind


def run_task(cfg: RunConfig, index: int, out: Path) -> dict:
    task = cfg.tasks[index]
    stem = f"{index:02d}_{task_label(task)}"
    try:
        result = RUNNERS[task.kind](cfg, task, out, stem)
    except FDELabError as exc:
        result = {"error": f"{type(exc).__name__}: {exc}", "pass": False}
    if "kind" in result:
        result["entry_kind"] = result.pop("kind")
    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": task.kind,
        "task": task.model_dump(mode="json"),
        "config": cfg.model_dump(mode="json"),
        **result,
    }
    reports.write_json(out / f"{stem}.json", report)
    return report


def run(cfg: RunConfig, out: Path | None = None) -> tuple[int, list[dict]]:
    """Execute every task, write one report per task, and return the exit code."""
    out = Path(out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = [run_task(cfg, i, out) for i in range(len(cfg.tasks))]
    code = EXIT_PASS if all(r.get("pass") for r in results) else EXIT_FAIL
    return code, results


# ------------------------------------------------------------------- sweeps

SWEEP_AXES = ("p", "m", "beta", "R", "nx", "dx", "lambda_rate", "f_amplitude")

HEADLINES = {
    "exponents": lambda r: {"p_c": r["exponents"]["p_c"], "p_0": r["exponents"]["p_0"],
                            "beta1": r["exponents"]["beta1"], "gamma": r["exponents"]["gamma"]},
    "solve": lambda r: {"u_min": min(s["min"] for s in r["slices"]), "u_max": max(s["max"] for s in r["slices"])},
    "identity": lambda r: {"error": r["per_level"][0]["residual_linf"],
                           "max_violation": r["per_level"][0]["max_violation"]},
    "estimate": lambda r: {"C_star": r["C_star"], "variation": r["inputs"]["variation"]},
    "max_principle": lambda r: {"worst_violation": r.get("worst_violation"), "kappa": r.get("kappa")},
    "liouville": lambda r: {"min_decay": min(r["decay_per_doubling"]) if r.get("decay_per_doubling") else None},
    "ancient": lambda r: {"t_fail": r.get("t_fail")},
    "convergence": lambda r: {"error": r["err_linf"][-1], "order_last": r["order_linf"][-1]},
    "cutoff": lambda r: {"c_achieved": r["c_achieved"], "c_a": r["c_a"]},
    "matrix": lambda r: {"sampled_max": r["sampled_max"], "optimized_max": r["optimized_max"]},
    "condition": lambda r: {"worst_value": r["worst_value"]},
}


def apply_axis(base: dict, axis: str, value: float) -> dict:
    data = copy.deepcopy(base)
    if axis == "p":
        data.setdefault("exponents", {})["p"] = value
    elif axis == "m":
        data.setdefault("exponents", {})["m"] = value
    elif axis == "beta":
        data.setdefault("exponents", {})["beta"] = value
    elif axis == "R":
        for task in data.get("tasks", []):
            if "R" in task or task.get("kind") in ("estimate", "cutoff"):
                task["R"] = value
    elif axis in ("nx", "dx"):
        cfg = parse_config(data)
        geom = build_geometry(cfg)
        solver = data.setdefault("solver", {})
        base_cells = cfg.solver.nx - (0 if geom.closed else 1)
        if axis == "nx":
            cells = int(value) - (0 if geom.closed else 1)
        else:
            cells = int(round(geom.domain.length / value))
        solver["nx"] = cells + (0 if geom.closed else 1)
        # slice spacing follows the grid so time differences refine with space
        solver["n_slices"] = max(3, int(round((cfg.solver.n_slices - 1) * cells / base_cells)) + 1)
    elif axis == "lambda_rate":
        conf = data.setdefault("geometry", {}).setdefault("conformal", {})
        conf["kind"] = "linear"
        conf["rate"] = value
    elif axis == "f_amplitude":
        data.setdefault("geometry", {}).setdefault("potential", {})["a"] = value
    else:
        raise ConfigError(f"axis {axis!r} is not sweepable; choose from {SWEEP_AXES}")
    return data


def _sweep_row(args):
    data, out = args
    try:
        cfg = parse_config(data)
    except ConfigError as exc:
        return EXIT_USAGE, str(exc)
    Path(out).mkdir(parents=True, exist_ok=True)
    return run(cfg, Path(out))


def _instantiate(base: dict, axis: str, value: float, out: str):
    try:
        return apply_axis(base, axis, value), out
    except ConfigError as exc:
        return {"__error__": str(exc)}, out


def sweep(base: dict, axis: str, values: list[float], out: Path, workers: int = 1) -> tuple[int, Path]:
    """Run the template once per value and aggregate task headlines into ``sweep.csv``.

    Rows keep the order of ``values`` regardless of the worker count. A config error
    in one instantiation fills that row's ``error`` column and leaves the others
    running. On grid axes an ``order`` column compares each row's error with the
    previous row's.
    """
    if axis not in SWEEP_AXES:
        raise ConfigError(f"axis {axis!r} is not sweepable; choose from {SWEEP_AXES}")
    out.mkdir(parents=True, exist_ok=True)
    jobs = [_instantiate(base, axis, v, str(out / f"value_{i:03d}")) for i, v in enumerate(values)]
    runnable = [j for j in jobs if "__error__" not in j[0]]
    if workers > 1 and len(runnable) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(_sweep_row, runnable))
    else:
        done = [_sweep_row(j) for j in runnable]
    done_iter = iter(done)
    outcomes = [(EXIT_USAGE, j[0]["__error__"]) if "__error__" in j[0] else next(done_iter) for j in jobs]

    rows, header_keys = [], []
    for value, (data, _), (code, results) in zip(values, jobs, outcomes):
        if isinstance(results, str):
            rows.append({"value": value, "nx": "", "task": "", "kind": "", "id": "", "pass": False,
                         "error_message": results})
            continue
        nx = data.get("solver", {}).get("nx", "")
        for idx, rep in enumerate(results):
            failed_early = "error" in rep or "hypothesis_failure" in rep
            head = {} if failed_early else HEADLINES[rep["kind"]](rep)
            for k in head:
                if k not in header_keys:
                    header_keys.append(k)
            message = rep.get("error", "")
            if "hypothesis_failure" in rep:
                message = f"hypothesis {rep['hypothesis_failure']['hypothesis']} not met"
            rows.append({"value": value, "nx": nx, "task": idx, "kind": rep["kind"],
                         "id": rep["task"].get("id", rep["task"].get("hypothesis", "")),
                         "pass": rep.get("pass"), "error_message": message, **head})
    if axis in ("nx", "dx"):
        header_keys.append("order")
        last: dict = {}
        for row in rows:
            prev = last.get(row["task"])
            row["order"] = ""
            if prev is not None and isinstance(row.get("error"), float) and isinstance(prev.get("error"), float):
                if row["error"] > 0 and prev["error"] > 0:
                    row["order"] = math.log(prev["error"] / row["error"]) / math.log(row["nx"] / prev["nx"])
            last[row["task"]] = row
    header = ["value", "nx", "task", "kind", "id", "pass", "error_message", *header_keys]
    path = out / "sweep.csv"
    reports.write_rows(path, header, [[row.get(k, "") for k in header] for row in rows])
    code = EXIT_PASS if all(c == EXIT_PASS for c, _ in outcomes) else EXIT_FAIL
    return code, path


# ---------------------------------------------------------------- argparse


def _base_data(args) -> dict:
    if getattr(args, "config", None):
        data = load_config(args.config).model_dump(mode="json")
    else:
        data = RunConfig().model_dump(mode="json")
    if getattr(args, "seed", None) is not None:
        data["seed"] = args.seed
    return data


def _with_task(args, task: dict) -> RunConfig:
    data = _base_data(args)
    data["tasks"] = [task]
    return parse_config(data)


def _finish(cfg: RunConfig, args) -> int:
    code, results = run(cfg, Path(args.out) if args.out else None)
    for task, rep in zip(cfg.tasks, results):
        status = "PASS" if rep.get("pass") else "FAIL"
        reason = ""
        if "hypothesis_failure" in rep:
            reason = f" (hypothesis {rep['hypothesis_failure']['hypothesis']} not met)"
        elif "error" in rep:
            reason = f" ({rep['error']})"
        print(f"{status} {task_label(task)}{reason}")
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fdelab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=False):
        p.add_argument("--config", required=config_required, help="TOML or JSON run configuration")
        p.add_argument("--out", help="output directory (defaults to the config's output_dir)")
        p.add_argument("--seed", type=int, help="override the config seed")

    p = sub.add_parser("run", help="execute every task of a config")
    common(p, True)

    p = sub.add_parser("exponents", help="critical exponents and derived constants")
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--p", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--s", type=float, default=2.0)

    p = sub.add_parser("solve", help="solve the configured scenario and dump the field")
    common(p, True)

    p = sub.add_parser("check-identity", help="check one identity or inequality")
    common(p)
    p.add_argument("--id", required=True)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--source", choices=["solved", "analytic", "oracle"], default="solved")

    p = sub.add_parser("verify-estimate", help="gradient estimate stability under refinement")
    common(p, True)
    p.add_argument("--id", required=True)
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--x0", type=float, default=0.0)

    p = sub.add_parser("max-principle", help="closed-manifold maximum principle bound")
    common(p, True)
    p.add_argument("--id", required=True)
    p.add_argument("--a", type=float, default=0.0)

    p = sub.add_parser("liouville", help="estimate collapse over growing cylinders")
    common(p, True)
    p.add_argument("--id", required=True)
    p.add_argument("--radii", default="1,2,4,8")
    p.add_argument("--x0", type=float, default=1.0)

    p = sub.add_parser("convergence", help="solver convergence study")
    common(p, True)
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--reference", choices=["oracle", "successive"], default="oracle")

    p = sub.add_parser("sweep", help="run a config template over a parameter axis")
    common(p, True)
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--workers", type=int, default=1)
    return parser


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse value list {text!r}") from exc


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "exponents":
            data = RunConfig().model_dump(mode="json")
            data["exponents"].update({"m": args.m, "p": args.p, "beta": args.beta, "s": args.s})
            data["tasks"] = [{"kind": "exponents"}]
            cfg = parse_config(data)
            result = _exponents(cfg, cfg.tasks[0], Path("."), "")
            sys.stdout.write(reports.dumps(result))
            return EXIT_PASS
        if args.command == "run":
            cfg = load_config(args.config)
            if args.seed is not None:
                cfg = parse_config({**cfg.model_dump(mode="json"), "seed": args.seed})
            return _finish(cfg, args)
        if args.command == "solve":
            return _finish(_with_task(args, {"kind": "solve"}), args)
        if args.command == "check-identity":
            return _finish(_with_task(args, {"kind": "identity", "id": args.id, "levels": args.levels,
                                             "source": args.source}), args)
        if args.command == "verify-estimate":
            return _finish(_with_task(args, {"kind": "estimate", "id": args.id, "levels": args.levels,
                                             "R": args.R, "x0": args.x0}), args)
        if args.command == "max-principle":
            return _finish(_with_task(args, {"kind": "max_principle", "id": args.id, "a": args.a}), args)
        if args.command == "liouville":
            return _finish(_with_task(args, {"kind": "liouville", "id": args.id, "radii": _floats(args.radii),
                                             "x0": args.x0}), args)
        if args.command == "convergence":
            return _finish(_with_task(args, {"kind": "convergence", "levels": args.levels,
                                             "reference": args.reference}), args)
        if args.command == "sweep":
            base = _base_data(args)
            out = Path(args.out or base.get("output_dir", "out"))
            code, path = sweep(base, args.axis, _floats(args.values), out, args.workers)
            print(path)
            return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
