"""Command-line entry point: power flow, OPF, simulation runs, benchmarks.

Exit codes: 0 success/converged, 1 input or configuration error,
2 solver non-convergence.  Solve timings exclude file I/O but include
model building, measured on a monotonic clock.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time
from pathlib import Path

from .opf import IpmOptions, ipm_solve, opf_build
from .parsers import (
    YamlConfigError,
    apply_yaml_file,
    load_case,
    case_to_network,
)
from .powerflow import PfOptions, model_build, nr_solve
from .simlib import ChannelWriter

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_NO_CONVERGENCE = 2


def _read_case(path):
    try:
        return load_case(path)
    except OSError as exc:
        raise SystemExit(_fail(f"cannot read {path}: {exc}"))
    except ValueError as exc:
        raise SystemExit(_fail(f"{path}: {exc}"))


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_INPUT_ERROR


def report_schema() -> dict:
    """The JSON schema that pf/opf reports are validated against."""
    from importlib.resources import files

    raw = files("gridsim.data.schemas").joinpath("report.schema.json").read_text()
    return json.loads(raw)


def _write_json(path, report) -> None:
    import jsonschema

    jsonschema.validate(report, report_schema())
    Path(path).write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")


def _solve_pf(net, tol, max_iter):
    """Build-plus-solve with timing split; returns (solution, build_s)."""
    t0 = time.perf_counter()
    model = model_build(net)
    build_s = time.perf_counter() - t0
    opts = PfOptions(tol_pu=tol, max_iter=max_iter, start="flat")
    sol = nr_solve(model, opts)
    sol.build_s = build_s
    return sol


def cmd_pf(args) -> int:
    case = _read_case(args.case)
    try:
        net = case_to_network(case)
        sol = _solve_pf(net, args.tol, args.max_iter)
    except ValueError as exc:
        return _fail(str(exc))
    report = {
        "command": "pf",
        "case": case.name,
        "status": "converged" if sol.converged else "did-not-converge",
        "iterations": sol.iterations,
        "residual_pu": sol.residual_norm,
        "timing": {"build_s": sol.build_s, "solve_s": sol.solve_s},
        "solution": sol.to_json_dict() if sol.converged else None,
    }
    if args.json:
        _write_json(args.json, report)
    if not args.quiet:
        print(f"{case.name}: {report['status']} in {sol.iterations} iterations, "
              f"residual {sol.residual_norm:.3e} pu")
    return EXIT_OK if sol.converged else EXIT_NO_CONVERGENCE


def cmd_opf(args) -> int:
    case = _read_case(args.case)
    try:
        net = case_to_network(case)
        t0 = time.perf_counter()
        problem = opf_build(net)
        build_s = time.perf_counter() - t0
        sol = ipm_solve(problem, IpmOptions(tol=args.tol, max_iter=args.max_iter))
        sol.build_s = build_s
    except ValueError as exc:
        return _fail(str(exc))
    report = {
        "command": "opf",
        "case": case.name,
        "status": sol.status,
        "iterations": sol.iterations,
        "objective": sol.objective,
        "kkt": {k: float(v) for k, v in sol.kkt.items()},
        "timing": {"build_s": sol.build_s, "solve_s": sol.solve_s},
        "solution": sol.to_json_dict() if sol.converged else None,
    }
    if args.json:
        _write_json(args.json, report)
    if not args.quiet:
        print(f"{case.name}: {sol.status} in {sol.iterations} iterations, "
              f"objective {sol.objective:.2f}")
    return EXIT_OK if sol.converged else EXIT_NO_CONVERGENCE


def cmd_sim(args) -> int:
    try:
        ctx = apply_yaml_file(args.config)
    except OSError as exc:
        return _fail(f"cannot read {args.config}: {exc}")
    except YamlConfigError as exc:
        return _fail(str(exc))
    if not ctx.sim_configured:
        return _fail("configuration has no `simulation` entry with start/end times")
    out_dir = Path(args.out or "sim_out")
    try:
        ctx.sim.initialize()
        with ChannelWriter(ctx.sim, out_dir) as writer:
            if args.log:
                from .simulation import CsvSink
                with open(out_dir / "updates.csv", "w") as log_fh:
                    ctx.sim.add_sink(CsvSink(log_fh))
                    ctx.sim.run()
            else:
                ctx.sim.run()
    except Exception as exc:
        return _fail(f"simulation failed: {exc}")
    if not args.quiet:
        print(f"simulation complete at t={ctx.sim.current_time:g}; "
              f"outputs in {out_dir}")
    return EXIT_OK


def _bench_case(path, repeat, tol):
    case = _read_case(path)
    row = {"case": case.name, "n_bus": case.n_bus, "status": "ok",
           "pf_ms": None, "opf_ms": None, "pf_iters": None, "opf_iters": None}
    try:
        pf_times = []
        for _ in range(repeat):
            net = case_to_network(case)
            sol = _solve_pf(net, tol, 50)
            if not sol.converged:
                raise RuntimeError("power flow did not converge")
            pf_times.append(sol.build_s + sol.solve_s)
            row["pf_iters"] = sol.iterations
        opf_times = []
        for _ in range(repeat):
            net = case_to_network(case)
            t0 = time.perf_counter()
            problem = opf_build(net)
            osol = ipm_solve(problem, IpmOptions(tol=1e-6))
            opf_times.append(time.perf_counter() - t0)
            if osol.status != "optimal":
                raise RuntimeError(f"opf status {osol.status}")
            row["opf_iters"] = osol.iterations
        row["pf_ms"] = statistics.median(pf_times) * 1e3
        row["opf_ms"] = statistics.median(opf_times) * 1e3
    except Exception as exc:
        row["status"] = f"failed: {exc}"
    return row


def cmd_bench(args) -> int:
    paths = sorted(args.cases)
    if not paths:
        return _fail("no case files given")
    print("case\tn_bus\tpf_ms\topf_ms\tpf_iters\topf_iters\tstatus")
    any_ok = False
    for path in paths:
        row = _bench_case(path, args.repeat, args.tol)
        any_ok = any_ok or row["status"] == "ok"

        def num(x, fmt="{:.2f}"):
            return fmt.format(x) if x is not None else "-"

        print(f"{row['case']}\t{row['n_bus']}\t{num(row['pf_ms'])}\t"
              f"{num(row['opf_ms'])}\t{num(row['pf_iters'], '{}')}\t"
              f"{num(row['opf_iters'], '{}')}\t{row['status']}")
    return EXIT_OK if any_ok else EXIT_NO_CONVERGENCE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridsim",
        description="AC network power flow, optimal power flow, and "
                    "quasi-steady-state simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_pf = sub.add_parser("pf", help="solve a power flow from a case file")
    p_pf.add_argument("case")
    p_pf.add_argument("--tol", type=float, default=1e-8)
    p_pf.add_argument("--max-iter", type=int, default=50)
    p_pf.add_argument("--json", help="write a JSON report to this path")
    p_pf.add_argument("--quiet", action="store_true")
    p_pf.set_defaults(func=cmd_pf)

    p_opf = sub.add_parser("opf", help="solve an optimal power flow")
    p_opf.add_argument("case")
    p_opf.add_argument("--tol", type=float, default=1e-6)
    p_opf.add_argument("--max-iter", type=int, default=100)
    p_opf.add_argument("--json", help="write a JSON report to this path")
    p_opf.add_argument("--quiet", action="store_true")
    p_opf.set_defaults(func=cmd_opf)

    p_sim = sub.add_parser("sim", help="run a YAML-configured simulation")
    p_sim.add_argument("config")
    p_sim.add_argument("--out", help="output directory (default sim_out)")
    p_sim.add_argument("--log", action="store_true",
                       help="also write the engine update log")
    p_sim.add_argument("--quiet", action="store_true")
    p_sim.set_defaults(func=cmd_sim)

    p_bench = sub.add_parser("bench", help="benchmark PF and OPF on cases")
    p_bench.add_argument("cases", nargs="+")
    p_bench.add_argument("--repeat", type=int, default=5)
    p_bench.add_argument("--tol", type=float, default=1e-8)
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:  # raised by input helpers after printing
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
