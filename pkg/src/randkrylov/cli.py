"""Command-line entry point: ``randkrylov {sweep,single,gen,reference}``.

Examples
--------
::

    randkrylov sweep --config runs/convdiff.cfg --out convdiff.csv
    randkrylov single --problem diag --param n=50 --method ArnoldiFom --m-grid 50
    randkrylov gen --problem laplace3d --param N=10 --out lap.mtx
    randkrylov reference --problem diag --param n=50 --f exp --out ref.txt
"""

import argparse
import sys

import numpy as np

from . import bench
from .fab import FabMethod
from .problems import PROBLEMS, build_problem
from .sparse import write_matrix_market


def _add_common(p, problem_required=False):
    p.add_argument("--config", metavar="PATH", help="flat key = value config file")
    p.add_argument("--seed", type=int, metavar="U64",
                   help="random seed (falls back to the config, then $RANDKRYLOV_SEED, then 0)")
    p.add_argument("--out", metavar="PATH", help="output file (stdout if omitted)")
    p.add_argument("--problem", choices=sorted(PROBLEMS), required=problem_required)
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                   help="problem parameter, e.g. mesh=99 (repeatable)")
    p.add_argument("--f", choices=bench.FUNCTIONS)
    p.add_argument("--b-rule", choices=["RandomUnit", "SinPiXSinPiY"])
    p.add_argument("--scale", type=float, help="multiply the matrix by this factor")


def _add_method_flags(p):
    p.add_argument("--method", metavar="NAME[,NAME...]",
                   help="methods: " + ", ".join(m.value for m in FabMethod))
    p.add_argument("--m-grid", metavar="a:b:step")
    p.add_argument("--sketch-rule", metavar="{2m,1.05m,fixed:S}")
    p.add_argument("--k", type=int, help="truncation depth")
    p.add_argument("--whiten-threshold", type=float, metavar="REAL")
    p.add_argument("--lsq-tol", type=float, metavar="REAL")
    p.add_argument("--reference", metavar="RULE", help="Dense, LongArnoldi:M or ExpmMultiply")
    p.add_argument("--reference-window", type=int)
    p.add_argument("--sketch-reorth", action="store_true",
                   help="stabilized sketched Gram-Schmidt (re-sketch plus a correction pass)")
    p.add_argument("--extra-columns", action="store_true",
                   help="append wall-clock seconds and the applied shift to each row")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="randkrylov",
        description="Krylov approximation of f(A) b with randomized bases: sweeps and tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run a (method x m) sweep and write CSV")
    _add_common(p)
    _add_method_flags(p)

    p = sub.add_parser("single", help="run one method at one or more m")
    _add_common(p)
    _add_method_flags(p)

    p = sub.add_parser("gen", help="write a problem matrix in Matrix Market format")
    _add_common(p, problem_required=True)

    p = sub.add_parser("reference", help="write the reference vector f(A) b, one value per line")
    _add_common(p)
    p.add_argument("--reference", metavar="RULE", help="Dense, LongArnoldi:M or ExpmMultiply")
    p.add_argument("--reference-window", type=int)
    return parser


def _collect(args):
    values = bench.parse_config_file(args.config) if args.config else {}
    flag_map = {
        "problem": "problem",
        "f": "f",
        "b_rule": "b_rule",
        "scale": "scale",
        "method": "methods",
        "m_grid": "m_grid",
        "sketch_rule": "sketch_rule",
        "k": "k",
        "whiten_threshold": "whiten_threshold",
        "lsq_tol": "lsq_tol",
        "reference": "reference",
        "reference_window": "reference_window",
        "out": "out",
    }
    for attr, key in flag_map.items():
        v = getattr(args, attr, None)
        if v is not None:
            values[key] = str(v)
    for flag in ("extra_columns", "sketch_reorth"):
        if getattr(args, flag, False):
            values[flag] = "true"
    for item in args.param:
        if "=" not in item:
            raise SystemExit(f"--param expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        values["param." + key.strip()] = value.strip()
    return bench.config_from_mapping(values, seed=args.seed)


def _cmd_sweep(cfg, stream):
    records = bench.run_sweep(cfg, out=stream if cfg.out is None else None)
    _report_stagnation(cfg, records)
    return 0 if all(r.ok for r in records) else 3


def _report_stagnation(cfg, records):
    """Print a stagnation note per method when the grid has unit spacing."""
    grid = cfg.m_grid
    if len(grid) <= 10 or any(b - a != 1 for a, b in zip(grid, grid[1:])):
        return
    for method in cfg.methods:
        errs = [r.rel_error if r.ok else np.nan for r in records if r.method == method]
        j = bench.detect_stagnation(errs)
        if j is not None:
            print(f"{method}: error stagnates from m = {grid[j]}", file=sys.stderr)


def _cmd_gen(cfg, stream):
    problem = build_problem(cfg.problem)
    target = cfg.out if cfg.out is not None else stream
    write_matrix_market(problem.A, target, comment=f"problem {cfg.problem.name} seed {cfg.seed}")
    return 0


def _cmd_reference(cfg, stream):
    problem = build_problem(cfg.problem)
    ref = bench.compute_reference(
        problem.A, problem.b, cfg.problem.f, cfg.reference, cfg.reference_window,
        cfg.reference_tol,
    )
    lines = "".join("%.17g\n" % x for x in ref)
    if cfg.out is None:
        stream.write(lines)
    else:
        with open(cfg.out, "w") as fh:
            fh.write(lines)
    return 0


def main(argv=None, stream=None):
    stream = sys.stdout if stream is None else stream
    args = build_parser().parse_args(argv)
    try:
        cfg = _collect(args)
        if args.command in ("sweep", "single"):
            return _cmd_sweep(cfg, stream)
        if args.command == "gen":
            return _cmd_gen(cfg, stream)
        return _cmd_reference(cfg, stream)
    except BrokenPipeError:
        # output closed early (e.g. piped into head): not an error
        sys.stderr.close()
        return 0
    except (ValueError, OSError) as exc:
        print(f"randkrylov: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report package errors without a traceback
        print(f"randkrylov: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
