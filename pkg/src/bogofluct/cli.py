"""Command-line entry point.

Subcommands:
  run               the convergence experiment from a JSON config
  verify-algebra    dense identity suite with a pass/fail table
  compare-coherent  projected vs bare-kernel fluctuation evolution
  rate              least-squares rate fit of an existing report.csv

Exit code 0 only when every configured tolerance gate (or identity) passes.
"""

import argparse
import csv
import sys

from .config import load_config
from .experiment import compare_coherent, fit_rate, run_convergence, run_single
from .verify import DEFAULT_SIZES, verify_algebra


def _cmd_run(args):
    cfg = load_config(args.config)
    report = run_convergence(cfg)
    for name, val, bound, ok in report.gates:
        print(f"{'PASS' if ok else 'FAIL'}  {name:<28} value={val:.6g} bound={bound:.6g}")
    for N, reason in report.failures.items():
        print(f"FAIL  N={N} aborted: {reason}")
    for t, fit in sorted(report.fits.items()):
        print(f"rate at t={t:g}: slope={fit.slope:.4f} (stderr {fit.stderr:.4f}, "
              f"r2={fit.r_squared:.4f}, {fit.n_used} points)")
    print(f"report written to {cfg.output_dir}/report.csv")
    return 0 if report.passed else 1


def _cmd_run_single(args):
    cfg = load_config(args.config)
    series, summary = run_single(cfg, args.N)
    print(f"max err_norm over series: {summary['max_err_norm']:.6g}")
    print(f"fitted growth constant for <N+1>: {summary['gronwall_constant']:.6g}")
    print(f"outputs written to {cfg.output_dir}/")
    return 0


def _cmd_verify(args):
    sizes = DEFAULT_SIZES
    if args.sizes:
        sizes = []
        for tok in args.sizes:
            M, N, n_max = (int(x) for x in tok.split(","))
            sizes.append((M, N, n_max))
    checks = verify_algebra(tuple(sizes))
    width = max(len(c.name) for c in checks)
    all_ok = True
    for c in checks:
        mark = "PASS" if c.ok else "FAIL"
        all_ok = all_ok and c.ok
        print(f"{mark}  {c.name:<{width}}  [{c.context}]  residual={c.residual:.3e} tol={c.tol:.1e}")
    print("all identities hold" if all_ok else "IDENTITY FAILURES PRESENT")
    return 0 if all_ok else 1


def _cmd_compare(args):
    cfg = load_config(args.config)
    rows = compare_coherent(cfg)
    for row in rows:
        print(f"t={row['time']:g}: |projected - bare| = {row['gap_norm']:.6g}")
    print(f"comparison written to {cfg.output_dir}/coherent_comparison.csv")
    return 0


def _cmd_rate(args):
    with open(args.report) as fh:
        rows = list(csv.DictReader(fh))
    times = sorted({float(r["time"]) for r in rows if float(r["time"]) > 0.0})
    if args.time is not None:
        times = [args.time]
    status = 0
    for t in times:
        sub = [(int(r["N"]), float(r["err_norm"])) for r in rows
               if abs(float(r["time"]) - t) < 1e-12]
        sub.sort()
        try:
            fit = fit_rate([e for _, e in sub], [n for n, _ in sub])
            print(f"t={t:g}: slope={fit.slope:.4f} stderr={fit.stderr:.4f} "
                  f"r2={fit.r_squared:.4f} points={fit.n_used}")
        except ValueError as exc:
            print(f"t={t:g}: {exc}")
            status = 1
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bogofluct",
        description="mean-field bosonic dynamics and the fluctuation convergence harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the convergence experiment")
    p.add_argument("config")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("run-single", help="full diagnostics for one N")
    p.add_argument("config")
    p.add_argument("N", type=int)
    p.set_defaults(func=_cmd_run_single)

    p = sub.add_parser("verify-algebra", help="dense identity suite")
    p.add_argument("--sizes", nargs="*", metavar="M,N,n_max",
                   help="override the default sizes, e.g. 2,3,4 3,3,4")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("compare-coherent", help="projected vs bare-kernel runs")
    p.add_argument("config")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("rate", help="fit a decay rate from a report.csv")
    p.add_argument("report")
    p.add_argument("--time", type=float, default=None)
    p.set_defaults(func=_cmd_rate)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
