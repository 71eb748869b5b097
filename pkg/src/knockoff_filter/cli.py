"""Command-line interface.

Three subcommands:

* ``knockoff filter``   — run the selection pipeline on a CSV dataset;
* ``knockoff simulate`` — Monte-Carlo method comparisons on synthetic data;
* ``knockoff seqtest``  — error rates of the sequential testing procedures.

All errors exit with status 1 and the error name on stderr.
"""

from __future__ import annotations

import argparse
import sys


from . import __version__
from .construction import construct_knockoffs, fallback_gap, row_augment
from .data import load_dataset
from .errors import KnockoffError
from .lasso import DEFAULT_GRID
from .selection import threshold, write_selection_csv
from .sequential import VARIANTS, null_experiment
from .simulate import (
    METHODS,
    ExperimentSpec,
    mix_seed,
    run_methods,
    write_results_csv,
)
from .stats import StatisticKind, compute_statistic

STATISTIC_NAMES = [k.value for k in StatisticKind if k is not StatisticKind.FIXED_PENALTY_DIFF]

# per-setting defaults: design kind plus the benchmark sizes they mirror
SETTINGS = {
    "table1": dict(design="iid", n=3000, p=1000, k=30, amplitude=3.5),
    "vary-k": dict(design="iid", n=3000, p=1000, k=30, amplitude=3.5),
    "vary-amplitude": dict(design="iid", n=3000, p=1000, k=30, amplitude=3.5),
    "vary-rho": dict(design="tapered", n=3000, p=1000, k=30, amplitude=3.5, rho=0.3),
    "orthogonal": dict(design="orthogonal", n=2000, p=1000, k=200, amplitude=3.5),
    "permutation": dict(
        design="equal", n=300, p=100, k=30, amplitude=3.5, rho=0.3, signs="positive"
    ),
}
SETTING_METHODS = {
    "table1": "knockoff,knockoff-plus,bhq,bhq-log,bhq-white",
    "permutation": "knockoff,permutation",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="knockoff",
        description="FDR-controlled variable selection with knockoff variables",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    f = sub.add_parser("filter", help="select variables from a CSV dataset")
    f.add_argument("--design", required=True, help="CSV with a header row of feature names")
    f.add_argument("--response", required=True, help="single-column CSV")
    f.add_argument("--q", type=float, default=0.2, help="target FDR level")
    f.add_argument("--knockoff", choices=["equi", "sdp"], default="sdp")
    f.add_argument("--statistic", choices=STATISTIC_NAMES, default="lasso-signed-max")
    f.add_argument("--plus", action="store_true", help="use the conservative + threshold")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--center", action="store_true", help="center y and X columns first")
    f.add_argument("--grid-count", type=int, default=DEFAULT_GRID[0])
    f.add_argument("--grid-ratio", type=float, default=DEFAULT_GRID[1])
    f.add_argument("--out", required=True, help="selection CSV path")

    s = sub.add_parser("simulate", help="run a Monte-Carlo comparison")
    s.add_argument("--setting", choices=sorted(SETTINGS), default="table1")
    s.add_argument("--n", type=int)
    s.add_argument("--p", type=int)
    s.add_argument("--k", type=int)
    s.add_argument("--amplitude", type=float)
    s.add_argument("--rho", type=float)
    s.add_argument("--q", type=float, default=0.2)
    s.add_argument("--trials", type=int, default=20)
    s.add_argument("--methods", help="comma-separated subset of: " + ",".join(METHODS))
    s.add_argument("--statistic", choices=STATISTIC_NAMES, default="lasso-signed-max")
    s.add_argument("--knockoff", choices=["equi", "sdp"], default="equi")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--grid-count", type=int, default=DEFAULT_GRID[0])
    s.add_argument("--grid-ratio", type=float, default=DEFAULT_GRID[1])
    s.add_argument("--workers", type=int, default=1)
    s.add_argument(
        "--unpaired",
        action="store_true",
        help="draw independent instances per method instead of shared ones",
    )
    s.add_argument("--out", required=True, help="results CSV path ('-' for stdout)")

    t = sub.add_parser("seqtest", help="sequential procedure error rates")
    t.add_argument("--variant", choices=list(VARIANTS), required=True)
    t.add_argument("--c", type=float, default=0.5)
    t.add_argument("--q", type=float, default=0.2)
    t.add_argument("--m", type=int, default=100)
    t.add_argument("--trials", type=int, default=1000)
    t.add_argument("--nonnulls", type=int, default=0)
    t.add_argument("--nonnull-p", type=float, default=0.01)
    t.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_filter(args) -> int:
    design, y, report = load_dataset(args.design, args.response, center=args.center)
    for name, reason in report.dropped:
        print(f"dropped column {name!r}: {reason}", file=sys.stderr)
    if design.n < 2 * design.p:
        design, y = row_augment(design, y, mix_seed(args.seed, "augment"))
    gap = fallback_gap(design.gram, args.knockoff)
    aug = construct_knockoffs(design, gap, mix_seed(args.seed, "complement"))
    w = compute_statistic(
        args.statistic, aug, y, grid_spec=(args.grid_count, args.grid_ratio)
    )
    result = threshold(w, args.q, plus=args.plus)
    write_selection_csv(
        args.out,
        w,
        result,
        extra_metadata={
            "statistic": args.statistic,
            "knockoff": gap.kind.value,
            "seed": args.seed,
            "grid_count": args.grid_count,
            "grid_ratio": args.grid_ratio,
        },
    )
    names = report.feature_names
    label = "knockoff+" if args.plus else "knockoff"
    print(
        f"selected {result.n_selected} of {len(names)} features "
        f"at threshold {result.threshold:.6g} ({label}, q={args.q})"
    )
    for j in result.selected:
        print(f"  {names[j]}")
    return 0


def _cmd_simulate(args) -> int:
    preset = dict(SETTINGS[args.setting])
    for key in ("n", "p", "k", "amplitude", "rho"):
        value = getattr(args, key)
        if value is not None:
            preset[key] = value
    spec = ExperimentSpec(
        q=args.q,
        trials=args.trials,
        statistic=args.statistic,
        knockoff=args.knockoff,
        seed=args.seed,
        grid_count=args.grid_count,
        grid_ratio=args.grid_ratio,
        paired=not args.unpaired,
        **preset,
    )
    methods = (args.methods or SETTING_METHODS.get(args.setting, "knockoff-plus,bhq")).split(",")
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r} (choose from {','.join(METHODS)})")
    summaries = run_methods(spec, methods, workers=args.workers)
    if args.out == "-":
        write_results_csv(sys.stdout, summaries)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            write_results_csv(fh, summaries)
    for s in summaries:
        power = "n/a" if s.mean_power is None else f"{s.mean_power:.4f}"
        print(
            f"{s.spec.method}: fdr={s.mean_fdr:.4f} (se {s.se_fdr:.4f}) power={power}",
            file=sys.stderr,
        )
    return 0


def _cmd_seqtest(args) -> int:
    result = null_experiment(
        args.variant,
        m=args.m,
        trials=args.trials,
        q=args.q,
        c=args.c,
        nonnulls=args.nonnulls,
        nonnull_p=args.nonnull_p,
        seed=args.seed,
    )
    print(
        f"variant={result.variant} m={args.m} trials={result.trials} "
        f"c={args.c} q={args.q} nonnulls={args.nonnulls}"
    )
    print(
        f"{result.metric}: {result.mean:.5f} (se {result.se:.5f})  "
        f"mean rejections: {result.mean_rejections:.2f}"
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "filter":
            return _cmd_filter(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        return _cmd_seqtest(args)
    except (KnockoffError, ValueError, OSError, OverflowError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
