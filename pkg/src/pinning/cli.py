"""Command-line front end.

Exit codes: 0 the command ran, 2 a precondition or configuration was
violated, 3 a certificate was sought but not obtained.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import estimators as est
from . import experiments
from .disorder import make_spec
from .partition_dp import PolymerParams, partition
from .renewal import make_kernel, write_kernel_csv
from .disorder import sample_env

EXIT_OK = 0
EXIT_PRECONDITION = 2
EXIT_NOT_CERTIFIED = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pinning",
        description="Disordered pinning with heavy-tailed environments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kernel", help="export a kernel and its mass table as CSV")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--infinite-normalizer", action="store_true")

    p = sub.add_parser("partition", help="one quenched partition evaluation (JSON to stdout)")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--horizon", type=int, default=None)

    for task in ("quench", "moments", "second-moment", "certify-deloc",
                 "certify-irrel", "hc-scan", "fit"):
        p = sub.add_parser(task, help=f"run a {task} campaign from a JSON config")
        p.add_argument("--config", required=True)

    p = sub.add_parser("campaign", help="run a campaign from a config or preset")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--config")
    group.add_argument("--preset", choices=["theorem-2.1", "theorem-2.2"])
    p.add_argument("--out-dir", default=".")

    p = sub.add_parser("verify", help="run the invariant suites")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--full", action="store_true")
    return parser


def _run_partition(args) -> int:
    kernel = make_kernel(args.alpha, args.horizon or args.n)
    spec = make_spec(args.gamma)
    env = sample_env(spec, args.n, args.seed)
    result = partition(PolymerParams(beta=args.beta, h=args.h, n=args.n), env, kernel)
    json.dump({"log_z_constrained": result.log_z_constrained,
               "log_z_free": result.log_z_free,
               "expected_contacts": result.expected_contacts},
              sys.stdout, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK


def _run_config_task(task: str, path: str) -> int:
    cfg = experiments.load_config(path)
    if cfg.task != task:
        raise experiments.ConfigError(
            f"config task {cfg.task!r} does not match subcommand {task!r}")
    result = experiments.run_campaign(cfg)
    print(f"{task}: {len(result.rows)} rows -> {cfg.csv_path}, {cfg.json_path}")
    if task.startswith("certify"):
        certified = all(r.get("certified") for r in result.rows)
        if not certified:
            print("certificate NOT obtained")
            return EXIT_NOT_CERTIFIED
        print("certificate obtained")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "kernel":
            kernel = make_kernel(args.alpha, args.horizon,
                                 infinite_normalizer=args.infinite_normalizer)
            write_kernel_csv(kernel, args.out, n_max=args.n_max)
            print(f"kernel -> {args.out}")
            return EXIT_OK
        if args.command == "partition":
            return _run_partition(args)
        if args.command == "campaign":
            if args.preset:
                cfg = experiments.preset_config(args.preset, out_dir=args.out_dir)
            else:
                cfg = experiments.load_config(args.config)
            result = experiments.run_campaign(cfg)
            print(f"campaign {cfg.task}: {len(result.rows)} rows "
                  f"-> {cfg.csv_path}, {cfg.json_path}")
            for name, fit in result.fits.items():
                print(f"  fit {name}: slope {fit['slope']:.4f} "
                      f"+- {fit['stderr']:.4f}")
            return EXIT_OK
        if args.command == "verify":
            return experiments.verify(seed=args.seed, quick=not args.full)
        return _run_config_task(args.command, args.config)
    except (ValueError, experiments.ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
