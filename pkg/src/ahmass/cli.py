"""Command-line driver: ``ahmass {theorem-check,cone-sweep,mass-compare,decay-check}``.

Exit codes: 0 when every gating check passes, 1 on a failed check, 2 on a
configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .experiments import (
    ConfigError,
    emit_report,
    load_config,
    run_cone_sweep,
    run_decay_check,
    run_mass_compare,
    run_theorem_check,
)

COMMANDS = {
    "theorem-check": (run_theorem_check, "param", ("residual", "face_bound", "edge_bound")),
    "cone-sweep": (run_cone_sweep, "eps", ("E1", "E2", "base_face", "side_face")),
    "mass-compare": (run_mass_compare, None, ()),
    "decay-check": (run_decay_check, "radius", ("ratio", "dratio")),
}


def _float_list(text):
    try:
        return [float(eval_fraction(x)) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def eval_fraction(x):
    x = x.strip()
    if "/" in x:
        num, den = x.split("/")
        return float(num) / float(den)
    return float(x)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ahmass", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--tau-prime", type=float, help="decay exponent of the field family")
        p.add_argument("--mass-param", type=float, help="amplitude m of the field family")
        p.add_argument("--eps-schedule", type=_float_list,
                       help="comma separated eps values, e.g. 1/8,1/16,1/32")
        p.add_argument("--out-dir", help="directory for CSV/JSON/SVG output")
        p.add_argument("--threads", type=int, help="worker threads for face/edge integrals")
        p.add_argument("--plots", action="store_true", help="also write SVG line charts")
        p.add_argument("--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    runner, xcol, ycols = COMMANDS[args.command]
    try:
        cfg = load_config(args.command, args.config, {
            "tau_prime": args.tau_prime, "m": args.mass_param,
            "eps_schedule": args.eps_schedule, "out_dir": args.out_dir,
            "threads": args.threads, "verbose": args.verbose or None,
        })
        report = runner(cfg)
        emit_report(report, cfg.out_dir, plots=args.plots, plot_x=xcol, plot_y=ycols)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    print(report.summary())
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
