"""Command-line entry point: ``run``, ``list-scenarios`` and ``check``.

Exit codes: 0 success, 2 configuration error, 3 assumption violation,
4 numerical divergence.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from ..errors import AssumptionViolation, ConfigError, IntegrationDiverged
from . import make_config
from .runner import audit_scenario, run_scenario
from .scenarios import SCENARIOS, scenario_names
from .traces import summary_json

EXIT_OK, EXIT_CONFIG, EXIT_ASSUMPTION, EXIT_DIVERGED = 0, 2, 3, 4


def _float_list(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _scenario_flags(p):
    p.add_argument("--scenario", help="registered scenario name")
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--t-final", type=float, dest="t_final")
    p.add_argument("--step", type=float)
    p.add_argument("--gamma", type=_float_list, help="scalar or comma-separated per-parameter gains")
    p.add_argument("--lambda", type=_float_list, dest="lam", help="filter rates, e.g. 0.1,0.2,0.3")
    p.add_argument("--estimator", choices=["filter-bank", "kreisselmeier"])


def build_parser():
    # argparse exits with status 2 on usage errors, which matches EXIT_CONFIG
    parser = argparse.ArgumentParser(prog="descobs", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario and write CSV traces and summary.json")
    _scenario_flags(run)
    run.add_argument("--out", help="output directory (default: out/<scenario>)")

    sub.add_parser("list-scenarios", help="print registered scenario names")

    check = sub.add_parser("check", help="evaluate assumptions only, no estimation")
    _scenario_flags(check)
    return parser


def _config(args):
    gamma = args.gamma
    if gamma is not None and len(gamma) == 1:
        gamma = gamma[0]
    return make_config(
        args.scenario, args.config,
        t_final=args.t_final, step=args.step, gamma=gamma, estimator=args.estimator,
        out=getattr(args, "out", None),
        **{"lambda": args.lam},
    )


def _headline(summary):
    fin = summary["final"]
    lines = [f"scenario {summary['scenario']} ({summary['observer']})"]
    if fin is None:
        lines.append("empty run")
        return lines
    lines.append(f"t = {fin['t']:g}: |eta err| = {fin['eta_error']:.3e}, "
                 f"|x_a err| = {fin['state_error_a']:.3e}, |x_b err| = {fin['state_error_b']:.3e}")
    ie = summary["excitation"]
    lines.append(f"interval excitation: t_c = {ie['t_c']}, lambda_min = {ie['lambda_min_final']:.3e}")
    for eps, t in summary["time_to_threshold"]["eta_error"].items():
        lines.append(f"  |eta err| < {eps}: {'not reached' if t is None else f't = {t:g}'}")
    return lines


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if args.command == "list-scenarios":
        for name in scenario_names():
            print(f"{name}\t{SCENARIOS[name].description}")
        return EXIT_OK
    try:
        cfg = _config(args)
        if args.command == "check":
            report = audit_scenario(cfg)
            sys.stdout.write(summary_json(report))
            return EXIT_OK if report["passed"] else EXIT_ASSUMPTION
        if cfg.out is None:
            cfg = replace(cfg, out=f"out/{cfg.scenario}")
        paths, summary = run_scenario(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AssumptionViolation as exc:
        print(f"assumption violated: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except IntegrationDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    for line in _headline(summary):
        print(line)
    print(f"wrote {len(paths)} files to {cfg.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
