"""Command-line driver.

Subcommands: ``verify``, ``convergence``, ``expectation``, ``gheat`` and
``hermite-table``. Global options ``--config``, ``--out`` and ``--seed`` may
appear before or after the subcommand.

Exit codes: 0 all checks passed, 1 at least one check failed, 2
configuration error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import ConfigError, RunConfig, parse_config
from .gheat import CflError
from . import runner

log = logging.getLogger("gchaos")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _common(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="JSON run configuration")
    parser.add_argument("--out", default=default, help="output directory (overrides output_dir)")
    parser.add_argument("--seed", type=int, default=default, help="master seed override")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gchaos", description=__doc__.splitlines()[0])
    _common(p, suppress=False)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("verify", "run the full verification suite"),
        ("convergence", "grid-refinement study of the Hermite identity residual"),
        ("expectation", "upper/lower expectations for configured functionals"),
        ("gheat", "solve the G-heat equation for configured payoffs"),
    ]:
        _common(sub.add_parser(name, help=help_), suppress=True)
    ht = sub.add_parser("hermite-table", help="print Hermite coefficients and cross-check both constructions")
    _common(ht, suppress=True)
    ht.add_argument("--max-degree", type=int, default=10)
    return p


def _load(args) -> RunConfig:
    if not args.config:
        raise ConfigError("--config is required for this command")
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, seed=args.seed)


def _summarize(report: runner.Report, written) -> None:
    for c in report.failed:
        print(f"FAIL {c['name']}: value={c['value']} threshold={c['threshold']} {c['detail']}".rstrip(), file=sys.stderr)
    n, f = len(report.checks), len(report.failed)
    print(f"{report.command}: {n - f}/{n} checks passed")
    for w in written:
        print(f"  wrote {w}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "hermite-table":
            report = runner.hermite_table(args.max_degree)
            if args.out:
                _summarize(report, runner.write_report(report, args.out))
            else:
                print("n,coeffs")
                for row in report.tables["hermite"]:
                    print(f"{row['n']},{row['coeffs']}")
            return report.exit_status

        cfg = _load(args)
        out = args.out or cfg.output_dir
        log.info("running %s into %s", args.command, out)
        if args.command == "verify":
            report = runner.run_verify(cfg)
            written = runner.write_report(report, out, cfg.formats)
            if "csv" in cfg.formats:
                written.append(runner.export_sample_path(cfg, out))
        elif args.command == "convergence":
            report = runner.run_convergence(cfg)
            written = runner.write_report(report, out, cfg.formats)
        elif args.command == "expectation":
            report = runner.run_expectation(cfg)
            written = runner.write_report(report, out, cfg.formats)
        else:
            report, profiles = runner.run_gheat(cfg)
            written = runner.write_report(report, out, cfg.formats)
            if "csv" in cfg.formats:
                for name, sol in profiles.items():
                    p = os.path.join(out, f"gheat_profile_{runner._safe(name)}.csv")
                    sol.write_csv(p)
                    written.append(p)
            for row in report.tables["gheat"]:
                print(f"u(T,0) [{row['payoff']}] = {row['u_T_0']:.10g}")
    except (ConfigError, CflError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _summarize(report, written)
    return report.exit_status


if __name__ == "__main__":
    sys.exit(main())
