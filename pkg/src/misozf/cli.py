"""Command line interface.

    misozf run scenario.cfg --out results.csv --workers 4
    misozf preset fig4 --quick --out fig4.csv
    misozf verify
    misozf mse-oracle scenario.cfg
    misozf columns fig4.csv --estimator LS --precoder ZF --metric sum_rate
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .errors import MisoError
from .harness.config import expand_pilot_sweep, format_config, load_config
from .harness.io import diagnostics_path, gnuplot_columns, read_csv, write_csv, write_diagnostics
from .harness.presets import PRESET_NAMES, figure_preset, quick
from .harness.sweep import mse_oracle_table, run_power_sweep


def _outputs_for(out: Path, configs):
    """One CSV per pilot length when a config expands into several runs."""
    if len(configs) == 1:
        return [out]
    return [out.with_name(f"{out.stem}_tdl{c.T_dl}{out.suffix}") for c in configs]


def _run_configs(cfg, out: Path, workers: int):
    configs = expand_pilot_sweep(cfg)
    for c, path in zip(configs, _outputs_for(out, configs)):
        result = run_power_sweep(c, workers=workers)
        write_csv(result, path)
        diag = diagnostics_path(path)
        write_diagnostics(result, diag)
        failed = sum(d.rank_deficient for d in result.diagnostics)
        print(f"wrote {path} ({len(result.rows)} rows, T_dl={c.T_dl}); "
              f"{failed} rank-deficient trials logged in {diag}")


def cmd_run(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    _run_configs(cfg, Path(args.out), args.workers)


def cmd_preset(args):
    cfg = figure_preset(args.name)
    if args.quick:
        cfg = quick(cfg)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if args.dump_config:
        sys.stdout.write(format_config(cfg))
        return
    _run_configs(cfg, Path(args.out or f"{args.name}.csv"), args.workers)


def cmd_verify(args):
    from .verify import run_all

    checks = run_all(args.seed)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}")
    n_fail = sum(not c.passed for c in checks)
    print(f"{len(checks) - n_fail}/{len(checks)} checks passed")
    return 1 if n_fail else 0


def cmd_mse_oracle(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    print(f"{'power_db':>9} {'estimator':>9} {'closed_form':>14} {'monte_carlo':>14} {'stderr':>11} {'rel_diff':>9}")
    for c in expand_pilot_sweep(cfg):
        if cfg.pilot_sweep:
            print(f"# T_dl = {c.T_dl}")
        for r in mse_oracle_table(c):
            rel = (r.monte_carlo - r.closed_form) / r.closed_form if r.closed_form else float("nan")
            print(f"{r.power_db:9.1f} {r.estimator:>9} {r.closed_form:14.6g} {r.monte_carlo:14.6g} {r.stderr:11.3g} {rel:9.2%}")


def cmd_columns(args):
    sys.stdout.write(gnuplot_columns(read_csv(args.csv), args.estimator, args.precoder, args.metric))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="misozf", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the power sweep described by a config file")
    p.add_argument("config")
    p.add_argument("--out", default="results.csv")
    p.add_argument("--seed", type=int, help="override master_seed")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("preset", help="run a figure preset")
    p.add_argument("name", choices=PRESET_NAMES)
    p.add_argument("--out", help="CSV path (default <name>.csv)")
    p.add_argument("--quick", action="store_true", help="20 covariance x 50 channel draws")
    p.add_argument("--seed", type=int, help="override master_seed")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--dump-config", action="store_true", help="print the preset as a config file and exit")
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("verify", help="check the analytic identities on random draws")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("mse-oracle", help="closed-form vs Monte-Carlo MSE table")
    p.add_argument("config")
    p.add_argument("--seed", type=int, help="override master_seed")
    p.set_defaults(func=cmd_mse_oracle)

    p = sub.add_parser("columns", help="extract one curve from a result CSV for gnuplot")
    p.add_argument("csv")
    p.add_argument("--estimator", required=True)
    p.add_argument("--precoder", required=True)
    p.add_argument("--metric", default="sum_rate", choices=("sum_rate", "mse"))
    p.set_defaults(func=cmd_columns)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args) or 0
    except (MisoError, OSError) as exc:
        print(f"misozf: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
