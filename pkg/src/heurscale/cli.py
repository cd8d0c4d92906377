"""Command-line interface: gen-data, sweep, report, verify.

Every command resolves its flags (plus an optional ``--config`` file of
``key=value`` lines) into a validated :class:`RunConfig` before doing any work.
Progress goes to stdout as tab-separated lines.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import datasets, report, verify
from .config import PRESETS, RunConfig, read_config_file, resolve
from .domains import DOMAIN_NAMES
from .errors import HeurscaleError
from .experiment import run_scaling_sweep, run_threshold_sweep, write_manifest


def _print(line: str) -> None:
    print(line, flush=True)


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="master seed (default 0)")
    common.add_argument("--profile", choices=("desk", "paper"), help="settings profile (default desk)")
    common.add_argument("--out", help="output directory (default ./runs)")
    common.add_argument("--config", help="file of key=value lines; flags take precedence")

    p = argparse.ArgumentParser(prog="heurscale", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", parents=[common], help="generate a labelled dataset file")
    g.add_argument("--domain", choices=DOMAIN_NAMES)
    g.add_argument("--n", type=int, help="problem size")
    g.add_argument("--count", type=int)
    g.add_argument("--max-walk", dest="max_walk", type=int, help="pancake: longest random walk (default 2n)")
    g.add_argument("--workers", type=int)
    g.add_argument("--csv", action="store_true", default=None, help="also export CSV")

    s = sub.add_parser("sweep", parents=[common], help="minimal fitting size across problem sizes")
    s.add_argument("--domain", choices=DOMAIN_NAMES)
    s.add_argument("--sizes", help='e.g. "5-7" or "4,6,8"')
    s.add_argument("--arch", choices=("fixed_depth", "fixed_width"))
    s.add_argument("--loss", choices=("l_eps", "mse", "cross_entropy", "scaled"))
    s.add_argument("--c", type=float, help="l_eps smoothness")
    s.add_argument("--criterion", choices=("exact_l0", "threshold"))
    s.add_argument("--thresholds", help="comma-separated; several values run a threshold sweep")
    s.add_argument("--preset", choices=sorted(PRESETS))
    s.add_argument("--train-count", dest="train_count", type=int)
    s.add_argument("--test-count", dest="test_count", type=int)
    s.add_argument("--restarts", type=int)
    s.add_argument("--epochs", type=int)
    s.add_argument("--batch-size", dest="batch_size", type=int)
    s.add_argument("--lr", type=float)
    s.add_argument("--max-walk", dest="max_walk", type=int)
    s.add_argument("--cap", type=int, help="largest size tried before giving up")
    s.add_argument("--workers", type=int, help="parallel restarts")

    r = sub.add_parser("report", parents=[common], help="charts and tables from a results CSV")
    r.add_argument("--results", help="results CSV (default <out>/results.csv)")

    v = sub.add_parser("verify", parents=[common], help="oracle cross-checks")
    v.add_argument("--domain", choices=DOMAIN_NAMES)
    v.add_argument("--n", type=int)
    v.add_argument("--instances", type=int, help="random TSP instances per size (default 50)")
    return p


def _summary(ds) -> str:
    y = ds.labels
    return f"count={len(ds)}\tlabel_min={y.min():g}\tlabel_mean={y.mean():.4g}\tlabel_max={y.max():g}"


def cmd_gen_data(cfg: RunConfig) -> int:
    if cfg.domain is None or cfg.n is None or cfg.count is None:
        raise ValueError("gen-data needs --domain, --n and --count")
    ds = datasets.generate(cfg.domain, cfg.n, cfg.count, cfg.seed, cfg.max_walk, cfg.workers or 1)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{cfg.domain}_n{cfg.n}_c{cfg.count}_s{cfg.seed}.hslb"
    datasets.save(ds, path)
    _print(f"wrote\t{path}")
    if cfg.csv:
        csv_path = path.with_suffix(".csv")
        datasets.export_csv(ds, csv_path)
        _print(f"wrote\t{csv_path}")
    _print(_summary(ds))
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    sweep, thresholds = cfg.sweep_configs()
    out = Path(cfg.out)
    write_manifest(out, cfg, {"sweep": asdict(sweep), "thresholds": list(thresholds)})
    if len(thresholds) > 1:
        records = run_threshold_sweep(sweep, thresholds, out, progress=_print)
    else:
        records = run_scaling_sweep(sweep, out, progress=_print)
    bad = [r for r in records if r.status == "error"]
    _print(f"done\trecords={len(records)}\terrors={len(bad)}\tresults={out / 'results.csv'}")
    return 0


def cmd_report(cfg: RunConfig) -> int:
    results = Path(cfg.results) if cfg.results else Path(cfg.out) / "results.csv"
    for path in report.make_report(results, Path(cfg.out) / "report"):
        _print(f"wrote\t{path}")
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    checks = verify.run_checks(cfg.domain, cfg.n, cfg.instances or 50, cfg.seed)
    for c in checks:
        _print(c.line())
    failed = [c for c in checks if not c.passed]
    _print("OK" if not failed else f"FAILED\t{len(failed)} of {len(checks)} checks")
    return 1 if failed else 0


COMMANDS = {"gen-data": cmd_gen_data, "sweep": cmd_sweep, "report": cmd_report, "verify": cmd_verify}


def build_config(argv=None) -> RunConfig:
    parser = _parser()
    args = parser.parse_args(argv)
    flags = vars(args)
    command = flags.pop("command")
    config_path = flags.pop("config")
    try:
        file_values = read_config_file(config_path) if config_path else {}
        return resolve(command, file_values, flags)
    except (OSError, ValueError, TypeError) as exc:
        parser.error(str(exc))


def main(argv=None) -> int:
    cfg = build_config(argv)
    np.seterr(over="ignore")
    try:
        return COMMANDS[cfg.command](cfg)
    except (ValueError, OSError, HeurscaleError) as exc:
        print(f"heurscale {cfg.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
