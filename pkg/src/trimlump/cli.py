"""Command line entry point: ``trimlump run <config>`` and ``trimlump sweep <config> ...``.

Exit codes: 0 success, 1 runtime failure (or a failed sweep member),
2 invalid configuration, 3 explicit time stepping diverged.  On failure a
machine-readable ``error.json`` is written to the output directory.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .dynamics import StabilityError
from .experiment import (ConfigError, ExperimentConfig, member_dir, parse_values, run_experiment,
                         sweep_member, write_manifest)

log = logging.getLogger("trimlump")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_UNSTABLE = 0, 1, 2, 3
SUMMARY_COLUMNS = ("value", "lambda_min_spurious", "lambda_max", "dt_critical", "max_l2_error", "steps")


def _error_report(out: Path | None, kind: str, message: str, **extra) -> None:
    report = {"error": kind, "message": message, **extra}
    print(json.dumps(report), file=sys.stderr)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "error.json", "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")


def execute(cfg: ExperimentConfig, out: Path) -> tuple[int, dict]:
    """Run one experiment, mapping failures to exit codes."""
    try:
        res = run_experiment(cfg, out)
    except ConfigError as exc:
        _error_report(out, "config", str(exc))
        return EXIT_CONFIG, {}
    except StabilityError as exc:
        _error_report(out, "stability", str(exc), step=exc.step, time=exc.time)
        return EXIT_UNSTABLE, {}
    except Exception as exc:  # noqa: BLE001 - reported, not swallowed
        log.exception("run failed")
        _error_report(out, type(exc).__name__, str(exc))
        return EXIT_FAILED, {}
    return EXIT_OK, res.summary


def _member(args):
    cfg, out = args
    return execute(cfg, out)


def _load(path, out, seed) -> ExperimentConfig:
    cfg = ExperimentConfig.load(path)
    kw = {}
    if out is not None:
        kw["out"] = str(out)
    if seed is not None:
        kw["seed"] = seed
    return cfg.replace(**kw) if kw else cfg


def cmd_run(ns) -> int:
    try:
        cfg = _load(ns.config, ns.out, ns.seed)
    except ConfigError as exc:
        _error_report(Path(ns.out) if ns.out else None, "config", str(exc))
        return EXIT_CONFIG
    code, summary = execute(cfg, Path(cfg.out))
    if code == EXIT_OK:
        log.info("wrote %s: %s", cfg.out, summary)
    return code


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.17g}"
    return str(v)


def cmd_sweep(ns) -> int:
    out = Path(ns.out) if ns.out else None
    try:
        cfg = _load(ns.config, ns.out, ns.seed)
        out = Path(cfg.out)
        values = parse_values(ns.values)
        members = [(v, sweep_member(cfg, ns.param, v)) for v in values]
    except ConfigError as exc:
        _error_report(out, "config", str(exc))
        return EXIT_CONFIG
    jobs = [(m.replace(out=str(out / member_dir(ns.param, v))), out / member_dir(ns.param, v))
            for v, m in members]
    if ns.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=ns.threads) as pool:
            results = list(pool.map(_member, jobs))
    else:
        results = [_member(j) for j in jobs]

    out.mkdir(parents=True, exist_ok=True)
    lines = [",".join(SUMMARY_COLUMNS + ("status",))]
    failed = False
    for (v, _), (code, summary) in zip(members, results):
        status = "ok" if code == EXIT_OK else f"failed({code})"
        failed |= code != EXIT_OK
        row = [v] + [_fmt(summary.get(c, math.nan)) for c in SUMMARY_COLUMNS[1:]] + [status]
        lines.append(",".join(row))
    with open(out / "summary.csv", "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    files = ["summary.csv"] + [str(Path(member_dir(ns.param, v)) / "manifest.json")
                               for (v, _), (code, _) in zip(members, results) if code == EXIT_OK]
    write_manifest(out, files, {"param": ns.param, "values": values})
    return EXIT_FAILED if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="trimlump", description="Trimmed spline mass-lumping experiments.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="YAML experiment configuration")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="random seed (overrides the config)")
        p.add_argument("--threads", type=int, default=1, help="parallel sweep members")

    common(sub.add_parser("run", help="run one experiment"))
    sp = sub.add_parser("sweep", help="run an experiment for several values of one parameter")
    common(sp)
    sp.add_argument("--param", required=True, choices=["eps", "p", "N", "gamma", "mass"])
    sp.add_argument("--values", required=True, help="comma-separated values, e.g. 1e-4,1e-5,1e-6")
    return ap


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if ns.threads < 1:
        _error_report(None, "config", "--threads must be >= 1")
        return EXIT_CONFIG
    return cmd_run(ns) if ns.command == "run" else cmd_sweep(ns)


if __name__ == "__main__":
    sys.exit(main())
