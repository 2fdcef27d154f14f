"""Command-line front end.

    monesc example1 --z0 2 --out runs/e1
    monesc cart --moving --out runs/cart
    monesc run --config my.ini --out runs/custom --set controller.r=0.05
    monesc sweep --preset example1 --param init.z0 --values 2,4,7 --out runs/sweep
    monesc verify

Output is line oriented (``key=value``). Exit status: 0 success, 1 failed
verification or a failed sweep member, 2 invalid configuration, 3 divergence.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import acceptance
from .config import ConfigError, ScenarioConfig, apply_overrides, load_config, set_value, validate
from .scenario import preset_cart, preset_example1, write_artifacts
from .simcore import SimulationFault, TrajectoryDiverged, run_simulation

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_DIVERGED = 0, 1, 2, 3
PRESETS = ("example1", "cart", "cart-moving")
SUMMARY_FIELDS = (
    "value",
    "status",
    "first_entry_time",
    "terminal_amplitude",
    "switch_count",
    "max_abs_e",
    "z_band",
    "error",
)

log = logging.getLogger("monesc")


def _emit(key: str, value) -> None:
    print(f"{key}={value}", flush=True)


def _preset(name: str, z0: float | None = None) -> ScenarioConfig:
    if name == "example1":
        return preset_example1(4.0 if z0 is None else z0)
    if name == "cart":
        return preset_cart(False)
    if name == "cart-moving":
        return preset_cart(True)
    raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


def _finalise(cfg: ScenarioConfig, args) -> ScenarioConfig:
    cfg = apply_overrides(cfg, args.set)
    if args.seed is not None:
        cfg = set_value(cfg, "noise.seed", str(args.seed))
    return cfg


def _check(cfg: ScenarioConfig) -> bool:
    problems = validate(cfg)
    for p in problems:
        _emit("violation", p)
    return not problems


def execute(cfg: ScenarioConfig, out_dir) -> int:
    """Run one scenario and write its artifacts. Returns an exit status."""
    if not _check(cfg):
        return EXIT_INVALID
    out = Path(out_dir)
    try:
        trace = run_simulation(cfg)
    except TrajectoryDiverged as exc:
        write_artifacts(out, cfg, exc.trace, error=str(exc))
        _emit("status", "diverged")
        _emit("error", exc)
        _emit("trace", out / "trace.csv")
        return EXIT_DIVERGED
    except SimulationFault as exc:
        _emit("status", "fault")
        _emit("error", exc)
        return EXIT_DIVERGED
    metrics = write_artifacts(out, cfg, trace)
    _emit("status", "ok")
    _emit("trace", out / "trace.csv")
    for k in sorted(metrics):
        _emit(f"metric.{k}", metrics[k])
    return EXIT_OK


def _sweep_one(job: tuple[ScenarioConfig, str, str]) -> dict:
    cfg, value, out_dir = job
    row = {"value": value}
    problems = validate(cfg)
    if problems:
        row.update(status="invalid", error="; ".join(problems))
        return row
    try:
        trace = run_simulation(cfg)
        metrics = write_artifacts(out_dir, cfg, trace)
        row.update(status="ok", **metrics)
    except TrajectoryDiverged as exc:
        write_artifacts(out_dir, cfg, exc.trace, error=str(exc))
        row.update(status="diverged", error=str(exc))
    except Exception as exc:  # one bad member must not sink the sweep
        row.update(status="error", error=f"{type(exc).__name__}: {exc}")
    return row


def sweep(base: ScenarioConfig, param: str, values: list[str], out_dir, workers: int | None = None) -> list[dict]:
    """Run one scenario per value concurrently and write summary.csv."""
    out = Path(out_dir)
    jobs = []
    for v in values:
        cfg = set_value(base, param, v)
        cfg = replace(cfg, name=f"{base.name}-{param}={v}")
        jobs.append((cfg, v, str(out / f"{param}={v}")))
    workers = workers or min(len(jobs), os.cpu_count() or 1)
    if workers <= 1:
        rows = [_sweep_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in SUMMARY_FIELDS})
    return rows


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="monesc", description="Extremum seeking with monitoring functions.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_default="runs"):
        sp.add_argument("--out", default=out_default, help="output directory")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override, e.g. controller.r=0.05")
        sp.add_argument("--seed", type=int, default=None, help="noise seed")

    sp = sub.add_parser("run", help="run a scenario file")
    sp.add_argument("--config", required=True)
    common(sp)

    sp = sub.add_parser("example1", help="two-bump normal-form example")
    sp.add_argument("--z0", type=float, default=4.0)
    common(sp)

    sp = sub.add_parser("cart", help="light-seeking servo cart")
    sp.add_argument("--moving", action="store_true", help="use the moving-source schedule")
    common(sp)

    sp = sub.add_parser("sweep", help="run one scenario per parameter value")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--config")
    src.add_argument("--preset", choices=PRESETS)
    sp.add_argument("--param", required=True, help="dotted key, e.g. plant.mu")
    sp.add_argument("--values", required=True, help="comma-separated values")
    sp.add_argument("--workers", type=int, default=None)
    common(sp)

    sp = sub.add_parser("verify", help="run the acceptance suite")
    common(sp, out_default=None)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return execute(_finalise(load_config(args.config), args), args.out)
        if args.command == "example1":
            return execute(_finalise(_preset("example1", args.z0), args), args.out)
        if args.command == "cart":
            return execute(_finalise(_preset("cart-moving" if args.moving else "cart"), args), args.out)
        if args.command == "sweep":
            values = [v.strip() for v in args.values.split(",") if v.strip()]
            if not values:
                _emit("violation", "empty value list")
                return EXIT_INVALID
            base = load_config(args.config) if args.config else _preset(args.preset)
            base = _finalise(base, args)
            # reject unknown keys and invalid values before spawning work
            if not _check(set_value(base, args.param, values[0])):
                return EXIT_INVALID
            rows = sweep(base, args.param, values, args.out, args.workers)
            for r in rows:
                _emit(f"run.{args.param}={r['value']}", r["status"])
            _emit("summary", Path(args.out) / "summary.csv")
            return EXIT_OK if all(r["status"] == "ok" for r in rows) else EXIT_FAIL
        if args.command == "verify":
            overrides = list(args.set)
            if args.seed is not None:
                overrides.append(f"noise.seed={args.seed}")
            lines: list[str] = []

            def report(line: str) -> None:
                lines.append(line)
                print(line, flush=True)

            results = acceptance.run_all(overrides, report)
            passed = sum(r.passed for r in results)
            report(f"summary {passed}/{len(results)} criteria passed")
            if args.out:
                Path(args.out).mkdir(parents=True, exist_ok=True)
                (Path(args.out) / "verify.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
            return EXIT_OK if passed == len(results) else EXIT_FAIL
    except ConfigError as exc:
        _emit("violation", exc)
        return EXIT_INVALID
    return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
