"""Config-driven experiment runner writing CSV tables and a run manifest.

Usage: ottoforge <config> [--jobs N] [--output DIR] [--dt X] [--t-tilde X]
[--audit].  Each experiment writes <output>/results.csv and
<output>/manifest.txt; identical configs always reproduce byte-identical
CSV output.
"""
from __future__ import annotations

import argparse
import csv
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig, parse_config_file
from .disorder import disorder_averaged_efficiency, find_t_s
from .engine import ideal_efficiency, initial_state, run_cycle, run_engine

FIRST_LAW_TOL = 1e-8

_CYCLE_COLUMNS = ["q1", "w1", "q2", "w2", "s1", "s2", "s3", "eta"]
_AUDIT_COLUMNS = ["q1", "w1", "q2", "w2", "first_law_residual"]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def emit_csv(columns, rows, path) -> None:
    """Write a rectangular table as RFC-4180 CSV with 17-significant-digit floats."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(
                    f"row of width {len(row)} does not match {len(columns)} columns"
                )
            writer.writerow([_fmt(v) for v in row])


def _audit_values(record) -> list:
    residual = record.first_law_residual
    if residual > FIRST_LAW_TOL:
        raise RuntimeError(
            f"cycle {record.cycle_index}: first-law residual {residual:.3e} exceeds "
            f"{FIRST_LAW_TOL:g}"
        )
    return [record.q1, record.w1, record.q2, record.w2, residual]


def _map_points(fn, points, jobs):
    if jobs <= 1 or len(points) <= 1:
        return [fn(p) for p in points]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, points))


class _PointRunner:
    """Picklable per-grid-point worker; results come back in grid order."""

    def __init__(self, config: RunConfig):
        self.config = config

    def __call__(self, point):
        try:
            return self._run(point)
        except RuntimeError as exc:
            raise RuntimeError(
                f"experiment '{self.config.experiment}' at grid point {point}: {exc}"
            ) from exc

    def _run(self, point):
        raise NotImplementedError


class _SweepTimeRunner(_PointRunner):
    def _run(self, t):
        cfg = self.config
        run = run_engine(
            replace(cfg.engine, stroke_time=float(t)), cfg.cycles, stop_at_limit=False
        )
        rows = []
        for record in run.cycles:
            if cfg.cycle is not None and record.cycle_index != cfg.cycle:
                continue
            row = [float(t), record.cycle_index, record.eta]
            if cfg.audit:
                row += _audit_values(record)
            rows.append(row)
        return rows


class _LimitCycleRunner(_PointRunner):
    def _run(self, t):
        cfg = self.config
        run = run_engine(replace(cfg.engine, stroke_time=float(t)), cfg.max_cycles)
        last = run.cycles[-1]
        return [[float(t), run.limit_cycle_index, last.eta, len(run.cycles)]]


class _TransverseRunner(_PointRunner):
    def _run(self, lam):
        cfg = self.config
        spec = replace(cfg.engine, variant="transverse", transverse_lambda=float(lam))
        target = cfg.cycle or 1
        run = run_engine(spec, target, stop_at_limit=False)
        record = run.cycles[target - 1]
        row = [float(lam), record.cycle_index, record.eta]
        if cfg.audit:
            row += _audit_values(record)
        return [row]


class _AuxRunner(_PointRunner):
    def _run(self, point):
        n, t = point
        cfg = self.config
        spec = replace(cfg.engine, variant="aux", aux_n=float(n), stroke_time=float(t))
        target = cfg.cycle or 1
        run = run_engine(spec, target, stop_at_limit=False)
        record = run.cycles[target - 1]
        row = [float(n), float(t), record.cycle_index, record.eta]
        if cfg.audit:
            row += _audit_values(record)
        return [row]


class _DisorderRunner(_PointRunner):
    def _run(self, delta):
        cfg = self.config
        dist = replace(cfg.disorder, delta=float(delta))
        result = disorder_averaged_efficiency(cfg.engine, dist)
        row = [float(delta), result.eta_dis]
        if cfg.audit:
            residual = max(rec.first_law_residual for _, _, _, rec in result.realizations)
            if residual > FIRST_LAW_TOL:
                raise RuntimeError(
                    f"first-law residual {residual:.3e} exceeds {FIRST_LAW_TOL:g}"
                )
            row.append(residual)
        return [row]


class _TsSearchRunner(_PointRunner):
    def _run(self, delta):
        cfg = self.config
        dist = replace(cfg.disorder, delta=float(delta))
        t_s = find_t_s(
            cfg.engine,
            dist,
            tolerance=cfg.ts_tolerance,
            grid_step=cfg.ts_grid_step,
            t_max=cfg.ts_max_time,
        )
        return [[float(delta), t_s, int(t_s is not None)]]


def _run_experiment(config: RunConfig):
    """Dispatch one experiment; returns (columns, rows, summary dict)."""
    cfg = config
    summary = {"eta_ideal": ideal_efficiency(cfg.engine)}
    audit_cols = _AUDIT_COLUMNS if cfg.audit else []

    if cfg.experiment == "cycle":
        record = run_cycle(initial_state(cfg.engine), cfg.engine)
        columns = ["t_tilde", "cycle"] + _CYCLE_COLUMNS + ["is_engine"]
        rows = [
            [cfg.engine.stroke_time, record.cycle_index]
            + [getattr(record, name) for name in _CYCLE_COLUMNS]
            + [record.is_engine]
        ]
        summary["eta"] = record.eta
        return columns, rows, summary

    if cfg.experiment == "sweep-time":
        points = list(cfg.grids["t_tilde"].values())
        chunks = _map_points(_SweepTimeRunner(cfg), points, cfg.jobs)
        return ["t_tilde", "cycle", "eta"] + audit_cols, _flatten(chunks), summary

    if cfg.experiment == "limit-cycle":
        points = list(cfg.grids["t_tilde"].values())
        chunks = _map_points(_LimitCycleRunner(cfg), points, cfg.jobs)
        rows = _flatten(chunks)
        indices = [row[1] for row in rows if row[1] is not None]
        if indices:
            summary["limit_cycle_index_min"] = min(indices)
            summary["limit_cycle_index_max"] = max(indices)
        return ["t_tilde", "limit_cycle_index", "eta_limit", "cycles_run"], rows, summary

    if cfg.experiment == "transverse":
        points = list(cfg.grids["lambda"].values())
        chunks = _map_points(_TransverseRunner(cfg), points, cfg.jobs)
        baseline = replace(cfg.engine, variant="baseline", transverse_lambda=None)
        target = cfg.cycle or 1
        run = run_engine(baseline, target, stop_at_limit=False)
        summary["eta_nofield"] = run.cycles[target - 1].eta
        return ["lambda", "cycle", "eta"] + audit_cols, _flatten(chunks), summary

    if cfg.experiment == "aux":
        n_values = list(cfg.grids["n"].values())
        t_values = (
            list(cfg.grids["t_tilde"].values())
            if "t_tilde" in cfg.grids
            else [cfg.engine.stroke_time]
        )
        points = [(n, t) for n in n_values for t in t_values]
        chunks = _map_points(_AuxRunner(cfg), points, cfg.jobs)
        return ["n", "t_tilde", "cycle", "eta"] + audit_cols, _flatten(chunks), summary

    if cfg.experiment == "disorder":
        points = list(cfg.grids["delta"].values())
        chunks = _map_points(_DisorderRunner(cfg), points, cfg.jobs)
        columns = ["delta", "eta_dis"] + (["first_law_residual_max"] if cfg.audit else [])
        return columns, _flatten(chunks), summary

    if cfg.experiment == "ts-search":
        points = list(cfg.grids["delta"].values())
        chunks = _map_points(_TsSearchRunner(cfg), points, cfg.jobs)
        rows = _flatten(chunks)
        if rows and rows[0][1] is not None:
            summary["t_s_first"] = rows[0][1]
        return ["delta", "t_s", "reached"], rows, summary

    raise ConfigError(f"unknown experiment {cfg.experiment!r}")


def _flatten(chunks):
    return [row for chunk in chunks for row in chunk]


def write_manifest(path, config: RunConfig, summary: dict, wall_time: float, rows: int) -> None:
    lines = [
        f"ottoforge_version = {__version__}",
        f"experiment = {config.experiment}",
        f"dt = {config.engine.dt:g}",
        f"rows = {rows}",
    ]
    for key in sorted(summary):
        value = summary[key]
        lines.append(f"{key} = {_fmt(value)}")
    lines.append(f"wall_time_s = {wall_time:.3f}")
    lines.append("")
    lines.append("# configuration echo")
    lines.extend(config.echo().splitlines())
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def run(config: RunConfig) -> Path:
    """Execute one experiment, writing results.csv and manifest.txt."""
    started = time.perf_counter()
    outdir = Path(config.output)
    outdir.mkdir(parents=True, exist_ok=True)
    columns, rows, summary = _run_experiment(config)
    emit_csv(columns, rows, outdir / "results.csv")
    write_manifest(
        outdir / "manifest.txt", config, summary, time.perf_counter() - started, len(rows)
    )
    return outdir


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ottoforge",
        description="Finite-time quantum Otto engine experiments from a config file.",
    )
    parser.add_argument("config", help="path to the experiment configuration")
    parser.add_argument("--jobs", type=int, default=None, help="worker pool size")
    parser.add_argument("--output", default=None, help="output directory override")
    parser.add_argument("--dt", type=float, default=None, help="integrator step override")
    parser.add_argument("--t-tilde", type=float, default=None, help="stroke duration override")
    parser.add_argument("--audit", action="store_true", help="emit and check ledger columns")
    args = parser.parse_args(argv)

    try:
        config = parse_config_file(args.config)
        if args.output is not None:
            config = replace(config, output=args.output)
        if args.jobs is not None:
            config = replace(config, jobs=args.jobs)
        if args.audit:
            config = replace(config, audit=True)
        if args.dt is not None:
            config = replace(config, engine=replace(config.engine, dt=args.dt))
        if args.t_tilde is not None:
            config = replace(
                config, engine=replace(config.engine, stroke_time=args.t_tilde)
            )
        outdir = run(config)
    except (ConfigError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {outdir / 'results.csv'} and {outdir / 'manifest.txt'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
