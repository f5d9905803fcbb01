"""Seeded Monte Carlo orchestration across volumes x controllers x runs, and CSV emission.

Per-run seeds are ``base_seed + volume_index * runs_per_cell + run_index``
so every controller sees the same opposing-traffic stream for a given
(volume, run) pair and any single run can be reproduced in isolation.
Results are merged in canonical (volume, controller, seed) order, so
parallel and serial execution emit byte-identical files.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .config import ScenarioConfig
from .controllers import make_controller
from .metrics import (
    METRICS_HEADER,
    SUMMARY_HEADER,
    BrakeDetectorParams,
    RunRecord,
    aggregate,
    detect_hard_brakes,
    metrics_row,
    summary_rows,
)
from .world import World

WORKERS_ENV = "TURNSIM_WORKERS"
TRACE_DECIMATION = 0.5  # seconds between emitted progression rows


@dataclass(frozen=True)
class RunDescriptor:
    volume: float
    controller: str
    run_index: int
    seed: int

    @property
    def scenario(self) -> str:
        return f"v{self.volume:g}_{self.controller}"


def run_descriptors(config: ScenarioConfig) -> list:
    out = []
    for vi, volume in enumerate(config.volumes):
        for controller in config.controllers:
            for ri in range(config.runs_per_cell):
                seed = config.base_seed + vi * config.runs_per_cell + ri
                out.append(RunDescriptor(volume, controller, ri, seed))
    return out


def run_single(config: ScenarioConfig, volume: float, controller_kind: str, seed: int):
    """Execute one world and reduce it to a RunRecord plus its traces."""
    world = World(config, volume=volume, seed=seed)
    world.controller = make_controller(controller_kind, config)
    world.run()

    detector = BrakeDetectorParams(
        threshold_decel=config.detector.threshold_decel,
        min_duration=config.detector.min_duration,
        release_decel=config.detector.release_decel,
    )
    brake_count, _ = detect_hard_brakes([row[3] for row in world.follower_trace], config.dt, detector)

    tt_subject = world.subject_done_time if world.subject_done_time is not None else math.nan
    if world.follower_done_time is not None:
        tt_follower = world.follower_done_time - config.follower.start_offset
    else:
        tt_follower = math.nan
    record = RunRecord(
        volume=volume,
        controller=controller_kind,
        seed=seed,
        brake_events=brake_count,
        tt_subject=tt_subject,
        tt_follower=tt_follower,
        collision=world.collided,
        co_occupancy=world.co_occupancy_count,
        same_lane_collisions=world.same_lane_collisions,
        timeout=world.timeout,
        follower_dwell=world.follower_dwell,
    )
    annotations = [
        (t, vid, kind if kind != "decision" else str(detail))
        for t, kind, vid, detail in world.events
        if kind in ("decision", "turn_start", "hard_brake_onset", "conflict_entry", "conflict_exit", "collision")
    ]
    traces = {
        "subject": _decimate(world.subject_trace, config.dt),
        "follower": _decimate(world.follower_trace, config.dt),
        "annotations": annotations,
    }
    return record, traces


def _decimate(trace, dt):
    if not trace:
        return []
    stride = max(1, round(TRACE_DECIMATION / dt))
    out = trace[::stride]
    if trace and out[-1] is not trace[-1]:
        out.append(trace[-1])
    return out


def _run_task(args):
    config, desc = args
    record, traces = run_single(config, desc.volume, desc.controller, desc.seed)
    return desc, record, traces


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {env!r}") from exc
        return max(1, n)
    return max(1, min(os.cpu_count() or 1, 8))


def run_suite(config: ScenarioConfig, out_dir, workers: int | None = None, write_traces: bool = True):
    """Execute the full grid and write metrics.csv plus per-run progression traces."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    descs = run_descriptors(config)
    workers = workers if workers is not None else default_workers()

    results = {}
    if workers <= 1 or len(descs) <= 1:
        for desc in descs:
            d, record, traces = _run_task((config, desc))
            results[(d.volume, d.controller, d.seed)] = (d, record, traces)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for d, record, traces in pool.map(_run_task, [(config, d) for d in descs], chunksize=4):
                results[(d.volume, d.controller, d.seed)] = (d, record, traces)

    ordered = [results[k] for k in sorted(results.keys(), key=lambda k: (k[0], k[1], k[2]))]
    records = [r for _, r, _ in ordered]

    lines = [METRICS_HEADER]
    lines.extend(metrics_row(r) for r in records)
    (out / "metrics.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    if write_traces:
        for desc, _, traces in ordered:
            _write_trace(out, desc, traces)
    return records


def _write_trace(out: Path, desc: RunDescriptor, traces) -> None:
    """Decimated progression rows; the decision column carries controller
    notes and events that occurred since the previous row of that vehicle."""
    rows = ["time,vehicle_id,lane,station,speed,accel,decision"]
    notes = {0: {}, -1: {}}
    for t, vid, text in traces.get("annotations", []):
        if vid in notes:
            notes[vid].setdefault(t, []).append(text.replace(",", ";"))
    for vid, key in ((0, "subject"), (-1, "follower")):
        prev_t = -1.0
        for t, station, speed, accel in traces[key]:
            pending = [
                text
                for nt in sorted(notes[vid])
                if prev_t < nt <= t
                for text in notes[vid][nt]
            ]
            decision = "|".join(pending)
            rows.append(f"{t:.1f},{vid},major_dir1_lane1,{station:.3f},{speed:.3f},{accel:.3f},{decision}")
            prev_t = t
    path = out / f"trace_{desc.scenario}_{desc.seed}.csv"
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")


def load_metrics(path) -> list:
    """Read a metrics.csv back into RunRecord rows."""
    lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
    if not lines or lines[0] != METRICS_HEADER:
        raise ValueError(f"{path} is not a turnsim metrics file")
    records = []
    for line in lines[1:]:
        parts = line.split(",")
        records.append(
            RunRecord(
                volume=float(parts[0]),
                controller=parts[1],
                seed=int(parts[2]),
                brake_events=int(parts[3]),
                tt_subject=float(parts[4]),
                tt_follower=float(parts[5]),
                collision=bool(int(parts[6])),
                co_occupancy=int(parts[7]),
                same_lane_collisions=int(parts[8]),
                timeout=bool(int(parts[9])),
                follower_dwell=float(parts[10]),
            )
        )
    return records


def compare(config: ScenarioConfig, out_dir, workers: int | None = None):
    """Run (or reuse) the suite and write summary.csv and report.txt."""
    if len(config.controllers) < 2:
        raise ValueError("compare needs at least two controllers configured")
    out = Path(out_dir)
    metrics_path = out / "metrics.csv"
    if metrics_path.exists():
        records = load_metrics(metrics_path)
    else:
        records = run_suite(config, out, workers=workers)

    stats = aggregate(records)
    lines = [SUMMARY_HEADER]
    lines.extend(summary_rows(stats))
    (out / "summary.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    report = _report_lines(stats, config)
    (out / "report.txt").write_text("\n".join(report) + "\n", encoding="utf-8")
    return stats


def _report_lines(stats, config: ScenarioConfig) -> list:
    lines = ["situation-aware controller vs. baselines", "=" * 42]
    for volume in config.volumes:
        sa = stats.get((volume, "situation_aware"))
        if sa is None:
            continue
        lines.append(f"opposing volume {volume:g} vphpln:")
        for base in ("base_av_1", "base_av_2"):
            red = sa.reductions.get(base)
            if red is None:
                continue

            def fmt(x):
                return "n/a" if x is None else f"{x:.1f}%"

            lines.append(
                f"  vs {base}: brake events {fmt(red['brake_events'])}, "
                f"subject travel time {fmt(red['tt_subject'])}, "
                f"follower travel time {fmt(red['tt_follower'])}"
            )
    return lines
