"""Static SVG figures from a results directory: brake reductions, travel-time boxes, progressions.

Rendering is pinned for byte-identical output: fixed hash salt, no date
metadata, and data drawn in canonical order.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .experiments import load_metrics  # noqa: E402
from .metrics import aggregate  # noqa: E402

_SVG_OPTS = {"metadata": {"Date": None}}

_CONTROLLER_LABELS = {
    "base_av_1": "base AV #1 (speed limit)",
    "base_av_2": "base AV #2 (scheduled)",
    "situation_aware": "situation-aware CAV",
}
_CONTROLLER_COLORS = {
    "base_av_1": "#888888",
    "base_av_2": "#4878a8",
    "situation_aware": "#c44e52",
}


def _setup():
    plt.rcParams["svg.hashsalt"] = "turnsim"
    plt.rcParams["figure.max_open_warning"] = 0


def emit_plots(results_dir, out_dir=None) -> list:
    """Render the three standard figures; returns the written paths."""
    _setup()
    results = Path(results_dir)
    out = Path(out_dir) if out_dir is not None else results
    out.mkdir(parents=True, exist_ok=True)
    records = load_metrics(results / "metrics.csv")
    if not records:
        raise ValueError("no runs in metrics.csv")
    stats = aggregate(records)
    paths = [
        _brake_reduction_chart(stats, out / "brake_reductions.svg"),
        _travel_time_boxes(records, out / "travel_times.svg"),
        _progressions(records, results, out / "progression.svg"),
    ]
    return paths


def _volumes(stats):
    return sorted({vol for (vol, _) in stats})


def _brake_reduction_chart(stats, path: Path) -> Path:
    vols = _volumes(stats)
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    width = 0.35
    for i, base in enumerate(("base_av_1", "base_av_2")):
        xs, ys = [], []
        for k, vol in enumerate(vols):
            sa = stats.get((vol, "situation_aware"))
            red = sa.reductions.get(base, {}).get("brake_events") if sa else None
            xs.append(k + (i - 0.5) * width)
            ys.append(0.0 if red is None else red)
        ax.bar(xs, ys, width=width, label=f"vs {_CONTROLLER_LABELS[base]}",
               color=["#888888", "#4878a8"][i])
    ax.set_xticks(range(len(vols)))
    ax.set_xticklabels([f"{v:g}" for v in vols])
    ax.set_xlabel("opposing volume (veh/h/lane)")
    ax.set_ylabel("follower hard-brake reduction (%)")
    ax.set_title("Abrupt-braking reduction by the situation-aware controller")
    ax.legend(fontsize=8)
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_SVG_OPTS)
    plt.close(fig)
    return path


def _travel_time_boxes(records, path: Path) -> Path:
    vols = sorted({r.volume for r in records})
    controllers = [c for c in ("base_av_1", "base_av_2", "situation_aware")
                   if any(r.controller == c for r in records)]
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.8), sharey=True)
    for ax, attr, title in (
        (axes[0], "tt_subject", "subject vehicle"),
        (axes[1], "tt_follower", "following vehicle"),
    ):
        data, positions, colors = [], [], []
        for k, vol in enumerate(vols):
            for i, ctrl in enumerate(controllers):
                vals = [
                    getattr(r, attr)
                    for r in records
                    if r.volume == vol and r.controller == ctrl
                    and not r.collision and not r.timeout and not math.isnan(getattr(r, attr))
                ]
                if not vals:
                    continue
                data.append(vals)
                positions.append(k * (len(controllers) + 1) + i)
                colors.append(_CONTROLLER_COLORS[ctrl])
        boxes = ax.boxplot(data, positions=positions, widths=0.8, patch_artist=True,
                           medianprops={"color": "black"})
        for patch, color in zip(boxes["boxes"], colors):
            patch.set_facecolor(color)
            patch.set_alpha(0.7)
        ax.set_xticks([k * (len(controllers) + 1) + 1 for k in range(len(vols))])
        ax.set_xticklabels([f"{v:g}" for v in vols])
        ax.set_xlabel("opposing volume (veh/h/lane)")
        ax.set_title(title)
        ax.grid(axis="y", alpha=0.3)
    axes[0].set_ylabel("travel time (s)")
    handles = [plt.Rectangle((0, 0), 1, 1, fc=_CONTROLLER_COLORS[c], alpha=0.7) for c in controllers]
    axes[1].legend(handles, [_CONTROLLER_LABELS[c] for c in controllers], fontsize=7)
    fig.tight_layout()
    fig.savefig(path, **_SVG_OPTS)
    plt.close(fig)
    return path


def _read_trace(path: Path):
    rows = path.read_text(encoding="utf-8").strip().splitlines()[1:]
    out = {}
    for row in rows:
        t, vid, _, station, _, _, _ = row.split(",", 6)
        out.setdefault(int(vid), []).append((float(t), float(station)))
    return out


def _progressions(records, results: Path, path: Path) -> Path:
    vols = sorted({r.volume for r in records})
    controllers = [c for c in ("base_av_1", "base_av_2", "situation_aware")
                   if any(r.controller == c for r in records)]
    seed_by_vol = {vol: min(r.seed for r in records if r.volume == vol) for vol in vols}
    fig, axes = plt.subplots(1, len(vols), figsize=(3.6 * len(vols), 3.6), sharey=True, squeeze=False)
    for k, vol in enumerate(vols):
        ax = axes[0][k]
        seed = seed_by_vol[vol]
        for ctrl in controllers:
            trace_path = results / f"trace_v{vol:g}_{ctrl}_{seed}.csv"
            if not trace_path.exists():
                continue
            per_vehicle = _read_trace(trace_path)
            follower = per_vehicle.get(-1, [])
            if follower:
                ts, xs = zip(*follower)
                ax.plot(ts, xs, color=_CONTROLLER_COLORS[ctrl], label=_CONTROLLER_LABELS[ctrl], lw=1.4)
        ax.set_title(f"{vol:g} veh/h/lane (seed {seed})", fontsize=9)
        ax.set_xlabel("time (s)")
        ax.grid(alpha=0.3)
        if k == 0:
            ax.set_ylabel("follower position along corridor (m)")
            ax.legend(fontsize=7)
    fig.suptitle("Following-vehicle progression", fontsize=11)
    fig.tight_layout()
    fig.savefig(path, **_SVG_OPTS)
    plt.close(fig)
    return path
