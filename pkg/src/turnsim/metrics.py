"""Hard-brake detection, travel-time records, and scenario aggregation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class BrakeDetectorParams:
    threshold_decel: float = -4.5
    min_duration: float = 0.3
    release_decel: float = -2.0


def detect_hard_brakes(accels, dt: float, params: BrakeDetectorParams = BrakeDetectorParams()):
    """Count sustained hard-braking episodes in a uniformly sampled accel trace.

    An episode opens when acceleration drops to the trigger threshold and
    stays open until it rises above the release level (hysteresis, so a
    bounce between the two levels stays one event).  Episodes whose total
    time at or below the trigger threshold is shorter than min_duration
    are discarded.  Returns (count, onset_times).
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    onsets = []
    in_episode = False
    deep_time = 0.0
    onset_t = 0.0
    counted = False
    for i, a in enumerate(accels):
        deep = a <= params.threshold_decel
        if not in_episode:
            if deep:
                in_episode = True
                deep_time = dt
                onset_t = i * dt
                counted = False
        else:
            if a > params.release_decel:
                in_episode = False
                deep_time = 0.0
            elif deep:
                deep_time += dt
        if in_episode and not counted and deep_time >= params.min_duration - 1e-9:
            onsets.append(onset_t)
            counted = True
    return len(onsets), onsets


@dataclass(frozen=True)
class RunRecord:
    """Per-run metrics row."""

    volume: float
    controller: str
    seed: int
    brake_events: int
    tt_subject: float  # nan when the run timed out or collided
    tt_follower: float
    collision: bool
    co_occupancy: int
    same_lane_collisions: int
    timeout: bool
    follower_dwell: float


METRICS_HEADER = (
    "scenario,controller,seed,brake_events,tt_subject_s,tt_follower_s,"
    "collision_flag,co_occupancy,same_lane_collisions,timeout,dwell_follower_s"
)


def metrics_row(r: RunRecord) -> str:
    def num(x):
        return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.4f}"

    return (
        f"{r.volume:g},{r.controller},{r.seed},{r.brake_events},"
        f"{num(r.tt_subject)},{num(r.tt_follower)},{int(r.collision)},"
        f"{r.co_occupancy},{r.same_lane_collisions},{int(r.timeout)},{r.follower_dwell:.4f}"
    )


def mean(xs):
    xs = list(xs)
    return sum(xs) / len(xs) if xs else math.nan


def std(xs):
    xs = list(xs)
    if len(xs) < 2:
        return 0.0 if xs else math.nan
    m = mean(xs)
    return math.sqrt(sum((x - m) ** 2 for x in xs) / (len(xs) - 1))


def quantile(xs, q):
    xs = sorted(xs)
    if not xs:
        return math.nan
    pos = q * (len(xs) - 1)
    lo = int(math.floor(pos))
    hi = int(math.ceil(pos))
    if lo == hi:
        return xs[lo]
    frac = pos - lo
    return xs[lo] * (1.0 - frac) + xs[hi] * frac


def percent_reduction(base: float, treat: float):
    """100*(base - treat)/base; None (reported as n/a) when the base is zero or undefined."""
    if base is None or treat is None or math.isnan(base) or math.isnan(treat) or base == 0.0:
        return None
    return 100.0 * (base - treat) / base


@dataclass
class CellStats:
    """Aggregates for one (volume, controller) cell."""

    volume: float
    controller: str
    n_runs: int = 0
    n_collisions: int = 0
    n_timeouts: int = 0
    brake_mean: float = math.nan
    brake_std: float = math.nan
    tt_subject_mean: float = math.nan
    tt_subject_std: float = math.nan
    tt_subject_q1: float = math.nan
    tt_subject_median: float = math.nan
    tt_subject_q3: float = math.nan
    tt_follower_mean: float = math.nan
    tt_follower_std: float = math.nan
    tt_follower_q1: float = math.nan
    tt_follower_median: float = math.nan
    tt_follower_q3: float = math.nan
    dwell_mean: float = math.nan
    reductions: dict = field(default_factory=dict)


def aggregate(records, baselines=("base_av_1", "base_av_2"), treatment="situation_aware"):
    """Per-cell stats plus percent reductions of the treatment against each baseline.

    Collision and timeout runs stay in the brake counts but are excluded
    from travel-time statistics; run counts must match across controllers
    within a volume (matched seeds).
    """
    cells = {}
    for r in records:
        cells.setdefault((r.volume, r.controller), []).append(r)

    counts = {}
    for (vol, _), rows in cells.items():
        counts.setdefault(vol, set()).add(len(rows))
    for vol, ns in counts.items():
        if len(ns) > 1:
            raise ValueError(f"mismatched run counts across controllers at volume {vol:g}: {sorted(ns)}")

    stats = {}
    for (vol, ctrl), rows in sorted(cells.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        ok = [r for r in rows if not r.collision and not r.timeout]
        s = CellStats(volume=vol, controller=ctrl)
        s.n_runs = len(rows)
        s.n_collisions = sum(1 for r in rows if r.collision)
        s.n_timeouts = sum(1 for r in rows if r.timeout)
        s.brake_mean = mean(r.brake_events for r in rows)
        s.brake_std = std(r.brake_events for r in rows)
        if ok:
            subj = [r.tt_subject for r in ok]
            fol = [r.tt_follower for r in ok if not math.isnan(r.tt_follower)]
            s.tt_subject_mean = mean(subj)
            s.tt_subject_std = std(subj)
            s.tt_subject_q1 = quantile(subj, 0.25)
            s.tt_subject_median = quantile(subj, 0.5)
            s.tt_subject_q3 = quantile(subj, 0.75)
            if fol:
                s.tt_follower_mean = mean(fol)
                s.tt_follower_std = std(fol)
                s.tt_follower_q1 = quantile(fol, 0.25)
                s.tt_follower_median = quantile(fol, 0.5)
                s.tt_follower_q3 = quantile(fol, 0.75)
            s.dwell_mean = mean(r.follower_dwell for r in ok)
        stats[(vol, ctrl)] = s

    for (vol, ctrl), s in stats.items():
        if ctrl != treatment:
            continue
        for base in baselines:
            b = stats.get((vol, base))
            if b is None:
                continue
            s.reductions[base] = {
                "brake_events": percent_reduction(b.brake_mean, s.brake_mean),
                "tt_subject": percent_reduction(b.tt_subject_mean, s.tt_subject_mean),
                "tt_follower": percent_reduction(b.tt_follower_mean, s.tt_follower_mean),
            }
    return stats


SUMMARY_HEADER = (
    "scenario,controller,n_runs,n_collisions,n_timeouts,"
    "brake_mean,brake_std,tt_subject_mean,tt_subject_std,tt_subject_q1,tt_subject_median,tt_subject_q3,"
    "tt_follower_mean,tt_follower_std,tt_follower_q1,tt_follower_median,tt_follower_q3,dwell_mean,"
    "brake_red_vs_base1_pct,brake_red_vs_base2_pct,tt_subject_red_vs_base1_pct,tt_subject_red_vs_base2_pct,"
    "tt_follower_red_vs_base1_pct,tt_follower_red_vs_base2_pct"
)


def summary_rows(stats) -> list:
    def num(x):
        if x is None or (isinstance(x, float) and math.isnan(x)):
            return "n/a"
        return f"{x:.4f}"

    rows = []
    for (vol, ctrl), s in sorted(stats.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        red = s.reductions
        r1 = red.get("base_av_1", {})
        r2 = red.get("base_av_2", {})
        rows.append(
            ",".join(
                [
                    f"{vol:g}", ctrl, str(s.n_runs), str(s.n_collisions), str(s.n_timeouts),
                    num(s.brake_mean), num(s.brake_std),
                    num(s.tt_subject_mean), num(s.tt_subject_std),
                    num(s.tt_subject_q1), num(s.tt_subject_median), num(s.tt_subject_q3),
                    num(s.tt_follower_mean), num(s.tt_follower_std),
                    num(s.tt_follower_q1), num(s.tt_follower_median), num(s.tt_follower_q3),
                    num(s.dwell_mean),
                    num(r1.get("brake_events")), num(r2.get("brake_events")),
                    num(r1.get("tt_subject")), num(r2.get("tt_subject")),
                    num(r1.get("tt_follower")), num(r2.get("tt_follower")),
                ]
            )
        )
    return rows
