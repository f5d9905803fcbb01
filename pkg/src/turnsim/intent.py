"""Follower kinematics from rear-sensor samples and Bayesian aggressiveness classification.

Three consecutive relative-position samples give position, speed (first
difference), acceleration (difference of consecutive speeds) and time
headway of the following vehicle.  A two-feature Gaussian naive-Bayes
posterior then scores the follower as aggressive or not, with hard
saturation beyond the acceleration means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class InsufficientSamples(ValueError):
    """Raised when fewer than three sensor samples are available."""


class Intent(Enum):
    AGGRESSIVE = "aggressive"
    NON_AGGRESSIVE = "non_aggressive"


@dataclass(frozen=True)
class FollowerObservation:
    """Three rear-sensor samples: times, own route positions, gap magnitudes.

    Gaps are stored as positive bumper-to-bumper magnitudes; the follower
    is behind, so its position is own position minus gap.
    """

    times: tuple[float, float, float]
    own_positions: tuple[float, float, float]
    gaps: tuple[float, float, float]

    def __post_init__(self) -> None:
        if len(self.times) != 3 or len(self.own_positions) != 3 or len(self.gaps) != 3:
            raise InsufficientSamples("exactly three samples are required")
        if not (self.times[0] < self.times[1] < self.times[2]):
            raise ValueError("sample times must be strictly increasing")
        if any(g < 0.0 for g in self.gaps):
            raise ValueError("gap magnitudes must be non-negative")

    @classmethod
    def from_samples(cls, samples) -> "FollowerObservation":
        """Build from a sequence of (time, own_position, gap) rows, using the last three."""
        if len(samples) < 3:
            raise InsufficientSamples(f"need 3 samples, got {len(samples)}")
        last = samples[-3:]
        return cls(
            times=tuple(s[0] for s in last),
            own_positions=tuple(s[1] for s in last),
            gaps=tuple(s[2] for s in last),
        )


@dataclass(frozen=True)
class FollowerKinematics:
    position: float
    speed: float
    accel: float
    time_headway: float  # math.inf when the follower is (nearly) stationary


@dataclass(frozen=True)
class IntentModelParams:
    accel_mean_aggressive: float = 2.0
    accel_mean_calm: float = -2.0
    accel_sd: float = 4.0 / 3.0
    headway_mean_aggressive: float = 1.0
    headway_mean_calm: float = 2.0
    headway_sd: float = 0.5
    prior_aggressive: float = 0.5
    prior_calm: float = 0.5
    classify_threshold: float = 0.5
    speed_floor: float = 0.1

    def __post_init__(self) -> None:
        if abs(self.prior_aggressive + self.prior_calm - 1.0) > 1e-12:
            raise ValueError("priors must sum to 1")
        if self.accel_sd <= 0.0 or self.headway_sd <= 0.0:
            raise ValueError("standard deviations must be positive")
        if not 0.0 < self.classify_threshold < 1.0:
            raise ValueError("classify_threshold must lie in (0, 1)")


@dataclass(frozen=True)
class IntentEstimate:
    p_aggressive: float
    p_non_aggressive: float
    classification: Intent
    observation: FollowerKinematics


def follower_kinematics(obs: FollowerObservation, speed_floor: float = 0.1) -> FollowerKinematics:
    """Estimate follower position, speed, acceleration, and headway at the latest sample."""
    t0, t1, t2 = obs.times
    positions = [p - g for p, g in zip(obs.own_positions, obs.gaps)]
    v_prev = (positions[1] - positions[0]) / (t1 - t0)
    v_last = (positions[2] - positions[1]) / (t2 - t1)
    accel = (v_last - v_prev) / (t2 - t1)
    speed = max(v_last, 0.0)
    if speed >= speed_floor:
        headway = obs.gaps[2] / speed
    else:
        headway = math.inf
    return FollowerKinematics(position=positions[2], speed=speed, accel=accel, time_headway=headway)


def _log_gaussian(x: float, mean: float, sd: float) -> float:
    z = (x - mean) / sd
    return -0.5 * z * z - math.log(sd) - 0.5 * math.log(2.0 * math.pi)


def _posterior_from_likelihoods(lik_a: float, lik_na: float, prior_a: float, prior_na: float) -> float:
    num = lik_a * prior_a
    den = num + lik_na * prior_na
    if den == 0.0:
        return 0.5
    return num / den


def _posterior_from_log_ratio(log_ratio: float) -> float:
    # logistic of the posterior log-odds; stable for large |log_ratio|
    if log_ratio >= 0.0:
        return 1.0 / (1.0 + math.exp(-log_ratio))
    e = math.exp(log_ratio)
    return e / (1.0 + e)


def intent_probability(kin: FollowerKinematics, params: IntentModelParams = IntentModelParams()) -> IntentEstimate:
    """Posterior aggressiveness of the follower given acceleration and headway.

    Acceleration at or beyond the aggressive mean saturates to certainty
    (and symmetrically for the calm mean).  An infinite headway drops the
    headway factor, leaving an acceleration-only posterior.
    """
    if not math.isfinite(kin.accel):
        raise ValueError("acceleration must be finite")

    if kin.accel >= params.accel_mean_aggressive:
        p_aggr = 1.0
    elif kin.accel <= params.accel_mean_calm:
        p_aggr = 0.0
    else:
        log_ratio = _log_gaussian(kin.accel, params.accel_mean_aggressive, params.accel_sd) - _log_gaussian(
            kin.accel, params.accel_mean_calm, params.accel_sd
        )
        if math.isfinite(kin.time_headway):
            log_ratio += _log_gaussian(
                kin.time_headway, params.headway_mean_aggressive, params.headway_sd
            ) - _log_gaussian(kin.time_headway, params.headway_mean_calm, params.headway_sd)
        log_ratio += math.log(params.prior_aggressive) - math.log(params.prior_calm)
        p_aggr = _posterior_from_log_ratio(log_ratio)

    classification = Intent.AGGRESSIVE if p_aggr > params.classify_threshold else Intent.NON_AGGRESSIVE
    return IntentEstimate(
        p_aggressive=p_aggr,
        p_non_aggressive=1.0 - p_aggr,
        classification=classification,
        observation=kin,
    )
