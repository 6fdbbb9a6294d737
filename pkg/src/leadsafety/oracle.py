"""Forward rollout of behaviour models under point-mass longitudinal dynamics.

This is the generic model-predictive template: start from a state, let the
SV follow one behaviour model and the POV another, integrate both forward
and report the first time the gap closes.  The closed-form time-to-collision
metrics are checked against it.

Each behaviour is a piecewise-constant acceleration schedule.  Speeds are
floored at zero (vehicles brake to a stop, they never reverse), which is
applied exactly per step: within a step the acceleration is constant, so the
position increment is known in closed form, including the partial step where
a braking vehicle reaches standstill.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

STEADY_STATE = "steady-state"
CONSTANT_ACCEL = "constant-accel"
BRAKE_TO_STOP = "brake-to-stop"
WORST_CASE_BRAKE = "worst-case-brake"
KINDS = (STEADY_STATE, CONSTANT_ACCEL, BRAKE_TO_STOP, WORST_CASE_BRAKE)

DELAY_ACTIONS = ("hold-speed", "hold-accel", "max-accel")

DEFAULT_STEP = 1e-3
DEFAULT_HORIZON = 60.0
BISECTION_TOL = 1e-7


@dataclass(frozen=True)
class BehaviorModel:
    """Longitudinal behaviour of one vehicle.

    ``accel`` is the signed acceleration for ``constant-accel`` and the
    acceleration applied during the response delay when ``delay_action`` is
    ``max-accel``.  ``decel`` is a positive braking magnitude.
    """

    kind: str
    decel: float = 0.0
    accel: float = 0.0
    delay: float = 0.0
    delay_action: str = "hold-speed"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown behaviour kind {self.kind!r}")
        if self.kind in (BRAKE_TO_STOP, WORST_CASE_BRAKE) and not self.decel > 0:
            raise ValueError("braking behaviours need a positive deceleration")
        if self.delay < 0:
            raise ValueError("response delay must be non-negative")
        if self.delay_action not in DELAY_ACTIONS:
            raise ValueError(f"unknown delay action {self.delay_action!r}")

    def schedule(self, current_accel: float = 0.0) -> list[tuple[float, float]]:
        """Return ``[(t_start, accel), ...]`` starting at t = 0."""
        if self.kind == STEADY_STATE:
            return [(0.0, 0.0)]
        if self.kind == CONSTANT_ACCEL:
            return [(0.0, float(self.accel))]
        if self.kind == WORST_CASE_BRAKE or self.delay == 0:
            return [(0.0, -float(self.decel))]
        during = {
            "hold-speed": 0.0,
            "hold-accel": float(current_accel),
            "max-accel": float(self.accel),
        }[self.delay_action]
        return [(0.0, during), (float(self.delay), -float(self.decel))]


def steady_state() -> BehaviorModel:
    return BehaviorModel(STEADY_STATE)


def constant_accel(accel: float) -> BehaviorModel:
    return BehaviorModel(CONSTANT_ACCEL, accel=accel)


def brake_to_stop(decel: float, delay: float = 0.0, delay_action: str = "hold-speed",
                  accel: float = 0.0) -> BehaviorModel:
    return BehaviorModel(BRAKE_TO_STOP, decel=decel, delay=delay,
                         delay_action=delay_action, accel=accel)


def worst_case_brake(decel: float) -> BehaviorModel:
    return BehaviorModel(WORST_CASE_BRAKE, decel=decel)


@dataclass(frozen=True)
class Rollout:
    times: np.ndarray
    gap: np.ndarray
    v_sv: np.ndarray
    v_pov: np.ndarray
    collision_time: Optional[float]


def _advance(v, a, h):
    """Displacement over ``h`` seconds from speed ``v`` at constant ``a``, floored at standstill."""
    v = np.asarray(v, dtype=float)
    a = np.asarray(a, dtype=float)
    h = np.asarray(h, dtype=float)
    end = v + a * h
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        stopped = np.where(a < 0, v * v / (-2.0 * a), 0.0)
    return np.where(end >= 0, v * h + 0.5 * a * h * h, stopped)


def _integrate(v0, sched, times):
    starts = np.array([s for s, _ in sched])
    accels = np.array([a for _, a in sched])
    h = np.diff(times)
    a = accels[np.searchsorted(starts, times[:-1], side="right") - 1]
    # speed recursion v[k+1] = max(0, v[k] + a h) in closed form (reflected partial sums)
    partial = v0 + np.concatenate(([0.0], np.cumsum(a * h)))
    v = partial - np.minimum(0.0, np.minimum.accumulate(partial))
    x = np.concatenate(([0.0], np.cumsum(_advance(v[:-1], a, h))))
    return v, x, a


def rollout(state, b0: BehaviorModel, b1: BehaviorModel,
            step: float = DEFAULT_STEP, horizon: float = DEFAULT_HORIZON) -> Rollout:
    """Integrate SV (``b0``) and POV (``b1``) forward from ``state``.

    The first zero crossing of the gap is refined by bisection on the exact
    intra-step motion.  ``state`` needs ``dhw``, ``v_sv``, ``v_pov``,
    ``a_sv`` and ``a_pov``.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    if not horizon >= step:
        raise ValueError("horizon must be at least one step")
    s0 = b0.schedule(float(state.a_sv))
    s1 = b1.schedule(float(state.a_pov))
    n = int(np.floor(horizon / step + 1e-9))
    grid = np.arange(n + 1) * step
    switches = [t for t, _ in s0[1:] + s1[1:] if 0 < t < grid[-1]]
    times = np.union1d(grid, switches) if switches else grid

    v_sv, x_sv, a_sv = _integrate(float(state.v_sv), s0, times)
    v_pov, x_pov, a_pov = _integrate(float(state.v_pov), s1, times)
    gap = float(state.dhw) + x_pov - x_sv

    hit = np.flatnonzero(gap <= 0)
    collision = None
    if hit.size:
        k = int(hit[0])
        if k == 0:
            collision = 0.0
        else:
            j = k - 1

            def gap_at(tau):
                return (float(state.dhw) + x_pov[j] + float(_advance(v_pov[j], a_pov[j], tau))
                        - x_sv[j] - float(_advance(v_sv[j], a_sv[j], tau)))

            lo, hi = 0.0, times[k] - times[j]
            while hi - lo > BISECTION_TOL:
                mid = 0.5 * (lo + hi)
                if gap_at(mid) <= 0:
                    hi = mid
                else:
                    lo = mid
            collision = float(times[j] + 0.5 * (lo + hi))
    return Rollout(times, gap, v_sv, v_pov, collision)


def ttc_by_rollout(state, b0: BehaviorModel, b1: BehaviorModel,
                   step: float = DEFAULT_STEP, horizon: float = DEFAULT_HORIZON) -> Optional[float]:
    """Collision time predicted by rolling the behaviour models forward, or None."""
    return rollout(state, b0, b1, step, horizon).collision_time
