"""Per-state Boolean safety checks.  ``True`` always means safe."""
from __future__ import annotations

import numpy as np

from . import metrics_state as ms
from .spec import MetricSpec


def _b(x):
    x = np.asarray(x, dtype=bool)
    return bool(x) if x.ndim == 0 else x


def _f(x):
    return np.asarray(x, dtype=float)


def rss_min_distance(v_sv, v_pov, response_time, accel_during_response, b_sv, b_pov):
    """RSS longitudinal minimum safe distance (m), clipped at zero."""
    v_sv, v_pov = _f(v_sv), _f(v_pov)
    rho, a = response_time, accel_during_response
    d = (v_sv * rho + 0.5 * a * rho * rho
         + (v_sv + rho * a) ** 2 / (2 * _f(b_sv)) - v_pov ** 2 / (2 * _f(b_pov)))
    return np.maximum(0.0, d)


def rss_long_check(state, spec: MetricSpec):
    """Return ``(safe, d_min)`` for the longitudinal RSS rule."""
    d_min = rss_min_distance(state.v_sv, state.v_pov, spec.response_time,
                             spec.accel_during_response, spec.sv_decel(state),
                             spec.pov_decel(state))
    safe = _f(state.dhw) >= d_min
    return _b(safe), ms._out(d_min)


def fsm_distance(state, spec: MetricSpec):
    """Proactive FSM distance: the SV keeps its speed over the response time, then brakes comfortably."""
    return rss_min_distance(state.v_sv, state.v_pov, spec.response_time, 0.0,
                            spec.comfort_decel, spec.pov_decel(state))


def fsm_check(state, spec: MetricSpec):
    return _b(_f(state.dhw) >= fsm_distance(state, spec))


def unreg157_check(state, spec: MetricSpec):
    """Minimum following distance of UN R157 for the lead-vehicle case.

    Above the speed cap the SV is unsafe whenever a leading vehicle exists,
    which is always true here.
    """
    v = _f(state.v_sv)
    need = np.maximum(spec.min_gap, v * spec.min_time_gap)
    return _b((v <= spec.speed_cap) & (_f(state.dhw) >= need))


def rcri_check(state, spec: MetricSpec):
    """Safe iff the SV's delayed stopping distance fits inside headway plus POV stopping distance."""
    v_sv, v_pov = _f(state.v_sv), _f(state.v_pov)
    sv_dist = v_sv * spec.response_time + v_sv ** 2 / (2 * _f(spec.sv_decel(state)))
    pov_dist = _f(state.dhw) + v_pov ** 2 / (2 * _f(spec.pov_decel(state)))
    return _b(sv_dist <= pov_dist)


def threshold_violation(series, threshold: float):
    """Safe (True) where the value reaches the threshold; ``+inf`` counts as safe."""
    return _b(_f(series) >= threshold)


def ttcv(state, spec: MetricSpec):
    return threshold_violation(ms.ttc(state), spec.ttc_threshold)


def mttcv(state, spec: MetricSpec):
    return threshold_violation(ms.mttc(state), spec.ttc_threshold)


def mprism_bool(state, spec: MetricSpec):
    return _b(np.isinf(_f(ms.mprism_long(state, spec))))


def am_state(incident, safe_view: bool = False) -> np.ndarray:
    """Per-state accident flag: every state of a colliding incident is marked.

    With ``safe_view`` the flags are inverted so that True means safe.
    """
    crashed = any(s.collision for s in incident.states)
    flags = np.full(len(incident.states), crashed, dtype=bool)
    return ~flags if safe_view else flags
