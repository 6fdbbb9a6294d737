"""Real-valued per-state safety metrics.

Every function accepts either a single :class:`~leadsafety.model.PairState`
(and returns a float) or a :class:`~leadsafety.model.StateTable` (and returns
an array).  "No predicted collision" is reported as ``+inf``, which orders as
the safest possible value for the time-to-collision family.
"""
from __future__ import annotations

import numpy as np

from .spec import MetricSpec

INF = np.inf


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def _f(x):
    return np.asarray(x, dtype=float)


# -- closed-form collision time under constant accelerations with stop handling


def _stop_time(v, a):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return np.where(a < 0, v / np.where(a < 0, -a, 1.0), INF)


def _motion_coeffs(v, a, t_stop, lo):
    """Coefficients of x(t) = c0 + c1 t + c2 t^2 on an interval starting at ``lo``."""
    moving = lo < t_stop
    finite = np.isfinite(t_stop)
    ts = np.where(finite, t_stop, 0.0)
    x_stop = v * ts + 0.5 * a * ts * ts
    return (np.where(moving, 0.0, x_stop), np.where(moving, v, 0.0), np.where(moving, 0.5 * a, 0.0))


def _first_root(c0, c1, c2, lo, hi):
    """Smallest root t > 0 of c0 + c1 t + c2 t^2 inside [lo, hi], else inf."""
    slack = 1e-12 * (1.0 + np.where(np.isfinite(hi), np.abs(hi), 0.0))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        disc = c1 * c1 - 4.0 * c0 * c2
        sq = np.sqrt(np.where(disc >= 0, disc, 0.0))
        q = -0.5 * (c1 + np.where(c1 >= 0, sq, -sq))
        quad_ok = (c2 != 0) & (disc >= 0)
        r1 = np.where(quad_ok, q / c2, np.nan)
        r2 = np.where(quad_ok & (q != 0), c0 / q, np.nan)
        r3 = np.where((c2 == 0) & (c1 != 0), -c0 / c1, np.nan)
    best = np.full(np.broadcast(c0, c1, c2, lo, hi).shape, INF)
    for r in (r1, r2, r3):
        ok = np.isfinite(r) & (r > 0) & (r >= lo - slack) & (r <= hi + slack)
        best = np.where(ok & (r < best), r, best)
    return best


def collision_time_const_accel(dhw, v_sv, a_sv, v_pov, a_pov, horizon=INF):
    """First time the gap closes when each vehicle holds its acceleration.

    Decelerating vehicles stop and stay stopped.  Returns ``inf`` when the
    gap never closes within ``horizon``.
    """
    dhw, v_sv, a_sv, v_pov, a_pov = map(_f, (dhw, v_sv, a_sv, v_pov, a_pov))
    horizon = _f(horizon)
    ts_sv = _stop_time(v_sv, a_sv)
    ts_pov = _stop_time(v_pov, a_pov)
    b1 = np.minimum(np.minimum(ts_sv, ts_pov), horizon)
    b2 = np.minimum(np.maximum(ts_sv, ts_pov), horizon)
    result = np.full(np.broadcast(dhw, v_sv, a_sv, v_pov, a_pov).shape, INF)
    for lo, hi in ((np.zeros_like(b1), b1), (b1, b2), (b2, horizon + np.zeros_like(b2))):
        s0, s1, s2 = _motion_coeffs(v_sv, a_sv, ts_sv, lo)
        p0, p1, p2 = _motion_coeffs(v_pov, a_pov, ts_pov, lo)
        root = _first_root(dhw + p0 - s0, p1 - s1, p2 - s2, lo, hi)
        result = np.minimum(result, root)
    dv = v_sv - v_pov
    touching = (dhw == 0) & ((dv > 0) | ((dv == 0) & (a_sv > a_pov)))
    return np.where(touching, 0.0, result)


# -- time-to-collision family


def ttc(state):
    """Distance headway over closing speed; inf when the gap is not closing."""
    dhw, dv = _f(state.dhw), _f(state.dv)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return _out(np.where(dv > 0, dhw / np.where(dv > 0, dv, 1.0), INF))


def pttc(state, spec: MetricSpec | None = None):
    """TTC with the SV at constant speed and the POV holding its current deceleration.

    An accelerating POV is treated as steady-state.
    """
    a_pov = np.minimum(_f(state.a_pov), 0.0)
    return _out(collision_time_const_accel(state.dhw, state.v_sv, 0.0, state.v_pov, a_pov))


def mttc(state, spec: MetricSpec | None = None):
    """TTC with both vehicles holding their current accelerations."""
    return _out(collision_time_const_accel(state.dhw, state.v_sv, state.a_sv,
                                           state.v_pov, state.a_pov))


def mprism_long(state, spec: MetricSpec):
    """Longitudinal worst case: POV brakes hard, SV brakes hard to avoid it.

    Returns the predicted collision time if it falls inside ``spec.horizon``,
    otherwise inf.
    """
    return _out(collision_time_const_accel(
        state.dhw, state.v_sv, -_f(spec.sv_decel(state)),
        state.v_pov, -_f(spec.pov_decel(state)), horizon=spec.horizon))


# -- distance and deceleration based


def picud(state, spec: MetricSpec):
    """Gap left after both vehicles brake to a stop, the SV after a reaction time (m)."""
    v_sv, v_pov = _f(state.v_sv), _f(state.v_pov)
    a_sv, a_pov = _f(spec.sv_decel(state)), _f(spec.pov_decel(state))
    rho = spec.response_time
    return _out(v_pov ** 2 / (2 * a_pov) + _f(state.dhw) - (v_sv * rho + v_sv ** 2 / (2 * a_sv)))


def dss(state, spec: MetricSpec, friction: float | None = None, g: float = 9.81):
    """Space distance minus stopping distance, with braking set by tyre-road friction (m).

    ``friction`` defaults to the variant deceleration divided by ``g``; each vehicle
    uses its own class deceleration when the variant defines one.
    """
    v_sv, v_pov = _f(state.v_sv), _f(state.v_pov)
    if friction is None:
        mu_sv, mu_pov = _f(spec.sv_decel(state)) / g, _f(spec.pov_decel(state)) / g
    else:
        mu_sv = mu_pov = float(friction)
    space = _f(state.dhw) + v_pov * v_pov / (2 * mu_pov * g)
    stopping = v_sv * spec.response_time + v_sv * v_sv / (2 * mu_sv * g)
    return _out(space - stopping)


def drac(state, spec: MetricSpec | None = None):
    """Deceleration needed to match the POV speed before the gap closes (m/s^2)."""
    dhw, dv = _f(state.dhw), _f(state.dv)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        val = np.where(dhw > 0, dv * dv / (2 * np.where(dhw > 0, dhw, 1.0)), INF)
    return _out(np.where(dv > 0, val, 0.0))


def dst(state, spec: MetricSpec):
    """Deceleration needed to fall back to the safety time gap behind a steady POV."""
    dhw, dv, v_pov = _f(state.dhw), _f(state.dv), _f(state.v_pov)
    room = dhw - spec.safety_time_gap * v_pov
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        val = np.where(room > 0, dv * dv / (2 * np.where(room > 0, room, 1.0)), INF)
    return _out(np.where(dv > 0, val, 0.0))


def rla(state, spec: MetricSpec | None = None):
    """Acceleration that brings the closing speed to zero exactly at impact (m/s^2)."""
    dhw, dv, a_pov = _f(state.dhw), _f(state.dv), _f(state.a_pov)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        need = np.where(dhw > 0, dv * dv / (2 * np.where(dhw > 0, dhw, 1.0)), INF)
    return _out(np.where(dv > 0, a_pov - need, a_pov))


def rttc(state, spec: MetricSpec | None = None):
    t = _f(ttc(state))
    with np.errstate(divide="ignore"):
        return _out(np.where(np.isfinite(t), 1.0 / t, 0.0))


def btn(state, spec: MetricSpec):
    """Required braking (from RLA) as a fraction of the SV's maximum deceleration."""
    return _out(np.maximum(0.0, -_f(rla(state))) / _f(spec.sv_decel(state)))


def crash_index(state, spec: MetricSpec | None = None):
    """Kinetic-energy style severity at the MTTC-predicted impact (m^2/s^3).

    Speeds at impact are floored at zero for vehicles that stopped first.
    Without a predicted impact the result is ``-inf`` (safest for a metric
    where larger means riskier); an impact at t = 0 gives ``+inf``.
    """
    t = _f(mttc(state))
    finite = np.isfinite(t)
    tt = np.where(finite, t, 0.0)
    v_sv = np.maximum(0.0, _f(state.v_sv) + _f(state.a_sv) * tt)
    v_pov = np.maximum(0.0, _f(state.v_pov) + _f(state.a_pov) * tt)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        val = np.where(tt > 0, (v_sv ** 2 - v_pov ** 2) / (2 * np.where(tt > 0, tt, 1.0)), INF)
    return _out(np.where(finite, val, -INF))


def psd(state, spec: MetricSpec):
    """Headway as a proportion of the SV's minimum stopping distance."""
    v = _f(state.v_sv)
    stop = v * v / (2 * _f(spec.sv_decel(state)))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return _out(np.where(stop > 0, _f(state.dhw) / np.where(stop > 0, stop, 1.0), INF))


def gap_time(state, spec: MetricSpec | None = None):
    v = _f(state.v_sv)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return _out(np.where(v > 0, _f(state.dhw) / np.where(v > 0, v, 1.0), INF))


def thw(state, spec: MetricSpec | None = None):
    """Time headway: like gap time but measured to the POV front bumper."""
    v = _f(state.v_sv)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return _out(np.where(v > 0, (_f(state.dhw) + _f(state.pov_length)) / np.where(v > 0, v, 1.0), INF))


def level_of_unsafety(state, spec: MetricSpec):
    """SV speed times closing speed, amplified by the POV braking severity."""
    amplifier = 1.0 + np.maximum(0.0, -_f(state.a_pov)) / _f(spec.sv_decel(state))
    return _out(_f(state.v_sv) * np.maximum(0.0, _f(state.dv)) * amplifier)


def jerk_series(accel, dt: float) -> np.ndarray:
    accel = _f(accel)
    if accel.size < 2:
        raise ValueError("jerk needs at least 2 samples")
    return np.gradient(accel, dt, edge_order=1)


def jerk(incident) -> tuple[np.ndarray, np.ndarray]:
    """Longitudinal and lateral SV jerk (m/s^3); central differences inside, one-sided at the ends."""
    if len(incident.states) < 2:
        raise ValueError("jerk needs an incident of at least 2 states")
    a_long = [s.sv.a_long for s in incident.states]
    a_lat = [s.sv.a_lat for s in incident.states]
    return jerk_series(a_long, incident.dt), jerk_series(a_lat, incident.dt)
