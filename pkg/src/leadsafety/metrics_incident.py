"""Per-incident metrics: exposure measures, time to accident, aggressive driving, accidents.

Exposure measures treat each state as a left-closed rectangle of width ``dt``.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from . import metrics_boolean as mb
from . import metrics_state as ms
from .model import Incident
from .spec import MetricSpec


def _table(incident: Incident):
    """Tiny columnar adapter so the vectorised state metrics run on one incident."""
    from .model import Dataset
    return Dataset((incident,)).table


def time_to_accident(incident: Incident, spec: MetricSpec) -> Optional[float]:
    """TTC at the first evasive SV action, or None when there is none."""
    for s in incident.states:
        if abs(s.sv.a_long) > spec.limit_long or abs(s.sv.a_lat) > spec.limit_lat:
            value = ms.ttc(s)
            return value if np.isfinite(value) else None
    return None


def exposure_duration(flags, dt: float) -> float:
    """Time spent in unsafe states; ``flags`` uses True = unsafe."""
    return float(np.count_nonzero(np.asarray(flags, dtype=bool)) * dt)


def exposure_integral(series, threshold: float, dt: float) -> float:
    """Area between the threshold and the series where the series dips below it."""
    series = np.asarray(series, dtype=float)
    deficit = np.where(np.isfinite(series), np.maximum(0.0, threshold - series), 0.0)
    return float(deficit.sum() * dt)


def exposure_fraction(flags, dt: float) -> float:
    flags = np.asarray(flags, dtype=bool)
    if flags.size == 0:
        raise ValueError("exposure fraction of an empty incident")
    return exposure_duration(flags, dt) / (flags.size * dt)


def tet(incident: Incident, spec: MetricSpec) -> float:
    return exposure_duration(np.asarray(ms.ttc(_table(incident))) < spec.ttc_threshold, incident.dt)


def tit(incident: Incident, spec: MetricSpec) -> float:
    return exposure_integral(ms.ttc(_table(incident)), spec.ttc_threshold, incident.dt)


def cpi(incident: Incident, spec: MetricSpec) -> float:
    tab = _table(incident)
    return exposure_fraction(np.asarray(ms.drac(tab)) > spec.sv_decel(tab), incident.dt)


def tercri(incident: Incident, spec: MetricSpec) -> float:
    return exposure_duration(~np.asarray(mb.rcri_check(_table(incident), spec)), incident.dt)


def violation_runs(a_long, a_lat, dt: float, spec: MetricSpec) -> list[tuple[float, float]]:
    """Maximal runs over either acceleration limit lasting at least the minimum duration.

    Returns ``(start, end)`` times with end = start + run length * dt.
    """
    over = (np.abs(np.asarray(a_long)) > spec.limit_long) | (np.abs(np.asarray(a_lat)) > spec.limit_lat)
    padded = np.concatenate(([False], over, [False])).astype(np.int8)
    edges = np.diff(padded)
    starts, ends = np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)
    need = spec.ad_min_violation - 1e-9
    return [(s * dt, e * dt) for s, e in zip(starts, ends) if (e - s) * dt >= need]


def aggressive_driving(incident: Incident, spec: MetricSpec) -> bool:
    """True when some window of ``ad_window`` seconds wholly contains ``ad_min_count`` violations."""
    runs = violation_runs([s.sv.a_long for s in incident.states],
                          [s.sv.a_lat for s in incident.states], incident.dt, spec)
    k = spec.ad_min_count
    return any(runs[i + k - 1][1] - runs[i][0] <= spec.ad_window + 1e-9
               for i in range(len(runs) - k + 1))


def accident_metric(incident: Incident) -> bool:
    """True iff the incident terminates with a collision."""
    return incident.collided
