"""Run metric variants over a dataset.

State metrics run vectorised over the dataset's columnar table.  Incident
metrics reuse the state series and reduce them per incident.  Dataset
metrics are evaluated once per SV, in ``dataset.sv_ids`` order.

Boolean outputs are always reported with True meaning safe, so the
accident and aggressive-driving flags are inverted here.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

from . import metrics_boolean as mb
from . import metrics_dataset as md
from . import metrics_incident as mi
from . import metrics_state as ms
from .model import Dataset, StateTable
from .registry import orientation_of
from .spec import BOOL_INCIDENT, BOOL_STATE, DATASET, REAL_INCIDENT, REAL_STATE, MetricOutput, MetricSpec


class _Groups:
    """Incident boundaries inside the state table."""

    def __init__(self, dataset: Dataset):
        tab = dataset.table
        lengths = np.array([len(inc) for inc in dataset.incidents], dtype=np.int64)
        if (lengths == 0).any():
            raise ValueError("dataset contains an empty incident")
        self.lengths = lengths
        self.starts = np.cumsum(lengths) - lengths
        self.dt = np.array([inc.dt for inc in dataset.incidents])
        self.tab = tab

    def sum(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            return np.zeros(0)
        return np.add.reduceat(values, self.starts)


def _jerk_magnitude(dataset: Dataset, groups: _Groups) -> np.ndarray:
    tab = groups.tab
    out = np.zeros(len(tab))
    for start, n, dt in zip(groups.starts, groups.lengths, groups.dt):
        if n < 2:
            continue  # a lone state shows no change in acceleration
        sl = slice(start, start + n)
        out[sl] = np.hypot(ms.jerk_series(tab.a_sv[sl], dt), ms.jerk_series(tab.a_lat_sv[sl], dt))
    return out


def _time_to_accident(groups: _Groups, spec: MetricSpec) -> np.ndarray:
    tab = groups.tab
    if len(tab) == 0:
        return np.zeros(0)
    evasive = (np.abs(tab.a_sv) > spec.limit_long) | (np.abs(tab.a_lat_sv) > spec.limit_lat)
    idx = np.where(evasive, np.arange(len(tab)), len(tab))
    first = np.minimum.reduceat(idx, groups.starts)
    ttc = np.asarray(ms.ttc(tab), dtype=float)
    found = first < len(tab)
    return np.where(found, ttc[np.minimum(first, len(tab) - 1)], np.inf)


def _state_real(fn: Callable) -> Callable:
    return lambda dataset, groups, spec: np.asarray(fn(groups.tab, spec), dtype=float)


def _state_bool(fn: Callable) -> Callable:
    return lambda dataset, groups, spec: np.asarray(fn(groups.tab, spec), dtype=bool)


def _rss(tab: StateTable, spec):
    return mb.rss_long_check(tab, spec)[0]


def _incident_collided(dataset):
    return np.array([inc.collided for inc in dataset.incidents], dtype=bool)


STATE_REAL = {
    "TTC": _state_real(lambda t, s: ms.ttc(t)),
    "PTTC": _state_real(ms.pttc),
    "MTTC": _state_real(ms.mttc),
    "MPrISM": _state_real(ms.mprism_long),
    "PICUD": _state_real(ms.picud),
    "DSS": _state_real(ms.dss),
    "DRAC": _state_real(ms.drac),
    "DST": _state_real(ms.dst),
    "RLA": _state_real(ms.rla),
    "RTTC": _state_real(ms.rttc),
    "BTN": _state_real(ms.btn),
    "CI": _state_real(ms.crash_index),
    "PSD": _state_real(ms.psd),
    "GT": _state_real(ms.gap_time),
    "THW": _state_real(ms.thw),
    "LU": _state_real(ms.level_of_unsafety),
    "Jerk": lambda dataset, groups, spec: _jerk_magnitude(dataset, groups),
}

STATE_BOOL = {
    "MPrISM": _state_bool(mb.mprism_bool),
    "RCRI": _state_bool(mb.rcri_check),
    "TTCV": _state_bool(mb.ttcv),
    "MTTCV": _state_bool(mb.mttcv),
    "RSS": _state_bool(_rss),
    "FSM": _state_bool(mb.fsm_check),
    "UNReg157": _state_bool(mb.unreg157_check),
    "AM": lambda dataset, groups, spec: np.repeat(~_incident_collided(dataset), groups.lengths),
}

INCIDENT_REAL = {
    "TA": lambda dataset, g, spec: _time_to_accident(g, spec),
    "TET": lambda dataset, g, spec: g.sum(
        (np.asarray(ms.ttc(g.tab)) < spec.ttc_threshold) * g.tab.dt),
    "TIT": lambda dataset, g, spec: g.sum(
        np.maximum(0.0, spec.ttc_threshold - np.asarray(ms.ttc(g.tab))) * g.tab.dt),
    "CPI": lambda dataset, g, spec: g.sum(np.asarray(ms.drac(g.tab)) > spec.sv_decel(g.tab)) / g.lengths,
    "TERCRI": lambda dataset, g, spec: g.sum(~np.asarray(mb.rcri_check(g.tab, spec)) * g.tab.dt),
}

INCIDENT_BOOL = {
    "AD": lambda dataset, g, spec: np.array(
        [not mi.aggressive_driving(inc, spec) for inc in dataset.incidents], dtype=bool),
    "AM": lambda dataset, g, spec: ~_incident_collided(dataset),
}


def _per_sv(dataset: Dataset, fn) -> np.ndarray:
    return np.array([fn(dataset.for_sv(k)) for k in dataset.sv_ids], dtype=float)


def _ass(dataset: Dataset, spec: MetricSpec):
    sets = [md.almost_safe_set(dataset.for_sv(k), spec) for k in dataset.sv_ids]
    extras = {
        "occupancy": np.array([s.occupancy for s in sets]),
        "density": np.array([s.density for s in sets]),
    }
    return np.array([s.epsilon_bar for s in sets]), extras


DATASET_METRICS = {
    "CR": lambda dataset, spec: (_per_sv(dataset, lambda d: md.collision_rate(d, spec.distance_unit)), {}),
    "FMRI": lambda dataset, spec: (_per_sv(dataset, lambda d: md.fmri(d, spec)), {}),
    "ASS": _ass,
}

_TABLES = {REAL_STATE: STATE_REAL, BOOL_STATE: STATE_BOOL,
           REAL_INCIDENT: INCIDENT_REAL, BOOL_INCIDENT: INCIDENT_BOOL}


def supported(spec: MetricSpec) -> bool:
    if spec.form == DATASET:
        return spec.metric in DATASET_METRICS
    return spec.metric in _TABLES[spec.form]


def evaluate_variant(dataset: Dataset, spec: MetricSpec, groups: _Groups | None = None) -> MetricOutput:
    if not supported(spec):
        raise KeyError(f"metric {spec.metric!r} has no {spec.form} implementation")
    extras = {}
    if spec.form == DATASET:
        values, extras = DATASET_METRICS[spec.metric](dataset, spec)
    else:
        groups = groups or _Groups(dataset)
        values = _TABLES[spec.form][spec.metric](dataset, groups, spec)
    return MetricOutput(spec.variant, spec.metric, spec.form, orientation_of(spec),
                        np.asarray(values), extras)


def evaluate(dataset: Dataset, specs: Sequence[MetricSpec], jobs: int = 1) -> list[MetricOutput]:
    """Evaluate every variant; output order follows ``specs`` whatever ``jobs`` is."""
    groups = _Groups(dataset)

    def run(spec):
        return evaluate_variant(dataset, spec, groups)

    if jobs > 1 and len(specs) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run, specs))
    return [run(s) for s in specs]
