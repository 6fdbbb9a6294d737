"""Trajectory ingestion, lead-pair extraction, resampling and synthetic scenarios.

CSV input follows the highD layout by default: one row per (frame, vehicle),
bounding-box lengths in the ``width`` column and widths in ``height``.
Column names and units are configurable through :class:`CsvSchema`.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd
import yaml

from .model import (VEHICLE_CLASSES, Dataset, Incident, OddBox, PairState,
                    VehicleKinematics, derive_pair_state)

log = logging.getLogger(__name__)


class SchemaError(ValueError):
    pass


class ParseError(ValueError):
    pass


class ConfigError(ValueError):
    pass


# -- CSV parsing


HIGHD_COLUMNS = {
    "frame": "frame", "id": "id", "x": "x", "y": "y",
    "v_long": "xVelocity", "v_lat": "yVelocity",
    "a_long": "xAcceleration", "a_lat": "yAcceleration",
    "lane": "laneId", "preceding": "precedingId",
    "length": "width", "width": "height", "vclass": "class",
}

# factor to SI for each accepted unit label
UNIT_FACTORS = {
    "m": 1.0, "ft": 0.3048, "km": 1000.0,
    "m/s": 1.0, "km/h": 1 / 3.6, "mph": 0.44704, "ft/s": 0.3048,
    "m/s2": 1.0, "m/s^2": 1.0, "ft/s2": 0.3048, "ft/s^2": 0.3048,
}

_NUMERIC = ("frame", "id", "x", "y", "v_long", "v_lat", "a_long", "a_lat",
            "lane", "preceding", "length", "width")


@dataclass
class CsvSchema:
    """Column mapping and unit annotations for a trajectory CSV.

    ``position_ref`` is ``"center"`` when x/y give the vehicle center, or
    ``"bbox"`` when they give the top-left bounding-box corner (highD).
    ``y_down`` marks image-style coordinates, where the right-hand side of a
    vehicle travelling in +x is +y.
    """

    columns: dict = field(default_factory=lambda: dict(HIGHD_COLUMNS))
    units: dict = field(default_factory=dict)
    frame_rate: float = 25.0
    position_ref: str = "bbox"
    y_down: bool = True
    heading_column: Optional[str] = None

    def __post_init__(self):
        self.columns = {**HIGHD_COLUMNS, **(self.columns or {})}
        for name, unit in self.units.items():
            if unit not in UNIT_FACTORS:
                raise SchemaError(f"unknown unit {unit!r} for {name!r}; known: {sorted(UNIT_FACTORS)}")
        if self.position_ref not in ("center", "bbox"):
            raise SchemaError(f"position_ref must be 'center' or 'bbox', got {self.position_ref!r}")
        if not self.frame_rate > 0:
            raise SchemaError("frame_rate must be positive")

    @classmethod
    def from_dict(cls, data: Optional[dict]) -> "CsvSchema":
        data = dict(data or {})
        unknown = set(data) - {"columns", "units", "frame_rate", "position_ref", "y_down", "heading_column"}
        if unknown:
            raise SchemaError(f"unknown schema keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "CsvSchema":
        with open(path) as fh:
            return cls.from_dict(yaml.safe_load(fh))


@dataclass(frozen=True)
class RawTrack:
    """Per-frame record of one vehicle, SI units, oriented so that it drives in +x."""

    vehicle_id: int
    frame: np.ndarray
    x: np.ndarray
    y: np.ndarray
    v_long: np.ndarray
    v_lat: np.ndarray
    a_long: np.ndarray
    a_lat: np.ndarray
    lane: np.ndarray
    preceding: np.ndarray
    length: float
    width: float
    vclass: str
    heading: np.ndarray
    direction: int = 1  # -1 when the raw data drove in -x and was rotated
    frame_rate: float = 25.0

    def __post_init__(self):
        if self.frame.size > 1 and not np.all(np.diff(self.frame) > 0):
            raise ValueError(f"vehicle {self.vehicle_id}: frames must be strictly increasing")

    def __len__(self) -> int:
        return int(self.frame.size)

    def row(self, frame: int) -> int:
        """Index of ``frame`` in this track, or -1."""
        i = int(np.searchsorted(self.frame, frame))
        return i if i < self.frame.size and self.frame[i] == frame else -1

    def kinematics(self, i: int) -> VehicleKinematics:
        return VehicleKinematics(
            x=float(self.x[i]), y=float(self.y[i]),
            v_long=float(self.v_long[i]), v_lat=float(self.v_lat[i]),
            a_long=float(self.a_long[i]), a_lat=float(self.a_lat[i]),
            heading=float(self.heading[i]), length=self.length, width=self.width,
            vclass=self.vclass,
        )


def _numeric(frame: pd.DataFrame, column: str, path) -> np.ndarray:
    raw = frame[column]
    values = pd.to_numeric(raw, errors="coerce")
    bad = values.isna().to_numpy()
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        # header is line 1
        raise ParseError(f"{path}: row {i + 2}, column {column!r}: non-numeric value {raw.iloc[i]!r}")
    return values.to_numpy(dtype=float)


def parse_trajectory_csv(path, schema: Optional[CsvSchema] = None) -> list[RawTrack]:
    """Read a trajectory CSV into one :class:`RawTrack` per vehicle id."""
    schema = schema or CsvSchema()
    path = Path(path)
    if path.stat().st_size == 0:
        log.warning("%s is empty", path)
        return []
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    wanted = dict(schema.columns)
    if schema.heading_column:
        wanted["heading"] = schema.heading_column
    for logical, column in wanted.items():
        if column not in frame.columns:
            raise SchemaError(f"{path}: missing required column {column!r} (for {logical})")
    if frame.empty:
        return []

    cols = {name: _numeric(frame, wanted[name], path) for name in _NUMERIC}
    if "heading" in wanted:
        cols["heading"] = _numeric(frame, wanted["heading"], path)
    for name, unit in schema.units.items():
        if name in cols:
            cols[name] = cols[name] * UNIT_FACTORS[unit]
    vclass = frame[wanted["vclass"]].str.strip().str.lower().to_numpy()
    unknown = ~np.isin(vclass, VEHICLE_CLASSES)
    if unknown.any():
        i = int(np.flatnonzero(unknown)[0])
        raise ParseError(f"{path}: row {i + 2}: unknown vehicle class {vclass[i]!r}")

    if schema.position_ref == "bbox":
        cols["x"] = cols["x"] + 0.5 * cols["length"]
        cols["y"] = cols["y"] + 0.5 * cols["width"]

    ids = cols["id"].astype(np.int64)
    order = np.lexsort((cols["frame"], ids))
    tracks = []
    for vid in np.unique(ids):
        rows = order[ids[order] == vid]
        direction = -1 if np.median(cols["v_long"][rows]) < 0 else 1
        # rotate -x travellers by 180 degrees so everyone drives in +x
        flip = float(direction)
        heading = cols["heading"][rows] if "heading" in cols else np.zeros(rows.size)
        if direction < 0 and "heading" in cols:
            heading = np.mod(heading + math.pi, 2 * math.pi)
        try:
            track = RawTrack(
                vehicle_id=int(vid),
                frame=cols["frame"][rows].astype(np.int64),
                x=flip * cols["x"][rows], y=flip * cols["y"][rows],
                v_long=flip * cols["v_long"][rows], v_lat=flip * cols["v_lat"][rows],
                a_long=flip * cols["a_long"][rows], a_lat=flip * cols["a_lat"][rows],
                lane=cols["lane"][rows].astype(np.int64),
                preceding=cols["preceding"][rows].astype(np.int64),
                length=float(cols["length"][rows[0]]), width=float(cols["width"][rows[0]]),
                vclass=str(vclass[rows[0]]), heading=heading,
                direction=direction, frame_rate=schema.frame_rate,
            )
        except ValueError as exc:
            raise ParseError(f"{path}: {exc}") from exc
        tracks.append(track)
    return tracks


# -- lead-pair extraction


def rightmost_lanes(tracks: Sequence[RawTrack], count: int = 2, y_down: bool = True) -> set[int]:
    """The ``count`` right-most lanes of each travel direction.

    Tracks are already rotated to drive in +x, so "right" is +y for image
    coordinates and -y otherwise.
    """
    lanes: dict[tuple[int, int], list[float]] = {}
    for tr in tracks:
        for lane in np.unique(tr.lane):
            lanes.setdefault((tr.direction, int(lane)), []).append(float(np.mean(tr.y[tr.lane == lane])))
    chosen: set[int] = set()
    for direction in {d for d, _ in lanes}:
        ranked = sorted(((np.mean(ys), lane) for (d, lane), ys in lanes.items() if d == direction),
                        reverse=y_down)
        chosen.update(lane for _, lane in ranked[:count])
    return chosen


def extract_lead_pairs(tracks: Sequence[RawTrack], odd: Optional[OddBox] = None,
                       lanes: Optional[Iterable[int]] = None, source: str = "") -> Dataset:
    """Every vehicle with a same-lane preceding vehicle becomes the SV of its own incidents.

    States outside the lane filter or the ODD box end the current incident.
    """
    odd = odd or OddBox()
    if not tracks:
        return Dataset((), odd, source)
    lane_set = set(lanes) if lanes is not None else rightmost_lanes(tracks)
    by_id = {tr.vehicle_id: tr for tr in tracks}
    stream: list[tuple[int, int, PairState]] = []
    for sv in tracks:
        dt = 1.0 / sv.frame_rate
        for i in range(len(sv)):
            pid, lane = int(sv.preceding[i]), int(sv.lane[i])
            if pid <= 0 or pid not in by_id or lane not in lane_set:
                continue
            pov = by_id[pid]
            j = pov.row(int(sv.frame[i]))
            if j < 0 or int(pov.lane[j]) != lane or pov.direction != sv.direction:
                continue
            try:
                state = derive_pair_state(sv.kinematics(i), pov.kinematics(j), int(sv.frame[i]), dt)
            except ValueError:
                continue
            if state.v_sv < 0 or state.v_pov < 0 or not odd.contains(state):
                continue
            stream.append((sv.vehicle_id, pid, state))
    return Dataset(tuple(segment_incidents(stream)), odd, source)


def segment_incidents(stream: Iterable[tuple[int, int, PairState]]) -> list[Incident]:
    """Split a (sv_id, pov_id, state) stream into maximal consecutive runs.

    A run ends when the pair changes, a time index is skipped or the sample
    interval changes.  A collision closes its incident; later states of the
    same run are dropped.
    """
    incidents: list[Incident] = []
    current: list[PairState] = []
    key = None
    closed = False

    def flush():
        if current:
            sv_id, pov_id = key
            incidents.append(Incident(f"sv{sv_id}-pov{pov_id}-t{current[0].t}", sv_id, pov_id,
                                      tuple(current), 1.0 / current[0].dt))

    for sv_id, pov_id, state in stream:
        same = (key == (sv_id, pov_id) and current
                and state.t == current[-1].t + 1 and state.dt == current[0].dt)
        if same and closed:
            continue
        if not same:
            flush()
            current, key, closed = [], (sv_id, pov_id), False
        current.append(state)
        closed = state.collision
    flush()
    return incidents


# -- resampling


def _interp_kinematics(a: VehicleKinematics, b: VehicleKinematics, w: float) -> VehicleKinematics:
    def mix(name):
        return (1 - w) * getattr(a, name) + w * getattr(b, name)
    return replace(a, x=mix("x"), y=mix("y"), v_long=mix("v_long"), v_lat=mix("v_lat"),
                   a_long=mix("a_long"), a_lat=mix("a_lat"), heading=mix("heading"))


def resample(incident: Incident, target_hz: float) -> Incident:
    """Reduce the sample rate: integer stride when possible, linear interpolation otherwise.

    A terminal collision state is kept even when it falls between output
    samples, so resampling never hides an accident.
    """
    src = incident.frequency
    if target_hz > src * (1 + 1e-9):
        raise ValueError(f"upsampling unsupported ({src} Hz -> {target_hz} Hz)")
    if not target_hz > 0:
        raise ValueError("target frequency must be positive")
    states = incident.states
    ratio = src / target_hz
    dt = 1.0 / target_hz
    stride = round(ratio)
    if abs(ratio - stride) < 1e-9:
        keep = list(range(0, len(states), stride))
        picked = [states[i] for i in keep]
        base = states[0].t // stride
    else:
        keep, picked = [], []
        for k in range(int(math.floor((len(states) - 1) / ratio + 1e-9)) + 1):
            pos = k * ratio
            lo = min(int(math.floor(pos + 1e-9)), len(states) - 1)
            w = pos - lo
            if w < 1e-9:
                keep.append(lo)
                picked.append(states[lo])
            else:
                a, b = states[lo], states[lo + 1]
                keep.append(-1)
                picked.append(PairState(0, dt, _interp_kinematics(a.sv, b.sv, w),
                                        _interp_kinematics(a.pov, b.pov, w), (1 - w) * a.dhw + w * b.dhw))
        base = int(round(states[0].t / ratio))
    out = [replace(s, t=base + i, dt=dt) for i, s in enumerate(picked)]
    if states[-1].collision and keep[-1] != len(states) - 1:
        out.append(replace(states[-1], t=out[-1].t + 1, dt=dt))
    return Incident(incident.id, incident.sv_id, incident.pov_id, tuple(out), target_hz)


def resample_dataset(dataset: Dataset, target_hz: float) -> Dataset:
    return Dataset(tuple(resample(inc, target_hz) for inc in dataset.incidents), dataset.odd, dataset.source)


# -- synthetic scenarios

ACTION_KINDS = ("hold", "accel", "decel", "brake_to_stop")


@dataclass(frozen=True)
class Action:
    """From ``t_start`` on, hold speed, accelerate or decelerate by ``magnitude`` (m/s^2)."""

    t_start: float
    kind: str
    magnitude: float = 0.0

    def __post_init__(self):
        if self.kind not in ACTION_KINDS:
            raise ConfigError(f"unknown action kind {self.kind!r}; use one of {ACTION_KINDS}")
        if self.t_start < 0 or self.magnitude < 0:
            raise ConfigError("action t_start and magnitude must be non-negative")

    @property
    def accel(self) -> float:
        if self.kind == "hold":
            return 0.0
        return self.magnitude if self.kind == "accel" else -self.magnitude


@dataclass(frozen=True)
class ScenarioScript:
    v_sv0: float
    v_pov0: float
    gap0: float
    freq_hz: float = 10.0
    duration_s: float = 10.0
    pov_actions: tuple[Action, ...] = ()
    sv_actions: tuple[Action, ...] = ()
    sv_length: float = 4.5
    pov_length: float = 4.5
    sv_class: str = "car"
    pov_class: str = "car"
    sv_id: int = 1
    pov_id: int = 2

    def __post_init__(self):
        if not self.duration_s > 0:
            raise ConfigError("duration_s must be positive")
        if not self.freq_hz > 0:
            raise ConfigError("freq_hz must be positive")
        if self.v_sv0 < 0 or self.v_pov0 < 0:
            raise ConfigError("initial speeds must be non-negative")
        if self.gap0 < 0:
            raise ConfigError("gap0 must be non-negative")
        for name in ("pov_actions", "sv_actions"):
            acts = tuple(a if isinstance(a, Action) else Action(**a) for a in getattr(self, name))
            object.__setattr__(self, name, tuple(sorted(acts, key=lambda a: a.t_start)))

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioScript":
        if not isinstance(data, dict):
            raise ConfigError("scenario script must be a mapping")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(f"invalid scenario script: {exc}") from exc


def load_scenario(path) -> ScenarioScript:
    """Read a YAML or JSON scenario script."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return ScenarioScript.from_dict(data)


def profile_motion(v0: float, actions: Sequence[Action], times: np.ndarray):
    """Exact displacement, speed and acceleration under piecewise-constant acceleration.

    Speed never goes negative: a decelerating vehicle stops and stays
    stopped until a later action accelerates it.
    """
    segments = [[0.0, 0.0]]
    for act in actions:
        if act.t_start == segments[-1][0]:
            segments[-1][1] = act.accel
        else:
            segments.append([act.t_start, act.accel])
    s = np.zeros_like(times, dtype=float)
    v = np.zeros_like(times, dtype=float)
    acc = np.zeros_like(times, dtype=float)
    seg_s, seg_v = 0.0, float(v0)
    for k, (start, a) in enumerate(segments):
        end = segments[k + 1][0] if k + 1 < len(segments) else math.inf
        t_move = seg_v / -a if a < 0 else math.inf
        mask = (times >= start) & (times < end)
        tau = times[mask] - start
        tm = np.minimum(tau, t_move)
        s[mask] = seg_s + seg_v * tm + 0.5 * a * tm * tm
        v[mask] = np.where(tau < t_move, seg_v + a * tau, 0.0)
        acc[mask] = np.where(tau < t_move, a, 0.0)
        span = min(end - start, t_move)
        if math.isfinite(span):
            seg_s += seg_v * span + 0.5 * a * span * span
            seg_v = 0.0 if span == t_move else seg_v + a * span
    return s, v, acc


def synth_scenario(script: ScenarioScript, incident_id: Optional[str] = None) -> Incident:
    """Generate an incident at ``freq_hz`` with exact closed-form kinematics.

    The incident ends at the first sample whose gap is closed; that state is
    stored with ``dhw = 0`` and the collision flag.
    """
    n = int(round(script.duration_s * script.freq_hz)) + 1
    times = np.arange(n) / script.freq_hz
    s_sv, v_sv, a_sv = profile_motion(script.v_sv0, script.sv_actions, times)
    s_pov, v_pov, a_pov = profile_motion(script.v_pov0, script.pov_actions, times)
    gap = script.gap0 + s_pov - s_sv
    closed = np.flatnonzero(gap <= 1e-9)
    if closed.size:
        n = int(closed[0]) + 1
    offset = script.gap0 + 0.5 * (script.sv_length + script.pov_length)
    dt = 1.0 / script.freq_hz
    states = []
    for k in range(n):
        sv = VehicleKinematics(float(s_sv[k]), 0.0, float(v_sv[k]), a_long=float(a_sv[k]),
                               length=script.sv_length, vclass=script.sv_class)
        pov = VehicleKinematics(float(offset + s_pov[k]), 0.0, float(v_pov[k]), a_long=float(a_pov[k]),
                                length=script.pov_length, vclass=script.pov_class)
        crash = gap[k] <= 1e-9
        states.append(PairState(k, dt, sv, pov, 0.0 if crash else float(gap[k]), collision=bool(crash)))
    iid = incident_id or f"synth-sv{script.sv_id}-pov{script.pov_id}"
    return Incident(iid, script.sv_id, script.pov_id, tuple(states), script.freq_hz)


def synthetic_corpus(n_sv: int = 5, states_per_sv: int = 20_000, seed: int = 0,
                     freq_hz: float = 5.0, fast_share: float = 0.8) -> Dataset:
    """Random car-following corpus for end-to-end runs.

    Most incidents run above the UN R157 speed cap; a minority brake or
    slow down, and a few end in a collision.
    """
    rng = np.random.default_rng(seed)
    incidents = []
    for sv in range(1, n_sv + 1):
        produced, k = 0, 0
        while produced < states_per_sv:
            fast = rng.random() < fast_share
            v_pov = rng.uniform(18.0, 35.0) if fast else rng.uniform(3.0, 16.0)
            v_sv = max(0.0, v_pov + rng.normal(0.0, 2.0))
            gap = rng.uniform(15.0, 120.0)
            duration = float(rng.integers(20, 80))
            actions = []
            roll = rng.random()
            if roll < 0.3:
                actions.append(Action(float(rng.uniform(2, duration / 2)), "decel", float(rng.uniform(0.5, 4.0))))
                actions.append(Action(float(rng.uniform(duration / 2, duration)), "hold"))
            elif roll < 0.36:
                actions.append(Action(float(rng.uniform(1, 5)), "brake_to_stop", float(rng.uniform(4.0, 8.0))))
            elif roll < 0.5:
                actions.append(Action(float(rng.uniform(0, duration / 2)), "accel", float(rng.uniform(0.2, 1.5))))
                actions.append(Action(float(rng.uniform(duration / 2, duration)), "hold"))
            sv_actions = []
            if rng.random() < 0.06 and duration >= 30:
                # three harsh braking pulses: evasive actions and aggressive driving
                t = float(rng.uniform(1, 5))
                for _ in range(3):
                    sv_actions.append(Action(t, "decel", 5.5))
                    sv_actions.append(Action(t + 1.2, "accel", 2.0))
                    t += float(rng.uniform(4, 8))
                sv_actions.append(Action(t, "hold"))
            elif rng.random() < 0.4:
                sv_actions.append(Action(float(rng.uniform(1, duration / 2)), "decel", float(rng.uniform(0.3, 2.0))))
                sv_actions.append(Action(float(rng.uniform(duration / 2, duration)), "hold"))
            script = ScenarioScript(v_sv, v_pov, gap, freq_hz, duration, tuple(actions), tuple(sv_actions),
                                    sv_class="truck" if rng.random() < 0.15 else "car",
                                    pov_class="truck" if rng.random() < 0.15 else "car",
                                    sv_id=sv, pov_id=1000 * sv + k)
            inc = synth_scenario(script, f"synth-sv{sv}-{k}")
            incidents.append(inc)
            produced += len(inc)
            k += 1
    return Dataset(tuple(incidents), OddBox(dhw=(0.0, 1000.0), v_sv=(0.0, 60.0), dv=(-40.0, 40.0)),
                   f"synthetic(seed={seed})")


def load_run_config(path) -> dict:
    """Read a YAML/JSON run configuration into a plain dict."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: run config must be a mapping")
    return data


def dump_json(data, path) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
