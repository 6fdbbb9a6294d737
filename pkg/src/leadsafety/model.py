"""Domain types for lead-vehicle interaction data.

A :class:`PairState` is one time-stamped snapshot of a follower subject
vehicle (SV) and the principal other vehicle (POV) driving ahead of it.
Consecutive states of one SV-POV pair form an :class:`Incident`, and a
:class:`Dataset` bundles incidents together with the operational design
domain box they were extracted from.

Positions are vehicle-center referenced, all quantities are SI.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
import numpy as np

VEHICLE_CLASSES = ("car", "truck")


@dataclass(frozen=True)
class VehicleKinematics:
    x: float
    y: float
    v_long: float
    v_lat: float = 0.0
    a_long: float = 0.0
    a_lat: float = 0.0
    heading: float = 0.0
    length: float = 4.5
    width: float = 1.8
    vclass: str = "car"

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"vehicle length must be positive, got {self.length}")
        if not self.width > 0:
            raise ValueError(f"vehicle width must be positive, got {self.width}")
        if self.vclass not in VEHICLE_CLASSES:
            raise ValueError(f"unknown vehicle class {self.vclass!r}")

    def front_bumper(self) -> tuple[float, float]:
        h = 0.5 * self.length
        return self.x + h * math.cos(self.heading), self.y + h * math.sin(self.heading)

    def rear_bumper(self) -> tuple[float, float]:
        h = 0.5 * self.length
        return self.x - h * math.cos(self.heading), self.y - h * math.sin(self.heading)


@dataclass(frozen=True)
class PairState:
    """Snapshot of the SV and its leading POV at time index ``t``.

    ``dv`` is the closing speed ``sv.v_long - pov.v_long`` and is always
    derived, never passed in.  A collision is stored as ``dhw == 0`` with
    ``collision=True``.
    """

    t: int
    dt: float
    sv: VehicleKinematics
    pov: VehicleKinematics
    dhw: float
    collision: bool = False
    dv: float = field(init=False)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"sample interval must be positive, got {self.dt}")
        object.__setattr__(self, "dv", self.sv.v_long - self.pov.v_long)

    # flat accessors shared with StateTable so metric code accepts either
    @property
    def v_sv(self) -> float:
        return self.sv.v_long

    @property
    def v_pov(self) -> float:
        return self.pov.v_long

    @property
    def a_sv(self) -> float:
        return self.sv.a_long

    @property
    def a_pov(self) -> float:
        return self.pov.a_long

    @property
    def a_lat_sv(self) -> float:
        return self.sv.a_lat

    @property
    def pov_length(self) -> float:
        return self.pov.length

    @property
    def sv_class(self) -> str:
        return self.sv.vclass

    @property
    def pov_class(self) -> str:
        return self.pov.vclass


@dataclass(frozen=True)
class Incident:
    id: str
    sv_id: int
    pov_id: int
    states: tuple[PairState, ...]
    frequency: float

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        if not self.frequency > 0:
            raise ValueError("incident frequency must be positive")

    def __len__(self) -> int:
        return len(self.states)

    @property
    def dt(self) -> float:
        return 1.0 / self.frequency

    @property
    def duration(self) -> float:
        return len(self.states) * self.dt

    @property
    def collided(self) -> bool:
        return bool(self.states) and self.states[-1].collision


@dataclass(frozen=True)
class OddBox:
    """Axis-aligned bounds on (dhw, SV speed, closing speed), inclusive."""

    dhw: tuple[float, float] = (0.0, 150.0)
    v_sv: tuple[float, float] = (0.0, 45.0)
    dv: tuple[float, float] = (-15.0, 15.0)

    FEATURES = ("dhw", "v_sv", "dv")

    def __post_init__(self):
        for name in self.FEATURES:
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"OddBox bound for {name} needs lower < upper, got ({lo}, {hi})")
            object.__setattr__(self, name, (float(lo), float(hi)))

    @property
    def lower(self) -> np.ndarray:
        return np.array([getattr(self, n)[0] for n in self.FEATURES])

    @property
    def upper(self) -> np.ndarray:
        return np.array([getattr(self, n)[1] for n in self.FEATURES])

    def contains(self, state) -> np.ndarray | bool:
        """Membership test for a PairState or a StateTable (vectorised)."""
        inside = True
        for name in self.FEATURES:
            lo, hi = getattr(self, name)
            value = np.asarray(getattr(state, name))
            inside = inside & (value >= lo) & (value <= hi)
        return inside if np.ndim(inside) else bool(inside)

    def to_dict(self) -> dict:
        return {n: list(getattr(self, n)) for n in self.FEATURES}

    @classmethod
    def from_dict(cls, data: dict | None) -> "OddBox":
        if not data:
            return cls()
        return cls(**{k: tuple(v) for k, v in data.items() if k in cls.FEATURES})


@dataclass(frozen=True)
class StateTable:
    """Columnar view of every state in a dataset, in incident order.

    Attribute names mirror the flat accessors on :class:`PairState`, so the
    vectorised metric functions work on both.
    """

    incident: np.ndarray  # index into Dataset.incidents
    sv_id: np.ndarray
    t: np.ndarray
    dt: np.ndarray
    dhw: np.ndarray
    dv: np.ndarray
    v_sv: np.ndarray
    v_pov: np.ndarray
    a_sv: np.ndarray
    a_pov: np.ndarray
    a_lat_sv: np.ndarray
    pov_length: np.ndarray
    sv_class: np.ndarray
    pov_class: np.ndarray
    collision: np.ndarray

    def __len__(self) -> int:
        return len(self.dhw)


@dataclass(frozen=True)
class Dataset:
    incidents: tuple[Incident, ...]
    odd: OddBox = field(default_factory=OddBox)
    source: str = ""

    def __post_init__(self):
        object.__setattr__(self, "incidents", tuple(self.incidents))

    @property
    def N_s(self) -> int:
        return sum(len(inc) for inc in self.incidents)

    @property
    def N_I(self) -> int:
        return len(self.incidents)

    @property
    def sv_ids(self) -> list[int]:
        return sorted({inc.sv_id for inc in self.incidents})

    def for_sv(self, sv_id: int) -> "Dataset":
        return Dataset(
            tuple(inc for inc in self.incidents if inc.sv_id == sv_id),
            self.odd,
            f"{self.source}#sv={sv_id}",
        )

    @cached_property
    def table(self) -> StateTable:
        states = [s for inc in self.incidents for s in inc.states]
        owner = np.repeat(np.arange(self.N_I), [len(inc) for inc in self.incidents])
        svid = np.repeat(
            np.array([inc.sv_id for inc in self.incidents], dtype=np.int64),
            [len(inc) for inc in self.incidents],
        )

        def col(fn, dtype=float):
            return np.fromiter((fn(s) for s in states), dtype=dtype, count=len(states))

        return StateTable(
            incident=owner.astype(np.int64),
            sv_id=svid,
            t=col(lambda s: s.t, np.int64),
            dt=col(lambda s: s.dt),
            dhw=col(lambda s: s.dhw),
            dv=col(lambda s: s.dv),
            v_sv=col(lambda s: s.sv.v_long),
            v_pov=col(lambda s: s.pov.v_long),
            a_sv=col(lambda s: s.sv.a_long),
            a_pov=col(lambda s: s.pov.a_long),
            a_lat_sv=col(lambda s: s.sv.a_lat),
            pov_length=col(lambda s: s.pov.length),
            sv_class=np.array([s.sv.vclass for s in states], dtype="<U5"),
            pov_class=np.array([s.pov.vclass for s in states], dtype="<U5"),
            collision=col(lambda s: s.collision, bool),
        )


def validate_incident(incident: Incident) -> list[str]:
    """Return the list of rule violations; an empty list means well-formed."""
    problems: list[str] = []
    states = incident.states
    if not states:
        return ["empty incident"]
    for prev, cur in zip(states, states[1:]):
        if cur.t != prev.t + 1:
            problems.append(f"non-consecutive time: {prev.t} -> {cur.t}")
    for i, s in enumerate(states):
        if s.sv.v_long < 0 or s.pov.v_long < 0:
            problems.append(f"reverse driving outside ODD at t={s.t}")
        if s.dhw < 0:
            problems.append(f"negative dhw {s.dhw} at t={s.t}")
        elif s.dhw == 0 and not s.collision:
            problems.append(f"zero dhw without collision flag at t={s.t}")
        if s.collision and s.dhw != 0:
            problems.append(f"collision flag with non-zero dhw at t={s.t}")
        if s.collision and i != len(states) - 1:
            problems.append(f"collision at t={s.t} does not terminate the incident")
        if not math.isclose(s.dt, incident.dt, rel_tol=1e-9):
            problems.append(f"sample interval {s.dt} disagrees with frequency at t={s.t}")
    return problems


def derive_pair_state(sv: VehicleKinematics, pov: VehicleKinematics, t: int, dt: float) -> PairState:
    """Build a PairState, computing the bumper-to-bumper headway.

    dhw is the Euclidean distance from the SV front-bumper center to the POV
    rear-bumper center.  Overlapping bumpers are reported as a collision with
    ``dhw = 0``.  A POV whose center is not ahead of the SV center (along the
    SV heading) is outside the lead-vehicle domain and rejected.
    """
    ux, uy = math.cos(sv.heading), math.sin(sv.heading)
    if (pov.x - sv.x) * ux + (pov.y - sv.y) * uy <= 0:
        raise ValueError("POV is not ahead of the SV")
    fx, fy = sv.front_bumper()
    rx, ry = pov.rear_bumper()
    longitudinal_gap = (rx - fx) * ux + (ry - fy) * uy
    if longitudinal_gap <= 0:
        return PairState(t, dt, sv, pov, 0.0, collision=True)
    return PairState(t, dt, sv, pov, math.hypot(rx - fx, ry - fy))
