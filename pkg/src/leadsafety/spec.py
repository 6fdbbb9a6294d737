"""Metric variant parameters, output forms and orientation labels."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from typing import Mapping, Optional

import numpy as np

# output forms
REAL_STATE = "real/state"
BOOL_STATE = "bool/state"
REAL_INCIDENT = "real/incident"
BOOL_INCIDENT = "bool/incident"
DATASET = "dataset"
FORMS = (REAL_STATE, BOOL_STATE, REAL_INCIDENT, BOOL_INCIDENT, DATASET)

# orientation of real-valued outputs
LOWER_RISKIER = "lower-is-riskier"
HIGHER_RISKIER = "higher-is-riskier"

UNREG157_SPEED_CAP = 60.0 / 3.6


@dataclass(frozen=True)
class MetricSpec:
    """One metric variant: metric id, label and resolved hyper-parameters.

    Decelerations are positive magnitudes in m/s^2.  When ``decel_by_class``
    is set (e.g. ``{"car": 4.4, "truck": 3.2}``) it overrides ``a_max_sv`` and
    ``a_max_pov`` per vehicle according to each vehicle's class.
    """

    variant: str
    metric: str
    form: str = REAL_STATE
    a_max_sv: float = 6.0
    a_max_pov: float = 6.0
    decel_by_class: Optional[Mapping[str, float]] = None
    response_time: float = 0.0
    accel_during_response: float = 0.0
    comfort_decel: float = 3.0
    safety_time_gap: float = 1.4
    ttc_threshold: float = 3.0
    horizon: float = 1.0
    # UN R157 following-distance rule
    speed_cap: float = UNREG157_SPEED_CAP
    min_gap: float = 2.0
    min_time_gap: float = 1.0
    # evasive-action / aggressive-driving acceleration limits
    limit_long: float = 4.95
    limit_lat: float = 3.92
    ad_window: float = 60.0
    ad_min_violation: float = 1.0
    ad_min_count: int = 3
    # statistical inference
    confidence: float = 0.95
    eta: float = 0.05
    grid_resolution: int = 50
    distance_unit: str = "per_km"

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"unknown output form {self.form!r}")
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, (int, float)) and not isinstance(value, bool) and value < 0:
                raise ValueError(f"{self.variant}: {f.name} must be non-negative")
        if self.decel_by_class is not None:
            object.__setattr__(self, "decel_by_class", dict(self.decel_by_class))

    def sv_decel(self, state):
        return self._decel(state.sv_class, self.a_max_sv)

    def pov_decel(self, state):
        return self._decel(state.pov_class, self.a_max_pov)

    def _decel(self, vclass, default):
        if not self.decel_by_class:
            return default
        vclass = np.asarray(vclass)
        table = self.decel_by_class
        out = np.full(vclass.shape, float(table.get("car", default)))
        for name, value in table.items():
            out = np.where(vclass == name, float(value), out)
        return out if out.ndim else float(out)

    def with_overrides(self, **overrides) -> "MetricSpec":
        return replace(self, **overrides)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MetricOutput:
    """Values of one metric variant over a dataset.

    ``values`` is indexed by state (state forms), by incident (incident
    forms) or is a single-element array (dataset form).
    """

    variant: str
    metric: str
    form: str
    orientation: str
    values: np.ndarray
    extras: dict = field(default_factory=dict)  # auxiliary per-SV arrays, e.g. set occupancy

    def __len__(self) -> int:
        return len(self.values)
