"""Catalogue of the 33 base metrics and their hyper-parameter variants."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .spec import (BOOL_INCIDENT, BOOL_STATE, DATASET, HIGHER_RISKIER, LOWER_RISKIER,
                   REAL_INCIDENT, REAL_STATE, MetricSpec)

MODEL_PREDICTIVE = "model-predictive"
OBSERVATION_TRANSFORM = "observation-transform"
STATISTICAL_INFERENCE = "statistical-inference"
CATEGORIES = (MODEL_PREDICTIVE, OBSERVATION_TRANSFORM, STATISTICAL_INFERENCE)

# behavioural / dynamics assumption tags of the model-predictive metrics
SV_STEADY = "sv-steady-state"
SV_INSTANT = "sv-instantaneous-control"
SV_EVASIVE = "sv-evasive-maneuver"
RESPONSE_TIME = "response-time"
POINT_MASS = "point-mass"
POV_STEADY = "pov-steady-state"
POV_INSTANT = "pov-instantaneous-control"
POV_WORST = "pov-worst-case"
ASSUMPTION_TAGS = (SV_STEADY, SV_INSTANT, SV_EVASIVE, RESPONSE_TIME, POINT_MASS,
                   POV_STEADY, POV_INSTANT, POV_WORST)

SAFE_IS_TRUE = "true-is-safe"  # orientation label of Boolean outputs

# per-class maximum decelerations observed in naturalistic highway data
HIGHWAY_DECEL = {"car": 4.4, "truck": 3.2}
CRASH_DATA_DECEL = 4.0


@dataclass(frozen=True)
class MetricDescriptor:
    id: int
    acronym: str
    name: str
    category: str
    forms: tuple[str, ...]
    orientation: str
    tags: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"{self.acronym}: unknown category {self.category!r}")
        unknown = set(self.tags) - set(ASSUMPTION_TAGS)
        if unknown:
            raise ValueError(f"{self.acronym}: unknown tags {sorted(unknown)}")
        object.__setattr__(self, "tags", frozenset(self.tags))


def _tags(*names):
    return frozenset(names)


_MP = MODEL_PREDICTIVE
_OT = OBSERVATION_TRANSFORM
_SI = STATISTICAL_INFERENCE
_PM = POINT_MASS

_DESCRIPTORS = (
    MetricDescriptor(1, "TTC", "Time to collision", _MP, (REAL_STATE,), LOWER_RISKIER,
                     _tags(SV_STEADY, POV_STEADY, _PM)),
    MetricDescriptor(2, "PTTC", "Proportional time to collision", _MP, (REAL_STATE,), LOWER_RISKIER,
                     _tags(SV_STEADY, POV_INSTANT, _PM)),
    MetricDescriptor(3, "MTTC", "Modified time to collision", _MP, (REAL_STATE,), LOWER_RISKIER,
                     _tags(SV_INSTANT, POV_INSTANT, _PM)),
    MetricDescriptor(4, "MPrISM", "Model predictive instantaneous safety metric", _MP,
                     (REAL_STATE, BOOL_STATE), LOWER_RISKIER, _tags(SV_EVASIVE, POV_WORST)),
    MetricDescriptor(5, "PICUD", "Potential index for collision with urgent deceleration", _MP,
                     (REAL_STATE,), LOWER_RISKIER, _tags(SV_EVASIVE, RESPONSE_TIME, _PM, POV_WORST)),
    MetricDescriptor(6, "DSS", "Difference of space distance and stopping distance", _MP,
                     (REAL_STATE,), LOWER_RISKIER, _tags(SV_EVASIVE, RESPONSE_TIME, _PM, POV_WORST)),
    MetricDescriptor(7, "DRAC", "Deceleration rate to avoid the crash", _MP, (REAL_STATE,),
                     HIGHER_RISKIER, _tags(SV_INSTANT, _PM, POV_STEADY)),
    MetricDescriptor(8, "DST", "Deceleration-based surrogate safety measure", _MP, (REAL_STATE,),
                     HIGHER_RISKIER, _tags(SV_INSTANT, _PM, POV_STEADY)),
    MetricDescriptor(9, "RLA", "Required longitudinal acceleration", _MP, (REAL_STATE,),
                     LOWER_RISKIER, _tags(SV_INSTANT, _PM, POV_INSTANT)),
    MetricDescriptor(10, "RTTC", "Reciprocal time to collision", _MP, (REAL_STATE,),
                     HIGHER_RISKIER, _tags(SV_STEADY, _PM, POV_STEADY)),
    MetricDescriptor(11, "BTN", "Brake threat number", _MP, (REAL_STATE,), HIGHER_RISKIER,
                     _tags(SV_INSTANT, _PM, POV_INSTANT)),
    MetricDescriptor(12, "TA", "Time to accident", _MP, (REAL_INCIDENT,), LOWER_RISKIER,
                     _tags(SV_STEADY, _PM, POV_STEADY)),
    MetricDescriptor(13, "CPI", "Crash potential index", _MP, (REAL_INCIDENT,), HIGHER_RISKIER,
                     _tags(SV_INSTANT, _PM, POV_STEADY)),
    MetricDescriptor(14, "TET", "Time exposed time to collision", _MP, (REAL_INCIDENT,),
                     HIGHER_RISKIER, _tags(SV_STEADY, _PM, POV_STEADY)),
    MetricDescriptor(15, "TIT", "Time integrated time to collision", _MP, (REAL_INCIDENT,),
                     HIGHER_RISKIER, _tags(SV_STEADY, _PM, POV_STEADY)),
    MetricDescriptor(16, "RCRI", "Rear-end collision risk index", _MP, (BOOL_STATE,), SAFE_IS_TRUE,
                     _tags(SV_EVASIVE, RESPONSE_TIME, _PM, POV_WORST)),
    MetricDescriptor(17, "TERCRI", "Time exposed rear-end crash risk index", _MP, (REAL_INCIDENT,),
                     HIGHER_RISKIER, _tags(SV_EVASIVE, RESPONSE_TIME, _PM, POV_WORST)),
    MetricDescriptor(18, "TTCV", "Time to collision violation", _MP, (BOOL_STATE,), SAFE_IS_TRUE,
                     _tags(SV_STEADY, _PM, POV_STEADY)),
    MetricDescriptor(19, "MTTCV", "Modified time to collision violation", _MP, (BOOL_STATE,),
                     SAFE_IS_TRUE, _tags(SV_INSTANT, _PM, POV_INSTANT)),
    MetricDescriptor(20, "RSS", "Responsibility-sensitive safety", _MP, (BOOL_STATE,), SAFE_IS_TRUE,
                     _tags(SV_EVASIVE, RESPONSE_TIME, _PM, POV_WORST)),
    MetricDescriptor(21, "FSM", "Fuzzy safety model", _MP, (BOOL_STATE,), SAFE_IS_TRUE,
                     _tags(SV_INSTANT, SV_EVASIVE, RESPONSE_TIME, _PM, POV_WORST)),
    MetricDescriptor(22, "UNReg157", "UN Regulation 157 following distance", _MP, (BOOL_STATE,),
                     SAFE_IS_TRUE, _tags(SV_EVASIVE, RESPONSE_TIME, _PM, POV_STEADY)),
    MetricDescriptor(23, "CI", "Crash index", _OT, (REAL_STATE,), HIGHER_RISKIER),
    MetricDescriptor(24, "PSD", "Proportion of stopping distance", _OT, (REAL_STATE,), LOWER_RISKIER),
    MetricDescriptor(25, "AD", "Aggressive driving", _OT, (BOOL_INCIDENT,), SAFE_IS_TRUE),
    MetricDescriptor(26, "AM", "Accident metric", _OT, (BOOL_INCIDENT, BOOL_STATE), SAFE_IS_TRUE),
    MetricDescriptor(27, "Jerk", "Jerk magnitude", _OT, (REAL_STATE,), HIGHER_RISKIER),
    MetricDescriptor(28, "GT", "Gap time", _OT, (REAL_STATE,), LOWER_RISKIER),
    MetricDescriptor(29, "THW", "Time headway", _OT, (REAL_STATE,), LOWER_RISKIER),
    MetricDescriptor(30, "LU", "Level of unsafety", _OT, (REAL_STATE,), HIGHER_RISKIER),
    MetricDescriptor(31, "CR", "Collision rate", _OT, (DATASET,), HIGHER_RISKIER),
    MetricDescriptor(32, "FMRI", "Failure-free miles risk inference", _SI, (DATASET,), HIGHER_RISKIER),
    MetricDescriptor(33, "ASS", "Almost-safe set exit-probability bound", _SI, (DATASET,),
                     HIGHER_RISKIER),
)


def registry() -> tuple[MetricDescriptor, ...]:
    return _DESCRIPTORS


def descriptor(acronym: str) -> MetricDescriptor:
    for d in _DESCRIPTORS:
        if d.acronym == acronym:
            return d
    raise KeyError(f"unknown metric {acronym!r}")


def _v(variant, metric, form, **params):
    return MetricSpec(variant=variant, metric=metric, form=form, **params)


def _decel(value):
    return {"a_max_sv": value, "a_max_pov": value}


_HW = {"decel_by_class": HIGHWAY_DECEL}
_CD = _decel(CRASH_DATA_DECEL)

_VARIANTS = (
    _v("TTC", "TTC", REAL_STATE),
    _v("PTTC", "PTTC", REAL_STATE),
    _v("MTTC", "MTTC", REAL_STATE),
    _v("MPrISM", "MPrISM", REAL_STATE, horizon=1.0, **_decel(6.0)),
    _v("MPrISM_B", "MPrISM", BOOL_STATE, horizon=1.0, **_decel(6.0)),
    _v("PICUD1", "PICUD", REAL_STATE, response_time=1.0, **_decel(3.3)),
    _v("PICUD2", "PICUD", REAL_STATE, response_time=1.0, **_decel(6.0)),
    _v("PICUD_H", "PICUD", REAL_STATE, response_time=1.0, **_HW),
    _v("PICUD_V", "PICUD", REAL_STATE, response_time=1.0, **_CD),
    _v("DSS", "DSS", REAL_STATE, response_time=1.08, **_decel(0.7 * 9.81)),
    _v("DRAC", "DRAC", REAL_STATE),
    _v("DST", "DST", REAL_STATE, safety_time_gap=1.4),
    _v("RLA", "RLA", REAL_STATE),
    _v("RTTC", "RTTC", REAL_STATE),
    _v("BTN1", "BTN", REAL_STATE, **_decel(9.82)),
    _v("BTN2", "BTN", REAL_STATE, **_decel(6.0)),
    _v("BTN_H", "BTN", REAL_STATE, **_HW),
    _v("BTN_V", "BTN", REAL_STATE, **_CD),
    _v("TA", "TA", REAL_INCIDENT, limit_long=4.95, limit_lat=3.92),
    _v("CPI1", "CPI", REAL_INCIDENT, **_decel(8.45)),
    _v("CPI2", "CPI", REAL_INCIDENT, **_decel(6.0)),
    _v("CPI_H", "CPI", REAL_INCIDENT, **_HW),
    _v("CPI_V", "CPI", REAL_INCIDENT, **_CD),
    _v("TET", "TET", REAL_INCIDENT, ttc_threshold=3.0),
    _v("TIT", "TIT", REAL_INCIDENT, ttc_threshold=3.0),
    _v("RCRI1", "RCRI", BOOL_STATE, response_time=0.1, **_decel(3.4)),
    _v("RCRI2", "RCRI", BOOL_STATE, response_time=0.1, **_decel(6.0)),
    _v("RCRI_H", "RCRI", BOOL_STATE, response_time=0.1, **_HW),
    _v("RCRI_V", "RCRI", BOOL_STATE, response_time=0.1, **_CD),
    _v("TERCRI1", "TERCRI", REAL_INCIDENT, response_time=0.1, **_decel(3.4)),
    _v("TERCRI2", "TERCRI", REAL_INCIDENT, response_time=0.1, **_decel(6.0)),
    _v("TERCRI_H", "TERCRI", REAL_INCIDENT, response_time=0.1, **_HW),
    _v("TERCRI_V", "TERCRI", REAL_INCIDENT, response_time=0.1, **_CD),
    _v("TTCV", "TTCV", BOOL_STATE, ttc_threshold=3.0),
    _v("MTTCV", "MTTCV", BOOL_STATE, ttc_threshold=3.0),
    _v("RSS1", "RSS", BOOL_STATE, response_time=1.924, accel_during_response=3.805,
       a_max_pov=4.585, a_max_sv=4.585),
    _v("RSS2", "RSS", BOOL_STATE, response_time=0.117, accel_during_response=4.836,
       a_max_pov=8.086, a_max_sv=7.986),
    _v("RSS3", "RSS", BOOL_STATE, response_time=0.75, accel_during_response=3.805,
       a_max_pov=7.0, a_max_sv=6.0),
    _v("FSM", "FSM", BOOL_STATE, response_time=0.75, comfort_decel=3.0, **_decel(6.0)),
    _v("UNReg157", "UNReg157", BOOL_STATE),
    _v("CI", "CI", REAL_STATE),
    _v("PSD", "PSD", REAL_STATE, **_decel(6.0)),
    _v("PSD_H", "PSD", REAL_STATE, **_HW),
    _v("PSD_V", "PSD", REAL_STATE, **_CD),
    _v("AD", "AD", BOOL_INCIDENT, limit_long=4.95, limit_lat=3.92),
    _v("AM", "AM", BOOL_INCIDENT),
    _v("AM_S", "AM", BOOL_STATE),
    _v("Jerk", "Jerk", REAL_STATE),
    _v("GT", "GT", REAL_STATE),
    _v("THW", "THW", REAL_STATE),
    _v("LU1", "LU", REAL_STATE, **_decel(9.82)),
    _v("LU2", "LU", REAL_STATE, **_decel(6.0)),
    _v("LU_H", "LU", REAL_STATE, **_HW),
    _v("LU_V", "LU", REAL_STATE, **_CD),
    _v("CR", "CR", DATASET, distance_unit="per_km"),
    _v("FMRI", "FMRI", DATASET, confidence=0.95),
    _v("ASS", "ASS", DATASET, eta=0.05, grid_resolution=50),
)


def default_variants() -> tuple[MetricSpec, ...]:
    return _VARIANTS


def variant_names() -> list[str]:
    return [v.variant for v in _VARIANTS]


def orientation_of(spec: MetricSpec) -> str:
    if spec.form in (BOOL_STATE, BOOL_INCIDENT):
        return SAFE_IS_TRUE
    return descriptor(spec.metric).orientation


def expand_variants(config: Optional[Mapping] = None,
                    catalogue: Iterable[MetricSpec] = _VARIANTS) -> list[MetricSpec]:
    """Resolve the variant list of a run configuration.

    Recognised keys: ``variants`` (names, or ``"all"``), ``overrides``
    (``{variant: {param: value}}``) and ``custom`` (new variants given as
    ``{variant, metric, form, ...params}``).
    """
    config = dict(config or {})
    known = {v.variant: v for v in catalogue}
    for extra in config.get("custom", []) or []:
        extra = dict(extra)
        descriptor(extra["metric"])
        if extra["variant"] in known:
            raise ValueError(f"custom variant {extra['variant']!r} clashes with an existing one")
        known[extra["variant"]] = MetricSpec(**extra)

    wanted = config.get("variants", "all")
    if wanted in (None, "all"):
        names = list(known)
    else:
        names = list(wanted)
        missing = [n for n in names if n not in known]
        if missing:
            raise KeyError(f"unknown variant(s) {missing}; available: {', '.join(known)}")

    overrides = config.get("overrides", {}) or {}
    stray = set(overrides) - set(known)
    if stray:
        raise KeyError(f"overrides for unknown variant(s) {sorted(stray)}")
    return [known[n].with_overrides(**overrides.get(n, {})) for n in names]


def catalogue_text() -> str:
    """Markdown catalogue of metrics and variants."""
    lines = ["# Metric catalogue", "",
             "| # | Acronym | Name | Category | Forms | Orientation | Assumptions |",
             "|---|---|---|---|---|---|---|"]
    for d in _DESCRIPTORS:
        tags = ", ".join(t for t in ASSUMPTION_TAGS if t in d.tags) or "-"
        lines.append(f"| {d.id} | {d.acronym} | {d.name} | {d.category} | {', '.join(d.forms)} "
                     f"| {d.orientation} | {tags} |")
    lines += ["", "## Variants", "", "| Variant | Metric | Form | Parameters |", "|---|---|---|---|"]
    base = MetricSpec(variant="", metric="")
    for v in _VARIANTS:
        changed = {k: val for k, val in v.to_dict().items()
                   if k not in ("variant", "metric", "form") and val != getattr(base, k)}
        params = ", ".join(f"{k}={val}" for k, val in sorted(changed.items())) or "defaults"
        lines.append(f"| {v.variant} | {v.metric} | {v.form} | {params} |")
    return "\n".join(lines) + "\n"
