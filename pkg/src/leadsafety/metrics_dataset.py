"""Dataset-level metrics: collision rate, failure-free-miles inference, almost-safe set."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .model import Dataset, OddBox
from .spec import MetricSpec

METERS_PER_KM = 1000.0
METERS_PER_MILE = 1609.344
_UNITS = {"per_km": METERS_PER_KM, "per_mile": METERS_PER_MILE}


def distance_travelled(dataset: Dataset) -> float:
    """SV distance in metres, integrated as sum(v_sv * dt) over states."""
    tab = dataset.table
    return float(np.sum(tab.v_sv * tab.dt))


def collision_count(dataset: Dataset) -> int:
    return sum(1 for inc in dataset.incidents if inc.collided)


def collision_rate(dataset: Dataset, unit: str = "per_km") -> float:
    """Collisions per unit distance driven by the SV."""
    if unit not in _UNITS:
        raise ValueError(f"unknown distance unit {unit!r}; use one of {sorted(_UNITS)}")
    distance = distance_travelled(dataset) / _UNITS[unit]
    if distance <= 0:
        raise ValueError("empty exposure: the SV covered no distance")
    return collision_count(dataset) / distance


def fmri_from_miles(miles: float, confidence: float = 0.95) -> float:
    """Upper bound on the failure rate per mile after ``miles`` failure-free miles."""
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    if miles <= 0:
        return 1.0
    return min(1.0, -math.log(1.0 - confidence) / miles)


def fmri(dataset: Dataset, spec: MetricSpec) -> float:
    """Failure-free miles risk inference; any collision makes the data inadmissible (1.0)."""
    if collision_count(dataset):
        return 1.0
    return fmri_from_miles(distance_travelled(dataset) / METERS_PER_MILE, spec.confidence)


def clopper_pearson_upper(k: int, n: int, eta: float) -> float:
    """One-sided Clopper-Pearson upper bound at confidence 1 - eta for k events in n trials."""
    if n <= 0 or k >= n:
        return 1.0
    return float(stats.beta.ppf(1.0 - eta, k + 1, n - k))


@dataclass(frozen=True)
class AlmostSafeSet:
    resolution: tuple[int, int, int]
    occupied: np.ndarray  # flat indices of occupied cells
    epsilon_bar: float
    occupancy: float
    density: float
    eta: float
    exits: int
    transitions: int
    states_inside: int

    @property
    def total_cells(self) -> int:
        return int(np.prod(self.resolution))

    def contains_cell(self, cell: int) -> bool:
        return bool(np.isin(cell, self.occupied))


def cell_index(features: np.ndarray, odd: OddBox, resolution) -> np.ndarray:
    """Flat grid-cell index per row of (dhw, v_sv, dv); -1 outside the box."""
    res = np.asarray(resolution)
    lo, hi = odd.lower, odd.upper
    inside = np.all((features >= lo) & (features <= hi), axis=1)
    idx = np.floor((features - lo) / (hi - lo) * res).astype(np.int64)
    idx = np.clip(idx, 0, res - 1)
    flat = np.ravel_multi_index(idx.T, tuple(res))
    return np.where(inside, flat, -1)


def almost_safe_set(dataset: Dataset, spec: MetricSpec) -> AlmostSafeSet:
    """Grid approximation of the almost-safe set over (dhw, SV speed, closing speed).

    Occupied cells hold at least one collision-free state.  Every transition
    between consecutive states that starts in an occupied cell is a trial; it
    is an exit when the next state is a collision or leaves the box.
    """
    res = spec.grid_resolution
    resolution = (res, res, res) if np.isscalar(res) else tuple(int(r) for r in res)
    if min(resolution) < 2:
        raise ValueError("almost-safe-set grid needs at least 2 cells per axis")
    if dataset.N_s == 0:
        raise ValueError("almost-safe set of an empty dataset")
    tab = dataset.table
    feats = np.column_stack([tab.dhw, tab.v_sv, tab.dv])
    cells = cell_index(feats, dataset.odd, resolution)
    good = (cells >= 0) & ~tab.collision
    occupied = np.unique(cells[good])

    same_incident = tab.incident[1:] == tab.incident[:-1]
    start_ok = good[:-1] & same_incident
    exit_ = start_ok & ((cells[1:] < 0) | tab.collision[1:])
    n, k = int(start_ok.sum()), int(exit_.sum())

    total = int(np.prod(resolution))
    inside = int(good.sum())
    return AlmostSafeSet(
        resolution=resolution,
        occupied=occupied,
        epsilon_bar=clopper_pearson_upper(k, n, spec.eta),
        occupancy=occupied.size / total,
        density=inside / occupied.size if occupied.size else 0.0,
        eta=spec.eta,
        exits=k,
        transitions=n,
        states_inside=inside,
    )
