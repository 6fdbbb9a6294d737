"""Deterministic on-disk containers for datasets and metric-output archives.

Both are zip files of ``.npy`` members plus a ``manifest.json``, readable
with :func:`numpy.load`.  Member timestamps are pinned so identical content
gives byte-identical files.
"""
from __future__ import annotations

import datetime as _dt
import io
import json
import zipfile
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .model import Dataset, Incident, OddBox, PairState, VehicleKinematics
from .spec import MetricOutput

FORMAT_VERSION = 1
_FIXED_TIME = (1980, 1, 1, 0, 0, 0)
_VEHICLE_FIELDS = ("x", "y", "v_long", "v_lat", "a_long", "a_lat", "heading", "length", "width")


def _write_zip(path, arrays: dict, manifest: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        def put(name, data: bytes):
            info = zipfile.ZipInfo(name, date_time=_FIXED_TIME)
            info.compress_type = zipfile.ZIP_DEFLATED
            info.external_attr = 0o644 << 16
            zf.writestr(info, data)

        put("manifest.json", json.dumps(manifest, indent=2, sort_keys=True).encode())
        for name in sorted(arrays):
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.ascontiguousarray(arrays[name]), allow_pickle=False)
            put(f"{name}.npy", buf.getvalue())


def _read_zip(path) -> tuple[dict, dict]:
    with zipfile.ZipFile(path) as zf:
        manifest = json.loads(zf.read("manifest.json"))
        arrays = {}
        for name in zf.namelist():
            if name.endswith(".npy"):
                arrays[name[:-4]] = np.lib.format.read_array(io.BytesIO(zf.read(name)), allow_pickle=False)
    return manifest, arrays


def _stamp(manifest: dict, timestamp: bool) -> dict:
    if timestamp:
        manifest["created"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return manifest


def save_dataset(dataset: Dataset, path, timestamp: bool = False) -> None:
    states = [s for inc in dataset.incidents for s in inc.states]
    arrays = {
        "incident_length": np.array([len(inc) for inc in dataset.incidents], dtype=np.int64),
        "incident_sv": np.array([inc.sv_id for inc in dataset.incidents], dtype=np.int64),
        "incident_pov": np.array([inc.pov_id for inc in dataset.incidents], dtype=np.int64),
        "incident_frequency": np.array([inc.frequency for inc in dataset.incidents], dtype=float),
        "t": np.array([s.t for s in states], dtype=np.int64),
        "dt": np.array([s.dt for s in states], dtype=float),
        "dhw": np.array([s.dhw for s in states], dtype=float),
        "collision": np.array([s.collision for s in states], dtype=bool),
    }
    for who in ("sv", "pov"):
        for name in _VEHICLE_FIELDS:
            arrays[f"{who}_{name}"] = np.array([getattr(getattr(s, who), name) for s in states], dtype=float)
        arrays[f"{who}_class"] = np.array([getattr(s, who).vclass for s in states], dtype="<U5")
    manifest = {
        "kind": "leadsafety-dataset",
        "version": FORMAT_VERSION,
        "source": dataset.source,
        "odd": dataset.odd.to_dict(),
        "incident_ids": [inc.id for inc in dataset.incidents],
        "N_s": len(states),
        "N_I": dataset.N_I,
    }
    _write_zip(path, arrays, _stamp(manifest, timestamp))


def load_dataset(path) -> Dataset:
    manifest, a = _read_zip(path)
    if manifest.get("kind") != "leadsafety-dataset":
        raise ValueError(f"{path}: not a dataset file")
    lists = {k: v.tolist() for k, v in a.items()}

    def vehicle(who, i):
        kw = {name: lists[f"{who}_{name}"][i] for name in _VEHICLE_FIELDS}
        return VehicleKinematics(vclass=lists[f"{who}_class"][i], **kw)

    incidents = []
    pos = 0
    for k, n in enumerate(lists["incident_length"]):
        states = tuple(
            PairState(lists["t"][i], lists["dt"][i], vehicle("sv", i), vehicle("pov", i),
                      lists["dhw"][i], collision=lists["collision"][i])
            for i in range(pos, pos + n))
        incidents.append(Incident(manifest["incident_ids"][k], lists["incident_sv"][k],
                                  lists["incident_pov"][k], states, lists["incident_frequency"][k]))
        pos += n
    return Dataset(tuple(incidents), OddBox.from_dict(manifest["odd"]), manifest.get("source", ""))


def save_outputs(outputs: Sequence[MetricOutput], path, dataset: Optional[Dataset] = None,
                 timestamp: bool = False) -> None:
    """Write one self-describing record per variant.

    When ``dataset`` is given, the SV id of every state and incident is stored
    too, so per-SV summaries can be built from the archive alone.
    """
    arrays, records = {}, []
    for k, out in enumerate(outputs):
        key = f"out{k:03d}"
        arrays[key] = np.asarray(out.values)
        extras = []
        for name in sorted(out.extras):
            arrays[f"{key}_{name}"] = np.asarray(out.extras[name])
            extras.append(name)
        records.append({"variant": out.variant, "metric": out.metric, "form": out.form,
                        "orientation": out.orientation, "key": key, "extras": extras})
    manifest = {"kind": "leadsafety-outputs", "version": FORMAT_VERSION, "records": records}
    if dataset is not None:
        arrays["state_sv"] = dataset.table.sv_id
        arrays["incident_sv"] = np.array([inc.sv_id for inc in dataset.incidents], dtype=np.int64)
        arrays["sv_ids"] = np.array(dataset.sv_ids, dtype=np.int64)
        manifest["source"] = dataset.source
    _write_zip(path, arrays, _stamp(manifest, timestamp))


def load_outputs(path) -> tuple[list[MetricOutput], dict]:
    """Return the outputs and a dict of auxiliary arrays (SV ids) plus the manifest."""
    manifest, a = _read_zip(path)
    if manifest.get("kind") != "leadsafety-outputs":
        raise ValueError(f"{path}: not a metric-output archive")
    outputs = [
        MetricOutput(r["variant"], r["metric"], r["form"], r["orientation"], a[r["key"]],
                     {name: a[f"{r['key']}_{name}"] for name in r["extras"]})
        for r in manifest["records"]]
    aux = {k: a[k] for k in ("state_sv", "incident_sv", "sv_ids") if k in a}
    aux["manifest"] = manifest
    return outputs, aux
