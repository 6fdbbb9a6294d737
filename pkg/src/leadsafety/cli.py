"""Command-line pipeline: ingest -> eval -> agree -> report, plus synth and catalogue."""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import ingest, registry
from .agreement import agreement_matrix, display_values
from .evaluate import evaluate
from .io import load_dataset, load_outputs, save_dataset, save_outputs
from .model import Dataset, OddBox
from .spec import BOOL_INCIDENT, BOOL_STATE, DATASET, FORMS

log = logging.getLogger("leadsafety")


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _config(args) -> dict:
    return ingest.load_run_config(args.config) if args.config else {}


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _csv_text(header, rows, timestamp: bool) -> str:
    buf = io.StringIO()
    if timestamp:
        buf.write(f"# generated {_now()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _summary(dataset: Dataset) -> dict:
    return {"N_s": dataset.N_s, "N_I": dataset.N_I, "sv_ids": dataset.sv_ids}


# -- subcommands


def cmd_ingest(args) -> int:
    cfg = _config(args)
    schema = ingest.CsvSchema.load(args.schema) if args.schema else ingest.CsvSchema.from_dict(cfg.get("schema"))
    odd = OddBox.from_dict(cfg.get("odd"))
    lanes = cfg.get("lanes")

    def one(path):
        tracks = ingest.parse_trajectory_csv(path, schema)
        return ingest.extract_lead_pairs(tracks, odd, lanes, source=str(path)).incidents

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        parts = list(pool.map(one, args.paths))
    dataset = Dataset(tuple(inc for part in parts for inc in part), odd, ";".join(map(str, args.paths)))
    hz = cfg.get("resample_hz")
    if hz:
        dataset = ingest.resample_dataset(dataset, float(hz))
    if dataset.N_s == 0:
        log.warning("no lead-vehicle states extracted; writing an empty dataset")
    out = Path(args.out) / "dataset.npz"
    save_dataset(dataset, out, timestamp=not args.no_timestamp)
    print(json.dumps({"dataset": str(out), **_summary(dataset)}))
    return 0


def cmd_synth(args) -> int:
    incidents = []
    for k, path in enumerate(args.scripts):
        script = ingest.load_scenario(path)
        incidents.append(ingest.synth_scenario(script, f"synth-{k}-{Path(path).stem}"))
    dataset = Dataset(tuple(incidents), OddBox.from_dict(_config(args).get("odd")), "synth")
    out = Path(args.out) / "dataset.npz"
    save_dataset(dataset, out, timestamp=not args.no_timestamp)
    print(json.dumps({"dataset": str(out), **_summary(dataset),
                      "collided": [inc.id for inc in incidents if inc.collided]}))
    return 0


def cmd_eval(args) -> int:
    cfg = _config(args)
    if args.variants:
        cfg["variants"] = args.variants.split(",")
    specs = registry.expand_variants(cfg)
    dataset = load_dataset(args.dataset)
    outputs = evaluate(dataset, specs, jobs=args.jobs)
    out = Path(args.out) / "outputs.npz"
    save_outputs(outputs, out, dataset, timestamp=not args.no_timestamp)
    print(json.dumps({"archive": str(out), "variants": len(outputs), **_summary(dataset)}))
    return 0


def _slug(form: str) -> str:
    return form.replace("/", "_")


def cmd_agree(args) -> int:
    outputs, _ = load_outputs(args.archive)
    mode = args.mode or _config(args).get("agreement", {}).get("mode", "aid")
    out_dir = Path(args.out)
    written = []
    for form in FORMS:
        if form == DATASET:
            continue
        group = [o for o in outputs if o.form == form]
        if not group:
            continue
        if mode != "aid" and form not in (BOOL_STATE, BOOL_INCIDENT):
            log.info("%s on real-valued outputs is micro-averaged and equals AID", mode)
        mat = agreement_matrix(group, mode, jobs=args.jobs)
        shown = display_values(mat.values, args.round)
        rows = [[label] + [f"{v:.{args.round}f}" for v in row] for label, row in zip(mat.labels, shown)]
        stem = out_dir / f"agreement_{mode}_{_slug(form)}"
        _write_text(stem.with_suffix(".csv"),
                    _csv_text(["variant", *mat.labels], rows, not args.no_timestamp))
        doc = {"mode": mode, "form": form, "labels": list(mat.labels),
               "values": [[None if np.isnan(v) else float(v) for v in row] for row in mat.values]}
        if not args.no_timestamp:
            doc["generated"] = _now()
        _write_text(stem.with_suffix(".json"), json.dumps(doc, indent=2) + "\n")
        written.append(str(stem.with_suffix(".csv")))
    print(json.dumps({"matrices": written}))
    return 0


def report_rows(outputs, aux) -> tuple[list[str], list[list]]:
    """Per-SV table: dataset metrics and unsafe-state rates, worst SV flagged per row."""
    sv_ids = [int(s) for s in aux["sv_ids"]]
    state_sv = aux["state_sv"]
    rows = []

    def add(label, values, worst_is_max=True):
        values = np.asarray(values, dtype=float)
        finite = np.where(np.isnan(values), -np.inf if worst_is_max else np.inf, values)
        worst = sv_ids[int(np.argmax(finite) if worst_is_max else np.argmin(finite))] if values.size else ""
        rows.append([label, *[f"{v:.6g}" for v in values], worst])

    for o in outputs:
        if o.form != DATASET:
            continue
        name = "eps_bar" if o.metric == "ASS" else o.variant
        add(f"{o.variant}:{name}" if o.metric == "ASS" else name, o.values)
        for extra in sorted(o.extras):
            add(f"{o.variant}:{extra}", o.extras[extra], worst_is_max=False)
    for o in outputs:
        if o.form != BOOL_STATE:
            continue
        rates = [float(np.mean(~o.values[state_sv == k])) if np.any(state_sv == k) else float("nan")
                 for k in sv_ids]
        add(f"{o.variant}:unsafe_rate", rates)
    return ["row", *[f"sv_{k}" for k in sv_ids], "worst_sv"], rows


def cmd_report(args) -> int:
    outputs, aux = load_outputs(args.archive)
    if "sv_ids" not in aux:
        raise ValueError(f"{args.archive}: archive carries no SV index; re-run eval")
    header, rows = report_rows(outputs, aux)
    out = Path(args.out) / "report.csv"
    _write_text(out, _csv_text(header, rows, not args.no_timestamp))
    print(json.dumps({"report": str(out), "rows": len(rows)}))
    return 0


def cmd_catalogue(args) -> int:
    out = Path(args.out) / "catalogue.md"
    _write_text(out, registry.catalogue_text())
    print(json.dumps({"catalogue": str(out), "metrics": len(registry.registry()),
                      "variants": len(registry.default_variants())}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration (YAML or JSON)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="parallel workers")
    common.add_argument("--no-timestamp", action="store_true", help="omit generation timestamps")
    common.add_argument("--round", type=int, default=2, help="display decimals for matrices")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="leadsafety", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", parents=[common], help="trajectory CSV -> dataset file")
    s.add_argument("paths", nargs="+")
    s.add_argument("--schema", help="column/unit schema file")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("synth", parents=[common], help="scenario scripts -> dataset file")
    s.add_argument("scripts", nargs="+")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("eval", parents=[common], help="dataset -> metric-output archive")
    s.add_argument("dataset")
    s.add_argument("--variants", help="comma-separated variant names (default: all)")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("agree", parents=[common], help="archive -> agreement matrices")
    s.add_argument("archive")
    s.add_argument("--mode", choices=("aid", "precision", "recall"))
    s.set_defaults(func=cmd_agree)

    s = sub.add_parser("report", parents=[common], help="archive -> per-SV summary")
    s.add_argument("archive")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("catalogue", parents=[common], help="write the metric catalogue")
    s.set_defaults(func=cmd_catalogue)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"leadsafety {args.command}: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
