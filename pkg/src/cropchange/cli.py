"""``cropchange`` command-line front end.

Each subcommand reads its inputs, writes CSV (full precision) and Markdown
(rounded) outputs into ``--out-dir``, and records a ``manifest.json`` with
input and output digests so a run can be replayed and checked byte for byte.
Validation problems exit with status 2 and a one-line message on stderr.
"""
from __future__ import annotations

import argparse
import datetime as dt
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .crops import (
    PUBLISHED_THRESHOLDS,
    ChangeClass,
    ChangeMap,
    FilterConfig,
    apply_ndvi_filter,
    compose_change,
    load_stack_manifest,
    peak_ndvi,
    peak_stats,
    threshold_sweep,
)
from .estimate import (
    CHANGE_LABELS,
    ConfusionMatrix,
    EstimationInfeasible,
    accuracy_report,
    build_confusion,
    estimate_area,
)
from .experiments import (
    PUBLISHED_SEEDS,
    CandidateMap,
    RegionSpec,
    buffer_comparison,
    buffer_regions,
    compare_maps,
    estimate_region,
    regional_estimates,
    subsample_experiment,
)
from .geo import WholeMap, load_zones, union
from .grid import PixelArea, class_pixel_counts, read_grid, stratum_areas, write_grid
from .ingest import (
    load_adjudications,
    load_annotations,
    load_events,
    load_labeled_points,
    load_samples,
    events_per_zone,
    write_events,
    write_samples,
)
from .report import (
    AREA_HEADER,
    accuracy_markdown,
    area_markdown,
    area_rows,
    kha,
    markdown_table,
    rate,
    summary_rows,
    write_csv,
)
from .sampling import STATUSES, allocate, draw_sample, merge_labels
from .synth import SynthSpec, coverage_trial, symmetric_confusion

log = logging.getLogger("cropchange")

INPUT_FLAGS = (
    "map_2020", "map_2021", "map", "change_map", "ndvi_manifest", "samples", "labels",
    "adjudication", "events", "zones", "points", "confusion", "candidates",
)


class UsageError(ValueError):
    pass


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _require(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n, None) in (None, "")]
    if missing:
        raise UsageError(f"{args.command}: missing required option(s) {', '.join(missing)}")


def _pixel_area(args):
    if args.pixel_area_mode == "constant":
        return PixelArea.constant(args.pixel_ha)
    return PixelArea()


def _change_map(args):
    return ChangeMap.from_grid(read_grid(args.change_map, kind="class"))


def _zones(args):
    return load_zones(args.zones) if args.zones else None


def _region(args):
    """Whole map, a named zone, or the union of all zones."""
    zones = _zones(args)
    if zones is None:
        if getattr(args, "zone", None):
            raise UsageError("--zone needs --zones")
        return WholeMap(), "all"
    if getattr(args, "zone", None):
        if args.zone not in zones:
            raise UsageError(f"zone {args.zone!r} not in {args.zones}; have {', '.join(zones)}")
        return zones[args.zone], args.zone
    return union(zones.values()), "all zones"


# --- subcommands ----------------------------------------------------------------


def cmd_compose_change(args, out):
    _require(args, "map_2020", "map_2021")
    cm = compose_change(read_grid(args.map_2020), read_grid(args.map_2021))
    write_grid(cm, out / "change_map.asc")
    areas = stratum_areas(cm, _pixel_area(args))
    counts = cm.stratum_counts
    write_csv(out / "stratum_counts.csv", ("stratum", "label", "pixels", "area_ha"),
              [(c, CHANGE_LABELS[c], counts[c], float(areas.get(c, 0.0))) for c in counts])
    return ["change_map.asc", "stratum_counts.csv"]


def cmd_ndvi_filter(args, out):
    _require(args, "map", "ndvi_manifest")
    crop = read_grid(args.map)
    peaks = peak_ndvi(load_stack_manifest(args.ndvi_manifest))
    stats = peak_stats(crop, peaks)
    filtered, n = apply_ndvi_filter(crop, peaks, FilterConfig(args.n_sigma))
    write_grid(filtered, out / "filtered_map.asc")
    write_grid(peaks, out / "peak_ndvi.asc")
    write_csv(out / "filter_summary.csv",
              ("n_sigma", "mu", "sigma", "crop_pixels", "threshold", "reclassified"),
              [(float(args.n_sigma), stats.mu, stats.sigma, stats.count,
                stats.mu - args.n_sigma * stats.sigma, n)])
    return ["filtered_map.asc", "peak_ndvi.asc", "filter_summary.csv"]


def cmd_sweep(args, out):
    _require(args, "map", "ndvi_manifest", "points")
    crop = read_grid(args.map)
    peaks = peak_ndvi(load_stack_manifest(args.ndvi_manifest))
    thresholds = [float(t) for t in args.thresholds.split(",")] if args.thresholds else PUBLISHED_THRESHOLDS
    rows = threshold_sweep(crop, peaks, load_labeled_points(args.points), thresholds)
    write_csv(out / "sweep.csv", ("n_sigma", "tpr", "fpr", "tp", "fp", "fn", "tn", "reclassified"),
              [(r.n_sigma, r.tpr, r.fpr, r.tp, r.fp, r.fn, r.tn, r.reclassified) for r in rows])
    return ["sweep.csv"]


def cmd_design_sample(args, out):
    _require(args, "change_map", "total_n")
    cm = _change_map(args)
    areas = stratum_areas(cm, _pixel_area(args))
    areas = {int(c): areas.get(int(c), 0.0) for c in ChangeClass}
    plan = allocate(args.total_n, args.prealloc, areas)
    records = draw_sample(cm, plan, args.seed)
    write_csv(out / "allocation.csv", ("stratum", "label", "area_ha", "prealloc", "n"),
              [(c, CHANGE_LABELS[c], float(areas[c]), plan.prealloc[c], plan.per_stratum_n[c]) for c in areas])
    write_samples(records, out / "samples.csv")
    return ["allocation.csv", "samples.csv"]


def cmd_merge_labels(args, out):
    _require(args, "samples", "labels")
    samples = load_samples(args.samples)
    adjud = load_adjudications(args.adjudication) if args.adjudication else ()
    merged = merge_labels(samples, load_annotations(args.labels), adjud)
    write_samples(merged, out / "samples_merged.csv")
    tally = {s: 0 for s in STATUSES}
    for r in merged:
        tally[r.consensus_status] += 1
    write_csv(out / "consensus_summary.csv", ("consensus_status", "count"), list(tally.items()))
    return ["samples_merged.csv", "consensus_summary.csv"]


def _confusion_from_json(path):
    doc = json.loads(Path(path).read_text())
    ref = [str(c) for c in doc["ref_classes"]]
    strata = [str(s) for s in doc.get("strata", ref[: len(doc["counts"])])]
    counts = np.asarray(doc["counts"], dtype=np.int64)
    if "stratum_areas_ha" in doc:
        areas = np.asarray(doc["stratum_areas_ha"], dtype=float)
    else:
        areas = np.asarray(doc["weights"], dtype=float) * float(doc["total_area_ha"])
    cm = ConfusionMatrix.from_areas(tuple(strata), tuple(ref), counts, areas)
    return cm, tuple(ref)


def _write_estimate(out, est, title, cm=None, labels=None):
    write_csv(out / "estimates.csv", AREA_HEADER, area_rows(est))
    write_csv(out / "summary.csv", ("class", "area_ha", "ci95_ha"), summary_rows(est))
    md = f"# {title}\n\n" + area_markdown(est, "Area estimates")
    files = ["estimates.csv", "summary.csv"]
    if cm is not None and tuple(cm.strata) == tuple(cm.ref_classes):
        acc = accuracy_report(cm)
        labels = labels or {c: str(c) for c in cm.strata}
        write_csv(out / "accuracy.csv",
                  ("class", "label", "users_accuracy", "users_accuracy_se", "producers_accuracy",
                   "producers_accuracy_se", "f1", "tpr", "fpr", "overall_accuracy", "overall_accuracy_se"),
                  [(c.code, labels.get(c.code, str(c.code)), c.users_accuracy, c.users_accuracy_se,
                    c.producers_accuracy, c.producers_accuracy_se, c.f1, c.tpr, c.fpr,
                    acc.overall_accuracy, acc.overall_accuracy_se) for c in acc.classes])
        md += "\n" + accuracy_markdown(acc, labels, "Accuracy")
        files.append("accuracy.csv")
    (out / "report.md").write_text(md)
    return files + ["report.md"]


def cmd_estimate_area(args, out):
    if args.confusion:
        cm, ref = _confusion_from_json(args.confusion)
        est = estimate_area(cm, labels=ref)
        return _write_estimate(out, est, "Area estimate")
    _require(args, "change_map", "samples")
    region, name = _region(args)
    cmap = _change_map(args)
    areas = stratum_areas(cmap, _pixel_area(args), None if isinstance(region, WholeMap) else region)
    areas = {int(c): areas.get(int(c), 0.0) for c in ChangeClass}
    cm = build_confusion(load_samples(args.samples), "change", areas, restrict=region)
    est = estimate_area(cm, labels=tuple(CHANGE_LABELS.values()))
    return _write_estimate(out, est, f"Change area estimate ({name})", cm, CHANGE_LABELS)


def cmd_estimate_annual(args, out):
    _require(args, "change_map", "samples", "year")
    region, name = _region(args)
    cmap = _change_map(args)
    areas = stratum_areas(cmap, _pixel_area(args), None if isinstance(region, WholeMap) else region)
    areas = {int(c): areas.get(int(c), 0.0) for c in ChangeClass}
    cm = build_confusion(load_samples(args.samples), args.year, areas, restrict=region)
    est = estimate_area(cm, labels=("noncrop", "crop"))
    return _write_estimate(out, est, f"{args.year} crop area estimate ({name})")


def _region_rows(res):
    rows = []
    for kind, est in [("change", res.change)] + [(str(y), res.annual.get(y)) for y in (2020, 2021)]:
        key = "change" if kind == "change" else int(kind)
        if est is None:
            rows.append((res.name, kind, "", "", "", "", "", "", res.n_samples, res.errors.get(key, "")))
            continue
        for c, lab, p, se, a, ci in est.rows():
            rows.append((res.name, kind, c, lab, p, se, a, ci, res.n_samples, ""))
    return rows


REGION_HEADER = ("region", "estimate", "class", "label", "proportion", "se_proportion",
                 "area_ha", "ci95_ha", "n_samples", "error")


def cmd_subset(args, out):
    _require(args, "change_map", "samples", "zones")
    zones = load_zones(args.zones)
    if args.zone:
        region, name = _region(args)
        regions = [RegionSpec(name, region)]
    else:
        regions = [RegionSpec(name, z) for name, z in zones.items()]
        regions.append(RegionSpec("all zones", union(zones.values())))
    results = regional_estimates(_change_map(args), load_samples(args.samples), regions, _pixel_area(args))
    rows = [row for res in results for row in _region_rows(res)]
    write_csv(out / "regional.csv", REGION_HEADER, rows)
    md = ["# Regional estimates (kha)\n"]
    for kind in ("2020", "2021", "change"):
        table = []
        for res in results:
            est = res.change if kind == "change" else res.annual.get(int(kind))
            if est is None:
                table.append((res.name, "infeasible"))
                continue
            table.append((res.name, "; ".join(f"{lab} {kha(a)} ± {kha(ci)}" for _, lab, _, _, a, ci in est.rows())))
        md.append(f"## {kind}\n\n" + markdown_table(("Region", "Estimates"), table))
    (out / "report.md").write_text("\n".join(md))
    return ["regional.csv", "report.md"]


def _events(args):
    _require(args, "events")
    loaded = load_events(args.events, exclude_types=args.exclude_types, date_range=_date_range(args))
    if loaded.skipped:
        print(f"warning: skipped {len(loaded.skipped)} malformed event row(s)", file=sys.stderr)
    return loaded


def _date_range(args):
    if args.date_from is None and args.date_to is None:
        return None
    return (dt.date.fromisoformat(args.date_from) if args.date_from else dt.date.min,
            dt.date.fromisoformat(args.date_to) if args.date_to else dt.date.max)


def cmd_buffer_compare(args, out):
    _require(args, "change_map", "samples", "events")
    region, _ = _region(args)
    loaded = _events(args)
    comp = buffer_comparison(_change_map(args), load_samples(args.samples), loaded.events,
                             args.radius_m, region, _pixel_area(args))
    rows, table = [], []
    for side in (comp.inside, comp.outside):
        res = side.result
        if res.change is None:
            rows.append((side.name, "", "", "", "", "", "", float(res.total_area), res.n_samples,
                         res.errors.get("change", "")))
            continue
        for c, lab, p, se, a, ci in res.change.rows():
            lo, hi = side.percent[c]
            rows.append((side.name, c, lab, a, ci, lo, hi, float(res.total_area), res.n_samples, ""))
    write_csv(out / "buffer.csv", ("side", "class", "label", "area_ha", "ci95_ha", "pct_lo", "pct_hi",
                                   "side_area_ha", "n_samples", "error"), rows)
    for c in ChangeClass:
        cells = [CHANGE_LABELS[int(c)]]
        for side in (comp.inside, comp.outside):
            est = side.result.change
            if est is None:
                cells.append("infeasible")
                continue
            a, ci = est[int(c)]
            lo, hi = side.percent[int(c)]
            cells.append(f"{kha(a)} ± {kha(ci)} ({lo}-{hi}%)")
        table.append(cells)
    md = f"# Change inside and outside a {args.radius_m:g} m event buffer (kha)\n\n"
    md += f"Events used: {len(loaded.events)}; skipped rows: {len(loaded.skipped)}\n\n"
    md += markdown_table(("Class", "Inside buffer", "Outside buffer"), table)
    (out / "report.md").write_text(md)
    return ["buffer.csv", "report.md"]


def cmd_subsample_exp(args, out):
    _require(args, "change_map", "samples", "events")
    region, _ = _region(args)
    loaded = _events(args)
    inside, outside = buffer_regions(loaded.events, args.radius_m, region)
    cmap = _change_map(args)
    samples = load_samples(args.samples)
    pa = _pixel_area(args)
    out_res = estimate_region(cmap, samples, outside, pa, name="outside")
    in_res = estimate_region(cmap, samples, inside, pa, name="inside")
    lon = np.array([s.lon for s in samples])
    lat = np.array([s.lat for s in samples])
    outside_samples = [s for s, k in zip(samples, outside.contains(lon, lat)) if k]
    n_sub = args.n_sub
    if n_sub is None:
        n_sub = sum(1 for s, k in zip(samples, inside.contains(lon, lat)) if k and s.reference("change") is not None)
    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else list(PUBLISHED_SEEDS)
    res = subsample_experiment(outside_samples, n_sub, seeds, out_res.stratum_areas)
    write_csv(out / "subsample.csv",
              ("seed", "n", "loss_area_ha", "loss_ci95_ha", "oa", "oa_ci95", "ua", "ua_ci95", "pa", "pa_ci95", "error"),
              [(r.seed, r.n, r.loss_area_ha, r.loss_ci95_ha, r.oa, r.oa_ci95, r.ua, r.ua_ci95, r.pa, r.pa_ci95, r.error)
               for r in res.rows])
    write_csv(out / "subsample_summary.csv", ("statistic", "loss_area_ha", "loss_ci95_ha", "n_sub", "n_seeds_ok"),
              [("median", res.median_area_ha, res.median_ci95_ha, n_sub, len(res.feasible_rows)),
               ("mean", res.mean_area_ha, res.mean_ci95_ha, n_sub, len(res.feasible_rows))])
    table = [(r.seed, f"{kha(r.loss_area_ha)} ± {kha(r.loss_ci95_ha)}" if not r.error else "infeasible",
              rate(r.oa), rate(r.ua), rate(r.pa)) for r in res.rows]
    table.append(("Median", f"{kha(res.median_area_ha)} ± {kha(res.median_ci95_ha)}", "--", "--", "--"))
    table.append(("Mean", f"{kha(res.mean_area_ha)} ± {kha(res.mean_ci95_ha)}", "--", "--", "--"))
    md = (f"# Outside-buffer loss with n={n_sub} subsamples\n\n"
          f"Inside-buffer samples: {in_res.n_samples}; outside pool: {len(outside_samples)}\n\n")
    md += markdown_table(("Seed", "Cropland loss area (kha)", "OA", "UA", "PA"), table)
    (out / "report.md").write_text(md)
    return ["subsample.csv", "subsample_summary.csv", "report.md"]


def _load_candidates(path):
    base = Path(path).parent
    doc = json.loads(Path(path).read_text())
    cands = []
    for entry in doc:
        code_map = {int(c): True for c in entry["crop_codes"]}
        noncrop = entry.get("noncrop_codes", "*")
        default = False if noncrop == "*" else None
        if noncrop != "*":
            code_map.update({int(c): False for c in noncrop})
        cands.append(CandidateMap(entry["name"], read_grid(base / entry["path"]), code_map, default))
    return cands


def cmd_compare_maps(args, out):
    _require(args, "candidates", "points")
    results = compare_maps(_load_candidates(args.candidates), load_labeled_points(args.points), seed=args.seed)
    rows, table = [], []
    for name, rep, (tn, fp, fn, tp) in results:
        c = rep.cls(1)
        rows.append((name, c.f1, rep.ci95["f1"], rep.overall_accuracy, rep.ci95["overall_accuracy"],
                     c.producers_accuracy, rep.ci95["producers_accuracy"], c.users_accuracy,
                     rep.ci95["users_accuracy"], tn, fp, fn, tp))
        table.append((name, f"{rate(c.f1)} ± {rate(rep.ci95['f1'])}",
                      f"{rate(rep.overall_accuracy)} ± {rate(rep.ci95['overall_accuracy'])}",
                      f"{rate(c.producers_accuracy)} ± {rate(rep.ci95['producers_accuracy'])}",
                      f"{rate(c.users_accuracy)} ± {rate(rep.ci95['users_accuracy'])}", tn, fp, fn, tp))
    write_csv(out / "compare.csv", ("map", "f1", "f1_ci95", "oa", "oa_ci95", "recall_pa", "recall_pa_ci95",
                                    "precision_ua", "precision_ua_ci95", "tn", "fp", "fn", "tp"), rows)
    (out / "report.md").write_text("# Map comparison\n\n" + markdown_table(
        ("Map", "F1", "OA", "Recall (PA)", "Precision (UA)", "TN", "FP", "FN", "TP"), table))
    return ["compare.csv", "report.md"]


def cmd_load_events(args, out):
    loaded = _events(args)
    write_events(loaded.events, out / "events.csv")
    tally = loaded.tally
    write_csv(out / "event_tally.csv", ("event_type", "count"),
              sorted(tally.items(), key=lambda kv: (-kv[1], kv[0])) + [("total", len(loaded.events))])
    write_csv(out / "skipped.csv", ("line", "reason"), loaded.skipped)
    files = ["events.csv", "event_tally.csv", "skipped.csv"]
    zones = _zones(args)
    if zones:
        write_csv(out / "zone_counts.csv", ("zone", "count"), list(events_per_zone(loaded.events, zones).items()))
        files.append("zone_counts.csv")
    return files


def cmd_simulate(args, out):
    spec = SynthSpec(nrows=args.size, ncols=args.size, error_matrix=symmetric_confusion(args.error_rate),
                     seed=args.seed, patch_size=args.patch_size)
    res = coverage_trial(spec, n_samples=args.total_n or 800, reps=args.reps, prealloc=args.prealloc)
    header = ["rep"] + [f"area_{CHANGE_LABELS[c]}" for c in range(4)] + [f"ci95_{CHANGE_LABELS[c]}" for c in range(4)]
    rows = [[str(r)] + [float(v) for v in res.estimates[r]] + [float(v) for v in res.ci95[r]]
            for r in range(args.reps)]
    rows.append(["true"] + [float(v) for v in res.true_area] + [""] * 4)
    rows.append(["mean"] + [float(v) for v in res.mean_estimate] + [""] * 4)
    rows.append(["relative_bias"] + [float(v) for v in res.relative_bias] + [""] * 4)
    rows.append(["coverage"] + [""] * 4 + [float(v) for v in res.coverage])
    write_csv(out / "simulate.csv", header, rows)
    return ["simulate.csv"]


COMMANDS = {
    "compose-change": cmd_compose_change,
    "ndvi-filter": cmd_ndvi_filter,
    "sweep": cmd_sweep,
    "design-sample": cmd_design_sample,
    "merge-labels": cmd_merge_labels,
    "estimate-area": cmd_estimate_area,
    "estimate-annual": cmd_estimate_annual,
    "subset": cmd_subset,
    "buffer-compare": cmd_buffer_compare,
    "subsample-exp": cmd_subsample_exp,
    "compare-maps": cmd_compare_maps,
    "load-events": cmd_load_events,
    "simulate": cmd_simulate,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("inputs")
    for flag in ("--map-2020", "--map-2021", "--map", "--change-map", "--ndvi-manifest", "--samples",
                 "--labels", "--adjudication", "--events", "--zones", "--points", "--confusion",
                 "--candidates"):
        g.add_argument(flag)
    common.add_argument("--zone", help="restrict to one named zone from --zones")
    common.add_argument("--radius-m", type=float, default=5000.0)
    common.add_argument("--n-sigma", type=float, default=3.5)
    common.add_argument("--thresholds", help="comma-separated n values for sweep")
    common.add_argument("--total-n", type=int)
    common.add_argument("--prealloc", type=int, default=100)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--seeds", help="comma-separated seeds for subsample-exp")
    common.add_argument("--n-sub", type=int)
    common.add_argument("--year", type=int, choices=(2020, 2021))
    common.add_argument("--exclude-types", nargs="*", default=["Peaceful protest"])
    common.add_argument("--date-from")
    common.add_argument("--date-to")
    common.add_argument("--pixel-area-mode", choices=("latitude", "constant"), default="latitude")
    common.add_argument("--pixel-ha", type=float, default=0.01, help="hectares per pixel in constant mode")
    common.add_argument("--reps", type=int, default=500)
    common.add_argument("--size", type=int, default=200, help="synthetic grid side in pixels")
    common.add_argument("--error-rate", type=float, default=0.1)
    common.add_argument("--patch-size", type=int, default=5)
    common.add_argument("--out-dir", default="out")

    parser = argparse.ArgumentParser(prog="cropchange", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _manifest(argv, args, outputs, out):
    inputs = {}
    for key in INPUT_FLAGS:
        p = getattr(args, key, None)
        if p:
            inputs[str(p)] = _sha256(p)
    config = {k: v for k, v in sorted(vars(args).items()) if k not in INPUT_FLAGS and k != "out_dir"}
    doc = {
        "command": args.command,
        "argv": list(argv),
        "tool_version": __version__,
        "seed": args.seed,
        "config": config,
        "inputs": inputs,
        "outputs": {name: _sha256(out / name) for name in outputs},
    }
    (out / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")


def run(argv=None):
    """Run one subcommand; return the process exit status."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = Path(args.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        outputs = COMMANDS[args.command](args, out)
        _manifest(argv, args, outputs, out)
    except EstimationInfeasible as exc:
        print(f"cropchange {args.command}: estimation infeasible: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError, TypeError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"cropchange {args.command}: error: {msg}", file=sys.stderr)
        return 2
    return 0


def replay(manifest_path, out_dir=None):
    """Re-run the command recorded in a manifest.

    Returns ``(status, mismatches)`` where ``mismatches`` lists outputs whose
    digest differs from the recorded one.
    """
    doc = json.loads(Path(manifest_path).read_text())
    argv = list(doc["argv"])
    if out_dir is not None:
        argv += ["--out-dir", str(out_dir)]
    status = run(argv)
    target = Path(out_dir) if out_dir is not None else Path(build_parser().parse_args(argv).out_dir)
    bad = [name for name, digest in doc["outputs"].items()
           if not (target / name).exists() or _sha256(target / name) != digest]
    return status, bad


def main():
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(run())


if __name__ == "__main__":
    main()
