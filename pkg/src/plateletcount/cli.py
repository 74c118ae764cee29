"""Command-line entry point: ``plateletcount {synth,count,eval,maskstats,weights}``.

Exit status is 0 on success, 2 for usage errors and 3 for data or format errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

from . import __version__
from .core import CountParams, DbscanParams, InputError, Method, PamParams, PcmParams, PlateletError
from .counting import count_clusters, image_clusters
from .formats import (
    CountReport,
    atomic_write,
    dumps_json,
    fit_to_dict,
    group_to_dict,
    read_mask,
    read_plane,
    read_report,
    read_truth,
    write_mask,
    write_plane,
    write_report,
    write_truth,
)
from .metrics import class_weights, group_stats, linear_fit, mask_metrics, match_truth, mean_group_stats
from .synth import DIFFICULTIES, benchmark_suite

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _path_list(text: str) -> list[str]:
    return [v for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="plateletcount", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="render a synthetic benchmark suite")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--height", type=int, default=32)
    s.add_argument("--width", type=int, default=32)
    s.add_argument("--sizes", type=_int_list, default=[1, 2, 3, 4])
    s.add_argument("--per-size", type=int, default=10)
    s.add_argument("--difficulty", choices=sorted(DIFFICULTIES), default="clean")
    s.add_argument("--out-dir", required=True)

    c = sub.add_parser("count", help="count platelets in one mask")
    c.add_argument("--mask", required=True)
    c.add_argument("--plane")
    c.add_argument("--method", choices=[m.value for m in Method], required=True)
    c.add_argument("--classes", type=_int_list, default=[2, 9])
    c.add_argument("--eps", type=float, default=1.0)
    c.add_argument("--min-samples", type=int, default=1)
    c.add_argument("--margin", type=int, default=5)
    c.add_argument("--threshold", type=float, default=0.9)
    c.add_argument("--platelet-area", type=float, default=3.0)
    c.add_argument("--no-restrict", action="store_true", help="count peaks anywhere in the padded crop")
    c.add_argument("--truth")
    c.add_argument("--out", required=True)

    e = sub.add_parser("eval", help="per-size statistics and regression over count reports")
    e.add_argument("--reports", type=_path_list, required=True)
    e.add_argument("--out", required=True)

    m = sub.add_parser("maskstats", help="per-class F1 and accuracy of a predicted mask")
    m.add_argument("--pred", required=True)
    m.add_argument("--truth", required=True)
    m.add_argument("--out", required=True)

    w = sub.add_parser("weights", help="square-root inverse-frequency class weights")
    w.add_argument("--freqs", type=_float_list, required=True)
    return p


def cmd_synth(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    suite = benchmark_suite(args.seed, args.sizes, args.per_size, args.difficulty, args.height, args.width)
    buf = io.StringIO()
    manifest = csv.writer(buf, lineterminator="\n")
    manifest.writerow(["scene", "size", "seed", "plane", "mask", "truth"])
    counters: dict[int, int] = {}
    for scene in suite:
        k = counters[scene.size] = counters.get(scene.size, -1) + 1
        stem = f"{args.difficulty}_n{scene.size}_{k:04d}"
        names = [f"{stem}_plane.pgm", f"{stem}_mask.pgm", f"{stem}_truth.csv"]
        write_plane(scene.plane, out / names[0])
        write_mask(scene.mask, out / names[1])
        write_truth(scene.truth, out / names[2])
        manifest.writerow([stem, scene.size, scene.seed, *names])
    atomic_write(out / "manifest.csv", buf.getvalue().encode("ascii"))
    return EXIT_OK


def _count_params(args) -> CountParams:
    return CountParams(
        classes=tuple(args.classes),
        dbscan=DbscanParams(args.eps, args.min_samples),
        pcm=PcmParams(args.margin, args.threshold, not args.no_restrict),
        pam=PamParams(args.platelet_area),
    )


def cmd_count(args) -> int:
    method = Method(args.method)
    params = args.params
    mask = read_mask(args.mask)
    plane = read_plane(args.plane) if args.plane else None
    if plane is not None and plane.shape != mask.shape:
        raise InputError(f"mask is {mask.height}x{mask.width} but plane is {plane.height}x{plane.width}")
    clusters = image_clusters(mask, method, params)
    records = count_clusters(clusters, mask, plane, method, params)

    inputs = {"mask": Path(args.mask).name, "plane": None, "truth": None, "height": mask.height, "width": mask.width}
    if args.plane:
        inputs["plane"] = Path(args.plane).name
    report = CountReport(method=method, records=records, params=params.as_dict(), inputs=inputs)
    if args.truth:
        inputs["truth"] = Path(args.truth).name
        truth = read_truth(args.truth)
        report.records, report.aggregates = match_truth(records, clusters, truth, method)
        if report.aggregates:
            report.groups = group_stats(report.aggregates)
            report.fit = _safe_fit(report.aggregates)
    write_report(report, args.out)
    return EXIT_OK


def _safe_fit(rows):
    try:
        return linear_fit([(r.actual, r.count) for r in rows])
    except InputError:
        return None


def cmd_eval(args) -> int:
    by_method: dict[str, list] = {}
    sources = []
    for path in args.reports:
        rep = read_report(path)
        if not rep["aggregates"]:
            raise InputError(f"{path}: report carries no ground truth; rerun count with --truth")
        by_method.setdefault(rep["method"].value, []).extend(rep["aggregates"])
        sources.append(Path(path).name)
    methods = {}
    for name in sorted(by_method):
        rows = by_method[name]
        groups = group_stats(rows)
        methods[name] = {
            "n_aggregates": len(rows),
            "groups": [group_to_dict(g) for g in groups],
            "mean_of_groups": mean_group_stats(groups),
            "fit": fit_to_dict(_safe_fit(rows)),
            "exact_fraction": sum(r.count == r.actual for r in rows) / len(rows),
        }
    summary = {
        "toolkit": {"name": "plateletcount", "version": __version__},
        "reports": sources,
        "methods": methods,
        "notes": {
            "groups": "predicted counts grouped by true aggregate size; overall row pools all aggregates",
            "mean_of_groups": "unweighted mean of per-size cv and se",
        },
    }
    atomic_write(args.out, dumps_json(summary).encode("utf-8"))
    return EXIT_OK


def cmd_maskstats(args) -> int:
    mm = mask_metrics(read_mask(args.pred), read_mask(args.truth))
    doc = {
        "accuracy": mm.accuracy,
        "macro_f1": mm.macro_f1,
        "per_class_f1": {str(k): v for k, v in mm.per_class_f1.items()},
        "excluded_classes": list(mm.excluded),
    }
    atomic_write(args.out, dumps_json(doc).encode("utf-8"))
    return EXIT_OK


def cmd_weights(args) -> int:
    w = class_weights(args.freqs)
    print(",".join(f"{x:.6g}" for x in w))
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "count": cmd_count,
    "eval": cmd_eval,
    "maskstats": cmd_maskstats,
    "weights": cmd_weights,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "count" and args.method == Method.PCM.value and not args.plane:
        parser.print_usage(sys.stderr)
        print("plateletcount count: error: --method pcm requires --plane", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "count":
        try:
            args.params = _count_params(args)
        except PlateletError as exc:
            parser.print_usage(sys.stderr)
            print(f"plateletcount count: error: {exc}", file=sys.stderr)
            return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (PlateletError, OSError) as exc:
        print(f"plateletcount {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA
