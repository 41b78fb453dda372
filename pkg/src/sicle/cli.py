"""Command-line interface: ``sicle segment`` and ``sicle eval``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ift import ArcCost
from .imgio import (
    DimensionMismatchError,
    PNMError,
    load_image,
    load_label_map,
    load_saliency,
    render_overlay,
    save_image,
    save_label_map,
)
from .metrics import DEFAULT_TOLERANCE, evaluate, load_ground_truth
from .pipeline import SicleConfig, default_config, segment, with_nf
from .removal import Criterion
from .seeding import Sampling

log = logging.getLogger("sicle")

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_CONFIG = 4
EXIT_DIMS = 5

_CRITERIA = {"size": Criterion.SIZE, "minc": Criterion.MINCONTR, "maxc": Criterion.MAXCONTR,
             "minsc": Criterion.MINSC, "maxsc": Criterion.MAXSC, "rnd": Criterion.RANDOM}


class ConfigError(ValueError):
    pass


@dataclass
class RunManifest:
    inputs: list[Path]
    out: Path | None
    config: SicleConfig
    saliency: Path | None = None
    gt: Path | None = None
    tolerance: int = DEFAULT_TOLERANCE
    report: Path | None = None
    report_format: str = "csv"
    overlay: bool = False
    jobs: int = 1
    labels_mode: bool = False
    sweep: list[int] = field(default_factory=list)
    timing: bool = True


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _config_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("segmentation")
    g.add_argument("--n0", type=int, default=3000, help="initial number of seeds (default 3000)")
    g.add_argument("--nf", type=int, default=100, help="desired number of superpixels (default 100)")
    g.add_argument("--scales", type=_int_list, default=None,
                   help="comma-separated, strictly decreasing superpixel counts to emit")
    g.add_argument("--explicit-schedule", action="store_true",
                   help="use --scales as the exact per-iteration seed counts")
    g.add_argument("--omega", type=int, default=5, help="maximum number of iterations (default 5)")
    g.add_argument("--disf", action="store_true", help="decay of n0*e^-i seeds (no iteration cap)")
    g.add_argument("--sampling", choices=["grid", "rnd"], default="rnd")
    g.add_argument("--cost", choices=["root", "dyn"], default="root")
    g.add_argument("--criterion", choices=sorted(_CRITERIA), default="minsc")
    g.add_argument("--no-object", action="store_true", help="do not modulate relevance by saliency")
    g.add_argument("--saliency", type=Path, default=None, help="saliency PGM, or a directory of <stem>.pgm")
    g.add_argument("--rng-seed", type=int, default=0)
    g.add_argument("--jobs", type=int, default=1, help="images processed in parallel")
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    parent = _config_parent()
    parser = argparse.ArgumentParser(prog="sicle", description="Superpixels through iterative seed removal.")
    sub = parser.add_subparsers(dest="command", required=True)

    seg = sub.add_parser("segment", parents=[parent], help="segment images into superpixels")
    seg.add_argument("inputs", nargs="+", type=Path, help="PGM/PPM images")
    seg.add_argument("--out", type=Path, default=Path("."), help="output directory")
    seg.add_argument("--overlay", action="store_true", help="also write <stem>_<k>_ov.ppm border overlays")

    ev = sub.add_parser("eval", parents=[parent], help="BR/UE of segmentations against ground truths")
    ev.add_argument("inputs", nargs="+", type=Path,
                    help="images (segmented on the fly) or, with --labels, label-map PGMs")
    ev.add_argument("--gt", type=Path, required=True, help="ground-truth PGM or directory of <stem>.pgm")
    ev.add_argument("--labels", action="store_true", help="inputs are existing label maps")
    ev.add_argument("--sweep", type=_int_list, default=None,
                    help="comma-separated nf values; one row per (image, nf)")
    ev.add_argument("--tolerance", type=int, default=DEFAULT_TOLERANCE,
                    help=f"boundary recall radius in pixels (default {DEFAULT_TOLERANCE})")
    ev.add_argument("--report", type=Path, default=None, help="report file (default stdout)")
    ev.add_argument("--format", dest="report_format", choices=["csv", "jsonl"], default="csv")
    ev.add_argument("--no-timing", action="store_true", help="leave the seconds column empty")
    return parser


def config_from_args(args) -> SicleConfig:
    scales = args.scales
    if scales is not None and any(a <= b for a, b in zip(scales, scales[1:])):
        raise ConfigError("--scales must be strictly decreasing")
    if args.explicit_schedule and scales is None:
        raise ConfigError("--explicit-schedule requires --scales")
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    emit = set(scales or ()) | {args.nf}
    explicit = None
    if args.explicit_schedule:
        explicit = [s for s in scales if s < args.n0]
        if not explicit or explicit[-1] != args.nf:
            raise ConfigError("with --explicit-schedule, --scales must end at --nf")
    try:
        return default_config(
            n0=args.n0,
            nf=args.nf,
            omega_cap=args.omega,
            disf=args.disf,
            explicit_scales=explicit,
            strategy=Sampling(args.sampling),
            rng_seed=args.rng_seed,
            mode=ArcCost(args.cost),
            criterion=_CRITERIA[args.criterion],
            object_modulated=not args.no_object,
            emit_scales=emit,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def manifest_from_args(args) -> RunManifest:
    """Validate every flag combination before any computation."""
    config = config_from_args(args)
    m = RunManifest(inputs=list(args.inputs), out=getattr(args, "out", None), config=config,
                    saliency=args.saliency, jobs=args.jobs)
    if args.command == "segment":
        m.overlay = args.overlay
    else:
        m.gt = args.gt
        m.tolerance = args.tolerance
        m.report = args.report
        m.report_format = args.report_format
        m.labels_mode = args.labels
        m.timing = not args.no_timing
        m.sweep = list(args.sweep) if args.sweep else [config.nf]
        if args.sweep and args.explicit_schedule:
            raise ConfigError("--sweep cannot be combined with --explicit-schedule")
        if m.tolerance < 0:
            raise ConfigError("--tolerance must be >= 0")
        for nf in m.sweep:
            if not 1 <= nf <= config.n0:
                raise ConfigError(f"sweep value {nf} outside [1, n0={config.n0}]")
    return m


def _resolve(path: Path | None, stem: str) -> Path | None:
    """A file path is used as is; a directory is searched for <stem>.pgm."""
    if path is None:
        return None
    if path.is_dir():
        cand = path / f"{stem}.pgm"
        if not cand.is_file():
            raise FileNotFoundError(f"no {cand.name} in {path}")
        return cand
    return path


# ---------------------------------------------------------------------------
# segment
# ---------------------------------------------------------------------------


def _segment_one(task):
    """Worker: returns (stem, written paths, seed counts, seconds)."""
    path, manifest = task
    image = load_image(path)
    sal_path = _resolve(manifest.saliency, path.stem)
    saliency = load_saliency(sal_path, image.shape) if sal_path else None
    t0 = time.perf_counter()
    result = segment(image, saliency, manifest.config)
    seconds = time.perf_counter() - t0

    written = []
    for k in sorted(result.scales, reverse=True):
        lm = result.scales[k]
        out = manifest.out / f"{path.stem}_{k}.pgm"
        save_label_map(lm, out)
        written.append(out)
        if manifest.overlay:
            ov = manifest.out / f"{path.stem}_{k}_ov.ppm"
            save_image(render_overlay(image, lm), ov)
            written.append(ov)
    return path.stem, written, result.per_iteration_seed_counts, seconds


def _run_tasks(fn, tasks, jobs):
    """Yield (task, result-or-exception) in task order."""
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(fn, t) for t in tasks]
            for t, f in zip(tasks, futures):
                exc = f.exception()
                yield t, (exc if exc is not None else f.result())
    else:
        for t in tasks:
            try:
                yield t, fn(t)
            except Exception as exc:  # reported per input by the caller
                yield t, exc


def cmd_segment(manifest: RunManifest, out=None) -> int:
    out = out or sys.stdout
    try:
        manifest.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot create output directory: {exc}")
    status = EXIT_OK
    tasks = [(p, manifest) for p in manifest.inputs]
    for (path, _), res in _run_tasks(_segment_one, tasks, manifest.jobs):
        if isinstance(res, BaseException):
            status = max(status, _report_exception(path, res))
            continue
        stem, written, counts, seconds = res
        print(f"{stem}: seeds {' > '.join(map(str, counts))} | {len(counts)} iterations | "
              f"{seconds:.3f} s | {len(written)} files", file=out)
    return status


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

_SUFFIX = re.compile(r"^(.*)_(\d+)$")


def _gt_for(manifest: RunManifest, stem: str) -> tuple[str, Path]:
    """(image name, ground-truth path) for an input stem."""
    gt = manifest.gt
    if not gt.is_dir():
        if not gt.is_file():
            raise FileNotFoundError(f"no such ground truth: {gt}")
        m = _SUFFIX.match(stem) if manifest.labels_mode else None
        return (m.group(1) if m else stem), gt
    if (gt / f"{stem}.pgm").is_file():
        return stem, gt / f"{stem}.pgm"
    m = _SUFFIX.match(stem)
    if manifest.labels_mode and m and (gt / f"{m.group(1)}.pgm").is_file():
        return m.group(1), gt / f"{m.group(1)}.pgm"
    raise LookupError(f"no ground truth for {stem} in {gt}")


def _eval_one(task):
    path, manifest = task
    name, gt_path = _gt_for(manifest, path.stem)
    gt = load_ground_truth(gt_path)
    rows = []
    if manifest.labels_mode:
        lm = load_label_map(path)
        rep = evaluate(lm, gt, manifest.tolerance)
        rows.append({"image": name, "nf": rep.superpixel_count, "br": rep.br, "ue": rep.ue, "seconds": None})
        return rows
    image = load_image(path)
    sal_path = _resolve(manifest.saliency, path.stem)
    saliency = load_saliency(sal_path, image.shape) if sal_path else None
    for nf in manifest.sweep:
        cfg = with_nf(manifest.config, nf)
        t0 = time.perf_counter()
        result = segment(image, saliency, cfg)
        seconds = time.perf_counter() - t0
        rep = evaluate(result.final, gt, manifest.tolerance)
        rows.append({"image": name, "nf": nf, "br": rep.br, "ue": rep.ue,
                     "seconds": seconds if manifest.timing else None})
    return rows


def _with_means(rows: list[dict]) -> list[dict]:
    out = list(rows)
    for nf in sorted({r["nf"] for r in rows}):
        group = [r for r in rows if r["nf"] == nf]
        secs = [r["seconds"] for r in group if r["seconds"] is not None]
        out.append({
            "image": "mean",
            "nf": nf,
            "br": float(np.mean([r["br"] for r in group])),
            "ue": float(np.mean([r["ue"] for r in group])),
            "seconds": float(np.mean(secs)) if secs else None,
        })
    return out


def format_report(rows: list[dict], fmt: str = "csv") -> str:
    def num(x):
        return "" if x is None else f"{x:.6f}"

    buf = io.StringIO()
    if fmt == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["image", "nf", "br", "ue", "seconds"])
        for r in rows:
            w.writerow([r["image"], r["nf"], num(r["br"]), num(r["ue"]), num(r["seconds"])])
    else:
        for r in rows:
            rec = {"image": r["image"], "nf": r["nf"], "br": round(r["br"], 6), "ue": round(r["ue"], 6),
                   "seconds": None if r["seconds"] is None else round(r["seconds"], 6)}
            buf.write(json.dumps(rec, sort_keys=False) + "\n")
    return buf.getvalue()


def cmd_eval(manifest: RunManifest, out=None) -> int:
    out = out or sys.stdout
    if not manifest.inputs:
        return _fail(EXIT_CONFIG, "empty corpus; refusing to write an empty report")
    status = EXIT_OK
    rows = []
    tasks = [(p, manifest) for p in manifest.inputs]
    for (path, _), res in _run_tasks(_eval_one, tasks, manifest.jobs):
        if isinstance(res, BaseException):
            status = max(status, _report_exception(path, res))
            continue
        rows.extend(res)
    if not rows:
        _fail(EXIT_CONFIG, "no evaluable (input, ground truth) pair; refusing to write an empty report")
        return max(status, EXIT_CONFIG)

    text = format_report(_with_means(rows), manifest.report_format)
    if manifest.report is None:
        out.write(text)
    else:
        try:
            manifest.report.parent.mkdir(parents=True, exist_ok=True)
            manifest.report.write_text(text)
        except OSError as exc:
            return _fail(EXIT_IO, f"cannot write report: {exc}")
    return status


# ---------------------------------------------------------------------------


def _fail(code: int, msg: str) -> int:
    print(f"sicle: error: {msg}", file=sys.stderr)
    return code


def _report_exception(path: Path, exc: BaseException) -> int:
    if isinstance(exc, LookupError):
        # unpaired input: reported and skipped
        _fail(EXIT_PARTIAL, f"{path}: skipped, {exc}")
        return EXIT_PARTIAL
    if isinstance(exc, DimensionMismatchError):
        return _fail(EXIT_DIMS, f"{path}: dimension mismatch: {exc}")
    if isinstance(exc, (OSError, PNMError)):
        return _fail(EXIT_IO, f"{path}: I/O error: {exc}")
    if isinstance(exc, ValueError):
        return _fail(EXIT_CONFIG, f"{path}: config error: {exc}")
    raise exc


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        manifest = manifest_from_args(args)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, f"config error: {exc}")
    if args.command == "segment":
        return cmd_segment(manifest)
    return cmd_eval(manifest)


if __name__ == "__main__":
    sys.exit(main())
