"""Command line entry point: ``flatnormals <subcommand> ...``.

Exit status: 0 ok, 2 bad input/format/config, 3 empty evaluation, 1 anything
else. Failures print one JSON line ``{"error": kind, "detail": ...}`` on
stderr.
"""
import argparse
from concurrent.futures import ProcessPoolExecutor
import json
import logging
from pathlib import Path
import sys

from . import io as fio
from .core import CLASS_IDS, DEFAULT_PLANAR_CLASSES
from .depth import PreprocessParams
from .errors import ConfigError, FlatNormalsError, FormatError, InputIOError
from .evaluation import accuracy_curve, angle_error_map, normal_metrics, semantic_accuracy
from .fixtures import canonical_scenes, render_noisy
from .mixing import build_mix_plan, mix_spec_from_config
from .normals import NormalParams
from .pipeline import compute_normals
from .semantic import GrowParams, semantic_smooth

log = logging.getLogger("flatnormals")

PRE_DEFAULTS = PreprocessParams()
NORMAL_DEFAULTS = NormalParams()
GROW_DEFAULTS = GrowParams()

# checked after --config is merged, so paths may come from either place
REQUIRED = {
    "compute": ("depth", "out"),
    "smooth": ("normals", "labels", "out"),
    "viz": ("out",),
    "fixtures": ("out_dir",),
}


def _add_compute_args(p):
    p.add_argument("depth", nargs="?", help="16-bit depth PNG, or a directory of them")
    p.add_argument("--intrinsics", help="intrinsics JSON (fx, fy, cx, cy, width, height)")
    p.add_argument("--out", help="normals PNG (or output directory for a directory input)")
    p.add_argument("--mask-out", help="training-mask PNG path")
    p.add_argument("--viz-out", help="RGB normal visualization PNG path")
    p.add_argument("--depth-scale", type=float, default=1.0, help="millimeters per raw depth unit (default 1.0)")
    p.add_argument("--sigma", type=float, default=NORMAL_DEFAULTS.sigma,
                   help="smoothing parameter: 30 for real sensors, 10 for rendered depth (default 30)")
    p.add_argument("--z-ref", type=float, default=NORMAL_DEFAULTS.z_ref,
                   help="depth in meters at which the window spans sigma pixels (default 1.0)")
    p.add_argument("--max-half-window", type=int, default=NORMAL_DEFAULTS.max_half_window)
    p.add_argument("--min-points", type=int, default=NORMAL_DEFAULTS.min_points)
    p.add_argument("--fill-max-radius", type=int, default=PRE_DEFAULTS.fill_max_radius)
    p.add_argument("--median-window", type=int, default=PRE_DEFAULTS.median_window)
    p.add_argument("--depth-change-factor", type=float, default=PRE_DEFAULTS.depth_change_factor)
    p.add_argument("--min-depth", type=float, default=PRE_DEFAULTS.min_depth)
    p.add_argument("--max-depth", type=float, default=PRE_DEFAULTS.max_depth)
    p.add_argument("--jobs", type=int, default=1, help="worker processes for directory input")


def _add_grow_args(p):
    p.add_argument("--angle-threshold", type=float, default=GROW_DEFAULTS.angle_threshold,
                   help="max degrees from the running region mean (default 30)")
    p.add_argument("--min-region-size", type=int, default=GROW_DEFAULTS.min_region_size)
    p.add_argument("--connectivity", type=int, choices=(4, 8), default=GROW_DEFAULTS.connectivity)
    p.add_argument("--planar-classes", default=",".join(str(c) for c in sorted(DEFAULT_PLANAR_CLASSES)),
                   help="comma-separated class ids or names; empty disables smoothing")


def build_parser():
    parser = argparse.ArgumentParser(prog="flatnormals", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = subs["compute"] = sub.add_parser("compute", help="depth PNG -> normals, validity, training mask")
    _add_compute_args(p)

    p = subs["smooth"] = sub.add_parser("smooth", help="semantic planar smoothing of a normals PNG")
    p.add_argument("--normals")
    p.add_argument("--labels")
    p.add_argument("--out")
    _add_grow_args(p)

    p = subs["eval"] = sub.add_parser("eval", help="metrics JSON on stdout, optional report files")
    p.add_argument("--pred", help="predicted normals PNG")
    p.add_argument("--gt", help="ground-truth normals PNG")
    p.add_argument("--pred-labels")
    p.add_argument("--gt-labels")
    p.add_argument("--error-viz", help="write the error image here")
    p.add_argument("--report-dir", help="write metrics.json, accuracy_curve.csv and figures here")

    p = subs["mix-plan"] = sub.add_parser("mix-plan", help="deterministic minibatch composition as CSV")
    p.add_argument("--dataset", action="append", default=None, metavar="NAME:PARTS:SIZE")
    p.add_argument("--batches", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--grayscale-fraction", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.add_argument("--figure", help="bar chart of the first batches")

    p = subs["viz"] = sub.add_parser("viz", help="normal or error visualization PNG")
    p.add_argument("--normals", help="normals PNG to visualize")
    p.add_argument("--pred")
    p.add_argument("--gt")
    p.add_argument("--out")

    p = subs["fixtures"] = sub.add_parser("fixtures", help="write the canonical synthetic scenes")
    p.add_argument("--out-dir")
    p.add_argument("--seed", type=int, default=0, help="noise seed")
    p.add_argument("--depth-scale", type=float, default=0.25, help="millimeters per raw depth unit")

    for p in subs.values():
        p.add_argument("--config", help="JSON file whose keys override defaults (flags still win)")
    return parser, subs


def parse_args(argv=None):
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = _load_json(args.config)
        sub = subs[args.command]
        known = {a.dest for a in sub._actions}
        flat = {k.replace("-", "_"): v for k, v in cfg.items()}
        usable = {k: v for k, v in flat.items() if k in known and k != "config"}
        sub.set_defaults(**usable)
        args = parser.parse_args(argv)
        if args.command == "mix-plan":
            args.mix_config = cfg
    missing = [k for k in REQUIRED.get(args.command, ()) if not getattr(args, k, None)]
    if missing:
        raise ConfigError("missing required option(s): " + ", ".join(
            "--" + k.replace("_", "-") for k in missing))
    return args


def _load_json(path):
    path = Path(path)
    if not path.is_file():
        raise InputIOError(f"no such file: {path}")
    try:
        cfg = json.loads(path.read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise FormatError(f"{path}: expected a JSON object")
    return cfg


def _pre_params(a):
    return PreprocessParams(a.fill_max_radius, a.median_window, a.depth_change_factor,
                            a.min_depth, a.max_depth)


def _normal_params(a):
    return NormalParams(a.sigma, a.z_ref, a.max_half_window, a.min_points)


def parse_class_list(text):
    if isinstance(text, (list, tuple)):
        items = [str(t) for t in text]
    else:
        items = [t.strip() for t in str(text).split(",") if t.strip()]
    ids = []
    for item in items:
        if item.isdigit():
            ids.append(int(item))
        elif item.lower() in CLASS_IDS:
            ids.append(CLASS_IDS[item.lower()])
        else:
            raise ConfigError(f"unknown class {item!r}")
    return frozenset(ids)


def _compute_one(depth_path, K, pre, params, depth_scale, out, mask_out, viz_out):
    raw = fio.read_depth_png16(depth_path, depth_scale)
    res = compute_normals(raw, K, pre, params)
    fio.write_normals_png48(res.normals, out)
    if mask_out:
        fio.write_mask_png(res.training_mask, mask_out)
    if viz_out:
        fio.write_normal_viz(res.normals, viz_out)
    return int(res.normals.valid.sum())


def cmd_compute(a):
    if not a.intrinsics:
        raise FormatError("missing intrinsics (use --intrinsics or the config file)")
    K = fio.read_intrinsics(a.intrinsics)
    pre, params = _pre_params(a), _normal_params(a)
    src = Path(a.depth)
    if not src.is_dir():
        n = _compute_one(src, K, pre, params, a.depth_scale, a.out, a.mask_out, a.viz_out)
        log.info("%s: %d valid normals", src, n)
        return 0

    out_dir = Path(a.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = []
    for f in sorted(src.glob("*.png")):
        stem = out_dir / f.stem
        jobs.append((f, K, pre, params, a.depth_scale, f"{stem}.normals.png",
                     f"{stem}.mask.png", f"{stem}.viz.png"))
    if a.jobs > 1:
        with ProcessPoolExecutor(max_workers=a.jobs) as ex:
            futures = [ex.submit(_compute_one, *job) for job in jobs]
            for job, fut in zip(jobs, futures):
                log.info("%s: %d valid normals", job[0], fut.result())
    else:
        for job in jobs:
            log.info("%s: %d valid normals", job[0], _compute_one(*job))
    return 0


def cmd_smooth(a):
    nm = fio.read_normals_png48(a.normals)
    lm = fio.read_labels_png(a.labels)
    gp = GrowParams(a.angle_threshold, a.min_region_size, a.connectivity,
                    parse_class_list(a.planar_classes))
    fio.write_normals_png48(semantic_smooth(nm, lm, gp), a.out)
    return 0


def _write_curve_csv(errors, path):
    t, pct = accuracy_curve(errors.degrees, errors.valid)
    lines = ["threshold_deg,pct_below"] + [f"{x:.2f},{y:.6f}" for x, y in zip(t, pct)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_eval(a):
    have_normals = bool(a.pred and a.gt)
    have_labels = bool(a.pred_labels and a.gt_labels)
    if not (have_normals or have_labels):
        raise ConfigError("need --pred/--gt and/or --pred-labels/--gt-labels")
    report = {}
    errors = pred = gt = None
    if have_normals:
        pred, gt = fio.read_normals_png48(a.pred), fio.read_normals_png48(a.gt)
        errors = angle_error_map(pred, gt)
        report.update(normal_metrics(errors).to_dict())
        if a.error_viz:
            fio.write_error_viz(errors.degrees, errors.valid, a.error_viz)
    if have_labels:
        sem = semantic_accuracy(fio.read_labels_png(a.pred_labels), fio.read_labels_png(a.gt_labels))
        d = sem.to_dict()
        if have_normals:
            d["n_labeled_pixels"] = d.pop("n_pixels")
        report.update(d)

    text = json.dumps(report, sort_keys=False)
    if a.report_dir:
        from .plotting import plot_error_report, plot_normal_panel

        out = Path(a.report_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.json").write_text(text + "\n", encoding="utf-8")
        if errors is not None:
            _write_curve_csv(errors, out / "accuracy_curve.csv")
            plot_error_report(errors, out / "error_report.png")
            plot_normal_panel(pred, gt, out / "panel.png", errors)
    print(text)
    return 0


def _parse_dataset_flag(text):
    try:
        name, parts, size = text.split(":")
        return {"name": name, "parts": int(parts), "size": int(size)}
    except ValueError as exc:
        raise ConfigError(f"--dataset expects NAME:PARTS:SIZE, got {text!r}") from exc


def cmd_mix_plan(a):
    cfg = dict(getattr(a, "mix_config", None) or {})
    if a.dataset:
        cfg["datasets"] = [_parse_dataset_flag(t) for t in a.dataset]
    for key in ("batch_size", "grayscale_fraction", "seed"):
        if getattr(a, key) is not None:
            cfg[key] = getattr(a, key)
    if "datasets" not in cfg:
        raise ConfigError("no datasets given (use --dataset or --config)")
    spec, sizes = mix_spec_from_config(cfg)
    plan = build_mix_plan(spec, a.batches, sizes)
    text = plan.to_csv()
    if a.out:
        Path(a.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if a.figure:
        from .plotting import plot_mix_plan
        plot_mix_plan(plan, a.figure)
    return 0


def cmd_viz(a):
    if a.normals:
        fio.write_normal_viz(fio.read_normals_png48(a.normals), a.out)
    elif a.pred and a.gt:
        err = angle_error_map(fio.read_normals_png48(a.pred), fio.read_normals_png48(a.gt))
        fio.write_error_viz(err.degrees, err.valid, a.out)
    else:
        raise ConfigError("need --normals, or --pred and --gt")
    return 0


def cmd_fixtures(a):
    out = Path(a.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"depth_scale_mm_per_unit": a.depth_scale, "seed": a.seed, "scenes": {}}
    for name, spec in canonical_scenes(a.seed).items():
        render, noisy = render_noisy(spec)
        files = {
            "depth": f"{name}_depth.png",
            "labels": f"{name}_labels.png",
            "gt_normals": f"{name}_gt_normals.png",
            "intrinsics": f"{name}_intrinsics.json",
        }
        fio.write_depth_png16(noisy, out / files["depth"], a.depth_scale)
        fio.write_labels_png(render.labels, out / files["labels"])
        fio.write_normals_png48(render.normals, out / files["gt_normals"])
        fio.write_intrinsics(spec.K, out / files["intrinsics"])
        manifest["scenes"][name] = files
    (out / "fixtures.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return 0


COMMANDS = {
    "compute": cmd_compute,
    "smooth": cmd_smooth,
    "eval": cmd_eval,
    "mix-plan": cmd_mix_plan,
    "viz": cmd_viz,
    "fixtures": cmd_fixtures,
}


def _fail(kind, detail, status):
    sys.stderr.write(json.dumps({"error": kind, "detail": detail}) + "\n")
    return status


def main(argv=None):
    try:
        args = parse_args(argv)
    except FlatNormalsError as exc:
        return _fail(exc.kind, exc.detail, exc.exit_status)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except FlatNormalsError as exc:
        return _fail(exc.kind, exc.detail, exc.exit_status)
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        return _fail("internal error", f"{type(exc).__name__}: {exc}", 1)


if __name__ == "__main__":
    sys.exit(main())
