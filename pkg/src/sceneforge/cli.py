"""Command line surface: import, generate, package, and inspect datasets.

Configuration is layered: built-in defaults, then the JSON config file
(--config), then SCENEFORGE_* environment variables, then command line
flags. Later layers win. Path values inside the config file resolve
relative to the file; paths from the environment or flags resolve
relative to the working directory.

Exit codes: 0 success, 1 usage, 2 validation failure, 3 generation
budget exhausted, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
from PIL import Image

from .assets import load_asset_index
from .coco import export_coco
from .errors import (ArchParseError, BudgetExhaustedError, MeshError,
                     SceneForgeError, UnknownCategoryError, ValidationError)
from .knowledge import load_knowledge, save_knowledge
from .layoutgen import (ANNOTATOR_TAG, CAMERA_TAG, GenConfig, GenStats,
                        annotation_cost, generate, layout_from_dict,
                        layout_to_dict, sensitivity_report,
                        simulate_annotators)
from .losses import (LossWeights, geo_guided_loss, pmse_loss,
                     reconstruction_loss, total_objective)
from .manifest import (DatasetManifest, category_table, load_manifest,
                       validate_manifest)
from .netspec import (COLOR_PATH, DISCRIMINATOR, GEOMETRY_PATH, PREDICTOR,
                      parse_arch, receptive_field, shape_trace)
from .render import (CameraProfile, encode_depth, encode_normal,
                     encode_sample, rasterize, sample_camera)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_BUDGET = 3
EXIT_IO = 4

ENV_PREFIX = "SCENEFORGE_"

DEFAULTS = {
    "scene": None,
    "knowledge": None,
    "out": "dataset",
    "count": 10,
    "seed": 0,
    "threads": 1,
    "k_threshold": None,
    "calibrate_percentile": 20.0,
    "calibration_size": 200,
    "noise": 0.2,
    "annotators": 2,
    "profile": "",
    "cameras_per_layout": 1,
    "count_range": [3, 7],
    "categories": None,
    "budget": 10000,
    "lift_eps": 1e-3,
    "camera": {},
    "include_scene": True,
    "floor_batches": 4,
}

_INT_KEYS = {"count", "seed", "threads", "annotators", "budget",
             "cameras_per_layout", "calibration_size", "floor_batches"}
_FLOAT_KEYS = {"calibrate_percentile", "noise", "lift_eps"}
_PATH_KEYS = {"scene", "knowledge", "out"}
_FLAG_KEYS = ("scene", "knowledge", "count", "seed", "out", "threads",
              "k_threshold", "calibrate_percentile", "noise", "annotators")


class _UsageError(Exception):
    pass


def _coerce(key, value):
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
        if key == "k_threshold":
            return value if value == "calibrate" else float(value)
    except ValueError:
        raise ValidationError(f"{key} must be numeric, got {value!r}")
    if key == "include_scene":
        return value not in ("0", "false", "no", "")
    return value


def effective_config(args):
    """Layer defaults, config file, environment, flags; flags win."""
    cfg = dict(DEFAULTS)
    path = getattr(args, "config", None) or os.environ.get(
        ENV_PREFIX + "CONFIG")
    if path:
        file = Path(path)
        if not file.exists():
            raise FileNotFoundError(f"config file not found: {file}")
        try:
            data = json.loads(file.read_text())
        except json.JSONDecodeError as e:
            raise ValidationError(f"config {file} is not valid JSON: {e}")
        if not isinstance(data, dict):
            raise ValidationError(f"config {file} must hold a JSON object")
        base = file.parent
        for key, value in data.items():
            if key in _PATH_KEYS and isinstance(value, str) \
                    and not Path(value).is_absolute():
                value = str(base / value)
            cfg[key] = value
    for key in cfg:
        env = os.environ.get(ENV_PREFIX + key.upper())
        if env is not None:
            cfg[key] = _coerce(key, env)
    for key in _FLAG_KEYS:
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            # untyped flags (k_threshold) arrive as strings; normalize them
            cfg[key] = _coerce(key, value) if isinstance(value, str) else value
    return cfg


def _require(cfg, *keys):
    missing = [k for k in keys if not cfg.get(k)]
    if missing:
        raise _UsageError(
            "missing required settings: "
            + ", ".join(f"--{k.replace('_', '-')}" for k in missing))


def camera_profile(data):
    if not data:
        return CameraProfile()
    allowed = {"radius", "elevation_deg", "azimuth_deg", "target_jitter",
               "fov_deg", "width", "height", "near", "far"}
    unknown = set(data) - allowed
    if unknown:
        raise ValidationError(f"unknown camera settings: {sorted(unknown)}")
    kwargs = {}
    for key in ("radius", "elevation_deg", "azimuth_deg"):
        if key in data:
            kwargs[key] = tuple(float(v) for v in data[key])
    for key in ("target_jitter", "fov_deg", "near", "far"):
        if key in data:
            kwargs[key] = float(data[key])
    for key in ("width", "height"):
        if key in data:
            kwargs[key] = int(data[key])
    return CameraProfile(**kwargs)


def _load_inputs(cfg):
    _require(cfg, "scene", "knowledge")
    scene_path = Path(cfg["scene"])
    kb_path = Path(cfg["knowledge"])
    if not scene_path.exists():
        raise FileNotFoundError(f"asset index not found: {scene_path}")
    if not kb_path.exists():
        raise FileNotFoundError(f"knowledge base not found: {kb_path}")
    library, scene = load_asset_index(scene_path)
    kb = load_knowledge(kb_path, scene=scene)
    if cfg.get("k_threshold") is not None:
        kb = replace(kb, config=replace(kb.config,
                                        k_threshold=cfg["k_threshold"]))
    return library, scene, kb


def _gen_config(cfg, kb, library):
    cats = cfg.get("categories")
    if not cats:
        cats = sorted(set(kb.categories()) & set(library.categories()))
    if not cats:
        raise ValidationError(
            "no categories present in both knowledge base and library")
    return GenConfig(
        categories=tuple(cats),
        count_range=tuple(int(v) for v in cfg["count_range"]),
        budget=int(cfg["budget"]),
        seed=int(cfg["seed"]),
        calibration_percentile=float(cfg["calibrate_percentile"]),
        calibration_size=int(cfg["calibration_size"]),
        lift_eps=float(cfg["lift_eps"]),
    )


def _config_echo(cfg):
    """Effective config for the manifest; the destination stays out so a
    rerun into another directory yields a byte-identical tree."""
    echo = {}
    for key, value in cfg.items():
        if key == "out":
            continue
        echo[key] = value if not isinstance(value, tuple) else list(value)
    return echo


# --- gen ----------------------------------------------------------------------

_WORKER = {}


def _worker_init(scene_path, camera_cfg, include_scene):
    library, scene = load_asset_index(scene_path)
    _WORKER["library"] = library
    _WORKER["scene"] = scene
    _WORKER["profile"] = camera_profile(camera_cfg)
    _WORKER["include_scene"] = include_scene


def _render_layout(scene, library, profile, include_scene, job):
    """Render every camera of one layout; files land directly on disk."""
    index, layout_dict, ref, seed, n_cameras, out_dir = job
    layout = layout_from_dict(layout_dict, scene, library)
    instances = {str(i + 1): p.object.category
                 for i, p in enumerate(layout.placements)}
    entries = []
    counts = {}
    for k in range(n_cameras):
        cam_seed = (int(seed), CAMERA_TAG, int(index), int(k))
        rng = np.random.default_rng(np.random.SeedSequence(cam_seed))
        camera = sample_camera(scene, rng, profile)
        sample = rasterize(layout, camera, include_scene=include_scene,
                           layout_ref=ref)
        stem = f"samples/{index:06d}_{k:02d}"
        encode_sample(sample, out_dir, stem,
                      extra_meta={"instances": instances,
                                  "seed": list(cam_seed)})
        for inst in np.unique(sample.instance):
            if inst == 0:
                continue
            cat = instances[str(int(inst))]
            counts[cat] = counts.get(cat, 0) + 1
        entries.append({
            "stem": stem,
            "layout_ref": ref,
            "seed": list(cam_seed),
            "camera": camera.to_dict(),
            "instances": instances,
        })
    return entries, counts


def _render_job(job):
    return _render_layout(_WORKER["scene"], _WORKER["library"],
                          _WORKER["profile"], _WORKER["include_scene"], job)


def cmd_gen(args):
    cfg = effective_config(args)
    library, scene, kb = _load_inputs(cfg)
    gcfg = _gen_config(cfg, kb, library)
    profile = camera_profile(cfg.get("camera") or {})
    include_scene = bool(cfg.get("include_scene", True))

    total_samples = int(cfg["count"])
    per_layout = max(1, int(cfg["cameras_per_layout"]))
    n_layouts = -(-total_samples // per_layout) if total_samples else 0

    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "layouts").mkdir(exist_ok=True)
    (out / "samples").mkdir(exist_ok=True)

    stats = GenStats()
    jobs = []
    partial_error = None
    if n_layouts:
        stream = generate(kb, scene, gcfg, library, n_layouts, stats=stats)
        index = 0
        remaining = total_samples
        while True:
            try:
                layout, likelihood, contact = next(stream)
            except StopIteration:
                break
            except BudgetExhaustedError as e:
                partial_error = e
                break
            ref = f"layouts/{index:06d}.json"
            payload = {
                "layout": layout_to_dict(layout),
                "likelihood": likelihood.to_dict(),
                "contacts": contact.to_dict(),
            }
            (out / ref).write_text(
                json.dumps(payload, indent=2, sort_keys=True) + "\n")
            n_cams = min(per_layout, remaining)
            remaining -= n_cams
            jobs.append((index, layout_to_dict(layout), ref,
                         int(cfg["seed"]), n_cams, str(out)))
            index += 1

    threads = max(1, int(cfg["threads"]))
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(
                max_workers=threads, initializer=_worker_init,
                initargs=(cfg["scene"], cfg.get("camera") or {},
                          include_scene)) as pool:
            results = list(pool.map(_render_job, jobs))
    else:
        results = [_render_layout(scene, library, profile, include_scene, j)
                   for j in jobs]

    manifest = DatasetManifest(
        profile=str(cfg.get("profile") or ""),
        config=_config_echo(cfg),
        categories=category_table(gcfg.categories),
    )
    counts = {name: 0 for name in manifest.categories.values()}
    for entries, job_counts in results:
        manifest.samples.extend(entries)
        for cat, n in job_counts.items():
            counts[cat] = counts.get(cat, 0) + n
    manifest.instance_counts = counts
    manifest.stats = stats.to_dict()
    manifest.partial = partial_error is not None
    manifest.save(out)

    summary = {
        "out": str(out),
        "layouts": len(jobs),
        "samples": len(manifest.samples),
        "threshold": stats.threshold,
        "partial": manifest.partial,
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    if partial_error is not None:
        print(f"error: {partial_error}", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


# --- import / validate / stats ------------------------------------------------

def cmd_import(args):
    cfg = effective_config(args)
    library, scene, kb = _load_inputs(cfg)
    n_pairs = kb.pair_count if kb.pair_count else len(
        kb.relationship_prior.pairs)
    summary = {
        "objects": len(library),
        "categories": sorted(library.categories()),
        "kb_categories": sorted(kb.categories()),
        "pairs": n_pairs,
        "surfaces": [s.name for s in scene.support_surfaces],
        "scene_scale": scene.scene_scale,
        "annotation_cost_s": annotation_cost(kb, n_models=len(library)),
    }
    if getattr(args, "out", None):
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        save_knowledge(out / "knowledge.json", kb)
        summary["normalized"] = str(out / "knowledge.json")
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_validate(args):
    root = Path(args.dataset)
    if root.is_file():
        root = root.parent
    manifest = load_manifest(root)
    problems = validate_manifest(manifest, root)
    report = {"dataset": str(root), "samples": len(manifest.samples),
              "problems": problems}
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_VALIDATION if problems else EXIT_OK


def cmd_stats(args):
    root = Path(args.dataset)
    manifest = load_manifest(root)
    counts = dict(manifest.instance_counts)
    n_categories = len(manifest.categories)
    total = sum(counts.values())
    average = total / n_categories if n_categories else 0.0
    report = {
        "profile": manifest.profile,
        "samples": len(manifest.samples),
        "categories": n_categories,
        "instances_per_category": dict(sorted(counts.items())),
        "average_per_category": average,
        "total_instances": total,
        "per_scene_totals": {manifest.profile or "default": total},
        "annotation_cost_s": manifest.stats.get("annotation_cost_s", 0.0),
        "generation": manifest.stats,
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


# --- export -------------------------------------------------------------------

def cmd_export_coco(args):
    root = Path(args.dataset)
    manifest = load_manifest(root)
    out = Path(args.out) if args.out else root / "annotations.json"
    doc = export_coco(manifest, root, out)
    print(json.dumps({
        "out": str(out),
        "images": len(doc["images"]),
        "annotations": len(doc["annotations"]),
        "categories": len(doc["categories"]),
    }, indent=2, sort_keys=True))
    return EXIT_OK


# --- losses -------------------------------------------------------------------

def _to_unit(array):
    """Map an 8-bit image to [-1, 1] floats."""
    return np.asarray(array, dtype=np.float64) / 127.5 - 1.0


def _u16_to_unit(array):
    return np.asarray(array, dtype=np.float64) / 32767.5 - 1.0


def _find_stem(root):
    metas = sorted(root.glob("**/*.meta.json"))
    if len(metas) != 1:
        raise _UsageError(
            f"{root} holds {len(metas)} samples; pass --stem to pick one")
    rel = metas[0].relative_to(root)
    return str(rel)[: -len(".meta.json")]


def cmd_losses(args):
    from .render import decode_sample

    root = Path(args.dir)
    stem = args.stem or _find_stem(root)
    decoded = decode_sample(root, stem)
    candidate = np.asarray(Image.open(args.candidate).convert("RGB"))
    if candidate.shape != decoded.rgb.shape:
        raise ValidationError(
            f"candidate shape {candidate.shape} does not match "
            f"rough image {decoded.rgb.shape}")
    rough = _to_unit(decoded.rgb)
    cand = _to_unit(candidate)
    pmse = pmse_loss(rough, cand)
    rec = reconstruction_loss((cand,), (rough,))
    geo = None
    preds = (args.pred_seg, args.pred_depth, args.pred_normal)
    if any(preds):
        if not all(preds):
            raise _UsageError(
                "--pred-seg, --pred-depth and --pred-normal go together")
        # compare in the encoded integer domains, scaled to [-1, 1]
        pred = (
            _u16_to_unit(np.asarray(Image.open(args.pred_seg))),
            _u16_to_unit(np.asarray(Image.open(args.pred_depth))),
            _to_unit(np.asarray(Image.open(args.pred_normal).convert("RGB"))),
        )
        gt = (
            _u16_to_unit(decoded.instance),
            _u16_to_unit(encode_depth(decoded.depth)),
            _to_unit(encode_normal(decoded.normal)),
        )
        geo = geo_guided_loss(pred, gt)
    weights = LossWeights(*args.weights) if args.weights else LossWeights()
    total = total_objective(0.0, pmse, rec, 0.0 if geo is None else geo,
                            weights)
    report = {
        "stem": stem,
        "candidate": str(args.candidate),
        "components": {"gan": None, "pmse": pmse, "rec": rec, "geo": geo},
        "weights": {"gan": weights.lambda1, "pmse": weights.lambda2,
                    "rec": weights.lambda3, "geo": weights.lambda4},
        "total": total,
    }
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return EXIT_OK


# --- rf -----------------------------------------------------------------------

_PRESETS = {
    "discriminator": DISCRIMINATOR,
    "color": COLOR_PATH,
    "geometry": GEOMETRY_PATH,
    "predictor": PREDICTOR,
}


def _parse_input_shape(text):
    parts = text.lower().split("x")
    if len(parts) not in (2, 3):
        raise _UsageError("--input must look like 256x256 or 256x256x3")
    try:
        dims = [int(p) for p in parts]
    except ValueError:
        raise _UsageError("--input must look like 256x256 or 256x256x3")
    if len(dims) == 2:
        dims.append(3)
    return tuple(dims)


def cmd_rf(args):
    arch = args.arch or _PRESETS[args.preset]
    spec = parse_arch(arch)
    try:
        rf = receptive_field(spec)
        note = None
    except ArchParseError as e:
        rf = None
        note = str(e)
    report = {"arch": arch, "layers": len(spec.layers),
              "receptive_field": rf}
    if note:
        report["note"] = note
    if args.input:
        shape = _parse_input_shape(args.input)
        trace = shape_trace(spec, shape)
        report["trace"] = [list(s) for s in trace]
        report["input_shape"] = list(shape)
        report["output_shape"] = list(trace[-1])
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


# --- sensitivity ---------------------------------------------------------------

def cmd_sensitivity(args):
    cfg = effective_config(args)
    library, scene, kb = _load_inputs(cfg)
    gcfg = _gen_config(cfg, kb, library)
    n = int(cfg["annotators"])
    noise = float(cfg["noise"])
    per_base = int(cfg["count"])
    if n < 1:
        raise _UsageError("--annotators must be >= 1")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    if n == 1:
        data = {"matrix": [[0.0]], "median_divergence": 0.0,
                "noise_floor": None, "layouts_per_base": per_base,
                "annotators": 1, "noise": noise}
    else:
        rng = np.random.default_rng(
            np.random.SeedSequence((int(cfg["seed"]), ANNOTATOR_TAG)))
        bases = simulate_annotators(kb, n, noise, rng)
        report = sensitivity_report(bases, scene, gcfg, library,
                                    layouts_per_base=per_base,
                                    floor_batches=int(cfg["floor_batches"]))
        data = report.to_dict()
        data["annotators"] = n
        data["noise"] = noise
    (out / "sensitivity.json").write_text(
        json.dumps(data, indent=2, sort_keys=True) + "\n")
    with (out / "divergence.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        for row in data["matrix"]:
            writer.writerow([f"{v:.10g}" for v in row])
    summary = {
        "out": str(out / "sensitivity.json"),
        "annotators": n,
        "noise": noise,
        "median_divergence": data["median_divergence"],
        "noise_floor": data["noise_floor"],
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


# --- preview -------------------------------------------------------------------

def cmd_preview(args):
    root = Path(args.dataset)
    manifest = load_manifest(root)
    if not manifest.samples:
        raise ValidationError("dataset holds no samples to preview")
    limit = max(1, int(args.limit))
    stems = [e["stem"] for e in manifest.samples[:limit]]
    tiles = [Image.open(root / f"{stem}.rgb.png").convert("RGB")
             for stem in stems]
    cols = max(1, min(int(args.cols), len(tiles)))
    rows = -(-len(tiles) // cols)
    tw, th = tiles[0].size
    sheet = Image.new("RGB", (cols * tw, rows * th), (0, 0, 0))
    for i, tile in enumerate(tiles):
        if tile.size != (tw, th):
            tile = tile.resize((tw, th))
        sheet.paste(tile, ((i % cols) * tw, (i // cols) * th))
    out = Path(args.out) if args.out else root / "preview.png"
    sheet.save(out)
    print(json.dumps({"out": str(out), "tiles": len(tiles),
                      "grid": [rows, cols]}, indent=2, sort_keys=True))
    return EXIT_OK


# --- parser --------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_config_flags(sub):
    sub.add_argument("--config", help="JSON config file")
    sub.add_argument("--scene", help="asset index JSON (objects + scene)")
    sub.add_argument("--knowledge", help="knowledge base JSON")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--out")
    sub.add_argument("--k-threshold", dest="k_threshold",
                     help="log-likelihood threshold or the word 'calibrate'")
    sub.add_argument("--calibrate-percentile", dest="calibrate_percentile",
                     type=float)


def build_parser():
    parser = _Parser(prog="sceneforge",
                     description="Synthetic scene dataset toolkit")
    subs = parser.add_subparsers(dest="cmd", parser_class=_Parser)

    p = subs.add_parser("import", help="validate assets and knowledge")
    _add_config_flags(p)
    p.set_defaults(func=cmd_import)

    p = subs.add_parser("gen", help="generate, render, and package samples")
    _add_config_flags(p)
    p.add_argument("--count", type=int, help="number of samples")
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_gen)

    p = subs.add_parser("validate", help="check a dataset against its manifest")
    p.add_argument("dataset", help="dataset directory or manifest path")
    p.set_defaults(func=cmd_validate)

    p = subs.add_parser("stats", help="report dataset statistics")
    p.add_argument("dataset")
    p.set_defaults(func=cmd_stats)

    p = subs.add_parser("export-coco", help="write annotation JSON")
    p.add_argument("dataset")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_coco)

    p = subs.add_parser("losses", help="score a candidate image")
    p.add_argument("--dir", required=True, help="dataset root")
    p.add_argument("--stem", help="sample stem inside the dataset")
    p.add_argument("--candidate", required=True, help="candidate RGB png")
    p.add_argument("--pred-seg", dest="pred_seg")
    p.add_argument("--pred-depth", dest="pred_depth")
    p.add_argument("--pred-normal", dest="pred_normal")
    p.add_argument("--weights", type=float, nargs=4,
                   metavar=("GAN", "PMSE", "REC", "GEO"))
    p.add_argument("--out", help="also write the report here")
    p.set_defaults(func=cmd_losses)

    p = subs.add_parser("rf", help="receptive field and shape trace")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--arch", help="architecture string")
    group.add_argument("--preset", choices=sorted(_PRESETS),
                       default="discriminator")
    p.add_argument("--input", help="input size, e.g. 256x256x3")
    p.set_defaults(func=cmd_rf)

    p = subs.add_parser("sensitivity",
                        help="prior perturbation divergence study")
    _add_config_flags(p)
    p.add_argument("--annotators", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--count", type=int, help="layouts per base")
    p.set_defaults(func=cmd_sensitivity)

    p = subs.add_parser("preview", help="write a contact sheet PNG")
    p.add_argument("dataset")
    p.add_argument("--out")
    p.add_argument("--cols", type=int, default=5)
    p.add_argument("--limit", type=int, default=25)
    p.set_defaults(func=cmd_preview)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "cmd", None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except _UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExhaustedError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValidationError, MeshError, UnknownCategoryError,
            ArchParseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except SceneForgeError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


def entrypoint():
    sys.exit(main())
