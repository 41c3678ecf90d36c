"""Command-line interface.

Subcommands: ``synth``, ``deblur``, ``modelcmp``, ``kernelviz`` and ``eval``.
Exit codes: 0 on success, 2 for bad input or usage, 3 when a solver hits a
non-finite value.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .errors import DegenerateMaskError, NumericError, ShapeError, SingleMotionError
from .io import read_png, read_scene, to_uint8, write_png, write_scene
from .metrics import evaluate
from .model import extract_pixel_kernels, render_blurred_frame
from .pipeline import RunConfig, deblur
from .solver.alternate import TRACE_COLUMNS, trace_row
from .synth import SceneScript, model_difference, render_sequence
from .types import BlurModel, reference_index

logger = logging.getLogger("layerblur")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class InputError(Exception):
    """Bad command-line input; reported with exit code 2."""


def _load_script(path, seed=None) -> SceneScript:
    try:
        script = SceneScript.load(path)
    except (OSError, json.JSONDecodeError, TypeError, ValueError, KeyError) as exc:
        raise InputError(f"cannot load scene script {path}: {exc}") from exc
    if seed is not None:
        script.seed = seed
    return script


def _render(script, kind):
    try:
        return render_sequence(script, kind)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot render script: {exc}") from exc


def cmd_synth(args) -> int:
    script = _load_script(args.script, args.seed)
    frames, gt = _render(script, BlurModel(args.model))
    out = Path(args.out)
    (out / "frames").mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(frames):
        write_png(out / "frames" / f"frame_{i:03d}.png", frame)
    write_scene(out / "ground_truth", gt, reference_index(gt.n_frames))
    script.save(out / "script.json")
    print(f"wrote {len(frames)} frames to {out / 'frames'}")
    return EXIT_OK


def _read_frames(directory):
    paths = sorted(Path(directory).glob("*.png"))
    if len(paths) < 2:
        raise InputError(f"need at least two PNG frames in {directory}")
    frames = [read_png(p) for p in paths]
    if any(f.shape != frames[0].shape for f in frames):
        raise InputError("frames differ in size")
    return frames


def _load_config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        return RunConfig.load(path)
    except (OSError, json.JSONDecodeError, TypeError, ValueError) as exc:
        raise InputError(f"cannot load config {path}: {exc}") from exc


def _load_truth(path):
    try:
        return read_scene(path)
    except (OSError, KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot load ground truth from {path}: {exc}") from exc


def cmd_deblur(args) -> int:
    config = _load_config(args.config).with_overrides(
        seed=args.seed, model=args.model, fg_label=args.fg_label)
    frames = _read_frames(args.frames)
    truth_init = _load_truth(args.gt_init) if args.gt_init else None
    truth = _load_truth(args.gt) if args.gt else truth_init
    for scene in (truth_init, truth):
        if scene is not None and (scene.shape != frames[0].shape[:2]
                                  or scene.n_frames != len(frames)):
            raise InputError("ground truth does not match the frames")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(config.to_dict(), indent=2))

    with open(out / "energy.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)

        def record(label, energy):
            writer.writerow(trace_row(label, energy))
            fh.flush()
            logger.info("%s total=%.6g", label, energy.total)

        try:
            result = deblur(frames, config, ground_truth=truth_init, on_step=record)
        except (SingleMotionError, DegenerateMaskError, ShapeError) as exc:
            raise InputError(f"initialization failed: {exc}") from exc

    write_scene(out, result.scene, reference_index(len(frames)))
    metrics = {"levels": [list(s) for s in result.level_shapes],
               "final_energy": result.trace[-1][1].total if result.trace else None}
    if truth is not None:
        metrics.update(evaluate(result.scene, truth, frames))
    (out / "metrics.json").write_text(json.dumps(metrics, indent=2))
    print(f"restored layers written to {out}")
    return EXIT_OK


def _heatmap(diff):
    peak = float(diff.max())
    scaled = diff / peak if peak > 0 else diff
    # black -> red -> yellow
    rgb = np.stack([np.clip(2 * scaled, 0, 1), np.clip(2 * scaled - 1, 0, 1),
                    np.zeros_like(scaled)], axis=-1)
    return rgb


def cmd_modelcmp(args) -> int:
    script = _load_script(args.script, args.seed)
    try:
        scene = script.build_scene()
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot build scene: {exc}") from exc
    diff = model_difference(scene)
    per_pixel = diff.max(axis=0)
    if per_pixel.ndim == 3:
        per_pixel = per_pixel.max(axis=2)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_png(out / "difference.png", _heatmap(per_pixel))
    for kind in BlurModel:
        write_png(out / f"{kind.value}_frame_{reference_index(scene.n_frames):03d}.png",
                  render_blurred_frame(scene, reference_index(scene.n_frames), kind))
    report = {"max_diff": float(diff.max()), "mean_diff": float(diff.mean()),
              "per_frame_max": [float(d.max()) for d in diff],
              "samples": scene.timing.samples}
    (out / "report.json").write_text(json.dumps(report, indent=2))
    print(f"max |proposed - conventional| = {report['max_diff']:.3e}")
    return EXIT_OK


def _parse_pixel(text):
    try:
        x, y = (int(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"pixel must look like X,Y, not {text!r}") from exc
    return x, y


def _weight_map(weights, shape):
    img = np.zeros(shape)
    for (x, y), w in weights.items():
        img[y, x] = w
    return img


def _panel(img, label, zoom):
    peak = img.max()
    gray = to_uint8(img / peak if peak > 0 else img)
    panel = Image.fromarray(gray).resize((img.shape[1] * zoom, img.shape[0] * zoom),
                                         Image.NEAREST)
    canvas = Image.new("L", (panel.width, panel.height + 12), 255)
    canvas.paste(panel, (0, 12))
    ImageDraw.Draw(canvas).text((1, 0), label, fill=0)
    return canvas


def cmd_kernelviz(args) -> int:
    script = _load_script(args.script, args.seed)
    try:
        scene = script.build_scene()
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot build scene: {exc}") from exc
    frame = reference_index(scene.n_frames) if args.frame is None else args.frame
    if not 0 <= frame < scene.n_frames:
        raise InputError(f"frame {frame} outside 0..{scene.n_frames - 1}")
    h, w = scene.shape
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dump = {"frame": frame, "pixels": []}
    for x, y in args.pixel:
        if not (0 <= x < w and 0 <= y < h):
            raise InputError(f"pixel ({x}, {y}) outside the {w}x{h} image")
        entry = {"x": x, "y": y}
        panels = []
        for kind in BlurModel:
            fg_w, bg_w = extract_pixel_kernels(scene, frame, (x, y), kind)
            entry[kind.value] = {
                "fg": [[qx, qy, wt] for (qx, qy), wt in sorted(fg_w.items())],
                "bg": [[qx, qy, wt] for (qx, qy), wt in sorted(bg_w.items())],
                "fg_sum": sum(fg_w.values()), "bg_sum": sum(bg_w.values()),
                "total": sum(fg_w.values()) + sum(bg_w.values()),
            }
            for layer, weights in (("fg", fg_w), ("bg", bg_w)):
                panels.append(_panel(_weight_map(weights, scene.shape),
                                     f"{kind.value[:4]} {layer}", args.zoom))
        strip = Image.new("L", (sum(p.width for p in panels) + 2 * (len(panels) - 1),
                                panels[0].height), 255)
        offset = 0
        for p in panels:
            strip.paste(p, (offset, 0))
            offset += p.width + 2
        strip.save(out / f"kernel_x{x}_y{y}.png")
        dump["pixels"].append(entry)
    (out / "kernels.json").write_text(json.dumps(dump, indent=2))
    print(f"kernels for {len(args.pixel)} pixel(s) written to {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    restored = _load_truth(args.restored)
    truth = _load_truth(args.truth)
    if restored.shape != truth.shape:
        raise InputError("restored and ground-truth images differ in size")
    frames = _read_frames(args.frames) if args.frames else None
    report = evaluate(restored, truth, frames)
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="layerblur", description="Layered motion-blur synthesis and video deblurring.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, script=True):
        if script:
            p.add_argument("script", help="scene script JSON")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the random seed")

    p = sub.add_parser("synth", help="render a synthetic blurred sequence")
    common(p)
    p.add_argument("--model", choices=[k.value for k in BlurModel], default="proposed")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("deblur", help="restore layers, mask and motions from frames")
    p.add_argument("frames", help="directory of frame PNGs (sorted by name)")
    common(p, script=False)
    p.add_argument("--config", help="run configuration JSON")
    p.add_argument("--model", choices=[k.value for k in BlurModel], default=None)
    p.add_argument("--gt-init", metavar="DIR",
                   help="start from the motions and mask of a ground-truth bundle")
    p.add_argument("--gt", metavar="DIR", help="ground-truth bundle for metrics.json")
    p.add_argument("--fg-label", choices=["a", "b", "auto"], default=None)
    p.set_defaults(func=cmd_deblur)

    p = sub.add_parser("modelcmp", help="compare the two blur models on a script")
    common(p)
    p.set_defaults(func=cmd_modelcmp)

    p = sub.add_parser("kernelviz", help="visualise per-pixel blur kernels")
    common(p)
    p.add_argument("--pixel", type=_parse_pixel, action="append", required=True,
                   metavar="X,Y", help="pixel to analyse (repeatable)")
    p.add_argument("--frame", type=int, default=None, help="frame index (default: reference)")
    p.add_argument("--zoom", type=int, default=4)
    p.set_defaults(func=cmd_kernelviz)

    p = sub.add_parser("eval", help="score a restored bundle against ground truth")
    p.add_argument("restored", help="directory with L0.png, L1.png, A.png, motions.json")
    p.add_argument("truth", help="ground-truth directory with the same files")
    p.add_argument("--frames", help="blurred frames, to add the middle-frame baseline")
    p.add_argument("--out", help="write the metrics JSON here as well")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
