import csv
import importlib
import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from layerblur.cli import main
from layerblur.errors import NumericError
from layerblur.io import read_png, write_png
from layerblur.synth import fence_script

SCENES = Path(__file__).resolve().parents[1] / "scenes"

SMALL = dict(width=48, height=48, frames=3,
             foreground={"type": "noise", "smooth": 1.5},
             background={"type": "noise", "smooth": 1.5},
             mask={"type": "disk", "center": [24, 24], "radius": 16},
             trajectories={"foreground": {"velocity": [-5, 1]},
                           "background": {"velocity": [3, -2]}})


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return path


@pytest.fixture
def synth_dir(tmp_path):
    script = write_json(tmp_path / "scene.json", SMALL)
    assert main(["synth", str(script), "--out", str(tmp_path / "syn")]) == 0
    return tmp_path / "syn"


@pytest.fixture
def quick_config(tmp_path):
    return write_json(tmp_path / "run.json",
                      {"min_level_size": 36, "solver": {"inner_iterations": 1}})


def test_synth_writes_frames_and_ground_truth(synth_dir):
    assert len(list((synth_dir / "frames").glob("*.png"))) == 3
    assert {p.name for p in (synth_dir / "ground_truth").iterdir()} == {
        "L0.png", "L1.png", "A.png", "motions.json"}
    doc = json.loads((synth_dir / "ground_truth" / "motions.json").read_text())
    assert len(doc["foreground"]) == 4


def test_synth_is_deterministic_and_seed_overrides(tmp_path):
    script = write_json(tmp_path / "s.json", {**SMALL, "noise_sigma": 0.02})
    for name, seed in (("a", []), ("b", []), ("c", ["--seed", "9"])):
        assert main(["synth", str(script), "--out", str(tmp_path / name)] + seed) == 0
    frame = "frames/frame_001.png"
    assert (tmp_path / "a" / frame).read_bytes() == (tmp_path / "b" / frame).read_bytes()
    assert (tmp_path / "a" / frame).read_bytes() != (tmp_path / "c" / frame).read_bytes()


def test_synth_rejects_malformed_script(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["synth", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert main(["synth", str(write_json(tmp_path / "k.json", {"width": 3})),
                 "--out", str(tmp_path / "o")]) == 2
    assert main(["synth", str(tmp_path / "missing.json"), "--out", str(tmp_path / "o")]) == 2
    assert "error" in capsys.readouterr().err


def test_usage_errors_exit_two(capsys):
    assert main([]) == 2
    assert main(["deblur"]) == 2
    assert main(["synth", "x.json", "--out", "o", "--model", "other"]) == 2


def test_deblur_with_ground_truth_init(synth_dir, quick_config, tmp_path):
    out = tmp_path / "restored"
    code = main(["deblur", str(synth_dir / "frames"), "--config", str(quick_config),
                 "--gt-init", str(synth_dir / "ground_truth"), "--out", str(out)])
    assert code == 0
    for name in ("L0.png", "L1.png", "A.png", "motions.json", "energy.csv", "metrics.json"):
        assert (out / name).exists()
    rows = list(csv.reader((out / "energy.csv").open()))
    assert rows[0][0] == "step" and len(rows) - 1 == 2 * 1 * 3
    totals = [float(r[-1]) for r in rows[1:4]]
    assert all(b <= a + 1e-6 for a, b in zip(totals, totals[1:]))
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["psnr"]["L0"] >= metrics["baseline_psnr"]["L0"] + 3
    assert read_png(out / "A.png").shape == (48, 48)


def test_deblur_is_deterministic(synth_dir, quick_config, tmp_path):
    for name in ("a", "b"):
        assert main(["deblur", str(synth_dir / "frames"), "--config", str(quick_config),
                     "--out", str(tmp_path / name), "--seed", "3"]) == 0
    for name in ("L0.png", "A.png", "motions.json", "energy.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_deblur_input_errors(synth_dir, quick_config, tmp_path):
    frames = tmp_path / "frames"
    shutil.copytree(synth_dir / "frames", frames)
    base = ["deblur", str(frames), "--config", str(quick_config), "--out", str(tmp_path / "o")]
    bad_cfg = write_json(tmp_path / "bad.json", {"pyramid_scale": 0.8, "oops": 1})
    assert main(["deblur", str(frames), "--config", str(bad_cfg), "--out", str(tmp_path / "o")]) == 2
    assert main(base + ["--gt-init", str(tmp_path / "nowhere")]) == 2
    write_png(frames / "frame_009.png", np.zeros((20, 20)))
    assert main(base) == 2
    for p in frames.glob("*.png"):
        p.unlink()
    assert main(base) == 2


def test_deblur_numeric_failure_exits_three(synth_dir, quick_config, tmp_path, monkeypatch):
    alternate = importlib.import_module("layerblur.solver.alternate")
    calls = {"n": 0}
    real = alternate.solve_alpha

    def failing(*args, **kw):
        calls["n"] += 1
        if calls["n"] == 2:
            raise NumericError("non-finite value in alpha")
        return real(*args, **kw)

    monkeypatch.setattr(alternate, "solve_alpha", failing)
    out = tmp_path / "o"
    code = main(["deblur", str(synth_dir / "frames"), "--config", str(quick_config),
                 "--gt-init", str(synth_dir / "ground_truth"), "--out", str(out)])
    assert code == 3
    rows = list(csv.reader((out / "energy.csv").open()))
    assert len(rows) - 1 == 4  # one full level plus the latent step before the failure


def test_modelcmp_reports(tmp_path):
    for name, check in (("static_background", lambda d: d < 1e-6),
                        ("homogeneous_background", lambda d: d < 1e-6),
                        ("fence", lambda d: d > 0.05)):
        out = tmp_path / name
        assert main(["modelcmp", str(SCENES / f"{name}.json"), "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert check(report["max_diff"])
        assert report["mean_diff"] <= report["max_diff"]
        assert len(report["per_frame_max"]) == 3
        assert read_png(out / "difference.png").ndim == 3


def test_kernelviz_outputs(tmp_path):
    out = tmp_path / "kv"
    code = main(["kernelviz", str(SCENES / "boundary.json"), "--pixel", "35,8",
                 "--pixel", "50,8", "--out", str(out)])
    assert code == 0
    assert (out / "kernel_x35_y8.png").exists() and (out / "kernel_x50_y8.png").exists()
    dump = json.loads((out / "kernels.json").read_text())
    edge, interior = dump["pixels"]
    for entry in (edge, interior):
        for kind in ("proposed", "conventional"):
            assert entry[kind]["total"] == pytest.approx(1.0, abs=1e-10)
    assert interior["proposed"]["fg"] == [] and interior["conventional"]["fg"] == []
    assert len(edge["proposed"]["bg"]) < len(edge["conventional"]["bg"])
    assert edge["conventional"]["bg_sum"] == pytest.approx(edge["proposed"]["bg_sum"])


def test_kernelviz_rejects_out_of_bounds_pixel(tmp_path):
    script = tmp_path / "f.json"
    fence_script().save(script)
    assert main(["kernelviz", str(script), "--pixel", "32,0", "--out", str(tmp_path)]) == 2
    assert main(["kernelviz", str(script), "--pixel", "a,b", "--out", str(tmp_path)]) == 2
    assert main(["kernelviz", str(script), "--pixel", "1,1", "--frame", "7",
                 "--out", str(tmp_path)]) == 2


def test_eval_against_itself_and_missing_files(synth_dir, tmp_path):
    gt = synth_dir / "ground_truth"
    out = tmp_path / "m.json"
    assert main(["eval", str(gt), str(gt), "--out", str(out),
                 "--frames", str(synth_dir / "frames")]) == 0
    report = json.loads(out.read_text())
    assert report["psnr"] == {"L0": 99.0, "L1": 99.0} and report["mask_mae"] == 0.0
    assert report["baseline_psnr"]["L0"] < 99.0
    partial = tmp_path / "partial"
    shutil.copytree(gt, partial)
    (partial / "L1.png").unlink()
    assert main(["eval", str(partial), str(gt)]) == 2
