import json

import numpy as np
import pytest

from hologamma.calibration import CalibrationProfile, CorrectionLut, PolynomialCurve, make_ramp
from hologamma.cli import main
from hologamma.imaging import (
    GreyImage,
    dequantize8,
    encode_pnm,
    load_grey,
    quantize8,
    write_image,
)
from hologamma.metrics import image_mse
from hologamma.ospr import embed_target, target_roi

K = 256
BOUND = 1 / (2 * K)


def run(*argv):
    return main([str(a) for a in argv])


def write_pgm16(path, values):
    codes = np.floor(np.asarray(values) * 65535 + 0.5).astype(np.uint16)
    path.write_bytes(encode_pnm(codes, maxval=65535))


# -- ramp ---------------------------------------------------------------------

def test_ramp_full_size(tmp_path):
    out = tmp_path / "ramp.pgm"
    assert run("ramp", 1280, 1024, out) == 0
    img = load_grey(out)
    assert (img.width, img.height) == (1280, 1024)
    assert np.all(img.pixels[:, 0] == 1.0) and np.all(img.pixels[:, 1] == 0.0)


def test_ramp_too_narrow(tmp_path, capsys):
    assert run("ramp", 2, 8, tmp_path / "out.pgm") == 1
    assert "width" in capsys.readouterr().err


def test_ramp_deterministic(tmp_path):
    a, b = tmp_path / "a.pgm", tmp_path / "b.pgm"
    run("ramp", 256, 64, a)
    run("ramp", 256, 64, b)
    assert a.read_bytes() == b.read_bytes()


def test_ramp_unwritable(tmp_path, capsys):
    assert run("ramp", 16, 4, tmp_path / "missing" / "out.pgm") == 2
    assert "cannot write" in capsys.readouterr().err


def test_bad_usage_exits_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["ramp", "wide"])
    assert exc.value.code == 1


# -- simulate -----------------------------------------------------------------

def _ramp_target(tmp_path, w=256, h=256):
    roi = target_roi(w, h)
    path = tmp_path / "target.png"
    write_image(path, make_ramp(roi.width, roi.height))
    return path


def test_simulate_deterministic_with_manifest(tmp_path):
    target = _ramp_target(tmp_path, 64, 64)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / f"{name}.png"
        flags = ["--width", 64, "--height", 64, "--subframes", 3, "--seed", 5]
        assert run("simulate", target, out, *flags, "--holograms-dir", tmp_path / f"{name}_holo") == 0
        outs.append(out)
    assert outs[0].read_bytes() == outs[1].read_bytes()
    manifest = json.loads((tmp_path / "a.json").read_text())
    assert manifest["seed"] == 5 and manifest["subframes"] == 3
    assert manifest["placement"] == "half-plane" and manifest["noise_sigma"] == 0.0
    holo_manifest = json.loads((tmp_path / "a_holo" / "manifest.json").read_text())
    assert len(holo_manifest["files"]) == 3


def test_simulate_more_subframes_is_closer_to_target(tmp_path):
    target = _ramp_target(tmp_path)
    ideal = embed_target(load_grey(target), 256, 256)
    roi = target_roi(256, 256)
    errs = {}
    for n in (1, 24):
        out = tmp_path / f"n{n}.png"
        assert run("simulate", target, out, "--width", 256, "--height", 256, "--subframes", n) == 0
        errs[n] = image_mse(load_grey(out), ideal, roi).mse
    assert errs[24] < errs[1]


def test_simulate_missing_input(tmp_path, capsys):
    assert run("simulate", tmp_path / "nope.png", tmp_path / "o.png") == 1
    assert "cannot read" in capsys.readouterr().err


def test_simulate_wrong_target_size(tmp_path, capsys):
    target = _ramp_target(tmp_path, 64, 64)
    assert run("simulate", target, tmp_path / "o.png", "--width", 128, "--height", 128) == 1
    assert "needs 128x63" in capsys.readouterr().err


# -- calibrate ----------------------------------------------------------------

def test_calibrate_ideal_ramp(tmp_path, capsys):
    cap = tmp_path / "cap.pgm"
    write_image(cap, make_ramp(256, 32))
    prof_path = tmp_path / "prof.json"
    assert run("calibrate", cap, prof_path) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["mse_before"] < 1e-5
    prof = CalibrationProfile.load(prof_path)
    assert np.max(np.abs(prof.lut.entries - prof.lut.levels)) <= BOUND
    assert (tmp_path / "prof_response.csv").read_text().startswith("input,output\n")
    assert (tmp_path / "prof_correction.csv").read_text().count("\n") == K + 1


def test_calibrate_cube_capture(tmp_path):
    ramp = make_ramp(256, 16).pixels
    cube = ramp ** 3
    cap = tmp_path / "cube.pgm"
    write_pgm16(cap, cube)
    prof_path = tmp_path / "p.json"
    assert run("calibrate", cap, prof_path, "--lut-size", K) == 0
    lut = CalibrationProfile.load(prof_path).lut
    assert np.max(np.abs(lut.entries - np.cbrt(lut.levels))) <= BOUND + 1e-6


def test_calibrate_with_roi(tmp_path):
    canvas = np.zeros((40, 300))
    canvas[5:37, 20:276] = make_ramp(256, 32).pixels
    cap = tmp_path / "cap.png"
    write_image(cap, GreyImage(canvas))
    assert run("calibrate", cap, tmp_path / "p.json", "--roi", "18,5,258,32") == 0
    lut = CalibrationProfile.load(tmp_path / "p.json").lut
    assert np.max(np.abs(lut.entries - lut.levels)) <= 1e-2


def test_calibrate_uniform_capture(tmp_path):
    cap = tmp_path / "flat.pgm"
    write_image(cap, GreyImage(np.full((8, 64), 0.3)))
    assert run("calibrate", cap, tmp_path / "p.json") == 3


def test_calibrate_flat_ramp_is_degenerate(tmp_path):
    img = np.full((8, 64), 0.2)
    img[:, 0] = 1.0
    cap = tmp_path / "flat.pgm"
    write_image(cap, GreyImage(img))
    assert run("calibrate", cap, tmp_path / "p.json") == 4


def test_calibrate_created_is_reproducible(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1600000000")
    cap = tmp_path / "cap.pgm"
    write_image(cap, make_ramp(64, 4))
    run("calibrate", cap, tmp_path / "p.json")
    assert CalibrationProfile.load(tmp_path / "p.json").created == "2020-09-13T12:26:40Z"


# -- correct ------------------------------------------------------------------

def _profile(tmp_path, lut, name="p.json"):
    path = tmp_path / name
    CalibrationProfile(PolynomialCurve((0, 1)), lut, 0.0, created="2020-01-01T00:00:00Z").save(path)
    return path


def test_correct_identity(tmp_path, rng):
    codes = rng.integers(0, 256, size=(9, 13), dtype=np.uint8)
    src = tmp_path / "in.png"
    write_image(src, dequantize8(codes))
    out = tmp_path / "out.png"
    assert run("correct", src, _profile(tmp_path, CorrectionLut.identity(K)), out) == 0
    assert np.array_equal(quantize8(load_grey(out)), codes)


def test_correct_square_profile(tmp_path):
    cap = tmp_path / "sq.pgm"
    write_pgm16(cap, np.where(make_ramp(256, 4).pixels == 1.0, 1.0, make_ramp(256, 4).pixels ** 2))
    prof = tmp_path / "sq.json"
    assert run("calibrate", cap, prof) == 0
    src = tmp_path / "grey.png"
    write_image(src, GreyImage(np.full((4, 4), 0.25)))
    out = tmp_path / "out.png"
    assert run("correct", src, prof, out) == 0
    assert np.all(np.abs(load_grey(out).pixels - 0.5) <= 1 / 255)


def test_correct_bad_profiles(tmp_path):
    src = tmp_path / "in.png"
    write_image(src, GreyImage(np.zeros((2, 2))))
    bad = tmp_path / "bad.json"
    bad.write_text("{ this is not json")
    assert run("correct", src, bad, tmp_path / "o.png") == 5
    prof = _profile(tmp_path, CorrectionLut.identity(8))
    d = json.loads(prof.read_text())
    d["version"] = 7
    prof.write_text(json.dumps(d))
    assert run("correct", src, prof, tmp_path / "o.png") == 5
    assert run("correct", src, tmp_path / "absent.json", tmp_path / "o.png") == 5


# -- evaluate -----------------------------------------------------------------

def test_evaluate_identical(tmp_path, capsys):
    a = tmp_path / "a.png"
    write_image(a, GreyImage(np.full((3, 3), 0.4)))
    assert run("evaluate", a, a) == 0
    assert json.loads(capsys.readouterr().out)["mse"] == 0.0


def test_evaluate_with_table_baseline(tmp_path, capsys):
    # 27 of 28 pixels off by 10/255: mse = 27/28 * (10/255)**2 = 0.0014829
    a = np.zeros((4, 7))
    b = np.full((4, 7), 10 / 255)
    b[0, 0] = 0
    pa, pb = tmp_path / "a.pgm", tmp_path / "b.pgm"
    write_image(pa, GreyImage(a))
    write_image(pb, GreyImage(b))
    assert run("evaluate", pa, pb, "--before", 0.023773) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["mse"] == pytest.approx(27 / 28 * (10 / 255) ** 2, rel=1e-12)
    assert out["normalized_error_display"] == "6.24%"


def test_evaluate_zero_baseline(tmp_path):
    a = tmp_path / "a.png"
    write_image(a, GreyImage(np.zeros((2, 2))))
    assert run("evaluate", a, a, "--before", 0) == 1


def test_evaluate_size_mismatch(tmp_path):
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    write_image(a, GreyImage(np.zeros((2, 2))))
    write_image(b, GreyImage(np.zeros((2, 3))))
    assert run("evaluate", a, b) == 1


def test_evaluate_roi(tmp_path, capsys):
    x = np.zeros((4, 4))
    y = x.copy()
    y[0, 0] = 1.0
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    write_image(a, GreyImage(x))
    write_image(b, GreyImage(y))
    assert run("evaluate", a, b, "--roi", "1,1,2,2") == 0
    out = json.loads(capsys.readouterr().out)
    assert out["mse"] == 0.0 and out["n_samples"] == 4


# -- pipeline -----------------------------------------------------------------

def test_pipeline_cube(tmp_path, capsys):
    summary = tmp_path / "s.json"
    assert run("pipeline", "--width", 256, "--height", 256, "--distortion", "0,0,0,1",
               "--summary", summary, "--out-dir", tmp_path / "run") == 0
    out = json.loads(capsys.readouterr().out)
    assert out["normalized_error_percent"] <= 10.0
    assert json.loads(summary.read_text()) == out
    assert (tmp_path / "run" / "profile.json").exists()
    assert (tmp_path / "run" / "corrected_ramp_replay.png").exists()


def test_pipeline_with_target(tmp_path, capsys):
    y, x = np.mgrid[0:63, 0:128]
    t = tmp_path / "t.png"
    write_image(t, GreyImage(0.5 + 0.45 * np.sin(x / 9.0) * np.cos(y / 7.0)))
    assert run("pipeline", t, "--width", 128, "--height", 128, "--distortion", "0,0,1") == 0
    out = json.loads(capsys.readouterr().out)
    assert out["target"]["mse_after"] < out["target"]["mse_before"]


def test_pipeline_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('width = 64\nheight = 64\nsubframes = 2\nseed = 4\ndistortion = "0,0,1"\n')
    assert run("pipeline", "--config", cfg, "--seed", 8) == 0
    conf = json.loads(capsys.readouterr().out)["config"]
    assert (conf["width"], conf["subframes"], conf["seed"]) == (64, 2, 8)
    assert conf["distortion"] == [0.0, 0.0, 1.0]


# -- plot ---------------------------------------------------------------------

def test_plot_identity(tmp_path):
    csv = tmp_path / "c.csv"
    csv.write_text("input,output\n0,0\n0.5,0.5\n1,1\n")
    out = tmp_path / "c.svg"
    assert run("plot", csv, out) == 0
    svg = out.read_text()
    assert svg.count("<polyline") == 1
    assert 'points="60.00,350.00 260.00,185.00 460.00,20.00"' in svg


def test_plot_two_curves(tmp_path):
    csv = tmp_path / "c.csv"
    csv.write_text("input,measured,correction\n0,0,0\n0.5,0.2,0.7\n1,1,1\n")
    out = tmp_path / "c.svg"
    assert run("plot", csv, out) == 0
    assert out.read_text().count("<polyline") == 2


def test_plot_polynomial_csv(tmp_path):
    csv = tmp_path / "fit.csv"
    csv.write_text(PolynomialCurve((0, 0, 1, 0)).to_csv())
    out = tmp_path / "fit.svg"
    assert run("plot", csv, out) == 0
    assert out.read_text().count("<polyline") == 1


@pytest.mark.parametrize("text", ["", "input,output\n", "input,output\n0,abc\n", "a,b\n0,0\n"])
def test_plot_bad_csv(tmp_path, text):
    csv = tmp_path / "c.csv"
    csv.write_text(text)
    assert run("plot", csv, tmp_path / "c.svg") == 1
