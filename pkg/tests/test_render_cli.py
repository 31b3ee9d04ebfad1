import csv
import json

import numpy as np
import pytest

from tangent_lens import cli
from tangent_lens.affine import Address
from tangent_lens.render import PALETTE, read_ppm, render_frame, write_ppm
from tangent_lens.screens import construction_level


def test_render_frame_palette_and_determinism(carpet, tmp_path):
    s = construction_level(carpet, Address((), 4), 0.05)
    a = render_frame(carpet, s, size=64)
    b = render_frame(carpet, s, size=64)
    assert a.shape == (64, 64) and a.dtype == np.uint8
    assert np.array_equal(a, b)
    assert set(np.unique(a)) <= set(PALETTE)
    write_ppm(tmp_path / "f.ppm", a)
    back = read_ppm(tmp_path / "f.ppm")
    assert np.array_equal(back[:, :, 0], a)
    assert (tmp_path / "f.ppm").read_bytes().startswith(b"P6\n64 64\n255\n")


def test_round_screen_blanks_corners(carpet):
    s = construction_level(carpet, Address((), 4), 1.0)
    img = render_frame(carpet, s, size=32, square=False)
    assert img[0, 0] == PALETTE[0] and img[-1, -1] == PALETTE[0]


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_zoom_outputs(tmp_path):
    code = cli.main(["zoom", "--config", "example-4-2", "--out", str(tmp_path),
                     "--size", "48", "--samples", "300"])
    assert code == 0
    frames = sorted(p.name for p in tmp_path.glob("frame_*.ppm"))
    assert frames == ["frame_0.0003.ppm", "frame_0.005.ppm", "frame_0.04.ppm", "frame_1.ppm"]
    rows = read_csv(tmp_path / "trace.csv")
    assert rows[0][:5] == ["scale", "level", "ratio", "pattern", "d_hausdorff"]
    assert len(rows) == 5
    assert rows[2][0] == "0.040000000000000001"
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["address"]["snap_distance"] < 1e-6
    assert [f["level"] for f in rep["frames"]] == [int(r[1]) for r in rows[1:]]


def test_zoom_bit_identical(tmp_path):
    args = ["zoom", "--config", "example-4-3", "--size", "40", "--samples", "200", "--out"]
    assert cli.main(args + [str(tmp_path / "a")]) == 0
    assert cli.main(args + [str(tmp_path / "b"), "--threads", "8"]) == 0
    for p in sorted((tmp_path / "a").iterdir()):
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes(), p.name


def test_analyze_check(tmp_path, capsys):
    assert cli.main(["analyze", "check", "--config", "example-4-2", "--out", str(tmp_path)]) == 0
    rows = {r[0]: r for r in read_csv(tmp_path / "trace.csv")[1:]}
    assert rows["separation"][1] == "pass"
    assert rows["projection"][1] == "pass"
    assert rows["lyapunov_distinct"][1] == "pass"
    assert (tmp_path / "covers.png").exists()
    code = cli.main(["analyze", "check", "--config", "example-4-5", "--out", str(tmp_path / "c")])
    assert code == 2
    assert "projection" in capsys.readouterr().err


def test_analyze_lyapunov(tmp_path):
    code = cli.main(["analyze", "lyapunov", "--config", "example-4-2", "--out", str(tmp_path),
                     "--n", "200", "--trials", "20"])
    assert code == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["closed_form"]["horizontal"] == pytest.approx(0.889787, abs=1e-6)
    assert rep["closed_form"]["vertical"] == pytest.approx(1.291181, abs=1e-6)
    assert len(read_csv(tmp_path / "trials.csv")) == 21


def test_analyze_tangent_product_cantor(tmp_path):
    code = cli.main(["analyze", "tangent", "--config", "example-4-5", "--out", str(tmp_path),
                     "--samples", "400"])
    assert code == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["kind"] != "Fibered"
    assert (tmp_path / "tangent.png").exists()


def test_errors_are_module_qualified(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({
        "maps": [{"matrix": [[1.2, 0], [0, 0.5]], "translation": [0, 0]},
                 {"matrix": [[0.5, 0], [0, 0.5]], "translation": [0.5, 0]}],
        "weights": [0.5, 0.5], "point": {"tail": 1}, "scales": [0.1]}))
    assert cli.main(["zoom", "--config", str(bad), "--out", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error[config]: maps[0]: not contractive")
    bad.write_text(json.dumps({
        "maps": [{"matrix": [[0.5, 0], [0, 0.5]], "translation": [0, 0]},
                 {"matrix": [[0.5, 0], [0, 0.5]], "translation": [0.5, 0]}],
        "weights": [0.5, 0.5], "point": {"tail": 1}, "scales": []}))
    assert cli.main(["zoom", "--config", str(bad), "--out", str(tmp_path)]) == 1
    assert "scales" in capsys.readouterr().err
    assert cli.main(["zoom", "--config", str(tmp_path / "missing.json")]) == 1


def test_fmt_17_digits():
    assert cli.fmt(0.1) == "0.10000000000000001"
    assert cli.fmt(True) == "true" and cli.fmt(None) == "" and cli.fmt(3) == "3"
