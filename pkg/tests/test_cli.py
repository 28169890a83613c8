import json
import subprocess
import sys

import numpy as np
import pytest

import _oracle
from g2lcomp.cli import main
from g2lcomp.diagnostics import SynthSpec, synthesize
from g2lcomp.tensor_io import read_tensor, write_tensor


@pytest.fixture
def seed7(tmp_path):
    assert main(["synth", "--seed", "7", "--out-dir", str(tmp_path / "fx")]) == 0
    return tmp_path / "fx"


def _err_line(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("error: ")
    return err[0]


def test_compress_image_seed7(seed7, tmp_path):
    out = tmp_path / "sel.json"
    code = main(["compress-image", "--thumb", str(seed7 / "thumb.gct"),
                 "--crops", str(seed7 / "crops.gct"), "--layout", "2x2",
                 "--ratio", "0.25", "--out", str(out), "--render-dir", str(tmp_path / "png")])
    assert code == 0
    sel = json.loads(out.read_text())
    assert list(sel) == ["thumbnail", "crops"] and len(sel["crops"]) == 4
    thumb = read_tensor(seed7 / "thumb.gct").astype(float)
    crops = read_tensor(seed7 / "crops.gct").astype(float)
    keep, ref = _oracle.compress_image(thumb.tolist(), [c.tolist() for c in crops], 2, 2, 0.25)
    assert sel["thumbnail"]["retained"] == keep
    assert [c["retained"] for c in sel["crops"]] == [idx for _, idx in ref]
    names = sorted(p.name for p in (tmp_path / "png").iterdir())
    assert names == ["crop_0.pgm", "crop_1.pgm", "crop_2.pgm", "crop_3.pgm", "thumb.pgm"]


def test_compress_image_separate_files(seed7, tmp_path):
    crops = read_tensor(seed7 / "crops.gct")
    paths = []
    for j, c in enumerate(crops):
        paths.append(str(tmp_path / f"c{j}.gct"))
        write_tensor(c, paths[-1])
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    base = ["compress-image", "--thumb", str(seed7 / "thumb.gct"), "--layout", "2x2", "--ratio", "0.3"]
    assert main(base + ["--crops", *paths, "--out", str(a)]) == 0
    assert main(base + ["--crops", str(seed7 / "crops.gct"), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_arity_mismatch(seed7, tmp_path, capsys):
    crops = read_tensor(seed7 / "crops.gct")[:3]
    write_tensor(crops, tmp_path / "three.gct")
    code = main(["compress-image", "--thumb", str(seed7 / "thumb.gct"), "--crops",
                 str(tmp_path / "three.gct"), "--layout", "2x2", "--ratio", "0.25",
                 "--out", str(tmp_path / "x.json")])
    assert code == 2
    _err_line(capsys)


@pytest.mark.parametrize("extra", [["--ratio", "0"], ["--ratio", "1.5"], [], ["--layout", "2y2"]])
def test_usage_errors(seed7, tmp_path, capsys, extra, monkeypatch):
    monkeypatch.delenv("GC2_CONFIG", raising=False)
    args = ["compress-image", "--thumb", str(seed7 / "thumb.gct"), "--crops",
            str(seed7 / "crops.gct"), "--out", str(tmp_path / "x.json")]
    if "--layout" not in extra:
        args += ["--layout", "2x2"]
    assert main(args + extra) == 1
    _err_line(capsys)


def test_missing_flags(capsys):
    assert main(["compress-image"]) == 1
    _err_line(capsys)
    assert main([]) == 1
    _err_line(capsys)


def test_config_file_and_env(seed7, tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"retention_ratio": 0.5, "tau": 1}')
    out1, out2 = tmp_path / "1.json", tmp_path / "2.json"
    base = ["compress-image", "--thumb", str(seed7 / "thumb.gct"), "--crops",
            str(seed7 / "crops.gct"), "--layout", "2x2"]
    assert main(base + ["--config", str(cfg), "--out", str(out1)]) == 0
    monkeypatch.setenv("GC2_CONFIG", str(cfg))
    assert main(base + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert len(json.loads(out1.read_text())["thumbnail"]["retained"]) == 32


def test_bad_config_key(seed7, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"retention_ratio": 0.5, "temperature": 1}')
    code = main(["compress-image", "--thumb", str(seed7 / "thumb.gct"), "--crops",
                 str(seed7 / "crops.gct"), "--layout", "2x2", "--config", str(cfg),
                 "--out", str(tmp_path / "o.json")])
    assert code == 1
    assert "temperature" in _err_line(capsys)


def test_bad_tensor(tmp_path, capsys):
    (tmp_path / "bad.gct").write_bytes(b"nope")
    code = main(["compress-image", "--thumb", str(tmp_path / "bad.gct"), "--crops",
                 str(tmp_path / "bad.gct"), "--layout", "1x1", "--ratio", "0.5",
                 "--out", str(tmp_path / "o.json")])
    assert code == 2
    _err_line(capsys)


class TestVideo:
    def test_conservation(self, tmp_path, rng):
        write_tensor(rng.standard_normal((2, 4, 3)), tmp_path / "v.gct")
        assert main(["compress-video", "--video", str(tmp_path / "v.gct"), "--ratio", "0.5",
                     "--out", str(tmp_path / "v.json")]) == 0
        sel = json.loads((tmp_path / "v.json").read_text())
        assert sum(len(f["retained"]) for f in sel["frames"]) == 4

    def test_full(self, tmp_path, rng):
        write_tensor(rng.standard_normal((3, 5, 2)), tmp_path / "v.gct")
        assert main(["compress-video", "--video", str(tmp_path / "v.gct"), "--ratio", "1",
                     "--out", str(tmp_path / "v.json")]) == 0
        sel = json.loads((tmp_path / "v.json").read_text())
        assert all(f["retained"] == list(range(5)) for f in sel["frames"])

    def test_rank2(self, tmp_path, rng, capsys):
        write_tensor(rng.standard_normal((4, 3)), tmp_path / "v.gct")
        assert main(["compress-video", "--video", str(tmp_path / "v.gct"), "--ratio", "0.5",
                     "--out", str(tmp_path / "v.json")]) == 2
        _err_line(capsys)


class TestFlops:
    ARGS = ["flops", "--tokens", "2880", "--hidden", "4096", "--ffn", "11008", "--layers", "32"]

    def test_table6(self, capsys):
        assert main(self.ARGS + ["--ratio", "0.10"]) == 0
        out = dict(line.split(": ") for line in capsys.readouterr().out.strip().splitlines())
        assert out["prefill_flops"] == "4.165e+13"
        assert out["reduction_ratio"] == "0.909"

    def test_no_compression(self, capsys):
        assert main(self.ARGS + ["--ratio", "1"]) == 0
        assert "reduction_ratio: 0.000" in capsys.readouterr().out

    def test_without_ratio(self, capsys):
        assert main(self.ARGS) == 0
        assert "reduction_ratio" not in capsys.readouterr().out

    @pytest.mark.parametrize("flag", ["--tokens", "--hidden"])
    def test_non_positive(self, flag, capsys):
        args = list(self.ARGS)
        args[args.index(flag) + 1] = "0"
        assert main(args) == 1
        _err_line(capsys)


def test_probe_bias(capsys):
    assert main(["probe-bias", "--scorer", "globalcom2", "--seed", "7", "--ratio", "0.25"]) == 0
    assert json.loads(capsys.readouterr().out)["bias_score"] == 0.0
    assert main(["probe-bias", "--scorer", "position_weighted", "--seed", "7", "--ratio", "0.25"]) == 0
    assert json.loads(capsys.readouterr().out)["bias_score"] > 0


def test_probe_bias_spec_file(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text('{"h": 4, "w": 4, "a": 1, "b": 3, "seed": 5}')
    assert main(["probe-bias", "--scorer", "globalcom2", "--spec", str(spec), "--ratio", "0.3"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert len(rep["budgets_forward"]) == 3


def test_synth_deterministic(tmp_path):
    for d in ("a", "b"):
        assert main(["synth", "--seed", "3", "--layout", "1x3", "--grid", "4x6",
                     "--out-dir", str(tmp_path / d)]) == 0
    for name in ("thumb.gct", "crops.gct", "crop_tokens.gct"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    fx = synthesize(SynthSpec(h=4, w=6, a=1, b=3, seed=3))
    np.testing.assert_array_equal(read_tensor(tmp_path / "a" / "thumb.gct"),
                                  fx.thumb_scores.astype(np.float32))


def test_render_mask(tmp_path):
    write_tensor(np.zeros((2, 2)), tmp_path / "s.gct")
    assert main(["render-mask", "--scores", str(tmp_path / "s.gct"), "--retained", "0,3",
                 "--out", str(tmp_path / "m.pgm")]) == 0
    data = (tmp_path / "m.pgm").read_bytes()
    assert data[:11] == b"P5\n2 2\n255\n" and data[11:] == bytes([255, 64, 64, 255])


def test_render_mask_bad_index(tmp_path, capsys):
    write_tensor(np.zeros((2, 2)), tmp_path / "s.gct")
    assert main(["render-mask", "--scores", str(tmp_path / "s.gct"), "--retained", "9",
                 "--out", str(tmp_path / "m.pgm")]) == 2
    _err_line(capsys)


def test_console_entry(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "g2lcomp.cli", "flops", "--tokens", "0",
                           "--hidden", "1", "--ffn", "1", "--layers", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 1
    assert proc.stderr.startswith("error: ")
