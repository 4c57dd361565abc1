import numpy as np
import pytest

from bihpf import io as bio
from bihpf.cli import main

TINY = ["--size", "16", "--n-train", "6", "--n-test", "2", "--epochs", "1"]


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    root = tmp_path_factory.mktemp("lab")
    assert main(["synth-gen", "--out", str(root / "d"), *TINY]) == 0
    return root / "d"


def test_synth_gen_layout(data):
    assert (data / "train" / "manifest.txt").exists()
    assert (data / "test" / "manifest.txt").exists()
    cfg = bio.load_config(data / "config.txt")
    assert cfg.size == 16 and cfg.n_train == 6
    assert len(bio.load_dataset(data / "test")) == 4 * 2 * 2


def test_preprocess_gray(tmp_path):
    img = np.random.default_rng(0).random((32, 32))
    bio.write_pnm(tmp_path / "x.pgm", img)
    args = ["preprocess", "--in", str(tmp_path / "x.pgm"), "--out", str(tmp_path / "x.f32t")]
    assert main(args + ["--sigma", "0.01", "--cutoff", "40", "--pgm", str(tmp_path / "v.pgm")]) == 0
    t = bio.load_tensor(tmp_path / "x.f32t")
    assert t.shape == (1, 32, 32)
    assert bio.read_pnm(tmp_path / "v.pgm").shape == (32, 32)


def test_preprocess_rgb_channels(tmp_path):
    bio.write_pnm(tmp_path / "x.ppm", np.random.default_rng(1).random((16, 16, 3)))
    out = tmp_path / "x.f32t"
    assert main(["preprocess", "--in", str(tmp_path / "x.ppm"), "--out", str(out), "--grayscale", "false"]) == 0
    assert bio.load_tensor(out).shape == (3, 16, 16)


def test_train_then_eval_with_checkpoint(data, tmp_path):
    ckpt = tmp_path / "m.ckpt"
    assert main(["train", "--data", str(data), "--out", str(ckpt), "--curve", str(tmp_path / "c.csv"), *TINY]) == 0
    assert bio.load_model(ckpt).input_shape == (1, 16, 16)
    assert main(["eval", "--data", str(data), "--model", str(ckpt), "--out", str(tmp_path / "e.csv"), *TINY]) == 0
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines[0] == "domain,acc,ap" and lines[-1].startswith("[all],")


def test_sweeps_comparable(data, tmp_path):
    for kind in ("cutoff-lpf", "cutoff-hpf"):
        out = tmp_path / f"{kind}.csv"
        assert main(["sweep", "--kind", kind, "--values", "40,80", "--data", str(data), "--out", str(out), *TINY]) == 0
    lpf = (tmp_path / "cutoff-lpf.csv").read_text().splitlines()
    hpf = (tmp_path / "cutoff-hpf.csv").read_text().splitlines()
    assert lpf[0] == hpf[0] == "param,domain,acc,ap"
    key = lambda rows: [r.split(",")[:2] for r in rows[1:]]
    assert key(lpf) == key(hpf) and lpf[1].startswith("40.0,")


def test_acm_train_and_analyze(data, tmp_path):
    a, m = tmp_path / "a.ckpt", tmp_path / "m.ckpt"
    args = ["acm-train", "--data", str(data), "--out", str(a), "--model-out", str(m), "--history", str(tmp_path / "h.csv")]
    assert main(args + TINY) == 0
    assert main(["acm-analyze", "--data", str(data), "--acm", str(a), "--model", str(m), "--out-dir", str(tmp_path / "an"), *TINY]) == 0
    assert bio.load_tensor(tmp_path / "an" / "wc_map.f32t").shape == (16, 16)
    rows = (tmp_path / "an" / "comparison.csv").read_text().splitlines()
    assert rows[0] == "domain,acc_original,acc_compressed" and len(rows) == 5


def test_eval_without_test_domains(capsys):
    assert main(["eval", "--size", "16", "--n-train", "2", "--n-test", "0", "--epochs", "1"]) == 2
    assert "no test domains" in capsys.readouterr().err


def test_usage_errors(capsys, tmp_path):
    assert main(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err
    assert main(["train", "--out", "x", "--no-such-flag"]) == 1
    assert main([]) == 1
    assert main(["sweep", "--kind", "nope"]) == 1
    assert main(["sweep", "--kind", "sigma", "--values", "a,b"]) == 1
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("mystery=1\n")
    assert main(["train", "--out", "x", "--config", str(cfg)]) == 1
    assert "unknown key" in capsys.readouterr().err


def test_data_errors(tmp_path, capsys):
    (tmp_path / "bad.pgm").write_bytes(b"P5\n4 4\n255\n\x00")
    assert main(["preprocess", "--in", str(tmp_path / "bad.pgm"), "--out", str(tmp_path / "o")]) == 2
    assert "truncated payload" in capsys.readouterr().err
    assert main(["preprocess", "--in", str(tmp_path / "missing.pgm"), "--out", str(tmp_path / "o")]) == 2
    assert main(["train", "--data", str(tmp_path / "nowhere"), "--out", str(tmp_path / "m")]) == 2
