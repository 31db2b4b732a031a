import os

import numpy as np
import pytest

from conftest import MNIST_DIR
from rateless import checkpoint
from rateless.cli import main, read_config
from rateless.datasets import write_idx
from rateless.errors import ConfigError
from rateless.evaluate import read_sweep_csv


@pytest.fixture
def idx_dir(tmp_path):
    """Tiny 12x12 IDX dataset in MNIST file layout."""
    r = np.random.default_rng(0)
    root = tmp_path / "data"
    root.mkdir()
    for prefix, n in (("train", 120), ("t10k", 40)):
        labels = r.integers(0, 3, n)
        images = np.zeros((n, 12, 12), np.uint8)
        for i, lab in enumerate(labels):
            images[i, 2 + 3 * lab : 5 + 3 * lab, 2:10] = 200
        images = np.clip(images + r.integers(0, 40, images.shape), 0, 255)
        write_idx(images, labels, root / f"{prefix}-images-idx3-ubyte", root / f"{prefix}-labels-idx1-ubyte")
    return root


def _train(idx_dir, out, *extra):
    args = ["train", "--data-dir", str(idx_dir), "--latent", "8", "--hidden", "16", "--epochs", "3", "--out", str(out)]
    return main(args + list(extra))


def test_train_writes_outputs(idx_dir, tmp_path):
    out = tmp_path / "run"
    assert _train(idx_dir, out) == 0
    for name in ("model.ckpt", "history.csv", "train_manifest.txt"):
        assert (out / name).exists()
    params, config, meta = checkpoint.load_autoencoder(out / "model.ckpt")
    assert (config.input_dim, config.hidden_dim, config.latent_dim) == (144, 16, 8)
    assert meta["schedule"] == "taildrop(beta=1)"
    manifest = read_config(out / "train_manifest.txt")
    assert manifest["latent"] == "8" and manifest["batch_size"] == "100" and manifest["output_activation"] == "sigmoid"


def test_manifest_reproduces_run(idx_dir, tmp_path):
    out = tmp_path / "run"
    assert _train(idx_dir, out, "--schedule", "uniform", "--p", "0.5") == 0
    first = {n: (out / n).read_bytes() for n in ("model.ckpt", "history.csv")}
    assert main(["train", "--config", str(out / "train_manifest.txt")]) == 0
    for name, content in first.items():
        assert (out / name).read_bytes() == content


def test_config_file_and_override(idx_dir, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# comment\ndata-dir={idx_dir}\nlatent=8\nhidden=16\nepochs=1\nbeta=2.1\nout={tmp_path / 'a'}\n")
    assert main(["train", "--config", str(cfg), "--beta", "0.67"]) == 0
    assert read_config(tmp_path / "a" / "train_manifest.txt")["beta"] == "0.67"
    bad = tmp_path / "bad.cfg"
    bad.write_text("nonsense=1\n")
    assert main(["train", "--config", str(bad)]) != 0
    bad.write_text("just words\n")
    with pytest.raises(ConfigError):
        read_config(bad)


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["train", "--no-such-flag"])
    assert exc.value.code == 2


def test_missing_files(tmp_path, capsys):
    assert main(["train", "--data-dir", str(tmp_path), "--out", str(tmp_path / "o")]) != 0
    assert "found in" in capsys.readouterr().err


def test_sweep_default_grid_and_schema(idx_dir, tmp_path):
    out = tmp_path / "run"
    assert main(["train", "--data-dir", str(idx_dir), "--latent", "64", "--hidden", "8", "--epochs", "1", "--out", str(out)]) == 0
    assert main(["sweep", "--checkpoint", str(out / "model.ckpt"), "--data-dir", str(idx_dir), "--out", str(out)]) == 0
    rows = read_sweep_csv(out / "sweep.csv")
    assert [int(r["L"]) for r in rows] == [4, 14, 24, 34, 44, 54, 64]
    assert all(r["mse"] and r["ssim"] and r["probe_acc"] for r in rows)
    first = (out / "sweep.csv").read_bytes()
    assert main(["sweep", "--checkpoint", str(out / "model.ckpt"), "--data-dir", str(idx_dir), "--out", str(out)]) == 0
    assert (out / "sweep.csv").read_bytes() == first

    assert main(["sweep", "--checkpoint", str(out / "model.ckpt"), "--data-dir", str(idx_dir), "--out", str(out),
                 "--metrics", "mse", "--L-list", "1-3"]) == 0
    rows = read_sweep_csv(out / "sweep.csv")
    assert [r["L"] for r in rows] == ["1", "2", "3"]
    assert all(r["ssim"] == "" and r["probe_acc"] == "" for r in rows)


def test_sweep_exports(idx_dir, tmp_path):
    out = tmp_path / "run"
    assert _train(idx_dir, out) == 0
    grid, scatter = tmp_path / "g.pgm", tmp_path / "s.csv"
    assert main(["sweep", "--checkpoint", str(out / "model.ckpt"), "--data-dir", str(idx_dir), "--out", str(out),
                 "--metrics", "mse", "--grid", str(grid), "--samples", "0,1,2", "--scatter", str(scatter)]) == 0
    assert grid.read_bytes().startswith(b"P5\n36 108\n255\n")
    assert len(scatter.read_text().splitlines()) == 41


def test_sweep_dimension_mismatch(idx_dir, tmp_path, capsys):
    out = tmp_path / "pca"
    assert main(["pca", "--dataset", "synth", "--synth-count", "500", "--synth-test-count", "50", "--latent", "4",
                 "--out", str(out)]) == 0
    code = main(["sweep", "--checkpoint", str(out / "pca.ckpt"), "--data-dir", str(idx_dir), "--out", str(out)])
    assert code != 0
    assert "features" in capsys.readouterr().err


def test_pca_command(idx_dir, tmp_path):
    out = tmp_path / "pca"
    assert main(["pca", "--data-dir", str(idx_dir), "--latent", "10", "--out", str(out)]) == 0
    model, _ = checkpoint.load_pca(out / "pca.ckpt")
    assert model.components.shape == (144, 10)
    best = [float(r["mse"]) for r in read_sweep_csv(out / "sweep.csv")]
    assert all(b <= a for a, b in zip(best, best[1:]))
    assert main(["pca", "--data-dir", str(idx_dir), "--latent", "10", "--out", str(out), "--worst-order"]) == 0
    worst = [float(r["mse"]) for r in read_sweep_csv(out / "sweep.csv")]
    assert all(w >= b for w, b in zip(worst, best))


def test_pca_synth_matches_tail_sums(tmp_path):
    out = tmp_path / "pca"
    assert main(["pca", "--dataset", "synth", "--synth-dim", "8", "--synth-count", "50000",
                 "--synth-test-count", "50000", "--latent", "8", "--out", str(out)]) == 0
    lam = 1.0 / np.arange(1, 9)
    for row in read_sweep_csv(out / "sweep.csv"):
        L = int(row["L"])
        # the CSV reports per-coordinate error; the tail sum is a per-sample total
        total = float(row["mse"]) * 8
        if L < 8:
            assert abs(total - lam[L:].sum()) <= 0.03 * lam[L:].sum()
        else:
            assert total <= 1e-20


def test_synth_check_command(tmp_path, capsys):
    assert main(["synth-check", "--dim", "8", "--count", "20000", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "synth_check.csv").read_text().count("\n") == 9
    assert main(["synth-check", "--dim", "4", "--count", "100", "--spectrum", "zero"]) == 0
    report = capsys.readouterr().out
    assert "0.0,0.0,0.000e+00" in report
    assert main(["synth-check", "--dim", "3", "--spectrum", "1,2,0.5"]) != 0
    assert "not sorted" in capsys.readouterr().out
    assert main(["synth-check", "--dim", "8", "--count", "200", "--tolerance", "0.001"]) != 0
    assert "FAIL" in capsys.readouterr().out


@pytest.mark.skipif(not os.path.exists(os.path.join(MNIST_DIR, "train-images-idx3-ubyte.gz")), reason="MNIST missing")
def test_mnist_smoke(tmp_path):
    out = tmp_path / "mnist"
    assert main(["train", "--data-dir", MNIST_DIR, "--subset", "1000", "--epochs", "5", "--hidden", "64",
                 "--schedule", "taildrop", "--beta", "0.67", "--out", str(out)]) == 0
    assert (out / "model.ckpt").exists() and (out / "train_manifest.txt").exists()


def test_ssim_loss_pipeline(idx_dir, tmp_path):
    out = tmp_path / "ssim"
    assert _train(idx_dir, out, "--loss", "ssim", "--finetune-epochs", "2", "--ssim-window", "uniform") == 0
    assert (out / "finetune_history.csv").exists()
    again = tmp_path / "ssim2"
    assert _train(idx_dir, again, "--loss", "ssim", "--init", str(out / "model.ckpt"), "--finetune-epochs", "1",
                  "--ssim-window", "uniform") == 0
    assert not (again / "history.csv").exists()
