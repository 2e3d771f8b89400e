"""End-to-end command-line behavior, exit codes, and reproducibility."""

import numpy as np
import pytest

from naide.checkpoint import load_checkpoint, save_checkpoint
from naide.cli import main
from naide.config import TrainConfig
from naide.image import KIND_CLEAN, KIND_NOISY, GrayImage, load_image, load_pgm, save_image, save_pgm
from naide.mlp import MlpWeights, init_weights
from naide.noise import NoiseSpec, add_gaussian_noise
from naide.synthetic import piecewise_constant


@pytest.fixture
def clean_pgm(tmp_path):
    path = tmp_path / "clean.pgm"
    save_pgm(piecewise_constant(16, 16, seed=0), path)
    return path


def constant_net_checkpoint(tmp_path, a=0.0, b=0.5, k=3):
    """Checkpoint whose net ignores the context and outputs (a, b)."""
    width = k * k - 1
    weights = MlpWeights(
        [width, 4, 2],
        [np.zeros((4, width)), np.zeros((2, 4))],
        [np.zeros(4), np.array([a, b])],
        "linear",
    )
    path = tmp_path / "const.ckpt"
    save_checkpoint(path, weights)
    return path


def strip_seconds(csv_text: str) -> list[str]:
    return [",".join(line.split(",")[:3]) for line in csv_text.strip().splitlines()]


class TestCorrupt:
    def test_writes_ngf_and_preview(self, tmp_path, clean_pgm, capsys):
        out = tmp_path / "noisy.ngf"
        rc = main(["corrupt", str(clean_pgm), "--out", str(out), "--sigma", "25", "--seed", "7"])
        assert rc == 0
        assert out.exists()
        preview = tmp_path / "noisy.preview.pgm"
        assert preview.exists()
        noisy = load_image(out)
        assert noisy.kind == KIND_NOISY
        assert noisy.pixels.shape == (16, 16)
        assert "wrote" in capsys.readouterr().out

    def test_deterministic(self, tmp_path, clean_pgm):
        a, b = tmp_path / "a.ngf", tmp_path / "b.ngf"
        main(["corrupt", str(clean_pgm), "--out", str(a), "--sigma", "25", "--seed", "7"])
        main(["corrupt", str(clean_pgm), "--out", str(b), "--sigma", "25", "--seed", "7"])
        assert a.read_bytes() == b.read_bytes()

    def test_missing_input_exit_2(self, tmp_path, capsys):
        rc = main(["corrupt", str(tmp_path / "nope.pgm"), "--out", str(tmp_path / "o.ngf"), "--sigma", "25"])
        assert rc == 2
        assert "error:" in capsys.readouterr().err

    def test_missing_sigma_exit_1(self, tmp_path, clean_pgm):
        rc = main(["corrupt", str(clean_pgm), "--out", str(tmp_path / "o.ngf")])
        assert rc == 1


class TestTrainAndDenoise:
    def _train_args(self, clean_pgm, out_dir):
        return [
            "train", str(clean_pgm), "--out", str(out_dir),
            "--k", "3", "--hidden", "8", "--epochs", "2", "--batch-size", "64",
            "--sigma", "25", "--seed", "0",
        ]

    def test_supervised_pipeline(self, tmp_path, clean_pgm, capsys):
        out_dir = tmp_path / "run"
        rc = main(self._train_args(clean_pgm, out_dir))
        assert rc == 0
        assert (out_dir / "checkpoint.ckpt").exists()
        assert (out_dir / "report.csv").exists()
        assert (out_dir / "config.json").exists()
        cfg = TrainConfig.from_json((out_dir / "config.json").read_text())
        assert cfg.k == 3 and cfg.hidden == (8,) and cfg.epochs == 2
        msg = capsys.readouterr().out
        assert "stop reason: epoch budget" in msg

        # denoise a corrupted version of the same image through the CLI
        noisy_path = tmp_path / "noisy.ngf"
        main(["corrupt", str(clean_pgm), "--out", str(noisy_path), "--sigma", "25", "--seed", "3"])
        recon = tmp_path / "recon.pgm"
        rc = main(["denoise", str(noisy_path), "--checkpoint", str(out_dir / "checkpoint.ckpt"), "--out", str(recon)])
        assert rc == 0
        img = load_pgm(recon)
        assert img.pixels.shape == (16, 16)
        assert img.kind == KIND_CLEAN

    def test_supervised_accepts_directory(self, tmp_path):
        data = tmp_path / "data"
        data.mkdir()
        for i in range(2):
            save_pgm(piecewise_constant(12, 12, seed=i), data / f"im{i}.pgm")
        out_dir = tmp_path / "run"
        rc = main(self._train_args(data, out_dir))
        assert rc == 0
        weights, stored = load_checkpoint(out_dir / "checkpoint.ckpt")
        assert weights.dims == [8, 8, 2]
        assert stored.sigma_255 == 25.0

    def test_empty_directory_exit_2(self, tmp_path):
        data = tmp_path / "data"
        data.mkdir()
        rc = main(self._train_args(data, tmp_path / "run"))
        assert rc == 2

    def test_adaptive_mode(self, tmp_path, clean_pgm, capsys):
        noisy_path = tmp_path / "noisy.ngf"
        main(["corrupt", str(clean_pgm), "--out", str(noisy_path), "--sigma", "25", "--seed", "1"])
        out_dir = tmp_path / "adapt"
        rc = main([
            "train", str(noisy_path), "--mode", "adaptive", "--out", str(out_dir),
            "--k", "3", "--hidden", "8", "--epochs", "2", "--batch-size", "64",
            "--sigma", "25", "--stop", "none",
        ])
        assert rc == 0
        assert (out_dir / "checkpoint.ckpt").exists()
        assert (out_dir / "best.ckpt").exists()  # adaptive runs track best weights
        assert "trained adaptive" in capsys.readouterr().out

    def test_adaptive_rejects_multiple_inputs(self, tmp_path, clean_pgm):
        rc = main([
            "train", str(clean_pgm), str(clean_pgm), "--mode", "adaptive",
            "--out", str(tmp_path / "x"), "--k", "3", "--hidden", "8", "--epochs", "1",
        ])
        assert rc == 1

    def test_reproducible_checkpoints(self, tmp_path, clean_pgm):
        d1, d2 = tmp_path / "r1", tmp_path / "r2"
        main(self._train_args(clean_pgm, d1))
        main(self._train_args(clean_pgm, d2))
        assert (d1 / "checkpoint.ckpt").read_bytes() == (d2 / "checkpoint.ckpt").read_bytes()
        assert (d1 / "config.json").read_text() == (d2 / "config.json").read_text()
        # the report matches except for wall-clock timings
        assert strip_seconds((d1 / "report.csv").read_text()) == strip_seconds(
            (d2 / "report.csv").read_text()
        )

    def test_config_file_with_flag_override(self, tmp_path, clean_pgm):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text('{"k": 3, "hidden": [8], "epochs": 5, "sigma_255": 25.0}')
        out_dir = tmp_path / "run"
        rc = main([
            "train", str(clean_pgm), "--out", str(out_dir),
            "--config", str(cfg_path), "--epochs", "1", "--batch-size", "64",
        ])
        assert rc == 0
        cfg = TrainConfig.from_json((out_dir / "config.json").read_text())
        assert cfg.epochs == 1  # flag wins over file
        assert cfg.k == 3

    def test_bad_hidden_flag_exit_1(self, tmp_path, clean_pgm):
        rc = main([
            "train", str(clean_pgm), "--out", str(tmp_path / "x"), "--hidden", "a,b",
        ])
        assert rc == 1


class TestFinetuneCli:
    def test_heuristic_stop_and_outputs(self, tmp_path, capsys):
        ckpt = constant_net_checkpoint(tmp_path)
        clean = GrayImage(np.full((16, 16), 0.5), KIND_CLEAN)
        noisy = add_gaussian_noise(clean, NoiseSpec(0.5), 2)
        noisy_path = tmp_path / "noisy.ngf"
        save_image(noisy, noisy_path)
        out_dir = tmp_path / "ft"
        rc = main([
            "finetune", str(noisy_path), "--checkpoint", str(ckpt), "--out", str(out_dir),
            "--sigma", "25", "--epochs", "10", "--batch-size", "64",
        ])
        assert rc == 0
        assert "stop reason: heuristic" in capsys.readouterr().out
        report_lines = (out_dir / "report.csv").read_text().strip().splitlines()
        assert len(report_lines) == 2  # header + the single epoch before the stop
        assert (out_dir / "best.ckpt").exists()
        # architecture comes from the checkpoint, not flags or defaults
        cfg = TrainConfig.from_json((out_dir / "config.json").read_text())
        assert cfg.k == 3 and cfg.hidden == (4,) and cfg.activation == "linear"

    def test_conflicting_k_exit_1(self, tmp_path):
        ckpt = constant_net_checkpoint(tmp_path)  # k=3 net
        noisy_path = tmp_path / "noisy.ngf"
        save_image(GrayImage(np.full((8, 8), 0.5), KIND_NOISY), noisy_path)
        rc = main([
            "finetune", str(noisy_path), "--checkpoint", str(ckpt),
            "--out", str(tmp_path / "x"), "--sigma", "25", "--k", "5",
        ])
        assert rc == 1

    def test_stored_config_reused(self, tmp_path, capsys):
        weights = init_weights([8, 6, 2], "positive", seed=0)
        stored = TrainConfig(k=3, hidden=(6,), epochs=2, batch_size=64, sigma_255=25.0, stop_rule="none")
        ckpt = tmp_path / "w.ckpt"
        save_checkpoint(ckpt, weights, stored)
        noisy_path = tmp_path / "noisy.ngf"
        noisy = add_gaussian_noise(piecewise_constant(12, 12, seed=0), NoiseSpec(25.0), 0)
        save_image(noisy, noisy_path)
        out_dir = tmp_path / "ft"
        rc = main(["finetune", str(noisy_path), "--checkpoint", str(ckpt), "--out", str(out_dir)])
        assert rc == 0
        cfg = TrainConfig.from_json((out_dir / "config.json").read_text())
        assert cfg.epochs == 2 and cfg.stop_rule == "none"


class TestDenoiseCli:
    def test_dump_affine_row_count(self, tmp_path):
        ckpt = constant_net_checkpoint(tmp_path, a=0.5, b=0.2)
        noisy_path = tmp_path / "noisy.ngf"
        save_image(GrayImage(np.random.default_rng(0).uniform(0, 1, (6, 5)), KIND_NOISY), noisy_path)
        affine_path = tmp_path / "affine.csv"
        rc = main([
            "denoise", str(noisy_path), "--checkpoint", str(ckpt),
            "--out", str(tmp_path / "r.ngf"), "--dump-affine", str(affine_path),
        ])
        assert rc == 0
        lines = affine_path.read_text().strip().splitlines()
        assert lines[0] == "row,col,a,b"
        assert len(lines) == 1 + 6 * 5
        _, _, a, b = lines[1].split(",")
        assert float(a) == 0.5 and float(b) == 0.2

    def test_constant_net_output_values(self, tmp_path):
        ckpt = constant_net_checkpoint(tmp_path, a=0.0, b=0.25)
        noisy_path = tmp_path / "noisy.ngf"
        save_image(GrayImage(np.random.default_rng(1).uniform(0, 1, (6, 6)), KIND_NOISY), noisy_path)
        out = tmp_path / "r.ngf"
        rc = main(["denoise", str(noisy_path), "--checkpoint", str(ckpt), "--out", str(out)])
        assert rc == 0
        np.testing.assert_array_equal(load_image(out).pixels, np.full((6, 6), 0.25))

    def test_wrong_k_flag_exit_1(self, tmp_path):
        ckpt = constant_net_checkpoint(tmp_path)
        noisy_path = tmp_path / "noisy.ngf"
        save_image(GrayImage(np.full((6, 6), 0.5), KIND_NOISY), noisy_path)
        rc = main([
            "denoise", str(noisy_path), "--checkpoint", str(ckpt),
            "--out", str(tmp_path / "r.ngf"), "--k", "5",
        ])
        assert rc == 1

    def test_corrupt_checkpoint_exit_2(self, tmp_path):
        bad = tmp_path / "bad.ckpt"
        bad.write_bytes(b"garbage")
        noisy_path = tmp_path / "noisy.ngf"
        save_image(GrayImage(np.full((6, 6), 0.5), KIND_NOISY), noisy_path)
        rc = main(["denoise", str(noisy_path), "--checkpoint", str(bad), "--out", str(tmp_path / "r.ngf")])
        assert rc == 2


class TestEvalCli:
    def test_eval_prints_and_writes_csv(self, tmp_path, capsys):
        suite = tmp_path / "suite"
        suite.mkdir()
        for i in range(2):
            save_pgm(piecewise_constant(12, 12, seed=i), suite / f"im{i}.pgm")
        ckpt = constant_net_checkpoint(tmp_path, a=0.0, b=0.5)
        out = tmp_path / "metrics.csv"
        rc = main(["eval", str(suite), "--checkpoint", str(ckpt), "--out", str(out), "--sigma", "25"])
        assert rc == 0
        msg = capsys.readouterr().out
        assert "im0.pgm" in msg and "im1.pgm" in msg
        assert "mean" in msg and "std" in msg and "over 2 images" in msg
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "image,psnr_db,mse"
        assert len(lines) == 3

    def test_sigma_from_stored_config(self, tmp_path):
        suite = tmp_path / "suite"
        suite.mkdir()
        save_pgm(piecewise_constant(10, 10, seed=0), suite / "im.pgm")
        weights = init_weights([8, 6, 2], "positive", seed=0)
        ckpt = tmp_path / "w.ckpt"
        save_checkpoint(ckpt, weights, TrainConfig(k=3, hidden=(6,), sigma_255=15.0))
        rc = main(["eval", str(suite), "--checkpoint", str(ckpt), "--out", str(tmp_path / "m.csv")])
        assert rc == 0

    def test_no_sigma_anywhere_exit_1(self, tmp_path):
        suite = tmp_path / "suite"
        suite.mkdir()
        save_pgm(piecewise_constant(10, 10, seed=0), suite / "im.pgm")
        ckpt = constant_net_checkpoint(tmp_path)  # saved without config
        rc = main(["eval", str(suite), "--checkpoint", str(ckpt), "--out", str(tmp_path / "m.csv")])
        assert rc == 1


class TestCheckLemma:
    def test_default_invocation_passes(self, capsys):
        rc = main(["check-lemma"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "empirical" in out and "closed form" in out

    def test_underpowered_n_warns(self, capsys):
        rc = main(["check-lemma", "--n-samples", "10"])
        captured = capsys.readouterr()
        assert "underpowered" in captured.err
        assert rc in (0, 3)  # 10 samples may legitimately land anywhere

    def test_explicit_point(self, capsys):
        rc = main(["check-lemma", "--x", "0.3", "--a", "1.0", "--b", "0.0", "--sigma", "10", "--n-samples", "200000"])
        assert rc == 0


class TestGradcheck:
    def test_default_passes(self, capsys):
        rc = main(["gradcheck"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "supervised" in out and "adaptive" in out

    def test_impossible_tolerance_exit_3(self, capsys):
        rc = main(["gradcheck", "--tol", "1e-12"])
        assert rc == 3
        assert "FAIL" in capsys.readouterr().err

    def test_custom_dims(self):
        assert main(["gradcheck", "--dims", "8,4,4,2", "--activation", "sigmoid"]) == 0


class TestUsageErrors:
    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == 1

    def test_missing_required_flag(self, capsys):
        assert main(["train", "x.pgm"]) == 1  # no --out

    def test_unknown_flag(self, capsys):
        assert main(["gradcheck", "--bogus", "1"]) == 1

    def test_error_goes_to_stderr(self, capsys):
        main(["train", "x.pgm"])
        captured = capsys.readouterr()
        assert "error:" in captured.err
        assert captured.out == ""
