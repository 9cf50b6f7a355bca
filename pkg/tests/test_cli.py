"""End-to-end CLI runs over the binary formats, plus exit-code contracts."""

import subprocess
import sys

import numpy as np
import pytest

from hsiseg import nn
from hsiseg.architectures import build, init_weights
from hsiseg.cli import infer_cube, main
from hsiseg.cube import HsiCube, load_cube, load_labels, save_cube, save_labels
from hsiseg.weightio import save_weights

from conftest import separable_spectra


def _labeled_cube(height, width, channels, seed):
    """Cube whose pixels follow the three separable class templates by region."""
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, 1.0, channels)
    templates = np.stack([1.0 - t, np.exp(-((t - 0.5) ** 2) / 0.02), t])
    labels = np.zeros((height, width), dtype=np.uint8)
    labels[:, width // 3 : 2 * width // 3] = 1
    labels[:, 2 * width // 3 :] = 2
    values = templates[labels] + 0.05 * rng.normal(size=(height, width, channels))
    return HsiCube(values.astype(np.float32)), labels


def _write_pair(directory, stem, cube, labels):
    save_cube(cube, directory / f"{stem}.hsc")
    save_labels(labels, directory / f"{stem}.lbl")


@pytest.fixture
def train_setup(tmp_path):
    train_dir = tmp_path / "train"
    train_dir.mkdir()
    for i in range(2):
        cube, labels = _labeled_cube(12, 18, 24, seed=i)
        _write_pair(train_dir, f"img{i}", cube, labels)
    config = tmp_path / "train.cfg"
    config.write_text(
        "arch=1d-justo-hunet\nchannels=24\nclasses=3\n"
        "epochs=2\nbatch=32\nseed=0\n"
    )
    return tmp_path, train_dir, config


class TestBands:
    def test_planted_dead_channels_flagged(self, tmp_path):
        cube_dir = tmp_path / "cubes"
        cube_dir.mkdir()
        rng = np.random.default_rng(0)
        values = rng.uniform(1.0, 2.0, size=(6, 6, 120)).astype(np.float32)
        values[:, :, :4] = 0.0  # four dead channels
        save_cube(HsiCube(values), cube_dir / "a.hsc")
        out_dir = tmp_path / "out"
        code = main([
            "bands", "--cube-dir", str(cube_dir), "--out-dir", str(out_dir),
            "--contamination", "0.08", "--seed", "0",
        ])
        assert code == 0
        drop = (out_dir / "drop_list.txt").read_text().strip().split(",")
        assert len(drop) == 10  # ceil(0.08 * 120)
        assert {"0", "1", "2", "3"} <= set(drop)
        report = (out_dir / "channel_report.csv").read_text().splitlines()
        assert report[0] == "channel,wavelength,std,flagged"
        assert len(report) == 121

    def test_missing_directory_exit_2(self, tmp_path):
        code = main([
            "bands", "--cube-dir", str(tmp_path / "nope"), "--out-dir", str(tmp_path / "o"),
        ])
        assert code == 2


class TestTrain:
    def test_training_produces_weights_and_history(self, train_setup):
        tmp_path, train_dir, config = train_setup
        out = tmp_path / "model.jwb"
        code = main([
            "train", "--config", str(config), "--train-dir", str(train_dir),
            "--out", str(out), "--norm-stats-out", str(tmp_path / "norm.csv"),
        ])
        assert code == 0
        assert out.exists()
        history = out.with_suffix(".history.csv").read_text().splitlines()
        assert history[0] == "epoch,loss,train_acc,val_acc"
        assert len(history) == 3

    def test_deterministic_weight_files(self, train_setup):
        tmp_path, train_dir, config = train_setup
        outs = []
        for name in ("a.jwb", "b.jwb"):
            path = tmp_path / name
            assert main([
                "train", "--config", str(config), "--train-dir", str(train_dir),
                "--out", str(path),
            ]) == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]

    def test_infeasible_channels_exit_1(self, train_setup):
        tmp_path, train_dir, _ = train_setup
        config = tmp_path / "bad.cfg"
        config.write_text("arch=1d-justo-liunet\nchannels=3\nclasses=3\nepochs=1\nbatch=8\n")
        code = main([
            "train", "--config", str(config), "--train-dir", str(train_dir),
            "--out", str(tmp_path / "m.jwb"),
        ])
        assert code == 1


class TestInfer:
    def _zero_weight_file(self, tmp_path, arch="1d-justo-hunet", channels=24):
        spec = build(arch, channels, 3)
        weights = init_weights(spec, seed=0)
        for name in weights.names():
            if name.endswith((".kernel", ".weight", ".bias", ".beta")):
                weights[name] = np.zeros_like(weights[name])
        path = tmp_path / "zero.jwb"
        save_weights(spec, weights, path)
        return path

    def test_zero_weights_give_class_zero_everywhere(self, tmp_path):
        wpath = self._zero_weight_file(tmp_path)
        cube, _ = _labeled_cube(6, 9, 24, seed=1)
        save_cube(cube, tmp_path / "c.hsc")
        out = tmp_path / "pred.lbl"
        assert main(["infer", "--weights", str(wpath), "--cube", str(tmp_path / "c.hsc"),
                     "--out", str(out)]) == 0
        pred = load_labels(out)
        assert pred.shape == (6, 9)
        assert np.all(pred == 0)

    def test_output_dims_match_input_both_paths(self, tmp_path):
        for arch, channels in (("1d-justo-hunet", 24), ("2d-justo-unet-simple", 4)):
            spec = build(arch, channels, 3)
            weights = init_weights(spec, seed=2)
            wpath = tmp_path / f"{arch}.jwb"
            save_weights(spec, weights, wpath)
            cube, _ = _labeled_cube(10, 13, channels, seed=3)
            cpath = tmp_path / f"{arch}.hsc"
            save_cube(cube, cpath)
            out = tmp_path / f"{arch}.lbl"
            assert main(["infer", "--weights", str(wpath), "--cube", str(cpath),
                         "--out", str(out)]) == 0
            assert load_labels(out).shape == (10, 13)

    def test_1d_path_equals_per_pixel_loop(self, tmp_path):
        spec = build("1d-justo-hunet", 24, 3)
        weights = init_weights(spec, seed=4)
        cube, _ = _labeled_cube(5, 7, 24, seed=5)
        labels, probs = infer_cube(spec, weights, cube)
        for r in range(5):
            for c in range(7):
                single = nn.forward(spec, weights, cube.values[r, c].astype(np.float32))
                assert labels[r, c] == single.argmax()
                np.testing.assert_allclose(probs[r, c], single, atol=1e-6)

    def test_probs_out_is_valid_cube(self, tmp_path):
        wpath = self._zero_weight_file(tmp_path)
        cube, _ = _labeled_cube(4, 6, 24, seed=6)
        save_cube(cube, tmp_path / "c.hsc")
        probs_path = tmp_path / "probs.hsc"
        assert main(["infer", "--weights", str(wpath), "--cube", str(tmp_path / "c.hsc"),
                     "--out", str(tmp_path / "p.lbl"), "--probs-out", str(probs_path)]) == 0
        probs = load_cube(probs_path)
        assert probs.values.shape == (4, 6, 3)
        np.testing.assert_allclose(probs.values.sum(axis=2), 1.0, atol=1e-5)

    def test_channel_mismatch_exit_1(self, tmp_path):
        wpath = self._zero_weight_file(tmp_path, channels=24)
        cube, _ = _labeled_cube(4, 4, 10, seed=7)
        save_cube(cube, tmp_path / "c.hsc")
        assert main(["infer", "--weights", str(wpath), "--cube", str(tmp_path / "c.hsc"),
                     "--out", str(tmp_path / "p.lbl")]) == 1

    def test_deterministic_across_runs(self, tmp_path):
        spec = build("2d-justo-unet-simple", 4, 3)
        weights = init_weights(spec, seed=8)
        wpath = tmp_path / "m.jwb"
        save_weights(spec, weights, wpath)
        cube, _ = _labeled_cube(9, 11, 4, seed=9)
        save_cube(cube, tmp_path / "c.hsc")
        outs = []
        for name in ("r1.lbl", "r2.lbl"):
            assert main(["infer", "--weights", str(wpath), "--cube", str(tmp_path / "c.hsc"),
                         "--out", str(tmp_path / name)]) == 0
            outs.append((tmp_path / name).read_bytes())
        assert outs[0] == outs[1]


class TestEvalRankBench:
    def test_eval_perfect_prediction(self, tmp_path, capsys):
        _, labels = _labeled_cube(6, 9, 4, seed=10)
        save_labels(labels, tmp_path / "a.lbl")
        save_labels(labels, tmp_path / "b.lbl")
        assert main(["eval", "--pred", str(tmp_path / "a.lbl"),
                     "--truth", str(tmp_path / "b.lbl")]) == 0
        out = capsys.readouterr().out
        assert "average_accuracy,all,1.000000" in out

    def test_rank_queues_and_actions(self, tmp_path):
        labels_dir = tmp_path / "maps"
        labels_dir.mkdir()
        for name, cloud_rows in (("A", 9), ("B", 1), ("C", 5)):
            labels = np.zeros((10, 10), dtype=np.uint8)
            labels[:cloud_rows] = 2
            save_labels(labels, labels_dir / f"{name}.lbl")
        config = tmp_path / "r.cfg"
        config.write_text("th_cl=0.5\nth_sea=0.5\nth_land=0.5\n")
        out_dir = tmp_path / "ranked"
        assert main(["rank", "--labels-dir", str(labels_dir), "--config", str(config),
                     "--out-dir", str(out_dir)]) == 0
        queues = (out_dir / "queues.csv").read_text().splitlines()
        cloud_rows_out = [ln for ln in queues if ",cloud-asc," in ln]
        assert [ln.split(",")[1] for ln in cloud_rows_out] == ["B", "C", "A"]
        actions = (out_dir / "actions.csv").read_text()
        assert "A,cloud,discard" in actions
        assert "B,sea,downlink-priority" in actions

    def test_bench_structure(self, tmp_path, capsys):
        spec = build("1d-justo-hunet", 24, 3)
        save_weights(spec, init_weights(spec, seed=0), tmp_path / "m.jwb")
        cube, _ = _labeled_cube(6, 6, 24, seed=11)
        save_cube(cube, tmp_path / "c.hsc")
        assert main(["bench", "--weights", str(tmp_path / "m.jwb"),
                     "--cube", str(tmp_path / "c.hsc"), "--repeats", "5"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "repeat,ms"
        times = [float(ln.split(",")[1]) for ln in lines[1:6]]
        assert len(times) == 5 and all(t > 0 for t in times)
        assert lines[6].startswith("mean,")
        assert float(lines[6].split(",")[1]) == pytest.approx(np.mean(times), abs=2e-3)

    def test_export_info_lists_records(self, tmp_path, capsys):
        spec = build("1d-justo-liunet", 112, 3)
        save_weights(spec, init_weights(spec, seed=0), tmp_path / "m.jwb")
        assert main(["export-info", "--weights", str(tmp_path / "m.jwb")]) == 0
        out = capsys.readouterr().out
        assert "architecture: 1d-justo-liunet" in out
        assert "total values: 4563" in out


class TestEntryPoint:
    def test_module_invocation(self, tmp_path):
        spec = build("1d-justo-hunet", 24, 3)
        save_weights(spec, init_weights(spec, seed=0), tmp_path / "m.jwb")
        proc = subprocess.run(
            [sys.executable, "-m", "hsiseg.cli", "export-info", "--weights", str(tmp_path / "m.jwb")],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert "1d-justo-hunet" in proc.stdout

    def test_usage_error_exit_2(self):
        proc = subprocess.run(
            [sys.executable, "-m", "hsiseg.cli", "train", "--bogus"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 2
