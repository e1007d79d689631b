import json

import numpy as np
import pytest

from oracles import argmax_scan
from supix import io as spio
from supix.cli import main
from supix.core import ImageRGB, LabelMask, SuperpixelPartition
from supix.metrics import evaluate


@pytest.fixture
def gray(tmp_path):
    path = tmp_path / "gray.png"
    spio.write_image(path, ImageRGB(np.full((8, 8, 3), 128, np.uint8)))
    return path


class TestSlic:
    def test_quadrants(self, tmp_path, gray, capsys):
        out = tmp_path / "part.png"
        assert main(["slic", "--image", str(gray), "--cluster-size", "4", "--out", str(out)]) == 0
        part = spio.read_partition(out)
        assert part.num_superpixels == 4
        assert part.assignments[:4, :4].tolist() == [[0] * 4] * 4
        assert "num_superpixels=4" in capsys.readouterr().out

    def test_missing_input(self, tmp_path, capsys):
        missing = tmp_path / "nope.png"
        assert main(["slic", "--image", str(missing), "--out", str(tmp_path / "p.png")]) == 2
        assert str(missing) in capsys.readouterr().err

    def test_unreadable_input(self, tmp_path):
        bad = tmp_path / "bad.png"
        bad.write_bytes(b"not a png")
        assert main(["slic", "--image", str(bad), "--out", str(tmp_path / "p.png")]) == 2

    def test_invalid_params(self, tmp_path, gray):
        assert main(["slic", "--image", str(gray), "--cluster-size", "1", "--out", str(tmp_path / "p.png")]) == 2

    def test_byte_identical_reruns(self, tmp_path, gray):
        for name in ("a", "b"):
            args = ["slic", "--image", str(gray), "--cluster-size", "3", "--out", str(tmp_path / f"{name}.png")]
            assert main(args + ["--overlay", str(tmp_path / f"{name}_ov.png")]) == 0
        for suffix in (".png", ".png.meta", "_ov.png"):
            a = tmp_path / f"a{suffix}"
            b = tmp_path / f"b{suffix}"
            assert spio.sha256_file(a) == spio.sha256_file(b)

    def test_output_write_failure_is_io_error(self, tmp_path, gray):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert main(["slic", "--image", str(gray), "--out", str(blocker / "p.png")]) == 3


class TestCam:
    def test_constant_features(self, tmp_path):
        spio.write_tensor(tmp_path / "f.spxt", np.ones((1, 1, 1)))
        spio.write_tensor(tmp_path / "w.spxt", np.array([[1.0], [2.0]]))
        out = tmp_path / "m.png"
        args = ["cam", "--features", str(tmp_path / "f.spxt"), "--weights", str(tmp_path / "w.spxt")]
        assert main(args + ["--width", "5", "--height", "3", "--out", str(out)]) == 0
        mask = spio.read_mask(out)
        assert mask.shape == (3, 5) and (mask.labels == 1).all() and mask.num_classes == 2

    def test_mismatched_weights(self, tmp_path):
        spio.write_tensor(tmp_path / "f.spxt", np.ones((2, 2, 2)))
        spio.write_tensor(tmp_path / "w.spxt", np.ones((3, 4)))
        args = ["cam", "--features", str(tmp_path / "f.spxt"), "--weights", str(tmp_path / "w.spxt")]
        assert main(args + ["--width", "2", "--height", "2", "--out", str(tmp_path / "m.png")]) == 2

    def test_two_by_two_against_scan(self, tmp_path, rng):
        feats = rng.normal(size=(3, 2, 2)).astype(np.float32)
        w = rng.normal(size=(4, 3)).astype(np.float32)
        spio.write_tensor(tmp_path / "f.spxt", feats)
        spio.write_tensor(tmp_path / "w.spxt", w)
        args = ["cam", "--features", str(tmp_path / "f.spxt"), "--weights", str(tmp_path / "w.spxt")]
        args += ["--width", "2", "--height", "2", "--out", str(tmp_path / "m.png"), "--scores", str(tmp_path / "s.spxt")]
        assert main(args) == 0
        scores = np.einsum("ck,kij->cij", w.astype(float), feats.astype(float))
        assert spio.read_mask(tmp_path / "m.png").labels.tolist() == argmax_scan(scores.tolist())
        np.testing.assert_allclose(spio.read_tensor(tmp_path / "s.spxt"), scores, rtol=1e-6)

    def test_several_depths(self, tmp_path, rng):
        for i in (1, 2):
            spio.write_tensor(tmp_path / f"f{i}.spxt", rng.normal(size=(2, 2, 2)))
        spio.write_tensor(tmp_path / "w.spxt", rng.normal(size=(3, 2)))
        args = ["cam", "--features", str(tmp_path / "f1.spxt"), str(tmp_path / "f2.spxt")]
        args += ["--weights", str(tmp_path / "w.spxt"), "--width", "4", "--height", "4", "--out", str(tmp_path / "m.png")]
        assert main(args) == 0
        assert (tmp_path / "m-1.png").exists() and (tmp_path / "m-2.png").exists()


class TestRefine:
    def _write(self, tmp_path, labels, ids):
        spio.write_mask(tmp_path / "mask.png", LabelMask(np.array(labels), 2))
        spio.write_partition(tmp_path / "part.png", SuperpixelPartition(np.array(ids)))

    def _run(self, tmp_path, tau):
        out = tmp_path / f"out_{tau}.png"
        args = ["refine", "--mask", str(tmp_path / "mask.png"), "--partition", str(tmp_path / "part.png")]
        assert main(args + ["--tau", str(tau), "--out", str(out)]) == 0
        return out

    def test_constant_per_superpixel(self, tmp_path):
        self._write(tmp_path, [[0, 1], [0, 1]], [[0, 1], [0, 1]])
        out = self._run(tmp_path, 0.5)
        assert out.read_bytes() == (tmp_path / "mask.png").read_bytes()

    def test_one_superpixel(self, tmp_path):
        self._write(tmp_path, [[0, 0], [0, 1]], [[0, 0], [0, 0]])
        assert spio.read_mask(self._run(tmp_path, 0.5)).labels.tolist() == [[0, 0], [0, 0]]

    def test_tau_one_identity(self, tmp_path):
        self._write(tmp_path, [[0, 0], [0, 1]], [[0, 0], [0, 0]])
        assert self._run(tmp_path, 1.0).read_bytes() == (tmp_path / "mask.png").read_bytes()

    def test_bad_tau(self, tmp_path):
        self._write(tmp_path, [[0]], [[0]])
        args = ["refine", "--mask", str(tmp_path / "mask.png"), "--partition", str(tmp_path / "part.png")]
        assert main(args + ["--tau", "0", "--out", str(tmp_path / "o.png")]) == 2


class TestEval:
    def test_perfect(self, tmp_path, capsys):
        spio.write_mask(tmp_path / "a.png", LabelMask(np.array([[0, 1], [2, 1]]), 3))
        assert main(["eval", "--pred", str(tmp_path / "a.png"), "--gt", str(tmp_path / "a.png")]) == 0
        assert "miou=1.000000" in capsys.readouterr().out

    def test_disjoint(self, tmp_path, capsys):
        spio.write_mask(tmp_path / "p.png", LabelMask(np.zeros((2, 2), int), 2))
        spio.write_mask(tmp_path / "g.png", LabelMask(np.ones((2, 2), int), 2))
        assert main(["eval", "--pred", str(tmp_path / "p.png"), "--gt", str(tmp_path / "g.png")]) == 0
        out = capsys.readouterr().out
        assert "iou.0=0.000000" in out and "iou.1=0.000000" in out

    def test_fixture_matches_metrics_module(self, tmp_path, rng, capsys):
        pred = LabelMask(rng.integers(0, 4, (16, 16)), 4)
        gt = LabelMask(rng.integers(0, 4, (16, 16)), 4)
        spio.write_mask(tmp_path / "p.png", pred)
        spio.write_mask(tmp_path / "g.png", gt)
        js = tmp_path / "r.json"
        assert main(["eval", "--pred", str(tmp_path / "p.png"), "--gt", str(tmp_path / "g.png"), "--json", str(js)]) == 0
        assert capsys.readouterr().out == evaluate(pred, gt).to_text()
        assert json.loads(js.read_text()) == evaluate(pred, gt).to_dict()


class TestPipeline:
    @pytest.fixture
    def fixture_dir(self, tmp_path):
        assert main(["synth", "--width", "64", "--height", "64", "--seed", "3", "--out-dir", str(tmp_path / "fx")]) == 0
        return tmp_path / "fx"

    def test_end_to_end(self, fixture_dir, capsys):
        assert main(["pipeline", "--config", str(fixture_dir / "pipeline.cfg")]) == 0
        report = json.loads((fixture_dir / "out" / "report.json").read_text())
        m = report["metrics"]
        assert m["refined"]["miou"] >= m["unrefined"]["miou"]
        assert report["loss"] > 0
        assert sorted(p.name for p in (fixture_dir / "out").iterdir()) == ["manifest.json", "refined.png", "report.json"]
        assert "miou_refined=" in capsys.readouterr().out

    def test_manifest_self_consistent_and_deterministic(self, fixture_dir):
        cfg = fixture_dir / "pipeline.cfg"
        cfg.write_text(cfg.read_text().replace("emit_intermediates = false", "emit_intermediates = true"))
        assert main(["pipeline", "--config", str(cfg)]) == 0
        out = fixture_dir / "out"
        manifest = json.loads((out / "manifest.json").read_text())
        names = [e["path"] for e in manifest["files"]]
        assert {"partition.png", "partition.png.meta", "prediction.png", "overlay.png"} <= set(names)
        for entry in manifest["files"]:
            assert spio.sha256_file(out / entry["path"]) == entry["sha256"]
        first = (out / "manifest.json").read_bytes()
        assert main(["pipeline", "--config", str(cfg)]) == 0
        assert (out / "manifest.json").read_bytes() == first

    def test_missing_lambda_fails_before_work(self, fixture_dir):
        cfg = fixture_dir / "pipeline.cfg"
        cfg.write_text(cfg.read_text().replace("loss.lambda2 = 1\n", ""))
        assert main(["pipeline", "--config", str(cfg)]) == 2
        assert not (fixture_dir / "out").exists()

    def test_jobs_keep_input_order(self, tmp_path, capsys):
        cfgs = []
        for seed in (1, 2):
            d = tmp_path / f"s{seed}"
            assert main(["synth", "--width", "32", "--height", "32", "--seed", str(seed), "--out-dir", str(d)]) == 0
            cfgs.append(str(d / "pipeline.cfg"))
        capsys.readouterr()
        assert main(["pipeline", "--config", *cfgs, "--jobs", "2"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert [line.split()[0] for line in lines] == [f"output={tmp_path / 's1' / 'out'}", f"output={tmp_path / 's2' / 'out'}"]

    def test_cam_inputs(self, tmp_path, rng):
        spio.write_image(tmp_path / "img.png", ImageRGB(rng.integers(0, 255, (16, 16, 3)).astype(np.uint8)))
        for i in (1, 2, 3):
            spio.write_tensor(tmp_path / f"f{i}.spxt", rng.normal(size=(4, 4 * i, 4 * i)))
        spio.write_tensor(tmp_path / "w.spxt", rng.normal(size=(3, 4)))
        raw = rng.random((3, 16, 16)) + 0.1
        spio.write_tensor(tmp_path / "prob.spxt", raw / raw.sum(axis=0))
        (tmp_path / "c.cfg").write_text(
            "input.image = img.png\n"
            "input.features = f1.spxt, f2.spxt, f3.spxt\n"
            "input.weights = w.spxt\n"
            "input.probability = prob.spxt\n"
            "slic.cluster_size = 4\n"
            "loss.lambda1 = 0.5\nloss.lambda2 = 0.3\nloss.lambda3 = 0.2\n"
            "output.dir = res\n"
        )
        assert main(["pipeline", "--config", str(tmp_path / "c.cfg")]) == 0
        report = json.loads((tmp_path / "res" / "report.json").read_text())
        assert report["loss"] > 0 and report["lambdas"] == [0.5, 0.3, 0.2]
