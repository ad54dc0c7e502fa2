"""End-to-end exercise of the command line interface.

Everything runs in-process through main(argv) so exit codes and stdout
are observable without spawning interpreters.
"""
import json

import numpy as np
import pytest

from lthrm import io
from lthrm.cli import main


def run(*args: str) -> int:
    try:
        return main(list(args))
    except SystemExit as e:  # argparse usage errors
        return int(e.code)


class TestExitCodes:
    def test_no_arguments_prints_help(self, capsys):
        assert run() == 1
        assert "COMMAND" in capsys.readouterr().err

    def test_unknown_command(self, capsys):
        assert run("frobnicate") == 1

    def test_unknown_flag(self, tmp_path):
        assert run("synth", "--out", str(tmp_path / "r.mlm"),
                   "--annotations", str(tmp_path / "a.json"), "--bogus", "1") == 1

    def test_missing_required_flag(self):
        assert run("synth", "--annotations", "a.json") == 1

    def test_bad_config_is_usage_error(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"synt": {"n_swallows": 3}}))
        assert run("synth", "--config", str(cfg), "--out", str(tmp_path / "r.mlm"),
                   "--annotations", str(tmp_path / "a.json")) == 1

    def test_invalid_parameter_value(self, tmp_path):
        assert run("synth", "--out", str(tmp_path / "r.mlm"),
                   "--annotations", str(tmp_path / "a.json"),
                   "--duration-s", "10", "--n-swallows", "50") == 1

    def test_missing_input_file(self, tmp_path, capsys):
        assert run("preprocess", "--in", str(tmp_path / "none.mlm"),
                   "--out", str(tmp_path / "p.mlm")) == 2
        assert "error:" in capsys.readouterr().err

    def test_corrupt_recording(self, tmp_path):
        bad = tmp_path / "bad.mlm"
        bad.write_bytes(b"JUNKJUNKJUNKJUNKJUNKJUNK")
        assert run("preprocess", "--in", str(bad), "--out", str(tmp_path / "p.mlm")) == 2

    def test_mismatched_recording_ids(self, tmp_path):
        assert run("synth", "--out", str(tmp_path / "one.mlm"),
                   "--annotations", str(tmp_path / "one.json"),
                   "--duration-s", "60", "--n-swallows", "2") == 0
        assert run("synth", "--out", str(tmp_path / "two.mlm"),
                   "--annotations", str(tmp_path / "two.json"),
                   "--duration-s", "60", "--n-swallows", "2", "--seed", "9") == 0
        assert run("cluster", "--in", str(tmp_path / "one.mlm"),
                   "--annotations", str(tmp_path / "two.json"),
                   "--out", str(tmp_path / "c.json")) == 2

    def test_eval_requires_a_mode(self, tmp_path):
        assert run("eval", "--out", str(tmp_path / "m.json")) == 1


class TestSynthDeterminism:
    def test_same_seed_same_bytes(self, tmp_path):
        for name in ("a", "b"):
            assert run("synth", "--out", str(tmp_path / f"{name}.mlm"),
                       "--annotations", str(tmp_path / f"{name}.json"),
                       "--patient-id", "fixed", "--duration-s", "90",
                       "--n-swallows", "4", "--seed", "11") == 0
        assert (tmp_path / "a.mlm").read_bytes() == (tmp_path / "b.mlm").read_bytes()
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_seed_changes_recording(self, tmp_path):
        for name, seed in (("a", 1), ("b", 2)):
            assert run("synth", "--out", str(tmp_path / f"{name}.mlm"),
                       "--annotations", str(tmp_path / f"{name}.json"),
                       "--patient-id", "fixed", "--duration-s", "90",
                       "--n-swallows", "4", "--seed", str(seed)) == 0
        assert (tmp_path / "a.mlm").read_bytes() != (tmp_path / "b.mlm").read_bytes()


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """synth -> preprocess -> detect-baseline -> eval -> cluster -> report."""
    d = tmp_path_factory.mktemp("cli")
    (d / "prep").mkdir()  # same stem keeps the recording id stable
    prep = d / "prep" / "rec.mlm"
    steps = [
        ("synth", "--out", str(d / "rec.mlm"), "--annotations", str(d / "ann.json"),
         "--duration-s", "240", "--n-swallows", "10", "--noise-std", "0", "--seed", "5"),
        ("preprocess", "--in", str(d / "rec.mlm"), "--out", str(prep)),
        ("detect-baseline", "--in", str(prep), "--out", str(d / "det.json"),
         "--threshold", "142.8"),
        ("eval", "--annotations", str(d / "ann.json"), "--detections", str(d / "det.json"),
         "--d", "400", "--mode", "event_forward", "--out", str(d / "metrics.json")),
        ("cluster", "--in", str(prep), "--annotations", str(d / "ann.json"),
         "--out", str(d / "clusters.json"), "--k-max", "5"),
        ("report", "--clustering", str(d / "clusters.json"), "--in", str(prep),
         "--out", str(d / "report"), "--metrics", "baseline=" + str(d / "metrics.json"),
         "--annotations", str(d / "ann.json"), "--detections", str(d / "det.json")),
    ]
    for step in steps:
        code = run(*step)
        assert code == 0, f"{step[0]} exited {code}"
    return d


class TestPipeline:
    def test_preprocess_output_is_scaled(self, workdir):
        rec = io.read_recording(workdir / "prep" / "rec.mlm")
        assert rec.preprocessed
        assert rec.values.min() >= 0 and rec.values.max() <= 255

    def test_detections_found_and_scored(self, workdir):
        det = io.read_detections(workdir / "det.json")
        ann = io.read_annotations(workdir / "ann.json")
        assert det.method == "baseline"
        assert len(det.events) >= 8
        metrics = io.read_metrics(workdir / "metrics.json")
        assert metrics.tp + metrics.fn == len(ann)
        assert metrics.recall >= 0.9
        assert metrics.mode == "event_forward" and metrics.d == 400

    def test_detect_baseline_accepts_raw_input(self, workdir, tmp_path):
        out = tmp_path / "det_raw.json"
        assert run("detect-baseline", "--in", str(workdir / "rec.mlm"),
                   "--out", str(out), "--threshold", "142.8") == 0
        raw_route = io.read_detections(out)
        prep_route = io.read_detections(workdir / "det.json")
        assert list(raw_route.starts) == list(prep_route.starts)

    def test_cluster_assigns_every_swallow(self, workdir):
        result = io.read_clustering(workdir / "clusters.json")
        ann = io.read_annotations(workdir / "ann.json")
        assert len(result.swallow_ids) == len(ann)
        assert len(result.assignments) == len(result.swallow_ids)
        assert all(a in result.centroids for a in result.assignments)
        assert result.chosen_k <= 5

    def test_report_index_and_images(self, workdir):
        index = workdir / "report" / "index.html"
        assert index.exists()
        html = index.read_text()
        for png in (workdir / "report").glob("*.png"):
            assert png.name in html
        assert "metrics.txt" in {p.name for p in (workdir / "report").iterdir()}
        assert (workdir / "report" / "distance_histogram.png").exists()

    def test_report_is_reproducible(self, workdir, tmp_path):
        out = tmp_path / "report2"
        assert run("report", "--clustering", str(workdir / "clusters.json"),
                   "--in", str(workdir / "prep" / "rec.mlm"), "--out", str(out)) == 0
        first = (workdir / "report" / "index.html").read_text()
        assert (out / "index.html").exists()
        for png in out.glob("cluster_*.png"):
            twin = workdir / "report" / png.name
            assert twin.read_bytes() == png.read_bytes()
        assert first  # histogram/metrics only differ by inputs, clusters match


class TestConfigPrecedence:
    def test_config_supplies_defaults(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "seed": 3,
            "synth": {"duration_s": 120.0, "n_swallows": 3, "noise_std": 0.0},
        }))
        assert run("synth", "--config", str(cfg), "--out", str(tmp_path / "r.mlm"),
                   "--annotations", str(tmp_path / "a.json")) == 0
        assert len(io.read_annotations(tmp_path / "a.json")) == 3

    def test_flag_overrides_config(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"synth": {"duration_s": 120.0, "n_swallows": 3}}))
        assert run("synth", "--config", str(cfg), "--out", str(tmp_path / "r.mlm"),
                   "--annotations", str(tmp_path / "a.json"), "--n-swallows", "2") == 0
        assert len(io.read_annotations(tmp_path / "a.json")) == 2

    def test_seed_flag_overrides_config_seed(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "seed": 3,
            "synth": {"duration_s": 90.0, "n_swallows": 2, "noise_std": 0.0},
        }))
        args = ["--config", str(cfg), "--annotations", str(tmp_path / "a.json"),
                "--patient-id", "p"]
        assert run("synth", "--out", str(tmp_path / "c.mlm"), *args) == 0
        assert run("synth", "--out", str(tmp_path / "f.mlm"), *args, "--seed", "3") == 0
        assert run("synth", "--out", str(tmp_path / "g.mlm"), *args, "--seed", "4") == 0
        assert (tmp_path / "c.mlm").read_bytes() == (tmp_path / "f.mlm").read_bytes()
        assert (tmp_path / "c.mlm").read_bytes() != (tmp_path / "g.mlm").read_bytes()


class TestCrossValidationMode:
    def test_baseline_cv_two_recordings(self, tmp_path, capsys):
        pairs = []
        for i in range(2):
            rec = tmp_path / f"r{i}.mlm"
            ann = tmp_path / f"a{i}.json"
            assert run("synth", "--out", str(rec), "--annotations", str(ann),
                       "--duration-s", "120", "--n-swallows", "4",
                       "--noise-std", "0", "--seed", str(50 + i)) == 0
            pairs.append(f"{rec}:{ann}")
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"baseline": {"binarize_threshold": 142.8}}))
        out = tmp_path / "cv.json"
        assert run("eval", "--config", str(cfg), "--data", *pairs,
                   "--detector", "baseline", "--folds", "2",
                   "--d", "400", "--mode", "event_forward", "--out", str(out)) == 0
        report = io.read_metrics(out)
        assert report.tp + report.fn == 8
        assert len(report.per_fold) == 2
        assert "recall" in report.mean_std
        table = capsys.readouterr().out
        assert "baseline" in table and "Recall" in table

    def test_data_without_detector_is_usage_error(self, tmp_path):
        assert run("eval", "--data", "r.mlm:a.json", "--out", str(tmp_path / "m.json")) == 1


class TestTrainDetect:
    def test_train_and_detect_round_trip(self, tmp_path):
        rec = tmp_path / "r.mlm"
        ann = tmp_path / "a.json"
        assert run("synth", "--out", str(rec), "--annotations", str(ann),
                   "--duration-s", "180", "--n-swallows", "6",
                   "--noise-std", "0", "--seed", "77") == 0
        model = tmp_path / "m.mlw"
        assert run("train", "--data", f"{rec}:{ann}", "--out", str(model),
                   "--input-side", "16", "--epochs", "40", "--batch-size", "4",
                   "--learning-rate", "0.01") == 0
        det = tmp_path / "d.json"
        assert run("detect", "--model", str(model), "--in", str(rec),
                   "--out", str(det), "--stride", "25") == 0
        result = io.read_detections(det)
        assert result.method == "ml"
        truth = io.read_annotations(ann)
        if result.events:  # tiny model: presence is plausible, not guaranteed
            starts = np.asarray(result.starts)
            dists = np.abs(starts[:, None] - np.asarray(truth.starts)[None, :])
            assert dists.min() <= 800
