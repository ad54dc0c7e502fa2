"""Synthetic recording generator: determinism and signal invariants."""
import numpy as np
import pytest

from lthrm.errors import InvalidParameterError
from lthrm.synth import TEMPLATES, SynthConfig, generate_recording


def make(seed: int = 0, **kw) -> SynthConfig:
    base = dict(duration_s=120.0, n_swallows=5, min_gap_s=12.0, noise_std=5.0)
    base.update(kw)
    return SynthConfig(rng_seed=seed, patient_id="syn", **base)


class TestDeterminism:
    def test_same_seed_bit_identical(self):
        r1, a1 = generate_recording(make(seed=3))
        r2, a2 = generate_recording(make(seed=3))
        np.testing.assert_array_equal(r1.values, r2.values)
        np.testing.assert_array_equal(a1.starts, a2.starts)

    def test_different_seed_differs(self):
        r1, _ = generate_recording(make(seed=3))
        r2, _ = generate_recording(make(seed=4))
        assert not np.array_equal(r1.values, r2.values)


class TestStructure:
    def test_shape_and_rate(self):
        rec, ann = generate_recording(make())
        assert rec.sensors == 36
        assert rec.samples == 6000
        assert rec.sample_rate == 50.0
        assert not rec.preprocessed
        assert ann.recording_id == "syn"

    def test_annotation_count_and_gaps(self):
        for seed in range(8):
            cfg = make(seed=seed, duration_s=600.0, n_swallows=20)
            rec, ann = generate_recording(cfg)
            assert len(ann) == 20
            gaps = np.diff(ann.starts)
            assert gaps.min() >= int(cfg.min_gap_s * cfg.sample_rate)
            assert ann.starts.min() >= 0
            assert ann.starts.max() < rec.samples

    def test_no_swallows_noise_free_is_flat_baseline(self):
        rec, ann = generate_recording(make(n_swallows=0, noise_std=0.0))
        assert len(ann) == 0
        np.testing.assert_allclose(rec.values, 10.0, atol=1e-6)

    def test_noise_level(self):
        rec, _ = generate_recording(make(n_swallows=0, noise_std=5.0, duration_s=600.0))
        assert abs(float(np.asarray(rec.values, np.float64).std()) - 5.0) < 0.25


class TestSwallowShape:
    def test_each_swallow_pressurizes_many_sensors(self):
        # detectability floor: a swallow must push well past resting
        # pressure on a band of sensors inside its annotated window
        rec, ann = generate_recording(make(seed=9, duration_s=600.0, n_swallows=15, noise_std=0.0))
        values = np.asarray(rec.values, np.float64)
        for y in ann.starts:
            window = values[:, y : y + 500]
            assert (window.max(axis=1) > 90.0).sum() >= 10

    def test_quiet_between_swallows(self):
        rec, ann = generate_recording(make(seed=2, n_swallows=2, duration_s=300.0, noise_std=0.0))
        values = np.asarray(rec.values, np.float64)
        mid = (ann.starts[0] + 500 + ann.starts[1]) // 2
        assert values[:, mid - 5 : mid + 5].max() < 60.0

    def test_single_template_mix(self):
        cfg = SynthConfig(
            duration_s=120.0,
            n_swallows=3,
            noise_std=0.0,
            morphology_mix=(("rapid", 1.0),),
            rng_seed=1,
            patient_id="syn",
        )
        rec, ann = generate_recording(cfg)
        assert len(ann) == 3
        assert float(np.asarray(rec.values, np.float64).max()) > 100.0


class TestValidation:
    def test_infeasible_gap_rejected(self):
        with pytest.raises(InvalidParameterError):
            make(duration_s=30.0, n_swallows=10, min_gap_s=12.0)

    def test_unknown_template_rejected(self):
        with pytest.raises(InvalidParameterError, match="unknown template"):
            SynthConfig(duration_s=60.0, n_swallows=1, morphology_mix=(("spiral", 1.0),))

    def test_known_templates(self):
        assert set(TEMPLATES) == {"normal", "rapid", "weak"}
        for t in TEMPLATES.values():
            assert t.amplitudes.shape == (36,)

    def test_negative_noise_rejected(self):
        with pytest.raises(InvalidParameterError):
            make(noise_std=-1.0)
