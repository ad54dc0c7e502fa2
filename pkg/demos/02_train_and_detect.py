"""Train the window classifier on synthetic data and run sliding-window detection.

Kept deliberately small (3 recordings, side 32, stride 10) so it finishes
in under a minute on one core; see tests/test_acceptance.py criterion 05
for the full-scale cross-validated run.
"""
import time

from lthrm import (
    MatchConfig,
    SynthConfig,
    TrainingConfig,
    collect_training_windows,
    detect_ml,
    generate_recording,
    preprocess_recording,
    score_detections,
)

pairs = []
for i in range(3):
    rec, ann = generate_recording(
        SynthConfig(duration_s=600.0, n_swallows=15, noise_std=5.0, rng_seed=30 + i,
                    patient_id=f"train{i}")
    )
    pairs.append((rec, ann))

held_out, held_truth = generate_recording(
    SynthConfig(duration_s=600.0, n_swallows=15, noise_std=5.0, rng_seed=99, patient_id="held")
)

windows, stats = collect_training_windows(pairs)
n_pos = sum(s.positives for s in stats)
n_neg = sum(s.negatives for s in stats)
print(f"training windows: {n_pos} positive, {n_neg} negative")

# ~90 windows per epoch at batch 8 is ~11 steps; the loss needs a few
# hundred steps to move, hence the high epoch count
cfg = TrainingConfig(learning_rate=2e-2, batch_size=8, epochs=60, seed=0, input_side=32)
t0 = time.perf_counter()
from lthrm import train_classifier

model = train_classifier(windows, cfg)
print(f"trained in {time.perf_counter() - t0:.1f}s, "
      f"epoch loss {model.epoch_losses[0]:.3f} -> {model.epoch_losses[-1]:.3f}")

# coarser strides stretch the trailing score smoothing over more samples
# and bias starts early; 10 keeps localization inside +-200
result = detect_ml(model, preprocess_recording(held_out), stride=10)
print(f"\ndetected {len(result.events)} events on the held-out recording")
for e in result.events[:5]:
    print(f"  start {e.start:6d}  confidence {e.confidence:.3f}")
if len(result.events) > 5:
    print(f"  ... {len(result.events) - 5} more")

report = score_detections(held_truth.starts, result.starts, MatchConfig(d=400))
print(f"\nd=400 start_centered: precision {report.precision:.2f}  recall {report.recall:.2f}")
