import numpy as np
import pytest

from streamstop.core import argmax_string, from_plain_string
from streamstop.metrics import rho
from streamstop.simulation import (
    DatasetSpec,
    NoiseModel,
    mean_frame_distance,
    simulate_clip,
    simulate_dataset,
    simulate_frame,
)


def test_zero_noise_frames_equal_truth():
    nm = NoiseModel(substitution_rate=0.0)
    clip = simulate_clip("ABC123", 30, nm)
    assert len(clip.frames) == 30
    assert all(f == from_plain_string("ABC123") for f in clip.frames)


def test_single_frame_clip():
    clip = simulate_clip("AB", 1, NoiseModel())
    assert len(clip.frames) == 1


def test_certain_substitution_at_low_temperature_is_one_hot_and_wrong():
    nm = NoiseModel(substitution_rate=1.0, confusion_temperature=1e-4)
    frame = simulate_frame("ABCDEFG", nm, np.random.default_rng(0))
    assert len(frame) == 7
    for ch, row in zip("ABCDEFG", frame):
        assert len(row.entries) == 1
        assert row.top_label != ch


def test_substituted_row_keeps_truth_as_strongest_alternate():
    nm = NoiseModel(substitution_rate=1.0)
    frame = simulate_frame("ABCDEFGHIJ", nm, np.random.default_rng(3))
    for ch, row in zip("ABCDEFGHIJ", frame):
        assert row.top_label != ch
        assert row.entries[1][0] == ch
        assert row.top_weight > 0.5


def test_same_seed_same_clip():
    nm = NoiseModel(substitution_rate=0.3, insertion_rate=0.05, deletion_rate=0.05, seed=17, soften_rate=0.3)
    assert simulate_clip("HELLO42", 10, nm) == simulate_clip("HELLO42", 10, nm)
    assert simulate_clip("HELLO42", 10, nm) != simulate_clip("HELLO42", 10, nm.with_seed(18))


def test_frames_do_not_depend_on_clip_length():
    nm = NoiseModel(substitution_rate=0.3, seed=5)
    short = simulate_clip("WORD", 3, nm)
    long = simulate_clip("WORD", 12, nm)
    assert long.frames[:3] == short.frames


def test_confusion_table_is_used():
    nm = NoiseModel(substitution_rate=1.0, alphabet="AB8", confusion={"B": {"8": 1.0}})
    for i in range(20):
        frame = simulate_frame("B", nm, np.random.default_rng(i))
        assert frame[0].top_label == "8"


def test_insertion_and_deletion_change_length():
    rng = np.random.default_rng(0)
    assert len(simulate_frame("ABCD", NoiseModel(substitution_rate=0.0, deletion_rate=1.0), rng)) == 0
    frame = simulate_frame("ABCD", NoiseModel(substitution_rate=0.0, insertion_rate=1.0), rng)
    assert len(frame) == 8
    assert argmax_string(frame)[::2] == "ABCD"


def test_distance_to_truth_grows_with_substitution_rate():
    means = []
    for rate in (0.0, 0.1, 0.2, 0.3, 0.5):
        spec = DatasetSpec(n_clips=40, n_frames=5, substitution_rates=(rate,), seed=1)
        means.append(mean_frame_distance(simulate_dataset(spec)))
    assert means[0] == 0.0
    assert means == sorted(means)


def test_dataset_shape_and_determinism():
    spec = DatasetSpec(n_clips=12, n_frames=4, min_length=4, max_length=15, seed=9)
    a = simulate_dataset(spec)
    assert a == simulate_dataset(spec)
    assert len(a) == 12 and len({c.clip_id for c in a}) == 12
    for clip in a:
        assert 4 <= len(clip.ground_truth) <= 15
        assert len(clip.frames) == 4
        assert clip.metadata["substitution_rate"] in spec.substitution_rates


def test_clip_distance_is_bounded():
    nm = NoiseModel(substitution_rate=0.5, insertion_rate=0.1, deletion_rate=0.1, soften_rate=0.5, seed=2)
    clip = simulate_clip("ABCDEF", 20, nm)
    truth = from_plain_string(clip.ground_truth)
    assert all(0.0 <= rho(x, truth) <= 1.0 for x in clip.frames)


@pytest.mark.parametrize("kwargs", [
    {"substitution_rate": 1.5},
    {"deletion_rate": -0.1},
    {"confusion_temperature": 0.0},
    {"alphabet": ""},
    {"alphabet": "AA"},
])
def test_invalid_noise_model(kwargs):
    with pytest.raises(ValueError):
        NoiseModel(**kwargs)


def test_truth_outside_alphabet_rejected():
    with pytest.raises(ValueError):
        simulate_clip("abc", 3, NoiseModel())
