from unittest.mock import patch

import numpy as np
import pytest
from PIL import Image

from src.analysis.evaluation import (
    GENERALIZATION_COLUMNS,
    RandomPolicy,
    evaluate,
    generalization_eval,
    random_policy_baseline,
)
from src.errors import InvalidArgumentError
from src.pixelenv import EnvConfig, load_frame_directory

CONFIG = EnvConfig(image_size=32, action_repeat=2, episode_length=20)


def still(obs):
    return np.zeros(2)


def test_evaluate_is_reproducible():
    a = evaluate(still, CONFIG, 3, seed=5)
    b = evaluate(still, CONFIG, 3, seed=5)
    assert a == b
    assert len(a.returns) == 3
    assert a.mean == pytest.approx(np.mean(a.returns))
    assert a.std == pytest.approx(np.std(a.returns))


def test_returns_are_bounded_by_episode_length():
    result = evaluate(still, CONFIG, 2, seed=0)
    # Per-raw-step reward lies in (0, 1].
    assert all(0.0 < r <= CONFIG.episode_length for r in result.returns)


def test_evaluate_needs_an_episode():
    with pytest.raises(InvalidArgumentError):
        evaluate(still, CONFIG, 0, seed=0)


def test_random_policy_is_seeded():
    a, b = RandomPolicy(2, 3), RandomPolicy(2, 3)
    for _ in range(5):
        action = a(None)
        np.testing.assert_array_equal(action, b(None))
        assert np.all(np.abs(action) <= 1.0)


def test_random_policy_baseline_is_stable():
    a = random_policy_baseline(CONFIG, episodes=4, seed=1)
    b = random_policy_baseline(CONFIG, episodes=4, seed=1)
    assert a.mean == b.mean
    assert a.mean > 0.0


def test_generalization_same_background_has_no_gap():
    row = generalization_eval(still, CONFIG, "default", "default", 2, seed=0)
    assert list(row.columns) == GENERALIZATION_COLUMNS
    assert row["gap"].iloc[0] == 0.0


def test_generalization_gap_is_train_minus_test():
    row = generalization_eval(still, CONFIG, "default", "textured_video", 2, seed=0)
    train = evaluate(still, CONFIG, 2, seed=0, background="default")
    test = evaluate(still, CONFIG, 2, seed=0, background="textured_video")
    assert row["train_mean"].iloc[0] == pytest.approx(train.mean)
    assert row["mean"].iloc[0] == pytest.approx(test.mean)
    assert row["std"].iloc[0] == pytest.approx(test.std)
    assert row["gap"].iloc[0] == pytest.approx(train.mean - test.mean)


def test_generalization_row_carries_both_means():
    row = generalization_eval(still, CONFIG, "default", "simple_distractor", 2, seed=4)
    assert row["gap"].iloc[0] == pytest.approx(row["train_mean"].iloc[0] - row["mean"].iloc[0])


def test_frame_directory_is_decoded_once_per_evaluation(tmp_path):
    for i in range(3):
        Image.new("RGB", (8, 8), (40 * i, 80, 120)).save(tmp_path / f"{i:02d}.png")
    config = EnvConfig(
        image_size=32, action_repeat=2, episode_length=20, background="frame_directory", frame_dir=str(tmp_path)
    )

    with patch("src.pixelenv.load_frame_directory", wraps=load_frame_directory) as mock_load:
        result = evaluate(still, config, 3, seed=0)

    assert mock_load.call_count == 1
    assert len(result.returns) == 3
