import math
from unittest.mock import patch

import numpy as np
import pandas as pd
import pytest
import torch

from src.agents import ReplayBuffer, Transition
from src.analysis import trainer
from src.analysis.trainer import build_learner, load_run, read_metrics, train, train_seeds, update_step
from src.checkpoint import CHECKPOINT_NAME
from src.config import load_config, with_overrides
from src.errors import ConfigurationError
from src.seeding import RunStreams


@pytest.fixture
def micro():
    return load_config("configs/micro.cfg")


def deterministic_columns(metrics):
    return metrics.drop(columns=["wall_clock"])


def test_micro_run_writes_its_artifacts(micro, tmp_path):
    run_dir = train(micro, tmp_path / "run")

    for name in ("config.txt", "metrics.csv", "summary.txt", CHECKPOINT_NAME):
        assert (run_dir / name).is_file()
    assert list((run_dir / "charts").glob("*.png"))

    metrics = read_metrics(run_dir)
    updates = metrics[metrics["event"] == "update"]
    evals = metrics[metrics["event"] == "eval"]
    episodes = metrics[metrics["event"] == "episode"]

    # One update per true step after the random warm-up.
    assert len(updates) == micro.true_steps - micro.agent.seed_steps
    assert evals["raw_step"].tolist() == [40, 80]
    assert len(episodes) == 2
    assert (metrics["raw_step"] == metrics["step"] * micro.env.action_repeat).all()
    assert updates["j_total"].notna().all()
    assert np.allclose(updates["j_dynamics"], updates["j_inverse"] + updates["j_forward"])


def test_same_config_and_seed_reproduce_metrics(micro, tmp_path):
    a = read_metrics(train(micro, tmp_path / "a"))
    b = read_metrics(train(micro, tmp_path / "b"))
    pd.testing.assert_frame_equal(deterministic_columns(a), deterministic_columns(b))


def test_different_seeds_differ(micro, tmp_path):
    a = read_metrics(train(micro, tmp_path / "a", seed=1))
    b = read_metrics(train(micro, tmp_path / "b", seed=2))
    assert not a["j_total"].equals(b["j_total"])


def test_resume_matches_uninterrupted_run(micro, tmp_path):
    full = read_metrics(train(micro, tmp_path / "full"))

    half = with_overrides(micro, {"train.total_steps": micro.total_steps // 2})
    train(half, tmp_path / "resumed")
    resumed = read_metrics(train(micro, tmp_path / "resumed", resume=True))

    pd.testing.assert_frame_equal(deterministic_columns(full), deterministic_columns(resumed))


def test_resume_refuses_a_changed_config(micro, tmp_path):
    train(micro, tmp_path / "run")
    changed = with_overrides(micro, {"agent.discount": 0.9})
    with pytest.raises(ConfigurationError):
        train(changed, tmp_path / "run", resume=True)


def test_resume_refuses_another_seed(micro, tmp_path):
    train(micro, tmp_path / "run", seed=1)
    with pytest.raises(ConfigurationError):
        train(micro, tmp_path / "run", seed=2, resume=True)


def test_no_spd_baseline_logs_no_spd_losses(micro, tmp_path):
    config = with_overrides(micro, {"spd.ablation_mode": "none"})
    metrics = read_metrics(train(config, tmp_path / "run"))
    updates = metrics[metrics["event"] == "update"]
    assert updates["j_total"].isna().all()
    assert updates["critic_loss"].notna().all()


def test_td3_micro_run(micro, tmp_path):
    config = with_overrides(micro, {"agent.kind": "td3"})
    metrics = read_metrics(train(config, tmp_path / "run"))
    updates = metrics[metrics["event"] == "update"]
    assert updates["alpha"].isna().all()
    # Delayed actor updates: actor loss only on every second update.
    assert updates["actor_loss"].notna().sum() == math.ceil(len(updates) / 2)


def test_train_seeds_one_directory_per_seed(micro, tmp_path):
    config = with_overrides(micro, {"train.seeds": (3, 4)})
    with patch("src.analysis.trainer.train", side_effect=lambda c, d, seed, resume: d) as mock_train:
        runs = train_seeds(config, tmp_path)
    assert runs == [tmp_path / "seed_3", tmp_path / "seed_4"]
    assert [c.kwargs["seed"] for c in mock_train.call_args_list] == [3, 4]


def test_spd_step_runs_before_rl_step(micro):
    streams = RunStreams(1)
    learner = build_learner(micro, streams)
    buffer = ReplayBuffer(micro.env.obs_shape, 2, 16)
    rng = np.random.default_rng(0)
    for _ in range(8):
        obs = rng.random(micro.env.obs_shape, dtype=np.float32)
        buffer.push(Transition(obs, rng.uniform(-1, 1, 2), 0.5, obs, False))
    batch = buffer.sample(4, rng)

    calls = []
    real_spd = trainer.spd_update_step
    real_rl = learner.agent.update

    def spd(*args, **kwargs):
        calls.append("spd")
        return real_spd(*args, **kwargs)

    def rl(*args, **kwargs):
        calls.append("rl")
        return real_rl(*args, **kwargs)

    with (
        patch("src.analysis.trainer.spd_update_step", side_effect=spd),
        patch.object(learner.agent, "update", side_effect=rl),
    ):
        values = update_step(learner, batch, micro, streams, 0)

    assert calls == ["spd", "rl"]
    assert math.isfinite(values["j_total"])
    assert math.isfinite(values["critic_loss"])


def test_load_run_restores_the_trained_encoder(micro, tmp_path):
    run_dir = train(micro, tmp_path / "run")
    snapshot = load_run(run_dir)
    again = load_run(run_dir)

    assert snapshot.config == micro
    assert snapshot.manifest["raw_step"] == micro.total_steps
    for p, q in zip(snapshot.learner.encoder.parameters(), again.learner.encoder.parameters()):
        assert torch.equal(p, q)

    obs = np.zeros(micro.env.obs_shape, dtype=np.float32)
    action = snapshot.learner.policy(obs)
    assert action.shape == (2,)
    assert np.all(np.abs(action) <= 1.0)


def test_summary_records_the_random_policy_floor(micro, tmp_path):
    run_dir = train(micro, tmp_path / "run")
    summary = (run_dir / "summary.txt").read_text()

    floor = trainer.random_floor(micro.env)
    assert floor > 0.0
    assert f" - Random-Policy Floor: {floor:.2f}" in summary
    assert " - Floor Multiple: " in summary


def test_random_floor_is_computed_once_per_env_config(micro):
    trainer._FLOORS.clear()
    with patch("src.analysis.trainer.random_policy_baseline", wraps=trainer.random_policy_baseline) as mock_floor:
        first = trainer.random_floor(micro.env, episodes=3)
        second = trainer.random_floor(micro.env, episodes=3)
    assert first == second
    assert mock_floor.call_count == 1


def test_train_restores_deterministic_algorithm_setting(micro, tmp_path):
    before = torch.are_deterministic_algorithms_enabled()
    train(micro, tmp_path / "run")
    assert torch.are_deterministic_algorithms_enabled() == before
