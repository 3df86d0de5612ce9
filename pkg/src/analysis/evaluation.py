"""Evaluation protocols: deterministic-policy returns, the random-policy floor,
and train/test background generalization rows."""

import logging
from typing import NamedTuple

import numpy as np
import pandas as pd

from src.errors import InvalidArgumentError
from src.pixelenv import PixelControlEnv, make_background, make_env
from src.seeding import stream_seed

logger = logging.getLogger(__name__)

GENERALIZATION_COLUMNS = ["train_bg", "test_bg", "train_mean", "mean", "std", "gap"]


class EvalResult(NamedTuple):
    mean: float
    std: float
    returns: tuple


def run_episode(policy, env):
    obs = env.reset()
    total = 0.0
    done = False
    while not done:
        obs, reward, done = env.step(policy(obs))
        total += reward
    return total


def evaluate(policy, env_config, episodes, seed, background=None):
    """Mean and (population) std of episode returns over fresh seeded environments.

    ``policy`` maps one un-augmented observation to an action. Episode i runs
    in its own environment seeded from (seed, i), so the same policy and seed
    always give the same result.
    """
    if episodes < 1:
        raise InvalidArgumentError(f"episodes must be >= 1, got {episodes}")
    # One background stream serves every episode; env.reset re-seeds it.
    stream = make_background(env_config, background)
    returns = []
    for i in range(episodes):
        env = make_env(env_config, seed=stream_seed(seed, f"eval_{i}"), background=stream)
        returns.append(run_episode(policy, env))
    result = EvalResult(float(np.mean(returns)), float(np.std(returns)), tuple(returns))
    logger.debug("Evaluated %d episodes: %.3f +/- %.3f", episodes, result.mean, result.std)
    return result


class RandomPolicy:
    """Uniform actions in [-1, 1]^dim from its own seeded stream."""

    def __init__(self, action_dim, seed):
        self.action_dim = action_dim
        self.rng = np.random.default_rng(seed)

    def __call__(self, obs):
        return self.rng.uniform(-1.0, 1.0, size=self.action_dim)


def random_policy_baseline(env_config, episodes=100, seed=0, background=None):
    """Monte-Carlo return of the uniform random policy: the floor a learner must beat."""
    policy = RandomPolicy(PixelControlEnv.action_dim, stream_seed(seed, "random_policy"))
    result = evaluate(policy, env_config, episodes, seed, background=background)
    logger.info(
        "Random-policy floor on %s: %.3f over %d episodes",
        background or env_config.background,
        result.mean,
        episodes,
    )
    return result


def generalization_eval(policy, env_config, train_bg, test_bg, episodes, seed):
    """Evaluates one snapshot under the training and the test background.

    Returns a one-row DataFrame (train_bg, test_bg, train_mean, mean, std, gap)
    where mean and std are on the test background and gap = train_mean - mean.
    """
    on_train = evaluate(policy, env_config, episodes, seed, background=train_bg)
    if test_bg == train_bg:
        on_test = on_train
    else:
        on_test = evaluate(policy, env_config, episodes, seed, background=test_bg)
    row = {
        "train_bg": train_bg,
        "test_bg": test_bg,
        "train_mean": on_train.mean,
        "mean": on_test.mean,
        "std": on_test.std,
        "gap": on_train.mean - on_test.mean,
    }
    logger.info("Generalization %s -> %s: %.3f (gap %.3f)", train_bg, test_bg, row["mean"], row["gap"])
    return pd.DataFrame([row], columns=GENERALIZATION_COLUMNS)
