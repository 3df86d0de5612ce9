"""The training loop.

Each run warms up with seed_steps random actions, then for every true
environment step: interact, store, sample one minibatch, take the SPD step,
take the RL step (in that order). Evaluation and checkpoints happen every
eval_interval raw steps; (config, seed) fixes every metrics value except
wall_clock.
"""

import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path

import pandas as pd

from src.agents import ReplayBuffer, Transition, make_agent
from src.analysis.evaluation import evaluate, random_policy_baseline
from src.analysis.summary_analysis import eval_curve, write_run_summary
from src.charts import learning_curve_chart
from src.checkpoint import CHECKPOINT_NAME, load_checkpoint, restore_parameters, save_checkpoint
from src.config import config_hash, load_config, resume_hash, write_manifest
from src.errors import ConfigurationError
from src.imageops import two_way_views
from src.mappings import metrics_columns
from src.nets import Encoder
from src.pixelenv import PixelControlEnv, make_env
from src.seeding import RunStreams, deterministic_algorithms, seeded_init
from src.spd_objectives import SpdModules, spd_update_step

logger = logging.getLogger(__name__)

METRICS_NAME = "metrics.csv"
FLOOR_EPISODES = 100

_FLOORS = {}


@dataclass
class Learner:
    """Shared encoder, the RL agent on top of it and (unless disabled) the SPD heads."""

    encoder: Encoder
    agent: object
    spd: SpdModules = None

    def modules(self):
        modules = {"encoder": self.encoder}
        if self.spd is not None:
            modules.update(self.spd.modules())
        modules.update(self.agent.modules())
        return modules

    def optimizer_state(self):
        return {
            "agent": self.agent.state_dict(),
            "spd": self.spd.optimizer_state_dict() if self.spd is not None else None,
        }

    def load_optimizer_state(self, state):
        self.agent.load_state_dict(state["agent"])
        if self.spd is not None:
            self.spd.load_optimizer_state_dict(state["spd"])

    def policy(self, obs):
        """Deterministic evaluation policy on un-augmented observations."""
        return self.agent.act(obs, deterministic=True)


def build_learner(config, streams):
    """All networks are initialized under the run's "init" stream."""
    action_dim = PixelControlEnv.action_dim
    with seeded_init(streams.seed_for("init")):
        encoder = Encoder(config.env.obs_shape, config.net)
        spd = None
        if config.spd.enabled:
            spd = SpdModules(encoder, config.net, config.spd, action_dim)
        agent = make_agent(
            encoder, action_dim, config.net, config.agent, generator=streams.torch["agent"]
        )
    return Learner(encoder, agent, spd)


def metrics_row(event, step, config, **values):
    row = dict.fromkeys(metrics_columns, math.nan)
    row.update(event=event, step=step, raw_step=step * config.env.action_repeat)
    row.update(values)
    return row


def update_step(learner, batch, config, streams, update_index):
    """SPD step then RL step on one sampled minibatch; returns the loss values."""
    spd_on = learner.spd is not None
    obs, next_obs = batch.obs, batch.next_obs
    if spd_on or config.agent.augment:
        views = two_way_views(
            batch.obs,
            batch.next_obs,
            config.aug,
            streams.torch["aug_weak"],
            streams.torch["aug_strong"],
            strong=spd_on,
        )
        if config.agent.augment:
            obs, next_obs = views.obs_weak, views.next_weak

    values = {}
    if spd_on:
        values.update(spd_update_step(learner.spd, views, batch.action).as_row())
    values.update(
        learner.agent.update(obs, batch.action, batch.reward, next_obs, batch.not_done, update_index)
    )
    return values


def write_metrics(rows, run_dir):
    path = Path(run_dir) / METRICS_NAME
    pd.DataFrame(rows, columns=metrics_columns).to_csv(path, index=False)
    return path


def read_metrics(run_dir):
    return pd.read_csv(Path(run_dir) / METRICS_NAME)


def check_resume(manifest, config, seed):
    """A run only resumes under the configuration (total_steps aside) and seed it started with."""
    if manifest.get("resume_hash") != resume_hash(config):
        raise ConfigurationError(
            "Checkpoint was written under a different configuration; refusing to resume"
        )
    if int(manifest.get("seed", -1)) != seed:
        raise ConfigurationError(f"Checkpoint seed {manifest.get('seed')} != requested seed {seed}")


def _save(run_dir, config, seed, step, learner, env, buffer, streams, extra):
    manifest = {
        "step": step,
        "raw_step": step * config.env.action_repeat,
        "seed": seed,
        "config_hash": config_hash(config),
        "resume_hash": resume_hash(config),
    }
    state = {
        "optimizers": learner.optimizer_state(),
        "env": env.state_dict(),
        "buffer": buffer.state_dict(),
        "streams": streams.state_dict(),
        **extra,
    }
    save_checkpoint(Path(run_dir) / CHECKPOINT_NAME, learner.modules(), manifest, state)


def random_floor(env_config, episodes=FLOOR_EPISODES):
    """Random-policy return for an environment config, computed once per process and config."""
    key = (repr(env_config), episodes)
    if key not in _FLOORS:
        _FLOORS[key] = random_policy_baseline(env_config, episodes, seed=env_config.seed).mean
    return _FLOORS[key]


def finish_run(rows, run_dir, config, seed):
    write_metrics(rows, run_dir)
    metrics = pd.DataFrame(rows, columns=metrics_columns)
    floor = random_floor(config.env)
    curve = eval_curve([metrics])
    if not curve.empty:
        learning_curve_chart(
            {f"seed {seed}": curve}, "Evaluation Return", Path(run_dir) / "charts", floor=floor
        )
    write_run_summary(run_dir, metrics, config, floor=floor)


def train(config, run_dir, seed=None, resume=False):
    """Trains one seed into run_dir and returns the run directory."""
    run_dir = Path(run_dir)
    seed = config.seeds[0] if seed is None else int(seed)
    write_manifest(config, run_dir)
    with deterministic_algorithms():
        _train(config, run_dir, seed, resume)
    return run_dir


def _train(config, run_dir, seed, resume):
    streams = RunStreams(seed, config.aug.rng_stream)
    learner = build_learner(config, streams)
    env = make_env(config.env, seed=streams.seed_for("env"))
    buffer = ReplayBuffer(config.env.obs_shape, env.action_dim, config.agent.buffer_capacity)
    seed_steps = config.agent.seed_steps

    step, episode_return, elapsed, rows = 0, 0.0, 0.0, []
    checkpoint_path = run_dir / CHECKPOINT_NAME
    if resume and checkpoint_path.is_file():
        payload = load_checkpoint(checkpoint_path)
        check_resume(payload["manifest"], config, seed)
        restore_parameters(learner.modules(), payload["params"])
        state = payload["state"]
        learner.load_optimizer_state(state["optimizers"])
        env.load_state_dict(state["env"])
        buffer.load_state_dict(state["buffer"])
        streams.load_state_dict(state["streams"])
        step = payload["manifest"]["step"]
        obs = state["obs"]
        episode_return = state["episode_return"]
        elapsed = state["elapsed"]
        rows = list(state["rows"])
        logger.info("Resumed %s at step %d of %d", run_dir, step, config.true_steps)
    else:
        obs = env.reset()
        logger.info(
            "Training seed %d for %d true steps (%d raw) into %s",
            seed,
            config.true_steps,
            config.total_steps,
            run_dir,
        )

    start = time.perf_counter() - elapsed
    for t in range(step, config.true_steps):
        if t < seed_steps:
            action = streams.numpy["explore"].uniform(-1.0, 1.0, size=env.action_dim)
        else:
            action = learner.agent.act(obs)

        next_obs, reward, done = env.step(action)
        # Episodes only end on the time limit, so the bootstrap stays on.
        buffer.push(Transition(obs, action, reward, next_obs, False))
        episode_return += reward
        obs = next_obs
        true_step = t + 1

        if t >= seed_steps:
            update_index = t - seed_steps
            batch = buffer.sample(config.agent.batch_size, streams.numpy["buffer"])
            values = update_step(learner, batch, config, streams, update_index)
            if update_index % config.log_interval == 0:
                rows.append(
                    metrics_row(
                        "update",
                        true_step,
                        config,
                        episode=env.episode,
                        wall_clock=time.perf_counter() - start,
                        **values,
                    )
                )

        if done:
            rows.append(
                metrics_row(
                    "episode",
                    true_step,
                    config,
                    episode=env.episode,
                    episode_return=episode_return,
                    wall_clock=time.perf_counter() - start,
                )
            )
            logger.info("Episode %d finished at step %d: return %.2f", env.episode, true_step, episode_return)
            episode_return = 0.0
            obs = env.reset()

        if true_step % config.eval_every == 0:
            result = evaluate(
                learner.policy, config.env, config.eval_episodes, streams.seed_for("eval")
            )
            rows.append(
                metrics_row(
                    "eval",
                    true_step,
                    config,
                    episode=env.episode,
                    eval_return_mean=result.mean,
                    eval_return_std=result.std,
                    wall_clock=time.perf_counter() - start,
                )
            )
            logger.info(
                "Eval at %d raw steps: %.2f +/- %.2f",
                true_step * config.env.action_repeat,
                result.mean,
                result.std,
            )
            extra = {
                "obs": obs,
                "episode_return": episode_return,
                "elapsed": time.perf_counter() - start,
                "rows": rows,
            }
            _save(run_dir, config, seed, true_step, learner, env, buffer, streams, extra)
            write_metrics(rows, run_dir)

    finish_run(rows, run_dir, config, seed)


def train_seeds(config, root, resume=False):
    """One run per configured seed under root/seed_<n>."""
    root = Path(root)
    return [train(config, root / f"seed_{seed}", seed=seed, resume=resume) for seed in config.seeds]


@dataclass
class RunSnapshot:
    config: object
    learner: Learner
    manifest: dict


def load_run(run_dir):
    """Rebuilds a trained learner from a run directory's manifest and checkpoint."""
    run_dir = Path(run_dir)
    config = load_config(run_dir / "config.txt")
    payload = load_checkpoint(run_dir / CHECKPOINT_NAME)
    manifest = payload["manifest"]
    if manifest.get("config_hash") != config_hash(config):
        logger.warning("config.txt in %s does not match its checkpoint", run_dir)
    streams = RunStreams(manifest["seed"], config.aug.rng_stream)
    learner = build_learner(config, streams)
    restore_parameters(learner.modules(), payload["params"])
    return RunSnapshot(config, learner, manifest)
