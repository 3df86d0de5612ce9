import logging
from typing import NamedTuple

import numpy as np
import torch

from src.errors import InvalidArgumentError, InvalidStateError, ShapeError

logger = logging.getLogger(__name__)


class Transition(NamedTuple):
    """One un-augmented environment transition as pushed by the training loop."""

    obs: np.ndarray
    action: np.ndarray
    reward: float
    next_obs: np.ndarray
    done: bool


class ReplayBatch(NamedTuple):
    obs: torch.Tensor
    action: torch.Tensor
    reward: torch.Tensor
    next_obs: torch.Tensor
    not_done: torch.Tensor


def to_uint8(obs):
    return np.round(np.clip(obs, 0.0, 1.0) * 255.0).astype(np.uint8)


class ReplayBuffer:
    """Ring buffer of transitions; observations are kept as uint8 frames."""

    def __init__(self, obs_shape, action_dim, capacity):
        if capacity < 1:
            raise InvalidArgumentError(f"capacity must be >= 1, got {capacity}")
        self.obs_shape = tuple(obs_shape)
        self.action_dim = int(action_dim)
        self.capacity = int(capacity)

        self.obses = np.zeros((capacity, *self.obs_shape), dtype=np.uint8)
        self.next_obses = np.zeros((capacity, *self.obs_shape), dtype=np.uint8)
        self.actions = np.zeros((capacity, self.action_dim), dtype=np.float32)
        self.rewards = np.zeros((capacity, 1), dtype=np.float32)
        self.not_dones = np.zeros((capacity, 1), dtype=np.float32)

        self.idx = 0
        self.full = False

    def __len__(self):
        return self.capacity if self.full else self.idx

    def push(self, transition):
        """Stores one transition, overwriting the oldest once at capacity."""
        obs = np.asarray(transition.obs)
        if obs.shape != self.obs_shape:
            raise ShapeError(f"observation shape {obs.shape} != buffer shape {self.obs_shape}")
        self.obses[self.idx] = to_uint8(obs)
        self.next_obses[self.idx] = to_uint8(np.asarray(transition.next_obs))
        self.actions[self.idx] = np.asarray(transition.action, dtype=np.float32).reshape(-1)
        self.rewards[self.idx] = transition.reward
        self.not_dones[self.idx] = 0.0 if transition.done else 1.0

        self.idx = (self.idx + 1) % self.capacity
        self.full = self.full or self.idx == 0

    def sample_indices(self, batch_size, rng):
        if len(self) == 0:
            raise InvalidStateError("cannot sample from an empty replay buffer")
        return rng.integers(0, len(self), size=batch_size)

    def sample(self, batch_size, rng):
        """Uniform sample with replacement; observations come back as float32 in [0, 1]."""
        idxs = self.sample_indices(batch_size, rng)
        return ReplayBatch(
            obs=torch.as_tensor(self.obses[idxs], dtype=torch.float32) / 255.0,
            action=torch.as_tensor(self.actions[idxs]),
            reward=torch.as_tensor(self.rewards[idxs]),
            next_obs=torch.as_tensor(self.next_obses[idxs], dtype=torch.float32) / 255.0,
            not_done=torch.as_tensor(self.not_dones[idxs]),
        )

    def state_dict(self):
        n = len(self)
        return {
            "obses": self.obses[:n].copy(),
            "next_obses": self.next_obses[:n].copy(),
            "actions": self.actions[:n].copy(),
            "rewards": self.rewards[:n].copy(),
            "not_dones": self.not_dones[:n].copy(),
            "idx": self.idx,
            "full": self.full,
        }

    def load_state_dict(self, state):
        n = len(state["rewards"])
        if n > self.capacity:
            raise InvalidStateError(f"saved buffer holds {n} items, capacity is {self.capacity}")
        self.obses[:n] = state["obses"]
        self.next_obses[:n] = state["next_obses"]
        self.actions[:n] = state["actions"]
        self.rewards[:n] = state["rewards"]
        self.not_dones[:n] = state["not_dones"]
        self.idx = state["idx"]
        self.full = state["full"]
        logger.debug("Replay buffer restored with %d transitions", n)
