import math
from dataclasses import dataclass

from src.errors import ConfigurationError
from src.mappings import agent_labels

NOT_UPDATED = math.nan


@dataclass
class AgentConfig:
    """Off-policy learner hyperparameters; defaults follow the pixel SAC lineage."""

    kind: str = "sac"
    batch_size: int = 128
    buffer_capacity: int = 100_000
    discount: float = 0.99
    actor_lr: float = 1e-3
    critic_lr: float = 1e-3
    alpha_lr: float = 1e-4
    alpha_beta: float = 0.5
    init_temperature: float = 0.1
    critic_tau: float = 0.01
    actor_update_freq: int = 2
    critic_target_update_freq: int = 2
    log_std_min: float = -10.0
    log_std_max: float = 2.0
    seed_steps: int = 1000
    # TD3 only.
    exploration_noise: float = 0.1
    target_noise: float = 0.2
    noise_clip: float = 0.5
    # false: feed un-augmented observations to the RL losses.
    augment: bool = True

    def __post_init__(self):
        if self.kind not in agent_labels:
            raise ConfigurationError(f"Unknown agent.kind '{self.kind}'")
        if self.batch_size < 1 or self.buffer_capacity < 1:
            raise ConfigurationError("agent.batch_size and agent.buffer_capacity must be >= 1")
        if not 0.0 <= self.discount <= 1.0:
            raise ConfigurationError("agent.discount must lie in [0, 1]")
        if not 0.0 <= self.critic_tau <= 1.0:
            raise ConfigurationError("agent.critic_tau must lie in [0, 1]")
        if self.init_temperature <= 0:
            raise ConfigurationError("agent.init_temperature must be > 0")
        if self.actor_update_freq < 1 or self.critic_target_update_freq < 1:
            raise ConfigurationError("agent update frequencies must be >= 1")
        if self.log_std_min >= self.log_std_max:
            raise ConfigurationError("agent.log_std_min must be below agent.log_std_max")
        if self.seed_steps < 0:
            raise ConfigurationError("agent.seed_steps must be >= 0")
        if min(self.exploration_noise, self.target_noise, self.noise_clip) < 0:
            raise ConfigurationError("TD3 noise settings must be >= 0")


def loss_report(critic_loss, actor_loss=None, alpha_loss=None, alpha=None):
    """Per-update RL row; terms that were not stepped this update are NaN."""

    def value(v):
        return NOT_UPDATED if v is None else float(v)

    return {
        "critic_loss": value(critic_loss),
        "actor_loss": value(actor_loss),
        "alpha_loss": value(alpha_loss),
        "alpha": value(alpha),
    }
