"""Twin delayed DDPG on encoder latents, sharing the SAC encoder-routing rule."""

import copy
import logging

import numpy as np
import torch

from src.agents.common import loss_report
from src.agents.sac import critic_loss
from src.nets import Critic, DeterministicActor, soft_update, to_tensor

logger = logging.getLogger(__name__)


def clipped_target_noise(shape, sigma, clip, generator=None):
    """Gaussian policy-smoothing noise clipped to [-clip, clip]."""
    noise = torch.randn(shape, generator=generator) * sigma
    return noise.clamp(-clip, clip)


def td3_target(reward, not_done, discount, target_q1, target_q2):
    return reward + not_done * discount * torch.min(target_q1, target_q2)


class Td3Agent:
    kind = "td3"

    def __init__(self, encoder, action_dim, net_config, config, generator=None):
        self.encoder = encoder
        self.config = config
        self.action_dim = action_dim
        self.generator = generator
        latent, hidden = net_config.latent_dim, net_config.hidden_dim

        self.actor = DeterministicActor(latent, action_dim, hidden)
        self.actor_target = copy.deepcopy(self.actor)
        self.critic = Critic(latent, action_dim, hidden)
        self.critic_target = copy.deepcopy(self.critic)

        self.actor_optimizer = torch.optim.Adam(self.actor.parameters(), lr=config.actor_lr)
        self.critic_optimizer = torch.optim.Adam(
            list(self.critic.parameters()) + list(self.encoder.parameters()), lr=config.critic_lr
        )

    def act(self, obs, deterministic=False):
        batch = to_tensor(obs)
        with torch.no_grad():
            action = self.actor(self.encoder(batch))
            if not deterministic:
                noise = torch.randn(action.shape, generator=self.generator)
                action = (action + noise * self.config.exploration_noise).clamp(-1.0, 1.0)
        action = action.numpy().astype(np.float64)
        return action[0] if np.ndim(obs) == 3 else action

    def critic_target_values(self, next_obs, reward, not_done):
        with torch.no_grad():
            next_z = self.encoder(next_obs)
            next_action = self.actor_target(next_z)
            noise = clipped_target_noise(
                next_action.shape, self.config.target_noise, self.config.noise_clip, self.generator
            )
            next_action = (next_action + noise).clamp(-1.0, 1.0)
            target_q1, target_q2 = self.critic_target(next_z, next_action)
            return td3_target(reward, not_done, self.config.discount, target_q1, target_q2)

    def update_critic(self, obs, action, reward, next_obs, not_done):
        target_q = self.critic_target_values(next_obs, reward, not_done)
        current_q1, current_q2 = self.critic(self.encoder(obs), action)
        loss = critic_loss(current_q1, current_q2, target_q)

        self.critic_optimizer.zero_grad()
        loss.backward()
        self.critic_optimizer.step()
        return loss.item()

    def actor_loss(self, obs):
        with torch.no_grad():
            z = self.encoder(obs)
        return -self.critic.Q1(z, self.actor(z)).mean()

    def update(self, obs, action, reward, next_obs, not_done, step):
        critic_value = self.update_critic(obs, action, reward, next_obs, not_done)
        actor_value = None
        # Delayed policy and target updates.
        if step % self.config.actor_update_freq == 0:
            loss = self.actor_loss(obs)
            self.actor_optimizer.zero_grad()
            loss.backward()
            self.actor_optimizer.step()
            actor_value = loss.item()

            soft_update(self.actor_target, self.actor, self.config.critic_tau)
            soft_update(self.critic_target, self.critic, self.config.critic_tau)
        return loss_report(critic_value, actor_value)

    def modules(self):
        return {
            "actor": self.actor,
            "actor_target": self.actor_target,
            "critic": self.critic,
            "critic_target": self.critic_target,
        }

    def state_dict(self):
        return {
            "actor_optimizer": self.actor_optimizer.state_dict(),
            "critic_optimizer": self.critic_optimizer.state_dict(),
        }

    def load_state_dict(self, state):
        self.actor_optimizer.load_state_dict(state["actor_optimizer"])
        self.critic_optimizer.load_state_dict(state["critic_optimizer"])
