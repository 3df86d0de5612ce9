"""Soft actor-critic on encoder latents.

The critic optimizer owns the encoder parameters too, so the critic loss
trains the encoder. The actor and temperature only ever see detached
latents.
"""

import copy
import logging
import math

import numpy as np
import torch
import torch.nn.functional as F

from src.agents.common import loss_report
from src.nets import Actor, Critic, actor_sample, soft_update, to_tensor

logger = logging.getLogger(__name__)


def soft_bellman_target(reward, not_done, discount, target_q1, target_q2, entropy_term):
    """r + gamma * (1 - done) * (min(Q'_1, Q'_2) - alpha * log pi)."""
    return reward + not_done * discount * (torch.min(target_q1, target_q2) - entropy_term)


def critic_loss(current_q1, current_q2, target_q):
    return F.mse_loss(current_q1, target_q) + F.mse_loss(current_q2, target_q)


class SacAgent:
    kind = "sac"

    def __init__(self, encoder, action_dim, net_config, config, generator=None):
        self.encoder = encoder
        self.config = config
        self.action_dim = action_dim
        self.generator = generator
        latent, hidden = net_config.latent_dim, net_config.hidden_dim

        self.actor = Actor(latent, action_dim, hidden, config.log_std_min, config.log_std_max)
        self.critic = Critic(latent, action_dim, hidden)
        self.critic_target = copy.deepcopy(self.critic)

        self.log_alpha = torch.tensor(math.log(config.init_temperature), requires_grad=True)
        self.target_entropy = -float(action_dim)

        self.actor_optimizer = torch.optim.Adam(self.actor.parameters(), lr=config.actor_lr)
        self.critic_optimizer = torch.optim.Adam(
            list(self.critic.parameters()) + list(self.encoder.parameters()), lr=config.critic_lr
        )
        self.log_alpha_optimizer = torch.optim.Adam(
            [self.log_alpha], lr=config.alpha_lr, betas=(config.alpha_beta, 0.999)
        )

    @property
    def alpha(self):
        return self.log_alpha.exp()

    def act(self, obs, deterministic=False):
        """Action in [-1, 1]^dim for one observation (or a batch) of un-augmented frames."""
        batch = to_tensor(obs)
        with torch.no_grad():
            z = self.encoder(batch)
            if deterministic:
                mu, _ = self.actor(z)
                action = torch.tanh(mu)
            else:
                action, _, _, _ = actor_sample(self.actor, z, self.generator)
        action = action.numpy().astype(np.float64)
        return action[0] if np.ndim(obs) == 3 else action

    def critic_target_values(self, next_obs, reward, not_done):
        with torch.no_grad():
            next_z = self.encoder(next_obs)
            next_action, next_log_pi, _, _ = actor_sample(self.actor, next_z, self.generator)
            target_q1, target_q2 = self.critic_target(next_z, next_action)
            entropy = self.alpha.detach() * next_log_pi
            return soft_bellman_target(
                reward, not_done, self.config.discount, target_q1, target_q2, entropy
            )

    def update_critic(self, obs, action, reward, next_obs, not_done):
        target_q = self.critic_target_values(next_obs, reward, not_done)
        current_q1, current_q2 = self.critic(self.encoder(obs), action)
        loss = critic_loss(current_q1, current_q2, target_q)

        self.critic_optimizer.zero_grad()
        loss.backward()
        self.critic_optimizer.step()
        return loss.item()

    def actor_loss(self, obs):
        """Actor loss on a detached latent; returns (loss, log_pi)."""
        with torch.no_grad():
            z = self.encoder(obs)
        action, log_pi, _, _ = actor_sample(self.actor, z, self.generator)
        actor_q1, actor_q2 = self.critic(z, action)
        loss = (self.alpha.detach() * log_pi - torch.min(actor_q1, actor_q2)).mean()
        return loss, log_pi

    def update_actor_and_alpha(self, obs):
        loss, log_pi = self.actor_loss(obs)
        self.actor_optimizer.zero_grad()
        loss.backward()
        self.actor_optimizer.step()

        self.log_alpha_optimizer.zero_grad()
        alpha_loss = (self.alpha * (-log_pi - self.target_entropy).detach()).mean()
        alpha_loss.backward()
        self.log_alpha_optimizer.step()
        return loss.item(), alpha_loss.item()

    def update(self, obs, action, reward, next_obs, not_done, step):
        """One SAC update on (weak-augmented) observation tensors."""
        critic_value = self.update_critic(obs, action, reward, next_obs, not_done)
        actor_value = alpha_value = None
        if step % self.config.actor_update_freq == 0:
            actor_value, alpha_value = self.update_actor_and_alpha(obs)
        if step % self.config.critic_target_update_freq == 0:
            soft_update(self.critic_target, self.critic, self.config.critic_tau)
        return loss_report(critic_value, actor_value, alpha_value, self.alpha.item())

    def modules(self):
        return {"actor": self.actor, "critic": self.critic, "critic_target": self.critic_target}

    def state_dict(self):
        return {
            "log_alpha": self.log_alpha.detach().clone(),
            "actor_optimizer": self.actor_optimizer.state_dict(),
            "critic_optimizer": self.critic_optimizer.state_dict(),
            "log_alpha_optimizer": self.log_alpha_optimizer.state_dict(),
        }

    def load_state_dict(self, state):
        with torch.no_grad():
            self.log_alpha.copy_(state["log_alpha"])
        self.actor_optimizer.load_state_dict(state["actor_optimizer"])
        self.critic_optimizer.load_state_dict(state["critic_optimizer"])
        self.log_alpha_optimizer.load_state_dict(state["log_alpha_optimizer"])
