"""Encoder, actor, critic, dynamics heads and discriminator.

Gradient routing: the encoder is shared. The critic and the SPD objective
backpropagate into it; the actor only ever sees detached latents.
"""

import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from src.errors import ConfigurationError, ShapeError


@dataclass
class NetConfig:
    latent_dim: int = 50
    hidden_dim: int = 256
    num_filters: int = 32
    num_conv_layers: int = 4
    # Stride 2 on every conv layer (wide driving-style observations).
    conv_stride_all: bool = False
    # "main": 4-layer dynamics heads / 2-layer discriminator; "supplementary": 2-layer heads.
    dynamics_depth: str = "main"
    discriminator_tanh: bool = False

    def __post_init__(self):
        if self.dynamics_depth not in ("main", "supplementary"):
            raise ConfigurationError(
                f"net.dynamics_depth must be 'main' or 'supplementary', got '{self.dynamics_depth}'"
            )
        if self.latent_dim < 1 or self.hidden_dim < 1 or self.num_conv_layers < 1:
            raise ConfigurationError("net sizes must be positive")


def weight_init(m):
    """Orthogonal for linear layers, fan-in scaled Gaussian for convolutions."""
    if isinstance(m, nn.Linear):
        nn.init.orthogonal_(m.weight.data)
        m.bias.data.fill_(0.0)
    elif isinstance(m, nn.Conv2d):
        nn.init.kaiming_normal_(m.weight.data, nonlinearity="relu")
        m.bias.data.fill_(0.0)


def mlp(input_dim, hidden_dim, output_dim, num_layers):
    """num_layers linear layers with ReLU between them."""
    if num_layers == 1:
        return nn.Sequential(nn.Linear(input_dim, output_dim))
    layers = [nn.Linear(input_dim, hidden_dim), nn.ReLU()]
    for _ in range(num_layers - 2):
        layers += [nn.Linear(hidden_dim, hidden_dim), nn.ReLU()]
    layers.append(nn.Linear(hidden_dim, output_dim))
    return nn.Sequential(*layers)


def conv_output_size(size, num_layers, stride_all=False):
    for i in range(num_layers):
        stride = 2 if (i == 0 or stride_all) else 1
        size = (size - 3) // stride + 1
    return size


class Encoder(nn.Module):
    """Conv stack -> linear -> LayerNorm -> tanh latent (phi)."""

    def __init__(self, obs_shape, config):
        super().__init__()
        self.obs_shape = tuple(obs_shape)
        self.latent_dim = config.latent_dim
        channels = obs_shape[0]

        convs = []
        for i in range(config.num_conv_layers):
            stride = 2 if (i == 0 or config.conv_stride_all) else 1
            convs.append(nn.Conv2d(channels, config.num_filters, 3, stride=stride))
            channels = config.num_filters
        self.convs = nn.ModuleList(convs)

        out_h = conv_output_size(obs_shape[1], config.num_conv_layers, config.conv_stride_all)
        out_w = conv_output_size(obs_shape[2], config.num_conv_layers, config.conv_stride_all)
        if out_h < 1 or out_w < 1:
            raise ShapeError(f"observation {obs_shape} is too small for the conv stack")
        self.feature_map = (config.num_filters, out_h, out_w)
        self.fc = nn.Linear(config.num_filters * out_h * out_w, config.latent_dim)
        self.ln = nn.LayerNorm(config.latent_dim)
        self.apply(weight_init)

    def conv_features(self, obs):
        if obs.dim() != 4 or tuple(obs.shape[1:]) != self.obs_shape:
            raise ShapeError(
                f"encoder expects [batch, {self.obs_shape}], got {tuple(obs.shape)}"
            )
        h = obs
        for conv in self.convs:
            h = F.relu(conv(h))
        return h

    def forward(self, obs):
        h = self.conv_features(obs).flatten(start_dim=1)
        return torch.tanh(self.ln(self.fc(h)))


def encode(encoder, obs):
    """Latent batch [batch, latent_dim] with entries in (-1, 1)."""
    return encoder(obs)


def gaussian_logprob(noise, log_std):
    residual = (-0.5 * noise.pow(2) - log_std).sum(-1, keepdim=True)
    return residual - 0.5 * math.log(2 * math.pi) * noise.size(-1)


def squash(mu, pi, log_pi):
    """tanh squash with the change-of-variables correction on log_pi."""
    mu = torch.tanh(mu)
    pi = torch.tanh(pi)
    log_pi = log_pi - torch.log(F.relu(1 - pi.pow(2)) + 1e-6).sum(-1, keepdim=True)
    return mu, pi, log_pi


class Actor(nn.Module):
    """Diagonal Gaussian policy on latents, tanh-squashed."""

    def __init__(self, latent_dim, action_dim, hidden_dim=256, log_std_min=-10.0, log_std_max=2.0):
        super().__init__()
        self.log_std_min = log_std_min
        self.log_std_max = log_std_max
        self.action_dim = action_dim
        self.trunk = mlp(latent_dim, hidden_dim, 2 * action_dim, 3)
        self.apply(weight_init)

    def forward(self, z):
        mu, log_std = self.trunk(z).chunk(2, dim=-1)
        # Smoothly bounded into [log_std_min, log_std_max].
        log_std = torch.tanh(log_std)
        log_std = self.log_std_min + 0.5 * (self.log_std_max - self.log_std_min) * (log_std + 1)
        return mu, log_std


def actor_sample(actor, z, generator=None):
    """Reparameterized sample: (action, log_prob, tanh(mean), log_std)."""
    mu, log_std = actor(z)
    noise = torch.randn(mu.shape, generator=generator, dtype=mu.dtype)
    pi = mu + noise * log_std.exp()
    log_pi = gaussian_logprob(noise, log_std)
    mean_action, action, log_pi = squash(mu, pi, log_pi)
    return action, log_pi, mean_action, log_std


class DeterministicActor(nn.Module):
    """TD3 policy: tanh(MLP(z))."""

    def __init__(self, latent_dim, action_dim, hidden_dim=256):
        super().__init__()
        self.action_dim = action_dim
        self.trunk = mlp(latent_dim, hidden_dim, action_dim, 3)
        self.apply(weight_init)

    def forward(self, z):
        return torch.tanh(self.trunk(z))


class QFunction(nn.Module):
    def __init__(self, latent_dim, action_dim, hidden_dim=256):
        super().__init__()
        self.trunk = mlp(latent_dim + action_dim, hidden_dim, 1, 3)

    def forward(self, z, action):
        if z.size(0) != action.size(0):
            raise ShapeError("latent and action batch sizes differ")
        return self.trunk(torch.cat([z, action], dim=-1))


class Critic(nn.Module):
    """Twin Q-functions; they share no parameters."""

    def __init__(self, latent_dim, action_dim, hidden_dim=256):
        super().__init__()
        self.Q1 = QFunction(latent_dim, action_dim, hidden_dim)
        self.Q2 = QFunction(latent_dim, action_dim, hidden_dim)
        self.apply(weight_init)

    def forward(self, z, action):
        return self.Q1(z, action), self.Q2(z, action)


def critic_eval(critic, z, action):
    return critic(z, action)


class InverseDynamics(nn.Module):
    """I(z_t, z_{t+1}) -> action in [-1, 1]."""

    def __init__(self, latent_dim, action_dim, hidden_dim=256, num_layers=4):
        super().__init__()
        self.latent_dim = latent_dim
        self.trunk = mlp(2 * latent_dim, hidden_dim, action_dim, num_layers)
        self.apply(weight_init)

    def forward(self, z_t, z_t1):
        if z_t.shape != z_t1.shape or z_t.size(-1) != self.latent_dim:
            raise ShapeError("inverse dynamics needs two latents of the same shape")
        return torch.tanh(self.trunk(torch.cat([z_t, z_t1], dim=-1)))


class ForwardDynamics(nn.Module):
    """F(z_t, a_t) -> next latent in (-1, 1); action joins at the input layer."""

    def __init__(self, latent_dim, action_dim, hidden_dim=256, num_layers=4):
        super().__init__()
        self.latent_dim = latent_dim
        self.action_dim = action_dim
        self.trunk = mlp(latent_dim + action_dim, hidden_dim, latent_dim, num_layers)
        self.apply(weight_init)

    def forward(self, z_t, action):
        if z_t.size(0) != action.size(0) or action.size(-1) != self.action_dim:
            raise ShapeError("forward dynamics got mismatched latent/action shapes")
        return torch.tanh(self.trunk(torch.cat([z_t, action], dim=-1)))


class Discriminator(nn.Module):
    """D(z) -> raw scalar score (optionally tanh-bounded)."""

    def __init__(self, latent_dim, hidden_dim=256, num_layers=2, use_tanh=False):
        super().__init__()
        self.use_tanh = use_tanh
        self.trunk = mlp(latent_dim, hidden_dim, 1, num_layers)
        self.apply(weight_init)

    def forward(self, z):
        score = self.trunk(z)
        return torch.tanh(score) if self.use_tanh else score


def discriminate(discriminator, z):
    return discriminator(z)


def inverse(inverse_model, z_t, z_t1):
    return inverse_model(z_t, z_t1)


def forward(forward_model, z_t, action):
    return forward_model(z_t, action)


def dynamics_layers(config):
    return 4 if config.dynamics_depth == "main" else 2


def build_dynamics(config, action_dim):
    layers = dynamics_layers(config)
    return (
        InverseDynamics(config.latent_dim, action_dim, config.hidden_dim, layers),
        ForwardDynamics(config.latent_dim, action_dim, config.hidden_dim, layers),
    )


def build_discriminator(config):
    return Discriminator(config.latent_dim, config.hidden_dim, 2, config.discriminator_tanh)


@torch.no_grad()
def soft_update(target, source, tau):
    """target <- tau * source + (1 - tau) * target, in place; returns target."""
    target_params = list(target.parameters())
    source_params = list(source.parameters())
    if len(target_params) != len(source_params):
        raise ShapeError("soft_update needs structurally identical modules")
    for t, s in zip(target_params, source_params):
        if t.shape != s.shape:
            raise ShapeError(f"soft_update shape mismatch {tuple(t.shape)} vs {tuple(s.shape)}")
        t.data.copy_(tau * s.data + (1 - tau) * t.data)
    return target


def count_parameters(module):
    return sum(p.numel() for p in module.parameters())


def to_tensor(obs):
    """numpy observation(s) -> float32 NCHW tensor."""
    array = np.asarray(obs, dtype=np.float32)
    if array.ndim == 3:
        array = array[None]
    return torch.from_numpy(np.ascontiguousarray(array))
