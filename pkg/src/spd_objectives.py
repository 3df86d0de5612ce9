"""Self-predictive dynamics objectives: relativistic adversarial terms, inverse->forward
dynamics chaining, their weighted sum, and the alternating update step."""

import logging
from dataclasses import dataclass, field

import torch
import torch.nn.functional as F
from torch.func import functional_call

from src.errors import ConfigurationError, InvalidArgumentError, ShapeError
from src.mappings import ablation_labels, ablation_terms
from src.nets import build_discriminator, build_dynamics

logger = logging.getLogger(__name__)

COSINE_EPS = 1e-8


@dataclass
class SpdWeights:
    lambda_psi: float = 0.1
    lambda_adv: float = 0.001

    def __post_init__(self):
        if self.lambda_psi < 0 or self.lambda_adv < 0:
            raise InvalidArgumentError("SPD weights must be >= 0")


@dataclass
class SpdConfig:
    lambda_psi: float = 0.1
    lambda_adv: float = 0.001
    ablation_mode: str = "full"
    detach_forward_targets: bool = True
    detach_inferred_actions: bool = False
    encoder_lr: float = 1e-3
    dynamics_lr: float = 1e-3
    discriminator_lr: float = 1e-3

    def __post_init__(self):
        if self.ablation_mode not in ablation_labels:
            raise ConfigurationError(f"Unknown spd.ablation_mode '{self.ablation_mode}'")
        if self.lambda_psi < 0 or self.lambda_adv < 0:
            raise ConfigurationError("spd.lambda_psi and spd.lambda_adv must be >= 0")

    @property
    def weights(self):
        return SpdWeights(self.lambda_psi, self.lambda_adv)

    @property
    def enabled(self):
        return self.ablation_mode != "none"


@dataclass
class SpdLossReport:
    j_encoder_adv: float
    j_discriminator: float
    j_inverse: float
    j_forward: float
    j_dynamics: float
    j_total: float
    # Weights the joint step actually used; zero for terms the ablation drops.
    lambda_psi: float = 0.0
    lambda_adv: float = 0.0
    inferred_action_tilde: torch.Tensor = field(repr=False, default=None)
    inferred_action_bar: torch.Tensor = field(repr=False, default=None)
    predicted_strong_next: torch.Tensor = field(repr=False, default=None)
    predicted_weak_next: torch.Tensor = field(repr=False, default=None)

    def as_row(self):
        return {
            "j_encoder_adv": self.j_encoder_adv,
            "j_discriminator": self.j_discriminator,
            "j_inverse": self.j_inverse,
            "j_forward": self.j_forward,
            "j_dynamics": self.j_dynamics,
            "j_total": self.j_total,
            "lambda_psi_eff": self.lambda_psi,
            "lambda_adv_eff": self.lambda_adv,
        }


def _check_pair(z_w, z_s):
    if z_w.shape != z_s.shape:
        raise ShapeError(f"latent shapes differ: {tuple(z_w.shape)} vs {tuple(z_s.shape)}")


def frozen_scores(discriminator, z):
    """D(z) with D's parameters cut out of the graph; gradients still reach z."""
    params = {name: p.detach() for name, p in discriminator.named_parameters()}
    buffers = dict(discriminator.named_buffers())
    return functional_call(discriminator, {**params, **buffers}, (z,))


def encoder_adv_loss(discriminator, z_w, z_s):
    """Mean of -log sigmoid(D(z_s) - D(z_w)) = softplus(-(D(z_s) - D(z_w)))."""
    _check_pair(z_w, z_s)
    gap = frozen_scores(discriminator, z_s) - frozen_scores(discriminator, z_w)
    return F.softplus(-gap).mean()


def discriminator_loss(discriminator, z_w, z_s):
    """Mean of -log sigmoid(D(z_w) - D(z_s)) on detached latents."""
    _check_pair(z_w, z_s)
    gap = discriminator(z_w.detach()) - discriminator(z_s.detach())
    return F.softplus(-gap).mean()


def inverse_loss(inverse_model, z_w_t, z_s_t, z_w_t1, z_s_t1, a_t):
    """Squared error of both cross-paired action inferences, halved, averaged over batch and dims.

    a_tilde = I(weak_t, strong_{t+1}), a_bar = I(strong_t, weak_{t+1}).
    """
    a_tilde = inverse_model(z_w_t, z_s_t1)
    a_bar = inverse_model(z_s_t, z_w_t1)
    if a_tilde.shape != a_t.shape:
        raise ShapeError(f"inferred actions {tuple(a_tilde.shape)} vs actions {tuple(a_t.shape)}")
    loss = ((a_tilde - a_t).pow(2) + (a_bar - a_t).pow(2)).mean() / 2
    return loss, a_tilde, a_bar


def negative_cosine(u, v, eps=COSINE_EPS):
    """-<u, v> / (|u| |v| + eps), per row."""
    return -(u * v).sum(-1) / (u.norm(dim=-1) * v.norm(dim=-1) + eps)


def forward_loss(
    forward_model,
    z_w_t,
    z_s_t,
    a_tilde,
    a_bar,
    z_w_t1,
    z_s_t1,
    detach_targets=True,
    return_predictions=False,
):
    """Mean negative cosine between chained predictions and the next latents.

    strong: F(z_s_t, a_tilde) vs z_s_t1; weak: F(z_w_t, a_bar) vs z_w_t1.
    """
    pred_strong = forward_model(z_s_t, a_tilde)
    pred_weak = forward_model(z_w_t, a_bar)
    target_strong = z_s_t1.detach() if detach_targets else z_s_t1
    target_weak = z_w_t1.detach() if detach_targets else z_w_t1
    loss = (
        negative_cosine(pred_strong, target_strong).mean()
        + negative_cosine(pred_weak, target_weak).mean()
    ) / 2
    if return_predictions:
        return loss, pred_strong, pred_weak
    return loss


def spd_total(weights, j_dynamics, j_encoder_adv):
    """lambda_psi * J(psi) + lambda_A * J(phi); works on floats and tensors."""
    return weights.lambda_psi * j_dynamics + weights.lambda_adv * j_encoder_adv


class SpdModules:
    """Dynamics heads, discriminator and the three optimizers of the SPD step."""

    def __init__(self, encoder, net_config, spd_config, action_dim):
        self.encoder = encoder
        self.config = spd_config
        self.inverse_model, self.forward_model = build_dynamics(net_config, action_dim)
        self.discriminator = build_discriminator(net_config)

        self.dynamics_optimizer = torch.optim.Adam(
            list(self.inverse_model.parameters()) + list(self.forward_model.parameters()),
            lr=spd_config.dynamics_lr,
        )
        self.discriminator_optimizer = torch.optim.Adam(
            self.discriminator.parameters(), lr=spd_config.discriminator_lr
        )
        self.encoder_optimizer = torch.optim.Adam(
            self.encoder.parameters(), lr=spd_config.encoder_lr
        )

    def modules(self):
        return {
            "inverse": self.inverse_model,
            "forward": self.forward_model,
            "discriminator": self.discriminator,
        }

    def optimizer_state_dict(self):
        return {
            "dynamics": self.dynamics_optimizer.state_dict(),
            "discriminator": self.discriminator_optimizer.state_dict(),
            "encoder": self.encoder_optimizer.state_dict(),
        }

    def load_optimizer_state_dict(self, state):
        self.dynamics_optimizer.load_state_dict(state["dynamics"])
        self.discriminator_optimizer.load_state_dict(state["discriminator"])
        self.encoder_optimizer.load_state_dict(state["encoder"])


def discriminator_step(spd, z_w, z_s, step=True):
    """One descent step of D on detached latents; the encoder is never touched."""
    loss = discriminator_loss(spd.discriminator, z_w, z_s)
    if step:
        spd.discriminator_optimizer.zero_grad()
        loss.backward()
        spd.discriminator_optimizer.step()
    return loss


def spd_update_step(spd, views, action, weights=None, ablation_mode=None):
    """One discriminator step, then one joint phi/I/F step on the weighted objective.

    ``views`` carries the weak and strong augmentations of S and S'. The
    ablation mode masks which terms enter the joint step; dropped heads are
    not stepped at all.
    """
    if action.shape[0] == 0 or views.obs_weak.shape[0] == 0:
        raise InvalidArgumentError("spd_update_step needs a non-empty minibatch")
    if views.obs_strong is None or views.next_strong is None:
        raise InvalidArgumentError("spd_update_step needs strong views")
    weights = weights or spd.config.weights
    mode = ablation_mode or spd.config.ablation_mode
    if mode not in ablation_terms:
        raise InvalidArgumentError(f"ablation mode '{mode}' has no SPD step")
    terms = ablation_terms[mode]

    n = views.obs_weak.shape[0]
    latents = spd.encoder(
        torch.cat((views.obs_weak, views.obs_strong, views.next_weak, views.next_strong), dim=0)
    )
    z_w, z_s, z_w1, z_s1 = latents.split(n, dim=0)

    # Discriminator first; latents are detached inside the loss.
    j_disc = discriminator_step(spd, z_w, z_s, step=terms["disc_step"])

    # Joint step against the freshly updated, frozen discriminator.
    j_adv = encoder_adv_loss(spd.discriminator, z_w, z_s)
    j_inv, a_tilde, a_bar = inverse_loss(spd.inverse_model, z_w, z_s, z_w1, z_s1, action)
    chained_tilde, chained_bar = a_tilde, a_bar
    if spd.config.detach_inferred_actions:
        chained_tilde, chained_bar = a_tilde.detach(), a_bar.detach()
    j_fwd, pred_strong, pred_weak = forward_loss(
        spd.forward_model,
        z_w,
        z_s,
        chained_tilde,
        chained_bar,
        z_w1,
        z_s1,
        detach_targets=spd.config.detach_forward_targets,
        return_predictions=True,
    )

    uses_dynamics = terms["inverse"] or terms["forward"]
    effective = SpdWeights(
        weights.lambda_psi if uses_dynamics else 0.0,
        weights.lambda_adv if terms["adversarial"] else 0.0,
    )
    j_dyn = (j_inv if terms["inverse"] else 0.0) + (j_fwd if terms["forward"] else 0.0)
    objective = spd_total(effective, j_dyn, j_adv)

    spd.encoder_optimizer.zero_grad()
    spd.dynamics_optimizer.zero_grad()
    spd.discriminator_optimizer.zero_grad()
    objective.backward()
    spd.encoder_optimizer.step()
    if uses_dynamics:
        spd.dynamics_optimizer.step()

    j_inverse = float(j_inv.item())
    j_forward = float(j_fwd.item())
    j_encoder_adv = float(j_adv.item())
    # Only the dynamics terms that entered the objective count towards j_dynamics.
    reported_dyn = (j_inverse if terms["inverse"] else 0.0) + (j_forward if terms["forward"] else 0.0)
    report = SpdLossReport(
        j_encoder_adv=j_encoder_adv,
        j_discriminator=float(j_disc.item()),
        j_inverse=j_inverse,
        j_forward=j_forward,
        j_dynamics=reported_dyn,
        j_total=spd_total(effective, reported_dyn, j_encoder_adv),
        lambda_psi=effective.lambda_psi,
        lambda_adv=effective.lambda_adv,
        inferred_action_tilde=a_tilde.detach(),
        inferred_action_bar=a_bar.detach(),
        predicted_strong_next=pred_strong.detach(),
        predicted_weak_next=pred_weak.detach(),
    )
    logger.debug("SPD step (%s): %s", mode, report.as_row())
    return report
