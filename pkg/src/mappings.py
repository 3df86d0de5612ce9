# Background kinds the environment can composite behind the agent.
background_labels = {
    "default": "Default",
    "simple_distractor": "Simple Distractor",
    "textured_video": "Textured Video",
    "frame_directory": "Frame Directory",
}

# Which SPD terms each ablation mode keeps (discriminator step, J(I), J(F), encoder adversarial term).
ablation_terms = {
    "full": {"disc_step": True, "inverse": True, "forward": True, "adversarial": True},
    "discriminator_only": {
        "disc_step": True, "inverse": False, "forward": False, "adversarial": True
    },
    "discriminator_inverse": {
        "disc_step": True, "inverse": True, "forward": False, "adversarial": True
    },
    "dynamics_only": {
        "disc_step": False, "inverse": True, "forward": True, "adversarial": False
    },
}

# "none" is the SPD-free baseline; the trainer skips the SPD step for it.
ablation_labels = {
    "full": "SPD",
    "discriminator_only": "Discriminator only",
    "discriminator_inverse": "Discriminator + inverse",
    "dynamics_only": "Dynamics only",
    "none": "SAC (no SPD)",
}

agent_labels = {
    "sac": "Soft Actor-Critic",
    "td3": "TD3",
}

# Strong-branch techniques, in the order the per-minibatch draw indexes them.
strong_techniques = ("grayscale", "random_convolution", "color_jitter", "cutout_color")

# ITU-R BT.601 luma weights.
luma_weights = (0.299, 0.587, 0.114)

# Hyperparameter grid for the objective-weight sensitivity sweep.
full_grid = {
    "lambda_psi": (1e-3, 1e-2, 1e-1, 1e0),
    "lambda_adv": (1e-4, 1e-3, 1e-2, 1e-1, 1e0),
}

small_grid = {
    "lambda_psi": (1e-2, 1e-1),
    "lambda_adv": (1e-3, 1e-2),
}

sweep_grids = {
    "full": full_grid,
    "small": small_grid,
}

# Fixed header of metrics.csv. One row per event.
metrics_columns = [
    "event",
    "step",
    "raw_step",
    "episode",
    "episode_return",
    "eval_return_mean",
    "eval_return_std",
    "j_encoder_adv",
    "j_discriminator",
    "j_inverse",
    "j_forward",
    "j_dynamics",
    "j_total",
    "lambda_psi_eff",
    "lambda_adv_eff",
    "critic_loss",
    "actor_loss",
    "alpha_loss",
    "alpha",
    "wall_clock",
]

# Foreground colours (RGB in [0,1]) are fixed so they never depend on the background.
foreground_colors = {
    "agent": (0.95, 0.35, 0.10),
    "trail": ((0.90, 0.55, 0.30), (0.80, 0.65, 0.45), (0.70, 0.70, 0.55)),
    "target": (0.10, 0.90, 0.30),
}
