"""Representation analysis: same-state observation pairs under two backgrounds,
latent distances between them, and latent exports for external projection."""

import logging
from pathlib import Path

import numpy as np
import pandas as pd
import torch

from src.charts import bar_chart
from src.errors import InvalidArgumentError, ShapeError
from src.nets import to_tensor
from src.pixelenv import PhysState, PixelControlEnv, make_background
from src.seeding import stream_seed

logger = logging.getLogger(__name__)

MIN_PAIRS = 50
REFERENCE_METHOD = "spd"


def collect_paired_observations(env_config, bg_a, bg_b, n_pairs, seed):
    """n_pairs random physical states, each rendered over background a and b.

    Returns (obs_a, obs_b, labels); obs arrays are [n_pairs, C, H, W].
    """
    if n_pairs < 1:
        raise InvalidArgumentError("n_pairs must be >= 1")
    rng = np.random.default_rng(stream_seed(seed, "pairs"))
    background_a = make_background(env_config, bg_a)
    background_b = make_background(env_config, bg_b)
    env = PixelControlEnv(env_config, background=background_a)

    obs_a, obs_b, labels = [], [], []
    for i in range(n_pairs):
        state = PhysState(
            rng.uniform(-0.8, 0.8, size=2),
            rng.uniform(-0.5, 0.5, size=2),
            rng.uniform(-0.8, 0.8, size=2),
            0,
        )
        phase = int(rng.integers(0, 1000))
        for bg in (background_a, background_b):
            bg.reset(int(rng.integers(0, 2**31 - 1)))
            bg.advance(phase)
        a, b = env.paired_observation(state, background_a, background_b)
        obs_a.append(a)
        obs_b.append(b)
        labels.append(f"state_{i:04d}")
    return np.stack(obs_a), np.stack(obs_b), labels


def encode_batch(encoder, obs, batch_size=256):
    chunks = []
    with torch.no_grad():
        for start in range(0, len(obs), batch_size):
            chunks.append(encoder(to_tensor(obs[start : start + batch_size])))
    return torch.cat(chunks).numpy().astype(np.float64)


def mean_pair_distance(z_a, z_b):
    """Mean L2 distance between matching rows of two latent arrays."""
    z_a, z_b = np.asarray(z_a, dtype=np.float64), np.asarray(z_b, dtype=np.float64)
    if z_a.shape != z_b.shape:
        raise ShapeError(f"latent arrays differ: {z_a.shape} vs {z_b.shape}")
    return float(np.linalg.norm(z_a - z_b, axis=-1).mean())


def representation_distance(encoders, pair_sets, reference=REFERENCE_METHOD, min_pairs=MIN_PAIRS):
    """Methods x locations table of mean paired-latent distance.

    ``encoders`` maps method name -> encoder; ``pair_sets`` maps location name
    -> (obs_a, obs_b). Each column is divided by the reference method's value
    so the reference reads 1.00. If any reference value is 0 the raw table is
    returned instead; ``attrs["normalized"]`` says which one you got.
    """
    if len(encoders) < 2:
        raise InvalidArgumentError("representation_distance needs at least two methods")
    if reference not in encoders:
        raise InvalidArgumentError(f"reference method '{reference}' not among {sorted(encoders)}")
    for location, (obs_a, obs_b) in pair_sets.items():
        if len(obs_a) < min_pairs:
            raise InvalidArgumentError(f"location '{location}' has {len(obs_a)} pairs, need {min_pairs}")

    raw = pd.DataFrame(
        {
            location: {
                name: mean_pair_distance(encode_batch(enc, obs_a), encode_batch(enc, obs_b))
                for name, enc in encoders.items()
            }
            for location, (obs_a, obs_b) in pair_sets.items()
        }
    )
    raw = raw.loc[list(encoders)]

    reference_row = raw.loc[reference]
    if (reference_row == 0).any():
        logger.warning("Reference distance is 0; reporting raw distances")
        raw.attrs["normalized"] = False
        return raw
    table = raw / reference_row
    table.attrs["normalized"] = True
    return table


def run_distance_suite(encoders, pair_sets, output_dir, reference=REFERENCE_METHOD):
    """Writes representation_distance.csv and one bar chart per location."""
    table = representation_distance(encoders, pair_sets, reference=reference)
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    table.to_csv(output_dir / "representation_distance.csv", index_label="method")
    label = "Normalized distance" if table.attrs.get("normalized") else "Mean L2 distance"
    for location in table.columns:
        bar_chart(
            table[location],
            f"Representation Distance ({location})",
            "Method",
            label,
            output_dir,
        )
    return table


def export_latents(encoder, obs, labels, backgrounds, path):
    """One row per observation: state label, background kind, latent values."""
    if not len(obs) == len(labels) == len(backgrounds):
        raise InvalidArgumentError("obs, labels and backgrounds must have the same length")
    latents = encode_batch(encoder, np.asarray(obs))
    frame = pd.DataFrame(latents, columns=[f"z{i}" for i in range(latents.shape[1])])
    frame.insert(0, "background", list(backgrounds))
    frame.insert(0, "state", list(labels))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.9g")
    logger.info("Exported %d latents to %s", len(frame), path)
    return path
