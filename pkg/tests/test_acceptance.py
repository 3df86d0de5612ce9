"""Desk-profile reproductions: three ablations x three seeds on the toy task.

Expensive (tens of minutes per run on a CPU); run with ``pytest -m slow``.
"""

import numpy as np
import pytest

from src.analysis.evaluation import generalization_eval
from src.analysis.representation import collect_paired_observations, representation_distance
from src.analysis.sweep import final_eval_return
from src.analysis.trainer import load_run, random_floor, train
from src.config import load_config, with_overrides

pytestmark = pytest.mark.slow

MODES = {"spd": "full", "dynamics_free": "discriminator_only", "sac": "none"}
PAIRINGS = [("default", "simple_distractor"), ("default", "textured_video"), ("simple_distractor", "textured_video")]


@pytest.fixture(scope="module")
def desk():
    return load_config("configs/desk.cfg")


@pytest.fixture(scope="module")
def desk_runs(desk, tmp_path_factory):
    """{method: {seed: run_dir}} for every ablation and configured seed."""
    root = tmp_path_factory.mktemp("desk")
    return {
        method: {
            seed: train(with_overrides(desk, {"spd.ablation_mode": mode}), root / method / f"seed_{seed}", seed=seed)
            for seed in desk.seeds
        }
        for method, mode in MODES.items()
    }


def test_spd_clears_three_times_the_random_floor(desk, desk_runs):
    finals = [final_eval_return(run_dir) for run_dir in desk_runs["spd"].values()]
    assert np.mean(finals) >= 3 * random_floor(desk.env)


def test_spd_generalizes_at_least_as_well_as_its_ablations(desk, desk_runs):
    def paired_test_return(method, seed):
        snapshot = load_run(desk_runs[method][seed])
        row = generalization_eval(
            snapshot.learner.policy, snapshot.config.env, "simple_distractor", "textured_video",
            desk.eval_episodes, seed,
        )
        return row["mean"].iloc[0]

    means = {method: np.mean([paired_test_return(method, seed) for seed in desk.seeds]) for method in MODES}
    assert means["spd"] >= means["dynamics_free"]
    assert means["spd"] >= means["sac"]


def test_sac_latents_drift_further_than_spd_across_backgrounds(desk, desk_runs):
    tables = []
    for seed in desk.seeds:
        pair_sets = {}
        for a, b in PAIRINGS:
            obs_a, obs_b, _ = collect_paired_observations(desk.env, a, b, 50, seed)
            pair_sets[f"{a} vs {b}"] = (obs_a, obs_b)
        encoders = {method: load_run(desk_runs[method][seed]).learner.encoder for method in ("spd", "sac")}
        table = representation_distance(encoders, pair_sets)
        assert table.attrs["normalized"]
        assert table.loc["spd"].tolist() == pytest.approx([1.0] * len(PAIRINGS))
        tables.append(table)

    sac = sum(t.loc["sac"] for t in tables) / len(tables)
    assert (sac > 1.0).sum() >= 2
