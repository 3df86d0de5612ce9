import argparse
import logging
import os
import sys
from pathlib import Path

import pandas as pd

from src.analysis.evaluation import evaluate, generalization_eval, random_policy_baseline
from src.analysis.representation import (
    collect_paired_observations,
    export_latents,
    run_distance_suite,
)
from src.analysis.sweep import sweep
from src.analysis.trainer import load_run, train, train_seeds
from src.config import config_hash, load_config
from src.errors import ConfigurationError, InvalidArgumentError, SpdError
from src.mappings import background_labels, sweep_grids

logger = logging.getLogger(__name__)

RUN_ROOT_ENV = "SPD_RUN_ROOT"
EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class CliParser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so the caller owns the exit code."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def run_root():
    return Path(os.environ.get(RUN_ROOT_ENV, "runs"))


def parse_runs(items):
    """['spd=runs/a', 'sac=runs/b'] -> {'spd': Path, 'sac': Path}."""
    runs = {}
    for item in items or []:
        name, sep, path = item.partition("=")
        if not sep or not name or not path:
            raise UsageError(f"Malformed --runs item '{item}' (expected name=dir)")
        runs[name] = Path(path)
    return runs


def parse_background_pairs(items):
    pairs = []
    for item in items:
        a, sep, b = item.partition(":")
        if not sep or a not in background_labels or b not in background_labels:
            raise UsageError(f"Malformed --pair '{item}' (expected bg_a:bg_b)")
        pairs.append((a, b))
    return pairs


def add_config_args(parser):
    parser.add_argument("--config", help="Profile file of 'key = value' lines (e.g. configs/desk.cfg)")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Dotted override, repeatable (e.g. --set spd.lambda_psi=0.2)",
    )


def build_parser():
    parser = CliParser(
        prog="main.py",
        description="Self-predictive dynamics for pixel-based control: train, evaluate, sweep.",
    )
    parser.add_argument("--log-level", default="INFO", help="Logging level (default INFO)")
    verbs = parser.add_subparsers(dest="verb", metavar="VERB", parser_class=CliParser)
    verbs.required = True

    p = verbs.add_parser("train", help="Train one seed (or every configured seed)")
    add_config_args(p)
    p.add_argument("--seed", type=int, help="Train this seed only (default: every train.seeds entry)")
    p.add_argument("--run-dir", help=f"Output directory (default: ${RUN_ROOT_ENV}/train_<hash>)")
    p.add_argument("--resume", action="store_true", help="Continue from the run's checkpoint")

    p = verbs.add_parser("eval", help="Evaluate a trained run and the random-policy floor")
    p.add_argument("--run-dir", required=True, help="Trained run directory")
    p.add_argument("--episodes", type=int, help="Episodes (default: train.eval_episodes)")
    p.add_argument("--background", choices=background_labels, help="Background to evaluate on")
    p.add_argument("--baseline-episodes", type=int, default=100, help="Random-policy episodes (0 skips)")
    p.add_argument("--seed", type=int, default=0, help="Evaluation seed")

    p = verbs.add_parser("generalize", help="Evaluate a run on its training and a held-out background")
    p.add_argument("--run-dir", required=True, help="Trained run directory")
    p.add_argument("--train-bg", choices=background_labels, help="Default: the run's env.background")
    p.add_argument("--test-bg", required=True, choices=background_labels)
    p.add_argument("--episodes", type=int, help="Episodes (default: train.eval_episodes)")
    p.add_argument("--seed", type=int, default=0, help="Evaluation seed")

    p = verbs.add_parser("distance", help="Paired-observation latent distance table")
    p.add_argument("--runs", nargs="+", required=True, metavar="NAME=DIR", help="Method runs; include 'spd'")
    p.add_argument(
        "--pair",
        action="append",
        metavar="BG_A:BG_B",
        help="Background pair per location (default: default:simple_distractor, default:textured_video)",
    )
    p.add_argument("--pairs", type=int, default=50, help="Observation pairs per location")
    p.add_argument("--reference", default="spd", help="Method the table is normalized to")
    p.add_argument("--output", help="Output directory (default: $SPD_RUN_ROOT/distance)")
    p.add_argument("--seed", type=int, default=0)

    p = verbs.add_parser("sweep", help="lambda_psi x lambda_adv grid")
    add_config_args(p)
    p.add_argument("--grid", default="full", choices=sorted(sweep_grids), help="Named grid")
    p.add_argument("--seed", type=int, action="append", help="Seeds (repeatable; default train.seeds)")
    p.add_argument("--workers", type=int, default=1, help="Parallel cell processes")
    p.add_argument("--run-dir", help="Output directory (default: $SPD_RUN_ROOT/sweep_<hash>)")

    p = verbs.add_parser("export-latents", help="Write latents of paired observations as CSV")
    p.add_argument("--run-dir", required=True, help="Trained run directory")
    p.add_argument("--backgrounds", nargs=2, default=["default", "simple_distractor"], choices=background_labels)
    p.add_argument("--pairs", type=int, default=50, help="States rendered per background")
    p.add_argument("--output", help="CSV path (default: <run-dir>/latents.csv)")
    p.add_argument("--seed", type=int, default=0)
    return parser


def cmd_train(args):
    config = load_config(args.config, args.overrides)
    run_dir = Path(args.run_dir) if args.run_dir else run_root() / f"train_{config_hash(config)[:12]}"
    if args.seed is not None:
        done = [train(config, run_dir, seed=args.seed, resume=args.resume)]
    else:
        done = train_seeds(config, run_dir, resume=args.resume)
    for path in done:
        print(f"Run written: {path}")


def cmd_eval(args):
    snapshot = load_run(args.run_dir)
    config = snapshot.config
    episodes = args.episodes or config.eval_episodes
    background = args.background or config.env.background
    result = evaluate(snapshot.learner.policy, config.env, episodes, args.seed, background=background)
    row = {"background": background, "episodes": episodes, "mean": result.mean, "std": result.std}
    if args.baseline_episodes > 0:
        floor = random_policy_baseline(config.env, args.baseline_episodes, args.seed, background)
        row["random_floor"] = floor.mean
    frame = pd.DataFrame([row])
    frame.to_csv(Path(args.run_dir) / "eval.csv", index=False)
    print(frame.to_string(index=False))


def cmd_generalize(args):
    snapshot = load_run(args.run_dir)
    config = snapshot.config
    row = generalization_eval(
        snapshot.learner.policy,
        config.env,
        args.train_bg or config.env.background,
        args.test_bg,
        args.episodes or config.eval_episodes,
        args.seed,
    )
    path = Path(args.run_dir) / "generalization.csv"
    row.to_csv(path, mode="a", header=not path.exists(), index=False)
    print(row.to_string(index=False))


def cmd_distance(args):
    runs = parse_runs(args.runs)
    pairs = parse_background_pairs(args.pair or ["default:simple_distractor", "default:textured_video"])
    snapshots = {name: load_run(path) for name, path in runs.items()}
    env_config = next(iter(snapshots.values())).config.env
    pair_sets = {}
    for a, b in pairs:
        obs_a, obs_b, _ = collect_paired_observations(env_config, a, b, args.pairs, args.seed)
        pair_sets[f"{a} vs {b}"] = (obs_a, obs_b)
    encoders = {name: snap.learner.encoder for name, snap in snapshots.items()}
    output = Path(args.output) if args.output else run_root() / "distance"
    table = run_distance_suite(encoders, pair_sets, output, reference=args.reference)
    print(table.round(3).to_string())


def cmd_sweep(args):
    config = load_config(args.config, args.overrides)
    root = Path(args.run_dir) if args.run_dir else run_root() / f"sweep_{config_hash(config)[:12]}"
    table = sweep(config, args.grid, root, seeds=args.seed, workers=args.workers)
    print(table.to_string(index=False))


def cmd_export_latents(args):
    snapshot = load_run(args.run_dir)
    bg_a, bg_b = args.backgrounds
    obs_a, obs_b, labels = collect_paired_observations(
        snapshot.config.env, bg_a, bg_b, args.pairs, args.seed
    )
    output = Path(args.output) if args.output else Path(args.run_dir) / "latents.csv"
    export_latents(
        snapshot.learner.encoder,
        list(obs_a) + list(obs_b),
        labels + labels,
        [bg_a] * len(labels) + [bg_b] * len(labels),
        output,
    )
    print(f"Latents written: {output}")


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "generalize": cmd_generalize,
    "distance": cmd_distance,
    "sweep": cmd_sweep,
    "export-latents": cmd_export_latents,
}


def parse_and_dispatch(argv=None):
    """Runs one verb; 0 on success, 1 on runtime failure, 2 on usage errors."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(str(e), file=sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        COMMANDS[args.verb](args)
    except (UsageError, ConfigurationError, InvalidArgumentError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (SpdError, RuntimeError, OSError) as e:
        logger.exception("Run failed")
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def main():
    return parse_and_dispatch(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
