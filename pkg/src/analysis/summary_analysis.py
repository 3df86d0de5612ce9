import logging
from pathlib import Path

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

SUMMARY_NAME = "summary.txt"


def eval_rows(metrics):
    return metrics[metrics["event"] == "eval"]


def eval_curve(metrics_frames):
    """Mean and standard error of eval return per raw step, across seed runs."""
    evals = [
        eval_rows(m)[["raw_step", "eval_return_mean"]].set_index("raw_step")["eval_return_mean"]
        for m in metrics_frames
    ]
    evals = [e for e in evals if not e.empty]
    if not evals:
        return pd.DataFrame(columns=["raw_step", "mean", "sem", "n"])

    table = pd.concat(evals, axis=1)
    n = table.notna().sum(axis=1)
    sem = table.std(axis=1, ddof=1) / np.sqrt(n)
    # A single seed has no spread to report.
    sem = sem.where(n > 1, 0.0)
    curve = pd.DataFrame({"mean": table.mean(axis=1), "sem": sem, "n": n})
    return curve.rename_axis("raw_step").reset_index()


def run_comprehensive_summary(metrics, floor=None):
    """Report lines for one run: eval trajectory, last SPD losses, floor multiple."""
    report_lines = []
    evals = eval_rows(metrics)
    episodes = metrics[metrics["event"] == "episode"]
    updates = metrics[metrics["event"] == "update"]

    last_step = int(metrics["raw_step"].max()) if not metrics.empty else 0
    report_lines.append(f"RAW ENV STEPS: {last_step}")
    report_lines.append(f"TRAINING EPISODES: {len(episodes)}")
    report_lines.append(f"LOGGED UPDATES: {len(updates)}")
    if metrics["wall_clock"].notna().any():
        report_lines.append(f"WALL CLOCK: {metrics['wall_clock'].max() / 60:.1f} min")
    report_lines.append("")

    if evals.empty:
        report_lines.append("EVALUATION: none recorded")
    else:
        final = evals.iloc[-1]
        best = evals.loc[evals["eval_return_mean"].idxmax()]
        report_lines.append("EVALUATION:")
        report_lines.append(
            f" - Final Return: {final['eval_return_mean']:.2f} +/- {final['eval_return_std']:.2f}"
        )
        report_lines.append(
            f" - Best Return: {best['eval_return_mean']:.2f} at {int(best['raw_step'])} steps"
        )
        if floor is not None and floor > 0:
            report_lines.append(f" - Random-Policy Floor: {floor:.2f}")
            report_lines.append(f" - Floor Multiple: {final['eval_return_mean'] / floor:.2f}x")

    if not updates.empty:
        last = updates.iloc[-1]
        report_lines.append("")
        report_lines.append("LAST UPDATE LOSSES:")
        for column in ("j_total", "j_encoder_adv", "j_inverse", "j_forward", "critic_loss", "alpha"):
            if pd.notna(last[column]):
                report_lines.append(f" - {column}: {last[column]:.4f}")

    return report_lines


def write_run_summary(run_dir, metrics, config, floor=None):
    lines = [
        f"AGENT: {config.agent.kind}",
        f"ABLATION: {config.spd.ablation_mode}",
        f"BACKGROUND: {config.env.background}",
        "",
    ]
    lines.extend(run_comprehensive_summary(metrics, floor=floor))
    path = Path(run_dir) / SUMMARY_NAME
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.debug("Summary written to %s", path)
    return path
