import math

import pandas as pd

from src.analysis.summary_analysis import eval_curve, run_comprehensive_summary, write_run_summary
from src.config import TrainConfig
from src.mappings import metrics_columns


def metrics(evals, updates=()):
    rows = []
    for raw_step, mean in evals:
        row = dict.fromkeys(metrics_columns, math.nan)
        row.update(event="eval", raw_step=raw_step, eval_return_mean=mean, eval_return_std=1.0)
        rows.append(row)
    for raw_step, j_total in updates:
        row = dict.fromkeys(metrics_columns, math.nan)
        row.update(event="update", raw_step=raw_step, j_total=j_total, critic_loss=0.5)
        rows.append(row)
    return pd.DataFrame(rows, columns=metrics_columns)


def test_eval_curve_mean_and_sem():
    curve = eval_curve([metrics([(40, 1.0), (80, 2.0)]), metrics([(40, 3.0), (80, 2.0)])])
    assert curve["raw_step"].tolist() == [40, 80]
    assert curve["mean"].tolist() == [2.0, 2.0]
    # std(1, 3) = sqrt(2); sem = sqrt(2) / sqrt(2) = 1.
    assert curve["sem"].iloc[0] == 1.0
    assert curve["sem"].iloc[1] == 0.0
    assert curve["n"].tolist() == [2, 2]


def test_eval_curve_single_seed_has_zero_sem():
    curve = eval_curve([metrics([(40, 1.0)])])
    assert curve["sem"].tolist() == [0.0]


def test_eval_curve_without_evals_is_empty():
    assert eval_curve([metrics([])]).empty


def test_run_comprehensive_summary_basic():
    result = run_comprehensive_summary(
        metrics([(40, 1.0), (80, 3.0), (120, 2.0)], updates=[(30, 0.25)]), floor=0.5
    )

    assert "RAW ENV STEPS: 120" in result[0]
    assert "TRAINING EPISODES: 0" in result[1]
    assert "LOGGED UPDATES: 1" in result[2]
    assert "EVALUATION:" in result
    assert " - Final Return: 2.00 +/- 1.00" in result
    assert " - Best Return: 3.00 at 80 steps" in result
    assert " - Random-Policy Floor: 0.50" in result
    assert " - Floor Multiple: 4.00x" in result
    assert " - j_total: 0.2500" in result
    assert " - critic_loss: 0.5000" in result
    # NaN losses are skipped.
    assert not any(line.startswith(" - alpha") for line in result)


def test_run_comprehensive_summary_without_evals():
    result = run_comprehensive_summary(metrics([]))
    assert "EVALUATION: none recorded" in result


def test_write_run_summary_header(tmp_path):
    path = write_run_summary(tmp_path, metrics([(40, 1.0)]), TrainConfig())
    lines = path.read_text().splitlines()
    assert lines[:3] == ["AGENT: sac", "ABLATION: full", "BACKGROUND: default"]
    assert "RAW ENV STEPS: 40" in lines


def test_summary_reports_wall_clock_minutes():
    frame = metrics([(40, 1.0), (80, 2.0)])
    frame["wall_clock"] = [30.0, 90.0]
    result = run_comprehensive_summary(frame)
    assert "WALL CLOCK: 1.5 min" in result

    assert not any(line.startswith("WALL CLOCK") for line in run_comprehensive_summary(metrics([(40, 1.0)])))
