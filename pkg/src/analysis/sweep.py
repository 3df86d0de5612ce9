"""lambda_psi x lambda_adv grid sweep. Cells are isolated: each (cell, seed)
trains into its own directory from its own seed, so results do not depend on
execution order or worker count."""

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import pandas as pd

from src.analysis.summary_analysis import eval_rows
from src.analysis.trainer import read_metrics, train
from src.charts import sweep_heatmap_chart
from src.config import with_overrides
from src.errors import InvalidArgumentError
from src.mappings import sweep_grids

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["lambda_psi", "lambda_adv", "mean_return", "std_return", "n_seeds"]


def resolve_grid(grid):
    """A named grid ("full", "small") or a {"lambda_psi": [...], "lambda_adv": [...]} dict."""
    if isinstance(grid, str):
        if grid not in sweep_grids:
            raise InvalidArgumentError(f"Unknown grid '{grid}' (choose from {', '.join(sweep_grids)})")
        grid = sweep_grids[grid]
    psi, adv = tuple(grid.get("lambda_psi", ())), tuple(grid.get("lambda_adv", ()))
    if not psi or not adv:
        raise InvalidArgumentError("sweep grid needs at least one lambda_psi and one lambda_adv")
    return {"lambda_psi": psi, "lambda_adv": adv}


def sweep_cells(grid):
    grid = resolve_grid(grid)
    return list(itertools.product(grid["lambda_psi"], grid["lambda_adv"]))


def cell_dir(root, lambda_psi, lambda_adv, seed):
    return Path(root) / f"psi_{lambda_psi:g}__adv_{lambda_adv:g}" / f"seed_{seed}"


def final_eval_return(run_dir):
    evals = eval_rows(read_metrics(run_dir))
    return float(evals["eval_return_mean"].iloc[-1])


def run_cell(base_config, lambda_psi, lambda_adv, seed, root):
    """Trains one (cell, seed); returns its final evaluation return."""
    config = with_overrides(base_config, {"spd.lambda_psi": lambda_psi, "spd.lambda_adv": lambda_adv})
    run_dir = train(config, cell_dir(root, lambda_psi, lambda_adv, seed), seed=seed)
    result = final_eval_return(run_dir)
    logger.info("Cell psi=%g adv=%g seed=%d: %.3f", lambda_psi, lambda_adv, seed, result)
    return {"lambda_psi": lambda_psi, "lambda_adv": lambda_adv, "seed": seed, "final_return": result}


def sweep(base_config, grid, root, seeds=None, workers=1):
    """One train + evaluate per grid cell per seed; returns the per-cell results table."""
    cells = sweep_cells(grid)
    seeds = tuple(seeds or base_config.seeds)
    jobs = [(psi, adv, seed) for psi, adv in cells for seed in seeds]
    root = Path(root)
    logger.info("Sweeping %d cells x %d seeds into %s", len(cells), len(seeds), root)

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_cell, base_config, psi, adv, s, root) for psi, adv, s in jobs]
            results = [f.result() for f in futures]
    else:
        results = [run_cell(base_config, psi, adv, s, root) for psi, adv, s in jobs]

    per_seed = pd.DataFrame(results).sort_values(["lambda_psi", "lambda_adv", "seed"])
    table = (
        per_seed.groupby(["lambda_psi", "lambda_adv"], sort=True)["final_return"]
        .agg(mean_return="mean", std_return=lambda s: s.std(ddof=0), n_seeds="count")
        .reset_index()
    )[SWEEP_COLUMNS]

    root.mkdir(parents=True, exist_ok=True)
    per_seed.to_csv(root / "sweep_seeds.csv", index=False)
    table.to_csv(root / "sweep.csv", index=False)
    sweep_heatmap_chart(table, "Sweep Mean Return", root)
    return table
