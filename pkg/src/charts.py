import logging
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from matplotlib.ticker import MaxNLocator

logger = logging.getLogger(__name__)

# The Academic Grayscale Look for all the charts.
plt.style.use("grayscale")


def chart_path(title, output_dir):
    """File name from the chart title, inside output_dir (created if missing)."""
    os.makedirs(output_dir, exist_ok=True)
    clean_title = (
        title.replace(" ", "_").replace("(", "").replace(")", "").replace("/", "-") + ".png"
    )
    return os.path.join(output_dir, clean_title)


def _save(title, output_dir, dpi=None):
    save_path = chart_path(title, output_dir)
    # Save charts instead of plt.show(); Agg has no window.
    plt.savefig(save_path, dpi=dpi)
    # Closes the figure so long sweeps do not pile up memory.
    plt.close()
    logger.info("Chart saved: %s", save_path)
    return save_path


def bar_chart(series, title, xlabel, ylabel, output_dir, color=None):
    plt.figure(figsize=(10, 8))
    series.plot(kind="bar", color=color)
    plt.title(title, fontsize=16)
    plt.xlabel(xlabel, fontsize=14)
    plt.ylabel(ylabel)
    plt.xticks(rotation=45, ha="right", fontsize=12)
    plt.yticks(fontsize=12)
    plt.tight_layout()
    return _save(title, output_dir)


def learning_curve_chart(curves, title, output_dir, floor=None):
    """Mean eval return against raw env steps, one line per method.

    ``curves`` maps a method name to a DataFrame with columns raw_step, mean
    and sem (standard error over seeds). The band is mean +/- sem.
    """
    plt.figure(figsize=(12, 8))
    for name, frame in curves.items():
        x = frame["raw_step"].to_numpy()
        mean = frame["mean"].to_numpy()
        sem = np.nan_to_num(frame["sem"].to_numpy())
        plt.plot(x, mean, label=name, linewidth=2)
        plt.fill_between(x, mean - sem, mean + sem, alpha=0.2)

    if floor is not None:
        plt.axhline(floor, linestyle="--", color="black", linewidth=1, label="random policy")

    plt.title(title, fontsize=16)
    plt.xlabel("Environment steps", fontsize=14)
    plt.ylabel("Average return", fontsize=14)
    plt.gca().xaxis.set_major_locator(MaxNLocator(integer=True))
    plt.legend()
    plt.tight_layout()
    return _save(title, output_dir)


def sweep_heatmap_chart(table, title, output_dir):
    """Heat map of mean return over the (lambda_psi, lambda_adv) grid."""
    grid = table.pivot(index="lambda_psi", columns="lambda_adv", values="mean_return")
    grid = grid.sort_index().sort_index(axis=1)

    plt.figure(figsize=(10, 8))
    image = plt.imshow(grid.to_numpy(), cmap="gray", origin="lower", aspect="auto")
    plt.colorbar(image, label="Mean return")
    plt.xticks(range(len(grid.columns)), [f"{v:g}" for v in grid.columns], fontsize=12)
    plt.yticks(range(len(grid.index)), [f"{v:g}" for v in grid.index], fontsize=12)

    # Cell values printed on top; white text on the dark end of the scale.
    values = grid.to_numpy()
    middle = np.nanmean(values) if np.isfinite(values).any() else 0.0
    for i in range(values.shape[0]):
        for j in range(values.shape[1]):
            if np.isfinite(values[i, j]):
                plt.text(
                    j,
                    i,
                    f"{values[i, j]:.1f}",
                    ha="center",
                    va="center",
                    color="white" if values[i, j] < middle else "black",
                    fontsize=11,
                )

    plt.title(title, fontsize=16, pad=20)
    plt.xlabel("lambda_adv", fontsize=14)
    plt.ylabel("lambda_psi", fontsize=14)
    plt.tight_layout()
    return _save(title, output_dir, dpi=150)
