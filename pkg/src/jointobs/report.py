"""Report writing: delimited outputs, decision logs, and rendered figures.

All outputs are byte-stable across reruns with the same seed: rows are written
in a fixed order, JSON keys are sorted, and figures carry no timestamps.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .config import EngineConfig
from .harness import AccuracyMatrix, LearningTrajectory
from .scenarios import DISRUPTION_IDS, OCCUPATION_IDS

MATRIX_HEADER = "disruption,occupation,group,accuracy,n_decision"

# Figures must not drift between runs of the same seed.
_PNG_METADATA = {"Software": "jointobs"}


def _format_accuracy(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.6f}"


def write_matrix_csv(matrix: AccuracyMatrix, path: Union[str, Path]) -> Path:
    """One row per (disruption, occupation, group) cell, in fixed sweep order."""
    path = Path(path)
    lines = [MATRIX_HEADER]
    for disruption_id in DISRUPTION_IDS:
        for occupation_id in OCCUPATION_IDS:
            for group_id in matrix.group_ids:
                key = (disruption_id, occupation_id, group_id)
                value = matrix.values[key]
                n = len(matrix.logs[key])
                lines.append(
                    f"{disruption_id},{occupation_id},{group_id},{_format_accuracy(value)},{n}"
                )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_decision_log(matrix: AccuracyMatrix, path: Union[str, Path]) -> Path:
    """One JSON line per decision, keyed by its cell."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for disruption_id in DISRUPTION_IDS:
            for occupation_id in OCCUPATION_IDS:
                for group_id in matrix.group_ids:
                    for record in matrix.logs[(disruption_id, occupation_id, group_id)]:
                        row = {
                            "cell": {
                                "disruption": disruption_id,
                                "occupation": occupation_id,
                                "group": group_id,
                            },
                            **record.to_dict(),
                        }
                        fh.write(json.dumps(row, sort_keys=True) + "\n")
    return path


def write_trajectory_csv(
    trajectories: Sequence[LearningTrajectory], path: Union[str, Path]
) -> Path:
    path = Path(path)
    lines = ["user,round,probability,acted,feedback"]
    for trajectory in trajectories:
        for row in trajectory.rounds:
            lines.append(
                f"{trajectory.user},{row.round_number},{row.probability:.12f},"
                f"{str(row.acted).lower()},{row.feedback.value}"
            )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_effective_config(config: EngineConfig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(json.dumps(config.to_echo_dict(), indent=2, sort_keys=True) + "\n")
    return path


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------


def render_matrix_figure(matrix: AccuracyMatrix, path: Union[str, Path]) -> Path:
    """Six heatmap panels, one per disruption: groups on y, occupations on x."""
    path = Path(path)
    groups = list(matrix.group_ids)
    fig, axes = plt.subplots(2, 3, figsize=(16, 7), constrained_layout=True)
    for idx, disruption_id in enumerate(DISRUPTION_IDS):
        ax = axes.flat[idx]
        grid = np.full((len(groups), len(OCCUPATION_IDS)), np.nan)
        for gi, group_id in enumerate(groups):
            for oi, occupation_id in enumerate(OCCUPATION_IDS):
                value = matrix.values[(disruption_id, occupation_id, group_id)]
                if value is not None:
                    grid[gi, oi] = value * 100.0
        im = ax.imshow(grid, vmin=0.0, vmax=100.0, cmap="viridis", aspect="auto")
        ax.set_title(disruption_id)
        ax.set_xticks(range(len(OCCUPATION_IDS)), OCCUPATION_IDS, fontsize=6, rotation=90)
        ax.set_yticks(range(len(groups)), groups, fontsize=6)
        for gi in range(len(groups)):
            for oi in range(len(OCCUPATION_IDS)):
                if not np.isnan(grid[gi, oi]):
                    shade = "white" if grid[gi, oi] < 50 else "black"
                    ax.text(oi, gi, f"{grid[gi, oi]:.0f}", ha="center", va="center",
                            fontsize=5, color=shade)
    fig.colorbar(im, ax=axes.ravel().tolist(), shrink=0.8, label="accuracy (%)")
    fig.suptitle("Decision accuracy per disruption, occupation and sensor group")
    fig.savefig(path, dpi=150, metadata=_PNG_METADATA)
    plt.close(fig)
    return path


def render_learning_figure(
    trajectories: Sequence[LearningTrajectory], path: Union[str, Path]
) -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 4.5), constrained_layout=True)
    for trajectory in trajectories:
        rounds = [r.round_number for r in trajectory.rounds]
        ax.plot(rounds, trajectory.probabilities(), marker="o",
                label=f"User {trajectory.user}")
    ax.set_xlabel("round")
    ax.set_ylabel("action probability before the round")
    ax.set_ylim(-0.05, 1.05)
    ax.grid(True, alpha=0.3)
    ax.legend()
    ax.set_title("Learned action preference over feedback rounds")
    fig.savefig(path, dpi=150, metadata=_PNG_METADATA)
    plt.close(fig)
    return path


# ---------------------------------------------------------------------------
# Umbrella writers
# ---------------------------------------------------------------------------


def write_matrix_reports(
    matrix: AccuracyMatrix,
    destination: Union[str, Path],
    config: Optional[EngineConfig] = None,
    figures: bool = True,
) -> list[Path]:
    """Matrix CSV, per-decision log, config echo, and (optionally) the heatmaps."""
    dest = Path(destination)
    dest.mkdir(parents=True, exist_ok=True)
    written = [
        write_matrix_csv(matrix, dest / "matrix.csv"),
        write_decision_log(matrix, dest / "decisions.jsonl"),
    ]
    if config is not None:
        written.append(write_effective_config(config, dest / "effective_config.json"))
    if figures:
        figdir = dest / "figures"
        figdir.mkdir(exist_ok=True)
        written.append(render_matrix_figure(matrix, figdir / "accuracy_matrix.png"))
    return written


def write_learning_reports(
    trajectories: Sequence[LearningTrajectory],
    destination: Union[str, Path],
    config: Optional[EngineConfig] = None,
    figures: bool = True,
) -> list[Path]:
    dest = Path(destination)
    dest.mkdir(parents=True, exist_ok=True)
    written = [write_trajectory_csv(trajectories, dest / "trajectory.csv")]
    if config is not None:
        written.append(write_effective_config(config, dest / "effective_config.json"))
    if figures:
        figdir = dest / "figures"
        figdir.mkdir(exist_ok=True)
        written.append(render_learning_figure(trajectories, figdir / "learning_curves.png"))
    return written
