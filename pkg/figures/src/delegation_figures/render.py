"""Rendering for the four figure kinds.

Each renderer gets a list of (label, dataframe) groups and draws one visual
element per group. Data preparation is separated from drawing so tests can
assert on the numbers without parsing images.
"""

from __future__ import annotations

import warnings
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import pandas as pd

from .spec import DRAWS_COLUMNS, OBJECTIVES_COLUMNS, FigureSpec, SpecError

REQUIRED_COLUMNS = {
    "ParticipationScatter": DRAWS_COLUMNS,
    "ParticipationBars": DRAWS_COLUMNS,
    "ObjectiveCurves": OBJECTIVES_COLUMNS,
    "DecentVsExpenditure": OBJECTIVES_COLUMNS,
}


def load_groups(spec: FigureSpec) -> list[tuple[str, pd.DataFrame]]:
    """One (label, frame) pair per color group.

    Groups come from ``group_key`` when that column exists, otherwise from
    the input files themselves (labelled by their parent directory).
    """
    required = REQUIRED_COLUMNS[spec.kind]
    frames: list[tuple[str, pd.DataFrame]] = []
    for path in spec.inputs:
        frame = pd.read_csv(path)
        missing = [col for col in required if col not in frame.columns]
        if missing:
            raise SpecError(f"{path}: missing column(s) {', '.join(missing)}")
        frames.append((_file_label(path, spec.inputs), frame))

    if spec.group_key is not None:
        if all(spec.group_key in frame.columns for _, frame in frames):
            merged = pd.concat([frame for _, frame in frames], ignore_index=True)
            return [
                (str(value), group)
                for value, group in merged.groupby(spec.group_key, sort=True)
            ]
        raise SpecError(f"group_key {spec.group_key!r} not present in the inputs")
    if len(frames) == 1:
        return [("all", frames[0][1])]
    return frames


def _file_label(path: str, all_paths: tuple[str, ...]) -> str:
    parents = {Path(p).parent.name for p in all_paths}
    if len(parents) == len(all_paths):
        return Path(path).parent.name
    return str(path)


def participation_points(draws: pd.DataFrame) -> pd.DataFrame:
    """Delegated and pledged stake fractions for the stable draws."""
    stable = draws[draws["stable"] == 1].copy()
    total = stable["idle_stake"] + stable["delegated_stake"] + stable["pledged_stake"]
    stable["delegated_frac"] = stable["delegated_stake"] / total
    stable["pledged_frac"] = stable["pledged_stake"] / total
    return stable


def participation_means(draws: pd.DataFrame) -> dict[str, float]:
    stable = draws[draws["stable"] == 1]
    if stable.empty:
        return {"idle": 0.0, "delegated": 0.0, "pledged": 0.0}
    return {
        "idle": float(stable["idle_stake"].mean()),
        "delegated": float(stable["delegated_stake"].mean()),
        "pledged": float(stable["pledged_stake"].mean()),
    }


def objective_curves(objectives: pd.DataFrame) -> pd.DataFrame:
    """Mean decentralization and expenditure per reference index."""
    return (
        objectives.groupby("ref_index")[["decentralization", "expenditure"]]
        .mean()
        .reset_index()
    )


def render(spec: FigureSpec) -> list[Path]:
    """Draw the figure and write it as both PNG and SVG.

    Empty inputs produce an axes-only figure with a warning rather than an
    error.
    """
    groups = load_groups(spec)
    if all(frame.empty for _, frame in groups):
        warnings.warn(f"{spec.kind}: all inputs are empty; writing an empty figure")

    if spec.kind == "ParticipationScatter":
        fig = _participation_scatter(groups)
    elif spec.kind == "ParticipationBars":
        fig = _participation_bars(groups)
    elif spec.kind == "ObjectiveCurves":
        fig = _objective_curves(groups)
    else:
        fig = _decent_vs_expenditure(groups)

    return _write(fig, spec.out_path)


def _participation_scatter(groups) -> plt.Figure:
    fig, ax = plt.subplots(figsize=(6, 5))
    for label, frame in groups:
        points = participation_points(frame)
        ax.scatter(
            points["delegated_frac"], points["pledged_frac"], s=14, alpha=0.7, label=label
        )
    ax.set_xlabel("delegated stake fraction")
    ax.set_ylabel("pledged stake fraction")
    ax.set_title("Participation breakdown per stable draw")
    if len(groups) > 1:
        ax.legend()
    return fig


def _participation_bars(groups) -> plt.Figure:
    fig, ax = plt.subplots(figsize=(6, 5))
    categories = ("idle", "delegated", "pledged")
    width = 0.8 / max(1, len(groups))
    for g, (label, frame) in enumerate(groups):
        means = participation_means(frame)
        positions = [i + g * width for i in range(len(categories))]
        ax.bar(positions, [means[c] for c in categories], width=width, label=label)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(categories))])
    ax.set_xticklabels(categories)
    ax.set_ylabel("mean stake")
    ax.set_title("Mean stake by participation role")
    if len(groups) > 1:
        ax.legend()
    return fig


def _objective_curves(groups) -> plt.Figure:
    fig, (ax_dec, ax_exp) = plt.subplots(1, 2, figsize=(11, 4.5))
    for label, frame in groups:
        curves = objective_curves(frame)
        ax_dec.plot(curves["ref_index"], curves["decentralization"], label=label)
        ax_exp.plot(curves["ref_index"], curves["expenditure"], label=label)
    ax_dec.set_xlabel("reference pledge index")
    ax_dec.set_ylabel("decentralization")
    ax_exp.set_xlabel("reference pledge index")
    ax_exp.set_ylabel("expenditure")
    fig.suptitle("Objectives across representative equilibria")
    if len(groups) > 1:
        ax_dec.legend()
    return fig


def _decent_vs_expenditure(groups) -> plt.Figure:
    fig, ax = plt.subplots(figsize=(6, 5))
    for label, frame in groups:
        ax.scatter(
            frame["decentralization"], frame["expenditure"], s=10, alpha=0.6, label=label
        )
    ax.set_xlabel("decentralization")
    ax.set_ylabel("expenditure")
    ax.set_title("Decentralization vs expenditure per representative")
    if len(groups) > 1:
        ax.legend()
    return fig


def _write(fig: plt.Figure, out_path: str) -> list[Path]:
    base = Path(out_path)
    if base.suffix in (".png", ".svg"):
        base = base.with_suffix("")
    base.parent.mkdir(parents=True, exist_ok=True)
    written = []
    for ext in (".png", ".svg"):
        target = base.with_suffix(ext)
        fig.savefig(target, bbox_inches="tight")
        written.append(target)
    plt.close(fig)
    return written
