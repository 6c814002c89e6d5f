"""Figure rendering: RMSE curves, bound comparisons and weight-function
stem plots from harness CSV files."""

from __future__ import annotations

from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .data import (
    MissingSeriesError,
    SchemaError,
    read_crlb_csv,
    read_sweep_csv,
    read_weights_csv,
)

__all__ = ["FigureSpec", "render", "KINDS"]

KINDS = ("rmse-snr", "rmse-snapshots", "crlb", "weights")

_AXIS_LABELS = {
    "snr": "SNR (dB)",
    "snapshots": "snapshots (count)",
}


@dataclass(frozen=True)
class FigureSpec:
    inputs: tuple[str, ...]
    kind: str
    output: str
    series: tuple[str, ...] = ()  # empty: every series found in the inputs
    log_y: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise ValueError("need at least one input CSV")


def _plot_rmse(spec: FigureSpec, axis_name: str, ax) -> None:
    drawn = 0
    for path in spec.inputs:
        table = read_sweep_csv(path)
        if table.axis != axis_name:
            raise SchemaError(
                f"{path}: sweep axis is {table.axis!r}, figure wants {axis_name!r}"
            )
        wanted = spec.series or table.estimators
        prefix = f"{path}: " if len(spec.inputs) > 1 else ""
        for name in wanted:
            x, y = table.series(name)
            ax.plot(x, y, marker="o", label=f"{prefix}{name}")
            drawn += 1
    if drawn == 0:
        raise MissingSeriesError("no series selected")
    ax.set_xlabel(_AXIS_LABELS[axis_name])
    ax.set_ylabel("RMSE (normalized angle)")


def _plot_crlb(spec: FigureSpec, ax) -> None:
    drawn = 0
    for path in spec.inputs:
        table = read_crlb_csv(path)
        wanted = spec.series or table.bound_names
        prefix = f"{path}: " if len(spec.inputs) > 1 else ""
        for name in wanted:
            x, y = table.series(name)
            ax.plot(x, y, marker="s", label=f"{prefix}{name}")
            drawn += 1
    if drawn == 0:
        raise MissingSeriesError("no series selected")
    ax.set_xlabel(_AXIS_LABELS["snr"])
    ax.set_ylabel("bound on RMSE (normalized angle)")


def _plot_weights(spec: FigureSpec, fig) -> None:
    axes = fig.subplots(len(spec.inputs), 1, squeeze=False)[:, 0]
    for ax, path in zip(axes, spec.inputs):
        table = read_weights_csv(path)
        ax.stem(table.lags, table.weights, basefmt=" ")
        ax.set_ylabel("w(m)")
        ax.set_title(path, fontsize=8)
    axes[-1].set_xlabel("lag m (sensor spacings)")


def render(spec: FigureSpec):
    """Draw the figure and write it to ``spec.output``.

    Returns the matplotlib figure so callers (and tests) can inspect the
    plotted data.
    """
    fig = plt.figure(figsize=(7.0, 4.5))
    if spec.kind == "weights":
        _plot_weights(spec, fig)
    else:
        ax = fig.add_subplot(111)
        if spec.kind == "rmse-snr":
            _plot_rmse(spec, "snr", ax)
        elif spec.kind == "rmse-snapshots":
            _plot_rmse(spec, "snapshots", ax)
        else:
            _plot_crlb(spec, ax)
        if spec.log_y:
            ax.set_yscale("log")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
    fig.tight_layout()
    fig.savefig(spec.output)
    return fig
