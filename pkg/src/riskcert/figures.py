"""Figure rendering for the report path.

Every report command renders its headline curve or comparison to a PNG next
to the JSON/CSV output. Rendering is headless and deterministic: fixed
canvas size, fixed dpi, and no software/timestamp metadata, so repeated
runs produce byte-identical images.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .errors import InvalidInputError

__all__ = ["save_line_figure", "save_bar_figure"]

_SAVE_OPTS = {"format": "png", "dpi": 100, "metadata": {"Software": None}}


def save_line_figure(
    path,
    x,
    series,
    xlabel,
    ylabel,
    title,
    logx=False,
    logy=False,
):
    """One line per (label -> values) entry in ``series`` over shared x."""
    if not series:
        raise InvalidInputError("need at least one series")
    x = list(x)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    try:
        for label, values in series.items():
            values = list(values)
            if len(values) != len(x):
                raise InvalidInputError(
                    f"series {label!r} has {len(values)} points, x has {len(x)}"
                )
            ax.plot(x, values, marker="o", markersize=3, label=label)
        if logx:
            ax.set_xscale("log")
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        fig.savefig(str(path), **_SAVE_OPTS)
    finally:
        plt.close(fig)
    return str(path)


def save_bar_figure(path, labels, observed, thresholds, title):
    """Horizontal observed-vs-threshold bars, one row per named check."""
    labels = list(labels)
    observed = list(observed)
    thresholds = list(thresholds)
    if not labels:
        raise InvalidInputError("need at least one bar")
    if len(observed) != len(labels) or len(thresholds) != len(labels):
        raise InvalidInputError("labels, observed, thresholds must align")
    pos = range(len(labels))
    fig, ax = plt.subplots(figsize=(7, 0.5 * len(labels) + 1.5))
    try:
        ax.barh(pos, observed, height=0.6, label="observed")
        for p, thr in zip(pos, thresholds):
            ax.plot([thr, thr], [p - 0.35, p + 0.35], color="black", lw=1.2)
        ax.set_yticks(list(pos))
        ax.set_yticklabels(labels, fontsize=8)
        ax.invert_yaxis()
        ax.set_xlabel("observed value (tick = threshold)")
        ax.set_title(title)
        fig.tight_layout()
        fig.savefig(str(path), **_SAVE_OPTS)
    finally:
        plt.close(fig)
    return str(path)
