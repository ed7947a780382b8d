"""Report figures. Rendered off-screen with the Agg canvas, no pyplot state."""

from __future__ import annotations

import functools
from pathlib import Path

import matplotlib as mpl
import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .classify import DISPLAY_NAMES
from .evaluate import ComparisonGrid

STYLE = {
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
}
CLF_COLORS = {"nb": "#4c72b0", "tree": "#dd8452", "svm": "#55a868"}
# PNG metadata would otherwise embed the matplotlib version
_PNG_META = {"Software": None}


def _new_figure(width, height):
    fig = Figure(figsize=(width, height), dpi=100)
    FigureCanvasAgg(fig)
    return fig


def _styled(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        with mpl.rc_context(STYLE):
            return fn(*args, **kwargs)

    return wrapper


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="png", metadata=_PNG_META)
    return path


@_styled
def plot_f1_grid(grid: ComparisonGrid, target: str, path) -> Path:
    """Grouped bars of LOO macro-F1 per sensor mask, reference F1 as markers."""
    cells = [c for c in grid.cells if c.target == target]
    if not cells:
        raise ValueError(f"grid has no cells for target {target!r}")
    masks = list(dict.fromkeys(c.mask for c in cells))
    clfs = list(dict.fromkeys(c.classifier for c in cells))
    fig = _new_figure(1.1 * len(masks) + 2, 3.4)
    ax = fig.add_subplot()
    width = 0.8 / len(clfs)
    x = np.arange(len(masks))
    for k, clf in enumerate(clfs):
        xs = x - 0.4 + width * (k + 0.5)
        f1 = [next((c.report.f1 for c in cells if c.mask == m and c.classifier == clf), np.nan) for m in masks]
        ref = [next((c.reference_f1 for c in cells if c.mask == m and c.classifier == clf), None) for m in masks]
        ax.bar(xs, f1, width, label=DISPLAY_NAMES.get(clf, clf), color=CLF_COLORS.get(clf, "0.5"))
        rx = [xi for xi, r in zip(xs, ref) if r is not None]
        ry = [r for r in ref if r is not None]
        ax.plot(rx, ry, "k_", markersize=12, markeredgewidth=2)
    best = next((c for c in cells if c.best), None)
    if best is not None:
        k = clfs.index(best.classifier)
        ax.annotate("best", (masks.index(best.mask) - 0.4 + width * (k + 0.5), best.report.f1),
                    xytext=(0, 4), textcoords="offset points", ha="center", fontsize=7)
    ax.plot([], [], "k_", markersize=12, markeredgewidth=2, label="published")
    ax.axhline(0.5, color="0.6", lw=0.8, ls=":")
    ax.set_xticks(x, masks, rotation=20, ha="right")
    ax.set_ylim(0, 1)
    ax.set_ylabel("macro F1 (LOO)")
    ax.set_title(f"{target}: sensor mask x classifier")
    ax.legend(ncol=len(clfs) + 1, fontsize=7, loc="upper left", frameon=False)
    fig.tight_layout()
    return _save(fig, path)


@_styled
def plot_confusions(grid: ComparisonGrid, target: str, path) -> Path:
    """Confusion matrices of every classifier on the best mask for ``target``."""
    if not any(c.target == target for c in grid.cells):
        raise ValueError(f"grid has no cells for target {target!r}")
    best = grid.best(target)
    cells = [c for c in grid.cells if c.target == target and c.mask == best.mask]
    fig = _new_figure(2.4 * len(cells), 2.6)
    for k, cell in enumerate(cells):
        ax = fig.add_subplot(1, len(cells), k + 1)
        cm = cell.report.confusion
        ax.imshow(cm, cmap="Blues", vmin=0, vmax=max(int(cm.sum(axis=1).max()), 1))
        for (i, j), v in np.ndenumerate(cm):
            ax.text(j, i, str(v), ha="center", va="center", color="white" if v > cm.max() / 2 else "black")
        ax.set_xticks([0, 1], ["Low", "High"])
        ax.set_yticks([0, 1], ["Low", "High"])
        ax.set_xlabel("predicted")
        if k == 0:
            ax.set_ylabel("gold")
        ax.set_title(f"{DISPLAY_NAMES.get(cell.classifier, cell.classifier)}  F1={cell.report.f1:.3f}", fontsize=8)
    fig.suptitle(f"{target}, {best.mask}", fontsize=9)
    fig.tight_layout()
    return _save(fig, path)


def render_report(grid: ComparisonGrid, out_dir) -> list[Path]:
    """Write the per-target figures for ``grid``; returns the files written."""
    out_dir = Path(out_dir)
    paths = []
    for target in dict.fromkeys(c.target for c in grid.cells):
        paths.append(plot_f1_grid(grid, target, out_dir / f"f1_{target}.png"))
        paths.append(plot_confusions(grid, target, out_dir / f"confusion_{target}.png"))
    return paths
