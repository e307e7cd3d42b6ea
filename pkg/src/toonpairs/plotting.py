"""Static figures for the distribution report."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .analysis import ALL_CHANNELS, COMPARISONS  # noqa: E402

_COLORS = {"R": "tab:red", "G": "tab:green", "B": "tab:blue", "L": "0.3", "a": "tab:purple", "b": "tab:orange"}
_REGION_LABELS = {
    "source_bg": "source background",
    "composed_bg": "composed background",
    "source_head": "source head",
    "corrected_head": "corrected head",
    "uncorrected_head": "stylized head (uncorrected)",
}
# PNG metadata left empty so reruns give identical bytes
_SAVE = {"dpi": 110, "metadata": {"Software": None}}


def report_style():
    plt.rcParams.update(
        {
            "font.size": 8,
            "axes.titlesize": 9,
            "axes.spines.top": False,
            "axes.spines.right": False,
            "legend.frameon": False,
            "legend.fontsize": 7,
        }
    )


def _density(h):
    total = h.counts.sum()
    width = np.diff(h.edges)
    return h.counts / total / width if total > 0 else h.counts


def plot_comparison(histograms, left, right, title, emd=None):
    """Overlay the two regions' histograms for every channel (2 x 3 grid)."""
    report_style()
    fig, axes = plt.subplots(2, 3, figsize=(9, 4.8))
    for ax, ch in zip(axes.ravel(), ALL_CHANNELS):
        for region, style in ((left, "-"), (right, "--")):
            h = histograms.get((region, ch))
            if h is None:
                continue
            centers = 0.5 * (h.edges[:-1] + h.edges[1:])
            ax.step(centers, _density(h), where="mid", ls=style, color=_COLORS[ch], label=_REGION_LABELS.get(region, region))
        name = ch if ch in "RGB" else f"Lab {ch}"
        if emd and ch in emd:
            name += f"  (EMD {emd[ch]:.4g})"
        ax.set_title(name)
        ax.set_yticks([])
    axes[0, 0].legend(loc="upper left")
    fig.suptitle(title)
    fig.tight_layout()
    return fig


def plot_emd_table(emd):
    report_style()
    names = list(emd)
    fig, axes = plt.subplots(1, 2, figsize=(9, 3), gridspec_kw={"width_ratios": [1, 1]})
    width = 0.8 / max(len(names), 1)
    for ax, chans, unit in ((axes[0], ("R", "G", "B"), "sRGB units"), (axes[1], ("L", "a", "b"), "Lab units")):
        x = np.arange(len(chans))
        for i, name in enumerate(names):
            vals = [emd[name].get(c, np.nan) for c in chans]
            ax.bar(x + (i - (len(names) - 1) / 2) * width, vals, width, label=name)
        ax.set_xticks(x, chans)
        ax.set_ylabel(f"EMD ({unit})")
    axes[0].legend(loc="upper left")
    fig.tight_layout()
    return fig


def render_report(report, out_dir) -> list[str]:
    """Write one figure per comparison plus the EMD bar chart; returns file names."""
    out_dir = Path(out_dir)
    written = []
    for name, left, right in COMPARISONS:
        if not any((left, ch) in report.histograms for ch in ALL_CHANNELS):
            continue
        fig = plot_comparison(report.histograms, left, right, name.replace("_", " "), report.emd.get(name))
        fname = f"histograms_{name}.png"
        fig.savefig(out_dir / fname, **_SAVE)
        plt.close(fig)
        written.append(fname)
    if report.emd:
        fig = plot_emd_table(report.emd)
        fig.savefig(out_dir / "emd.png", **_SAVE)
        plt.close(fig)
        written.append("emd.png")
    return written
