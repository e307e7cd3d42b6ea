"""Pixel-distribution analysis of a built dataset.

Histograms are mask-weighted and per channel (R, G, B in sRGB and L, a, b
in Lab). Drift between two distributions is scored with the 1-D earth
mover's distance, measured in channel units.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .color import check_image, image_to_lab
from .errors import ChannelMismatch, DecodeError, DimensionMismatch, EmptyRegion
from .imageio import read_image
from .masks import check_mask, coverage_fraction, load_mask

logger = logging.getLogger(__name__)

CHANNEL_RANGES = {
    "R": (0.0, 1.0),
    "G": (0.0, 1.0),
    "B": (0.0, 1.0),
    "L": (0.0, 100.0),
    "a": (-128.0, 128.0),
    "b": (-128.0, 128.0),
}
RGB_CHANNELS = ("R", "G", "B")
ALL_CHANNELS = tuple(CHANNEL_RANGES)

# background share of the portrait corpus reported alongside the head-mask method
REFERENCE_BACKGROUND_FRACTION = 0.356

COMPARISONS = (
    ("background", "source_bg", "composed_bg"),
    ("head_corrected", "source_head", "corrected_head"),
    ("head_uncorrected", "source_head", "uncorrected_head"),
)


@dataclass
class ChannelHistogram:
    channel: str
    bins: int
    counts: np.ndarray
    region: str = "full"
    total_weight: float = 0.0

    @property
    def range(self):
        return CHANNEL_RANGES[self.channel]

    @property
    def edges(self):
        lo, hi = self.range
        return np.linspace(lo, hi, self.bins + 1)

    def __add__(self, other: "ChannelHistogram") -> "ChannelHistogram":
        if other.channel != self.channel or other.bins != self.bins:
            raise ChannelMismatch(f"cannot merge {self.channel}/{self.bins} with {other.channel}/{other.bins}")
        return ChannelHistogram(
            self.channel, self.bins, self.counts + other.counts, self.region, self.total_weight + other.total_weight
        )


def _channel_values(img, channel, lab=None):
    if channel in RGB_CHANNELS:
        return img[..., RGB_CHANNELS.index(channel)]
    if lab is None:
        lab = image_to_lab(img)
    return lab[..., "Lab".index(channel)]


def bin_index(values, channel, bins):
    lo, hi = CHANNEL_RANGES[channel]
    idx = np.floor((np.asarray(values, dtype=np.float64) - lo) / (hi - lo) * bins)
    return np.clip(idx, 0, bins - 1).astype(np.int64)


def channel_histogram(img, mask, channel, bins=64, region="full", lab=None) -> ChannelHistogram:
    """Mask-weighted histogram of one channel over uniform bins.

    sRGB channels are binned over [0, 1]; Lab channels over their nominal
    range, with out-of-range values falling into the end bins. A
    precomputed ``lab`` plane may be passed to avoid converting twice.
    """
    if channel not in CHANNEL_RANGES:
        raise ChannelMismatch(f"unknown channel {channel!r}")
    if bins < 2:
        raise ValueError("bins must be >= 2")
    img = check_image(img)
    w = check_mask(mask, img.shape)
    total = float(w.sum())
    if not total > 0.0:
        raise EmptyRegion(f"{region}: mask selects no pixels")
    idx = bin_index(_channel_values(img, channel, lab), channel, bins)
    counts = np.bincount(idx.ravel(), weights=w.ravel(), minlength=bins)
    return ChannelHistogram(channel, bins, counts, region, total)


def emd_1d(a: ChannelHistogram, b: ChannelHistogram) -> float:
    """Earth mover's distance between two histograms of the same channel."""
    if a.channel != b.channel or a.bins != b.bins:
        raise ChannelMismatch(f"cannot compare {a.channel}/{a.bins} with {b.channel}/{b.bins}")
    sa, sb = a.counts.sum(), b.counts.sum()
    if not (sa > 0 and sb > 0):
        raise EmptyRegion("histogram has no mass")
    diff = np.cumsum(a.counts / sa) - np.cumsum(b.counts / sb)
    lo, hi = a.range
    return float(np.mean(np.abs(diff)) * (hi - lo))


# -- dataset report ---------------------------------------------------------------


@dataclass
class DistributionReport:
    histograms: dict = field(default_factory=dict)  # (region, channel) -> ChannelHistogram
    emd: dict = field(default_factory=dict)  # comparison -> {channel: value}
    mean_L: dict = field(default_factory=dict)
    per_record: list = field(default_factory=list)
    coverage: dict = field(default_factory=dict)
    gaps: list = field(default_factory=list)
    files: list = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "records": len(self.per_record),
            "emd": self.emd,
            "mean_L": self.mean_L,
            "coverage": self.coverage,
            "gaps": self.gaps,
            "per_record": self.per_record,
        }


def _accumulate(store, region, img, lab, weight, bins, channels):
    for ch in channels:
        h = channel_histogram(img, weight, ch, bins, region, lab=lab)
        key = (region, ch)
        store[key] = store[key] + h if key in store else h


def _weighted_mean_L(lab, weight):
    return float((lab[..., 0] * weight).sum() / weight.sum())


def coverage_stats(masks) -> dict:
    """Mean head and background fractions over an iterable of masks."""
    fractions = [coverage_fraction(m) for m in masks]
    if not fractions:
        return {"masks": 0}
    head = float(np.mean(fractions))
    return {
        "masks": len(fractions),
        "mean_head_fraction": head,
        "mean_background_fraction": 1.0 - head,
        "reference_background_fraction": REFERENCE_BACKGROUND_FRACTION,
    }


def mask_corpus_coverage(mask_dir) -> dict:
    """Coverage statistics for every mask image in ``mask_dir``."""
    paths = sorted(p for p in Path(mask_dir).iterdir() if p.suffix.lower() in (".png", ".bmp", ".tif", ".tiff"))
    return coverage_stats(load_mask(p) for p in paths)


def analyze_dataset(dataset_dir, bins=64, channels=ALL_CHANNELS) -> DistributionReport:
    """Accumulate region histograms over every composed record of a built dataset."""
    dataset_dir = Path(dataset_dir)
    manifest = json.loads((dataset_dir / "manifest.json").read_text())
    report = DistributionReport()
    L_sums: dict[str, list] = {}
    masks = []

    for entry in manifest["entries"]:
        if entry["kind"] != "composed" or entry.get("skip_reason"):
            continue
        rid = entry["record_id"]
        outs = entry["outputs"]
        try:
            src = read_image(dataset_dir / outs["source"])
            tgt = read_image(dataset_dir / outs["target"])
            mask = load_mask(dataset_dir / outs["mask"], src.shape)
        except (OSError, DecodeError, DimensionMismatch) as exc:
            report.gaps.append({"record_id": rid, "region": "*", "reason": str(exc)})
            continue
        head_path = entry.get("inputs", {}).get("head_styled")
        uncorrected = None
        if head_path:
            try:
                uncorrected = read_image(head_path)
                if uncorrected.shape != src.shape:
                    raise DimensionMismatch("uncorrected head size differs from source")
            except (OSError, DecodeError, DimensionMismatch) as exc:
                report.gaps.append({"record_id": rid, "region": "uncorrected_head", "reason": str(exc)})
                uncorrected = None
        masks.append(mask)
        bg = 1.0 - mask
        lab_src, lab_tgt = image_to_lab(src), image_to_lab(tgt)
        lab_unc = image_to_lab(uncorrected) if uncorrected is not None else None
        regions = [
            ("source_bg", src, lab_src, bg),
            ("composed_bg", tgt, lab_tgt, bg),
            ("source_head", src, lab_src, mask),
            ("corrected_head", tgt, lab_tgt, mask),
        ]
        if uncorrected is not None:
            regions.append(("uncorrected_head", uncorrected, lab_unc, mask))
        row = {"record_id": rid, "delta": entry.get("correction", {}).get("delta")}
        for region, img, lab, weight in regions:
            if not weight.sum() > 0:
                report.gaps.append({"record_id": rid, "region": region, "reason": "EmptyRegion"})
                continue
            _accumulate(report.histograms, region, img, lab, weight, bins, channels)
            if region.endswith("head"):
                row[f"mean_L_{region}"] = _weighted_mean_L(lab, weight)
                acc = L_sums.setdefault(region, [0.0, 0.0])
                acc[0] += float((lab[..., 0] * weight).sum())
                acc[1] += float(weight.sum())
        if "mean_L_source_head" in row:
            for region in ("corrected_head", "uncorrected_head"):
                if f"mean_L_{region}" in row:
                    row[f"L_gap_{region}"] = abs(row[f"mean_L_{region}"] - row["mean_L_source_head"])
        report.per_record.append(row)

    for name, left, right in COMPARISONS:
        scores = {}
        for ch in channels:
            a, b = report.histograms.get((left, ch)), report.histograms.get((right, ch))
            if a is not None and b is not None:
                scores[ch] = emd_1d(a, b)
        if scores:
            report.emd[name] = scores
    report.mean_L = {region: s / w for region, (s, w) in L_sums.items()}
    if "source_head" in report.mean_L:
        for region in ("corrected_head", "uncorrected_head"):
            if region in report.mean_L:
                report.mean_L[f"gap_{region}"] = abs(report.mean_L[region] - report.mean_L["source_head"])
    report.coverage = coverage_stats(masks)
    return report


def write_histogram_csv(path, histograms) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["channel", "region", "bin_index", "bin_left", "bin_right", "weight"])
        for (region, ch), h in sorted(histograms.items(), key=lambda kv: (ALL_CHANNELS.index(kv[0][1]), kv[0][0])):
            edges = h.edges
            for i, wgt in enumerate(h.counts):
                writer.writerow([ch, region, i, repr(float(edges[i])), repr(float(edges[i + 1])), repr(float(wgt))])


def write_emd_csv(path, emd) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["comparison", "channel", "emd"])
        for name, scores in emd.items():
            for ch, val in scores.items():
                writer.writerow([name, ch, repr(float(val))])


def distribution_report(dataset_dir, output_path, bins=64, mask_corpus=None, plots=True) -> DistributionReport:
    """Write histograms, EMD table, summary and figures for a built dataset.

    Files written to ``output_path``: ``histograms.csv``, ``emd.csv``,
    ``summary.json`` and, with ``plots``, one PNG per comparison plus
    ``emd.png``. ``mask_corpus`` optionally points at a directory of head
    masks whose coverage is reported next to the dataset's own.
    """
    report = analyze_dataset(dataset_dir, bins=bins)
    out = Path(output_path)
    out.mkdir(parents=True, exist_ok=True)
    write_histogram_csv(out / "histograms.csv", report.histograms)
    write_emd_csv(out / "emd.csv", report.emd)
    if mask_corpus is not None:
        report.coverage["mask_corpus"] = mask_corpus_coverage(mask_corpus)
    (out / "summary.json").write_text(json.dumps(report.summary(), indent=2, sort_keys=True) + "\n")
    report.files = ["histograms.csv", "emd.csv", "summary.json"]
    if plots:
        from .plotting import render_report

        report.files += render_report(report, out)
    return report
