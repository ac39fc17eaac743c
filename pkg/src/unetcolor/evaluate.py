"""Comparison metrics over a dataset split: avg MAE and the two MSE variants.

MAE and MSE a*b* are computed on the [0, 1]-normalized chroma channels (the
scale on which the published magnitudes, ~0.04, live). MSE La*b* re-extracts
both sides from their final clamped 8-bit RGB renderings, so gamut clamping
shows up as lightness error too. Per-image means are averaged over images.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import data as datamod
from .colorspace import assemble_output, normalize, rgb_to_lab

CSV_COLUMNS = ("Config. Name", "Avg. MAE", "Avg. MSE a*b*", "Avg. MSE La*b*")


@dataclass
class MetricReport:
    model_name: str
    image_count: int
    avg_mae: float
    avg_mse_ab: float
    avg_mse_lab: float
    per_image: Optional[list] = field(default=None, repr=False)

    def to_json(self) -> str:
        payload = {
            "model": self.model_name,
            "images": self.image_count,
            "avg_mae": self.avg_mae,
            "avg_mse_ab": self.avg_mse_ab,
            "avg_mse_lab": self.avg_mse_lab,
        }
        if self.per_image is not None:
            payload["per_image"] = self.per_image
        return json.dumps(payload, indent=2)


def image_metrics(pred_ab_norm: np.ndarray, gt_ab_norm: np.ndarray, l_plane: np.ndarray):
    """(mae, mse_ab, mse_lab) for one image.

    ``l_plane`` is the shared (H, W) lightness in [0, 100] that both renderings
    reuse. mae/mse_ab are plain means over the normalized chroma; mse_lab goes
    through the RGB round trip described in the module docstring.
    """
    pred_ab_norm = np.asarray(pred_ab_norm, dtype=np.float64)
    gt_ab_norm = np.asarray(gt_ab_norm, dtype=np.float64)
    if pred_ab_norm.shape != gt_ab_norm.shape:
        raise ValueError(f"shape mismatch: {pred_ab_norm.shape} vs {gt_ab_norm.shape}")
    diff = pred_ab_norm - gt_ab_norm
    mae = float(np.mean(np.abs(diff)))
    mse_ab = float(np.mean(diff * diff))

    def rendered_lab_norm(ab_norm):
        rgb = assemble_output(l_plane, ab_norm)
        pair = normalize(rgb_to_lab(rgb))
        return np.concatenate([pair.l_norm, pair.ab_norm], axis=0)

    d3 = rendered_lab_norm(pred_ab_norm) - rendered_lab_norm(gt_ab_norm)
    mse_lab = float(np.mean(d3 * d3))
    return mae, mse_ab, mse_lab


def evaluate_split(graph, manifest, split: str, model_name: str = "model",
                   keep_per_image: bool = False) -> MetricReport:
    """Inference-mode forward per image, metrics averaged over the split."""
    entries = manifest.split_entries(split)
    if not entries:
        raise datamod.DatasetError(f"split {split!r} is empty")
    size = graph.cfg.input_size
    indices = [i for i, e in enumerate(manifest.entries) if e.split == split]
    maes, mses_ab, mses_lab, rows = [], [], [], []
    for i in indices:
        l_input, ab_gt, _ = datamod.load_example(manifest, i, size=size)
        result = graph.forward(l_input[None], mode="inference")
        pred = result.ab_norm[0]
        l_plane = l_input[0].astype(np.float64) * 100.0
        mae, mse_ab, mse_lab = image_metrics(pred, ab_gt, l_plane)
        maes.append(mae)
        mses_ab.append(mse_ab)
        mses_lab.append(mse_lab)
        if keep_per_image:
            rows.append({"path": manifest.entries[i].rel_path, "mae": mae,
                         "mse_ab": mse_ab, "mse_lab": mse_lab})
    return MetricReport(
        model_name=model_name,
        image_count=len(indices),
        avg_mae=float(np.mean(maes)),
        avg_mse_ab=float(np.mean(mses_ab)),
        avg_mse_lab=float(np.mean(mses_lab)),
        per_image=rows if keep_per_image else None,
    )


def compare(reports: list) -> list:
    """Ascending by avg MAE, ties broken by model name."""
    if not reports:
        raise ValueError("need at least one report to compare")
    return sorted(reports, key=lambda r: (r.avg_mae, r.model_name))


def render_comparison(reports: list) -> str:
    ranked = compare(reports)
    rows = [CSV_COLUMNS]
    for r in ranked:
        rows.append((r.model_name, f"{r.avg_mae:.6f}", f"{r.avg_mse_ab:.6f}",
                     f"{r.avg_mse_lab:.6f}"))
    widths = [max(len(row[i]) for row in rows) for i in range(4)]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("-" * (sum(widths) + 6))
    return "\n".join(lines)


def report_to_csv(reports: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(CSV_COLUMNS)
    for r in reports:
        writer.writerow([r.model_name, f"{r.avg_mae:.6f}", f"{r.avg_mse_ab:.6f}",
                         f"{r.avg_mse_lab:.6f}"])
    return buf.getvalue()
