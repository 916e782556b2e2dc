"""Quality metrics restricted to the round fisheye region.

PSNR is computed over luminance inside the valid image circle only, so
the black corners outside p(theta_max) never dilute the score. The same
mask is applied to every method within a run.
"""

from __future__ import annotations

import math

import numpy as np

from .compensate import compensate_frame
from .errors import UsageError
from .frame import Frame
from .metrics_report import ReportRow  # noqa: F401  (re-export for callers)
from .motion_search import SearchConfig, estimate
from .projection import CalibrationProfile

PEAK_SQ = 255.0 * 255.0


def round_mask(profile: CalibrationProfile, width: int, height: int) -> np.ndarray:
    """Boolean mask of pixels within p(theta_max) of the calibrated center."""
    r_valid = profile.max_radius()
    cx, cy = profile.center
    ys, xs = np.mgrid[0:height, 0:width]
    dx = xs - cx
    dy = ys - cy
    mask = np.sqrt(dx * dx + dy * dy) <= r_valid
    if not mask.any():
        raise UsageError("valid circle does not intersect the frame")
    return mask


def psnr_round(a: Frame, b: Frame, mask: np.ndarray) -> float:
    """Luminance PSNR in dB over the masked region; inf when identical."""
    if (a.width, a.height) != (b.width, b.height):
        raise UsageError("frames must have identical dimensions")
    if mask.shape != a.luma.shape:
        raise UsageError("mask does not match the frame geometry")
    if not mask.any():
        raise UsageError("mask is empty")
    diff = a.as_float()[mask] - b.as_float()[mask]
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK_SQ / mse)


def evaluate_sequence(frames: list[Frame], methods: list[str],
                      block_size: int, search_range: int,
                      profile: CalibrationProfile,
                      sequence: str = "sequence",
                      frame_label: str | None = None,
                      ref_policy: str = "previous") -> list["ReportRow"]:
    """Mean previous-frame-prediction PSNR per method.

    Frame k is predicted from frame k-1 for k = 1..n-1; the per-method mean
    is taken over those predictions. Delta columns are relative to the tme
    row when present. A mean over predictions containing an infinite PSNR
    is reported as inf (flagged in the text rendering).
    """
    if ref_policy != "previous":
        raise UsageError(f"unsupported ref_policy {ref_policy!r}")
    if len(frames) < 2:
        raise UsageError("need at least two frames")
    mask = round_mask(profile, frames[0].width, frames[0].height)
    label = frame_label or f"0:{len(frames) - 1}"

    rows: list[ReportRow] = []
    means: dict[str, float] = {}
    for method in methods:
        cfg = SearchConfig(block_size=block_size, search_range=search_range,
                           method=method)
        values = []
        for k in range(1, len(frames)):
            field = estimate(frames[k], frames[k - 1], cfg, profile)
            comp, _ = compensate_frame(frames[k - 1], field, cfg, profile)
            values.append(psnr_round(frames[k], comp, mask))
        mean = math.inf if any(math.isinf(v) for v in values) \
            else sum(values) / len(values)
        means[method] = mean
        rows.append(ReportRow(sequence=sequence, frames=label, method=method,
                              block_size=block_size, search_range=search_range,
                              mean_psnr_db=mean, delta_vs_tme_db=None))

    if "tme" in means and math.isfinite(means["tme"]):
        base = means["tme"]
        rows = [
            row if row.method == "tme" or not math.isfinite(row.mean_psnr_db)
            else row.with_delta(row.mean_psnr_db - base)
            for row in rows
        ]
    return rows
