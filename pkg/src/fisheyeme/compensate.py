"""Motion-compensated frame assembly and decision-mask rendering.

Traditional blocks copy integer-shifted samples with border clamping.
Fisheye blocks re-derive the back-projected fractional coordinates of the
winning vector and sample the interpolated reference through the same
kernel the search used, so the block's pre-rounding SSD equals the energy
recorded in the motion field exactly. Luma is rounded half-up to 8 bit
only at frame assembly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import UsageError
from .frame import Frame, InterpolatedRef, sample  # noqa: F401  (re-export)
from .motion_search import (CHOSEN_TRADITIONAL, MotionField, SearchConfig,
                            _project_grid, block_grid, effective_profile)
from .projection import CalibrationProfile, InverseTable

MASK_COLORS = {
    "fisheye": (0, 255, 0),
    "traditional": (255, 0, 0),
    "equal": (255, 255, 0),
}


@dataclass(frozen=True)
class DecisionMask:
    """Per-block record of which matching path produced the output pixels."""

    width: int
    height: int
    block_size: int
    chosen: tuple[str, ...]  # raster order, one entry per block

    def to_rgb(self) -> np.ndarray:
        """Solid color mask: green fisheye, red traditional, yellow equal."""
        rgb = np.zeros((self.height, self.width, 3), dtype=np.uint8)
        for (x0, y0, bw, bh), tag in zip(
                block_grid(self.width, self.height, self.block_size), self.chosen):
            rgb[y0:y0 + bh, x0:x0 + bw] = MASK_COLORS[tag]
        return rgb

    def overlay(self, luma: np.ndarray) -> np.ndarray:
        """Mask alpha-blended 50% over a luminance raster."""
        base = np.repeat(luma.astype(np.float64)[:, :, None], 3, axis=2)
        mixed = 0.5 * base + 0.5 * self.to_rgb().astype(np.float64)
        return np.floor(mixed + 0.5).astype(np.uint8)

    def csv_rows(self):
        yield "x,y,chosen"
        for (x0, y0, _, _), tag in zip(
                block_grid(self.width, self.height, self.block_size), self.chosen):
            yield f"{x0},{y0},{tag}"


def compensate_frame(ref: Frame, field: MotionField, cfg: SearchConfig,
                     profile: CalibrationProfile | None = None
                     ) -> tuple[Frame, DecisionMask]:
    """Build the motion-compensated frame for a previously estimated field."""
    if (field.width, field.height) != (ref.width, ref.height):
        raise UsageError("motion field does not match the reference geometry")
    if field.block_size != cfg.block_size:
        raise UsageError("motion field block size does not match the config")
    prof = effective_profile(cfg, profile)
    ref_f = ref.as_float()
    out = np.zeros((ref.height, ref.width), dtype=np.float64)

    fish_rows = []
    fish_mvs = []
    for b in field.blocks:
        if b.chosen == CHOSEN_TRADITIONAL:
            ys = np.clip(np.arange(b.y, b.y + b.h) + b.mv.dy, 0, ref.height - 1)
            xs = np.clip(np.arange(b.x, b.x + b.w) + b.mv.dx, 0, ref.width - 1)
            out[b.y:b.y + b.h, b.x:b.x + b.w] = ref_f[np.ix_(ys, xs)]
        else:
            fish_rows.append((b.x, b.y, b.w, b.h))
            fish_mvs.append((b.mv.dx, b.mv.dy))

    if fish_rows:
        if prof is None:
            raise UsageError("field contains fisheye blocks but no profile given")
        table = (InverseTable.from_profile(prof)
                 if prof.kind != "equisolid" else None)
        blocks = np.array(fish_rows, dtype=np.int64)
        counts = blocks[:, 2] * blocks[:, 3]
        offs = np.zeros(len(fish_rows), dtype=np.int64)
        offs[1:] = np.cumsum(counts)[:-1]
        px = np.empty(int(counts.sum()))
        py = np.empty_like(px)
        flags = np.empty(px.shape[0], dtype=np.bool_)
        for row, (x0, y0, bw, bh) in enumerate(fish_rows):
            s = offs[row]
            px[s:s + bw * bh], py[s:s + bw * bh], flags[s:s + bw * bh] = \
                _project_grid(prof, table, x0, y0, bw, bh)
        vals = np.empty_like(px)
        r_pi = (prof.radius_at_half_pi()
                if prof.theta_max > _kernels.HALF_PI else 0.0)
        _kernels.compensate_fisheye_batch(
            ref_f, blocks, offs, px, py, flags,
            np.array(fish_mvs, dtype=np.int64),
            prof.kind_id, prof.coeff_array(), prof.focal_length,
            prof.center[0], prof.center[1], r_pi, cfg.wide_mode, vals)
        for row, (x0, y0, bw, bh) in enumerate(fish_rows):
            s = offs[row]
            out[y0:y0 + bh, x0:x0 + bw] = vals[s:s + bw * bh].reshape(bh, bw)

    luma = np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)
    mask = DecisionMask(width=field.width, height=field.height,
                        block_size=field.block_size,
                        chosen=tuple(b.chosen for b in field.blocks))
    return Frame.from_array(luma), mask
