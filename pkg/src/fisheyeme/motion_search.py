"""Block-based motion estimation: traditional, fisheye, and hybrid.

Method names
------------
``tme``          traditional full-search block matching in the image plane
``eme``/``eme_plus``   fisheye matching through the analytic equisolid model
``cme``/``cme_plus``   fisheye matching through the loaded (calibrated) profile
``hme``/``hme_plus``   per-block hybrid of tme and eme
``chme``/``chme_plus`` per-block hybrid of tme and cme

``_plus`` variants enable the ultra-wide correction for rays past 90
degrees; without it flagged coordinates are shifted naively. Methods that
are not ``c``-prefixed rebuild an equisolid profile from the loaded
profile's focal length, center, and FOV, so the calibrated polynomial is
bypassed while the camera geometry is kept.

Every search scans the full integer candidate grid
[-search_range, +search_range]^2 and returns the minimum-SSD vector; ties
go to the smaller dx^2+dy^2, then to the earlier candidate in (dy, dx)
raster order, making results bit-reproducible. Per-block searches are
independent and run on a parallel worker pool (numba threads).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import UsageError
from .frame import Frame, InterpolatedRef
from .projection import CalibrationProfile, InverseTable, make_equisolid

METHODS = ("tme", "eme", "eme_plus", "cme", "cme_plus",
           "hme", "hme_plus", "chme", "chme_plus")
HYBRID_METHODS = ("hme", "hme_plus", "chme", "chme_plus")
BLOCK_SIZES = (8, 16, 32, 64)

CHOSEN_TRADITIONAL = "traditional"
CHOSEN_FISHEYE = "fisheye"
CHOSEN_EQUAL = "equal"


@dataclass(frozen=True)
class SearchConfig:
    block_size: int = 16
    search_range: int = 64
    method: str = "tme"

    def __post_init__(self):
        if self.block_size not in BLOCK_SIZES:
            raise UsageError(f"block_size must be one of {BLOCK_SIZES}")
        if self.search_range < 1:
            raise UsageError("search_range must be >= 1")
        if self.method not in METHODS:
            raise UsageError(f"unknown method {self.method!r}")

    @property
    def wide_mode(self) -> bool:
        return self.method.endswith("_plus")

    @property
    def hybrid(self) -> bool:
        return self.method in HYBRID_METHODS

    @property
    def uses_fisheye(self) -> bool:
        return self.method != "tme"

    @property
    def uses_traditional(self) -> bool:
        return self.method == "tme" or self.hybrid


@dataclass(frozen=True)
class MotionVector:
    dx: int
    dy: int


@dataclass(frozen=True)
class BlockRecord:
    """One block of a motion field. w/h can be short at frame edges."""

    x: int
    y: int
    w: int
    h: int
    mv: MotionVector
    chosen: str
    ssd_traditional: float | None
    ssd_fisheye: float | None


@dataclass(frozen=True)
class MotionField:
    width: int
    height: int
    block_size: int
    blocks: tuple[BlockRecord, ...]

    def __iter__(self):
        return iter(self.blocks)

    def total_ssd(self) -> float:
        """Sum of the chosen-path energies over all blocks."""
        total = 0.0
        for b in self.blocks:
            if b.chosen == CHOSEN_TRADITIONAL:
                total += b.ssd_traditional
            else:
                total += b.ssd_fisheye
        return total

    def to_json(self) -> str:
        rows = []
        for b in self.blocks:
            rows.append({
                "x": b.x, "y": b.y, "dx": b.mv.dx, "dy": b.mv.dy,
                "method": b.chosen,
                "ssd_t": b.ssd_traditional,
                "ssd_f": b.ssd_fisheye,
            })
        return json.dumps(rows, indent=1)

    @classmethod
    def from_json(cls, text: str, width: int, height: int,
                  block_size: int) -> "MotionField":
        rows = json.loads(text)
        expected = block_grid(width, height, block_size)
        if len(rows) != len(expected):
            raise UsageError(
                f"field has {len(rows)} blocks, geometry needs {len(expected)}")
        blocks = []
        for row, (x0, y0, bw, bh) in zip(rows, expected):
            if (row["x"], row["y"]) != (x0, y0):
                raise UsageError(
                    f"block at ({row['x']}, {row['y']}) does not match the "
                    f"expected raster grid entry ({x0}, {y0})")
            blocks.append(BlockRecord(
                x=x0, y=y0, w=bw, h=bh,
                mv=MotionVector(int(row["dx"]), int(row["dy"])),
                chosen=row["method"],
                ssd_traditional=row["ssd_t"], ssd_fisheye=row["ssd_f"]))
        return cls(width=width, height=height, block_size=block_size,
                   blocks=tuple(blocks))


def block_grid(width: int, height: int, block_size: int):
    """Raster-order block origins covering the frame; edge blocks may be short."""
    grid = []
    for y0 in range(0, height, block_size):
        for x0 in range(0, width, block_size):
            grid.append((x0, y0, min(block_size, width - x0),
                         min(block_size, height - y0)))
    return grid


def ssd(block_a: np.ndarray, block_b: np.ndarray) -> float:
    """Sum of squared differences in float64 wide accumulation."""
    a = np.asarray(block_a)
    b = np.asarray(block_b)
    if a.shape != b.shape:
        raise UsageError(f"block shapes differ: {a.shape} vs {b.shape}")
    return float(_kernels.ssd_flat(
        np.ascontiguousarray(a, dtype=np.float64).ravel(),
        np.ascontiguousarray(b, dtype=np.float64).ravel()))


def effective_profile(cfg: SearchConfig,
                      profile: CalibrationProfile | None) -> CalibrationProfile | None:
    """Resolve the profile a method actually searches with.

    Non-calibrated fisheye methods (eme/hme families) replace the loaded
    model with the analytic equisolid one at the same focal length, center,
    and FOV. tme needs no profile.
    """
    if not cfg.uses_fisheye:
        return profile
    if profile is None:
        raise UsageError(f"method {cfg.method} requires a calibration profile")
    if cfg.method.startswith("c"):
        return profile
    return make_equisolid(profile.focal_length, profile.center, profile.fov)


def block_inside_circle(profile: CalibrationProfile, r_valid: float,
                        x0: int, y0: int, bw: int, bh: int) -> bool:
    """True when every pixel of the block lies inside the valid circle.

    The farthest pixel of an axis-aligned block from any point is one of
    its four corner pixels, so corners suffice.
    """
    cx, cy = profile.center
    for x in (x0, x0 + bw - 1):
        for y in (y0, y0 + bh - 1):
            dx = x - cx
            dy = y - cy
            if math.sqrt(dx * dx + dy * dy) > r_valid:
                return False
    return True


def search_traditional(cur: Frame, ref: Frame, block_origin: tuple[int, int],
                       cfg: SearchConfig) -> tuple[MotionVector, float]:
    """Exhaustive integer-pel search for one block; ref sampled with clamping."""
    x0, y0 = block_origin
    bs = cfg.block_size
    if x0 < 0 or y0 < 0 or x0 + bs > cur.width or y0 + bs > cur.height:
        raise UsageError("block not fully inside the current frame")
    blocks = np.array([[x0, y0, bs, bs]], dtype=np.int64)
    out = np.empty((1, 3))
    _kernels.search_traditional_batch(cur.as_float(), ref.as_float(),
                                      blocks, cfg.search_range, out)
    return MotionVector(int(out[0, 0]), int(out[0, 1])), float(out[0, 2])


def search_fisheye(cur: Frame, ref_interp: InterpolatedRef,
                   block_origin: tuple[int, int], cfg: SearchConfig,
                   profile: CalibrationProfile, wide_mode: bool,
                   table: InverseTable | None = None):
    """Fisheye-domain search for one block.

    Returns (MotionVector, energy), or None when the block is not fully
    inside the valid fisheye circle (not applicable rather than an error).
    """
    x0, y0 = block_origin
    bs = cfg.block_size
    if x0 < 0 or y0 < 0 or x0 + bs > cur.width or y0 + bs > cur.height:
        raise UsageError("block not fully inside the current frame")
    if table is None and profile.kind != "equisolid":
        table = InverseTable.from_profile(profile)
    r_valid = table.radii[-1] if table is not None else profile.max_radius()
    if not block_inside_circle(profile, float(r_valid), x0, y0, bs, bs):
        return None
    px, py, flags = _project_grid(profile, table, x0, y0, bs, bs)
    blocks = np.array([[x0, y0, bs, bs]], dtype=np.int64)
    offs = np.zeros(1, dtype=np.int64)
    out = np.empty((1, 3))
    r_pi = profile.radius_at_half_pi() if profile.theta_max > _kernels.HALF_PI else 0.0
    _kernels.search_fisheye_batch(
        cur.as_float(), ref_interp.luma_f64, blocks, offs, px, py, flags,
        profile.kind_id, profile.coeff_array(), profile.focal_length,
        profile.center[0], profile.center[1], r_pi,
        cfg.search_range, wide_mode, out)
    return MotionVector(int(out[0, 0]), int(out[0, 1])), float(out[0, 2])


def estimate(cur: Frame, ref: Frame, cfg: SearchConfig,
             profile: CalibrationProfile | None = None) -> MotionField:
    """Estimate a full motion field between two frames.

    Pure methods run one search per block; hybrids run both and keep the
    lower energy (equal energies are tagged "equal" and compensate through
    the fisheye path). Blocks that stick out of the valid fisheye circle
    fall back to the traditional search.
    """
    if (cur.width, cur.height) != (ref.width, ref.height):
        raise UsageError("frames must have identical dimensions")
    prof = effective_profile(cfg, profile)
    grid = block_grid(cur.width, cur.height, cfg.block_size)
    blocks_arr = np.array(grid, dtype=np.int64)
    cur_f = cur.as_float()
    ref_f = ref.as_float()

    ssd_t = [None] * len(grid)
    mv_t = [None] * len(grid)
    ssd_f = [None] * len(grid)
    mv_f = [None] * len(grid)

    eligible = np.zeros(len(grid), dtype=bool)
    if cfg.uses_fisheye:
        table = (InverseTable.from_profile(prof)
                 if prof.kind != "equisolid" else None)
        r_valid = float(table.radii[-1]) if table is not None else prof.max_radius()
        for b, (x0, y0, bw, bh) in enumerate(grid):
            eligible[b] = block_inside_circle(prof, r_valid, x0, y0, bw, bh)
        idx = np.flatnonzero(eligible)
        if idx.size:
            sub_blocks = blocks_arr[idx]
            counts = sub_blocks[:, 2] * sub_blocks[:, 3]
            offs = np.zeros(idx.size, dtype=np.int64)
            offs[1:] = np.cumsum(counts)[:-1]
            px = np.empty(int(counts.sum()))
            py = np.empty_like(px)
            flags = np.empty(px.shape[0], dtype=np.bool_)
            for row, (x0, y0, bw, bh) in enumerate(sub_blocks):
                s = offs[row]
                e = s + bw * bh
                px[s:e], py[s:e], flags[s:e] = _project_grid(
                    prof, table, x0, y0, bw, bh)
            out = np.empty((idx.size, 3))
            r_pi = (prof.radius_at_half_pi()
                    if prof.theta_max > _kernels.HALF_PI else 0.0)
            _kernels.search_fisheye_batch(
                cur_f, ref_f, sub_blocks, offs, px, py, flags,
                prof.kind_id, prof.coeff_array(), prof.focal_length,
                prof.center[0], prof.center[1], r_pi,
                cfg.search_range, cfg.wide_mode, out)
            for row, b in enumerate(idx):
                mv_f[b] = MotionVector(int(out[row, 0]), int(out[row, 1]))
                ssd_f[b] = float(out[row, 2])

    need_traditional = (cfg.uses_traditional or not eligible.all())
    if need_traditional:
        out = np.empty((len(grid), 3))
        _kernels.search_traditional_batch(cur_f, ref_f, blocks_arr,
                                          cfg.search_range, out)
        for b in range(len(grid)):
            mv_t[b] = MotionVector(int(out[b, 0]), int(out[b, 1]))
            ssd_t[b] = float(out[b, 2])

    records = []
    for b, (x0, y0, bw, bh) in enumerate(grid):
        if cfg.method == "tme":
            chosen, mv = CHOSEN_TRADITIONAL, mv_t[b]
            e_t, e_f = ssd_t[b], None
        elif not eligible[b]:
            # fisheye search not applicable: fall back to traditional
            chosen, mv = CHOSEN_TRADITIONAL, mv_t[b]
            e_t, e_f = ssd_t[b], None
        elif not cfg.hybrid:
            chosen, mv = CHOSEN_FISHEYE, mv_f[b]
            e_t, e_f = None, ssd_f[b]
        elif ssd_f[b] < ssd_t[b]:
            chosen, mv, e_t, e_f = CHOSEN_FISHEYE, mv_f[b], ssd_t[b], ssd_f[b]
        elif ssd_t[b] < ssd_f[b]:
            chosen, mv, e_t, e_f = CHOSEN_TRADITIONAL, mv_t[b], ssd_t[b], ssd_f[b]
        else:
            # equal energies: mask says so, compensation uses the fisheye result
            chosen, mv, e_t, e_f = CHOSEN_EQUAL, mv_f[b], ssd_t[b], ssd_f[b]
        records.append(BlockRecord(x=x0, y=y0, w=bw, h=bh, mv=mv, chosen=chosen,
                                   ssd_traditional=e_t, ssd_fisheye=e_f))
    return MotionField(width=cur.width, height=cur.height,
                       block_size=cfg.block_size, blocks=tuple(records))


def _project_grid(profile, table, x0, y0, bw, bh):
    """Project the integer pixel grid of one block; returns px, py, flags."""
    ys, xs = np.mgrid[y0:y0 + bh, x0:x0 + bw]
    xs = np.ascontiguousarray(xs.ravel().astype(np.float64))
    ys = np.ascontiguousarray(ys.ravel().astype(np.float64))
    n = xs.shape[0]
    out_x = np.empty(n)
    out_y = np.empty(n)
    flags = np.empty(n, dtype=np.bool_)
    if table is not None:
        thetas, radii = table.thetas, table.radii
        r_valid = float(radii[-1])
    else:
        thetas = radii = np.empty(0, dtype=np.float64)
        r_valid = profile.max_radius()
    bad = _kernels.project_block(
        xs, ys, profile.center[0], profile.center[1],
        profile.kind_id, profile.coeff_array(), profile.focal_length,
        thetas, radii, r_valid, out_x, out_y, flags)
    if bad >= 0:
        raise UsageError(
            f"block pixel ({xs[bad]:.0f}, {ys[bad]:.0f}) outside the valid circle")
    return out_x, out_y, flags
