"""Compensated-frame assembly, the shared sampling path, and masks."""

import math

import numpy as np
import pytest

from fisheyeme import (SearchConfig, compensate_frame, estimate,
                       make_equisolid, ssd)
from fisheyeme import _kernels
from fisheyeme.errors import UsageError
from fisheyeme.motion_search import (CHOSEN_TRADITIONAL, BlockRecord,
                                     MotionField, MotionVector, _project_grid)
from fisheyeme.compensate import MASK_COLORS

from conftest import random_frame
from test_motion_search import shifted_clamped


def zero_field(w, h, bs, chosen=CHOSEN_TRADITIONAL):
    blocks = []
    for y0 in range(0, h, bs):
        for x0 in range(0, w, bs):
            blocks.append(BlockRecord(
                x=x0, y=y0, w=min(bs, w - x0), h=min(bs, h - y0),
                mv=MotionVector(0, 0), chosen=chosen,
                ssd_traditional=0.0 if chosen == CHOSEN_TRADITIONAL else None,
                ssd_fisheye=None if chosen == CHOSEN_TRADITIONAL else 0.0))
    return MotionField(width=w, height=h, block_size=bs, blocks=tuple(blocks))


def test_zero_field_reproduces_reference(rng):
    ref = random_frame(rng, 48, 40)
    cfg = SearchConfig(block_size=8, search_range=2, method="tme")
    out, mask = compensate_frame(ref, zero_field(48, 40, 8), cfg)
    assert np.array_equal(out.luma, ref.luma)
    assert set(mask.chosen) == {CHOSEN_TRADITIONAL}


def test_zero_field_fisheye_path_reproduces_reference(rng):
    # round-trip error is far below the 8-bit rounding step
    prof = make_equisolid(20.8, (31.5, 31.5), math.radians(185))
    ref = random_frame(rng, 64, 64)
    cfg = SearchConfig(block_size=8, search_range=2, method="eme")
    field = estimate(ref, ref, cfg, prof)
    out, _ = compensate_frame(ref, field, cfg, prof)
    assert np.array_equal(out.luma, ref.luma)


def test_global_shift_interior_reproduced(rng):
    ref = random_frame(rng, 64, 64)
    cur = shifted_clamped(ref, 5, -3)
    cfg = SearchConfig(block_size=8, search_range=8, method="tme")
    field = estimate(cur, ref, cfg)
    out, _ = compensate_frame(ref, field, cfg)
    assert np.array_equal(out.luma[8:56, 8:56], cur.luma[8:56, 8:56])


def test_geometry_mismatch_rejected(rng):
    ref = random_frame(rng, 32, 32)
    cfg = SearchConfig(block_size=8, search_range=2, method="tme")
    with pytest.raises(UsageError):
        compensate_frame(ref, zero_field(16, 16, 8), cfg)
    with pytest.raises(UsageError):
        compensate_frame(ref, zero_field(32, 32, 8),
                         SearchConfig(block_size=16, search_range=2, method="tme"))


def test_recorded_energy_matches_shared_sampling_path(rng):
    """The search energy must be the SSD of the block the compensation
    samples (pre-rounding), because both run the same kernel."""
    prof = make_equisolid(20.8, (31.5, 31.5), math.radians(185))
    cur = random_frame(rng, 64, 64)
    ref = random_frame(rng, 64, 64)
    cfg = SearchConfig(block_size=8, search_range=2, method="eme_plus")
    field = estimate(cur, ref, cfg, prof)
    checked = 0
    for b in field:
        if b.ssd_fisheye is None:
            continue
        px, py, flags = _project_grid(prof, None, b.x, b.y, b.w, b.h)
        vals = np.empty(b.w * b.h)
        _kernels.compensate_fisheye_batch(
            ref.as_float(), np.array([[b.x, b.y, b.w, b.h]], dtype=np.int64),
            np.zeros(1, dtype=np.int64), px, py, flags,
            np.array([[b.mv.dx, b.mv.dy]], dtype=np.int64),
            prof.kind_id, prof.coeff_array(), prof.focal_length,
            prof.center[0], prof.center[1], prof.radius_at_half_pi(),
            cfg.wide_mode, vals)
        cur_block = cur.luma[b.y:b.y + b.h, b.x:b.x + b.w]
        assert ssd(cur_block.astype(np.float64), vals.reshape(b.h, b.w)) \
            == b.ssd_fisheye
        checked += 1
    assert checked > 10


def test_black_corners_preserved(synth_sequence, equisolid_synth,
                                 synth_estimates):
    cur, ref = synth_sequence[1], synth_sequence[0]
    cfg = SearchConfig(block_size=16, search_range=64, method="hme_plus")
    field = synth_estimates("hme_plus")
    out, _ = compensate_frame(ref, field, cfg, equisolid_synth)
    cx, cy = equisolid_synth.center
    r_valid = equisolid_synth.max_radius()
    ys, xs = np.mgrid[0:out.height, 0:out.width]
    outside = np.sqrt((xs - cx) ** 2 + (ys - cy) ** 2) > r_valid + 1.0
    assert outside.any()
    assert np.all(out.luma[outside] == 0)
    assert np.all(cur.luma[outside] == 0)


def test_output_dimensions_and_range(rng):
    ref = random_frame(rng, 40, 24)
    cfg = SearchConfig(block_size=8, search_range=2, method="tme")
    field = estimate(ref, ref, cfg)
    out, _ = compensate_frame(ref, field, cfg)
    assert (out.width, out.height) == (40, 24)
    assert out.luma.dtype == np.uint8


# ------------------------------------------------------------------ masks

def test_mask_rgb_uses_documented_colors(rng):
    prof = make_equisolid(20.8, (31.5, 31.5), math.radians(185))
    cur = random_frame(rng, 64, 64)
    ref = random_frame(rng, 64, 64)
    cfg = SearchConfig(block_size=8, search_range=2, method="hme")
    field = estimate(cur, ref, cfg, prof)
    _, mask = compensate_frame(ref, field, cfg, prof)
    rgb = mask.to_rgb()
    seen = {tuple(c) for c in rgb.reshape(-1, 3)}
    assert seen <= set(MASK_COLORS.values())


def test_mask_overlay_blend_midpoint():
    field = zero_field(16, 16, 8)
    mask_chosen = tuple(b.chosen for b in field)
    from fisheyeme.compensate import DecisionMask
    mask = DecisionMask(width=16, height=16, block_size=8, chosen=mask_chosen)
    luma = np.full((16, 16), 100, dtype=np.uint8)
    over = mask.overlay(luma)
    # red blocks: 0.5*100 + 0.5*255 = 177.5 -> 178 (half-up)
    assert tuple(over[0, 0]) == (178, 50, 50)


def test_mask_csv_rows(rng):
    ref = random_frame(rng, 16, 16)
    cfg = SearchConfig(block_size=8, search_range=1, method="tme")
    field = estimate(ref, ref, cfg)
    _, mask = compensate_frame(ref, field, cfg)
    rows = list(mask.csv_rows())
    assert rows[0] == "x,y,chosen"
    assert rows[1] == "0,0,traditional"
    assert len(rows) == 1 + 4
