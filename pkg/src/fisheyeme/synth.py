"""Ground-truth fisheye sequence generator.

A frame shows a tileable texture plane through a fisheye profile. The
texture is addressed in perspective coordinates, so translating the plane
by one texture pixel moves every ray's content by exactly 1/scale
perspective pixels: the perspective-domain motion between frames is a
known global vector, which is what makes these sequences usable as motion
ground truth.

Pixels whose incident angle exceeds 90 degrees cannot see a frontal plane;
they are filled by the same fold that the ultra-wide re-projection
inverts (radius mirrored about p(pi/2), direction kept), so a search with
the wide correction enabled can compensate the rim consistently while the
naive path maps it to wrong content. This plane model is a deliberate
simplification versus raytraced 3D scenes; it trades realism for an exact
global ground-truth vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import UsageError
from .frame import Frame
from .projection import CalibrationProfile, InverseTable

DEFAULT_TEXTURE_SIZE = 2048
# wavelength (texture px) and weight of each smoothed-noise octave; heavy
# coarse content keeps the stretched rim resolvable, fine octaves give the
# block matcher unambiguous structure
DEFAULT_OCTAVES = ((1024, 40.0), (256, 22.0), (64, 14.0), (16, 8.0))


@dataclass(frozen=True)
class PlaneScene:
    """Texture plane: scale is texture pixels per perspective pixel and
    offset the texture coordinate looking down the optical axis."""

    texture: Frame
    scale: float = 1.0
    offset: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.scale > 0:
            raise UsageError("scale must be positive")


def make_texture(size: int = DEFAULT_TEXTURE_SIZE, seed: int = 7,
                 octaves=DEFAULT_OCTAVES) -> Frame:
    """Tileable multi-octave smoothed-noise luminance pattern."""
    rng = np.random.default_rng(seed)
    acc = np.zeros((size, size))
    for wavelength, weight in octaves:
        n = max(2, size // int(wavelength))
        grid = rng.normal(0.0, 1.0, (n, n))
        t = np.arange(size) * n / size
        i0 = np.floor(t).astype(np.int64) % n
        i1 = (i0 + 1) % n
        fr = t - np.floor(t)
        rows = (1 - fr)[:, None] * grid[i0, :] + fr[:, None] * grid[i1, :]
        vals = (1 - fr)[None, :] * rows[:, i0] + fr[None, :] * rows[:, i1]
        acc += weight * vals / vals.std()
    luma = np.clip(np.floor(128.0 + acc + 0.5), 0, 255).astype(np.uint8)
    return Frame.from_array(luma)


def render_fisheye(scene: PlaneScene, profile: CalibrationProfile,
                   width: int, height: int) -> Frame:
    """Render one frame; pixels outside the valid circle are black."""
    table = (InverseTable.from_profile(profile)
             if profile.kind != "equisolid" else None)
    cx, cy = profile.center
    r_valid = float(table.radii[-1]) if table is not None else profile.max_radius()
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    dx = xs - cx
    dy = ys - cy
    r = np.sqrt(dx * dx + dy * dy)
    inside = r <= r_valid
    rr = np.where(inside, r, 0.0)

    theta = _invert(profile, table, rr)
    flagged = theta > _kernels.HALF_PI
    if flagged.any():
        r_pi = profile.radius_at_half_pi()
        theta_m = _invert(profile, table, np.clip(2.0 * r_pi - rr, 0.0, None))
        theta = np.where(flagged, theta_m, theta)
    theta = np.clip(theta, 0.0, _kernels.HALF_PI - _kernels.TAN_GUARD)
    rho = profile.focal_length * np.tan(theta)
    with np.errstate(invalid="ignore", divide="ignore"):
        ux = np.where(rr > 0, dx / rr, 0.0)
        uy = np.where(rr > 0, dy / rr, 0.0)
    u = scene.offset[0] + scene.scale * rho * ux
    v = scene.offset[1] + scene.scale * rho * uy

    vals = _sample_wrapped(scene.texture.as_float(), u, v)
    luma = np.where(inside, np.clip(np.floor(vals + 0.5), 0, 255), 0)
    return Frame.from_array(luma.astype(np.uint8))


def generate_sequence(scene: PlaneScene, profile: CalibrationProfile,
                      n_frames: int, step: tuple[float, float],
                      width: int, height: int):
    """Render n_frames with the plane sliding by step texture px per frame.

    Returns (frames, truth) where truth holds the perspective-domain
    per-frame motion {"dx_p": step_u/scale, "dy_p": step_v/scale}.
    """
    if n_frames < 2:
        raise UsageError("need at least two frames")
    frames = []
    for k in range(n_frames):
        shifted = PlaneScene(
            texture=scene.texture, scale=scene.scale,
            offset=(scene.offset[0] + k * step[0],
                    scene.offset[1] + k * step[1]))
        frames.append(render_fisheye(shifted, profile, width, height))
    truth = {"dx_p": step[0] / scene.scale, "dy_p": step[1] / scene.scale}
    return frames, truth


def _invert(profile, table, radii: np.ndarray) -> np.ndarray:
    if profile.kind == "equisolid":
        s = np.clip(radii / (2.0 * profile.focal_length), -1.0, 1.0)
        return 2.0 * np.arcsin(s)
    out = np.empty(radii.size)
    _kernels.invert_radii(_kernels.KIND_POLYNOMIAL,
                          np.empty(0, dtype=np.float64), 1.0,
                          table.thetas, table.radii,
                          np.ascontiguousarray(radii.ravel()), out)
    return out.reshape(radii.shape)


def _sample_wrapped(tex: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Bilinear texture lookup with wrap addressing (tileable pattern)."""
    h, w = tex.shape
    iu = np.floor(u).astype(np.int64)
    iv = np.floor(v).astype(np.int64)
    fu = u - iu
    fv = v - iv
    iu0 = iu % w
    iu1 = (iu + 1) % w
    iv0 = iv % h
    iv1 = (iv + 1) % h
    top = (1 - fu) * tex[iv0, iu0] + fu * tex[iv0, iu1]
    bot = (1 - fu) * tex[iv1, iu0] + fu * tex[iv1, iu1]
    return (1 - fv) * top + fv * bot
