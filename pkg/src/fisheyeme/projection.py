"""Radial fisheye camera models and the fisheye/perspective transforms.

Two forward models map the incident angle theta (radians off the optical
axis) to an image radius in pixels:

* ``polynomial`` -- p(theta) = a_0 + a_1 theta + ... + a_n theta^n, the
  form produced by omnidirectional calibration toolboxes (coefficients
  low-order first, pixels per radian^i);
* ``equisolid`` -- p(theta) = 2 f sin(theta / 2), the classical analytic
  wide-angle model.

Projection to the perspective (pinhole) plane uses r_p = f tan(theta) with
theta recovered through the inverse mapping; for rays past 90 degrees the
tangent goes negative, which is carried as a per-coordinate wide flag plus
a non-negative magnitude. Re-projection back to fisheye coordinates
supports an ultra-wide correction for those flagged coordinates: the
candidate shift is negated, the polar angle is rotated by pi, and the
resulting radius is mirrored about r_pi = p(pi/2) so content beyond the
90-degree circle lands back where it belongs.

All transforms are pure functions of immutable inputs and are safe to
share across worker threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import CalibrationError, DomainError, UsageError

PROFILE_KINDS = ("polynomial", "equisolid")

INVERSE_TABLE_SIZE = 16384
MONOTONICITY_PROBE = 4096
# |p(0)| must stay below this fraction of p(theta_max) for a loaded profile
CENTER_RADIUS_TOL = 1e-6


@dataclass(frozen=True)
class CalibrationProfile:
    """Radial projection model of one fisheye camera.

    center is the calibrated image center (x, y) in pixels, which may
    differ from the geometric frame center. fov is the full field of view
    in radians; rays are valid for theta in [0, fov/2].
    """

    kind: str
    focal_length: float
    center: tuple[float, float]
    fov: float
    coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise CalibrationError(f"kind: unknown projection kind {self.kind!r}")
        if not self.focal_length > 0:
            raise CalibrationError(
                f"focal_length: must be positive, got {self.focal_length}"
            )
        if not 0.0 < self.theta_max <= math.pi:
            raise CalibrationError(
                f"fov: theta_max = fov/2 must lie in (0, pi], got {self.theta_max}"
            )
        if self.kind == "polynomial" and len(self.coeffs) == 0:
            raise CalibrationError("coeffs: polynomial profile needs coefficients")

    @property
    def theta_max(self) -> float:
        return self.fov / 2.0

    @property
    def kind_id(self) -> int:
        return (_kernels.KIND_POLYNOMIAL if self.kind == "polynomial"
                else _kernels.KIND_EQUISOLID)

    def coeff_array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=np.float64)

    def max_radius(self) -> float:
        """Radius of the valid fisheye circle, p(theta_max)."""
        return evaluate_poly(self, self.theta_max)

    def radius_at_half_pi(self) -> float:
        """Mirror pivot r_pi = p(pi/2); only meaningful for FOV > 180 deg."""
        return float(_kernels.radius_from_theta(
            self.kind_id, self.coeff_array(), self.focal_length, _kernels.HALF_PI))


def make_equisolid(f: float, center: tuple[float, float], fov: float) -> CalibrationProfile:
    """Analytic equisolid profile r = 2 f sin(theta/2)."""
    return CalibrationProfile(kind="equisolid", focal_length=float(f),
                              center=(float(center[0]), float(center[1])),
                              fov=float(fov))


@dataclass(frozen=True)
class InverseTable:
    """Monotone lookup table realizing theta = p^-1(r).

    thetas is a uniform grid over [0, theta_max]; radii the forward radii
    at those angles. Inversion is a binary search on radii with linear
    interpolation inside the bracketing cell.
    """

    thetas: np.ndarray
    radii: np.ndarray

    @classmethod
    def from_profile(cls, profile: CalibrationProfile,
                     size: int = INVERSE_TABLE_SIZE) -> "InverseTable":
        thetas = np.linspace(0.0, profile.theta_max, size)
        radii = np.empty_like(thetas)
        _kernels.fill_radii(profile.kind_id, profile.coeff_array(),
                            profile.focal_length, thetas, radii)
        if not np.all(np.diff(radii) > 0):
            raise CalibrationError(
                "coeffs: projection is not strictly increasing on [0, theta_max]")
        return cls(thetas=thetas, radii=radii)

    @property
    def size(self) -> int:
        return self.thetas.shape[0]


@dataclass(frozen=True)
class PolarPoint:
    """Signed-radius polar coordinate; phi normalized to (-pi, pi]."""

    r: float
    phi: float

    def __post_init__(self):
        object.__setattr__(self, "phi", normalize_angle(self.phi))


def normalize_angle(phi: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    phi = math.remainder(phi, 2.0 * math.pi)
    if phi == -math.pi:
        phi = math.pi
    return phi


def to_polar(x: float, y: float) -> PolarPoint:
    return PolarPoint(r=math.sqrt(x * x + y * y), phi=math.atan2(y, x))


@dataclass(frozen=True)
class ProjectedBlock:
    """Perspective coordinates of one block, relative to the image center.

    wide_flags marks coordinates whose source ray exceeded 90 degrees
    (negative perspective radius at projection time).
    """

    perspective_coords: np.ndarray  # (n, 2) float64
    wide_flags: np.ndarray          # (n,) bool

    def __post_init__(self):
        if self.perspective_coords.shape[0] != self.wide_flags.shape[0]:
            raise UsageError("coords and flags must have equal length")

    def __len__(self) -> int:
        return self.perspective_coords.shape[0]


def evaluate_poly(profile: CalibrationProfile, theta):
    """Forward mapping p(theta) in pixels; theta scalar or array, radians.

    theta must lie in [0, theta_max].
    """
    arr = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    if arr.size and (arr.min() < 0.0 or arr.max() > profile.theta_max):
        raise DomainError(
            f"theta outside [0, {profile.theta_max:.6g}]")
    out = np.empty(arr.size, dtype=np.float64)
    _kernels.fill_radii(profile.kind_id, profile.coeff_array(),
                        profile.focal_length, arr.ravel(), out)
    if np.isscalar(theta) or np.asarray(theta).ndim == 0:
        return float(out[0])
    return out.reshape(np.asarray(theta).shape)


def invert_radius(table: InverseTable, r_f):
    """Inverse mapping theta = p^-1(r_f); r_f scalar or array, pixels.

    r_f must lie in [0, p(theta_max)].
    """
    arr = np.atleast_1d(np.asarray(r_f, dtype=np.float64))
    r_max = float(table.radii[-1])
    if arr.size and (arr.min() < 0.0 or arr.max() > r_max):
        raise DomainError(f"radius outside [0, {r_max:.6g}]")
    out = np.empty(arr.size, dtype=np.float64)
    coeffs = np.empty(0, dtype=np.float64)
    _kernels.invert_radii(_kernels.KIND_POLYNOMIAL, coeffs, 1.0,
                          table.thetas, table.radii, arr.ravel(), out)
    if np.isscalar(r_f) or np.asarray(r_f).ndim == 0:
        return float(out[0])
    return out.reshape(np.asarray(r_f).shape)


def fisheye_to_perspective(profile: CalibrationProfile,
                           table: InverseTable | None,
                           coords: np.ndarray) -> ProjectedBlock:
    """Project absolute fisheye pixel coordinates to perspective coordinates.

    coords is (n, 2) with columns x, y. Every coordinate must lie inside
    the valid fisheye circle of radius p(theta_max) around the calibrated
    center. table may be None for equisolid profiles (closed-form inverse);
    polynomial profiles require one.
    """
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise UsageError("coords must be an (n, 2) array")
    thetas, radii = _table_arrays(profile, table)
    r_valid = _valid_radius(profile, table)
    n = coords.shape[0]
    out_x = np.empty(n)
    out_y = np.empty(n)
    flags = np.empty(n, dtype=np.bool_)
    bad = _kernels.project_block(
        coords[:, 0].copy(), coords[:, 1].copy(),
        profile.center[0], profile.center[1],
        profile.kind_id, profile.coeff_array(), profile.focal_length,
        thetas, radii, r_valid, out_x, out_y, flags)
    if bad >= 0:
        raise DomainError(
            f"coordinate {tuple(coords[bad])} outside the valid fisheye "
            f"circle (radius {r_valid:.3f})")
    return ProjectedBlock(perspective_coords=np.stack([out_x, out_y], axis=1),
                          wide_flags=flags)


def perspective_to_fisheye(profile: CalibrationProfile,
                           block: ProjectedBlock,
                           m: tuple[int, int],
                           wide_mode: bool) -> np.ndarray:
    """Shift a projected block by candidate m and map back to fisheye pixels.

    Returns (n, 2) absolute pixel coordinates; they may fall outside the
    frame, clipping is the caller's concern. With wide_mode the flagged
    coordinates get the ultra-wide treatment (negated shift, angle rotated
    by pi, radius mirrored about p(pi/2)); without it they are shifted and
    re-projected naively, reproducing the uncorrected behavior.
    """
    n = len(block)
    out_x = np.empty(n)
    out_y = np.empty(n)
    r_pi = profile.radius_at_half_pi() if profile.theta_max > _kernels.HALF_PI else 0.0
    _kernels.backproject_many(
        np.ascontiguousarray(block.perspective_coords[:, 0]),
        np.ascontiguousarray(block.perspective_coords[:, 1]),
        block.wide_flags, int(m[0]), int(m[1]), wide_mode,
        profile.kind_id, profile.coeff_array(), profile.focal_length,
        profile.center[0], profile.center[1], r_pi, out_x, out_y)
    return np.stack([out_x, out_y], axis=1)


def mirror_radius(r_fm: float, r_pi: float) -> float:
    """Ultra-wide radius correction: reflect r_fm about the 90-degree radius."""
    return 2.0 * r_pi - r_fm


def validate_profile(profile: CalibrationProfile) -> CalibrationProfile:
    """Full load-time validation: strict monotonicity on a dense grid and
    a near-zero forward radius at the center. Raises CalibrationError
    naming the violated invariant."""
    grid = np.linspace(0.0, profile.theta_max, MONOTONICITY_PROBE)
    radii = np.empty_like(grid)
    _kernels.fill_radii(profile.kind_id, profile.coeff_array(),
                        profile.focal_length, grid, radii)
    if not np.all(np.diff(radii) > 0):
        raise CalibrationError(
            "coeffs: p(theta) is not strictly increasing on [0, theta_max]")
    r_max = float(radii[-1])
    if abs(float(radii[0])) > CENTER_RADIUS_TOL * r_max:
        raise CalibrationError(
            f"coeffs: |p(0)| = {abs(float(radii[0])):.3g} exceeds "
            f"{CENTER_RADIUS_TOL:g} * p(theta_max) = {CENTER_RADIUS_TOL * r_max:.3g}")
    return profile


def _valid_radius(profile: CalibrationProfile, table: InverseTable | None) -> float:
    if table is not None:
        return float(table.radii[-1])
    return float(_kernels.radius_from_theta(
        profile.kind_id, profile.coeff_array(), profile.focal_length,
        profile.theta_max))


def _table_arrays(profile: CalibrationProfile, table: InverseTable | None):
    if table is not None:
        return table.thetas, table.radii
    if profile.kind != "equisolid":
        raise UsageError("polynomial profiles need an InverseTable")
    empty = np.empty(0, dtype=np.float64)
    return empty, empty
