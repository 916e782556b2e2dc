"""Polynomial fitting from (theta, radius) samples and profile file I/O.

The fit is plain unconstrained least squares on the Vandermonde system,
solved through an SVD-backed solver rather than explicit normal equations.
Fitting happens in radius space: residuals are pixel distances along the
radial axis, which differs from toolboxes that minimize image-plane
reprojection error.

Profile files are JSON objects::

    {"kind": "polynomial" | "equisolid",
     "coeffs": [a_0, a_1, ...],        # low order first, absent for equisolid
     "focal_length": <pixels>,
     "center": [c_x, c_y],
     "fov_deg": <degrees>}

Loading validates the full profile contract (strict monotonicity on a
dense grid, near-zero radius at the center) and names the offending field
on failure.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import CalibrationError, FitError
from .projection import CalibrationProfile, validate_profile

SAMPLE_CSV_HEADER = "theta_rad,radius_px"


@dataclass(frozen=True)
class CalibSample:
    theta: float
    radius: float

    def __post_init__(self):
        if not 0.0 <= self.theta < math.pi:
            raise CalibrationError(f"theta: {self.theta} outside [0, pi)")
        if self.radius < 0.0:
            raise CalibrationError(f"radius: {self.radius} is negative")


def fit_polynomial(samples: list[CalibSample], degree: int):
    """Least-squares polynomial through the samples.

    Returns (coeffs, rms_residual) with coefficients low-order first.
    """
    if degree < 1:
        raise FitError("degree must be >= 1")
    if len(samples) < degree + 1:
        raise FitError(
            f"need at least {degree + 1} samples for degree {degree}, "
            f"got {len(samples)}")
    thetas = np.array([s.theta for s in samples], dtype=np.float64)
    radii = np.array([s.radius for s in samples], dtype=np.float64)
    if np.unique(thetas).size < degree + 1:
        raise FitError("samples must contain at least degree+1 distinct angles")
    vander = np.vander(thetas, degree + 1, increasing=True)
    coeffs, _, rank, _ = np.linalg.lstsq(vander, radii, rcond=None)
    if rank < degree + 1:
        raise FitError(
            f"rank-deficient system (rank {rank} < {degree + 1}); "
            "samples are degenerate")
    residual = vander @ coeffs - radii
    rms = float(np.sqrt(np.mean(residual * residual)))
    return coeffs, rms


def read_samples_csv(path) -> list[CalibSample]:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != SAMPLE_CSV_HEADER:
        raise CalibrationError(
            f"samples file must start with header '{SAMPLE_CSV_HEADER}'")
    samples = []
    for ln in lines[1:]:
        theta_s, radius_s = ln.split(",")
        samples.append(CalibSample(theta=float(theta_s), radius=float(radius_s)))
    return samples


def load_profile(path) -> CalibrationProfile:
    """Load and fully validate a profile JSON file."""
    with open(path, "r", encoding="ascii") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CalibrationError(f"profile JSON is malformed: {exc}") from exc
    profile = profile_from_dict(raw)
    return validate_profile(profile)


def profile_from_dict(raw: dict) -> CalibrationProfile:
    for field in ("kind", "focal_length", "center", "fov_deg"):
        if field not in raw:
            raise CalibrationError(f"{field}: missing")
    kind = raw["kind"]
    if kind == "polynomial" and "coeffs" not in raw:
        raise CalibrationError("coeffs: missing for polynomial profile")
    center = raw["center"]
    if not (isinstance(center, (list, tuple)) and len(center) == 2):
        raise CalibrationError("center: must be [c_x, c_y]")
    try:
        return CalibrationProfile(
            kind=kind,
            focal_length=float(raw["focal_length"]),
            center=(float(center[0]), float(center[1])),
            fov=math.radians(float(raw["fov_deg"])),
            coeffs=tuple(float(c) for c in raw.get("coeffs", ())),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, CalibrationError):
            raise
        raise CalibrationError(f"profile field has a non-numeric value: {exc}")


def profile_to_dict(profile: CalibrationProfile) -> dict:
    out = {"kind": profile.kind}
    if profile.kind == "polynomial":
        out["coeffs"] = list(profile.coeffs)
    out["focal_length"] = profile.focal_length
    out["center"] = [profile.center[0], profile.center[1]]
    out["fov_deg"] = math.degrees(profile.fov)
    return out


def save_profile(profile: CalibrationProfile, path) -> None:
    """Write the canonical JSON form; save/load round trips byte-stably."""
    with open(path, "w", encoding="ascii") as fh:
        json.dump(profile_to_dict(profile), fh, indent=2)
        fh.write("\n")
