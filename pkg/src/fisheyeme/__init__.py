"""Calibrated fisheye motion estimation and compensation.

Blocks of a fisheye frame are projected to perspective coordinates through
a calibrated radial model, shifted by integer candidates, re-projected
(with an optional correction for rays past 90 degrees), and matched
against an interpolated reference by SSD; a hybrid mode picks per block
between this and traditional block matching.
"""

__version__ = "0.1.0"

from .calib_fit import (CalibSample, fit_polynomial, load_profile,
                        save_profile)
from .compensate import DecisionMask, compensate_frame
from .errors import CalibrationError, DomainError, FitError, UsageError
from .frame import Frame, InterpolatedRef, read_pgm, sample, write_pgm, write_ppm
from .metrics import evaluate_sequence, psnr_round, round_mask
from .motion_search import (METHODS, MotionField, MotionVector, SearchConfig,
                            estimate, search_fisheye, search_traditional, ssd)
from .projection import (CalibrationProfile, InverseTable, PolarPoint,
                         ProjectedBlock, evaluate_poly, fisheye_to_perspective,
                         invert_radius, make_equisolid, mirror_radius,
                         perspective_to_fisheye, validate_profile)
from .synth import PlaneScene, generate_sequence, make_texture, render_fisheye

__all__ = [
    "__version__",
    "CalibSample", "fit_polynomial", "load_profile", "save_profile",
    "DecisionMask", "compensate_frame",
    "CalibrationError", "DomainError", "FitError", "UsageError",
    "Frame", "InterpolatedRef", "read_pgm", "sample", "write_pgm", "write_ppm",
    "evaluate_sequence", "psnr_round", "round_mask",
    "METHODS", "MotionField", "MotionVector", "SearchConfig",
    "estimate", "search_fisheye", "search_traditional", "ssd",
    "CalibrationProfile", "InverseTable", "PolarPoint", "ProjectedBlock",
    "evaluate_poly", "fisheye_to_perspective", "invert_radius",
    "make_equisolid", "mirror_radius", "perspective_to_fisheye",
    "validate_profile",
    "PlaneScene", "generate_sequence", "make_texture", "render_fisheye",
]
