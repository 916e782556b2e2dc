"""Shared fixtures: calibration profiles and the synthetic ground-truth pair.

The 185-degree synthetic sequence is expensive to search (range 64), so
estimates are computed once per method in a session-scoped cache and
reused by the unit tests and the acceptance suite.
"""

import math

import numpy as np
import pytest

from fisheyeme import (CalibrationProfile, Frame, PlaneScene, SearchConfig,
                       estimate, fit_polynomial, make_equisolid, make_texture,
                       generate_sequence)
from fisheyeme.calib_fit import CalibSample

# synthetic-scene constants: 185 deg FOV, circle cropped by the frame so the
# over-90-degree annulus crosses the corners where 16 px blocks can sit
# fully inside it
SYNTH_SIZE = 320
SYNTH_F = 130.0
SYNTH_FOV_DEG = 185.0
SYNTH_STEP = (8.0, 0.0)
SYNTH_SEED = 7
SYNTH_FRAMES = 3


@pytest.fixture(scope="session")
def equisolid_synth() -> CalibrationProfile:
    c = (SYNTH_SIZE - 1) / 2.0
    return make_equisolid(SYNTH_F, (c, c), math.radians(SYNTH_FOV_DEG))


@pytest.fixture(scope="session")
def fitted_poly_synth(equisolid_synth) -> CalibrationProfile:
    """Degree-4 polynomial fitted to noiseless equisolid samples, constant
    term snapped to zero so the profile passes strict load validation."""
    thetas = np.linspace(0.0, equisolid_synth.theta_max, 64)
    samples = [CalibSample(float(t), 2.0 * SYNTH_F * math.sin(float(t) / 2.0))
               for t in thetas]
    coeffs, _ = fit_polynomial(samples, 4)
    coeffs = coeffs.copy()
    coeffs[0] = 0.0
    return CalibrationProfile(kind="polynomial",
                              focal_length=equisolid_synth.focal_length,
                              center=equisolid_synth.center,
                              fov=equisolid_synth.fov,
                              coeffs=tuple(coeffs))


@pytest.fixture(scope="session")
def shrunk_poly_synth(fitted_poly_synth) -> CalibrationProfile:
    """Same shape scaled down 3%: its 90-degree radius is smaller than the
    equisolid one at equal f, shrinking the usable circle."""
    coeffs = tuple(0.97 * c for c in fitted_poly_synth.coeffs)
    return CalibrationProfile(kind="polynomial",
                              focal_length=fitted_poly_synth.focal_length,
                              center=fitted_poly_synth.center,
                              fov=fitted_poly_synth.fov,
                              coeffs=coeffs)


@pytest.fixture(scope="session")
def synth_sequence(equisolid_synth):
    scene = PlaneScene(texture=make_texture(seed=SYNTH_SEED), scale=1.0)
    frames, truth = generate_sequence(scene, equisolid_synth, SYNTH_FRAMES,
                                      SYNTH_STEP, SYNTH_SIZE, SYNTH_SIZE)
    assert truth == {"dx_p": 8.0, "dy_p": 0.0}
    return frames


@pytest.fixture(scope="session")
def synth_estimates(synth_sequence, equisolid_synth, fitted_poly_synth,
                    shrunk_poly_synth):
    """Lazy per-(method, profile, pair) cache of full-range motion fields."""
    profiles = {
        "equisolid": equisolid_synth,
        "fitted": fitted_poly_synth,
        "shrunk": shrunk_poly_synth,
    }
    cache = {}

    def get(method: str, pair: int = 0, profile: str = "equisolid"):
        key = (method, pair, profile)
        if key not in cache:
            cfg = SearchConfig(block_size=16, search_range=64, method=method)
            cache[key] = estimate(synth_sequence[pair + 1],
                                  synth_sequence[pair], cfg,
                                  profiles[profile])
        return cache[key]

    get.cache = cache
    get.profiles = profiles
    return get


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def random_frame(rng, w, h, lo=0, hi=256) -> Frame:
    return Frame.from_array(rng.integers(lo, hi, size=(h, w), dtype=np.uint8))


# filled by the acceptance suite; echoed after the run regardless of capture
ACCEPTANCE_RESULTS: list[tuple[int, str, str]] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.write_sep("-", "acceptance criteria")
        for n, status, title in sorted(ACCEPTANCE_RESULTS):
            terminalreporter.write_line(f"[criterion {n}] {status}  {title}")
