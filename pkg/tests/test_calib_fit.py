"""Polynomial fitting and profile file I/O."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fisheyeme import (CalibrationProfile, fit_polynomial, load_profile,
                       make_equisolid, save_profile)
from fisheyeme.calib_fit import (CalibSample, profile_to_dict,
                                 read_samples_csv)
from fisheyeme.errors import CalibrationError, FitError


def poly_samples(coeffs, thetas):
    return [CalibSample(float(t), float(np.polyval(coeffs[::-1], t)))
            for t in thetas]


def test_recovers_known_polynomial():
    true = np.array([0.0, 300.0, -20.0, 5.0, -1.0])
    samples = poly_samples(true, np.linspace(0.0, 1.6, 50))
    coeffs, rms = fit_polynomial(samples, 4)
    assert np.allclose(coeffs, true, rtol=1e-6, atol=1e-9)
    assert rms < 1e-8


def test_two_samples_degree_one_exact_line():
    samples = [CalibSample(0.2, 50.0), CalibSample(1.0, 250.0)]
    coeffs, rms = fit_polynomial(samples, 1)
    assert coeffs[0] == pytest.approx(0.0, abs=1e-10)
    assert coeffs[1] == pytest.approx(250.0, abs=1e-9)
    assert rms < 1e-10


def test_equisolid_fit_residual_bound():
    f = 376.18
    thetas = np.linspace(0.0, 1.6, 50)
    samples = [CalibSample(float(t), 2.0 * f * math.sin(float(t) / 2.0))
               for t in thetas]
    _, rms = fit_polynomial(samples, 4)
    assert rms < 0.5


def test_fit_is_local_minimum():
    f = 200.0
    rng = np.random.default_rng(3)
    thetas = np.linspace(0.0, 1.5, 40)
    radii = 2.0 * f * np.sin(thetas / 2.0) + rng.normal(0, 0.3, thetas.size)
    samples = [CalibSample(float(t), float(max(r, 0.0)))
               for t, r in zip(thetas, radii)]
    coeffs, rms = fit_polynomial(samples, 4)
    vander = np.vander(thetas, 5, increasing=True)
    target = np.array([s.radius for s in samples])
    base = float(np.sqrt(np.mean((vander @ coeffs - target) ** 2)))
    for axis in range(5):
        for sign in (-1.0, 1.0):
            pert = coeffs.copy()
            pert[axis] += sign * 1e-6
            rms_p = float(np.sqrt(np.mean((vander @ pert - target) ** 2)))
            assert base <= rms_p + 1e-15
    assert base == pytest.approx(rms)


def test_degree_escalation_never_hurts():
    rng = np.random.default_rng(11)
    thetas = np.linspace(0.0, 1.5, 60)
    radii = 300 * thetas - 12 * thetas ** 3 + rng.normal(0, 0.5, thetas.size)
    samples = [CalibSample(float(t), float(max(r, 0.0)))
               for t, r in zip(thetas, radii)]
    last = math.inf
    for degree in range(1, 7):
        _, rms = fit_polynomial(samples, degree)
        assert rms <= last + 1e-12
        last = rms


def test_fit_rejects_degenerate_samples():
    with pytest.raises(FitError, match="distinct"):
        fit_polynomial([CalibSample(0.5, 10.0)] * 6, 4)
    with pytest.raises(FitError, match="at least"):
        fit_polynomial([CalibSample(0.1, 1.0), CalibSample(0.2, 2.0)], 4)


def test_sample_validation():
    with pytest.raises(CalibrationError):
        CalibSample(-0.1, 5.0)
    with pytest.raises(CalibrationError):
        CalibSample(math.pi, 5.0)
    with pytest.raises(CalibrationError):
        CalibSample(0.5, -1.0)


@settings(deadline=None, max_examples=25)
@given(a1=st.floats(100.0, 400.0), a2=st.floats(-30.0, 30.0),
       a3=st.floats(-10.0, 10.0), a4=st.floats(-3.0, 3.0))
def test_noiseless_fit_is_interpolating(a1, a2, a3, a4):
    true = np.array([0.0, a1, a2, a3, a4])
    samples = poly_samples(true, np.linspace(0.0, 1.55, 30))
    coeffs, rms = fit_polynomial(samples, 4)
    assert rms < 1e-6


# ----------------------------------------------------------------- file io

def test_load_valid_equisolid(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps({
        "kind": "equisolid", "focal_length": 376.18,
        "center": [543.0, 542.5], "fov_deg": 185.0}))
    prof = load_profile(path)
    assert prof.kind == "equisolid"
    assert prof.theta_max == pytest.approx(math.radians(92.5))


def test_load_rejects_decreasing_polynomial(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps({
        "kind": "polynomial", "coeffs": [0.0, -300.0],
        "focal_length": 100.0, "center": [0.0, 0.0], "fov_deg": 160.0}))
    with pytest.raises(CalibrationError, match="increasing"):
        load_profile(path)


def test_load_rejects_center_term(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps({
        "kind": "polynomial", "coeffs": [2.0, 300.0],
        "focal_length": 100.0, "center": [0.0, 0.0], "fov_deg": 160.0}))
    with pytest.raises(CalibrationError, match=r"p\(0\)|\|p"):
        load_profile(path)


@pytest.mark.parametrize("missing", ["kind", "focal_length", "center", "fov_deg"])
def test_load_names_missing_field(tmp_path, missing):
    raw = {"kind": "equisolid", "focal_length": 100.0,
           "center": [0.0, 0.0], "fov_deg": 170.0}
    del raw[missing]
    path = tmp_path / "p.json"
    path.write_text(json.dumps(raw))
    with pytest.raises(CalibrationError, match=missing):
        load_profile(path)


def test_load_names_bad_value(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps({
        "kind": "equisolid", "focal_length": "wide",
        "center": [0.0, 0.0], "fov_deg": 170.0}))
    with pytest.raises(CalibrationError):
        load_profile(path)


def test_save_load_round_trip_is_byte_stable(tmp_path):
    prof = CalibrationProfile(
        kind="polynomial", focal_length=365.0, center=(543.25, 541.75),
        fov=math.radians(185.0), coeffs=(0.0, 329.0, -9.3, -14.2, 2.17))
    p1 = tmp_path / "a.json"
    p2 = tmp_path / "b.json"
    save_profile(prof, p1)
    save_profile(load_profile(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_profile_dict_shape():
    prof = make_equisolid(100.0, (1.0, 2.0), math.radians(170))
    d = profile_to_dict(prof)
    assert list(d) == ["kind", "focal_length", "center", "fov_deg"]
    assert d["fov_deg"] == pytest.approx(170.0)


def test_samples_csv_round_trip(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("theta_rad,radius_px\n0.0,0.0\n0.5,150.25\n")
    samples = read_samples_csv(path)
    assert [s.theta for s in samples] == [0.0, 0.5]
    assert samples[1].radius == 150.25


def test_samples_csv_requires_header(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("0.0,0.0\n")
    with pytest.raises(CalibrationError, match="header"):
        read_samples_csv(path)
