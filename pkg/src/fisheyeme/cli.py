"""Command-line front end.

Commands: estimate, compensate, evaluate, synth, fit, curve. Every command
that writes an output directory drops a manifest.json there recording the
resolved configuration, the SHA-256 of the profile file it used, and the
tool version, so artifacts stay traceable. Exit codes: 0 success, 1
runtime error, 2 usage error.
"""

from __future__ import annotations

import functools
import hashlib
import json
import math
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field

import click
import numpy as np

# environment probe noise from the numba threading-layer selection
warnings.filterwarnings(
    "ignore", message="The TBB threading layer requires TBB version")

from . import __version__
from .calib_fit import (fit_polynomial, load_profile, read_samples_csv,
                        save_profile)
from .compensate import compensate_frame
from .errors import CalibrationError, DomainError, FitError, UsageError
from .frame import read_pgm, write_pgm, write_ppm
from .metrics import evaluate_sequence, psnr_round, round_mask
from .metrics_report import render_csv, render_table
from .motion_search import METHODS, MotionField, SearchConfig, estimate
from .projection import CalibrationProfile, evaluate_poly
from .synth import PlaneScene, generate_sequence, make_texture

FRAME_PATTERN = "frame_%04d.pgm"
CURVE_POINTS = 512


@dataclass
class RunManifest:
    """Resolved configuration written verbatim into every output directory."""

    tool: str
    version: str
    command: str
    config: dict = field(default_factory=dict)
    calib_path: str | None = None
    calib_sha256: str | None = None
    frames: list[str] = field(default_factory=list)
    threads: int | None = None

    def write(self, out_dir: str) -> None:
        path = os.path.join(out_dir, "manifest.json")
        with open(path, "w", encoding="ascii") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _manifest(command: str, config: dict, calib: str | None,
              frames: list[str], threads: int | None) -> RunManifest:
    sha = None
    if calib is not None:
        with open(calib, "rb") as fh:
            sha = hashlib.sha256(fh.read()).hexdigest()
    return RunManifest(tool="fisheyeme", version=__version__, command=command,
                       config=config, calib_path=calib, calib_sha256=sha,
                       frames=list(frames), threads=threads)


def _runtime_errors(fn):
    """Map library errors to exit 1 without a traceback; argument-contract
    problems surface as click usage errors (exit 2) before we get here."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (DomainError, CalibrationError, FitError, UsageError,
                OSError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _set_threads(threads: int | None) -> int | None:
    if threads is None:
        env = os.environ.get("FISHEYE_ME_THREADS")
        threads = int(env) if env else None
    if threads is not None:
        import numba

        threads = max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS))
        numba.set_num_threads(threads)
    return threads


def _load_calib(calib: str | None, method: str) -> CalibrationProfile | None:
    if calib is None:
        if method != "tme":
            raise click.UsageError(
                f"--calib is required for method '{method}'")
        return None
    return load_profile(calib)


def _parse_range(spec: str) -> tuple[int, int]:
    try:
        a, b = spec.split(":")
        lo, hi = int(a), int(b)
    except ValueError:
        raise click.UsageError(f"--frames must be 'a:b', got {spec!r}")
    if hi < lo:
        raise click.UsageError(f"--frames range {spec!r} is empty")
    return lo, hi


@click.group()
@click.version_option(version=__version__)
@click.option("--threads", type=int, default=None,
              help="Cap the worker pool (default: FISHEYE_ME_THREADS or all cores).")
@click.pass_context
def main(ctx, threads):
    """Calibrated fisheye motion estimation and compensation."""
    ctx.ensure_object(dict)
    ctx.obj["threads"] = _set_threads(threads)


method_option = click.option(
    "--method", type=click.Choice(METHODS), required=True,
    help="tme: traditional block matching; eme/cme: fisheye matching via the "
         "equisolid or the loaded calibrated model; hme/chme: per-block "
         "hybrids; *_plus: with the ultra-wide (>90 deg) correction.")


@main.command()
@click.option("--ref", "ref_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--cur", "cur_path", required=True, type=click.Path(exists=True, dir_okay=False))
@method_option
@click.option("--block-size", type=int, default=16, show_default=True)
@click.option("--search-range", type=int, default=64, show_default=True)
@click.option("--calib", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.pass_context
@_runtime_errors
def cmd_estimate(ctx, ref_path, cur_path, method, block_size, search_range,
                 calib, out_dir):
    """Estimate a motion field between two PGM frames."""
    profile = _load_calib(calib, method)
    cfg = SearchConfig(block_size=block_size, search_range=search_range,
                       method=method)
    cur = read_pgm(cur_path)
    ref = read_pgm(ref_path)
    field_ = estimate(cur, ref, cfg, profile)
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "field.json"), "w", encoding="ascii") as fh:
        fh.write(field_.to_json())
        fh.write("\n")
    _manifest("estimate",
              {"method": method, "block_size": block_size,
               "search_range": search_range, "wide_mode": cfg.wide_mode},
              calib, [ref_path, cur_path], ctx.obj["threads"]).write(out_dir)
    click.echo(f"wrote {os.path.join(out_dir, 'field.json')}")


main.add_command(cmd_estimate, name="estimate")


@main.command()
@click.option("--ref", "ref_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--cur", "cur_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--field", "field_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@method_option
@click.option("--block-size", type=int, default=16, show_default=True)
@click.option("--search-range", type=int, default=64, show_default=True)
@click.option("--calib", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.pass_context
@_runtime_errors
def cmd_compensate(ctx, ref_path, cur_path, field_path, method, block_size,
                   search_range, calib, out_dir):
    """Build the compensated frame and decision mask for a stored field."""
    profile = _load_calib(calib, method)
    cfg = SearchConfig(block_size=block_size, search_range=search_range,
                       method=method)
    cur = read_pgm(cur_path)
    ref = read_pgm(ref_path)
    with open(field_path, "r", encoding="ascii") as fh:
        field_ = MotionField.from_json(fh.read(), ref.width, ref.height,
                                       block_size)
    comp, mask = compensate_frame(ref, field_, cfg, profile)
    os.makedirs(out_dir, exist_ok=True)
    write_pgm(comp, os.path.join(out_dir, "compensated.pgm"))
    write_ppm(mask.to_rgb(), os.path.join(out_dir, "mask.ppm"))
    write_ppm(mask.overlay(comp.luma), os.path.join(out_dir, "overlay.ppm"))
    with open(os.path.join(out_dir, "decisions.csv"), "w", encoding="ascii") as fh:
        fh.write("\n".join(mask.csv_rows()) + "\n")
    if profile is not None:
        psnr = psnr_round(cur, comp, round_mask(profile, cur.width, cur.height))
    else:
        # no circle without a profile: full-frame PSNR
        psnr = psnr_round(cur, comp, np.ones_like(cur.luma, dtype=bool))
    _manifest("compensate",
              {"method": method, "block_size": block_size,
               "search_range": search_range, "field": field_path},
              calib, [ref_path, cur_path], ctx.obj["threads"]).write(out_dir)
    click.echo(f"method={method} psnr_db={'inf' if math.isinf(psnr) else f'{psnr:.4f}'}")


main.add_command(cmd_compensate, name="compensate")


@main.command()
@click.option("--seq-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--frames", "frames_spec", required=True,
              help="Inclusive frame index range a:b (files frame_%04d.pgm).")
@click.option("--methods", required=True,
              help="Comma-separated list, e.g. tme,hme,chme_plus.")
@click.option("--block-size", type=int, default=16, show_default=True)
@click.option("--search-range", type=int, default=64, show_default=True)
@click.option("--calib", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.pass_context
@_runtime_errors
def cmd_evaluate(ctx, seq_dir, frames_spec, methods, block_size, search_range,
                 calib, out_dir):
    """Mean prediction PSNR per method over a numbered PGM sequence."""
    lo, hi = _parse_range(frames_spec)
    method_list = [m.strip() for m in methods.split(",") if m.strip()]
    for m in method_list:
        if m not in METHODS:
            raise click.UsageError(f"unknown method {m!r}")
    if not method_list:
        raise click.UsageError("--methods is empty")
    profile = load_profile(calib)
    paths = [os.path.join(seq_dir, FRAME_PATTERN % k) for k in range(lo, hi + 1)]
    for p in paths:
        if not os.path.exists(p):
            raise OSError(f"missing frame file: {p}")
    frames = [read_pgm(p) for p in paths]
    rows = evaluate_sequence(frames, method_list, block_size, search_range,
                             profile, sequence=os.path.basename(os.path.abspath(seq_dir)),
                             frame_label=f"{lo}:{hi}")
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.csv"), "w", encoding="ascii") as fh:
        fh.write(render_csv(rows))
    _manifest("evaluate",
              {"methods": method_list, "block_size": block_size,
               "search_range": search_range, "frames": frames_spec},
              calib, paths, ctx.obj["threads"]).write(out_dir)
    click.echo(render_table(rows), nl=False)


main.add_command(cmd_evaluate, name="evaluate")


@main.command()
@click.option("--calib", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--width", type=int, default=320, show_default=True)
@click.option("--height", type=int, default=320, show_default=True)
@click.option("--n-frames", type=int, default=3, show_default=True)
@click.option("--step", default="8,0", show_default=True,
              help="Texture-plane shift per frame, du,dv in texture px.")
@click.option("--scale", type=float, default=1.0, show_default=True,
              help="Texture px per perspective px.")
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.pass_context
@_runtime_errors
def cmd_synth(ctx, calib, width, height, n_frames, step, scale, seed, out_dir):
    """Render a translational ground-truth sequence through a profile."""
    try:
        du, dv = (float(v) for v in step.split(","))
    except ValueError:
        raise click.UsageError(f"--step must be 'du,dv', got {step!r}")
    profile = load_profile(calib)
    scene = PlaneScene(texture=make_texture(seed=seed), scale=scale)
    frames, truth = generate_sequence(scene, profile, n_frames, (du, dv),
                                      width, height)
    os.makedirs(out_dir, exist_ok=True)
    names = []
    for k, fr in enumerate(frames):
        name = FRAME_PATTERN % (k + 1)
        write_pgm(fr, os.path.join(out_dir, name))
        names.append(name)
    with open(os.path.join(out_dir, "truth.json"), "w", encoding="ascii") as fh:
        json.dump(truth, fh, indent=2)
        fh.write("\n")
    _manifest("synth",
              {"width": width, "height": height, "n_frames": n_frames,
               "step": [du, dv], "scale": scale, "seed": seed},
              calib, names, ctx.obj["threads"]).write(out_dir)
    click.echo(f"wrote {n_frames} frames to {out_dir}")


main.add_command(cmd_synth, name="synth")


@main.command()
@click.option("--samples", required=True, type=click.Path(exists=True, dir_okay=False),
              help="CSV with header theta_rad,radius_px.")
@click.option("--degree", type=int, default=4, show_default=True)
@click.option("--focal-length", type=float, required=True)
@click.option("--center", required=True, help="Calibrated center c_x,c_y.")
@click.option("--fov-deg", type=float, required=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@_runtime_errors
def cmd_fit(samples, degree, focal_length, center, fov_deg, out_path):
    """Fit the radial polynomial and write a loadable profile JSON.

    The constant term of the raw least-squares fit is snapped to zero
    (the center must map to radius zero); the reported RMS reflects the
    saved coefficients.
    """
    try:
        cx, cy = (float(v) for v in center.split(","))
    except ValueError:
        raise click.UsageError(f"--center must be 'c_x,c_y', got {center!r}")
    sample_list = read_samples_csv(samples)
    coeffs, _ = fit_polynomial(sample_list, degree)
    coeffs = coeffs.copy()
    coeffs[0] = 0.0
    thetas = np.array([s.theta for s in sample_list])
    radii = np.array([s.radius for s in sample_list])
    res = np.vander(thetas, degree + 1, increasing=True) @ coeffs - radii
    rms = float(np.sqrt(np.mean(res * res)))
    profile = CalibrationProfile(kind="polynomial", focal_length=focal_length,
                                 center=(cx, cy), fov=math.radians(fov_deg),
                                 coeffs=tuple(coeffs))
    save_profile(profile, out_path)
    click.echo(f"degree={degree} rms_px={rms:.6g} wrote {out_path}")


main.add_command(cmd_fit, name="fit")


@main.command()
@click.option("--calib", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@_runtime_errors
def cmd_curve(calib, out_path):
    """Export the calibration curve as CSV rows theta_rad,radius_px."""
    profile = load_profile(calib)
    thetas = np.linspace(0.0, profile.theta_max, CURVE_POINTS)
    radii = evaluate_poly(profile, thetas)
    with open(out_path, "w", encoding="ascii") as fh:
        fh.write("theta_rad,radius_px\n")
        for t, r in zip(thetas, radii):
            fh.write(f"{float(t)!r},{float(r)!r}\n")
    click.echo(f"wrote {CURVE_POINTS} rows to {out_path}")


main.add_command(cmd_curve, name="curve")


if __name__ == "__main__":
    main()
