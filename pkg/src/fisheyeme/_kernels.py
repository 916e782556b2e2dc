"""Numba kernels for projection, sampling, and block search.

Everything that touches pixel values during motion search or compensation
lives here so both stages sample the reference through literally the same
code path. All math is scalar ``math.*`` (libm) with strict IEEE semantics
(no fastmath), which keeps results reproducible across runs and platforms
and lets a plain-Python reference implementation match bit for bit.

Radial ``sqrt(x*x + y*y)`` is used instead of ``hypot`` on purpose:
CPython's ``math.hypot`` uses its own algorithm and does not match libm.
"""

import math

import numpy as np
from numba import njit, prange

KIND_POLYNOMIAL = 0
KIND_EQUISOLID = 1

HALF_PI = math.pi / 2.0
# forward rays this close to 90 degrees are nudged off the tan() pole
TAN_GUARD = 1e-6


@njit(cache=True)
def radius_from_theta(kind, coeffs, f, theta):
    """Forward radial mapping p(theta) in pixels, no domain check."""
    if kind == KIND_EQUISOLID:
        return 2.0 * f * math.sin(0.5 * theta)
    acc = 0.0
    for i in range(coeffs.shape[0] - 1, -1, -1):
        acc = acc * theta + coeffs[i]
    return acc


@njit(cache=True)
def fill_radii(kind, coeffs, f, thetas, out):
    for i in range(thetas.shape[0]):
        out[i] = radius_from_theta(kind, coeffs, f, thetas[i])


@njit(cache=True)
def theta_from_radius(kind, coeffs, f, thetas, radii, r):
    """Inverse mapping p^-1(r): closed form for the equisolid model,
    binary search plus linear interpolation on the table otherwise."""
    if kind == KIND_EQUISOLID:
        s = r / (2.0 * f)
        if s > 1.0:
            s = 1.0
        elif s < -1.0:
            s = -1.0
        return 2.0 * math.asin(s)
    n = radii.shape[0]
    # rightmost index with radii[i] <= r, clipped to a valid bracket
    lo = 0
    hi = n
    while lo < hi:
        mid = (lo + hi) // 2
        if radii[mid] <= r:
            lo = mid + 1
        else:
            hi = mid
    i = lo - 1
    if i < 0:
        i = 0
    elif i > n - 2:
        i = n - 2
    t = (r - radii[i]) / (radii[i + 1] - radii[i])
    return thetas[i] + t * (thetas[i + 1] - thetas[i])


@njit(cache=True)
def invert_radii(kind, coeffs, f, thetas, radii, rs, out):
    for k in range(rs.shape[0]):
        out[k] = theta_from_radius(kind, coeffs, f, thetas, radii, rs[k])


@njit(cache=True)
def project_block(xs_abs, ys_abs, cx, cy, kind, coeffs, f, thetas, radii,
                  r_valid, out_x, out_y, out_flag):
    """Fisheye pixels -> perspective coordinates relative to the center.

    Returns the index of the first coordinate outside the valid circle,
    or -1 when every coordinate projected.
    """
    bad = -1
    for k in range(xs_abs.shape[0]):
        dx = xs_abs[k] - cx
        dy = ys_abs[k] - cy
        r_f = math.sqrt(dx * dx + dy * dy)
        if r_f > r_valid:
            if bad < 0:
                bad = k
            out_x[k] = 0.0
            out_y[k] = 0.0
            out_flag[k] = False
            continue
        theta = theta_from_radius(kind, coeffs, f, thetas, radii, r_f)
        if abs(theta - HALF_PI) < TAN_GUARD:
            if theta > HALF_PI:
                theta = HALF_PI + TAN_GUARD
            else:
                theta = HALF_PI - TAN_GUARD
        r_p = f * math.tan(theta)
        if r_f > 0.0:
            ux = dx / r_f
            uy = dy / r_f
        else:
            ux = 0.0
            uy = 0.0
        out_x[k] = r_p * ux
        out_y[k] = r_p * uy
        out_flag[k] = r_p < 0.0
    return bad


@njit(cache=True)
def backproject_px(xp, yp, flagged, dx, dy, wide, kind, coeffs, f, cx, cy, r_pi):
    """One shifted perspective coordinate back to absolute fisheye pixels.

    For flagged coordinates in wide mode the shift is negated, the angle is
    rotated by pi (folded into the sign of the unit vector), and the radius
    is mirrored about r_pi = p(pi/2).
    """
    if flagged and wide:
        xs = xp - dx
        ys = yp - dy
    else:
        xs = xp + dx
        ys = yp + dy
    r_pm = math.sqrt(xs * xs + ys * ys)
    theta = math.atan(r_pm / f)
    r_fm = radius_from_theta(kind, coeffs, f, theta)
    if r_pm > 0.0:
        ux = xs / r_pm
        uy = ys / r_pm
    else:
        ux = 0.0
        uy = 0.0
    if flagged and wide:
        r_out = 2.0 * r_pi - r_fm
        return cx - r_out * ux, cy - r_out * uy
    return cx + r_fm * ux, cy + r_fm * uy


@njit(cache=True)
def bilinear(luma, x, y):
    """Bilinear sample with clamp-to-border semantics."""
    h, w = luma.shape
    wm1 = w - 1.0
    hm1 = h - 1.0
    if x < 0.0:
        x = 0.0
    elif x > wm1:
        x = wm1
    if y < 0.0:
        y = 0.0
    elif y > hm1:
        y = hm1
    x0 = int(math.floor(x))
    y0 = int(math.floor(y))
    x1 = x0 + 1
    if x1 > w - 1:
        x1 = w - 1
    y1 = y0 + 1
    if y1 > h - 1:
        y1 = h - 1
    fx = x - x0
    fy = y - y0
    top = (1.0 - fx) * luma[y0, x0] + fx * luma[y0, x1]
    bot = (1.0 - fx) * luma[y1, x0] + fx * luma[y1, x1]
    return (1.0 - fy) * top + fy * bot


@njit(cache=True)
def backproject_many(px, py, flags, dx, dy, wide, kind, coeffs, f, cx, cy,
                     r_pi, out_x, out_y):
    for k in range(px.shape[0]):
        out_x[k], out_y[k] = backproject_px(px[k], py[k], flags[k], dx, dy,
                                            wide, kind, coeffs, f, cx, cy, r_pi)


@njit(cache=True)
def sample_points(luma, xs, ys, out):
    for k in range(xs.shape[0]):
        out[k] = bilinear(luma, xs[k], ys[k])


@njit(cache=True)
def ssd_flat(a, b):
    """Sum of squared differences, accumulated sequentially in index order.

    The fixed order makes the value identical to the accumulation performed
    inside the search kernels.
    """
    acc = 0.0
    for k in range(a.shape[0]):
        d = a[k] - b[k]
        acc += d * d
    return acc


@njit(cache=True, parallel=True)
def search_traditional_batch(cur, ref, blocks, rng, out):
    """Exhaustive integer full search per block with clamped sampling.

    blocks: (nb, 4) int64 rows x0, y0, bw, bh. out: (nb, 3) float64 rows
    dx, dy, energy. Ties resolve to the smaller dx*dx+dy*dy, then to the
    earlier candidate in (dy, dx) raster order. The early break on
    ``acc > best`` is strict, so results equal a full evaluation exactly.
    """
    h, w = ref.shape
    for b in prange(blocks.shape[0]):
        x0 = blocks[b, 0]
        y0 = blocks[b, 1]
        bw = blocks[b, 2]
        bh = blocks[b, 3]
        best_e = np.inf
        best_d2 = 1 << 62
        best_dx = 0
        best_dy = 0
        for dy in range(-rng, rng + 1):
            for dx in range(-rng, rng + 1):
                acc = 0.0
                aborted = False
                for j in range(bh):
                    yy = y0 + j + dy
                    if yy < 0:
                        yy = 0
                    elif yy > h - 1:
                        yy = h - 1
                    for i in range(bw):
                        xx = x0 + i + dx
                        if xx < 0:
                            xx = 0
                        elif xx > w - 1:
                            xx = w - 1
                        d = cur[y0 + j, x0 + i] - ref[yy, xx]
                        acc += d * d
                    if acc > best_e:
                        aborted = True
                        break
                if aborted:
                    continue
                d2 = dx * dx + dy * dy
                if acc < best_e or (acc == best_e and d2 < best_d2):
                    best_e = acc
                    best_d2 = d2
                    best_dx = dx
                    best_dy = dy
        out[b, 0] = best_dx
        out[b, 1] = best_dy
        out[b, 2] = best_e


@njit(cache=True, parallel=True)
def search_fisheye_batch(cur, ref, blocks, offs, px, py, flags,
                         kind, coeffs, f, cx, cy, r_pi, rng, wide, out):
    """Full search over perspective-domain candidates for pre-projected blocks.

    px/py/flags hold the projected coordinates of all blocks back to back;
    offs[b] is the start of block b. Same tie-breaking and early-exit rule
    as the traditional search.
    """
    for b in prange(blocks.shape[0]):
        x0 = blocks[b, 0]
        y0 = blocks[b, 1]
        bw = blocks[b, 2]
        bh = blocks[b, 3]
        base = offs[b]
        best_e = np.inf
        best_d2 = 1 << 62
        best_dx = 0
        best_dy = 0
        for dy in range(-rng, rng + 1):
            for dx in range(-rng, rng + 1):
                acc = 0.0
                aborted = False
                k = base
                for j in range(bh):
                    for i in range(bw):
                        xf, yf = backproject_px(px[k], py[k], flags[k], dx, dy,
                                                wide, kind, coeffs, f, cx, cy, r_pi)
                        v = bilinear(ref, xf, yf)
                        d = cur[y0 + j, x0 + i] - v
                        acc += d * d
                        k += 1
                    if acc > best_e:
                        aborted = True
                        break
                if aborted:
                    continue
                d2 = dx * dx + dy * dy
                if acc < best_e or (acc == best_e and d2 < best_d2):
                    best_e = acc
                    best_d2 = d2
                    best_dx = dx
                    best_dy = dy
        out[b, 0] = best_dx
        out[b, 1] = best_dy
        out[b, 2] = best_e


@njit(cache=True, parallel=True)
def compensate_fisheye_batch(ref, blocks, offs, px, py, flags, mvs,
                             kind, coeffs, f, cx, cy, r_pi, wide, out):
    """Sample the reference at the back-projected winning vector per block.

    out is laid out like px/py; values are unrounded reals.
    """
    for b in prange(blocks.shape[0]):
        bw = blocks[b, 2]
        bh = blocks[b, 3]
        base = offs[b]
        dx = mvs[b, 0]
        dy = mvs[b, 1]
        for k in range(base, base + bw * bh):
            xf, yf = backproject_px(px[k], py[k], flags[k], dx, dy,
                                    wide, kind, coeffs, f, cx, cy, r_pi)
            out[k] = bilinear(ref, xf, yf)
