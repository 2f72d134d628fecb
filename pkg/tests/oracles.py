"""Brute-force reference implementations and synthetic fixtures used as test oracles.

Nothing here imports the code under test.
"""
import math

import numpy as np
from scipy import ndimage


def naive_convolve(src, k, border="replicate"):
    """Direct quadruple loop: out[y, x] = sum_ij k[i, j] * src[y + ay - i, x + ax - j].

    The sum is taken relative to c = src[0, 0] and c * sum(k) added back, the
    arrangement that keeps constant images exact.
    """
    src = np.asarray(src, dtype=float)
    k = np.asarray(k, dtype=float)
    h, w = src.shape
    kh, kw = k.shape
    ay, ax = (kh - 1) // 2, (kw - 1) // 2
    c = src[0, 0]
    ksum = math.fsum(k.ravel())
    out = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for i in range(kh):
                for j in range(kw):
                    yy, xx = y + ay - i, x + ax - j
                    if border == "replicate":
                        v = src[min(max(yy, 0), h - 1), min(max(xx, 0), w - 1)]
                    elif 0 <= yy < h and 0 <= xx < w:
                        v = src[yy, xx]
                    else:
                        v = 0.0
                    acc += k[i, j] * (v - c)
            out[y, x] = acc + c * ksum
    return out


def naive_aat(a):
    a = np.asarray(a, dtype=float)
    d, m = a.shape
    out = np.zeros((d, d))
    for i in range(d):
        for j in range(d):
            s = 0.0
            for t in range(m):
                s += a[i, t] * a[j, t]
            out[i, j] = s
    return out


def naive_hough_counts(points, shape, radii, offsets_for):
    """Vote counts from an explicit list of edge pixels, in whatever order they come."""
    h, w = shape
    counts = np.zeros((len(radii), h, w), dtype=np.int64)
    for k, r in enumerate(radii):
        for (py, px) in points:
            for dy, dx in offsets_for(int(r)):
                cy, cx = py - dy, px - dx
                if 0 <= cy < h and 0 <= cx < w:
                    counts[k, cy, cx] += 1
    return counts


# -- synthetic geometry ---------------------------------------------------

SQUARE_OFFSET = 30
SQUARE_SIDE = 64


def square_image(size=128, offset=SQUARE_OFFSET, side=SQUARE_SIDE):
    img = np.zeros((size, size))
    img[offset:offset + side, offset:offset + side] = 1.0
    return img


def square_sides(size=128, offset=SQUARE_OFFSET, side=SQUARE_SIDE):
    """Boolean masks of the four one-pixel boundary rows/columns of the square."""
    sides = []
    lo, hi = offset, offset + side - 1
    span = slice(lo, hi + 1)
    for idx in ((lo, span), (hi, span), (span, lo), (span, hi)):
        m = np.zeros((size, size), dtype=bool)
        m[idx] = True
        sides.append(m)
    return sides


def localization(edge_mask, sides, tol):
    """(fraction of edge pixels within tol of the boundary, per-side coverage, covered pixel count)."""
    boundary = np.logical_or.reduce(sides)
    if not edge_mask.any():
        return 0.0, [0.0] * len(sides), 0
    d_boundary = ndimage.distance_transform_edt(~boundary)
    precision = float((d_boundary[edge_mask] <= tol).mean())
    d_edge = ndimage.distance_transform_edt(~edge_mask)
    coverage = [float((d_edge[s] <= tol).mean()) for s in sides]
    covered = int((d_edge[boundary] <= tol).sum())
    return precision, coverage, covered


def circle_field(seed, n=30, size=256, r_lo=3, r_hi=8, gap=4):
    """Non-overlapping (cx, cy, r) triples fully inside the image, separated by ``gap`` px."""
    rng = np.random.default_rng(seed)
    circles = []
    while len(circles) < n:
        r = int(rng.integers(r_lo, r_hi + 1))
        cx = int(rng.integers(r + 2, size - r - 2))
        cy = int(rng.integers(r + 2, size - r - 2))
        if all((cx - a) ** 2 + (cy - b) ** 2 >= (r + q + gap) ** 2 for a, b, q in circles):
            circles.append((cx, cy, r))
    return circles


def match_circles(found, truth, center_tol=1.0):
    """Map each true circle to a found circle within center_tol; None where unmatched."""
    out = []
    for cx, cy, r in truth:
        best = None
        for c in found:
            d = np.hypot(c.cx - cx, c.cy - cy)
            if d <= center_tol and (best is None or d < best[0]):
                best = (d, c)
        out.append(None if best is None else best[1])
    return out


def smooth_texture(seed, size=64, sigma=3.0):
    """Band-limited random image in [0, 1], a stand-in for natural image content."""
    rng = np.random.default_rng(seed)
    img = ndimage.gaussian_filter(rng.random((size, size)), sigma)
    img -= img.min()
    return img / img.max()


def glyph_image(size=96):
    """An 'H'-like binary glyph: one simply connected shape with a single outer contour."""
    img = np.zeros((size, size))
    img[18:78, 22:34] = 1.0
    img[18:78, 62:74] = 1.0
    img[42:54, 34:62] = 1.0
    return img


def disk_field_image(seed, size=256, gap=8):
    """Filled disks (value 1 on 0) at the circle_field positions: blob-like cells."""
    yy, xx = np.mgrid[:size, :size]
    img = np.zeros((size, size))
    truth = circle_field(seed, size=size, gap=gap)
    for cx, cy, r in truth:
        img[(xx - cx) ** 2 + (yy - cy) ** 2 <= r * r] = 1.0
    return img, truth
