"""Baseline edge detectors: Sobel, Prewitt, Laplacian of Gaussian and Canny."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imgcore import as_image, convolve, normalize, threshold

SOBEL_X = np.array([[-1.0, 0.0, 1.0],
                    [-2.0, 0.0, 2.0],
                    [-1.0, 0.0, 1.0]])
SOBEL_Y = SOBEL_X.T.copy()
PREWITT_X = np.array([[-1.0, 0.0, 1.0],
                      [-1.0, 0.0, 1.0],
                      [-1.0, 0.0, 1.0]])
PREWITT_Y = PREWITT_X.T.copy()

DEFAULT_BINARIZE_PERCENTILE = 0.9
DEFAULT_LOG_SIGMA = 2.0
DEFAULT_SLOPE_FLOOR = 0.01


@dataclass(frozen=True)
class GradientField:
    gx: np.ndarray
    gy: np.ndarray
    magnitude: np.ndarray
    direction: np.ndarray


@dataclass(frozen=True)
class CannyParams:
    sigma: float = 1.4
    low: float = 0.1
    high: float = 0.3

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not 0 < self.low < self.high <= 1:
            raise ValueError(f"need 0 < low < high <= 1, got low={self.low}, high={self.high}")


def _gradient(src, kx, ky, border) -> GradientField:
    img = as_image(src)
    if img.shape[0] < 3 or img.shape[1] < 3:
        raise ValueError(f"image must be at least 3x3, got {img.shape}")
    gx = convolve(img, kx, border)
    gy = convolve(img, ky, border)
    return GradientField(gx, gy, np.hypot(gx, gy), np.arctan2(gy, gx))


def sobel(src, border: str = "replicate") -> GradientField:
    return _gradient(src, SOBEL_X, SOBEL_Y, border)


def prewitt(src, border: str = "replicate") -> GradientField:
    return _gradient(src, PREWITT_X, PREWITT_Y, border)


def binarize_magnitude(field: GradientField,
                       percentile: float = DEFAULT_BINARIZE_PERCENTILE) -> np.ndarray:
    """Binary edge map: normalized magnitude kept at or above its ``percentile`` cut."""
    cut, _ = threshold(normalize(field.magnitude), percentile)
    return (cut > 0).astype(np.float64)


def sobel_edges(src, percentile: float = DEFAULT_BINARIZE_PERCENTILE,
                border: str = "replicate") -> np.ndarray:
    return binarize_magnitude(sobel(src, border), percentile)


def prewitt_edges(src, percentile: float = DEFAULT_BINARIZE_PERCENTILE,
                  border: str = "replicate") -> np.ndarray:
    return binarize_magnitude(prewitt(src, border), percentile)


def log_kernel_raw(sigma: float, size: int) -> np.ndarray:
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if size < 1 or size % 2 == 0:
        raise ValueError(f"LoG kernel size must be a positive odd integer, got {size}")
    half = size // 2
    y, x = np.mgrid[-half:half + 1, -half:half + 1].astype(np.float64)
    q = (x * x + y * y) / (2.0 * sigma * sigma)
    return -(1.0 / (math.pi * sigma ** 4)) * (1.0 - q) * np.exp(-q)


def log_kernel(sigma: float, size: int | None = None) -> np.ndarray:
    """Sampled Laplacian-of-Gaussian kernel, mean-corrected to sum to zero.

    ``size`` defaults to ``2 * ceil(3 * sigma) + 1``.
    """
    if size is None:
        size = 2 * math.ceil(3 * sigma) + 1
    k = log_kernel_raw(sigma, size)
    k = k - k.mean()
    # mean removal leaves an O(eps) residue; push it onto the center tap
    half = size // 2
    k[half, half] -= k.sum()
    return k


def _neighbor_slices(h: int, w: int, dy: int, dx: int):
    """Index pairs (a, b) with b = a shifted by (dy, dx), both inside an h x w grid."""
    if dx >= 0:
        xa, xb = slice(0, w - dx), slice(dx, w)
    else:
        xa, xb = slice(-dx, w), slice(0, w + dx)
    return (slice(0, h - dy), xa), (slice(dy, h), xb)


def zero_crossings(response: np.ndarray, floor: float) -> np.ndarray:
    """Mark zero-crossings of ``response`` whose across-pair jump exceeds ``floor``.

    Horizontal, vertical and both diagonal neighbor pairs are examined; of
    each crossing pair only the pixel closer to zero is marked (the first one
    on a tie), which keeps contours one pixel wide.
    """
    h, w = response.shape
    edges = np.zeros((h, w), dtype=bool)
    for dy, dx in ((0, 1), (1, 0), (1, 1), (1, -1)):
        pa, pb = _neighbor_slices(h, w, dy, dx)
        a = response[pa]
        b = response[pb]
        cross = (a * b < 0) & (np.abs(a - b) > floor)
        first = cross & (np.abs(a) <= np.abs(b))
        edges[pa] |= first
        edges[pb] |= cross & ~first
    return edges


def log_detect(src, sigma: float = DEFAULT_LOG_SIGMA, slope_floor: float = DEFAULT_SLOPE_FLOOR,
               border: str = "replicate") -> np.ndarray:
    """Binary zero-crossing map of the LoG response.

    A crossing counts only if the response jumps by more than
    ``slope_floor * max|response|`` across it.
    """
    img = as_image(src)
    response = convolve(img, log_kernel(sigma), border)
    peak = np.abs(response).max()
    if peak == 0:
        return np.zeros_like(img)
    return zero_crossings(response, slope_floor * peak).astype(np.float64)


def gaussian_kernel(sigma: float) -> np.ndarray:
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    half = math.ceil(3 * sigma)
    y, x = np.mgrid[-half:half + 1, -half:half + 1].astype(np.float64)
    g = np.exp(-(x * x + y * y) / (2.0 * sigma * sigma))
    return g / g.sum()


def gaussian_smooth(src, sigma: float, border: str = "replicate") -> np.ndarray:
    return convolve(src, gaussian_kernel(sigma), border)


# (row, col) steps for gradient along x, the 45 diagonal, y, and the 135 diagonal
_DIRECTION_STEPS = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}


def quantize_direction(direction: np.ndarray) -> np.ndarray:
    """Bin gradient angles to 0..3 for 0, 45, 90 and 135 degrees (mod 180)."""
    angle = np.mod(np.rad2deg(direction), 180.0)
    return np.floor((angle + 22.5) / 45.0).astype(int) % 4


def _neighbors(a: np.ndarray, dy: int, dx: int, fill):
    """Arrays holding a[y + dy, x + dx] and a[y - dy, x - dx], ``fill`` outside."""
    h, w = a.shape
    p = np.pad(a, 1, mode="constant", constant_values=fill)
    return (p[1 + dy:h + 1 + dy, 1 + dx:w + 1 + dx], p[1 - dy:h + 1 - dy, 1 - dx:w + 1 - dx])


def nonmax_suppress(magnitude: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """Keep pixels that are local maxima along their gradient direction.

    Directions are quantized to 0, 45, 90 and 135 degrees. A pixel survives
    if it is >= its forward neighbor and > its backward neighbor, so a plateau
    two pixels wide yields one pixel rather than two.
    """
    bins = quantize_direction(direction)
    keep = np.zeros(magnitude.shape, dtype=bool)
    for b, (dy, dx) in _DIRECTION_STEPS.items():
        fwd, bwd = _neighbors(magnitude, dy, dx, 0.0)
        keep |= (bins == b) & (magnitude >= fwd) & (magnitude > bwd)
    return np.where(keep & (magnitude > 0), magnitude, 0.0)


def thin_edges(edges: np.ndarray, magnitude: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """Remove edge pixels until none has edges on both sides along its own direction.

    Suppression compares each pixel only with neighbors along its own bin, so at
    junctions two neighbors in other bins can both survive and flank it. For each
    such pixel the weaker flank (the forward one on ties) is dropped; repeat
    until stable. Pixels are only removed, so this terminates.
    """
    edges = edges.copy()
    bins = quantize_direction(direction)
    while True:
        drop = np.zeros_like(edges)
        for b, (dy, dx) in _DIRECTION_STEPS.items():
            fe, be = _neighbors(edges, dy, dx, False)
            fm, bm = _neighbors(magnitude, dy, dx, 0.0)
            flanked = edges & (bins == b) & fe & be
            if not flanked.any():
                continue
            ys, xs = np.nonzero(flanked)
            take_fwd = fm[ys, xs] <= bm[ys, xs]
            sign = np.where(take_fwd, 1, -1)
            drop[ys + sign * dy, xs + sign * dx] = True
        if not drop.any():
            return edges
        edges &= ~drop


def hysteresis(strength: np.ndarray, low: float, high: float) -> np.ndarray:
    """Weak pixels (>= low) survive only in 8-connected components holding a strong one (>= high)."""
    weak = strength >= low
    strong = strength >= high
    labels, count = ndimage.label(weak, structure=np.ones((3, 3), dtype=bool))
    if count == 0:
        return np.zeros(strength.shape, dtype=bool)
    keep = np.zeros(count + 1, dtype=bool)
    keep[np.unique(labels[strong & weak])] = True
    keep[0] = False
    return keep[labels]


def canny(src, params: CannyParams = CannyParams(), border: str = "replicate") -> np.ndarray:
    img = as_image(src)
    smoothed = gaussian_smooth(img, params.sigma, border)
    field = sobel(smoothed, border)
    peak = field.magnitude.max()
    if peak == 0:
        return np.zeros_like(img)
    thin = nonmax_suppress(field.magnitude, field.direction)
    edges = hysteresis(thin, params.low * peak, params.high * peak) & (thin > 0)
    return thin_edges(edges, field.magnitude, field.direction).astype(np.float64)
