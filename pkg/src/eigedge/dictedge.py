"""Edge detection with eigenfilters learned from the input image itself.

The image is tiled into non-overlapping n x n patches, the patch covariance is
diagonalized, and every eigenvector (reshaped to n x n) is used as a
convolution filter. The filtered stack is centered on its pixelwise mean, fused
by taking the pixelwise maximum of consecutive layers, and the second-to-last
fused layer is the edge map. The last eigenfilter carries the largest
eigenvalue and is essentially a local average, so the last fused layer is
dominated by image intensity rather than edges.

Eigenvector signs are arbitrary and most eigenfilters are odd, so a signed
response is positive on one side of an edge and negative on the other. By
default the filter responses are rectified (absolute value) before centering,
which makes the map independent of the sign convention and lets rising and
falling edges of every orientation through. ``rectify=False`` keeps the signed
responses.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .eigen import jacobi_eigen
from .imgcore import BORDER_MODES, as_image, convolve, normalize, threshold

MIN_PATCH = 2
MAX_PATCH = 8
FEATURELESS_RTOL = 1e-12

FILTERED = "filtered"
CENTERED = "centered"
FUSED = "fused"


class FeaturelessImageError(ValueError):
    """The patch covariance vanishes, so no eigenfilters can be derived."""


@dataclass(frozen=True)
class DictConfig:
    patch_size: int = 4
    threshold_percentile: float = 0.0
    border: str = "replicate"
    rectify: bool = True

    def __post_init__(self):
        if isinstance(self.patch_size, bool) or int(self.patch_size) != self.patch_size:
            raise ValueError(f"patch_size must be an integer, got {self.patch_size!r}")
        if not MIN_PATCH <= self.patch_size <= MAX_PATCH:
            raise ValueError(f"patch_size must lie in [{MIN_PATCH}, {MAX_PATCH}], got {self.patch_size}")
        if not 0.0 <= self.threshold_percentile <= 1.0:
            raise ValueError(f"threshold_percentile must lie in [0, 1], got {self.threshold_percentile}")
        if self.border not in BORDER_MODES:
            raise ValueError(f"border must be one of {BORDER_MODES}, got {self.border!r}")


@dataclass(frozen=True)
class PatchMatrix:
    """Centered patch columns (``patch_dim x count``) plus the mean patch they were centered on."""

    entries: np.ndarray
    patch_mean: np.ndarray
    n: int
    raw_energy: float

    @property
    def patch_dim(self) -> int:
        return self.entries.shape[0]

    @property
    def count(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class EigenfilterBank:
    n: int
    filters: np.ndarray      # (n*n, n, n), ascending eigenvalue order
    eigenvalues: np.ndarray

    def __len__(self) -> int:
        return self.filters.shape[0]

    def gram(self) -> np.ndarray:
        flat = self.filters.reshape(len(self), -1)
        return flat @ flat.T


@dataclass(frozen=True)
class EdgeStack:
    layers: np.ndarray       # (depth, H, W)
    stage: str

    @property
    def depth(self) -> int:
        return self.layers.shape[0]


def extract_patches(src, n: int) -> PatchMatrix:
    """Tile ``src`` into non-overlapping n x n patches, one centered column per patch.

    Tiles are scanned row-major and each tile is vectorized row-major. When
    ``n`` does not divide the image size the bottom/right remainder is cropped.
    """
    img = as_image(src)
    h, w = img.shape
    if h < n or w < n:
        raise ValueError(f"image {img.shape} is smaller than one {n}x{n} patch")
    rows, cols = h // n, w // n
    tiles = img[:rows * n, :cols * n].reshape(rows, n, cols, n).transpose(0, 2, 1, 3)
    raw = tiles.reshape(rows * cols, n * n).T
    mean = raw.mean(axis=1)
    return PatchMatrix(
        entries=raw - mean[:, None],
        patch_mean=mean,
        n=n,
        raw_energy=float(np.sum(raw * raw)),
    )


def covariance(p: PatchMatrix) -> np.ndarray:
    """Unscaled scatter matrix ``A A^T`` of the centered patches, exactly symmetric."""
    a = p.entries
    c = a @ a.T
    upper = np.triu(c)
    return upper + np.triu(c, 1).T


def build_filter_bank(src, cfg: DictConfig = DictConfig()) -> EigenfilterBank:
    n = cfg.patch_size
    patches = extract_patches(src, n)
    cov = covariance(patches)
    eig = jacobi_eigen(cov)
    scale = max(patches.raw_energy, np.finfo(np.float64).tiny)
    if eig.eigenvalues[-1] <= FEATURELESS_RTOL * scale:
        raise FeaturelessImageError(
            "featureless image: patch covariance is numerically zero, no eigenfilters exist"
        )
    filters = eig.eigenvectors.T.reshape(n * n, n, n).copy()
    return EigenfilterBank(n=n, filters=filters, eigenvalues=eig.eigenvalues.copy())


def worker_count(n_jobs: int | None = None) -> int:
    """Resolve a worker cap; ``None`` reads ``EIGEDGE_THREADS`` (0 or unset = auto)."""
    if n_jobs is None:
        try:
            n_jobs = int(os.environ.get("EIGEDGE_THREADS", "0"))
        except ValueError:
            n_jobs = 0
    if n_jobs <= 0:
        n_jobs = os.cpu_count() or 1
    return n_jobs


def apply_filter_bank(src, bank: EigenfilterBank, border: str = "replicate",
                      n_jobs: int | None = None) -> EdgeStack:
    img = as_image(src)
    if img.shape[0] < bank.n or img.shape[1] < bank.n:
        raise ValueError(f"image {img.shape} is smaller than the {bank.n}x{bank.n} filters")
    workers = min(worker_count(n_jobs), len(bank))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            layers = list(pool.map(lambda k: convolve(img, k, border), bank.filters))
    else:
        layers = [convolve(img, k, border) for k in bank.filters]
    return EdgeStack(np.stack(layers), FILTERED)


def rectify_stack(s: EdgeStack) -> EdgeStack:
    if s.stage != FILTERED:
        raise ValueError(f"rectify_stack expects a {FILTERED!r} stack, got {s.stage!r}")
    return EdgeStack(np.abs(s.layers), FILTERED)


def center_stack(s: EdgeStack) -> EdgeStack:
    if s.stage != FILTERED:
        raise ValueError(f"center_stack expects a {FILTERED!r} stack, got {s.stage!r}")
    if s.depth == 0:
        raise ValueError("cannot center an empty stack")
    mean = s.layers.sum(axis=0) / s.depth
    return EdgeStack(s.layers - mean, CENTERED)


def fuse_pairwise_max(s: EdgeStack) -> EdgeStack:
    """Layer ``i`` of the result is the pixelwise max of input layers ``i`` and ``i + 1``."""
    if s.stage != CENTERED:
        raise ValueError(f"fuse_pairwise_max expects a {CENTERED!r} stack, got {s.stage!r}")
    if s.depth < 2:
        raise ValueError(f"need at least 2 layers to fuse, got {s.depth}")
    return EdgeStack(np.maximum(s.layers[1:], s.layers[:-1]), FUSED)


def filter_stack(src, bank: EigenfilterBank, cfg: DictConfig = DictConfig(),
                 n_jobs: int | None = None) -> EdgeStack:
    """Filtered stack as used by :func:`detect_edges` (rectified unless ``cfg.rectify`` is off)."""
    stack = apply_filter_bank(src, bank, cfg.border, n_jobs)
    return rectify_stack(stack) if cfg.rectify else stack


def detect_edges(src, cfg: DictConfig = DictConfig(), n_jobs: int | None = None,
                 bank: EigenfilterBank | None = None) -> np.ndarray:
    """Dictionary edge map of ``src`` normalized to [0, 1].

    The bank is learned from ``src`` unless one is passed in. With a positive
    ``cfg.threshold_percentile`` the normalized map is percentile-thresholded.
    """
    img = as_image(src)
    if bank is None:
        bank = build_filter_bank(img, cfg)
    fused = fuse_pairwise_max(center_stack(filter_stack(img, bank, cfg, n_jobs)))
    edges = normalize(fused.layers[-2])
    if cfg.threshold_percentile > 0:
        edges, _ = threshold(edges, cfg.threshold_percentile)
    return edges
