"""scikit-learn style wrappers around the detectors and the cell counter.

Every estimator takes a single 2-D grayscale image as ``X``. Hyperparameters
live in ``__init__`` and are exposed through ``get_params``/``set_params``;
fitted state carries a trailing underscore. Typical use::

    det = DictionaryEdgeDetector(patch_size=4).fit(image)
    edges = det.transform(image)
    det.filters_.shape  # (16, 4, 4)
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import classic, dictedge, houghcells
from .imgcore import BORDER_MODES, as_image


def check_image(X, min_size: int = 1) -> np.ndarray:
    """Validate ``X`` as a finite 2-D image at least ``min_size`` pixels on each side."""
    img = as_image(X, "X")
    if min(img.shape) < min_size:
        raise ValueError(f"X must be at least {min_size}x{min_size}, got {img.shape}")
    return img


def _check_border(border):
    if border not in BORDER_MODES:
        raise ValueError(f"border must be one of {BORDER_MODES}, got {border!r}")


class DictionaryEdgeDetector(TransformerMixin, BaseEstimator):
    """Eigenfilter edge detector whose filter bank is learned in ``fit``.

    ``fit_transform(X)`` is the usual self-learned detection. A bank fitted on
    one image can also be applied to another with ``transform``.

    Attributes
    ----------
    bank_ : EigenfilterBank
    filters_ : ndarray of shape (patch_size**2, patch_size, patch_size)
    eigenvalues_ : ndarray of shape (patch_size**2,), ascending
    """

    def __init__(self, patch_size=4, threshold_percentile=0.0, border="replicate",
                 rectify=True, n_jobs=None):
        self.patch_size = patch_size
        self.threshold_percentile = threshold_percentile
        self.border = border
        self.rectify = rectify
        self.n_jobs = n_jobs

    def _config(self) -> dictedge.DictConfig:
        return dictedge.DictConfig(self.patch_size, self.threshold_percentile, self.border,
                                   bool(self.rectify))

    def fit(self, X, y=None):
        cfg = self._config()
        X = check_image(X, cfg.patch_size)
        self.bank_ = dictedge.build_filter_bank(X, cfg)
        self.filters_ = self.bank_.filters
        self.eigenvalues_ = self.bank_.eigenvalues
        return self

    def transform(self, X):
        check_is_fitted(self, "bank_")
        cfg = self._config()
        X = check_image(X, cfg.patch_size)
        return dictedge.detect_edges(X, cfg, n_jobs=self.n_jobs, bank=self.bank_)


class _StatelessDetector(TransformerMixin, BaseEstimator):
    """Detectors with nothing to learn: ``fit`` only validates hyperparameters."""

    def fit(self, X, y=None):
        self._validate()
        check_image(X, 3)
        self.is_fitted_ = True
        return self

    def _validate(self):
        _check_border(self.border)

    def transform(self, X):
        check_is_fitted(self, "is_fitted_")
        self._validate()
        return self._detect(check_image(X, 3))


class GradientEdgeDetector(_StatelessDetector):
    """Sobel or Prewitt magnitude, binarized at a percentile of the normalized magnitude."""

    def __init__(self, operator="sobel", percentile=classic.DEFAULT_BINARIZE_PERCENTILE,
                 border="replicate"):
        self.operator = operator
        self.percentile = percentile
        self.border = border

    def _validate(self):
        super()._validate()
        if self.operator not in ("sobel", "prewitt"):
            raise ValueError(f"operator must be 'sobel' or 'prewitt', got {self.operator!r}")
        if not 0 <= self.percentile <= 1:
            raise ValueError(f"percentile must lie in [0, 1], got {self.percentile}")

    def _detect(self, X):
        fn = classic.sobel_edges if self.operator == "sobel" else classic.prewitt_edges
        return fn(X, self.percentile, self.border)


class LoGEdgeDetector(_StatelessDetector):
    def __init__(self, sigma=classic.DEFAULT_LOG_SIGMA, slope_floor=classic.DEFAULT_SLOPE_FLOOR,
                 border="replicate"):
        self.sigma = sigma
        self.slope_floor = slope_floor
        self.border = border

    def _validate(self):
        super()._validate()
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.slope_floor < 0:
            raise ValueError(f"slope_floor must be >= 0, got {self.slope_floor}")

    def _detect(self, X):
        return classic.log_detect(X, self.sigma, self.slope_floor, self.border)


class CannyEdgeDetector(_StatelessDetector):
    def __init__(self, sigma=1.4, low=0.1, high=0.3, border="replicate"):
        self.sigma = sigma
        self.low = low
        self.high = high
        self.border = border

    def _validate(self):
        super()._validate()
        self.params_ = classic.CannyParams(self.sigma, self.low, self.high)

    def _detect(self, X):
        return classic.canny(X, self.params_, self.border)


class CircleCounter(BaseEstimator):
    """Circular Hough cell counter operating on an edge map.

    ``fit(edges)`` stores the :class:`CellCountReport` in ``report_``;
    ``predict(edges)`` returns an ``(k, 4)`` array of ``cx, cy, r, score``.
    """

    def __init__(self, r_min=3, r_max=8, accumulator_threshold=0.4, min_center_distance=None,
                 edge_binarize_percentile=0.9):
        self.r_min = r_min
        self.r_max = r_max
        self.accumulator_threshold = accumulator_threshold
        self.min_center_distance = min_center_distance
        self.edge_binarize_percentile = edge_binarize_percentile

    def _config(self) -> houghcells.HoughConfig:
        return houghcells.HoughConfig(self.r_min, self.r_max, self.accumulator_threshold,
                                      self.min_center_distance, self.edge_binarize_percentile)

    def fit(self, X, y=None):
        self.report_ = houghcells.count_cells(check_image(X), self._config())
        self.count_ = self.report_.count
        return self

    def predict(self, X):
        check_is_fitted(self, "report_")
        report = houghcells.count_cells(check_image(X), self._config())
        return np.array([[c.cx, c.cy, c.r, c.score] for c in report.circles],
                        dtype=np.float64).reshape(-1, 4)
