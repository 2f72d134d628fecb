"""Image primitives shared by every detector.

Images are 2-D ``float64`` numpy arrays indexed ``[row, col]`` with a working
range of [0, 1]. Kernels are small 2-D arrays; their anchor is derived from the
shape (see :func:`kernel_anchor`) so even-sized eigenfilters need no extra
bookkeeping.
"""
from __future__ import annotations

import math
import os
import re
from pathlib import Path

import numpy as np
from PIL import Image as PILImage, UnidentifiedImageError

BORDER_MODES = ("replicate", "zero")

# ITU-R BT.601 luma weights
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class ImageIOError(Exception):
    """Base class for image read/write failures."""


class UnreadableImageError(ImageIOError):
    pass


class UnsupportedFormatError(ImageIOError):
    pass


class CorruptHeaderError(ImageIOError):
    pass


class ImageWriteError(ImageIOError):
    pass


def as_image(src, name: str = "image") -> np.ndarray:
    """Validate ``src`` as a 2-D finite image and return it as float64."""
    img = np.asarray(src, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"{name} must be non-empty, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError(f"{name} contains NaN or Inf")
    return img


def kernel_anchor(shape: tuple[int, int]) -> tuple[int, int]:
    """Alignment cell of a kernel: the center for odd sides, upper-left of center for even."""
    kh, kw = shape
    return (kh - 1) // 2, (kw - 1) // 2


def to_grayscale(r, g, b) -> np.ndarray:
    r, g, b = (as_image(c, name) for c, name in zip((r, g, b), "rgb"))
    if not (r.shape == g.shape == b.shape):
        raise ValueError(f"channel shapes differ: {r.shape}, {g.shape}, {b.shape}")
    wr, wg, wb = LUMA_WEIGHTS
    return np.clip(wr * r + wg * g + wb * b, 0.0, 1.0)


def pad(src: np.ndarray, top: int, bottom: int, left: int, right: int,
        border: str = "replicate") -> np.ndarray:
    if border == "replicate":
        return np.pad(src, ((top, bottom), (left, right)), mode="edge")
    if border == "zero":
        return np.pad(src, ((top, bottom), (left, right)), mode="constant")
    raise ValueError(f"unknown border mode {border!r}, expected one of {BORDER_MODES}")


def convolve(src, kernel, border: str = "replicate") -> np.ndarray:
    """True 2-D convolution (kernel flipped), output the same size as ``src``.

    ``out[y, x] = sum_{i, j} k[i, j] * src[y + ay - i, x + ax - j]`` where
    ``(ay, ax)`` is :func:`kernel_anchor`.

    Taps are accumulated in row-major kernel order against a reference level
    ``c = src[0, 0]``, i.e. ``c * sum(k) + sum k[i, j] * (src[...] - c)``. This
    is the same sum rearranged, but it makes a constant image come out as
    exactly ``c * sum(k)`` (so exactly zero for zero-sum kernels) instead of
    picking up rounding residue from partial sums.
    """
    img = as_image(src)
    k = np.asarray(kernel, dtype=np.float64)
    if k.ndim != 2:
        raise ValueError(f"kernel must be 2-D, got shape {k.shape}")
    kh, kw = k.shape
    h, w = img.shape
    if kh > h or kw > w:
        raise ValueError(f"kernel {k.shape} larger than image {img.shape}")
    ay, ax = kernel_anchor(k.shape)
    # src index y + ay - i ranges over [y - (kh - 1 - ay), y + ay]
    padded = pad(img, kh - 1 - ay, ay, kw - 1 - ax, ax, border)
    ref = img[0, 0]
    padded = padded - ref
    out = np.zeros_like(img)
    for i in range(kh):
        r0 = kh - 1 - i
        for j in range(kw):
            c0 = kw - 1 - j
            out += k[i, j] * padded[r0:r0 + h, c0:c0 + w]
    return out + ref * math.fsum(k.ravel())


def normalize(src) -> np.ndarray:
    """Min-max map onto [0, 1]; a constant image maps to zeros."""
    img = as_image(src)
    lo, hi = img.min(), img.max()
    if hi == lo:
        return np.zeros_like(img)
    out = (img - lo) / (hi - lo)
    # guard the endpoints against rounding so normalize stays idempotent
    out[img == lo] = 0.0
    out[img == hi] = 1.0
    return out


def threshold(src, percentile: float) -> tuple[np.ndarray, float]:
    """Zero every pixel strictly below the ``percentile`` cut of the histogram.

    The cut is the sorted pixel value at index ``floor(percentile * N)``
    (clamped to the last pixel), so roughly a ``percentile`` fraction of the
    pixels falls below it. Returns the thresholded image and the cut value.
    """
    img = as_image(src)
    if not 0.0 <= percentile <= 1.0:
        raise ValueError(f"percentile must lie in [0, 1], got {percentile}")
    flat = np.sort(img, axis=None)
    idx = min(int(math.floor(percentile * flat.size)), flat.size - 1)
    cut = float(flat[idx])
    out = np.where(img < cut, 0.0, img)
    return out, cut


# -- file I/O -------------------------------------------------------------

_PGM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _read_pgm(raw: bytes, path) -> np.ndarray:
    magic = raw[:2]
    pos = 2
    fields = []
    for _ in range(3):
        m = _PGM_TOKEN.match(raw, pos)
        if m is None:
            raise CorruptHeaderError(f"{path}: truncated PGM header")
        fields.append(m.group(1))
        pos = m.end()
    try:
        width, height, maxval = (int(f) for f in fields)
    except ValueError:
        raise CorruptHeaderError(f"{path}: non-integer PGM header field in {fields}") from None
    if width <= 0 or height <= 0:
        raise CorruptHeaderError(f"{path}: bad PGM dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise UnsupportedFormatError(f"{path}: PGM maxval {maxval} not in 1..255")
    n = width * height
    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        body = raw[pos + 1:pos + 1 + n]
        if len(body) != n:
            raise CorruptHeaderError(f"{path}: raster has {len(body)} bytes, expected {n}")
        values = np.frombuffer(body, dtype=np.uint8).astype(np.float64)
    else:
        tokens = raw[pos:].split()
        if len(tokens) < n:
            raise CorruptHeaderError(f"{path}: raster has {len(tokens)} values, expected {n}")
        try:
            values = np.array([int(t) for t in tokens[:n]], dtype=np.float64)
        except ValueError:
            raise CorruptHeaderError(f"{path}: non-integer pixel value") from None
    if values.max(initial=0) > maxval:
        raise CorruptHeaderError(f"{path}: pixel value exceeds maxval {maxval}")
    return values.reshape(height, width) / maxval


def _read_png(path) -> np.ndarray:
    try:
        with PILImage.open(path) as im:
            if im.format != "PNG":
                raise UnsupportedFormatError(f"{path}: expected PNG, got {im.format}")
            mode = im.mode
            if mode in ("1", "L", "LA", "P", "PA"):
                if mode in ("P", "PA"):
                    im = im.convert("RGB")
                    arr = np.asarray(im, dtype=np.float64) / 255.0
                    return to_grayscale(arr[..., 0], arr[..., 1], arr[..., 2])
                return np.asarray(im.convert("L"), dtype=np.float64) / 255.0
            if mode in ("RGB", "RGBA"):
                arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
                return to_grayscale(arr[..., 0], arr[..., 1], arr[..., 2])
            raise UnsupportedFormatError(f"{path}: unsupported PNG mode {mode}")
    except UnidentifiedImageError:
        raise CorruptHeaderError(f"{path}: not a decodable PNG") from None
    except OSError as exc:
        raise CorruptHeaderError(f"{path}: {exc}") from None


def load_image(path) -> np.ndarray:
    """Read a PGM (P2/P5) or PNG file into a [0, 1] grayscale image."""
    try:
        with open(path, "rb") as fh:
            head = fh.read(8)
    except OSError as exc:
        raise UnreadableImageError(f"cannot read {path}: {exc.strerror or exc}") from None
    if head[:2] in (b"P2", b"P5"):
        return _read_pgm(Path(path).read_bytes(), path)
    if head.startswith(b"\x89PNG\r\n\x1a\n"):
        return _read_png(path)
    raise UnsupportedFormatError(f"{path}: unrecognized image format (PGM P2/P5 and PNG only)")


def quantize(img) -> np.ndarray:
    return np.round(np.clip(as_image(img), 0.0, 1.0) * 255.0).astype(np.uint8)


def save_image(img, path, format: str | None = None) -> None:
    """Write ``img`` (values in [0, 1]) as 8-bit PGM or PNG.

    ``format`` is one of ``"pgm-ascii"``, ``"pgm-binary"`` or ``"png"``; when
    omitted it is inferred from the suffix (``.pgm`` gives binary PGM).
    """
    q = quantize(img)
    if format is None:
        suffix = os.path.splitext(str(path))[1].lower()
        format = {".pgm": "pgm-binary", ".png": "png"}.get(suffix)
        if format is None:
            raise UnsupportedFormatError(f"cannot infer image format from {path}")
    h, w = q.shape
    header = f"{'P2' if format == 'pgm-ascii' else 'P5'}\n{w} {h}\n255\n".encode("ascii")
    try:
        if format == "pgm-ascii":
            rows = "\n".join(" ".join(str(v) for v in row) for row in q)
            Path(path).write_bytes(header + rows.encode("ascii") + b"\n")
        elif format == "pgm-binary":
            Path(path).write_bytes(header + q.tobytes())
        elif format == "png":
            PILImage.fromarray(q).save(path, format="PNG")
        else:
            raise UnsupportedFormatError(f"unknown output format {format!r}")
    except OSError as exc:
        raise ImageWriteError(f"cannot write {path}: {exc.strerror or exc}") from None
