"""Circular Hough transform over an edge map and cell counting on top of it."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import ndimage

from .imgcore import as_image


@dataclass(frozen=True)
class HoughConfig:
    r_min: int = 3
    r_max: int = 8
    accumulator_threshold: float = 0.4
    min_center_distance: float | None = None    # None means r_min
    edge_binarize_percentile: float = 0.9

    def __post_init__(self):
        for name in ("r_min", "r_max"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v:
                raise ValueError(f"{name} must be an integer, got {v!r}")
        if not 1 <= self.r_min <= self.r_max:
            raise ValueError(f"need 1 <= r_min <= r_max, got r_min={self.r_min}, r_max={self.r_max}")
        if not 0 < self.accumulator_threshold <= 1:
            raise ValueError(f"accumulator_threshold must lie in (0, 1], got {self.accumulator_threshold}")
        if not 0 < self.edge_binarize_percentile <= 1:
            raise ValueError(
                f"edge_binarize_percentile must lie in (0, 1], got {self.edge_binarize_percentile}")
        if self.min_center_distance is not None and self.min_center_distance < 0:
            raise ValueError(f"min_center_distance must be >= 0, got {self.min_center_distance}")

    @property
    def center_distance(self) -> float:
        return float(self.r_min if self.min_center_distance is None else self.min_center_distance)

    @property
    def radii(self) -> np.ndarray:
        return np.arange(self.r_min, self.r_max + 1)


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    r: int
    score: float


@dataclass(frozen=True)
class HoughVotes:
    """Normalized votes indexed ``[radius_index, cy, cx]``; 1.0 means every circle sample was hit."""

    votes: np.ndarray
    radii: np.ndarray


@dataclass
class CellCountReport:
    circles: list[Circle]
    border_excluded: list[Circle] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.circles)

    @property
    def mean_radius(self) -> float:
        return float(np.mean([c.r for c in self.circles])) if self.circles else 0.0

    @property
    def radius_stddev(self) -> float:
        return float(np.std([c.r for c in self.circles])) if self.circles else 0.0

    def summary_line(self) -> str:
        return (f"count={self.count} mean_r={self.mean_radius:.4f} "
                f"std_r={self.radius_stddev:.4f} border_excluded={len(self.border_excluded)}")

    def to_records(self) -> str:
        """Machine-readable form: the summary line, then ``cx,cy,r,score`` per circle."""
        lines = [self.summary_line()]
        lines += [f"{c.cx:.4f},{c.cy:.4f},{c.r},{c.score:.6f}" for c in self.circles]
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        lines = [
            "cell count report",
            f"count: {self.count}",
            f"mean_radius: {self.mean_radius:.4f}",
            f"radius_stddev: {self.radius_stddev:.4f}",
            f"border_excluded: {len(self.border_excluded)}",
            "",
            f"{'#':>4} {'cx':>10} {'cy':>10} {'r':>3} {'score':>8}",
        ]
        for i, c in enumerate(self.circles, 1):
            lines.append(f"{i:>4} {c.cx:>10.4f} {c.cy:>10.4f} {c.r:>3d} {c.score:>8.4f}")
        return "\n".join(lines) + "\n"


@lru_cache(maxsize=None)
def circle_offsets(r: int) -> tuple[tuple[int, int], ...]:
    """Distinct (dy, dx) pixel offsets of a midpoint-rasterized circle of radius ``r``."""
    pts = set()
    x, y = r, 0
    err = 1 - r
    while x >= y:
        for a, b in ((x, y), (y, x)):
            for sa in (1, -1):
                for sb in (1, -1):
                    pts.add((sa * b, sb * a))
        y += 1
        if err < 0:
            err += 2 * y + 1
        else:
            x -= 1
            err += 2 * (y - x) + 1
    return tuple(sorted(pts))


def draw_circle(img: np.ndarray, cx: int, cy: int, r: int, value: float = 1.0) -> np.ndarray:
    """Rasterize a circle outline in place (clipped to the image) and return ``img``."""
    h, w = img.shape
    for dy, dx in circle_offsets(r):
        y, x = cy + dy, cx + dx
        if 0 <= y < h and 0 <= x < w:
            img[y, x] = value
    return img


def binarize_edges(edges, percentile: float) -> np.ndarray:
    """Boolean edge mask holding roughly the top ``1 - percentile`` of positive pixels.

    The mask is the largest upper level set ``{v >= t}`` with at most
    ``(1 - percentile) * N`` pixels, so a plateau straddling the cut (the
    background of most edge maps) is dropped rather than kept. If even the
    maximal plateau is too big, the maximal pixels alone are kept. Zero pixels
    are never edges.
    """
    img = as_image(edges, "edges")
    flat = np.sort(img, axis=None)[::-1]
    budget = int(math.floor((1.0 - percentile) * flat.size + 1e-9))
    if budget < flat.size and budget > 0:
        # values strictly greater than the first excluded value fit the budget
        cut = flat[budget]
        mask = img > cut
        if not mask.any():
            mask = img == flat[0]
    elif budget >= flat.size:
        mask = np.ones(img.shape, dtype=bool)
    else:
        mask = img == flat[0]
    return mask & (img > 0)


def hough_accumulate(edges, cfg: HoughConfig = HoughConfig()) -> HoughVotes:
    """Vote every edge pixel onto all centers at each radius in ``cfg``'s range.

    An edge pixel at ``p`` votes for center ``p - d`` for every offset ``d`` of
    the rasterized circle, so a cell's vote count is the number of its circle
    samples that land on edge pixels. Counts are divided by the sample count.
    """
    img = as_image(edges, "edges")
    h, w = img.shape
    if 2 * cfg.r_max > min(h, w):
        raise ValueError(f"r_max={cfg.r_max} exceeds half the image extent {min(h, w) // 2}")
    mask = binarize_edges(img, cfg.edge_binarize_percentile).astype(np.int64)
    radii = cfg.radii
    votes = np.zeros((len(radii), h, w), dtype=np.float64)
    for k, r in enumerate(radii):
        offs = circle_offsets(int(r))
        acc = np.zeros((h, w), dtype=np.int64)
        for dy, dx in offs:
            # acc[c] += mask[c + d] for centers c with c + d inside the image
            acc[max(0, -dy):h - max(0, dy), max(0, -dx):w - max(0, dx)] += \
                mask[max(0, dy):h - max(0, -dy), max(0, dx):w - max(0, -dx)]
        votes[k] = acc / len(offs)
    return HoughVotes(votes, radii)


def _parabolic_offset(left: float, mid: float, right: float) -> float:
    denom = left - 2.0 * mid + right
    if denom >= 0:
        return 0.0
    return float(np.clip(0.5 * (left - right) / denom, -0.5, 0.5))


def find_circles(hv: HoughVotes, cfg: HoughConfig = HoughConfig()) -> list[Circle]:
    """Greedy peak picking in the vote volume.

    Candidates are 3-D local maxima scoring at least
    ``cfg.accumulator_threshold``, accepted best-first (ties broken by
    ``(cx, cy, r)``) unless an accepted center lies closer than
    ``cfg.center_distance``. Centers get a per-axis parabolic refinement.
    """
    v = hv.votes
    if v.size == 0 or v.max() <= 0:
        return []
    local_max = ndimage.maximum_filter(v, size=3, mode="constant", cval=0.0)
    ks, ys, xs = np.nonzero((v == local_max) & (v >= cfg.accumulator_threshold))
    scores = v[ks, ys, xs]
    radii = hv.radii[ks]
    order = np.lexsort((radii, ys, xs, -scores))
    min_d2 = cfg.center_distance ** 2
    _, h, w = v.shape
    accepted: list[Circle] = []
    for i in order:
        k, y, x = int(ks[i]), int(ys[i]), int(xs[i])
        sl = v[k]
        dx = _parabolic_offset(sl[y, x - 1], sl[y, x], sl[y, x + 1]) if 0 < x < w - 1 else 0.0
        dy = _parabolic_offset(sl[y - 1, x], sl[y, x], sl[y + 1, x]) if 0 < y < h - 1 else 0.0
        cx, cy = x + dx, y + dy
        if any((c.cx - cx) ** 2 + (c.cy - cy) ** 2 < min_d2 for c in accepted):
            continue
        accepted.append(Circle(cx, cy, int(hv.radii[k]), float(scores[i])))
    return accepted


def inside_image(c: Circle, shape: tuple[int, int]) -> bool:
    h, w = shape
    return c.cx - c.r >= 0 and c.cy - c.r >= 0 and c.cx + c.r <= w - 1 and c.cy + c.r <= h - 1


def count_cells(edges, cfg: HoughConfig = HoughConfig()) -> CellCountReport:
    """Count circles in an edge map; circles whose disk leaves the image are reported apart."""
    img = as_image(edges, "edges")
    circles = find_circles(hough_accumulate(img, cfg), cfg)
    kept = [c for c in circles if inside_image(c, img.shape)]
    dropped = [c for c in circles if not inside_image(c, img.shape)]
    return CellCountReport(kept, dropped)
