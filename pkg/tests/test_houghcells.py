import math

import numpy as np
import pytest

from eigedge.houghcells import (CellCountReport, Circle, HoughConfig, HoughVotes, binarize_edges,
                                circle_offsets, count_cells, draw_circle, find_circles,
                                hough_accumulate, inside_image)
from oracles import circle_field, match_circles, naive_hough_counts


def ring(shape, cx, cy, r):
    return draw_circle(np.zeros(shape), cx, cy, r)


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(r_min=0), dict(r_min=5, r_max=4),
                                    dict(accumulator_threshold=0.0),
                                    dict(accumulator_threshold=1.5),
                                    dict(edge_binarize_percentile=1.2),
                                    dict(min_center_distance=-1.0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            HoughConfig(**kw)

    def test_center_distance_default(self):
        assert HoughConfig().center_distance == 3
        assert HoughConfig(min_center_distance=7.5).center_distance == 7.5
        np.testing.assert_array_equal(HoughConfig().radii, np.arange(3, 9))


class TestOffsets:
    @pytest.mark.parametrize("r", range(1, 12))
    def test_near_radius(self, r):
        offs = circle_offsets(r)
        d = np.hypot(*np.array(offs).T)
        assert np.all(np.abs(d - r) < 1.0)
        assert set(offs) == {(-a, b) for a, b in offs} == {(b, a) for a, b in offs}


class TestBinarize:
    def test_sparse_binary_keeps_all_ones(self):
        img = np.zeros((20, 20))
        img[3, 4] = img[10, 10] = 1.0
        np.testing.assert_array_equal(binarize_edges(img, 0.9), img > 0)

    def test_plateau_dropped(self):
        img = np.full((10, 10), 0.2)
        img[0, :5] = 1.0
        np.testing.assert_array_equal(binarize_edges(img, 0.9), img == 1.0)

    def test_zero_never_edge(self):
        assert not binarize_edges(np.zeros((5, 5)), 0.0).any()


class TestAccumulate:
    def test_empty(self):
        hv = hough_accumulate(np.zeros((32, 32)))
        assert hv.votes.shape == (6, 32, 32)
        np.testing.assert_array_equal(hv.votes, 0.0)

    def test_ideal_circle(self):
        hv = hough_accumulate(ring((40, 40), 20, 20, 5))
        k, y, x = np.unravel_index(np.argmax(hv.votes), hv.votes.shape)
        assert (x, y, hv.radii[k]) == (20, 20, 5)
        assert hv.votes.max() >= 0.9
        assert hv.votes.max() == 1.0

    def test_two_circles(self):
        img = ring((60, 60), 15, 15, 4)
        draw_circle(img, 42, 40, 7)
        circles = find_circles(hough_accumulate(img))
        found = {(round(c.cx), round(c.cy), c.r) for c in circles}
        assert {(15, 15, 4), (42, 40, 7)} <= found

    def test_against_naive_in_any_order(self, rng):
        img = np.zeros((30, 30))
        pts = [(int(y), int(x)) for y, x in rng.integers(0, 30, size=(40, 2))]
        for p in pts:
            img[p] = 1.0
        cfg = HoughConfig(edge_binarize_percentile=0.5)
        hv = hough_accumulate(img, cfg)
        uniq = sorted(set(pts))
        shuffled = [uniq[i] for i in rng.permutation(len(uniq))]
        counts = naive_hough_counts(shuffled, img.shape, cfg.radii, circle_offsets)
        for k, r in enumerate(cfg.radii):
            np.testing.assert_array_equal(hv.votes[k], counts[k] / len(circle_offsets(int(r))))

    def test_deleting_edges_never_raises_votes(self, rng):
        img = (rng.random((40, 40)) > 0.95).astype(float)
        cfg = HoughConfig(edge_binarize_percentile=0.5)
        full = hough_accumulate(img, cfg).votes
        img[rng.random((40, 40)) > 0.5] = 0.0
        fewer = hough_accumulate(img, cfg).votes
        assert np.all(fewer <= full)

    def test_radius_too_large(self):
        with pytest.raises(ValueError):
            hough_accumulate(np.zeros((14, 30)), HoughConfig(r_max=8))


class TestFind:
    def test_zero_votes(self):
        assert find_circles(HoughVotes(np.zeros((2, 10, 10)), np.array([3, 4]))) == []

    def test_one_peak(self):
        c = find_circles(hough_accumulate(ring((40, 40), 17, 22, 6)))
        best = max(c, key=lambda q: q.score)
        assert math.hypot(best.cx - 17, best.cy - 22) <= 1.0 and best.r == 6

    def test_close_peaks_suppressed(self):
        v = np.zeros((1, 20, 20))
        v[0, 10, 10] = 0.9
        v[0, 10, 12] = 0.8
        hv = HoughVotes(v, np.array([3]))
        out = find_circles(hv, HoughConfig(min_center_distance=3))
        assert len(out) == 1 and out[0].score == 0.9
        assert len(find_circles(hv, HoughConfig(min_center_distance=1))) == 2

    def test_tie_break(self):
        v = np.zeros((1, 20, 20))
        v[0, 10, 14] = v[0, 10, 12] = 0.7
        out = find_circles(HoughVotes(v, np.array([3])), HoughConfig(min_center_distance=5))
        assert len(out) == 1 and out[0].cx == 12


class TestCount:
    def test_blank(self):
        assert count_cells(np.zeros((64, 64))).count == 0

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_field(self, seed):
        truth = circle_field(seed)
        img = np.zeros((256, 256))
        for cx, cy, r in truth:
            draw_circle(img, cx, cy, r)
        report = count_cells(img)
        assert report.count == 30
        matches = match_circles(report.circles, truth, 1.0)
        assert all(m is not None and m.r == t[2] for m, t in zip(matches, truth))

    def test_min_distance_respected(self):
        truth = circle_field(4)
        img = np.zeros((256, 256))
        for cx, cy, r in truth:
            draw_circle(img, cx, cy, r)
        cs = count_cells(img).circles
        for i, a in enumerate(cs):
            for b in cs[i + 1:]:
                assert math.hypot(a.cx - b.cx, a.cy - b.cy) >= 3

    def test_translation(self):
        img = ring((64, 64), 20, 25, 5)
        draw_circle(img, 40, 38, 7)
        a = sorted((c.cx, c.cy, c.r) for c in count_cells(img).circles)
        b = sorted((c.cx, c.cy, c.r) for c in count_cells(np.roll(img, (4, -3), axis=(0, 1))).circles)
        assert len(a) == len(b) == 2
        for (ax, ay, ar), (bx, by, br) in zip(a, b):
            assert ar == br and abs(bx - ax + 3) <= 1 and abs(by - ay - 4) <= 1

    def test_border_circle_excluded(self):
        img = ring((64, 64), 2, 30, 5)
        draw_circle(img, 32, 32, 6)
        report = count_cells(img)
        assert report.count == 1
        assert len(report.border_excluded) == 1 and report.border_excluded[0].r == 5

    def test_inside_image(self):
        assert inside_image(Circle(5.0, 5.0, 5, 1.0), (11, 11))
        assert not inside_image(Circle(4.9, 5.0, 5, 1.0), (11, 11))


class TestReport:
    def test_statistics(self):
        rep = CellCountReport([Circle(1.0, 2.0, 3, 0.9), Circle(5.0, 6.0, 5, 0.8)], [])
        assert rep.count == 2
        assert rep.mean_radius == 4.0
        assert rep.radius_stddev == 1.0
        assert rep.summary_line() == "count=2 mean_r=4.0000 std_r=1.0000 border_excluded=0"

    def test_empty(self):
        rep = CellCountReport([], [])
        assert rep.count == 0 and rep.mean_radius == 0.0
        assert "count: 0" in rep.to_text()

    def test_records(self):
        rep = CellCountReport([Circle(1.5, 2.0, 3, 0.75)], [])
        lines = rep.to_records().splitlines()
        assert lines[0] == rep.summary_line()
        assert lines[1].split(",")[2] == "3"
