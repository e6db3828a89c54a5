import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graspkit.errors import EmptyGroundTruthError
from graspkit.grasp import (
    Grasp,
    GraspSet,
    RectCriterionConfig,
    angle_diff,
    batch_accuracy,
    iou,
    min_grasp_distance,
    normalize_angle,
    rect_corners,
    rect_match,
)

from _oracles import iou_rasterized, random_rect_pairs


def _corner_set(arr):
    return {(round(float(x), 9), round(float(y), 9)) for x, y in arr}


class TestGraspType:
    def test_fields_are_floats(self):
        g = Grasp(x=1, y=2, w=3, h=4, theta=5)
        assert isinstance(g.x, float) and isinstance(g.theta, float)

    def test_theta_normalized_on_construction(self):
        assert Grasp(0, 0, 1, 1, 250.0).theta == pytest.approx(70.0)
        assert Grasp(0, 0, 1, 1, 170.0).theta == pytest.approx(-10.0)
        assert Grasp(0, 0, 1, 1, -90.0).theta == 90.0
        assert Grasp(0, 0, 1, 1, 90.0).theta == 90.0

    def test_rejects_bad_sizes(self):
        with pytest.raises(ValueError):
            Grasp(0, 0, 0.0, 1, 0)
        with pytest.raises(ValueError):
            Grasp(0, 0, 1, -2.0, 0)
        with pytest.raises(ValueError):
            Grasp(0, 0, float("nan"), 1, 0)
        with pytest.raises(ValueError):
            Grasp(0, 0, 1, 1, float("inf"))

    @given(st.floats(min_value=-1e6, max_value=1e6))
    def test_normalize_angle_range(self, t):
        a = normalize_angle(t)
        assert -90.0 < a <= 90.0

    @given(st.floats(min_value=-1e4, max_value=1e4), st.integers(-50, 50))
    def test_normalize_angle_period(self, t, k):
        assert normalize_angle(t + 180.0 * k) == pytest.approx(
            normalize_angle(t), abs=1e-6
        )


class TestAngleDiff:
    def test_known_values(self):
        assert angle_diff(0, 0) == 0.0
        assert angle_diff(170, 10) == pytest.approx(20.0)
        assert angle_diff(90, -90) == pytest.approx(0.0)
        assert angle_diff(45, -45) == pytest.approx(90.0)

    @given(
        st.floats(min_value=-360, max_value=360),
        st.floats(min_value=-360, max_value=360),
    )
    def test_bounds_and_symmetry(self, a, b):
        d = angle_diff(a, b)
        assert 0.0 <= d <= 90.0
        assert d == pytest.approx(angle_diff(b, a))

    @given(st.floats(min_value=-360, max_value=360), st.integers(-4, 4))
    def test_half_turn_invariance(self, a, k):
        assert angle_diff(a, a + 180.0 * k) == pytest.approx(0.0, abs=1e-9)


class TestRectCorners:
    def test_axis_aligned(self):
        got = rect_corners(Grasp(0, 0, w=4, h=2, theta=0))
        expected = np.array([(-2, -1), (2, -1), (2, 1), (-2, 1)], dtype=float)
        assert np.allclose(got, expected)

    def test_rotated_90(self):
        got = rect_corners(Grasp(0, 0, w=4, h=2, theta=90))
        assert _corner_set(got) == _corner_set(
            [(1, -2), (1, 2), (-1, 2), (-1, -2)]
        )

    def test_rotated_45(self):
        got = rect_corners(Grasp(5, 5, w=2, h=2, theta=45))
        r = math.sqrt(2.0)
        assert _corner_set(np.round(got, 9)) == _corner_set(
            [(5, 5 - r), (5 + r, 5), (5, 5 + r), (5 - r, 5)]
        )
        d = np.hypot(got[:, 0] - 5, got[:, 1] - 5)
        assert np.allclose(d, r)

    @given(
        st.floats(min_value=-100, max_value=100),
        st.floats(min_value=-100, max_value=100),
        st.floats(min_value=0.5, max_value=50),
        st.floats(min_value=0.5, max_value=50),
        st.floats(min_value=-180, max_value=180),
    )
    def test_centroid_matches_center(self, x, y, w, h, theta):
        got = rect_corners(Grasp(x, y, w, h, theta))
        assert np.allclose(got.mean(axis=0), [x, y], atol=1e-9)


class TestIoU:
    def test_identity_is_one(self):
        a = Grasp(50, 50, 40, 20, 17.0)
        assert iou(a, a) == pytest.approx(1.0, abs=1e-9)

    def test_disjoint_is_zero(self):
        a = Grasp(50, 50, 40, 20, 0)
        b = Grasp(250, 50, 40, 20, 0)
        assert iou(a, b) == 0.0

    def test_axis_aligned_partial_overlap(self):
        # A spans x in [30, 70], B spans x in [40, 80], both y in [40, 60]:
        # intersection 30 * 20 = 600, union 800 + 800 - 600 = 1000
        a = Grasp(50, 50, w=40, h=20, theta=0)
        b = Grasp(60, 50, w=40, h=20, theta=0)
        assert iou(a, b) == pytest.approx(0.6, abs=1e-9)

    def test_touching_edges_count_as_zero(self):
        a = Grasp(0, 0, 10, 10, 0)
        b = Grasp(10, 0, 10, 10, 0)
        assert iou(a, b) == pytest.approx(0.0, abs=1e-12)

    def test_matches_rasterization_oracle(self):
        for a, b in random_rect_pairs(100, seed=77):
            assert iou(a, b) == pytest.approx(iou_rasterized(a, b), abs=0.02)

    @given(
        st.floats(min_value=20, max_value=80),
        st.floats(min_value=20, max_value=80),
        st.floats(min_value=5, max_value=50),
        st.floats(min_value=5, max_value=50),
        st.floats(min_value=-90, max_value=90),
        st.floats(min_value=20, max_value=80),
        st.floats(min_value=20, max_value=80),
        st.floats(min_value=5, max_value=50),
        st.floats(min_value=5, max_value=50),
        st.floats(min_value=-90, max_value=90),
    )
    @settings(max_examples=60, deadline=None)
    def test_symmetric_and_bounded(self, x1, y1, w1, h1, t1, x2, y2, w2, h2, t2):
        a = Grasp(x1, y1, w1, h1, t1)
        b = Grasp(x2, y2, w2, h2, t2)
        v = iou(a, b)
        assert 0.0 <= v <= 1.0
        assert v == pytest.approx(iou(b, a), abs=1e-9)

    @given(
        st.floats(min_value=-50, max_value=50),
        st.floats(min_value=-50, max_value=50),
    )
    @settings(max_examples=40, deadline=None)
    def test_translation_invariance(self, dx, dy):
        a = Grasp(50, 50, 30, 12, 25)
        b = Grasp(58, 47, 22, 18, -40)
        a2 = Grasp(a.x + dx, a.y + dy, a.w, a.h, a.theta)
        b2 = Grasp(b.x + dx, b.y + dy, b.w, b.h, b.theta)
        assert iou(a2, b2) == pytest.approx(iou(a, b), abs=1e-9)


class TestRectMatch:
    def test_identity_matches(self):
        g = Grasp(50, 50, 40, 20, 10)
        ok, idx = rect_match(g, GraspSet(grasps=(g,)))
        assert ok and idx == 0

    def test_rotated_45_fails_on_angle(self):
        gt = Grasp(50, 50, 40, 20, 0)
        pred = Grasp(50, 50, 40, 20, 45)
        ok, idx = rect_match(pred, GraspSet(grasps=(gt,)))
        assert not ok and idx is None

    def test_iou_point_six_same_angle_matches(self):
        gt = Grasp(50, 50, 40, 20, 0)
        pred = Grasp(60, 50, 40, 20, 0)
        ok, _ = rect_match(pred, GraspSet(grasps=(gt,)))
        assert ok

    def test_first_match_index(self):
        gt = GraspSet(
            grasps=(
                Grasp(200, 200, 10, 10, 0),
                Grasp(50, 50, 40, 20, 0),
                Grasp(50, 50, 40, 20, 1),
            )
        )
        ok, idx = rect_match(Grasp(50, 50, 40, 20, 0), gt)
        assert ok and idx == 1

    def test_empty_ground_truth_raises(self):
        with pytest.raises(EmptyGroundTruthError):
            rect_match(Grasp(0, 0, 1, 1, 0), GraspSet(grasps=()))

    def test_custom_thresholds(self):
        gt = Grasp(50, 50, 40, 20, 0)
        pred = Grasp(60, 50, 40, 20, 0)  # iou 0.6
        tight = RectCriterionConfig(angle_thresh=30, iou_thresh=0.7)
        ok, _ = rect_match(pred, GraspSet(grasps=(gt,)), tight)
        assert not ok

    def test_threshold_validation(self):
        with pytest.raises(ValueError):
            RectCriterionConfig(angle_thresh=0.0)
        with pytest.raises(ValueError):
            RectCriterionConfig(iou_thresh=1.5)

    @given(
        st.floats(min_value=-100, max_value=100),
        st.floats(min_value=-100, max_value=100),
        st.floats(min_value=-90, max_value=90),
    )
    @settings(max_examples=40, deadline=None)
    def test_translation_invariance(self, dx, dy, t):
        gt = Grasp(50, 50, 30, 15, t)
        pred = Grasp(55, 48, 28, 15, t + 10)
        moved_gt = Grasp(gt.x + dx, gt.y + dy, gt.w, gt.h, gt.theta)
        moved_pred = Grasp(pred.x + dx, pred.y + dy, pred.w, pred.h, pred.theta)
        assert rect_match(pred, GraspSet(grasps=(gt,)))[0] == rect_match(
            moved_pred, GraspSet(grasps=(moved_gt,))
        )[0]


class TestMinGraspDistance:
    def test_three_four_five(self):
        gt = GraspSet(grasps=(Grasp(0, 0, w=4, h=2, theta=0),))
        assert min_grasp_distance(Grasp(3, 4, w=4, h=2, theta=0), gt) == 25.0

    def test_zero_for_identical(self):
        g = Grasp(12, 9, 30, 10, -25)
        assert min_grasp_distance(g, GraspSet(grasps=(g,))) == 0.0

    def test_picks_minimum(self):
        gt = GraspSet(
            grasps=(Grasp(0, 0, 4, 2, 0), Grasp(1, 0, 4, 2, 0), Grasp(9, 9, 4, 2, 0))
        )
        assert min_grasp_distance(Grasp(1.5, 0, 4, 2, 0), gt) == pytest.approx(0.25)

    def test_empty_raises(self):
        with pytest.raises(EmptyGroundTruthError):
            min_grasp_distance(Grasp(0, 0, 1, 1, 0), GraspSet(grasps=()))


class TestBatchAccuracy:
    def _gts(self):
        return {
            "s0": GraspSet(grasps=(Grasp(50, 50, 40, 20, 0),)),
            "s1": GraspSet(grasps=(Grasp(30, 30, 20, 10, 45),)),
        }

    def test_mixed_batch(self):
        preds = [
            ("s0", Grasp(50, 50, 40, 20, 0)),  # hit
            ("s0", Grasp(50, 50, 40, 20, 45)),  # angle miss
            ("s1", Grasp(30, 30, 20, 10, 45)),  # hit
            ("s1", Grasp(130, 130, 20, 10, 45)),  # iou miss
        ]
        assert batch_accuracy(preds, self._gts()) == 0.5

    def test_unknown_scene_listed(self):
        preds = [("nope", Grasp(0, 0, 1, 1, 0)), ("s0", Grasp(50, 50, 40, 20, 0))]
        with pytest.raises(ValueError, match="nope"):
            batch_accuracy(preds, self._gts())

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            batch_accuracy([], self._gts())


class TestGraspSet:
    def test_jaw_sizes_must_parallel(self):
        g = Grasp(0, 0, 1, 1, 0)
        with pytest.raises(ValueError):
            GraspSet(grasps=(g, g), jaw_sizes=((0.02,),))

    def test_jaw_sizes_must_be_non_empty(self):
        g = Grasp(0, 0, 1, 1, 0)
        with pytest.raises(ValueError):
            GraspSet(grasps=(g,), jaw_sizes=((),))
