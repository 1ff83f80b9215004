import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neighborly.core import (
    KernelSpec,
    LabeledDataset,
    TimeSeries,
    cosine_dist_ratings,
    euclidean,
    hamming,
    kernel_eval,
    shift_min_distance,
)


class TestEuclidean:
    def test_3_4_5_triangle(self):
        assert euclidean((0, 0), (3, 4)) == 5.0

    def test_identity(self):
        a = np.array([1.3, -2.0, 7.5])
        assert euclidean(a, a) == 0.0

    def test_matches_componentwise_oracle(self):
        rng = np.random.default_rng(8)
        a = rng.normal(size=5)
        b = rng.normal(size=5)
        oracle = sum((ai - bi) ** 2 for ai, bi in zip(a, b)) ** 0.5
        assert euclidean(a, b) == pytest.approx(oracle, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            euclidean([1, 2], [1, 2, 3])


class TestHamming:
    def test_equal(self):
        assert hamming([0, 1, 0, 1], [0, 1, 0, 1]) == 0

    def test_all_differ(self):
        assert hamming([0, 0, 0, 0], [1, 1, 1, 1]) == 4

    def test_position_count(self):
        assert hamming([1, 0, 1, 0], [1, 0, 0, 1]) == 2

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            hamming([0, 1], [0, 1, 1])


def test_metric_axioms_hold_on_random_triples():
    rng = np.random.default_rng(123)
    for _ in range(1000):
        a, b, c = rng.normal(size=(3, 4))
        dab, dba = euclidean(a, b), euclidean(b, a)
        assert dab == dba >= 0
        assert euclidean(a, a) == 0
        assert euclidean(a, c) <= dab + euclidean(b, c) + 1e-12
        xa, xb, xc = (rng.random((3, 16)) < 0.5).astype(np.uint8)
        hab = hamming(xa, xb)
        assert hab == hamming(xb, xa) >= 0
        assert hamming(xa, xc) <= hab + hamming(xb, xc)


class TestKernelEval:
    def test_naive_threshold(self):
        spec = KernelSpec("naive", 1.0)
        assert kernel_eval(spec, 0.5) == 1.0
        assert kernel_eval(spec, 1.5) == 0.0

    def test_gaussian_at_zero(self):
        assert kernel_eval(KernelSpec("gaussian", 1.0), 0.0) == 1.0

    def test_truncated_gaussian_cutoff(self):
        spec = KernelSpec("truncated_gaussian", 1.0, tau=3.0)
        assert kernel_eval(spec, 4.0) == 0.0
        assert kernel_eval(spec, 2.9) == pytest.approx(np.exp(-0.5 * 2.9**2))

    @given(st.sampled_from(["naive", "gaussian", "truncated_gaussian"]),
           st.floats(0, 50), st.floats(0, 50))
    @settings(max_examples=200, deadline=None)
    def test_monotone_nonincreasing_and_bounded(self, variant, s1, s2):
        spec = KernelSpec(variant, 1.0, tau=3.0 if variant == "truncated_gaussian" else None)
        lo, hi = sorted((s1, s2))
        v_lo, v_hi = kernel_eval(spec, lo), kernel_eval(spec, hi)
        assert 0.0 <= v_hi <= v_lo <= 1.0

    def test_rejects_bad_spec(self):
        with pytest.raises(ValueError):
            KernelSpec("naive", 0.0)
        with pytest.raises(ValueError):
            KernelSpec("truncated_gaussian", 1.0)
        with pytest.raises(ValueError):
            KernelSpec("box", 1.0)


def _series(values, start=1):
    return TimeSeries(np.asarray(values, dtype=float), start)


class TestShiftMinDistance:
    def test_zero_shift_is_plain_euclidean(self):
        x = _series([1, 2, 3, 4])
        xp = _series([2, 2, 2, 2])
        expected = euclidean([1, 2, 3, 4], [2, 2, 2, 2])
        assert shift_min_distance(x, xp, 4, 0) == pytest.approx(expected)

    def test_exact_alignment_gives_zero(self):
        rng = np.random.default_rng(0)
        base = rng.normal(size=20)
        delta0 = 2
        x = TimeSeries(base[5:15], start=1)               # x(t) = base[t + 4]
        xp = TimeSeries(base, start=1 - delta0 - 4)       # x'(t + 2) = x(t)
        assert shift_min_distance(x, xp, 10, 3) == pytest.approx(0.0, abs=1e-12)

    def test_matches_shift_enumeration_oracle(self):
        rng = np.random.default_rng(4)
        T, dmax = 6, 3
        x = TimeSeries(rng.normal(size=T), start=1)
        xp = TimeSeries(rng.normal(size=T + 2 * dmax), start=1 - dmax)
        oracle = min(
            np.sqrt(sum((x.values[t - 1] - xp.values[(t + d) - xp.start]) ** 2
                        for t in range(1, T + 1)))
            for d in range(-dmax, dmax + 1)
        )
        assert shift_min_distance(x, xp, T, dmax) == pytest.approx(oracle, abs=1e-12)

    def test_nonincreasing_in_dmax_nondecreasing_in_T(self):
        rng = np.random.default_rng(11)
        x = TimeSeries(rng.normal(size=12), start=1)
        xp = TimeSeries(rng.normal(size=12 + 2 * 4), start=1 - 4)
        by_dmax = [shift_min_distance(x, xp, 8, d) for d in range(5)]
        assert all(a >= b - 1e-12 for a, b in zip(by_dmax, by_dmax[1:]))
        by_T = [shift_min_distance(x, xp, T, 2) for T in range(1, 9)]
        assert all(a <= b + 1e-12 for a, b in zip(by_T, by_T[1:]))

    def test_not_symmetric(self):
        # rho(x, x') aligns a shifted x' against x's window 1..T; swapping the
        # arguments changes which series is windowed, so the values differ:
        # here x(1..2) = (0,0) matches x' delayed by one step exactly, while
        # x'(1..2) = (0,9) is at least distance 4 from every shift of x.
        x = TimeSeries(np.array([5.0, 0.0, 0.0, 5.0]), start=0)
        xp = TimeSeries(np.array([0.0, 0.0, 9.0, 9.0]), start=0)
        d_xy = shift_min_distance(x, xp, 2, 1)
        d_yx = shift_min_distance(xp, x, 2, 1)
        assert d_xy == pytest.approx(0.0, abs=1e-12)
        assert d_yx == pytest.approx(4.0, abs=1e-12)

    def test_insufficient_range_raises(self):
        x = _series([1, 2, 3])
        xp = _series([1, 2, 3])
        with pytest.raises(ValueError):
            shift_min_distance(x, xp, 3, 1)


class TestCosineDistRatings:
    def test_full_agreement(self):
        yu = np.array([1, -1, 1, 0])
        assert cosine_dist_ratings(yu, yu, [0, 1, 2]) == 0.0

    def test_full_disagreement(self):
        yu = np.array([1, -1, 1, -1])
        assert cosine_dist_ratings(yu, -yu, [0, 1, 2, 3]) == 2.0

    def test_half_agreement(self):
        yu = np.array([1, 1, 1, 1])
        yv = np.array([1, 1, -1, -1])
        assert cosine_dist_ratings(yu, yv, [0, 1, 2, 3]) == 1.0

    def test_empty_support(self):
        with pytest.raises(ValueError, match="no comparable"):
            cosine_dist_ratings([1], [1], [])


class TestLabeledDataset:
    def test_priorities_fixed_by_seed(self):
        pts = np.zeros((5, 2))
        d1 = LabeledDataset.from_points(pts, rng=np.random.default_rng(3))
        d2 = LabeledDataset.from_points(pts, rng=np.random.default_rng(3))
        assert np.array_equal(d1.priorities, d2.priorities)
        assert np.all((0 <= d1.priorities) & (d1.priorities <= 1))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            LabeledDataset.from_points([[np.inf, 0.0]])

    def test_rejects_mismatched_labels(self):
        with pytest.raises(ValueError):
            LabeledDataset.from_points([[0.0], [1.0]], labels=[1.0])

    def test_bits_validated(self):
        with pytest.raises(ValueError):
            LabeledDataset.from_bits(np.array([[0, 2]]))
