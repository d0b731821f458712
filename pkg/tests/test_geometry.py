"""Tests for array geometry, steering vectors and grating-lobe prediction."""

import numpy as np
import pytest

from coprimedoa import (
    ConfigurationError,
    SparseArray,
    SubarraySpec,
    ambiguity_classes,
    ambiguity_set,
    default_overlap_tol,
    false_peak_candidates,
    normalize_doa,
    partial_steering_vector,
    predict_false_peak,
    steering_vector,
    wrap_angle,
)


class TestSparseArray:
    def test_positions(self):
        arr = SparseArray(6, 9, "A")
        assert np.array_equal(arr.positions, 6 * np.arange(9))

    def test_invalid_spacing(self):
        with pytest.raises(ConfigurationError):
            SparseArray(0, 5)

    def test_invalid_sensor_count(self):
        with pytest.raises(ConfigurationError):
            SparseArray(3, 1)


class TestSteeringVector:
    def test_zero_doa_is_all_ones(self):
        v = steering_vector(SparseArray(6, 9), 0.0)
        assert np.array_equal(v, np.ones(9))

    def test_half_pi_alternates(self):
        # exp(j*2*(pi/2)*i) = (-1)^i is wrong; spacing 2 at pi/2 gives exp(j*pi*i)
        v = steering_vector(SparseArray(2, 3), np.pi / 2)
        assert np.allclose(v, [1, -1, 1], atol=1e-12)

    def test_matches_direct_complex_exponential(self):
        theta = 0.3 * np.pi
        v = steering_vector(SparseArray(5, 10), theta)
        expected = np.exp(1j * 1.5 * np.pi * np.arange(10))
        assert np.allclose(v, expected, atol=1e-12)

    def test_unit_modulus(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            arr = SparseArray(int(rng.integers(1, 9)), int(rng.integers(2, 12)))
            theta = rng.uniform(-np.pi, np.pi)
            assert np.abs(np.abs(steering_vector(arr, theta)) - 1.0).max() < 1e-14


class TestPartialSteeringVector:
    def test_slice_identity(self):
        arr = SparseArray(6, 9)
        theta = 0.42
        full = steering_vector(arr, theta)
        part = partial_steering_vector(arr, SubarraySpec(0, 6), theta)
        assert np.array_equal(part, full[:6])

    def test_rotation_relation(self):
        # shifting a subarray multiplies its response by a pure phase
        arr = SparseArray(6, 9)
        rng = np.random.default_rng(3)
        for _ in range(20):
            theta = rng.uniform(-np.pi, np.pi)
            offset = int(rng.integers(0, 4))
            base = partial_steering_vector(arr, SubarraySpec(0, 6), theta)
            shifted = partial_steering_vector(arr, SubarraySpec(offset, 6), theta)
            assert np.allclose(shifted, np.exp(1j * 6 * offset * theta) * base, atol=1e-12)

    def test_zero_doa_all_ones(self):
        part = partial_steering_vector(SparseArray(5, 10), SubarraySpec(2, 7), 0.0)
        assert np.array_equal(part, np.ones(7))

    def test_out_of_range(self):
        with pytest.raises(ConfigurationError):
            partial_steering_vector(SparseArray(5, 10), SubarraySpec(5, 6), 0.1)


class TestAmbiguity:
    def test_dense_array_unambiguous(self):
        assert ambiguity_set(SparseArray(1, 4), 0.4 * np.pi) == [0.4 * np.pi]

    def test_spacing_six_at_zero(self):
        got = ambiguity_set(SparseArray(6, 9), 0.0)
        expected = sorted(
            normalize_doa(2 * np.pi * m / 6) for m in range(-3, 3)
        )
        assert np.allclose(got, expected, atol=1e-12)
        assert len(got) == 6

    def test_spacing_five_evenly_spaced(self):
        got = ambiguity_set(SparseArray(5, 10), 0.1 * np.pi)
        assert len(got) == 5
        assert np.allclose(np.diff(got), 2 * np.pi / 5, atol=1e-12)

    def test_members_share_steering_vector(self):
        arr = SparseArray(7, 8)
        theta = -0.23 * np.pi
        base = steering_vector(arr, theta)
        for alias in ambiguity_set(arr, theta):
            assert np.linalg.norm(steering_vector(arr, alias) - base) < 1e-10

    def test_classes_partition(self):
        doas = [0.1, 0.1 + 2 * np.pi / 6, 0.5, -1.2]
        classes = ambiguity_classes(doas, 6)
        assert sorted(map(tuple, classes)) == [(0, 1), (2,), (3,)]
        # a dense array never aliases
        assert len(ambiguity_classes(doas, 1)) == 4


class TestFalsePeak:
    def test_exact_overlap(self):
        # lobe 1 of theta_p=0 on spacing 6 meets lobe 1 of theta_q=-pi/15 on spacing 5
        arr_a, arr_b = SparseArray(6, 9), SparseArray(5, 10)
        phi = predict_false_peak(arr_a, 6, arr_b, 7, 0.0, -np.pi / 15, tol=1e-6)
        assert phi is not None and abs(phi - np.pi / 3) < 1e-9

    def test_no_overlap_returns_none(self):
        arr_a, arr_b = SparseArray(6, 9), SparseArray(5, 10)
        assert predict_false_peak(arr_a, 6, arr_b, 7, 0.05, 0.0) is None

    def test_dense_array_has_no_grating_lobes(self):
        assert predict_false_peak(SparseArray(1, 5), 5, SparseArray(5, 10), 7, 0.3, 0.7) is None

    def test_non_coprime_rejected(self):
        with pytest.raises(ConfigurationError):
            predict_false_peak(SparseArray(6, 9), 6, SparseArray(4, 8), 4, 0.1, 0.7)

    def test_equal_directions_rejected(self):
        with pytest.raises(ConfigurationError):
            predict_false_peak(SparseArray(6, 9), 6, SparseArray(5, 10), 7, 0.1, 0.1)

    def test_overlap_unique_with_default_tol(self):
        # sub_a >= N and sub_b >= M: the sweep yields at most one candidate
        rng = np.random.default_rng(11)
        pairs = [(2, 3), (3, 4), (4, 5), (5, 6), (6, 5), (5, 7), (7, 4)]
        for _ in range(400):
            m_sp, n_sp = pairs[rng.integers(0, len(pairs))]
            arr_a = SparseArray(m_sp, m_sp + n_sp)
            arr_b = SparseArray(n_sp, m_sp + n_sp)
            theta_p, theta_q = rng.uniform(-np.pi, np.pi, size=2)
            if abs(wrap_angle(theta_p - theta_q)) < 1e-3:
                continue
            cands = false_peak_candidates(arr_a, n_sp, arr_b, m_sp, theta_p, theta_q)
            assert len(cands) <= 1

    def test_supplementary_array_separates_false_peaks(self):
        # false peaks of the same coherent pair land apart on the two coarrays
        arr_a = SparseArray(6, 9, "A")
        arr_b = SparseArray(5, 10, "B")
        arr_c = SparseArray(7, 8, "C")
        tol_ab = default_overlap_tol(arr_a, 6, arr_b, 7)
        tol_ac = default_overlap_tol(arr_a, 6, arr_c, 5)
        rng = np.random.default_rng(23)
        both = 0
        for _ in range(300):
            theta_p, theta_q = rng.uniform(-np.pi, np.pi, size=2)
            if abs(wrap_angle(theta_p - theta_q)) < 1e-3:
                continue
            phi_ab = predict_false_peak(arr_a, 6, arr_b, 7, theta_p, theta_q)
            phi_ac = predict_false_peak(arr_a, 6, arr_c, 5, theta_p, theta_q)
            if phi_ab is None or phi_ac is None:
                continue
            both += 1
            assert abs(wrap_angle(phi_ab - phi_ac)) > max(tol_ab, tol_ac)
        assert both > 20

    def test_default_tol_capped_by_lobe_grid(self):
        arr_a, arr_b = SparseArray(6, 9), SparseArray(5, 10)
        tol = default_overlap_tol(arr_a, 6, arr_b, 7)
        assert tol <= np.pi / 30 + 1e-15


class TestNormalizeDoa:
    def test_in_range_unchanged(self):
        assert normalize_doa(0.4 * np.pi) == 0.4 * np.pi

    def test_wraps(self):
        assert abs(normalize_doa(1.5 * np.pi) - (-0.5 * np.pi)) < 1e-12
        assert normalize_doa(np.pi) == -np.pi
