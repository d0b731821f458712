"""Tests for source generation and snapshot synthesis."""

import dataclasses

import numpy as np
import pytest

from coprimedoa import (
    ConfigurationError,
    Scenario,
    SignalGroup,
    SourceKind,
    SparseArray,
    VanishingGroupError,
    check_nonvanishing,
    generate_source,
    steering_matrix,
    synthesize,
)
from coprimedoa.simulation import _stream, constellation, expected_sensor_power, resolve_coeffs


def small_scenario(**overrides):
    base = dict(
        groups=(
            SignalGroup(doas=(0.3,), source=SourceKind.qpsk()),
            SignalGroup(doas=(-1.1, 1.9), source=SourceKind.qam4(), coeffs=(1.0, 0.5 + 0.5j)),
        ),
        arrays=(SparseArray(2, 4, "A"), SparseArray(3, 5, "B")),
        snr_db=float("inf"),
        num_snapshots=256,
        seed=42,
    )
    base.update(overrides)
    return Scenario(**base)


class TestGenerateSource:
    def test_qpsk_constellation_membership(self):
        rng = _stream(1, 9)
        samples = generate_source(SourceKind.qpsk(), 2000, rng)
        points = constellation(SourceKind.qpsk())
        dists = np.abs(samples[:, None] - points[None, :]).min(axis=1)
        assert dists.max() < 1e-12
        assert np.allclose(np.abs(samples), 1.0)

    def test_qpsk_circular_symmetry(self):
        rng = _stream(2, 9)
        samples = generate_source(SourceKind.qpsk(), 50000, rng)
        assert abs(np.mean(samples**2)) < 5 / np.sqrt(50000)

    def test_qam4_axis_points(self):
        rng = _stream(3, 9)
        samples = generate_source(SourceKind.qam4(4.0), 500, rng)
        points = 2.0 * np.array([1, 1j, -1, -1j])
        assert np.abs(samples[:, None] - points[None, :]).min(axis=1).max() < 1e-12

    def test_gaussian_power(self):
        rng = _stream(4, 9)
        num = 20000
        samples = generate_source(SourceKind.gaussian(2.0), num, rng)
        assert abs(np.mean(np.abs(samples) ** 2) - 2.0) < 3 * np.sqrt(2.0 / num)

    def test_invalid_power(self):
        with pytest.raises(ConfigurationError):
            SourceKind.qpsk(0.0)


class TestCheckNonvanishing:
    def test_distinct_classes_pass(self):
        group = SignalGroup(doas=(0.2, 0.9), source=SourceKind.qpsk(), coeffs=(1.0, 1.0))
        assert check_nonvanishing(group, SparseArray(6, 9))

    def test_cancelling_aliases_fail(self):
        group = SignalGroup(
            doas=(0.2, 0.2 + 2 * np.pi / 6), source=SourceKind.qpsk(), coeffs=(1.0, -1.0)
        )
        assert not check_nonvanishing(group, SparseArray(6, 9))

    def test_dense_array_never_cancels(self):
        group = SignalGroup(
            doas=(0.2, 0.2 + 2 * np.pi / 6), source=SourceKind.qpsk(), coeffs=(1.0, -1.0)
        )
        assert check_nonvanishing(group, SparseArray(1, 9))

    def test_synthesize_rejects_vanishing_group(self):
        scenario = small_scenario(
            groups=(
                SignalGroup(
                    doas=(0.2, 0.2 + 2 * np.pi / 2),
                    source=SourceKind.qpsk(),
                    coeffs=(1.0, -1.0),
                ),
            )
        )
        with pytest.raises(VanishingGroupError, match="group 0.*array 'A'"):
            synthesize(scenario)


class TestSynthesize:
    def test_shapes(self):
        snaps = synthesize(small_scenario())
        assert snaps.measurements["A"].shape == (4, 256)
        assert snaps.measurements["B"].shape == (5, 256)
        assert snaps.amplitudes.shape == (2, 256)

    def test_deterministic(self):
        a = synthesize(small_scenario())
        b = synthesize(small_scenario())
        for label in ("A", "B"):
            assert np.array_equal(a.measurements[label], b.measurements[label])

    def test_seed_changes_output(self):
        a = synthesize(small_scenario())
        b = synthesize(small_scenario(seed=43))
        assert not np.allclose(a.measurements["A"], b.measurements["A"])

    def test_noise_free_reconstruction(self):
        scenario = small_scenario()
        snaps = synthesize(scenario)
        for array in scenario.arrays:
            expected = np.zeros_like(snaps.measurements[array.label])
            for g, group in enumerate(scenario.groups):
                vec = steering_matrix(array, np.array(group.doas)) @ snaps.coeffs[g]
                expected += np.outer(vec, snaps.amplitudes[g])
            assert np.allclose(snaps.measurements[array.label], expected, atol=1e-12)

    def test_within_group_coherence(self):
        snaps = synthesize(small_scenario())
        eta = snaps.coeffs[1]
        s_p = eta[0] * snaps.amplitudes[1]
        s_q = eta[1] * snaps.amplitudes[1]
        corr = np.vdot(s_p, s_q) / (np.linalg.norm(s_p) * np.linalg.norm(s_q))
        assert abs(abs(corr) - 1.0) < 1e-12

    def test_cross_group_independence(self):
        scenario = small_scenario(num_snapshots=20000)
        snaps = synthesize(scenario)
        s0, s1 = snaps.amplitudes
        corr = np.vdot(s0, s1) / (np.linalg.norm(s0) * np.linalg.norm(s1))
        assert abs(corr) <= 5 / np.sqrt(20000)

    def test_snr_calibration(self):
        scenario = small_scenario(snr_db=10.0, num_snapshots=40000)
        clean = synthesize(dataclasses.replace(scenario, snr_db=float("inf")))
        noisy = synthesize(scenario)
        coeffs = resolve_coeffs(scenario)
        expected_noise = expected_sensor_power(scenario, coeffs) / 10.0
        assert abs(noisy.noise_power - expected_noise) < 1e-12
        noise = noisy.measurements["A"] - clean.measurements["A"]
        measured = np.mean(np.abs(noise) ** 2)
        assert abs(measured - expected_noise) < 0.05 * expected_noise

    def test_colored_noise_hook(self):
        scenario = small_scenario(snr_db=5.0, num_snapshots=30000)
        shape = np.array(
            [[1.0, 0.6, 0, 0], [0.6, 1.0, 0.6, 0], [0, 0.6, 1.0, 0.6], [0, 0, 0.6, 1.0]],
            dtype=complex,
        )
        clean = synthesize(dataclasses.replace(scenario, snr_db=float("inf")))
        noisy = synthesize(scenario, noise_covariance={"A": shape})
        noise = noisy.measurements["A"] - clean.measurements["A"]
        cov = noise @ noise.conj().T / noise.shape[1]
        cov /= np.real(np.trace(cov)) / 4
        assert abs(cov[0, 1].real - 0.6) < 0.05

    def test_unpinned_coeffs_unit_modulus(self):
        scenario = small_scenario()
        coeffs = resolve_coeffs(scenario)
        assert np.allclose(np.abs(coeffs[0]), 1.0)
        # pinned coefficients pass through untouched
        assert np.allclose(coeffs[1], [1.0, 0.5 + 0.5j])


class TestValidation:
    def test_duplicate_doas_rejected(self):
        with pytest.raises(ConfigurationError):
            small_scenario(
                groups=(
                    SignalGroup(doas=(0.3,), source=SourceKind.qpsk()),
                    SignalGroup(doas=(0.3,), source=SourceKind.qpsk()),
                )
            )

    def test_zero_coeff_rejected(self):
        with pytest.raises(ConfigurationError):
            SignalGroup(doas=(0.1, 0.2), source=SourceKind.qpsk(), coeffs=(1.0, 0.0))

    def test_coeff_length_mismatch(self):
        with pytest.raises(ConfigurationError):
            SignalGroup(doas=(0.1, 0.2), source=SourceKind.qpsk(), coeffs=(1.0,))

    def test_unknown_family(self):
        with pytest.raises(ConfigurationError):
            SourceKind("bpsk", 1.0)
