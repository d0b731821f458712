"""Source synthesis and noisy snapshot generation for coprime array scenarios.

Sources are circularly-symmetric; the non-Gaussian kinds (QPSK / 4-QAM) have a
strictly negative fourth-order cumulant, which is what the cumulant-domain
estimators downstream rely on.  The Gaussian kind exists for negative tests.

Randomness is fully determined by ``Scenario.seed``: every group, coefficient
draw and per-array noise stream runs on its own counter-based generator derived
from the seed, so results do not depend on evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import isinf
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import ConfigurationError, DimensionError, VanishingGroupError
from .geometry import SparseArray, ambiguity_classes, normalize_doa, steering_matrix

SOURCE_FAMILIES = ("qpsk", "qam4", "gaussian")

# Coherent groups whose coefficient sum over an ambiguity class is smaller than
# this are considered vanishing on that array.
VANISHING_TOL = 1e-9


@dataclass(frozen=True)
class SourceKind:
    """Source amplitude distribution: constellation family plus average power."""

    family: str
    power: float = 1.0

    def __post_init__(self):
        if self.family not in SOURCE_FAMILIES:
            raise ConfigurationError(
                f"unknown source family {self.family!r}, expected one of {SOURCE_FAMILIES}"
            )
        if not self.power > 0:
            raise ConfigurationError(f"source power must be positive, got {self.power}")

    @classmethod
    def qpsk(cls, power: float = 1.0) -> "SourceKind":
        return cls("qpsk", power)

    @classmethod
    def qam4(cls, power: float = 1.0) -> "SourceKind":
        return cls("qam4", power)

    @classmethod
    def gaussian(cls, power: float = 1.0) -> "SourceKind":
        return cls("gaussian", power)


def constellation(kind: SourceKind) -> Optional[np.ndarray]:
    """The discrete symbol set for PSK/QAM kinds, or None for Gaussian."""
    if kind.family == "qpsk":
        phases = np.pi / 4 + np.pi / 2 * np.arange(4)
    elif kind.family == "qam4":
        phases = np.pi / 2 * np.arange(4)
    else:
        return None
    return np.sqrt(kind.power) * np.exp(1j * phases)


@dataclass(frozen=True)
class SignalGroup:
    """A set of mutually coherent signals sharing one source waveform.

    ``coeffs`` holds the complex propagation coefficient of each path.  When
    left as ``None`` the coefficients are drawn at synthesis time with unit
    modulus and random phases from the scenario seed.
    """

    doas: Tuple[float, ...]
    source: SourceKind
    coeffs: Optional[Tuple[complex, ...]] = None

    def __post_init__(self):
        doas = tuple(normalize_doa(t) for t in self.doas)
        object.__setattr__(self, "doas", doas)
        if len(doas) < 1:
            raise ConfigurationError("a signal group needs at least one DOA")
        if len(set(doas)) != len(doas):
            raise ConfigurationError(f"group DOAs must be distinct, got {doas}")
        if self.coeffs is not None:
            coeffs = tuple(complex(c) for c in self.coeffs)
            object.__setattr__(self, "coeffs", coeffs)
            if len(coeffs) != len(doas):
                raise ConfigurationError("coeffs and doas must have the same length")
            if any(abs(c) == 0 for c in coeffs):
                raise ConfigurationError("propagation coefficients must be nonzero")

    @property
    def size(self) -> int:
        return len(self.doas)


@dataclass(frozen=True)
class Scenario:
    """Complete description of one simulated measurement campaign."""

    groups: Tuple[SignalGroup, ...]
    arrays: Tuple[SparseArray, ...]
    snr_db: float
    num_snapshots: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(self.groups))
        object.__setattr__(self, "arrays", tuple(self.arrays))
        if self.num_snapshots < 1:
            raise ConfigurationError("num_snapshots must be >= 1")
        if len(self.arrays) < 1:
            raise ConfigurationError("at least one array is required")
        labels = [a.label for a in self.arrays]
        if len(set(labels)) != len(labels):
            raise ConfigurationError(f"array labels must be unique, got {labels}")
        all_doas = [t for g in self.groups for t in g.doas]
        if len(set(all_doas)) != len(all_doas):
            raise ConfigurationError("DOAs must be distinct across all groups")

    @property
    def total_signals(self) -> int:
        return sum(g.size for g in self.groups)

    def array(self, label: str) -> SparseArray:
        for a in self.arrays:
            if a.label == label:
                return a
        raise ConfigurationError(f"no array labeled {label!r} in scenario")


@dataclass
class SnapshotSet:
    """Per-array measurement matrices plus the generating ingredients.

    ``measurements[label]`` has shape ``(num_sensors, num_snapshots)``.  The
    shared source amplitude streams and the resolved coefficients are retained
    so tests can reconstruct the noise-free model output exactly.
    """

    measurements: Dict[str, np.ndarray]
    amplitudes: np.ndarray  # (num_groups, num_snapshots) source streams
    coeffs: List[np.ndarray]  # resolved propagation coefficients per group
    noise_power: float

    def pair(self, label_a: str, label_b: str) -> Tuple[np.ndarray, np.ndarray]:
        return self.measurements[label_a], self.measurements[label_b]


def _stream(seed: int, *key: int) -> np.random.Generator:
    """Independent counter-based generator for one (kind, index) stream."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def generate_source(kind: SourceKind, num_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Draw i.i.d. complex source amplitudes of the given kind."""
    if num_samples < 1:
        raise ConfigurationError("num_samples must be >= 1")
    if kind.family == "gaussian":
        scale = np.sqrt(kind.power / 2.0)
        return scale * (rng.standard_normal(num_samples) + 1j * rng.standard_normal(num_samples))
    symbols = constellation(kind)
    return symbols[rng.integers(0, 4, size=num_samples)]


def check_nonvanishing(group: SignalGroup, array: SparseArray, tol: float = VANISHING_TOL) -> bool:
    """True when the group survives on this array.

    DOAs that alias onto each other at the array spacing are summed with their
    coefficients; the group vanishes if any aliasing class cancels out.
    """
    if group.coeffs is None:
        raise ConfigurationError("check_nonvanishing needs concrete coefficients")
    coeffs = np.asarray(group.coeffs, dtype=complex)
    for cls in ambiguity_classes(group.doas, array.spacing):
        if abs(coeffs[cls].sum()) <= tol:
            return False
    return True


def resolve_coeffs(scenario: Scenario) -> List[np.ndarray]:
    """Concrete propagation coefficients for every group.

    Pinned coefficients are returned as-is; unset ones are drawn with unit
    modulus and uniform random phases from the scenario seed.
    """
    out = []
    for g, group in enumerate(scenario.groups):
        if group.coeffs is not None:
            out.append(np.asarray(group.coeffs, dtype=complex))
        else:
            rng = _stream(scenario.seed, 0, g)
            out.append(np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=group.size)))
    return out


def expected_sensor_power(scenario: Scenario, coeffs: Sequence[np.ndarray]) -> float:
    """Expected signal power per sensor, averaged over all sensors of all arrays."""
    total = 0.0
    count = 0
    for array in scenario.arrays:
        per_sensor = np.zeros(array.num_sensors)
        for group, eta in zip(scenario.groups, coeffs):
            mat = steering_matrix(array, np.asarray(group.doas))
            per_sensor += group.source.power * np.abs(mat @ eta) ** 2
        total += per_sensor.sum()
        count += array.num_sensors
    return total / count


def synthesize(
    scenario: Scenario, noise_covariance: Optional[Dict[str, np.ndarray]] = None
) -> SnapshotSet:
    """Generate noisy snapshots for every array in the scenario.

    One shared amplitude stream per group drives all arrays at the same
    snapshot.  Additive noise is zero-mean complex Gaussian, independent
    across arrays and sensors, with variance chosen so the per-sensor SNR
    (expected total signal power over noise power, averaged over sensors)
    matches ``scenario.snr_db``.  ``snr_db = inf`` disables noise.

    ``noise_covariance`` optionally maps array labels to Hermitian PSD
    matrices used as the spatial noise shape (normalized to unit mean
    diagonal, then scaled to the configured noise power).

    Raises:
        VanishingGroupError: when a group cancels out on some array.
    """
    coeffs = resolve_coeffs(scenario)
    for g, (group, eta) in enumerate(zip(scenario.groups, coeffs)):
        concrete = SignalGroup(doas=group.doas, source=group.source, coeffs=tuple(eta))
        for array in scenario.arrays:
            if not check_nonvanishing(concrete, array):
                raise VanishingGroupError(
                    f"group {g} cancels out on array '{array.label}': the coefficients of "
                    f"DOAs that alias at spacing {array.spacing} sum to (nearly) zero"
                )

    num_t = scenario.num_snapshots
    amplitudes = np.empty((len(scenario.groups), num_t), dtype=complex)
    for g, group in enumerate(scenario.groups):
        amplitudes[g] = generate_source(group.source, num_t, _stream(scenario.seed, 1, g))

    if isinf(scenario.snr_db):
        noise_power = 0.0
    else:
        signal_power = expected_sensor_power(scenario, coeffs)
        noise_power = signal_power / 10.0 ** (scenario.snr_db / 10.0)

    measurements = {}
    for array in scenario.arrays:
        clean = np.zeros((array.num_sensors, num_t), dtype=complex)
        for g, (group, eta) in enumerate(zip(scenario.groups, coeffs)):
            mat = steering_matrix(array, np.asarray(group.doas))
            clean += np.outer(mat @ eta, amplitudes[g])
        measurements[array.label] = clean

    # separate loop keeps signal synthesis independent of the noise streams
    if noise_power > 0.0:
        for a, array in enumerate(scenario.arrays):
            rng = _stream(scenario.seed, 2, a)
            white = rng.standard_normal((array.num_sensors, num_t)) + 1j * rng.standard_normal(
                (array.num_sensors, num_t)
            )
            white *= np.sqrt(noise_power / 2.0)
            if noise_covariance and array.label in noise_covariance:
                shape = np.asarray(noise_covariance[array.label], dtype=complex)
                if shape.shape != (array.num_sensors, array.num_sensors):
                    raise DimensionError(
                        f"noise covariance for '{array.label}' must be "
                        f"{array.num_sensors}x{array.num_sensors}"
                    )
                shape = shape / np.real(np.trace(shape) / array.num_sensors)
                chol = np.linalg.cholesky(shape)
                white = chol @ white
            measurements[array.label] = measurements[array.label] + white

    return SnapshotSet(
        measurements=measurements,
        amplitudes=amplitudes,
        coeffs=coeffs,
        noise_power=noise_power,
    )
