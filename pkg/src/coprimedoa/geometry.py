"""Coprime sparse array geometry, steering vectors and grating-lobe analysis.

Directions of arrival are expressed as *normalized* DOAs throughout: for a
half-wavelength unit grid, ``theta = pi * sin(physical_angle)``, wrapped into
``[-pi, pi)``.  Conversion to physical angles is a display concern only.

All functions here are pure and safe for concurrent use.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Optional

import numpy as np

from .exceptions import ConfigurationError

TWO_PI = 2.0 * np.pi

# Two DOAs are treated as aliases of each other on a sparse array when their
# phase residues differ by less than this (radians, phase domain).
AMBIGUITY_TOL = 1e-8


def normalize_doa(theta: float) -> float:
    """Wrap a scalar angle into [-pi, pi). In-range values pass through unchanged."""
    theta = float(theta)
    if -np.pi <= theta < np.pi:
        return theta
    return float((theta + np.pi) % TWO_PI - np.pi)


def wrap_angle(x):
    """Wrap angles (scalar or array) into [-pi, pi)."""
    return (np.asarray(x, dtype=float) + np.pi) % TWO_PI - np.pi


@dataclass(frozen=True)
class SparseArray:
    """Uniform sparse linear array with sensor ``i`` at ``spacing * i`` grid units.

    Args:
        spacing: Inter-sensor spacing as a positive integer multiple of the
            half-wavelength unit spacing.
        num_sensors: Number of sensors (at least 2).
        label: Identifier used in configs and output files.
    """

    spacing: int
    num_sensors: int
    label: str = ""

    def __post_init__(self):
        if int(self.spacing) != self.spacing or self.spacing < 1:
            raise ConfigurationError(f"spacing must be a positive integer, got {self.spacing}")
        if int(self.num_sensors) != self.num_sensors or self.num_sensors < 2:
            raise ConfigurationError(f"num_sensors must be an integer >= 2, got {self.num_sensors}")

    @property
    def positions(self) -> np.ndarray:
        """Sensor positions in grid units."""
        return self.spacing * np.arange(self.num_sensors)


@dataclass(frozen=True)
class CoarrayPair:
    """Two sparse arrays with coprime spacings."""

    first: SparseArray
    second: SparseArray

    def __post_init__(self):
        if gcd(self.first.spacing, self.second.spacing) != 1:
            raise ConfigurationError(
                f"array spacings {self.first.spacing} and {self.second.spacing} are not coprime"
            )

    @property
    def label(self) -> str:
        return f"{self.first.label}{self.second.label}"


@dataclass(frozen=True)
class SubarraySpec:
    """Contiguous run of ``size`` sensors starting at sensor ``start``."""

    start: int
    size: int

    def __post_init__(self):
        if self.start < 0:
            raise ConfigurationError(f"subarray start must be >= 0, got {self.start}")
        if self.size < 1:
            raise ConfigurationError(f"subarray size must be >= 1, got {self.size}")

    def validate_for(self, array: SparseArray) -> None:
        if self.start + self.size > array.num_sensors:
            raise ConfigurationError(
                f"subarray [{self.start}, {self.start + self.size}) exceeds "
                f"array '{array.label}' with {array.num_sensors} sensors"
            )

    @classmethod
    def whole(cls, array: SparseArray) -> "SubarraySpec":
        return cls(0, array.num_sensors)


def steering_vector(array: SparseArray, theta: float) -> np.ndarray:
    """Array response to a unit plane wave from normalized DOA ``theta``.

    Element ``i`` is ``exp(1j * spacing * i * theta)``; element 0 is 1 and all
    elements have unit modulus.
    """
    return np.exp(1j * array.spacing * theta * np.arange(array.num_sensors))


def steering_matrix(array: SparseArray, thetas) -> np.ndarray:
    """Stack of steering vectors, shape ``(num_sensors, len(thetas))``."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    return np.exp(1j * array.spacing * np.outer(np.arange(array.num_sensors), thetas))


def partial_steering_vector(array: SparseArray, sub: SubarraySpec, theta: float) -> np.ndarray:
    """Steering vector restricted to a subarray.

    Equals the slice ``[start, start + size)`` of the full steering vector;
    element ``k`` is ``exp(1j * spacing * (start + k) * theta)``.
    """
    sub.validate_for(array)
    idx = sub.start + np.arange(sub.size)
    return np.exp(1j * array.spacing * theta * idx)


def partial_steering_matrix(array: SparseArray, sub: SubarraySpec, thetas) -> np.ndarray:
    """Partial steering vectors for many DOAs, shape ``(sub.size, len(thetas))``."""
    sub.validate_for(array)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    idx = sub.start + np.arange(sub.size)
    return np.exp(1j * array.spacing * np.outer(idx, thetas))


def ambiguity_set(array: SparseArray, theta: float) -> list:
    """All DOAs indistinguishable from ``theta`` on this sparse array.

    Returns the sorted list ``{theta + 2*pi*m/spacing}`` wrapped into
    [-pi, pi); the steering vectors of all members coincide.  A dense array
    (spacing 1) returns just ``[theta]``.
    """
    base = normalize_doa(theta)
    return sorted(
        normalize_doa(base + TWO_PI * m / array.spacing) for m in range(array.spacing)
    )


def ambiguity_classes(doas, spacing: int, tol: float = AMBIGUITY_TOL) -> list:
    """Partition DOAs into classes that alias onto each other at this spacing.

    Two DOAs fall in the same class when they differ by a multiple of
    ``2*pi/spacing`` (within ``tol`` in the phase domain, i.e. their steering
    vectors coincide).  Returns a list of index lists.
    """
    doas = np.asarray(doas, dtype=float)
    n = len(doas)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(wrap_angle(spacing * (doas[i] - doas[j]))) < tol:
                parent[find(i)] = find(j)
    classes: dict = {}
    for i in range(n):
        classes.setdefault(find(i), []).append(i)
    return sorted(classes.values())


def grating_lobe_width(array: SparseArray, subarray_size: int) -> float:
    """Main/grating lobe width ``2*pi / (spacing * subarray_size)`` of a subarray."""
    return TWO_PI / (array.spacing * subarray_size)


def default_overlap_tol(
    array_a: SparseArray, sub_a_size: int, array_b: SparseArray, sub_b_size: int
) -> float:
    """Default tolerance for declaring two grating lobes overlapping.

    The narrower of the two grating-lobe widths, additionally capped at half
    the pitch ``2*pi/(M*N)`` of the coprime lobe-difference grid.  The cap
    keeps the overlap direction unique: without it, two distinct lobe pairs
    can both sit within one beamwidth of each other whenever the subarrays
    are shorter than twice the opposite spacing.
    """
    return min(
        grating_lobe_width(array_a, sub_a_size),
        grating_lobe_width(array_b, sub_b_size),
        np.pi / (array_a.spacing * array_b.spacing),
    )


@dataclass(frozen=True)
class FalsePeakCandidate:
    """One overlapping grating-lobe pair and the direction it points at."""

    phi: float
    mismatch: float
    lobe_a: int
    lobe_b: int


def false_peak_candidates(
    array_a: SparseArray,
    sub_a_size: int,
    array_b: SparseArray,
    sub_b_size: int,
    theta_p: float,
    theta_q: float,
    tol: Optional[float] = None,
) -> list:
    """Scan all grating-lobe pairs of ``theta_p`` (on A) and ``theta_q`` (on B).

    A candidate is recorded whenever lobe ``m`` of ``theta_p`` on array A and
    lobe ``n`` of ``theta_q`` on array B point within ``tol`` of each other;
    its direction is the midpoint of the two lobe centers.  Lobe indices run
    over the nonzero residues ``m in 1..M-1``, ``n in 1..N-1``, which
    enumerates every grating lobe on the circle exactly once and excludes the
    true directions themselves.

    Returns candidates sorted by increasing center mismatch.
    """
    m_sp, n_sp = array_a.spacing, array_b.spacing
    if gcd(m_sp, n_sp) != 1:
        raise ConfigurationError(f"spacings {m_sp} and {n_sp} are not coprime")
    if tol is None:
        tol = default_overlap_tol(array_a, sub_a_size, array_b, sub_b_size)
    theta_p = normalize_doa(theta_p)
    theta_q = normalize_doa(theta_q)

    out = []
    for m in range(1, m_sp):
        center_a = normalize_doa(theta_p + TWO_PI * m / m_sp)
        for n in range(1, n_sp):
            center_b = normalize_doa(theta_q + TWO_PI * n / n_sp)
            delta = float(wrap_angle(center_a - center_b))
            if abs(delta) <= tol:
                phi = normalize_doa(center_a - delta / 2.0)
                out.append(FalsePeakCandidate(phi=phi, mismatch=abs(delta), lobe_a=m, lobe_b=n))
    out.sort(key=lambda c: c.mismatch)
    return out


def predict_false_peak(
    array_a: SparseArray,
    sub_a_size: int,
    array_b: SparseArray,
    sub_b_size: int,
    theta_p: float,
    theta_q: float,
    tol: Optional[float] = None,
) -> Optional[float]:
    """Predict where a coherent pair ``(theta_p, theta_q)`` creates a false peak.

    Returns the direction of the closest grating-lobe overlap between the two
    beam patterns, or ``None`` when no lobe pair is aligned within ``tol``.
    With ``sub_a_size >= N`` and ``sub_b_size >= M`` the default tolerance
    admits at most one overlap.
    """
    if normalize_doa(theta_p) == normalize_doa(theta_q):
        raise ConfigurationError("theta_p and theta_q must be distinct directions")
    cands = false_peak_candidates(
        array_a, sub_a_size, array_b, sub_b_size, theta_p, theta_q, tol
    )
    return cands[0].phi if cands else None
