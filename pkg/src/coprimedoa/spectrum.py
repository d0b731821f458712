"""Eigen-subspace extraction, 4-MUSIC null spectra and peak picking.

The null spectrum of a coarray pair is the squared norm of the noise-subspace
projection of the unit-normalized composite steering vector
``a(theta) kron conj(b(theta))``; signal directions show up as (near) zeros
and the pseudo-spectrum is the floored reciprocal.  Null spectra of different
coarray pairs over the same grid can be summed pointwise: a direction survives
on the combined pseudo-spectrum only if it is a null of every pair, which
removes grating-lobe false peaks while true DOAs remain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Union

import numpy as np

from .exceptions import ConfigurationError, DimensionError
from .cumulants import Fcm, FcmGeometry, hermitian_part, source_kurtosis
from .geometry import SparseArray, ambiguity_classes

DEFAULT_GRID_POINTS = 4096

#: null-spectrum values are clamped here before taking reciprocals
PSEUDO_FLOOR = 1e-12


def default_grid(num_points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """Uniform DOA grid over [-pi, pi)."""
    if num_points < 3:
        raise ConfigurationError("grid needs at least 3 points")
    return np.linspace(-np.pi, np.pi, num_points, endpoint=False)


@dataclass
class SubspaceModel:
    """Signal/noise split of a Hermitian matrix's eigenvectors.

    ``eigenvalues`` holds eigenvalue magnitudes in descending order; the FCM
    is indefinite (negative-kurtosis sources give negative eigenvalues), so
    the split is by magnitude.
    """

    projector_noise: np.ndarray
    signal_dim: int
    eigenvalues: np.ndarray
    signal_basis: np.ndarray

    @property
    def size(self) -> int:
        return self.projector_noise.shape[0]

    @property
    def noise_dim(self) -> int:
        return self.size - self.signal_dim


def eigengap_signal_dim(eigenvalue_magnitudes: np.ndarray) -> int:
    """Pick the signal dimension at the largest consecutive log-eigenvalue gap.

    Only gaps within the top half of the spectrum are considered.
    """
    mags = np.asarray(eigenvalue_magnitudes, dtype=float)
    logs = np.log(np.maximum(mags, 1e-300))
    half = max(1, mags.size // 2)
    gaps = logs[:half] - logs[1 : half + 1]
    return int(np.argmax(gaps)) + 1


def subspace(fcm: Union[Fcm, np.ndarray], signal_dim: Optional[int] = None) -> SubspaceModel:
    """Eigendecompose a Hermitian matrix and split off the noise subspace.

    Args:
        fcm: An :class:`Fcm` or a raw Hermitian matrix.
        signal_dim: Number of signal eigenvectors (largest magnitudes).  When
            omitted, chosen by the eigen-gap heuristic.

    Raises:
        ConfigurationError: if ``signal_dim`` is negative or >= matrix size.
    """
    matrix = fcm.matrix if isinstance(fcm, Fcm) else np.asarray(fcm, dtype=complex)
    matrix = hermitian_part(matrix)
    eigvals, eigvecs = np.linalg.eigh(matrix)
    order = np.argsort(-np.abs(eigvals), kind="stable")
    mags = np.abs(eigvals[order])
    eigvecs = eigvecs[:, order]

    n = matrix.shape[0]
    if signal_dim is None:
        signal_dim = eigengap_signal_dim(mags)
    if not (0 <= signal_dim < n):
        raise ConfigurationError(f"signal_dim must be in [0, {n}), got {signal_dim}")

    basis = eigvecs[:, :signal_dim]
    projector = np.eye(n, dtype=complex) - np.einsum("is,js->ij", basis, basis.conj())
    return SubspaceModel(
        projector_noise=hermitian_part(projector),
        signal_dim=signal_dim,
        eigenvalues=mags,
        signal_basis=basis,
    )


def scenario_signal_dim(
    scenario,
    array_a: SparseArray,
    array_b: SparseArray,
    size_a: int,
    size_b: int,
    smoothed: bool = True,
) -> int:
    """Signal-subspace dimension implied by the scenario's ground truth.

    Without smoothing every group (with nonzero source kurtosis) contributes
    a one-dimensional subspace regardless of its size.  With smoothing the
    per-group contribution is the product over the two arrays of
    ``min(#alias classes, #subarray offsets, subarray size)``: the rotated
    coefficient vectors of a group span one dimension per alias class, up to
    the number of distinct subarray placements.
    """
    total = 0
    shifts_a = array_a.num_sensors - size_a + 1
    shifts_b = array_b.num_sensors - size_b + 1
    for group in scenario.groups:
        if source_kurtosis(group.source) == 0.0:
            continue
        if not smoothed:
            total += 1
            continue
        classes_a = len(ambiguity_classes(group.doas, array_a.spacing))
        classes_b = len(ambiguity_classes(group.doas, array_b.spacing))
        rank_a = min(classes_a, shifts_a, size_a)
        rank_b = min(classes_b, shifts_b, size_b)
        total += rank_a * rank_b
    return min(total, size_a * size_b - 1)


@dataclass
class SpectrumGrid:
    """Sampled null spectra of one or more coarray pairs over a common grid."""

    thetas: np.ndarray
    null_values: Dict[str, np.ndarray] = field(default_factory=dict)
    combined: Optional[np.ndarray] = None

    def __post_init__(self):
        self.thetas = np.asarray(self.thetas, dtype=float)
        if self.thetas.ndim != 1 or np.any(np.diff(self.thetas) <= 0):
            raise ConfigurationError("grid must be 1-D and strictly increasing")
        for key, vals in list(self.null_values.items()):
            self.null_values[key] = self._check_values(vals)
        if self.combined is not None:
            self.combined = self._check_values(self.combined)

    def _check_values(self, vals: np.ndarray) -> np.ndarray:
        vals = np.asarray(vals, dtype=float)
        if vals.shape != self.thetas.shape:
            raise DimensionError("spectrum values must match the grid length")
        if vals.min(initial=0.0) < -1e-9:
            raise ConfigurationError("null-spectrum values must be nonnegative")
        return np.maximum(vals, 0.0)

    @property
    def primary(self) -> np.ndarray:
        """The operative null spectrum: the combined one, or the sole pair's."""
        if self.combined is not None:
            return self.combined
        if len(self.null_values) != 1:
            raise ConfigurationError(
                "spectrum holds several pairs but no combined values; combine first"
            )
        return next(iter(self.null_values.values()))

    def pseudo(self, floor: float = PSEUDO_FLOOR) -> np.ndarray:
        """Pseudo-spectrum ``1 / max(null, floor)``."""
        return 1.0 / np.maximum(self.primary, floor)


def evaluate_null(model: SubspaceModel, geometry: FcmGeometry, thetas) -> np.ndarray:
    """Null-spectrum values at arbitrary DOAs (not necessarily a grid).

    Steering vectors are unit-normalized inside the quadratic form, so values
    lie in [0, 1]; evaluation goes through the signal basis
    (``1 - |basis^H s|^2``), which is BLAS-free and identical to the noise
    projector quadratic form up to machine precision.
    """
    if geometry.size != model.size:
        raise DimensionError(
            f"geometry size {geometry.size} does not match subspace size {model.size}"
        )
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    composite = geometry.composite_steering_matrix(thetas) / np.sqrt(geometry.size)
    if model.signal_dim == 0:
        return np.ones(thetas.shape)
    coeff = np.einsum("is,ig->sg", model.signal_basis.conj(), composite)
    fit = np.einsum("sg,sg->g", coeff, coeff.conj()).real
    return np.maximum(1.0 - fit, 0.0)


def null_spectrum(
    model: SubspaceModel,
    geometry: FcmGeometry,
    grid: Union[int, np.ndarray, None] = None,
) -> SpectrumGrid:
    """Sample the pair's null spectrum on a DOA grid.

    Args:
        model: Subspace split of the (smoothed) FCM of this pair.
        geometry: Pair geometry; must match the model dimension.
        grid: Point count for a default uniform grid, an explicit strictly
            increasing grid, or None for the 4096-point default.
    """
    if grid is None:
        thetas = default_grid()
    elif np.isscalar(grid):
        thetas = default_grid(int(grid))
    else:
        thetas = np.asarray(grid, dtype=float)
    values = evaluate_null(model, geometry, thetas)
    return SpectrumGrid(thetas=thetas, null_values={geometry.pair_label.lower(): values})


def combined_null_spectrum(*spectra: SpectrumGrid) -> SpectrumGrid:
    """Pointwise sum of the pairs' null spectra over one common grid.

    A true DOA is a null of every pair, so it survives; false peaks of
    different pairs sit at different directions, so their reciprocal heights
    collapse in the sum.
    """
    if len(spectra) < 2:
        raise ConfigurationError("combining needs at least two spectra")
    ref = spectra[0].thetas
    merged: Dict[str, np.ndarray] = {}
    total = np.zeros_like(ref)
    for spec in spectra:
        if spec.thetas.shape != ref.shape or not np.array_equal(spec.thetas, ref):
            raise DimensionError("spectra must share an identical grid")
        total = total + spec.primary
        for key, vals in spec.null_values.items():
            if key in merged:
                raise ConfigurationError(f"duplicate coarray pair {key!r} in combination")
            merged[key] = vals
    return SpectrumGrid(thetas=ref, null_values=merged, combined=total)


@dataclass
class DoaEstimate:
    """One pseudo-spectrum peak."""

    theta: float
    pseudo_height: float
    refined: bool

    def __post_init__(self):
        if not self.pseudo_height > 0:
            raise ConfigurationError("pseudo_height must be positive")


def find_peaks(
    spectrum: SpectrumGrid,
    expected_count: Optional[int] = None,
    floor: float = PSEUDO_FLOOR,
) -> List[DoaEstimate]:
    """Locate pseudo-spectrum maxima, refined by parabolic interpolation.

    Interior grid points strictly exceeding both neighbors count as peaks;
    each is refined with a three-point parabola on the log pseudo-spectrum.
    With ``expected_count`` given, only the tallest that many survive.
    Results are sorted by DOA.
    """
    log_pseudo = np.log(spectrum.pseudo(floor))
    thetas = spectrum.thetas
    n = thetas.size

    peaks: List[DoaEstimate] = []
    for i in range(1, n - 1):
        if not (log_pseudo[i] > log_pseudo[i - 1] and log_pseudo[i] > log_pseudo[i + 1]):
            continue
        left, mid, right = log_pseudo[i - 1], log_pseudo[i], log_pseudo[i + 1]
        curvature = left - 2.0 * mid + right
        if curvature < 0:
            offset = 0.5 * (left - right) / curvature
            step = thetas[min(i + 1, n - 1)] - thetas[i]
            theta = float(thetas[i] + offset * step)
            height = float(np.exp(mid - 0.25 * (left - right) * offset))
            refined = True
        else:
            theta = float(thetas[i])
            height = float(np.exp(mid))
            refined = False
        peaks.append(DoaEstimate(theta=theta, pseudo_height=height, refined=refined))

    peaks.sort(key=lambda p: -p.pseudo_height)
    if expected_count is not None:
        peaks = peaks[:expected_count]
    peaks.sort(key=lambda p: p.theta)
    return peaks
