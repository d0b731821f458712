"""Fourth-order cumulant matrices (FCMs) of coprime array measurements.

The FCM of a coarray pair is built from the stacked signal
``z(t) = y_a(t) kron conj(y_b(t))`` as

    fcm = E[z z^H] - E[z] E[z]^H - E[y_a y_a^H] kron conj(E[y_b y_b^H])

which cancels every Gaussian contribution, so additive Gaussian noise of any
spatial color leaves the matrix unchanged in expectation.  Rows and columns
are indexed Kronecker-style: sensor pair ``(i_a, i_b)`` maps to
``i_a * rows_b + i_b``.  All estimators Hermitian-symmetrize their outputs.

Moment accumulation is single-pass over snapshots in fixed-size chunks with a
deterministic reduction order, and deliberately avoids BLAS so results are
bit-reproducible regardless of threading configuration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .exceptions import DimensionError
from .geometry import (
    SparseArray,
    SubarraySpec,
    partial_steering_matrix,
)
from .simulation import Scenario, SignalGroup, resolve_coeffs

#: relative eigenvalue threshold that realizes "exact rank" numerically
RANK_REL_TOL = 1e-8

_CHUNK = 256


def hermitian_part(matrix: np.ndarray) -> np.ndarray:
    """Project onto the Hermitian part, ``(X + X^H) / 2``."""
    return 0.5 * (matrix + matrix.conj().T)


@dataclass(frozen=True)
class FcmGeometry:
    """The (sub)array pair whose sensor pairs index an FCM's rows/columns."""

    array_a: SparseArray
    array_b: SparseArray
    sub_a: SubarraySpec
    sub_b: SubarraySpec

    def __post_init__(self):
        self.sub_a.validate_for(self.array_a)
        self.sub_b.validate_for(self.array_b)

    @classmethod
    def full(cls, array_a: SparseArray, array_b: SparseArray) -> "FcmGeometry":
        return cls(array_a, array_b, SubarraySpec.whole(array_a), SubarraySpec.whole(array_b))

    @property
    def rows_a(self) -> int:
        return self.sub_a.size

    @property
    def rows_b(self) -> int:
        return self.sub_b.size

    @property
    def size(self) -> int:
        return self.rows_a * self.rows_b

    @property
    def pair_label(self) -> str:
        return f"{self.array_a.label}{self.array_b.label}"

    def index(self, i_a: int, i_b: int) -> int:
        return i_a * self.rows_b + i_b

    def composite_steering_matrix(self, thetas) -> np.ndarray:
        """Columns ``a_sub(theta) kron conj(b_sub(theta))``, shape ``(size, n)``."""
        sa = partial_steering_matrix(self.array_a, self.sub_a, thetas)
        sb = partial_steering_matrix(self.array_b, self.sub_b, thetas)
        n = sa.shape[1]
        return (sa[:, None, :] * sb.conj()[None, :, :]).reshape(self.size, n)

    def composite_steering_vector(self, theta: float) -> np.ndarray:
        return self.composite_steering_matrix([theta])[:, 0]


@dataclass
class MomentSet:
    """Second- and fourth-order sample moments of one coarray pair."""

    gamma4_z: np.ndarray
    gamma2_a: np.ndarray
    gamma2_b: np.ndarray
    mu2_z: np.ndarray
    sample_count: int
    geometry: Optional[FcmGeometry] = None


@dataclass
class Fcm:
    """Hermitian fourth-order cumulant matrix tagged with its pair geometry."""

    matrix: np.ndarray
    geometry: FcmGeometry

    def __post_init__(self):
        n = self.geometry.size
        if self.matrix.shape != (n, n):
            raise DimensionError(
                f"FCM shape {self.matrix.shape} does not match geometry size {n}"
            )
        scale = max(float(np.abs(self.matrix).max()), 1e-300)
        asym = float(np.abs(self.matrix - self.matrix.conj().T).max())
        if asym > 1e-10 * scale:
            raise DimensionError("FCM is not Hermitian within 1e-10 relative")

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def empirical_moments(
    snap_a: np.ndarray,
    snap_b: np.ndarray,
    geometry: Optional[FcmGeometry] = None,
    chunk_size: int = _CHUNK,
) -> MomentSet:
    """Accumulate all four moment statistics from synchronized snapshots.

    Args:
        snap_a: Array-A measurements, shape ``(rows_a, T)``.
        snap_b: Array-B measurements, shape ``(rows_b, T)``; same ``T``.
        geometry: Optional pair geometry carried through to the FCM.

    Returns:
        Sample means of ``z z^H``, ``y y^H`` and ``z`` with the Hermitian
        matrices symmetrized, where ``z(t) = y_a(t) kron conj(y_b(t))``.
    """
    snap_a = np.asarray(snap_a, dtype=complex)
    snap_b = np.asarray(snap_b, dtype=complex)
    if snap_a.ndim != 2 or snap_b.ndim != 2:
        raise DimensionError("snapshots must be 2-D (sensors x time)")
    if snap_a.shape[1] != snap_b.shape[1]:
        raise DimensionError(
            f"snapshot counts differ: {snap_a.shape[1]} vs {snap_b.shape[1]}"
        )
    la, num_t = snap_a.shape
    lb = snap_b.shape[0]
    if geometry is not None and (geometry.rows_a != la or geometry.rows_b != lb):
        raise DimensionError("geometry does not match snapshot dimensions")

    dim = la * lb
    g4 = np.zeros((dim, dim), dtype=complex)
    g2a = np.zeros((la, la), dtype=complex)
    g2b = np.zeros((lb, lb), dtype=complex)
    mu = np.zeros(dim, dtype=complex)

    for start in range(0, num_t, chunk_size):
        ya = snap_a[:, start : start + chunk_size]
        yb = snap_b[:, start : start + chunk_size]
        z = (ya[:, None, :] * yb.conj()[None, :, :]).reshape(dim, -1)
        zc = z.conj()
        g4 += np.einsum("it,jt->ij", z, zc)
        g2a += np.einsum("it,jt->ij", ya, ya.conj())
        g2b += np.einsum("it,jt->ij", yb, yb.conj())
        mu += z.sum(axis=1)

    g4 /= num_t
    g2a /= num_t
    g2b /= num_t
    mu /= num_t
    return MomentSet(
        gamma4_z=hermitian_part(g4),
        gamma2_a=hermitian_part(g2a),
        gamma2_b=hermitian_part(g2b),
        mu2_z=mu,
        sample_count=num_t,
        geometry=geometry,
    )


def estimate_fcm(moments: MomentSet) -> Fcm:
    """Combine the moments into the empirical FCM and symmetrize."""
    dim = moments.mu2_z.shape[0]
    la = moments.gamma2_a.shape[0]
    lb = moments.gamma2_b.shape[0]
    if moments.gamma4_z.shape != (dim, dim) or la * lb != dim:
        raise DimensionError("moment dimensions are inconsistent")
    matrix = (
        moments.gamma4_z
        - np.outer(moments.mu2_z, moments.mu2_z.conj())
        - np.kron(moments.gamma2_a, moments.gamma2_b.conj())
    )
    geometry = moments.geometry
    if geometry is None:
        geometry = _anonymous_geometry(la, lb)
    return Fcm(matrix=hermitian_part(matrix), geometry=geometry)


def _anonymous_geometry(rows_a: int, rows_b: int) -> FcmGeometry:
    """Placeholder geometry when only matrix dimensions are known."""
    return FcmGeometry(
        SparseArray(1, max(rows_a, 2), "a?"),
        SparseArray(1, max(rows_b, 2), "b?"),
        SubarraySpec(0, rows_a),
        SubarraySpec(0, rows_b),
    )


def source_kurtosis(kind) -> float:
    """Fourth-order cumulant ``E|s|^4 - 2 (E|s|^2)^2`` of a source amplitude.

    Constant-modulus constellations give ``-power^2``; circular Gaussian
    amplitudes give exactly zero.
    """
    if kind.family in ("qpsk", "qam4"):
        return -float(kind.power) ** 2
    return 0.0


def amplitude_fcm(group: SignalGroup) -> np.ndarray:
    """Rank-one FCM of a coherent group's amplitude vector.

    Returns ``kurtosis * (eta kron conj(eta)) (eta kron conj(eta))^H`` of
    shape ``(Q^2, Q^2)``; the scalar case reduces to the source kurtosis.
    """
    if group.coeffs is None:
        raise DimensionError("amplitude_fcm needs concrete coefficients")
    eta = np.asarray(group.coeffs, dtype=complex)
    u = np.kron(eta, eta.conj())
    return source_kurtosis(group.source) * np.outer(u, u.conj())


def theoretical_fcm(
    scenario: Scenario,
    array_a: SparseArray,
    array_b: SparseArray,
    sub_a: Optional[SubarraySpec] = None,
    sub_b: Optional[SubarraySpec] = None,
) -> Fcm:
    """Exact (infinite-snapshot) FCM of a scenario on one coarray pair.

    Sums the per-group contributions
    ``(A kron conj(B)) amplitude_fcm (A kron conj(B))^H`` over all groups,
    using the partial steering matrices of the requested subarrays (defaults
    to the whole arrays).  Unpinned coefficients are resolved from the
    scenario seed exactly as in synthesis.
    """
    sub_a = sub_a if sub_a is not None else SubarraySpec.whole(array_a)
    sub_b = sub_b if sub_b is not None else SubarraySpec.whole(array_b)
    geometry = FcmGeometry(array_a, array_b, sub_a, sub_b)
    coeffs = resolve_coeffs(scenario)
    out = np.zeros((geometry.size, geometry.size), dtype=complex)
    for group, eta in zip(scenario.groups, coeffs):
        concrete = SignalGroup(doas=group.doas, source=group.source, coeffs=tuple(eta))
        psi = amplitude_fcm(concrete)
        doas = np.asarray(group.doas)
        mat_a = partial_steering_matrix(array_a, sub_a, doas)
        mat_b = partial_steering_matrix(array_b, sub_b, doas)
        composite = np.kron(mat_a, mat_b.conj())
        out += composite @ psi @ composite.conj().T
    return Fcm(matrix=hermitian_part(out), geometry=geometry)


def numerical_rank(matrix: np.ndarray, rel_tol: float = RANK_REL_TOL) -> int:
    """Eigenvalue count above ``rel_tol`` times the largest magnitude."""
    eigs = np.abs(np.linalg.eigvalsh(hermitian_part(np.asarray(matrix, dtype=complex))))
    top = eigs.max(initial=0.0)
    if top == 0.0:
        return 0
    return int(np.count_nonzero(eigs > rel_tol * top))
