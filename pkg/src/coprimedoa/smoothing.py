"""Generalized spatial smoothing of fourth-order cumulant matrices.

Both sparse arrays of a coarray pair are uniform, so each can be divided into
overlapping subarrays of fixed size; every (offset_a, offset_b) choice yields
a similar sub-coarray pair whose FCM is a principal submatrix of the full
FCM.  Summing all those submatrices restores the subspace rank that coherent
groups collapse, at the price of a smaller effective aperture.  The sum is
plain (no averaging): scale does not affect subspaces.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np

from .exceptions import ConfigurationError, DimensionError
from .cumulants import Fcm, FcmGeometry, amplitude_fcm, hermitian_part, source_kurtosis
from .geometry import SubarraySpec
from .simulation import SignalGroup


def submatrix_indices(u: int, v: int, size_a: int, size_b: int, cols_b: int) -> np.ndarray:
    """Flattened Kronecker indices of sensor pairs ``{u..u+size_a-1} x {v..v+size_b-1}``.

    ``cols_b`` is the second array's full sensor count, i.e. the stride of the
    first index in the flattened ordering.
    """
    if u < 0 or v < 0:
        raise ConfigurationError(f"subarray offsets must be >= 0, got ({u}, {v})")
    if v + size_b > cols_b:
        raise ConfigurationError(
            f"columns [{v}, {v + size_b}) exceed second-array size {cols_b}"
        )
    rows = (u + np.arange(size_a))[:, None] * cols_b + (v + np.arange(size_b))[None, :]
    return rows.reshape(-1)


def smooth_fcm(fcm: Fcm, size_a: int, size_b: int) -> Fcm:
    """Sum the FCMs of all similar sub-coarray pairs of sizes ``(size_a, size_b)``.

    Each term is the principal submatrix of ``fcm`` picked out by
    :func:`submatrix_indices`; offsets run over every placement of the
    subarrays inside the parent arrays.  The output geometry is the
    (0, 0) sub-coarray of the input.
    """
    geo = fcm.geometry
    la, lb = geo.rows_a, geo.rows_b
    if not (1 <= size_a <= la):
        raise DimensionError(f"size_a must be in [1, {la}], got {size_a}")
    if not (1 <= size_b <= lb):
        raise DimensionError(f"size_b must be in [1, {lb}], got {size_b}")

    out = np.zeros((size_a * size_b, size_a * size_b), dtype=complex)
    for u in range(la - size_a + 1):
        for v in range(lb - size_b + 1):
            idx = submatrix_indices(u, v, size_a, size_b, lb)
            out += fcm.matrix[np.ix_(idx, idx)]

    smoothed_geo = FcmGeometry(
        geo.array_a,
        geo.array_b,
        SubarraySpec(geo.sub_a.start, size_a),
        SubarraySpec(geo.sub_b.start, size_b),
    )
    return Fcm(matrix=hermitian_part(out), geometry=smoothed_geo)


def smoothing_term_count(fcm_or_geo, size_a: int, size_b: int) -> int:
    """Number of sub-coarray placements summed by :func:`smooth_fcm`."""
    geo = fcm_or_geo.geometry if isinstance(fcm_or_geo, Fcm) else fcm_or_geo
    return (geo.rows_a - size_a + 1) * (geo.rows_b - size_b + 1)


def smoothed_amplitude_fcm(
    group: SignalGroup,
    spacings: Tuple[int, int],
    counts: Tuple[int, int],
    sizes: Tuple[int, int],
) -> np.ndarray:
    """Smoothed amplitude FCM of one group, computed two independent ways.

    Path one rotates the rank-one amplitude FCM by the diagonal subarray
    phase shifts and sums over all offsets.  Path two forms the Gram matrix
    ``kurtosis * W W^H`` where ``W = W_a kron conj(W_b)`` collects the rotated
    coefficient vectors (a diagonal-times-Vandermonde factorization).  Both
    paths are evaluated and asserted equal before returning.

    Args:
        group: Signal group with concrete coefficients.
        spacings: Sparse array spacings ``(M, N)`` of the pair.
        counts: Full sensor counts ``(L_a, L_b)``.
        sizes: Subarray sizes ``(K_a, K_b)``.

    Returns:
        The ``(Q^2, Q^2)`` smoothed amplitude FCM.
    """
    if group.coeffs is None:
        raise DimensionError("smoothed_amplitude_fcm needs concrete coefficients")
    m_sp, n_sp = spacings
    la, lb = counts
    ka, kb = sizes
    if not (1 <= ka <= la and 1 <= kb <= lb):
        raise DimensionError("subarray sizes must fit inside the arrays")

    doas = np.asarray(group.doas)
    eta = np.asarray(group.coeffs, dtype=complex)
    psi = amplitude_fcm(group)
    omega_a = np.exp(1j * m_sp * doas)
    omega_b = np.exp(1j * n_sp * doas)

    # path one: double sum of rotated amplitude FCMs
    q2 = group.size**2
    summed = np.zeros((q2, q2), dtype=complex)
    for u in range(la - ka + 1):
        for v in range(lb - kb + 1):
            d = np.kron(omega_a**u, omega_b.conj() ** v)
            summed += (d[:, None] * psi) * d.conj()[None, :]

    # path two: Gram form with diagonal-times-Vandermonde factors
    offsets_a = np.arange(la - ka + 1)
    offsets_b = np.arange(lb - kb + 1)
    w_a = eta[:, None] * np.power.outer(omega_a, offsets_a)
    w_b = eta[:, None] * np.power.outer(omega_b, offsets_b)
    w = np.kron(w_a, w_b.conj())
    gram = source_kurtosis(group.source) * (w @ w.conj().T)

    scale = max(np.abs(summed).max(), np.abs(gram).max(), 1e-300)
    if np.abs(summed - gram).max() > 1e-10 * scale:
        raise AssertionError(
            "smoothed amplitude FCM: rotation-sum and Gram paths disagree"
        )
    return summed
