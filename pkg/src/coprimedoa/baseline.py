"""Second-order coarray MUSIC on the virtual difference array.

This is the conventional coprime-array estimator used for comparison: the
sensor-to-sensor cross-correlations between the two sparse arrays populate a
virtual uniform linear array at the difference lags, a smoothed correlation
matrix is built from overlapping windows of the lag vector, and MUSIC runs on
its noise subspace.  Coherent sources inject cross-terms that do not
correspond to any virtual-array sinusoid, so this estimator is expected to
fail on them; it is intentionally minimal.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np

from .exceptions import ConfigurationError, DimensionError
from .spectrum import SpectrumGrid, SubspaceModel, default_grid, subspace


@dataclass
class CoarrayLags:
    """Averaged cross-correlations on the virtual difference array.

    ``values[i]`` is the average of ``y_a(sensor p) * conj(y_b(sensor q))``
    over all sensor pairs with ``M*p - N*q == lags[i]`` and all snapshots;
    ``present[i]`` is False where no sensor pair contributes.
    """

    lags: np.ndarray
    values: np.ndarray
    present: np.ndarray


def coarray_correlations(
    snap_a: np.ndarray, snap_b: np.ndarray, spacing_a: int, spacing_b: int
) -> CoarrayLags:
    """Average sensor-pair correlations onto difference lags in [-M*N, M*N]."""
    if gcd(spacing_a, spacing_b) != 1:
        raise ConfigurationError(f"spacings {spacing_a} and {spacing_b} are not coprime")
    snap_a = np.asarray(snap_a, dtype=complex)
    snap_b = np.asarray(snap_b, dtype=complex)
    if snap_a.shape[1] != snap_b.shape[1]:
        raise DimensionError("snapshot counts differ between arrays")
    num_t = snap_a.shape[1]
    cross = snap_a @ snap_b.conj().T / num_t

    max_lag = spacing_a * spacing_b
    lags = np.arange(-max_lag, max_lag + 1)
    sums = np.zeros(lags.size, dtype=complex)
    counts = np.zeros(lags.size, dtype=int)
    for p in range(snap_a.shape[0]):
        for q in range(snap_b.shape[0]):
            lag = spacing_a * p - spacing_b * q
            if -max_lag <= lag <= max_lag:
                sums[lag + max_lag] += cross[p, q]
                counts[lag + max_lag] += 1
    present = counts > 0
    values = np.zeros(lags.size, dtype=complex)
    values[present] = sums[present] / counts[present]
    return CoarrayLags(lags=lags, values=values, present=present)


def _longest_present_run(present: np.ndarray) -> slice:
    best_start, best_len = 0, 0
    start = None
    for i, flag in enumerate(present):
        if flag and start is None:
            start = i
        if (not flag or i == present.size - 1) and start is not None:
            end = i + 1 if flag else i
            if end - start > best_len:
                best_start, best_len = start, end - start
            start = None
    return slice(best_start, best_start + best_len)


def smoothed_lag_matrix(lags: CoarrayLags, window: int) -> np.ndarray:
    """Averaged outer products of length-``window`` slides over the lag vector."""
    run = _longest_present_run(lags.present)
    run_len = run.stop - run.start
    if run_len < window:
        holes = lags.lags[~lags.present].tolist()
        raise ConfigurationError(
            f"need {window} contiguous lags but the longest run has {run_len}; "
            f"missing lags: {holes}"
        )
    seq = lags.values[run]
    count = run_len - window + 1
    windows = np.stack([seq[i : i + window] for i in range(count)], axis=1)
    smoothed = windows @ windows.conj().T / count
    return 0.5 * (smoothed + smoothed.conj().T)


def virtual_ula_music(
    lags: CoarrayLags, num_signals: int, grid=None
) -> SpectrumGrid:
    """MUSIC null spectrum from the smoothed virtual-ULA correlation matrix.

    The window length is ``M*N + 1`` (the guaranteed one-sided contiguous lag
    range of a coprime pair), so up to ``M*N`` sources are resolvable.

    Raises:
        ConfigurationError: when the contiguous lag range is too short; the
            message lists the missing lags.
    """
    max_lag = int(lags.lags.max())
    window = max_lag + 1
    smoothed = smoothed_lag_matrix(lags, window)
    model: SubspaceModel = subspace(smoothed, signal_dim=num_signals)

    thetas = default_grid() if grid is None else (
        default_grid(int(grid)) if np.isscalar(grid) else np.asarray(grid, dtype=float)
    )
    steering = np.exp(1j * np.outer(np.arange(window), thetas)) / np.sqrt(window)
    coeff = np.einsum("is,ig->sg", model.signal_basis.conj(), steering)
    fit = np.einsum("sg,sg->g", coeff, coeff.conj()).real
    values = np.maximum(1.0 - fit, 0.0)
    return SpectrumGrid(thetas=thetas, null_values={"baseline": values})
