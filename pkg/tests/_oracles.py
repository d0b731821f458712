"""Independent oracles shared by the unit and acceptance tests.

Everything here is deliberately written without the library's Kronecker
shortcuts so it can serve as a ground truth for the production code paths.
"""

import numpy as np

from coprimedoa import wrap_angle


def brute_force_fcm(snap_a: np.ndarray, snap_b: np.ndarray) -> np.ndarray:
    """Element-wise fourth-order cumulant matrix via explicit quadruple loops.

    Entry ((i, j), (k, l)) is
    ``mean(ya_i yb_j* ya_k* yb_l) - mean(ya_i yb_j*) mean(ya_k yb_l*)^*
    - mean(ya_i ya_k*) mean(yb_j yb_l*)^*`` with the Kronecker row index
    ``i * L_b + j``.
    """
    la = snap_a.shape[0]
    lb = snap_b.shape[0]
    out = np.empty((la * lb, la * lb), dtype=complex)
    for i in range(la):
        for j in range(lb):
            for k in range(la):
                for l in range(lb):
                    m4 = np.mean(snap_a[i] * snap_b[j].conj() * snap_a[k].conj() * snap_b[l])
                    mu_ij = np.mean(snap_a[i] * snap_b[j].conj())
                    mu_kl = np.mean(snap_a[k] * snap_b[l].conj())
                    g2a = np.mean(snap_a[i] * snap_a[k].conj())
                    g2b = np.mean(snap_b[j] * snap_b[l].conj())
                    out[i * lb + j, k * lb + l] = m4 - mu_ij * mu_kl.conj() - g2a * g2b.conj()
    return out


def match_error(estimates, target: float) -> float:
    """Smallest wrapped distance between any estimate DOA and the target."""
    thetas = np.asarray([getattr(e, "theta", e) for e in estimates], dtype=float)
    if thetas.size == 0:
        return np.pi
    return float(np.min(np.abs(wrap_angle(thetas - target))))


def significant(estimates, spectrum, min_ratio: float = 4.0):
    """Peaks that rise at least ``min_ratio`` above the median pseudo level.

    Raw local maxima include every ripple bump of an empirical spectrum, so
    acceptance checks only count a peak once it clears the background by a
    visible margin (4x, i.e. 6 dB); true peaks clear it by 10 dB or more.
    """
    floor = min_ratio * float(np.median(spectrum.pseudo()))
    return [e for e in estimates if e.pseudo_height >= floor]


def recovered(estimates, spectrum, target: float, tol: float) -> bool:
    """True when a significant peak sits within ``tol`` of the target DOA."""
    return match_error(significant(estimates, spectrum), target) < tol
