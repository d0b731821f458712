"""DOA estimation of coherent signals on coprime arrays via fourth-order cumulants.

The pipeline: simulate (or ingest) snapshots on a pair of coprime sparse
arrays, estimate the fourth-order cumulant matrix of the Kronecker-stacked
signal, restore the coherent-group subspace rank by generalized spatial
smoothing over all similar sub-coarray pairs, run 4-MUSIC on the noise
subspace, and optionally remove grating-lobe false peaks by combining the
null spectra of three pairwise-coprime arrays.
"""

from .exceptions import ConfigurationError, DimensionError, VanishingGroupError
from .geometry import (
    CoarrayPair,
    SparseArray,
    SubarraySpec,
    ambiguity_classes,
    ambiguity_set,
    default_overlap_tol,
    false_peak_candidates,
    normalize_doa,
    partial_steering_matrix,
    partial_steering_vector,
    predict_false_peak,
    steering_matrix,
    steering_vector,
    wrap_angle,
)
from .simulation import (
    Scenario,
    SignalGroup,
    SnapshotSet,
    SourceKind,
    check_nonvanishing,
    generate_source,
    resolve_coeffs,
    synthesize,
)
from .cumulants import (
    Fcm,
    FcmGeometry,
    MomentSet,
    amplitude_fcm,
    empirical_moments,
    estimate_fcm,
    hermitian_part,
    numerical_rank,
    source_kurtosis,
    theoretical_fcm,
)
from .smoothing import smooth_fcm, smoothed_amplitude_fcm, smoothing_term_count, submatrix_indices
from .spectrum import (
    DoaEstimate,
    SpectrumGrid,
    SubspaceModel,
    combined_null_spectrum,
    default_grid,
    eigengap_signal_dim,
    evaluate_null,
    find_peaks,
    null_spectrum,
    scenario_signal_dim,
    subspace,
)
from .baseline import CoarrayLags, coarray_correlations, virtual_ula_music

__version__ = "0.1.0"
