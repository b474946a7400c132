"""Retinal vessel segmentation with 2-D Morlet wavelet features.

Thin Python layer over the C++ core: feature extraction, GMM/LMSE pixel
classifiers and ROC evaluation.
"""

from ._vesselwave import (  # noqa: F401
    GmmModel,
    LmseModel,
    VesselwaveError,
    __version__,
    build_features,
    confusion,
    cwt_response,
    derive_mask,
    extend_border,
    fit_gmm,
    fit_lmse,
    fit_mixture,
    invert,
    load_channel,
    load_mask,
    max_modulus,
    morlet_kernel,
    roc,
    synthesize,
)
