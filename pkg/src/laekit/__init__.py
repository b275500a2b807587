"""Regularized linear autoencoders: losses, critical manifolds, Morse data,
training, and PCA recovery."""

from .data import DataMatrix, load_idx, mean_center, optimal_bias, synthetic
from .grassmann import (
    BoundaryParityReport,
    MorseCell,
    boundary_parity,
    enumerate_cells,
    loss_on_plane,
    morse_index,
)
from .landscape import (
    CriticalSpec,
    CurvatureSignature,
    critical_point,
    curvature_signature,
    global_minimum,
    m0,
    numerical_hessian,
    ppca_from_decoder,
    prop1_critical,
)
from .model import (
    KINDS,
    LaeParams,
    LossSpec,
    ScalarMinima,
    cae_tied_loss,
    dae_expected_loss,
    grad,
    loss,
    scalar_minima,
)
from .spectra import SpectralDecomposition, haar_orthogonal, pinv, svd, sym_inv_sqrt
from .training import (
    PcaRecovery,
    TrainConfig,
    TrainTrace,
    als_solve,
    gd_step,
    recover_pca,
    tied_step,
    train,
)
from .verify import (
    AlignmentReport,
    ShrinkageReport,
    UnitCircleReport,
    alignment_report,
    fd_grad,
    hessian_signature,
    principal_angles,
    shrinkage_points,
    unit_circle_check,
)

__version__ = "0.1.0"

__all__ = [
    "DataMatrix", "load_idx", "mean_center", "optimal_bias", "synthetic",
    "BoundaryParityReport", "MorseCell", "boundary_parity", "enumerate_cells",
    "loss_on_plane", "morse_index",
    "CriticalSpec", "CurvatureSignature", "critical_point", "curvature_signature",
    "global_minimum", "m0", "numerical_hessian", "ppca_from_decoder", "prop1_critical",
    "KINDS", "LaeParams", "LossSpec", "ScalarMinima", "cae_tied_loss",
    "dae_expected_loss", "grad", "loss", "scalar_minima",
    "SpectralDecomposition", "haar_orthogonal", "pinv", "svd", "sym_inv_sqrt",
    "PcaRecovery", "TrainConfig", "TrainTrace", "als_solve", "gd_step",
    "recover_pca", "tied_step", "train",
    "AlignmentReport", "ShrinkageReport", "UnitCircleReport", "alignment_report",
    "fd_grad", "hessian_signature", "principal_angles", "shrinkage_points",
    "unit_circle_check",
]
