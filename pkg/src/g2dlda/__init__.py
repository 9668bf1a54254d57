"""Generalized Lp-norm two-dimensional LDA with regularization.

Fits orthonormal left projections W for matrix samples X (features W^T X) by
minimizing the ratio of within-class to between-class Lp scatter, plus a
sigma * ||W||_p^p penalty, one direction at a time.
"""
from ._kernels import BACKEND
from .baselines import ScatterPair, SingularScatterError, fit_2dlda, scatter_matrices
from .classify import ProjectedSample, accuracy, accuracy_sweep, nn_classify, project
from .data import (
    ClassStats,
    Dataset,
    DatasetError,
    MatrixSample,
    NoiseSpec,
    class_statistics,
    inject_black_block,
    inject_gaussian_rect,
    inject_salt_pepper,
    load_dataset,
    read_pgm,
    save_dataset,
    write_pgm,
)
from .lp import LpParams, build_H, build_h, lp_norm_matrix, objective_j0
from .modelio import load_model, save_model
from .solver import (
    NoDiscriminantDirection,
    ProjectionModel,
    SolverConfig,
    SolverError,
    SolverTrace,
    fit,
    fit_stats,
    null_space_basis,
    solve_direction,
)

__version__ = "0.1.0"
