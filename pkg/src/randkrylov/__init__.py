"""Randomized Krylov methods for the action of a matrix function, f(A) b.

The package builds Krylov bases with truncated or sketched Gram-Schmidt
orthogonalization, restores conditioning with sketch-based whitening, and
completes the projected matrix with (sketch-preconditioned) least squares.
Dense kernels (Pade exponential, Schur square root), an SRHT sketch, LSQR,
test-problem generators and a sweep harness are included.
"""

from .counters import Counters, counting
from .dense import condition_2norm, householder_qr, solve_upper_triangular
from .errors import *  # noqa: F401,F403
from .fab import (
    FabMethod,
    FabResult,
    MethodConfig,
    fab_alg3,
    fab_alg4,
    fab_alg5,
    fab_sfom,
    fab_sign,
    fom_arnoldi,
    run_method,
    sketch_rows,
)
from .krylov import (
    ArnoldiLikeDecomposition,
    BasisBuildConfig,
    arnoldi,
    build_basis,
    sketched_gs_basis,
    truncated_basis,
    truncated_basis_with_whitening,
)
from .lsq import LsqConfig, LsqMode, LsqReport, lsqr, sketch_and_solve, sketch_precond_lsqr, solve_lsq
from .matfun import MatrixFunctionKind, Polynomial, eval_matfun, expm, inv_sqrtm, matfun, real_schur, sqrtm
from .problems import ProblemSpec, build_problem, gen_b, gen_convection_diffusion, gen_laplacian_3d
from .sketch import SketchOperator, apply_sketch, build_srht
from .sparse import SparseMatrix, graph_laplacian, read_matrix_market, write_matrix_market

__version__ = "0.1.0"
