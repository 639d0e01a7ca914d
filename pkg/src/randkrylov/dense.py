"""Dense kernels for the small (m-scale) matrices.

Dense matrices and vectors are plain float64 numpy arrays. QR and the
triangular solves are delegated to LAPACK through numpy/scipy; this module
only fixes conventions (sign of R, singularity detection, rank cut-off).
"""

import numpy as np
import scipy.linalg

from .errors import SingularTriangular

__all__ = ["householder_qr", "solve_upper_triangular", "condition_2norm"]

_EPS = np.finfo(np.float64).eps


def householder_qr(M):
    """Thin Householder QR with a nonnegative diagonal in R.

    Parameters
    ----------
    M : (rows, cols) array_like, rows >= cols

    Returns
    -------
    Q : (rows, cols) ndarray with orthonormal columns
    R : (cols, cols) upper triangular ndarray, ``diag(R) >= 0``
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] < M.shape[1]:
        raise ValueError(f"householder_qr needs rows >= cols, got shape {M.shape}")
    Q, R = np.linalg.qr(M, mode="reduced")
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    Q *= signs
    R *= signs[:, None]
    return Q, R


def _check_triangular(R, rel_tol):
    d = np.abs(np.diag(R))
    dmax = d.max() if d.size else 0.0
    if dmax == 0.0:
        raise SingularTriangular(0, 0.0)
    ratios = d / dmax
    bad = np.flatnonzero(ratios < rel_tol)
    if bad.size:
        raise SingularTriangular(int(bad[0]), float(ratios[bad[0]]))


def solve_upper_triangular(R, B, side="left", rel_tol=1e-14):
    """Solve ``R X = B`` (``side="left"``) or ``X R = B`` (``side="right"``).

    Raises
    ------
    SingularTriangular
        If some ``|r_jj| < rel_tol * max_j |r_jj|``.
    """
    R = np.asarray(R, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    _check_triangular(R, rel_tol)
    if side == "left":
        return scipy.linalg.solve_triangular(R, B, lower=False, check_finite=False)
    if side == "right":
        # X R = B  <=>  R^T X^T = B^T
        Xt = scipy.linalg.solve_triangular(R, B.T, lower=False, trans="T", check_finite=False)
        return Xt.T
    raise ValueError(f"side must be 'left' or 'right', not {side!r}")


def condition_2norm(M):
    """Exact 2-norm condition number from the singular values.

    A matrix whose smallest singular value is below
    ``max(rows, cols) * eps * sigma_max`` is reported as ``inf``.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 1:
        M = M[:, None]
    sv = np.linalg.svd(M, compute_uv=False)
    smax, smin = sv[0], sv[-1]
    if smax == 0.0:
        return np.inf
    if smin <= max(M.shape) * _EPS * smax:
        return np.inf
    return float(smax / smin)
