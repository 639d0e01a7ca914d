"""Least-squares solvers for ``min_z ||V z - c||`` with tall dense V.

``lsqr`` is Golub-Kahan bidiagonalization (Paige and Saunders) on an
operator given by its forward and adjoint products.
``sketch_precond_lsqr`` right-preconditions with the R factor of a fresh
SRHT sketch of V, Blendenpik style. ``sketch_and_solve`` solves the
sketched problem exactly.
"""

from dataclasses import dataclass, field
import enum
import math
from typing import Optional

import numpy as np
import scipy.linalg

from .dense import condition_2norm, householder_qr, solve_upper_triangular
from .sketch import apply_sketch, build_srht

__all__ = [
    "LsqMode",
    "LsqConfig",
    "LsqReport",
    "lsqr",
    "lsqr_operator",
    "sketch_precond_lsqr",
    "sketch_and_solve",
    "solve_lsq",
]


class LsqMode(enum.Enum):
    Plain = "plain"
    SketchPrecond = "sketch-precond"
    SketchSolve = "sketch-solve"


@dataclass
class LsqConfig:
    tol: float = 1e-6
    max_iter: Optional[int] = None  # None -> 4 * cols(V)
    mode: LsqMode = LsqMode.Plain
    precond_sketch_rows: Optional[int] = None  # None -> 2 * cols(V)

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    def iteration_cap(self, ncols):
        return self.max_iter if self.max_iter is not None else max(1, 4 * ncols)


@dataclass
class LsqReport:
    y: np.ndarray
    iterations: int
    relative_residual_reduction: float
    converged: bool
    preconditioner_condition: Optional[float] = None
    residual_history: list = field(default_factory=list)


def _sym_ortho(a, b):
    """Givens rotation (c, s, r) with [c s; -s c] [a; b] = [r; 0]."""
    if b == 0.0:
        return (math.copysign(1.0, a) if a != 0 else 1.0), 0.0, abs(a)
    if a == 0.0:
        return 0.0, math.copysign(1.0, b), abs(b)
    if abs(b) > abs(a):
        tau = a / b
        s = math.copysign(1.0, b) / math.sqrt(1.0 + tau * tau)
        return s * tau, s, b / s
    tau = b / a
    c = math.copysign(1.0, a) / math.sqrt(1.0 + tau * tau)
    return c, c * tau, a / c


def lsqr_operator(matvec, rmatvec, ncols, c, tol=1e-6, max_iter=None):
    """LSQR on an abstract operator.

    Stops when ``||r|| <= tol * (||c|| + ||A|| ||x||)`` (compatible system)
    or ``||A^T r|| <= tol * ||A|| ||r||`` (least-squares optimality), with
    ``||A||`` the usual Frobenius-norm estimate from the bidiagonalization.

    Returns ``(x, iterations, residual_norm_history, converged)``.
    """
    c = np.asarray(c, dtype=np.float64)
    max_iter = max(1, 4 * ncols) if max_iter is None else max_iter
    x = np.zeros(ncols)
    beta = float(np.linalg.norm(c))
    if beta == 0.0:
        return x, 0, [0.0], True
    u = c / beta
    v = rmatvec(u)
    alpha = float(np.linalg.norm(v))
    if alpha == 0.0:
        # c is orthogonal to range(A): x = 0 is optimal
        return x, 0, [beta], True
    v = v / alpha
    w = v.copy()
    bnorm = beta
    phibar, rhobar = beta, alpha
    anorm = 0.0
    history = [beta]
    converged = False
    itn = 0
    while itn < max_iter:
        itn += 1
        u = matvec(v) - alpha * u
        beta = float(np.linalg.norm(u))
        if beta > 0.0:
            u = u / beta
            anorm = math.sqrt(anorm * anorm + alpha * alpha + beta * beta)
            v = rmatvec(u) - beta * v
            alpha = float(np.linalg.norm(v))
            if alpha > 0.0:
                v = v / alpha
        else:
            anorm = math.sqrt(anorm * anorm + alpha * alpha)
        cs, sn, rho = _sym_ortho(rhobar, beta)
        theta = sn * alpha
        rhobar = -cs * alpha
        phi = cs * phibar
        phibar = sn * phibar
        tau = sn * phi
        x = x + (phi / rho) * w
        w = v - (theta / rho) * w

        normr = abs(phibar)
        normar = alpha * abs(tau)
        history.append(normr)
        xnorm = float(np.linalg.norm(x))
        if normr <= tol * (bnorm + anorm * xnorm):
            converged = True
            break
        if anorm > 0.0 and normar <= tol * anorm * normr:
            converged = True
            break
        if alpha == 0.0:
            # the bidiagonalization terminated: exact LS solution reached
            converged = True
            break
    return x, itn, history, converged


def lsqr(V, c, cfg=None):
    """Plain LSQR on ``min ||V z - c||``."""
    cfg = LsqConfig() if cfg is None else cfg
    V = np.asarray(V, dtype=np.float64)
    if V.shape[0] < V.shape[1]:
        raise ValueError("V must have rows >= cols")
    x, itn, hist, conv = lsqr_operator(
        lambda z: V @ z,
        lambda r: V.T @ r,
        V.shape[1],
        c,
        cfg.tol,
        cfg.iteration_cap(V.shape[1]),
    )
    cnorm = hist[0] if hist[0] > 0 else 1.0
    return LsqReport(x, itn, hist[-1] / cnorm, conv, residual_history=hist)


def sketch_precond_lsqr(V, c, cfg=None, seed=0):
    """LSQR on ``V R^{-1}`` where ``Phi V = Q R`` for a fresh SRHT ``Phi``.

    Raises
    ------
    SingularTriangular
        ``Phi V`` is numerically rank deficient.
    """
    cfg = LsqConfig(mode=LsqMode.SketchPrecond) if cfg is None else cfg
    V = np.asarray(V, dtype=np.float64)
    nrows, ncols = V.shape
    if nrows < ncols:
        raise ValueError("V must have rows >= cols")
    s = cfg.precond_sketch_rows or 2 * ncols
    s = min(max(s, ncols), _pow2_ceiling(nrows))
    phi = build_srht(nrows, s, seed)
    _, R = householder_qr(apply_sketch(phi, V))
    solve_upper_triangular(R, np.zeros(ncols))  # singularity check

    def fwd(z):
        return V @ scipy.linalg.solve_triangular(R, z)

    def adj(r):
        return scipy.linalg.solve_triangular(R, V.T @ r, trans="T")

    z, itn, hist, conv = lsqr_operator(fwd, adj, ncols, c, cfg.tol, cfg.iteration_cap(ncols))
    y = solve_upper_triangular(R, z)
    cnorm = hist[0] if hist[0] > 0 else 1.0
    return LsqReport(
        y, itn, hist[-1] / cnorm, conv,
        preconditioner_condition=condition_2norm(R),
        residual_history=hist,
    )


def _pow2_ceiling(n):
    return 1 << max(0, int(n) - 1).bit_length()


def sketch_and_solve(V, c, theta):
    """``argmin_z ||Theta (V z - c)||`` via a QR of ``Theta V``."""
    V = np.asarray(V, dtype=np.float64)
    if theta.s < V.shape[1] + 1:
        raise ValueError("sketch needs at least cols(V) + 1 rows")
    Q, R = householder_qr(apply_sketch(theta, V))
    return solve_upper_triangular(R, Q.T @ apply_sketch(theta, c))


def solve_lsq(V, c, cfg, seed=0, theta=None):
    """Dispatch on ``cfg.mode``; always returns an :class:`LsqReport`."""
    if cfg.mode is LsqMode.Plain:
        return lsqr(V, c, cfg)
    if cfg.mode is LsqMode.SketchPrecond:
        return sketch_precond_lsqr(V, c, cfg, seed)
    y = sketch_and_solve(V, c, theta)
    res = np.linalg.norm(V @ y - c)
    cn = np.linalg.norm(c)
    return LsqReport(y, 0, res / cn if cn else 0.0, True)
