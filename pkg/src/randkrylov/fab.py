"""Krylov approximations of f(A) b.

=================  ==========================================================
``ArnoldiFom``     ``||b|| U_m f(K_m) e_1`` with an orthonormal Arnoldi basis
``Alg3``           sketched Gram-Schmidt basis, compression completed with
                   ``y = argmin ||V_m z - v_{m+1}||`` by plain LSQR
``Alg4``           truncated basis (whitened when ill-conditioned), ``y`` by
                   sketch-preconditioned LSQR
``Alg5``           truncated basis, ``gamma_b V_m f(H_m) e_1`` (no least squares)
``Alg5Whitened``   as Alg5 on the whitened truncated basis
``Sfom``           sketched FOM on the (unwhitened) truncated basis
=================  ==========================================================

The completed compression is ``H_m + h_{m+1,m} y e_m^T``; it differs from
``H_m`` only in its last column.
"""

from dataclasses import dataclass, field
import enum
from typing import Optional

import numpy as np

from .counters import Counters, counting
from .dense import householder_qr, solve_upper_triangular
from .errors import Breakdown, NegativeRealEigenvalue
from .krylov import (
    arnoldi,
    sketched_gs_basis,
    truncated_basis,
    truncated_basis_with_whitening,
)
from .lsq import LsqConfig, LsqMode, lsqr, sketch_precond_lsqr
from .matfun import MatrixFunctionKind, Polynomial, eval_matfun
from .sketch import apply_sketch, build_srht

__all__ = [
    "FabMethod",
    "FabResult",
    "MethodConfig",
    "SquaredOperator",
    "fom_arnoldi",
    "fab_alg3",
    "fab_alg4",
    "fab_alg5",
    "fab_sfom",
    "fab_sign",
    "run_method",
    "sketch_rows",
]


class FabMethod(enum.Enum):
    ArnoldiFom = "ArnoldiFom"
    Alg3 = "Alg3"
    Alg4 = "Alg4"
    Alg5 = "Alg5"
    Alg5Whitened = "Alg5Whitened"
    Sfom = "Sfom"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        for method in cls:
            if method.value.lower() == key:
                return method
        raise ValueError(f"unknown method {name!r}")

    @property
    def uses_sketch(self):
        return self not in (FabMethod.ArnoldiFom, FabMethod.Alg5)


@dataclass
class FabResult:
    approx: np.ndarray
    method: FabMethod
    m: int
    whitened_at: Optional[int] = None
    cond_history: list = field(default_factory=list)
    cond_sketched_basis: float = float("nan")
    breakdown: bool = False
    lsq_report: object = None
    counters: Counters = field(default_factory=Counters)
    shift: float = 0.0


@dataclass
class MethodConfig:
    """Parameters shared by every driver in a sweep.

    ``sketch_rule`` is ``"2m"``, ``"1.05m"`` or ``"fixed:S"``; the sketch is
    never smaller than ``m + 1`` rows. ``sqrt_shift`` (if set) is added to the
    diagonal of the small matrix when its square root is undefined.
    ``sketch_reorth`` selects the stabilized sketched Gram-Schmidt step.
    """

    k: int = 2
    whitening_threshold: float = 1000.0
    sketch_rule: str = "2m"
    seed: int = 0
    lsq_tol: float = 1e-6
    lsq_max_iter: Optional[int] = None
    precond_sketch_rows: Optional[int] = None
    sqrt_shift: Optional[float] = None
    sketch_reorth: bool = False


class SquaredOperator:
    """``x -> A (A x)`` without forming ``A^2``; costs two matvecs."""

    def __init__(self, A):
        self.A = A
        self.n = A.n

    def matvec(self, x):
        return self.A.matvec(self.A.matvec(x))

    def norm1(self):
        return self.A.norm1() ** 2


def sketch_rows(rule, m, n):
    """Number of sketch rows for Krylov dimension ``m`` under ``rule``."""
    rule = str(rule).strip()
    if rule == "2m":
        s = 2 * m
    elif rule == "1.05m":
        s = int(np.floor(1.05 * m))
    elif rule.startswith("fixed:"):
        s = int(rule.split(":", 1)[1])
    else:
        raise ValueError(f"unknown sketch rule {rule!r}")
    s = max(s, m + 1)
    cap = 1 << max(0, int(n) - 1).bit_length()
    return min(s, cap)


def _cell_seeds(seed, m):
    basis, precond = np.random.SeedSequence([int(seed), int(m)]).spawn(2)
    return basis, precond


def _f_e1(kind, M, shift=None):
    """``f(M) e_1`` and the diagonal shift that was needed (0.0 if none)."""
    e1 = np.zeros(M.shape[0])
    e1[0] = 1.0
    try:
        return eval_matfun(kind, M, e1), 0.0
    except NegativeRealEigenvalue:
        if not shift:
            raise
        return eval_matfun(kind, M + shift * np.eye(M.shape[0]), e1), float(shift)


def _build(builder, *args, **kwargs):
    try:
        return builder(*args, **kwargs)
    except Breakdown as exc:
        if exc.decomposition is None:
            raise
        return exc.decomposition


def _completed_compression(dec, y):
    M = dec.H_m.copy()
    M[:, -1] += dec.h_next * y
    return M


def _result(method, dec, approx, counters, **kw):
    return FabResult(
        approx=approx,
        method=method,
        m=dec.m,
        whitened_at=dec.whitened_at,
        cond_history=list(dec.cond_history),
        cond_sketched_basis=dec.sketched_condition(),
        breakdown=dec.breakdown,
        counters=counters,
        **kw,
    )


def fom_arnoldi(A, b, m, kind, sqrt_shift=None):
    """Classical FOM approximation from the Arnoldi decomposition.

    A lucky breakdown shrinks m to the invariant subspace dimension, where
    the approximation is exact.
    """
    with counting(propagate=True) as cnt:
        dec = _build(arnoldi, A, b, m)
        fe1, shift = _f_e1(kind, dec.H_m, sqrt_shift)
        approx = dec.gamma_b * (dec.V_m @ fe1)
    return _result(FabMethod.ArnoldiFom, dec, approx, cnt, shift=shift)


def fab_alg3(A, b, m, kind, sketch, lsq_cfg=None, sqrt_shift=None, sketch_reorth=False):
    """Sketched Gram-Schmidt basis plus a plain LSQR solve for the last column."""
    lsq_cfg = LsqConfig() if lsq_cfg is None else lsq_cfg
    with counting(propagate=True) as cnt:
        dec = _build(sketched_gs_basis, A, b, m, sketch, reorth=sketch_reorth)
        report = None
        M = dec.H_m
        if dec.h_next != 0.0:
            report = lsqr(dec.V_m, dec.v_next, lsq_cfg)
            M = _completed_compression(dec, report.y)
        fe1, shift = _f_e1(kind, M, sqrt_shift)
        approx = dec.gamma_b * (dec.V_m @ fe1)
    return _result(FabMethod.Alg3, dec, approx, cnt, lsq_report=report, shift=shift)


def fab_alg4(A, b, m, kind, k, sketch, lsq_cfg=None, threshold=1000.0, seed=0,
             sqrt_shift=None, sketch_reorth=False):
    """Truncated basis with whitening, sketch-preconditioned LSQR for the last column.

    ``seed`` drives the preconditioner's sketch, which is independent of
    ``sketch`` (the basis sketch).
    """
    lsq_cfg = LsqConfig(mode=LsqMode.SketchPrecond) if lsq_cfg is None else lsq_cfg
    with counting(propagate=True) as cnt:
        dec = _build(truncated_basis_with_whitening, A, b, m, k, sketch, threshold,
                     reorth=sketch_reorth)
        report = None
        M = dec.H_m
        if dec.h_next != 0.0:
            report = sketch_precond_lsqr(dec.V_m, dec.v_next, lsq_cfg, seed)
            M = _completed_compression(dec, report.y)
        fe1, shift = _f_e1(kind, M, sqrt_shift)
        approx = dec.gamma_b * (dec.V_m @ fe1)
    return _result(FabMethod.Alg4, dec, approx, cnt, lsq_report=report, shift=shift)


def fab_alg5(A, b, m, kind, k=2, sketch=None, threshold=1000.0, sqrt_shift=None,
             sketch_reorth=False):
    """``gamma_b V_m f(H_m) e_1`` without a least-squares solve.

    Passing ``sketch`` selects the whitened variant.
    """
    with counting(propagate=True) as cnt:
        if sketch is None:
            dec = _build(truncated_basis, A, b, m, k)
            method = FabMethod.Alg5
        else:
            dec = _build(truncated_basis_with_whitening, A, b, m, k, sketch, threshold,
                         reorth=sketch_reorth)
            method = FabMethod.Alg5Whitened
        fe1, shift = _f_e1(kind, dec.H_m, sqrt_shift)
        approx = dec.gamma_b * (dec.V_m @ fe1)
    return _result(method, dec, approx, cnt, shift=shift)


def fab_sfom(A, b, m, kind, k, sketch, sqrt_shift=None):
    """Sketched FOM on the truncated basis.

    ``Theta A V_m`` comes for free as ``(Theta V_{m+1}) H_under``; with
    ``Theta V_m = S R`` the result is
    ``V_m R^{-1} f(S^T Theta A V_m R^{-1}) S^T Theta b``.

    Raises
    ------
    SingularTriangular
        R is numerically singular.
    """
    with counting(propagate=True) as cnt:
        dec = _build(truncated_basis_with_whitening, A, b, m, k, sketch, monitor=False)
        SV = dec.sketched_basis
        SAV = SV @ dec.H_under
        S, R = householder_qr(SV[:, : dec.m])
        M = solve_upper_triangular(R, S.T @ SAV, side="right")
        c = S.T @ (dec.gamma_b * SV[:, 0])
        try:
            inner = eval_matfun(kind, M, c)
            shift = 0.0
        except NegativeRealEigenvalue:
            if not sqrt_shift:
                raise
            shift = float(sqrt_shift)
            inner = eval_matfun(kind, M + shift * np.eye(dec.m), c)
        approx = dec.V_m @ solve_upper_triangular(R, inner)
    return _result(FabMethod.Sfom, dec, approx, cnt, shift=shift)


def run_method(method, A, b, m, kind, cfg=None):
    """Run one driver with sketches drawn from ``cfg.seed`` and ``m``."""
    method = FabMethod.parse(method)
    cfg = MethodConfig() if cfg is None else cfg
    if not isinstance(kind, Polynomial):
        kind = MatrixFunctionKind.parse(kind)
    basis_seed, precond_seed = _cell_seeds(cfg.seed, m)
    sketch = None
    if method.uses_sketch:
        sketch = build_srht(A.n, sketch_rows(cfg.sketch_rule, m, A.n), basis_seed)
    shift = cfg.sqrt_shift
    if method is FabMethod.ArnoldiFom:
        return fom_arnoldi(A, b, m, kind, shift)
    if method is FabMethod.Alg3:
        lcfg = LsqConfig(tol=cfg.lsq_tol, max_iter=cfg.lsq_max_iter)
        return fab_alg3(A, b, m, kind, sketch, lcfg, shift, cfg.sketch_reorth)
    if method is FabMethod.Alg4:
        lcfg = LsqConfig(
            tol=cfg.lsq_tol,
            max_iter=cfg.lsq_max_iter,
            mode=LsqMode.SketchPrecond,
            precond_sketch_rows=cfg.precond_sketch_rows,
        )
        return fab_alg4(A, b, m, kind, cfg.k, sketch, lcfg, cfg.whitening_threshold,
                        precond_seed, shift, cfg.sketch_reorth)
    if method is FabMethod.Alg5:
        return fab_alg5(A, b, m, kind, cfg.k, None, sqrt_shift=shift)
    if method is FabMethod.Alg5Whitened:
        return fab_alg5(A, b, m, kind, cfg.k, sketch, cfg.whitening_threshold, shift,
                        cfg.sketch_reorth)
    return fab_sfom(A, b, m, kind, cfg.k, sketch, shift)


def fab_sign(A, b, m, method="Alg4", cfg=None):
    """``sign(A) b = (A^2)^{-1/2} (A b)`` with the Krylov space of ``A^2`` and ``A b``.

    Uses ``2m + 1`` applications of A.
    """
    with counting(propagate=True) as cnt:
        c = A.matvec(np.asarray(b, dtype=np.float64))
        res = run_method(method, SquaredOperator(A), c, m, MatrixFunctionKind.InvSqrt, cfg)
    res.counters = cnt
    return res
