"""Krylov basis construction.

All builders return an :class:`ArnoldiLikeDecomposition`
``A V_m = V_{m+1} H_under`` with ``V_m^+ b = gamma_b e_1``:

* :func:`arnoldi` -- modified Gram-Schmidt with one full reorthogonalization
  pass (orthonormal basis).
* :func:`sketched_gs_basis` -- Gram-Schmidt on a sketch of the basis; the
  same coefficients approximately orthogonalize the full vectors.
* :func:`truncated_basis` -- orthogonalize against the last ``k`` vectors only.
* :func:`truncated_basis_with_whitening` -- truncated orthogonalization while
  monitoring ``cond(Theta V_i)``; on the first exceedance the basis is
  whitened with the R factor of its sketch and the construction continues
  with sketched Gram-Schmidt.

Operators only need ``n``, ``matvec(x)`` and optionally ``norm1()``.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .counters import tally
from .dense import condition_2norm, householder_qr, solve_upper_triangular
from .errors import Breakdown, SketchBreakdown
from .sketch import apply_sketch

__all__ = [
    "ArnoldiLikeDecomposition",
    "BasisBuildConfig",
    "arnoldi",
    "sketched_gs_basis",
    "truncated_basis",
    "truncated_basis_with_whitening",
    "build_basis",
]


@dataclass
class ArnoldiLikeDecomposition:
    V: np.ndarray
    H_under: np.ndarray
    gamma_b: float
    method: str
    sketched_basis: Optional[np.ndarray] = None
    whitened_at: Optional[int] = None
    cond_history: list = field(default_factory=list)
    breakdown: bool = False

    @property
    def m(self):
        return self.H_under.shape[1]

    @property
    def V_m(self):
        return self.V[:, : self.m]

    @property
    def v_next(self):
        return self.V[:, self.m]

    @property
    def H_m(self):
        return self.H_under[: self.m, :]

    @property
    def h_next(self):
        """The subdiagonal entry ``h_{m+1,m}``."""
        return float(self.H_under[self.m, self.m - 1]) if self.m else 0.0

    def residual(self, A):
        """``||A V_m - V_{m+1} H_under||_F`` (uncounted matvecs when A is sparse)."""
        if hasattr(A, "to_scipy"):
            AV = A.to_scipy() @ self.V_m
        else:
            AV = np.column_stack([A.matvec(self.V[:, j]) for j in range(self.m)])
        return float(np.linalg.norm(AV - self.V @ self.H_under))

    def sketched_condition(self):
        """Condition number of the sketched basis (first m columns after a breakdown)."""
        if self.sketched_basis is None:
            return float("nan")
        S = self.sketched_basis[:, : self.m] if self.breakdown else self.sketched_basis
        return condition_2norm(S)


@dataclass
class BasisBuildConfig:
    m: int
    method: str = "Arnoldi"
    k: int = 2
    whitening_threshold: float = 1000.0
    sketch: object = None
    breakdown_tol: float = 1e-14
    sketch_reorth: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("truncation depth k must be >= 1")
        if not self.whitening_threshold > 1:
            raise ValueError("whitening threshold must exceed 1")
        if self.method not in ("Arnoldi", "SketchedGS", "Truncated"):
            raise ValueError(f"unknown basis method {self.method!r}")


_RANK_TOL = 1e-14


def _opnorm(A):
    f = getattr(A, "norm1", None)
    return f() if f is not None else 1.0


def _prepare(b, m):
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 1:
        raise ValueError("b must be a vector")
    if m < 1:
        raise ValueError("m must be >= 1")
    beta = float(np.linalg.norm(b))
    if beta == 0.0:
        raise ValueError("b must be nonzero")
    return b, beta


def _truncate(V, H, c, gamma_b, method, S=None, **extra):
    """Decomposition with c basis vectors after an invariant subspace was hit."""
    Vt = np.zeros((V.shape[0], c + 1), order="F")
    Vt[:, :c] = V[:, :c]
    Ht = np.zeros((c + 1, c))
    Ht[:c, :c] = H[:c, :c]
    St = None
    if S is not None:
        St = np.zeros((S.shape[0], c + 1), order="F")
        St[:, :c] = S[:, :c]
    return ArnoldiLikeDecomposition(Vt, Ht, gamma_b, method, St, breakdown=True, **extra)


def arnoldi(A, b, m, breakdown_tol=1e-14):
    """Arnoldi decomposition with an orthonormal basis.

    Raises
    ------
    Breakdown
        ``||w_i|| <= breakdown_tol * ||A||_1``; the exception carries the
        truncated (exact) decomposition.
    """
    b, beta = _prepare(b, m)
    n = b.size
    anorm = _opnorm(A)
    V = np.zeros((n, m + 1), order="F")
    H = np.zeros((m + 1, m))
    V[:, 0] = b / beta
    for c in range(1, m + 1):
        w = A.matvec(V[:, c - 1])
        for _ in range(2):
            for j in range(c):
                hj = V[:, j] @ w
                w -= hj * V[:, j]
                H[j, c - 1] += hj
        nrm = float(np.linalg.norm(w))
        tally(basis_flops=(2 * c + 1) * n)
        if nrm <= breakdown_tol * anorm:
            raise Breakdown(c + 1, _truncate(V, H, c, beta, "Arnoldi"))
        H[c, c - 1] = nrm
        V[:, c] = w / nrm
    return ArnoldiLikeDecomposition(V, H, beta, "Arnoldi")


def _sketch_orthogonalize(sketch, S, V, w, p, reorth=False):
    """One sketched Gram-Schmidt step against the orthonormal sketch ``S``.

    Returns ``(r, q, s)`` with ``q = w - V r`` and ``s`` the sketch of q.
    By default ``s = p - S r`` (a single pass, no second sketch). With
    ``reorth`` the sketch of q is recomputed and one correction pass is
    applied to both q and its sketch, which keeps the stored sketch
    consistent with the stored vectors over long runs.
    """
    r = S.T @ p
    q = w - V @ r
    if not reorth:
        return r, q, p - S @ r
    s = apply_sketch(sketch, q)
    r2 = S.T @ s
    q -= V @ r2
    s -= S @ r2
    return r + r2, q, s


def sketched_gs_basis(A, b, m, sketch, breakdown_tol=1e-14, reorth=False):
    """Basis by Gram-Schmidt on the sketch ``S = Theta V``.

    ``gamma_b`` is ``r_11 = ||Theta b||``; ``sketched_basis`` holds S, whose
    columns are orthonormal. ``reorth`` selects the stabilized step (see
    :func:`_sketch_orthogonalize`).

    Raises
    ------
    SketchBreakdown
        ``r_ii <= breakdown_tol * ||Theta w_i||``.
    """
    b, _ = _prepare(b, m)
    if sketch.s < m + 1:
        raise ValueError(f"sketch needs at least m+1 = {m + 1} rows, has {sketch.s}")
    n = b.size
    V = np.zeros((n, m + 1), order="F")
    S = np.zeros((sketch.s, m + 1), order="F")
    H = np.zeros((m + 1, m))
    p = apply_sketch(sketch, b)
    r11 = float(np.linalg.norm(p))
    if r11 == 0.0:
        raise SketchBreakdown(1, None)
    S[:, 0] = p / r11
    V[:, 0] = b / r11
    for c in range(1, m + 1):
        w = A.matvec(V[:, c - 1])
        p = apply_sketch(sketch, w)
        r, q, s = _sketch_orthogonalize(sketch, S[:, :c], V[:, :c], w, p, reorth)
        rcc = float(np.linalg.norm(s))
        H[:c, c - 1] = r
        if rcc <= breakdown_tol * float(np.linalg.norm(p)):
            raise SketchBreakdown(c + 1, _truncate(V, H, c, r11, "SketchedGS", S))
        S[:, c] = s / rcc
        V[:, c] = q / rcc
        tally(basis_flops=(2 if reorth else 1) * c * n)
        H[c, c - 1] = rcc
    return ArnoldiLikeDecomposition(V, H, r11, "SketchedGS", sketched_basis=S)


def truncated_basis(A, b, m, k=2, breakdown_tol=1e-14):
    """Basis by orthogonalizing each new vector against the last ``k`` only."""
    return truncated_basis_with_whitening(A, b, m, k, None, breakdown_tol=breakdown_tol)


def truncated_basis_with_whitening(
    A,
    b,
    m,
    k=2,
    sketch=None,
    threshold=1000.0,
    breakdown_tol=1e-14,
    monitor=True,
    force_whiten_at=None,
    reorth=False,
):
    """Truncated orthogonalization with one-shot whitening.

    With a ``sketch``, ``Theta V_i`` is kept alongside the basis. When
    ``monitor`` is set its condition number is checked after every new
    vector; the first time it exceeds ``threshold`` (or when the basis has
    ``force_whiten_at`` vectors) the basis is replaced by ``V_i R_i^{-1}``
    where ``Theta V_i = Q_i R_i``, ``H_under`` by ``R_i H_under R_{i-1}^{-1}``
    and ``gamma_b`` by ``gamma_b * R_i[0, 0]``. The remaining vectors are
    built by sketched Gram-Schmidt against ``Q_i`` (stabilized if ``reorth``).

    Without whitening the arithmetic is identical to :func:`truncated_basis`.

    Raises
    ------
    Breakdown
        The new vector vanished (invariant subspace).
    SingularTriangular
        ``R_i`` is numerically singular when whitening is attempted.
    """
    b, beta = _prepare(b, m)
    if k < 1:
        raise ValueError("k must be >= 1")
    if sketch is not None and sketch.s < m + 1:
        raise ValueError(f"sketch needs at least m+1 = {m + 1} rows, has {sketch.s}")
    n = b.size
    anorm = _opnorm(A)
    method = "Truncated"
    V = np.zeros((n, m + 1), order="F")
    H = np.zeros((m + 1, m))
    V[:, 0] = b / beta
    gamma = beta
    SV = None
    if sketch is not None:
        SV = np.zeros((sketch.s, m + 1), order="F")
        SV[:, 0] = apply_sketch(sketch, V[:, 0])
    whitened_at = None
    history = []

    for c in range(1, m + 1):
        w = A.matvec(V[:, c - 1])
        if whitened_at is None:
            lo = max(0, c - k)
            for j in range(lo, c):
                hj = V[:, j] @ w
                w -= hj * V[:, j]
                H[j, c - 1] = hj
            nrm = float(np.linalg.norm(w))
            tally(basis_flops=(c - lo + 1) * n)
            if nrm <= breakdown_tol * anorm:
                raise Breakdown(
                    c + 1, _truncate(V, H, c, gamma, method, SV, cond_history=history)
                )
            H[c, c - 1] = nrm
            V[:, c] = w / nrm
            if SV is None:
                continue
            SV[:, c] = apply_sketch(sketch, V[:, c])
            if not monitor and force_whiten_at is None:
                continue
            i = c + 1
            kappa = condition_2norm(SV[:, :i]) if monitor else float("nan")
            history.append(kappa)
            if (monitor and kappa > threshold) or force_whiten_at == i:
                Q, R = householder_qr(SV[:, :i])
                d = np.abs(np.diag(R))
                if d[-1] <= _RANK_TOL * d.max() and d[:-1].min() > _RANK_TOL * d.max():
                    # the new vector lies in the span of the old ones: the
                    # space is invariant; fold v_{c+1} = V_c z into H_c
                    z = solve_upper_triangular(R[:c, :c], R[:c, c])
                    H[:c, c - 1] += H[c, c - 1] * z
                    raise Breakdown(
                        c + 1, _truncate(V, H, c, gamma, method, SV, cond_history=history)
                    )
                V[:, :i] = solve_upper_triangular(R, V[:, :i], side="right")
                tally(basis_flops=n * i * (i + 1) // 2)
                H[:i, :c] = solve_upper_triangular(R[:c, :c], R @ H[:i, :c], side="right")
                gamma *= float(R[0, 0])
                SV[:, :i] = Q
                whitened_at = i
        else:
            p = apply_sketch(sketch, w)
            r, q, s = _sketch_orthogonalize(sketch, SV[:, :c], V[:, :c], w, p, reorth)
            rcc = float(np.linalg.norm(s))
            H[:c, c - 1] = r
            if rcc <= breakdown_tol * float(np.linalg.norm(p)):
                raise SketchBreakdown(
                    c + 1,
                    _truncate(V, H, c, gamma, method, SV, whitened_at=whitened_at,
                              cond_history=history),
                )
            SV[:, c] = s / rcc
            V[:, c] = q / rcc
            tally(basis_flops=(2 if reorth else 1) * c * n)
            H[c, c - 1] = rcc

    return ArnoldiLikeDecomposition(
        V, H, gamma, method, sketched_basis=SV, whitened_at=whitened_at, cond_history=history
    )


def build_basis(A, b, cfg):
    """Dispatch on a :class:`BasisBuildConfig`."""
    if cfg.method == "Arnoldi":
        return arnoldi(A, b, cfg.m, cfg.breakdown_tol)
    if cfg.method == "SketchedGS":
        return sketched_gs_basis(A, b, cfg.m, cfg.sketch, cfg.breakdown_tol, cfg.sketch_reorth)
    if cfg.sketch is None:
        return truncated_basis(A, b, cfg.m, cfg.k, cfg.breakdown_tol)
    return truncated_basis_with_whitening(
        A, b, cfg.m, cfg.k, cfg.sketch, cfg.whitening_threshold, cfg.breakdown_tol,
        reorth=cfg.sketch_reorth,
    )
