"""Dense functions of small matrices: exp, sqrt, inverse sqrt.

``expm`` is scaling and squaring around the [13/13] diagonal Pade
approximant. ``sqrtm`` reduces to real Schur form with a Francis
double-shift QR iteration and then runs the (block) triangular square-root
recurrence; complex conjugate pairs stay in 2x2 real blocks whose square
roots have a closed form.
"""

import enum
import math

import numpy as np
import scipy.linalg

from .errors import (
    NegativeRealEigenvalue,
    SchurNoConvergence,
    SingularMatrix,
    SingularPadeDenominator,
)

__all__ = [
    "MatrixFunctionKind",
    "Polynomial",
    "expm",
    "sqrtm",
    "inv_sqrtm",
    "hessenberg",
    "real_schur",
    "eval_matfun",
    "matfun",
]

_EPS = np.finfo(np.float64).eps


class MatrixFunctionKind(enum.Enum):
    Exp = "exp"
    Sqrt = "sqrt"
    InvSqrt = "invsqrt"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        key = str(name).lower().replace("_", "").replace("-", "")
        for kind in cls:
            if kind.value == key:
                return kind
        raise ValueError(f"unknown matrix function {name!r}")


class Polynomial:
    """``p(z) = sum_j coeffs[j] z**j``, evaluated on matrices by Horner.

    Only used to check that the Krylov drivers reproduce polynomials
    exactly; it is not a CLI choice.
    """

    def __init__(self, coeffs):
        self.coeffs = np.asarray(coeffs, dtype=np.float64)

    @classmethod
    def monomial(cls, degree):
        c = np.zeros(degree + 1)
        c[-1] = 1.0
        return cls(c)

    @property
    def degree(self):
        return self.coeffs.size - 1

    def __call__(self, H):
        H = np.asarray(H, dtype=np.float64)
        out = self.coeffs[-1] * np.eye(H.shape[0])
        for c in self.coeffs[-2::-1]:
            out = H @ out
            out[np.diag_indices_from(out)] += c
        return out

    def __repr__(self):
        return f"Polynomial({self.coeffs.tolist()})"


# --------------------------------------------------------------------------
# exponential

_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
_THETA13 = 5.371920351148152
# scaled so the constant term is 1; expm(0) is then exactly I
_PADE13_NORMALIZED = tuple(c / _PADE13[0] for c in _PADE13)


def expm(H):
    """Matrix exponential by scaling and squaring with a [13/13] Pade approximant.

    Raises
    ------
    SingularPadeDenominator
        The Pade denominator cannot be solved against (overflow-scale input).
    """
    H = np.asarray(H, dtype=np.float64)
    n = H.shape[0]
    if H.ndim != 2 or H.shape[1] != n:
        raise ValueError("expm needs a square matrix")
    if n == 0:
        return H.copy()
    if not np.all(np.isfinite(H)):
        raise SingularPadeDenominator("non-finite input")
    norm1 = np.abs(H).sum(axis=0).max()
    s = 0
    if norm1 > _THETA13:
        s = max(0, int(math.ceil(math.log2(norm1 / _THETA13))))
    A = H / 2.0**s

    b = _PADE13_NORMALIZED
    ident = np.eye(n)
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A2 @ A4
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
    V = A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident
    try:
        lu = scipy.linalg.lu_factor(V - U, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SingularPadeDenominator(str(exc)) from exc
    if np.any(np.diag(lu[0]) == 0.0):
        raise SingularPadeDenominator("singular Pade denominator")
    F = scipy.linalg.lu_solve(lu, V + U)
    for _ in range(s):
        F = F @ F
    if not np.all(np.isfinite(F)):
        raise SingularPadeDenominator("overflow while squaring")
    return F


# --------------------------------------------------------------------------
# Hessenberg and real Schur reduction


def _householder(x):
    """Unit ``v`` and ``beta`` with ``(I - 2 v v^T) x = beta e_1``."""
    alpha = np.linalg.norm(x)
    v = x.astype(np.float64, copy=True)
    if alpha == 0.0:
        return None, 0.0
    beta = -math.copysign(alpha, x[0])
    v[0] -= beta
    vn = np.linalg.norm(v)
    if vn == 0.0:
        return None, beta
    return v / vn, beta


def hessenberg(A):
    """Householder reduction ``A = Q H Q^T`` with H upper Hessenberg."""
    H = np.array(A, dtype=np.float64, order="C")
    n = H.shape[0]
    Q = np.eye(n)
    for k in range(n - 2):
        x = H[k + 1 :, k]
        if not np.any(x[1:]):
            continue
        v, _ = _householder(x)
        if v is None:
            continue
        H[k + 1 :, k:] -= 2.0 * np.outer(v, v @ H[k + 1 :, k:])
        H[:, k + 1 :] -= 2.0 * np.outer(H[:, k + 1 :] @ v, v)
        Q[:, k + 1 :] -= 2.0 * np.outer(Q[:, k + 1 :] @ v, v)
        H[k + 2 :, k] = 0.0
    return Q, H


def _rotate(H, Q, p, c, s, hi_row):
    """Apply the plane rotation G = [[c, -s], [s, c]] as H <- G^T H G on rows/cols p, p+1."""
    n = H.shape[0]
    G = np.array([[c, -s], [s, c]])
    H[p : p + 2, p:] = G.T @ H[p : p + 2, p:]
    H[: hi_row + 1, p : p + 2] = H[: hi_row + 1, p : p + 2] @ G
    Q[:, p : p + 2] = Q[:, p : p + 2] @ G
    del n


def _split_real_block(H, Q, p):
    """Triangularize the 2x2 diagonal block at p if its eigenvalues are real."""
    a, b = H[p, p], H[p, p + 1]
    c, d = H[p + 1, p], H[p + 1, p + 1]
    if c == 0.0:
        return
    half = 0.5 * (a - d)
    disc = half * half + b * c
    if disc < 0.0:
        return
    root = math.sqrt(disc)
    sgn = 1.0 if half >= 0.0 else -1.0
    lam = a - (half + sgn * root)  # eigenvalue away from a; no cancellation
    vx, vy = b, lam - a
    if math.hypot(vx, vy) <= _EPS * (abs(a) + abs(b) + abs(c) + abs(d)):
        vx, vy = lam - d, c
    r = math.hypot(vx, vy)
    if r == 0.0:
        return
    _rotate(H, Q, p, vx / r, vy / r, p + 1)
    H[p + 1, p] = 0.0


def real_schur(A, max_iter=None):
    """Real Schur decomposition ``A = Q T Q^T`` by Francis double-shift QR.

    T is quasi upper triangular: 1x1 blocks carry real eigenvalues, 2x2
    blocks carry complex conjugate pairs (blocks with real eigenvalues are
    split by a rotation).

    Raises
    ------
    SchurNoConvergence
        After ``max_iter`` (default ``30 n^2``) double-shift sweeps.
    """
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    Q, H = hessenberg(A)
    if n <= 1:
        return Q, H
    max_iter = 30 * n * n if max_iter is None else max_iter
    total = 0
    its = 0
    hi = n - 1
    hnorm = np.abs(H).sum()
    while hi >= 0:
        # locate the start of the active unreduced block
        l = hi
        while l > 0:
            scale = abs(H[l - 1, l - 1]) + abs(H[l, l])
            if scale == 0.0:
                scale = hnorm
            if abs(H[l, l - 1]) <= _EPS * scale:
                H[l, l - 1] = 0.0
                break
            l -= 1
        if l == hi:
            hi -= 1
            its = 0
            continue
        if l == hi - 1:
            _split_real_block(H, Q, l)
            hi -= 2
            its = 0
            continue

        total += 1
        its += 1
        if total > max_iter:
            raise SchurNoConvergence(f"no convergence after {max_iter} sweeps")
        if its % 11 == 10:
            w = abs(H[hi, hi - 1]) + abs(H[hi - 1, hi - 2])
            sh = 1.5 * w
            th = w * w
        else:
            sh = H[hi - 1, hi - 1] + H[hi, hi]
            th = H[hi - 1, hi - 1] * H[hi, hi] - H[hi - 1, hi] * H[hi, hi - 1]
        x = H[l, l] * H[l, l] + H[l, l + 1] * H[l + 1, l] - sh * H[l, l] + th
        y = H[l + 1, l] * (H[l, l] + H[l + 1, l + 1] - sh)
        z = H[l + 1, l] * H[l + 2, l + 1]
        for k in range(l, hi - 1):
            v, _ = _householder(np.array([x, y, z]))
            if v is not None:
                q = max(l, k - 1)
                r = min(k + 3, hi)
                blk = H[k : k + 3, q:]
                blk -= 2.0 * np.outer(v, v @ blk)
                blk = H[: r + 1, k : k + 3]
                blk -= 2.0 * np.outer(blk @ v, v)
                blk = Q[:, k : k + 3]
                blk -= 2.0 * np.outer(blk @ v, v)
                if k > l:
                    H[k + 1 : k + 3, k - 1] = 0.0
            x = H[k + 1, k]
            y = H[k + 2, k]
            if k < hi - 2:
                z = H[k + 3, k]
        # final 2-vector
        r = math.hypot(x, y)
        if r != 0.0:
            c, s = x / r, y / r
            p = hi - 1
            G = np.array([[c, s], [-s, c]])
            H[p : p + 2, hi - 2 :] = G @ H[p : p + 2, hi - 2 :]
            H[: hi + 1, p : p + 2] = H[: hi + 1, p : p + 2] @ G.T
            Q[:, p : p + 2] = Q[:, p : p + 2] @ G.T
            H[hi, hi - 2] = 0.0
    return Q, H


def _schur_blocks(T):
    n = T.shape[0]
    blocks = []
    i = 0
    while i < n:
        if i + 1 < n and T[i + 1, i] != 0.0:
            blocks.append(slice(i, i + 2))
            i += 2
        else:
            blocks.append(slice(i, i + 1))
            i += 1
    return blocks


def _sqrt_block(B):
    if B.shape[0] == 1:
        t = B[0, 0]
        if t <= 0.0:
            raise NegativeRealEigenvalue(float(t))
        return np.array([[math.sqrt(t)]])
    # complex pair theta +- i mu: sqrt(B) = alpha I + (B - theta I) / (2 alpha),
    # alpha = Re sqrt(theta + i mu)
    theta = 0.5 * (B[0, 0] + B[1, 1])
    mu2 = -((0.5 * (B[0, 0] - B[1, 1])) ** 2 + B[0, 1] * B[1, 0])
    mu = math.sqrt(max(mu2, 0.0))
    alpha = math.sqrt(0.5 * (theta + math.hypot(theta, mu)))
    if alpha == 0.0:
        raise NegativeRealEigenvalue(complex(theta, mu))
    return alpha * np.eye(2) + (B - theta * np.eye(2)) / (2.0 * alpha)


def _sqrt_quasi_triangular(T):
    n = T.shape[0]
    U = np.zeros_like(T)
    blocks = _schur_blocks(T)
    for bj in blocks:
        U[bj, bj] = _sqrt_block(T[bj, bj])
    for jj, bj in enumerate(blocks):
        Ujj = U[bj, bj]
        q = Ujj.shape[0]
        for ii in range(jj - 1, -1, -1):
            bi = blocks[ii]
            Uii = U[bi, bi]
            p = Uii.shape[0]
            k0, k1 = bi.stop, bj.start
            rhs = T[bi, bj] - U[bi, k0:k1] @ U[k0:k1, bj]
            if p == 1 and q == 1:
                denom = Uii[0, 0] + Ujj[0, 0]
                U[bi, bj] = rhs / denom
            else:
                # Uii X + X Ujj = rhs, column-major vec
                K = np.kron(np.eye(q), Uii) + np.kron(Ujj.T, np.eye(p))
                X = np.linalg.solve(K, rhs.reshape(-1, order="F"))
                U[bi, bj] = X.reshape((p, q), order="F")
    del n
    return U


def sqrtm(H):
    """Principal square root via the real Schur form.

    Raises
    ------
    NegativeRealEigenvalue
        H has an eigenvalue on the closed negative real axis.
    SchurNoConvergence
        The Schur reduction failed.
    """
    H = np.asarray(H, dtype=np.float64)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("sqrtm needs a square matrix")
    if H.shape[0] == 0:
        return H.copy()
    Q, T = real_schur(H)
    U = _sqrt_quasi_triangular(T)
    return Q @ U @ Q.T


def inv_sqrtm(H):
    """Inverse principal square root: ``sqrtm(H)`` followed by an LU solve."""
    X = sqrtm(H)
    n = X.shape[0]
    try:
        lu, piv = scipy.linalg.lu_factor(X)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SingularMatrix(str(exc)) from exc
    d = np.abs(np.diag(lu))
    if d.size and d.min() <= n * _EPS * d.max():
        raise SingularMatrix("square root is numerically singular")
    return scipy.linalg.lu_solve((lu, piv), np.eye(n))


_DISPATCH = {
    MatrixFunctionKind.Exp: expm,
    MatrixFunctionKind.Sqrt: sqrtm,
    MatrixFunctionKind.InvSqrt: inv_sqrtm,
}


def matfun(kind, H):
    """Dense ``f(H)`` for a :class:`MatrixFunctionKind` or a :class:`Polynomial`."""
    if isinstance(kind, Polynomial):
        return kind(H)
    return _DISPATCH[MatrixFunctionKind.parse(kind)](H)


def eval_matfun(kind, H, w):
    """``f(H) @ w`` with f(H) formed densely."""
    H = np.asarray(H, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if H.ndim != 2 or H.shape[0] != H.shape[1] or w.shape[0] != H.shape[0]:
        raise ValueError(f"shape mismatch: H {H.shape}, w {w.shape}")
    return matfun(kind, H) @ w
