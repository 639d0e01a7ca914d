"""Test matrices and starting vectors.

Generators return :class:`~randkrylov.sparse.SparseMatrix`. Grid unknowns of
the 2D problems are ordered with x running fastest: index ``(j-1) g + (i-1)``
for the point ``(i h, j h)``, ``h = 1 / (g + 1)``.
"""

from dataclasses import dataclass, field
import os

import numpy as np
import scipy.sparse

from .errors import ConfigMissing, GeometryMismatch
from .sketch import make_rng
from .sparse import SparseMatrix, graph_laplacian, read_matrix_market

__all__ = [
    "ProblemSpec",
    "Problem",
    "gen_convection_diffusion",
    "gen_laplacian_3d",
    "gen_toeplitz_nonsym",
    "read_toeplitz_coeffs",
    "gen_random_sparse",
    "gen_random_digraph",
    "gen_split_spectrum",
    "gen_b",
    "build_problem",
    "PROBLEMS",
]


def _conv_diff_parts(g, pe, unit_diffusion=False):
    h = 1.0 / (g + 1)
    x = h * np.arange(1, g + 1)
    X, Y = np.meshgrid(x, x, indexing="xy")  # X[j, i] = x_i, Y[j, i] = y_j
    X = X.ravel()
    Y = Y.ravel()
    n = g * g

    def d1(px, py):
        if unit_diffusion:
            return np.ones_like(px)
        inside = (px >= 0.25) & (px <= 0.75) & (py >= 0.25) & (py <= 0.75)
        return np.where(inside, 1000.0, 1.0)

    def d2(px, py):
        return d1(px, py) if unit_diffusion else 0.5 * d1(px, py)

    idx = np.arange(n)
    ii = idx % g
    jj = idx // g
    rows, cols, dvals, cvals = [], [], [], []
    diag = np.zeros(n)

    # x-direction neighbours (i+1): interface at x + h/2
    east = ii < g - 1
    cE = d1(X + 0.5 * h, Y) / h**2
    west_c = d1(X - 0.5 * h, Y) / h**2
    diag += cE + west_c
    # y-direction interfaces
    cN = d2(X, Y + 0.5 * h) / h**2
    cS = d2(X, Y - 0.5 * h) / h**2
    diag += cN + cS

    v1 = X + Y
    v2 = X - Y
    k = pe / (4.0 * h)

    src = idx[east]
    rows += [src, src + 1]
    cols += [src + 1, src]
    dvals += [-cE[src], -cE[src]]  # the interface coefficient is shared by both rows
    cvals += [k * (v1[src] + v1[src + 1]), -k * (v1[src + 1] + v1[src])]

    north = jj < g - 1
    src = idx[north]
    rows += [src, src + g]
    cols += [src + g, src]
    dvals += [-cN[src], -cN[src]]
    cvals += [k * (v2[src] + v2[src + g]), -k * (v2[src + g] + v2[src])]

    r = np.concatenate(rows)
    c = np.concatenate(cols)
    diff = scipy.sparse.coo_matrix((np.concatenate(dvals), (r, c)), shape=(n, n))
    diff = (diff + scipy.sparse.diags(diag)).tocsr()
    conv = scipy.sparse.coo_matrix((np.concatenate(cvals), (r, c)), shape=(n, n)).tocsr()
    return diff, conv


def gen_convection_diffusion(g, pe=200.0, unit_diffusion=False):
    """Central-difference discretization of the convection-diffusion operator

    ``-(D1 u_x)_x - (D2 u_y)_y + Pe (1/2 (v1 u_x + v2 u_y) + 1/2 ((v1 u)_x + (v2 u)_y))``

    on the unit square with homogeneous Dirichlet conditions; ``D1 = 1000`` on
    ``[0.25, 0.75]^2`` and 1 elsewhere, ``D2 = D1 / 2``, ``v = (x + y, x - y)``.
    Diffusion coefficients are sampled at cell interfaces. The convection
    term in this split form discretizes to a skew-symmetric matrix.

    ``unit_diffusion`` forces ``D1 = D2 = 1`` (used to check against the
    5-point Laplacian).
    """
    if g < 3:
        raise ValueError("mesh needs g >= 3")
    diff, conv = _conv_diff_parts(g, pe, unit_diffusion)
    return SparseMatrix.from_scipy(diff + conv)


def gen_laplacian_3d(N, literal_stencil=False):
    """Kronecker sum ``T x I x I + I x T x I + I x I x T`` with ``T = tridiag(-1, 2, -1)``.

    ``literal_stencil=True`` uses ``tridiag(-1, 2, 1)`` (superdiagonal +1).
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    sup = 1.0 if literal_stencil else -1.0
    T = scipy.sparse.diags(
        [-np.ones(N - 1), 2.0 * np.ones(N), sup * np.ones(N - 1)], [-1, 0, 1], format="csr"
    )
    eye = scipy.sparse.identity(N, format="csr")
    A = (
        scipy.sparse.kron(scipy.sparse.kron(T, eye), eye)
        + scipy.sparse.kron(scipy.sparse.kron(eye, T), eye)
        + scipy.sparse.kron(scipy.sparse.kron(eye, eye), T)
    )
    return SparseMatrix.from_scipy(A)


def read_toeplitz_coeffs(path):
    """Parse ``offset value`` pairs, one per line (``#`` starts a comment)."""
    coeffs = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'offset value'")
            off = int(parts[0])
            coeffs[off] = coeffs.get(off, 0.0) + float(parts[1])
    return coeffs


def gen_toeplitz_nonsym(n, coeffs=None):
    """Banded Toeplitz matrix; ``coeffs`` maps diagonal offset -> value (or is a file path).

    Offset ``+1`` is the first superdiagonal.
    """
    if coeffs is None:
        raise ConfigMissing("Toeplitz problem needs a coefficient file or mapping")
    if isinstance(coeffs, (str, os.PathLike)):
        coeffs = read_toeplitz_coeffs(coeffs)
    offsets = [int(o) for o in coeffs if abs(int(o)) < n]
    diags = [np.full(n - abs(o), float(coeffs[o])) for o in offsets]
    A = scipy.sparse.diags(diags, offsets, shape=(n, n), format="csr")
    return SparseMatrix.from_scipy(A)


def gen_random_sparse(n, density=0.02, seed=0):
    """Sparse matrix with iid standard normal entries at a random pattern."""
    rng = make_rng(seed)
    nnz = int(round(density * n * n))
    flat = rng.choice(n * n, size=nnz, replace=False)
    vals = rng.standard_normal(nnz)
    M = scipy.sparse.coo_matrix((vals, (flat // n, flat % n)), shape=(n, n))
    return SparseMatrix.from_scipy(M)


def gen_random_digraph(n, mean_degree=5.0, seed=0, tail_index=1.5):
    """Adjacency matrix of a seeded random directed graph (no self loops).

    Out-degrees follow a shifted Pareto law with exponent ``tail_index``,
    rescaled to ``mean_degree`` (many low-degree nodes, a few hubs, as in
    peer-to-peer networks). ``tail_index=None`` gives every node
    ``round(mean_degree)`` out-neighbours. Every node has at least one
    out-edge.
    """
    rng = make_rng(seed)
    if tail_index is not None:
        raw = rng.pareto(tail_index, size=n) + 1.0
        deg = np.maximum(1, np.round(raw * mean_degree / raw.mean())).astype(int)
    else:
        deg = np.full(n, max(1, int(round(mean_degree))))
    deg = np.minimum(deg, n - 1)
    rows, cols = [], []
    for i in range(n):
        targets = rng.choice(n - 1, size=deg[i], replace=False)
        targets[targets >= i] += 1
        rows.append(np.full(deg[i], i))
        cols.append(targets)
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    M = scipy.sparse.coo_matrix((np.ones(r.size), (r, c)), shape=(n, n))
    return SparseMatrix.from_scipy(M)


def gen_split_spectrum(n, seed=0, gap=0.5, spread=2.0, cond_x=10.0):
    """Dense-backed diagonalizable ``A = X diag(lam) X^{-1}`` with eigenvalues
    split between ``[-spread, -gap]`` and ``[gap, spread]``.

    Returns ``(A, X, lam)``; ``X`` is a random matrix with condition number
    ``cond_x`` so A is nonnormal.
    """
    rng = make_rng(seed)
    half = n // 2
    lam = np.concatenate(
        [-rng.uniform(gap, spread, size=half), rng.uniform(gap, spread, size=n - half)]
    )
    Q1, _ = np.linalg.qr(rng.standard_normal((n, n)))
    Q2, _ = np.linalg.qr(rng.standard_normal((n, n)))
    sv = np.geomspace(1.0, 1.0 / cond_x, n)
    X = (Q1 * sv) @ Q2.T
    A = X @ np.diag(lam) @ np.linalg.inv(X)
    return SparseMatrix.from_dense(A), X, lam


def gen_b(rule, n=None, mesh=None, seed=0):
    """Starting vector.

    ``"RandomUnit"``: seeded standard normal vector of unit 2-norm.
    ``"SinPiXSinPiY"``: ``sin(pi x) sin(pi y)`` on the interior grid of a
    ``mesh x mesh`` problem, normalized.
    """
    if rule == "RandomUnit":
        if n is None:
            if mesh is None:
                raise GeometryMismatch("RandomUnit needs n")
            n = mesh * mesh
        b = make_rng(seed).standard_normal(int(n))
        return b / np.linalg.norm(b)
    if rule == "SinPiXSinPiY":
        if mesh is None:
            raise GeometryMismatch("SinPiXSinPiY needs a 2D mesh size")
        if n is not None and n != mesh * mesh:
            raise GeometryMismatch(f"n = {n} does not match a {mesh}x{mesh} mesh")
        x = np.arange(1, mesh + 1) / (mesh + 1)
        b = np.outer(np.sin(np.pi * x), np.sin(np.pi * x)).ravel()
        return b / np.linalg.norm(b)
    raise ValueError(f"unknown starting-vector rule {rule!r}")


@dataclass
class ProblemSpec:
    """A named test problem.

    ``scale`` multiplies the generated matrix (e.g. ``-t`` to compute
    ``exp(-t A) b``); ``f`` is ``exp``, ``sqrt``, ``invsqrt`` or ``sign``.
    """

    name: str
    params: dict = field(default_factory=dict)
    f: str = "exp"
    b_rule: str = "RandomUnit"
    seed: int = 0
    scale: float = 1.0


@dataclass
class Problem:
    spec: ProblemSpec
    A: SparseMatrix
    b: np.ndarray
    mesh: object = None


def _convdiff(p, seed):
    g = int(p.get("mesh", 100))
    return gen_convection_diffusion(g, float(p.get("pe", 200.0))), g


def _laplace3d(p, seed):
    return gen_laplacian_3d(int(p.get("N", 20)), bool(p.get("literal_stencil", False))), None


def _toeplitz(p, seed):
    return gen_toeplitz_nonsym(int(p.get("n", 1000)), p.get("coeffs")), None


def _digraph_laplacian(p, seed):
    adj = gen_random_digraph(
        int(p.get("n", 1000)),
        float(p.get("mean_degree", 5.0)),
        seed,
        _optional_float(p.get("tail_index", 1.5)),
    )
    return graph_laplacian(adj), None


def _optional_float(value):
    if value is None or str(value).lower() in ("none", "regular"):
        return None
    return float(value)


def _mtx(p, seed):
    if "path" not in p:
        raise ConfigMissing("mtx problem needs a path")
    A = read_matrix_market(p["path"])
    if p.get("laplacian"):
        A = graph_laplacian(A)
    return A, None


def _random_sparse(p, seed):
    return gen_random_sparse(int(p.get("n", 300)), float(p.get("density", 0.02)), seed), None


def _split_spectrum(p, seed):
    return gen_split_spectrum(int(p.get("n", 500)), seed)[0], None


def _diag(p, seed):
    n = int(p.get("n", 50))
    d = np.linspace(float(p.get("low", -1.0)), float(p.get("high", 1.0)), n)
    return SparseMatrix.from_scipy(scipy.sparse.diags(d)), None


PROBLEMS = {
    "convdiff": _convdiff,
    "laplace3d": _laplace3d,
    "toeplitz": _toeplitz,
    "digraph-laplacian": _digraph_laplacian,
    "mtx": _mtx,
    "random-sparse": _random_sparse,
    "split-spectrum": _split_spectrum,
    "diag": _diag,
}


def build_problem(spec):
    """Generate ``A`` (already multiplied by ``spec.scale``) and ``b``."""
    try:
        gen = PROBLEMS[spec.name]
    except KeyError:
        raise ValueError(f"unknown problem {spec.name!r}; choose from {sorted(PROBLEMS)}") from None
    A, mesh = gen(spec.params, spec.seed)
    if spec.scale != 1.0:
        A = A.scaled(spec.scale)
    if spec.b_rule == "SinPiXSinPiY":
        b = gen_b("SinPiXSinPiY", n=A.n, mesh=mesh)
    else:
        b = gen_b(spec.b_rule, n=A.n, seed=np.random.SeedSequence([spec.seed, 1]))
    return Problem(spec, A, b, mesh)
