"""
When a truncated basis goes bad: whitening
==========================================

Truncated orthogonalization keeps only the last two basis vectors, so on a
strongly nonnormal matrix the basis quickly becomes numerically dependent.
The cheapest driver, which evaluates f on the basis' own Hessenberg matrix,
then stops improving. Whitening the basis once, using the QR factor of its
sketch, restores a well-conditioned basis and convergence.
"""

import numpy as np

from randkrylov.bench import compute_reference, detect_stagnation
from randkrylov.errors import NegativeRealEigenvalue
from randkrylov.fab import MethodConfig, run_method
from randkrylov.krylov import truncated_basis, truncated_basis_with_whitening
from randkrylov.problems import ProblemSpec, build_problem
from randkrylov.sketch import build_srht

# square root of the Laplacian of a random directed graph with heavy-tailed out-degrees
spec = ProblemSpec("digraph-laplacian", dict(n=1000, mean_degree=2, tail_index=4), "sqrt", seed=1)
problem = build_problem(spec)
ref = compute_reference(problem.A, problem.b, "sqrt", "Dense")

# the Laplacian is singular; a tiny shift is used only if a small sqrt fails
cfg = MethodConfig(seed=1, sqrt_shift=1e-8)


def error(name, m):
    # a Ritz value left of -1e-8 has no real square root: report the cell as nan
    try:
        res = run_method(name, problem.A, problem.b, m, "sqrt", cfg)
    except NegativeRealEigenvalue:
        return np.nan, None
    return np.linalg.norm(res.approx - ref) / np.linalg.norm(ref), res


plain = [error("Alg5", m)[0] for m in range(1, 61)]
start = detect_stagnation(plain)
print(f"Alg5 without whitening: best error {np.nanmin(plain):.1e}, "
      f"stagnating from m = {start + 1}")

print(f"\n{'m':>4}{'Alg5':>12}{'Alg5Whitened':>14}{'Alg4':>12}{'whitened at':>13}")
for m in range(20, 121, 20):
    e_white, res = error("Alg5Whitened", m)
    print(f"{m:>4}{error('Alg5', m)[0]:12.1e}{e_white:14.1e}{error('Alg4', m)[0]:12.1e}"
          f"{str(res.whitened_at if res else '-'):>13}")

# the basis itself explains why: without whitening it is numerically singular
m = 60
raw = truncated_basis(problem.A, problem.b, m, k=2)
white = truncated_basis_with_whitening(problem.A, problem.b, m, 2, build_srht(problem.A.n, 2 * m, seed=1))
print(f"\ncond(V_{m}) truncated: {np.linalg.cond(raw.V_m):.1e}, "
      f"whitened at step {white.whitened_at}: {np.linalg.cond(white.V_m):.1e}")
