"""
The matrix sign function through the inverse square root
========================================================

sign(A) b = (A^2)^(-1/2) (A b). Every Krylov step on A^2 costs two products
with A, plus one for A b, so m steps cost 2m + 1 matrix-vector products.
"""

import numpy as np

from randkrylov.fab import fab_sign
from randkrylov.problems import gen_b, gen_split_spectrum

# a diagonalizable matrix with eigenvalues on both sides of the imaginary axis
A, X, lam = gen_split_spectrum(500, seed=0)
b = gen_b("RandomUnit", n=500, seed=1)
exact = X @ (np.sign(lam) * np.linalg.solve(X, b))
print(f"{np.sum(lam < 0)} negative and {np.sum(lam > 0)} positive eigenvalues")

print(f"\n{'m':>4}{'ArnoldiFom':>12}{'Alg4':>12}{'Alg5':>12}{'matvecs':>9}")
for m in (5, 10, 20, 30, 40):
    errs = []
    for name in ("ArnoldiFom", "Alg4", "Alg5"):
        res = fab_sign(A, b, m, name)
        errs.append(np.linalg.norm(res.approx - exact) / np.linalg.norm(exact))
    print(f"{m:>4}" + "".join(f"{e:12.1e}" for e in errs) + f"{res.counters.matvecs:9d}")
