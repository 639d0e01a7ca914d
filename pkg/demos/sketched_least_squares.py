"""
Sketch-and-precondition least squares
=====================================

LSQR on an ill-conditioned tall matrix converges slowly. Sketching the matrix
to a few times its column count and using the R factor of the sketch as a
right preconditioner makes the iteration count independent of conditioning.
"""

import numpy as np

from randkrylov.lsq import LsqConfig, lsqr, sketch_and_solve, sketch_precond_lsqr
from randkrylov.sketch import build_srht

rng = np.random.default_rng(7)
U, _ = np.linalg.qr(rng.standard_normal((500, 20)))
W, _ = np.linalg.qr(rng.standard_normal((20, 20)))
c = rng.standard_normal(500)

cfg = LsqConfig(tol=1e-12, max_iter=60)
print(f"{'cond(V)':>9}{'plain err':>12}{'its':>5}{'precond err':>13}{'its':>5}{'sketch-solve err':>18}")
for cond in (1e2, 1e4, 1e6, 1e8):
    V = (U * np.geomspace(1.0, 1.0 / cond, 20)) @ W.T
    exact = np.linalg.lstsq(V, c, rcond=None)[0]
    err = lambda y: np.linalg.norm(y - exact) / np.linalg.norm(exact)
    plain = lsqr(V, c, cfg)
    pre = sketch_precond_lsqr(V, c, cfg, seed=7)
    # solving only the sketched problem is cheap but crude
    coarse = sketch_and_solve(V, c, build_srht(500, 80, seed=7))
    print(f"{cond:9.0e}{err(plain.y):12.1e}{plain.iterations:5d}"
          f"{err(pre.y):13.1e}{pre.iterations:5d}{err(coarse):18.1e}")
