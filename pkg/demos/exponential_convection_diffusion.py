"""
exp(tA) b on a convection-diffusion operator
============================================

Full Arnoldi orthogonalizes every new Krylov vector against all previous
ones. The randomized drivers build a cheaper, non-orthogonal basis and
recover the same approximation with a small sketched least-squares solve.
This script compares their errors and their basis costs on a 99 x 99 mesh.
"""

import numpy as np

from randkrylov.bench import compute_reference
from randkrylov.fab import MethodConfig, run_method
from randkrylov.problems import ProblemSpec, build_problem

# the operator is scaled by -1e-5, so we approximate exp(-1e-5 A) b
spec = ProblemSpec("convdiff", dict(mesh=99, pe=200), "exp", b_rule="SinPiXSinPiY", scale=-1e-5)
problem = build_problem(spec)
print(f"n = {problem.A.n}, nnz = {problem.A.nnz}")

# scipy's expm_multiply serves as the reference solution
ref = compute_reference(problem.A, problem.b, "exp", "ExpmMultiply")

methods = ["ArnoldiFom", "Alg3", "Alg4", "Alg5"]
cfg = MethodConfig(seed=0)
print(f"\n{'m':>4}" + "".join(f"{name:>14}" for name in methods))
for m in range(10, 81, 10):
    row = []
    for name in methods:
        res = run_method(name, problem.A, problem.b, m, "exp", cfg)
        row.append(np.linalg.norm(res.approx - ref) / np.linalg.norm(ref))
    print(f"{m:>4}" + "".join(f"{e:14.2e}" for e in row))

# the errors agree closely; the work spent on the basis does not
print("\nbasis flops at m = 80 (one unit per vector entry touched)")
for name in methods:
    res = run_method(name, problem.A, problem.b, 80, "exp", cfg)
    c = res.counters
    print(f"  {name:<12} basis {c.basis_flops:>12,d}   sketch {c.sketch_flops:>12,d}")
