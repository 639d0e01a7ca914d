"""
Running a sweep from Python
===========================

The same sweep the command line runs (``randkrylov sweep``) is available as a
function. Each row is flushed as soon as its cell finishes; failed cells are
recorded with their reason and the sweep goes on.
"""

import sys

from randkrylov.bench import BenchConfig, run_sweep
from randkrylov.problems import ProblemSpec

cfg = BenchConfig(
    problem=ProblemSpec("random-sparse", dict(n=2000, density=0.003), "exp", seed=3),
    methods=["ArnoldiFom", "Alg3", "Alg4", "Alg5", "Sfom"],
    m_grid=[10, 20, 40],
    seed=3,
)

# CSV goes to stdout; a progress callback reports each finished cell on stderr
records = run_sweep(cfg, out=sys.stdout,
                    progress=lambda r: print(f"  done {r.method} m={r.m}", file=sys.stderr))

best = min(records, key=lambda r: r.rel_error)
print(f"\nsmallest error: {best.method} at m = {best.m}: {best.rel_error:.1e}", file=sys.stderr)
