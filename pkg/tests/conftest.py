import numpy as np
import pytest
import scipy.sparse

from randkrylov.sparse import SparseMatrix


def rel_err(x, ref):
    return float(np.linalg.norm(np.asarray(x) - np.asarray(ref)) / np.linalg.norm(ref))


def random_sparse(n, density, seed, shift=0.0):
    """Seeded sparse matrix with normal entries, optionally plus ``shift * I``."""
    rng = np.random.default_rng(seed)
    M = scipy.sparse.random(n, n, density=density, random_state=rng, data_rvs=rng.standard_normal)
    if shift:
        M = M + shift * scipy.sparse.identity(n)
    return SparseMatrix.from_scipy(M.tocsr())


def random_spd(n, seed, density=0.02):
    """Seeded sparse symmetric positive definite matrix with spectrum in about [1, 5]."""
    rng = np.random.default_rng(seed)
    M = scipy.sparse.random(n, n, density=density, random_state=rng, data_rvs=rng.standard_normal)
    S = (M + M.T) * 0.5
    lam_max = np.abs(S).sum(axis=1).max()
    return SparseMatrix.from_scipy((S + (lam_max + 1.0) * scipy.sparse.identity(n)).tocsr())


def unit_vector(n, seed):
    b = np.random.default_rng(seed).standard_normal(n)
    return b / np.linalg.norm(b)


@pytest.fixture
def acceptance_log(request):
    """Collects ``(criterion, passed, detail)`` lines for the end-of-run summary."""
    log = request.config.__dict__.setdefault("_acceptance_lines", [])
    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.__dict__.get("_acceptance_lines")
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(lines):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {detail}")
