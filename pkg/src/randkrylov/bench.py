"""Parameter sweeps over (method, m) with error and cost telemetry.

A sweep builds one problem, computes a reference ``f(A) b`` once, then runs
every method at every Krylov dimension of the grid with fresh counters and
writes one CSV row per cell as soon as it finishes.
"""

from dataclasses import dataclass, field, fields
import csv
import io
import math
import os
import time
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .counters import Counters, counting
from .errors import (
    Breakdown,
    NegativeRealEigenvalue,
    ReferenceInfeasible,
    ReferenceNotConverged,
)
from .fab import FabMethod, MethodConfig, SquaredOperator, fab_sign, run_method
from .krylov import arnoldi
from .matfun import MatrixFunctionKind, eval_matfun
from .problems import ProblemSpec, build_problem

__all__ = [
    "CSV_HEADER",
    "RunRecord",
    "BenchConfig",
    "compute_reference",
    "dense_reference",
    "long_arnoldi_reference",
    "run_cell",
    "run_sweep",
    "emit_csv",
    "format_record",
    "detect_stagnation",
    "parse_m_grid",
    "parse_config_file",
    "DENSE_LIMIT",
]

CSV_HEADER = (
    "method,problem,f,m,rel_error,matvecs,basis_flops,sketch_flops,"
    "lsq_iterations,cond_sketched_basis,whitened_at,status"
)
EXTRA_HEADER = "seconds,shift"
DENSE_LIMIT = 10_000
FUNCTIONS = ("exp", "sqrt", "invsqrt", "sign")


@dataclass
class RunRecord:
    method: str
    problem: str
    f: str
    m: int
    rel_error: float = float("nan")
    matvecs: int = 0
    basis_flops: int = 0
    sketch_flops: int = 0
    lsq_iterations: int = 0
    cond_sketched_basis: float = float("nan")
    whitened_at: Optional[int] = None
    status: str = "ok"
    seconds: float = float("nan")
    shift: float = 0.0

    @property
    def ok(self):
        return self.status == "ok"


@dataclass
class BenchConfig:
    """Everything a sweep needs; each field can be set from a config file.

    ``reference`` is ``"Dense"``, ``"LongArnoldi:M"`` or ``"ExpmMultiply"``
    (exp only). ``extra_columns`` appends wall-clock seconds and the
    diagonal shift applied to the small matrix; it is off by default so
    that output is reproducible byte for byte.
    """

    problem: ProblemSpec = field(default_factory=lambda: ProblemSpec("diag"))
    methods: list = field(default_factory=lambda: ["ArnoldiFom"])
    m_grid: list = field(default_factory=list)
    sketch_rule: str = "2m"
    seed: int = 0
    reference: str = "Dense"
    reference_window: int = 10
    reference_tol: float = 1e-12
    out: Optional[str] = None
    k: int = 2
    whiten_threshold: float = 1000.0
    lsq_tol: float = 1e-6
    lsq_max_iter: Optional[int] = None
    sqrt_shift: Optional[float] = 1e-8
    sketch_reorth: bool = False
    extra_columns: bool = False

    def __post_init__(self):
        self.methods = [FabMethod.parse(m).value for m in self.methods]
        self.m_grid = [int(m) for m in self.m_grid]
        if any(m < 1 for m in self.m_grid):
            raise ValueError("Krylov dimensions must be positive")
        if any(b <= a for a, b in zip(self.m_grid, self.m_grid[1:])):
            raise ValueError("m grid must be strictly increasing")
        if self.problem.f not in FUNCTIONS:
            raise ValueError(f"f must be one of {FUNCTIONS}, got {self.problem.f!r}")
        rule, size = _parse_reference(self.reference)
        if rule == "LongArnoldi" and self.m_grid and size <= max(self.m_grid):
            raise ValueError("LongArnoldi dimension must exceed the largest m of the grid")

    def method_config(self):
        return MethodConfig(
            k=self.k,
            whitening_threshold=self.whiten_threshold,
            sketch_rule=self.sketch_rule,
            seed=self.seed,
            lsq_tol=self.lsq_tol,
            lsq_max_iter=self.lsq_max_iter,
            sqrt_shift=self.sqrt_shift,
            sketch_reorth=self.sketch_reorth,
        )


def parse_m_grid(text):
    """``"a:b:step"`` (inclusive) or a comma list; empty string gives ``[]``."""
    text = str(text).strip()
    if not text:
        return []
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) == 2:
            parts.append(1)
        if len(parts) != 3 or parts[2] < 1:
            raise ValueError(f"bad m grid {text!r}; expected a:b:step")
        a, b, step = parts
        return list(range(a, b + 1, step))
    return [int(p) for p in text.split(",") if p.strip()]


def _parse_reference(rule):
    rule = str(rule).strip()
    if rule in ("Dense", "ExpmMultiply"):
        return rule, None
    for prefix in ("LongArnoldi:", "LongArnoldi(", "LongArnoldi "):
        if rule.startswith(prefix):
            return "LongArnoldi", int(rule[len(prefix):].rstrip(")"))
    raise ValueError(f"unknown reference rule {rule!r}")


def _sign_dense(Ad, b):
    lam, X = scipy.linalg.eig(Ad)
    if np.any(lam.real == 0.0):
        raise ReferenceInfeasible("sign undefined: eigenvalue on the imaginary axis")
    y = np.linalg.solve(X, b.astype(complex))
    return (X @ (np.sign(lam.real) * y)).real


def dense_reference(A, b, f):
    """``f(A) b`` with LAPACK-based dense kernels (independent of this package's)."""
    if A.n >= DENSE_LIMIT:
        raise ReferenceInfeasible(f"dense reference needs n < {DENSE_LIMIT}, got n = {A.n}")
    Ad = A.to_dense()
    if f == "exp":
        return scipy.linalg.expm(Ad) @ b
    if f == "sqrt":
        return _real_sqrtm(Ad) @ b
    if f == "invsqrt":
        return np.linalg.solve(_real_sqrtm(Ad), b)
    return _sign_dense(Ad, b)


def _real_sqrtm(Ad):
    """Principal square root, refusing spectra that touch the closed negative axis."""
    lam = np.linalg.eigvals(Ad)
    bad = lam[(lam.real <= 0) & (np.abs(lam.imag) <= 1e-12 * max(1.0, np.abs(lam).max()))]
    if bad.size:
        raise NegativeRealEigenvalue(float(bad.real.min()))
    return np.real(scipy.linalg.sqrtm(Ad))


def long_arnoldi_reference(A, b, f, M, window=10, tol=1e-12):
    """FOM at dimension ``M``, accepted when it moved by at most ``tol``
    (relative) over the last ``window`` dimensions.

    For ``sign`` the Krylov space of ``A^2`` and ``A b`` is used.

    Raises
    ------
    ReferenceNotConverged
    """
    if window < 1 or M <= window:
        raise ValueError("need M > window >= 1")
    op, start, kind = A, b, MatrixFunctionKind.parse(f) if f != "sign" else None
    if f == "sign":
        op, start, kind = SquaredOperator(A), A.matvec(b), MatrixFunctionKind.InvSqrt
    try:
        dec = arnoldi(op, start, M)
    except Breakdown as exc:
        dec = exc.decomposition
        e1 = np.zeros(dec.m)
        e1[0] = 1.0
        return dec.gamma_b * (dec.V_m @ eval_matfun(kind, dec.H_m, e1))
    approx = []
    for size in (M - window, M):
        e1 = np.zeros(size)
        e1[0] = 1.0
        fe1 = eval_matfun(kind, dec.H_under[:size, :size], e1)
        approx.append(dec.gamma_b * (dec.V[:, :size] @ fe1))
    change = np.linalg.norm(approx[1] - approx[0]) / np.linalg.norm(approx[1])
    if not change <= tol:
        raise ReferenceNotConverged(
            f"FOM reference moved by {change:.3e} over the last {window} dimensions (M = {M})"
        )
    return approx[1]


def compute_reference(A, b, f, rule="Dense", window=10, tol=1e-12):
    """Reference value of ``f(A) b`` under ``rule``; work is not counted.

    Raises
    ------
    ReferenceInfeasible
        Dense rule with ``n >= 10**4``, or ExpmMultiply with ``f != exp``.
    ReferenceNotConverged
        LongArnoldi did not settle.
    """
    name, size = _parse_reference(rule)
    b = np.asarray(b, dtype=np.float64)
    with counting():
        if name == "Dense":
            return dense_reference(A, b, f)
        if name == "ExpmMultiply":
            if f != "exp":
                raise ReferenceInfeasible("ExpmMultiply only supports f = exp")
            return scipy.sparse.linalg.expm_multiply(A.to_scipy().tocsc(), b)
        return long_arnoldi_reference(A, b, f, size, window, tol)


def run_cell(method, problem, ref, m, f, cfg):
    """One (method, m) cell with fresh counters; failures become the status."""
    rec = RunRecord(method=method, problem=problem.spec.name, f=f, m=m)
    t0 = time.perf_counter()
    with counting() as cnt:
        try:
            if f == "sign":
                res = fab_sign(problem.A, problem.b, m, method, cfg)
            else:
                res = run_method(method, problem.A, problem.b, m, f, cfg)
        except Exception as exc:  # noqa: BLE001 - every failure is reported per cell
            res = None
            rec.status = f"failed({type(exc).__name__}: {_one_line(exc)})"
    rec.seconds = time.perf_counter() - t0
    rec.matvecs = cnt.matvecs
    rec.basis_flops = cnt.basis_flops
    rec.sketch_flops = cnt.sketch_flops
    if res is None:
        return rec
    rec.rel_error = float(np.linalg.norm(res.approx - ref) / np.linalg.norm(ref))
    rec.lsq_iterations = res.lsq_report.iterations if res.lsq_report is not None else 0
    rec.cond_sketched_basis = float(res.cond_sketched_basis)
    rec.whitened_at = res.whitened_at
    rec.shift = res.shift
    if not np.isfinite(rec.rel_error):
        rec.status = "failed(non-finite result)"
    return rec


def _one_line(exc):
    return " ".join(str(exc).replace(",", ";").split())


def _fmt_float(x):
    if x is None:
        return ""
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def format_record(rec, extra_columns=False):
    cols = [
        rec.method,
        rec.problem,
        rec.f,
        str(rec.m),
        _fmt_float(rec.rel_error),
        str(rec.matvecs),
        str(rec.basis_flops),
        str(rec.sketch_flops),
        str(rec.lsq_iterations),
        _fmt_float(rec.cond_sketched_basis),
        "" if rec.whitened_at is None else str(rec.whitened_at),
        rec.status,
    ]
    if extra_columns:
        cols += [_fmt_float(rec.seconds), _fmt_float(rec.shift)]
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow(cols)
    return buf.getvalue()


def _header(extra_columns):
    return CSV_HEADER + ("," + EXTRA_HEADER if extra_columns else "") + "\n"


def emit_csv(records, path, extra_columns=False):
    """Write ``records`` (possibly empty) with the fixed header."""
    with open(path, "w", newline="") as fh:
        fh.write(_header(extra_columns))
        for rec in records:
            fh.write(format_record(rec, extra_columns))


def run_sweep(cfg, out=None, problem=None, reference=None, progress=None):
    """Run every (method, m) cell; methods outer, m inner, in config order.

    Rows are written to ``out`` (a path or an open text stream; default
    ``cfg.out``) and flushed as they complete. A path is overwritten, a
    stream is left open. ``problem`` and ``reference`` can be passed in to
    reuse work.
    """
    out = cfg.out if out is None else out
    fh, owned = None, False
    if hasattr(out, "write"):
        fh = out
    elif out is not None:
        fh, owned = open(out, "w", newline=""), True
    if fh is not None:
        fh.write(_header(cfg.extra_columns))
        fh.flush()
    records = []
    try:
        if not cfg.methods or not cfg.m_grid:
            return records
        if problem is None:
            problem = build_problem(cfg.problem)
        f = cfg.problem.f
        if reference is None:
            reference = compute_reference(
                problem.A, problem.b, f, cfg.reference, cfg.reference_window, cfg.reference_tol
            )
        mcfg = cfg.method_config()
        for method in cfg.methods:
            for m in cfg.m_grid:
                rec = run_cell(method, problem, reference, m, f, mcfg)
                records.append(rec)
                if fh is not None:
                    fh.write(format_record(rec, cfg.extra_columns))
                    fh.flush()
                if progress is not None:
                    progress(rec)
    finally:
        if owned:
            fh.close()
    return records


def detect_stagnation(errors, window=10):
    """Index of the first error not improved on by any of the next ``window``.

    ``errors`` is a sequence over consecutive Krylov dimensions; entries that
    are not finite (failed cells) break a candidate window. Returns ``None``
    when the error keeps decreasing.
    """
    e = np.asarray(errors, dtype=np.float64)
    for j in range(e.size - window):
        seg = e[j : j + window + 1]
        if np.all(np.isfinite(seg)) and seg[1:].min() >= seg[0]:
            return j
    return None


_CONFIG_FIELDS = {f.name for f in fields(BenchConfig)} - {"problem"}
_PROBLEM_KEYS = {"problem", "f", "b_rule", "scale"}


def parse_config_file(path):
    """Read a flat ``key = value`` file into a dict of strings.

    Blank lines and ``#`` comments are ignored. Problem parameters are given
    as ``param.<name> = value``.
    """
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in text.split("=", 1))
            key = key.replace("-", "_")
            if not (key in _CONFIG_FIELDS or key in _PROBLEM_KEYS or key.startswith("param.")):
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value
    return values


def _coerce(value):
    """Numbers stay numbers; everything else stays a string."""
    if isinstance(value, str):
        low = value.lower()
        if low in ("true", "false"):
            return low == "true"
        for conv in (int, float):
            try:
                return conv(value)
            except ValueError:
                pass
    return value


def config_from_mapping(values, seed=None):
    """Build a :class:`BenchConfig` from string values (config file + flags).

    The seed comes from ``seed`` if given, else ``values["seed"]``, else the
    ``RANDKRYLOV_SEED`` environment variable, else 0.
    """
    if seed is None:
        seed = values.get("seed")
    if seed is None:
        seed = os.environ.get("RANDKRYLOV_SEED")
    seed = int(seed) if seed is not None else 0
    params = {k[len("param."):]: _coerce(v) for k, v in values.items() if k.startswith("param.")}
    problem = ProblemSpec(
        name=values.get("problem", "diag"),
        params=params,
        f=values.get("f", "exp"),
        b_rule=values.get("b_rule", "RandomUnit"),
        seed=seed,
        scale=float(values.get("scale", 1.0)),
    )
    kw = {}
    if "methods" in values:
        kw["methods"] = [s for s in str(values["methods"]).split(",") if s.strip()]
    if "m_grid" in values:
        kw["m_grid"] = parse_m_grid(values["m_grid"])
    for name, conv in (
        ("sketch_rule", str),
        ("reference", str),
        ("reference_window", int),
        ("reference_tol", float),
        ("out", str),
        ("k", int),
        ("whiten_threshold", float),
        ("lsq_tol", float),
        ("lsq_max_iter", int),
    ):
        if values.get(name) not in (None, ""):
            kw[name] = conv(values[name])
    if "sqrt_shift" in values:
        v = str(values["sqrt_shift"]).strip().lower()
        kw["sqrt_shift"] = None if v in ("", "none", "off") else float(v)
    for name in ("extra_columns", "sketch_reorth"):
        if name in values:
            kw[name] = str(values[name]).strip().lower() in ("1", "true", "yes")
    return BenchConfig(problem=problem, seed=seed, **kw)
