"""Operation counters for cost telemetry.

A :class:`Counters` instance is made active with :func:`counting`; kernels
report their work through :func:`tally`. Counting is scoped by a context
variable, so independent runs (threads, tasks) keep separate tallies.

Units: ``matvecs`` counts applications of the sparse matrix A.
``basis_flops`` counts multiply-adds on length-n vectors spent computing
orthogonalization coefficients (inner products and norms); the sketched
Gram-Schmidt builder takes its coefficients from the sketch, so for it the
length-n combination ``V r`` is counted instead (twice with the stabilized
step), as is the ``V R^{-1}`` product of a whitening step. ``sketch_flops``
counts ``N log2 N`` per fast Walsh-Hadamard transform of length N.
"""

from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass

__all__ = ["Counters", "counting", "tally", "active"]


@dataclass
class Counters:
    matvecs: int = 0
    basis_flops: int = 0
    sketch_flops: int = 0

    def snapshot(self):
        return Counters(self.matvecs, self.basis_flops, self.sketch_flops)


_ACTIVE: ContextVar = ContextVar("randkrylov_counters", default=None)


@contextmanager
def counting(counters=None, propagate=False):
    """Activate ``counters`` (a fresh one by default) for the enclosed block.

    With ``propagate=True`` the tallies are also added to the counters that
    were active outside the block.
    """
    counters = Counters() if counters is None else counters
    parent = _ACTIVE.get()
    token = _ACTIVE.set(counters)
    try:
        yield counters
    finally:
        _ACTIVE.reset(token)
        if propagate and parent is not None:
            parent.matvecs += counters.matvecs
            parent.basis_flops += counters.basis_flops
            parent.sketch_flops += counters.sketch_flops


def active():
    return _ACTIVE.get()


def tally(matvecs=0, basis_flops=0, sketch_flops=0):
    c = _ACTIVE.get()
    if c is None:
        return
    c.matvecs += matvecs
    c.basis_flops += basis_flops
    c.sketch_flops += sketch_flops
