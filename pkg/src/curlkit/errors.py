"""Failure types raised by the solver and the Fourier analysis.

These all indicate an inconsistency in the numerics rather than bad user
input: user input problems are rejected with ValueError at the call site.
"""


class ConstraintViolation(RuntimeError):
    """Discrete circulation of a zone exceeded tolerance before reconstruction.

    The evolution is supposed to keep the loop sum of edge means around
    every zone at machine zero; tripping this means the update (not the
    data) is broken.
    """


class SubspaceNotInvariant(RuntimeError):
    """The Fourier-space operator mapped the constrained subspace outside itself.

    Signals an inconsistent pairing of reconstruction preconditions and
    constraint functionals when assembling the analysis matrix.
    """


class EigenNoConvergence(RuntimeError):
    """Eigenvalue iteration failed to converge (usually NaN pollution)."""


class DegenerateMode(RuntimeError):
    """Exact amplification has no phase (wave vector perpendicular to velocity).

    Dispersion sweeps handle this by flagging the row and reporting the
    absolute phase instead of a relative phase error; the exception type
    exists for callers that ask for a relative error unconditionally.
    """


class Blowup(RuntimeError):
    """A time-stepping run produced a non-finite value."""

    def __init__(self, step, time):
        self.step = step
        self.time = time
        super().__init__(f"non-finite field at step {step}, t={time:.6g}")
