"""curlkit: curl-free edge-collocated advection schemes on periodic 2D meshes.

The package has two halves that share one discrete operator:

* a real-space solver (mesh, reconstruction, upwinded potentials, moment
  updates, SSP Runge-Kutta) for the constant-velocity curl-free model
  equation, and
* a Fourier-space laboratory that pushes unit modes through the same
  operator code to obtain amplification matrices, maximal CFL numbers,
  stability maps and dissipation/dispersion data.

See README.md for the command line interface.
"""

from .errors import (
    Blowup,
    ConstraintViolation,
    DegenerateMode,
    EigenNoConvergence,
    SubspaceNotInvariant,
)

__version__ = "0.1.0"

__all__ = [
    "Blowup",
    "ConstraintViolation",
    "DegenerateMode",
    "EigenNoConvergence",
    "SubspaceNotInvariant",
    "__version__",
]
