"""Moment update right-hand side for the curl-free advection schemes.

One evaluation, identical for the real mesh and for Fourier modes:

1. complete moments to the reconstruction degree M (identity for DG),
2. check the mean-circulation precondition and build every zone's
   curl-free interior reconstruction,
3. upwinded vertex potentials phi** and edge potential profiles phi*,
4. modal updates per edge; for a y-edge of length dy:

       d<J0>/dt = -(phiT - phiB)/dy
       dJ1/dt   = 12 [ -(phiT + phiB)/(2 dy) + <phi*>/dy ]
       dJ2/dt   = 180 [ -(phiT - phiB)/(6 dy) + 2 <xi phi*>/dy ]
       dJ3/dt   = 2800 [ -(phiT + phiB)/(20 dy) + 3 <(xi^2 - 1/20) phi*>/dy ]

   (phiT/phiB the vertex potentials at its ends; note the odd moments
   carry SUMS of the vertex potentials), mirrored for x-edges with dx and
   right/left vertices. Only the evolved degrees <= N are returned.

The output is linear in the edge data, which is what lets the Fourier
analysis push basis vectors through this exact code path.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConstraintViolation
from .mesh import EdgeMomentField, PeriodicLattice
from .reconstruction import complete_pair, zone_coefficients
from .upwind import edge_star_grids, operator_tables, vertex_potential_grid

_REAL_LATTICE = PeriodicLattice()


@dataclass(frozen=True)
class SchemeSpec:
    """Discretization choice: family, evolved degree N, target degree M."""

    family: str                 # "dg" or "pnpm"
    n_evolved: int
    target: int = None
    rk: str = None
    cfl_fraction: float = 0.95

    def __post_init__(self):
        if self.family not in ("dg", "pnpm"):
            raise ValueError(f"unknown scheme family {self.family!r}")
        if self.target is None:
            object.__setattr__(self, "target", self.n_evolved)
        if not 0 <= self.n_evolved <= self.target <= 3:
            raise ValueError("need 0 <= N <= M <= 3")
        if self.family == "dg" and self.n_evolved != self.target:
            raise ValueError("DG evolves all moments: N must equal M")
        if self.family == "pnpm" and self.n_evolved > 1:
            raise ValueError("PNPM completion is defined for N in {0, 1}")
        if not 0.0 < self.cfl_fraction <= 1.0:
            raise ValueError("cfl_fraction must lie in (0, 1]")

    @property
    def label(self):
        return f"P{self.n_evolved}P{self.target}"


def check_circulation(jy, jx, dx, dy, lattice):
    """Raise ConstraintViolation if any zone carries measurable circulation."""
    jy0 = jy[..., 0]
    jx0 = jx[..., 0]
    circ = (jy0 - lattice.shift(jy0, -1, 0)) / dx - (jx0 - lattice.shift(jx0, 0, -1)) / dy
    scale = max(np.abs(jy).max(), np.abs(jx).max())
    worst = np.abs(circ).max()
    if scale > 0 and worst > 1e-10 * scale:
        raise ConstraintViolation(
            f"max zone circulation {worst:.3e} exceeds 1e-10 * {scale:.3e}"
        )


def rhs_pair(jy, jx, n_evolved, target, v, dx, dy, lattice=_REAL_LATTICE, check=True):
    """Time derivative of the evolved moments; arrays shaped like the inputs."""
    vx, vy = v
    jy_m, jx_m = complete_pair(jy, jx, n_evolved, target, lattice)
    if check:
        check_circulation(jy_m, jx_m, dx, dy, lattice)
    t = operator_tables(target)
    phi = vertex_potential_grid(jy_m, jx_m, (vx, vy), lattice, t)
    if n_evolved >= 1:
        # mean-only members never consume the edge profiles, so the zone
        # reconstruction is skipped for them entirely
        coeffs = zone_coefficients(jy_m, jx_m, dx, dy, target, lattice)
        star_y, star_x = edge_star_grids(
            jy_m, jx_m, coeffs, (vx, vy), dx, dy, lattice, t
        )

    phi_b = lattice.shift(phi, 0, -1)   # vertex below a y-edge's top vertex
    phi_l = lattice.shift(phi, -1, 0)   # vertex left of an x-edge's right vertex

    djy = np.empty(jy.shape, dtype=np.result_type(jy, phi))
    djx = np.empty_like(djy)
    djy[..., 0] = -(phi - phi_b) / dy
    djx[..., 0] = -(phi - phi_l) / dx
    if n_evolved >= 1:
        djy[..., 1] = 12.0 * (-(phi + phi_b) / (2.0 * dy) + (star_y @ t.w0) / dy)
        djx[..., 1] = 12.0 * (-(phi + phi_l) / (2.0 * dx) + (star_x @ t.w0) / dx)
    if n_evolved >= 2:
        djy[..., 2] = 180.0 * (-(phi - phi_b) / (6.0 * dy) + 2.0 * (star_y @ t.w1) / dy)
        djx[..., 2] = 180.0 * (-(phi - phi_l) / (6.0 * dx) + 2.0 * (star_x @ t.w1) / dx)
    if n_evolved >= 3:
        djy[..., 3] = 2800.0 * (-(phi + phi_b) / (20.0 * dy) + 3.0 * (star_y @ t.w2) / dy)
        djx[..., 3] = 2800.0 * (-(phi + phi_l) / (20.0 * dx) + 3.0 * (star_x @ t.w2) / dx)
    return djy, djx


def rhs(field, spec, v, check=True):
    """Public real-space evaluation: EdgeMomentField -> EdgeMomentField."""
    if field.degree != spec.n_evolved:
        raise ValueError(
            f"field degree {field.degree} does not match evolved degree {spec.n_evolved}"
        )
    m = field.mesh
    djy, djx = rhs_pair(
        field.jy, field.jx, spec.n_evolved, spec.target, v, m.dx, m.dy, check=check
    )
    return EdgeMomentField(m, spec.n_evolved, djy, djx)


def pack(field):
    """Stack (jy, jx) into one state array for the time integrator."""
    return np.stack([field.jy, field.jx])


def unpack(u, mesh, degree):
    return EdgeMomentField(mesh, degree, u[0], u[1])


def make_rhs_operator(mesh, spec, v, check=True):
    """Packed-state operator u -> du/dt used by the time stepper."""

    def op(u):
        djy, djx = rhs_pair(
            u[0], u[1], spec.n_evolved, spec.target, v, mesh.dx, mesh.dy, check=check
        )
        return np.stack([djy, djx])

    return op


def total_quadratic_energy(field, spec=None):
    """Domain integral of (Jx^2 + Jy^2)/2 over the interior reconstructions.

    Uses the scheme's reconstruction degree (after completion for PNPM) and
    an (M+2)^2 tensor Gauss rule per zone.
    """
    from .reconstruction import complete_moments

    work = field
    if spec is not None and spec.target > field.degree:
        work = complete_moments(field, spec.target)
    deg = work.degree
    t = operator_tables(deg)
    nodes, w = t.nodes, t.basis.weights
    X, Y = np.meshgrid(nodes, nodes, indexing="ij")
    W = np.outer(w, w).ravel()
    from .reconstruction import ReconstructionGrid

    grid = ReconstructionGrid(work)
    jx_v, jy_v = grid.eval_at_offsets(X.ravel(), Y.ravel())
    dens = 0.5 * (jx_v ** 2 + jy_v ** 2)
    mesh = field.mesh
    return float((dens @ W).sum() * mesh.dx * mesh.dy)
