"""Periodic 2D mesh, edge-collocated field storage, and neighbor access.

Edge ownership convention (used everywhere downstream): zone (i, j) covers
[x0 + i dx, x0 + (i+1) dx] x [y0 + j dy, y0 + (j+1) dy] and owns

* jy[i, j, :]  the y-edge at x = x0 + (i+1) dx  (its RIGHT edge), holding
  modal coefficients of the Jy component along that edge, and
* jx[i, j, :]  the x-edge at y = y0 + (j+1) dy  (its TOP edge), holding
  modal coefficients of the Jx component.

Left/bottom edges belong to the (i-1, j) / (i, j-1) neighbors, with periodic
wraparound, so every edge has exactly one owner and both abutting zones see
the same polynomial by construction.

The neighbor-access abstraction at the bottom lets the same operator code
run on a real mesh (roll indexing) or on a single Fourier mode (phase
factors); the stability analysis depends on that.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np

from .basis import EdgeBasis, basis_values, gauss_nodes

# fixed high-order rule for projecting analytic data onto edges; effectively
# exact for the smooth potentials used in the experiments
_INIT_QUAD_POINTS = 24


@dataclass(frozen=True)
class MeshSpec:
    """Uniform periodic mesh on [x0, x0 + nx dx] x [y0, y0 + ny dy]."""

    nx: int
    ny: int
    dx: float
    dy: float
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ValueError("mesh needs nx, ny >= 4 (stencils reach +-2 zones)")
        if not (self.dx > 0 and self.dy > 0):
            raise ValueError("zone sizes must be positive")

    @classmethod
    def square(cls, n, length=1.0, origin=(0.0, 0.0)):
        h = length / n
        return cls(n, n, h, h, origin[0], origin[1])

    # coordinates ------------------------------------------------------
    def yedge_x(self, i):
        """x position of the y-edge owned by zone column i."""
        return self.x0 + (np.asarray(i) + 1.0) * self.dx

    def xedge_y(self, j):
        """y position of the x-edge owned by zone row j."""
        return self.y0 + (np.asarray(j) + 1.0) * self.dy

    def zone_center(self, i, j):
        return (
            self.x0 + (np.asarray(i) + 0.5) * self.dx,
            self.y0 + (np.asarray(j) + 0.5) * self.dy,
        )

    @property
    def domain_area(self):
        return self.nx * self.dx * self.ny * self.dy


@dataclass
class EdgeMomentField:
    """Modal edge data: jy on y-edges, jx on x-edges, arrays (nx, ny, p+1)."""

    mesh: MeshSpec
    degree: int
    jy: np.ndarray = dc_field(repr=False, default=None)
    jx: np.ndarray = dc_field(repr=False, default=None)

    def __post_init__(self):
        shape = (self.mesh.nx, self.mesh.ny, self.degree + 1)
        if self.jy is None:
            self.jy = np.zeros(shape)
        if self.jx is None:
            self.jx = np.zeros(shape)
        if self.jy.shape != shape or self.jx.shape != shape:
            raise ValueError(
                f"edge arrays must have shape {shape}, got {self.jy.shape} / {self.jx.shape}"
            )

    def copy(self):
        return EdgeMomentField(self.mesh, self.degree, self.jy.copy(), self.jx.copy())

    def check_finite(self):
        if not (np.all(np.isfinite(self.jy)) and np.all(np.isfinite(self.jx))):
            raise ValueError("edge moments contain non-finite values")

    def max_abs(self):
        """Max |J| over all edges, sampled at the edge quadrature nodes."""
        basis = EdgeBasis(self.degree)
        vy = np.abs(self.jy @ basis.vand.T).max() if self.jy.size else 0.0
        vx = np.abs(self.jx @ basis.vand.T).max() if self.jx.size else 0.0
        return max(vy, vx)


def init_from_gradient(potential, mesh, degree):
    """Project J = grad(potential) onto the edge basis, edge by edge.

    The mean moment of every edge is computed from potential differences
    at the edge endpoints (the exact line average of the tangential
    derivative), which makes the discrete circulation of every zone vanish
    identically, not just to quadrature accuracy. Higher moments use the
    same trick after integrating by parts against b_m:

        int J b_m dxi = [phi b_m]/h - (1/h) int phi b_m' dxi

    evaluated with a fixed 24-point Gauss rule. `potential` must accept
    numpy arrays and broadcast.
    """
    basis = EdgeBasis(degree)
    nodes, weights = gauss_nodes(_INIT_QUAD_POINTS)
    # derivatives of the basis polynomials at the quadrature nodes
    dcols = [np.zeros_like(nodes)]
    if degree >= 1:
        dcols.append(np.ones_like(nodes))
    if degree >= 2:
        dcols.append(2.0 * nodes)
    if degree >= 3:
        dcols.append(3.0 * nodes ** 2 - 0.15)
    dbvals = np.stack(dcols, axis=-1)              # (Q, p+1)
    b_hi = basis_values(degree, 0.5)               # (p+1,)
    b_lo = basis_values(degree, -0.5)

    fld = EdgeMomentField(mesh, degree)
    ii = np.arange(mesh.nx)
    jj = np.arange(mesh.ny)

    # y-edges: Jy along x = const lines
    xe = mesh.yedge_x(ii)[:, None]                                   # (nx, 1)
    yc = (mesh.y0 + (jj + 0.5) * mesh.dy)[None, :]                   # (1, ny)
    y_hi = yc + 0.5 * mesh.dy
    y_lo = yc - 0.5 * mesh.dy
    phi_hi = potential(xe, y_hi)
    phi_lo = potential(xe, y_lo)
    phi_q = potential(xe[..., None], yc[..., None] + nodes * mesh.dy)  # (nx, ny, Q)
    boundary = phi_hi[..., None] * b_hi - phi_lo[..., None] * b_lo
    body = phi_q @ (weights[:, None] * dbvals)
    fld.jy[...] = (boundary - body) / (mesh.dy * basis.mass)
    fld.jy[..., 0] = (phi_hi - phi_lo) / mesh.dy

    # x-edges: Jx along y = const lines
    ye = mesh.xedge_y(jj)[None, :]                                   # (1, ny)
    xc = (mesh.x0 + (ii + 0.5) * mesh.dx)[:, None]                   # (nx, 1)
    x_hi = xc + 0.5 * mesh.dx
    x_lo = xc - 0.5 * mesh.dx
    phi_hi = potential(x_hi, ye)
    phi_lo = potential(x_lo, ye)
    phi_q = potential(xc[..., None] + nodes * mesh.dx, ye[..., None])
    boundary = phi_hi[..., None] * b_hi - phi_lo[..., None] * b_lo
    body = phi_q @ (weights[:, None] * dbvals)
    fld.jx[...] = (boundary - body) / (mesh.dx * basis.mass)
    fld.jx[..., 0] = (phi_hi - phi_lo) / mesh.dx
    return fld


def circulation_grid(field):
    """Discrete circulation of every zone, shape (nx, ny).

    circ(i,j) = (jy_mean(right) - jy_mean(left))/dx
              - (jx_mean(top) - jx_mean(bottom))/dy
    using zeroth moments only; the mimetic invariant of the update.
    """
    m = field.mesh
    jy0 = field.jy[..., 0]
    jx0 = field.jx[..., 0]
    left = np.roll(jy0, 1, axis=0)
    bottom = np.roll(jx0, 1, axis=1)
    return (jy0 - left) / m.dx - (jx0 - bottom) / m.dy


def discrete_circulation(field, i, j):
    """Circulation of zone (i, j); periodic index wraparound applies."""
    m = field.mesh
    i = i % m.nx
    j = j % m.ny
    jy_r = field.jy[i, j, 0]
    jy_l = field.jy[(i - 1) % m.nx, j, 0]
    jx_t = field.jx[i, j, 0]
    jx_b = field.jx[i, (j - 1) % m.ny, 0]
    return (jy_r - jy_l) / m.dx - (jx_t - jx_b) / m.dy


class PeriodicLattice:
    """Neighbor access on the real mesh: shift(a, di, dj)[i, j] = a[i+di, j+dj]."""

    @staticmethod
    def shift(a, di, dj):
        if di == 0 and dj == 0:
            return a
        return np.roll(a, (-di, -dj), axis=(0, 1))


class FourierLattice:
    """Neighbor access for a single Fourier mode per lattice site.

    Data arrays carry one leading axis of k-points (or none, for scalars
    thx/thy); moving by (di, dj) zones multiplies by
    exp(i (di thx + dj thy)) with thx = kx dx, thy = ky dy, matching the
    convention in which a -x neighbor picks up exp(-i kx dx).
    """

    def __init__(self, thx, thy):
        self.thx = np.asarray(thx, dtype=float)
        self.thy = np.asarray(thy, dtype=float)
        self.px = np.exp(1j * self.thx)
        self.py = np.exp(1j * self.thy)

    def shift(self, a, di, dj):
        if di == 0 and dj == 0:
            return a
        ph = self.px ** di * self.py ** dj
        ph = np.asarray(ph)
        if ph.ndim and ph.ndim < np.ndim(a):
            ph = ph.reshape(ph.shape + (1,) * (np.ndim(a) - ph.ndim))
        return a * ph
