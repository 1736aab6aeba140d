"""Upwinded potentials driving the moment updates.

Two flavors, both for constant advection velocity:

* vertex potentials phi** = vx Jx_up + vy Jy_up at zone corners, picking
  the upwind edge independently in each direction (exact quadrant
  upwinding; a zero component averages the two candidates), and
* edge potential profiles phi* along an edge: the edge's own single-valued
  component plus the transverse component taken from the upwind abutting
  zone's interior reconstruction, evaluated on the edge line.

The mean-only fourth-order member replaces the first flavor with wide
interface states: each vertex candidate is the degree-six interpolant of
seven consecutive means along the edge line, evaluated at the vertex.
Endpoints of completed cubics turn out to be too short a stencil for that
scheme; the wide states give it both its stability margin and its better
than fourth-order truncation error.

The vectorized variants at the bottom run on either lattice flavor and are
what the semidiscrete operator calls; the scalar functions are the
reference definitions the vectorized ones are tested against.
"""

from functools import lru_cache
from types import SimpleNamespace

import numpy as np

from .basis import EdgeBasis, basis_values, eval_edge_poly
from .reconstruction import gradient_eval_matrix


@lru_cache(maxsize=None)
def operator_tables(degree):
    """Constant matrices for degree-M flux evaluation (dimensionless)."""
    basis = EdgeBasis(degree)
    nodes = basis.nodes
    e_plus = basis_values(degree, 0.5)
    e_minus = basis_values(degree, -0.5)
    half = np.full_like(nodes, 0.5)
    dxr = gradient_eval_matrix(degree, np.stack([half, nodes], axis=-1))[0]
    dxl = gradient_eval_matrix(degree, np.stack([-half, nodes], axis=-1))[0]
    dyt = gradient_eval_matrix(degree, np.stack([nodes, half], axis=-1))[1]
    dyb = gradient_eval_matrix(degree, np.stack([nodes, -half], axis=-1))[1]
    w = basis.weights
    return SimpleNamespace(
        basis=basis,
        nodes=nodes,
        e_plus=e_plus,
        e_minus=e_minus,
        dxr=dxr,
        dxl=dxl,
        dyt=dyt,
        dyb=dyb,
        w0=w,
        w1=w * nodes,
        w2=w * (nodes ** 2 - 0.05),
    )


def _select(vcomp, minus_side, plus_side):
    """Upwind pick: minus_side when vcomp > 0 (flow from the minus side)."""
    if vcomp > 0:
        return minus_side
    if vcomp < 0:
        return plus_side
    return 0.5 * (minus_side + plus_side)


def vertex_potential(field, vertex, v):
    """phi** at the vertex shared by zones (i,j), (i+1,j), (i,j+1), (i+1,j+1).

    Vertex (i, j) sits at (x0 + (i+1) dx, y0 + (j+1) dy): the corner where
    zone (i, j)'s right y-edge meets its top x-edge.
    """
    m = field.mesh
    i, j = vertex[0] % m.nx, vertex[1] % m.ny
    vx, vy = v
    x_from_left = eval_edge_poly(field.jx[i, j], 0.5)
    x_from_right = eval_edge_poly(field.jx[(i + 1) % m.nx, j], -0.5)
    y_from_below = eval_edge_poly(field.jy[i, j], 0.5)
    y_from_above = eval_edge_poly(field.jy[i, (j + 1) % m.ny], -0.5)
    return vx * _select(vx, x_from_left, x_from_right) + vy * _select(
        vy, y_from_below, y_from_above
    )


def edge_potential_profile(field, recon_minus, recon_plus, edge, v, nodes=None):
    """phi* at quadrature nodes of one edge.

    edge = ("y", i, j) or ("x", i, j); recon_minus / recon_plus are the
    abutting zones' reconstructions on the negative / positive side of the
    edge (left/right for y-edges, below/above for x-edges).
    """
    m = field.mesh
    kind, i, j = edge
    i, j = i % m.nx, j % m.ny
    vx, vy = v
    if nodes is None:
        nodes = EdgeBasis(field.degree).nodes
    if kind == "y":
        xe = m.yedge_x(i)
        yc = m.y0 + (j + 0.5) * m.dy
        pts_y = yc + nodes * m.dy
        own = eval_edge_poly(field.jy[i, j], nodes)
        jx_minus = recon_minus.eval(np.full_like(pts_y, xe), pts_y)[0]
        jx_plus = recon_plus.eval(np.full_like(pts_y, xe), pts_y)[0]
        return vx * _select(vx, jx_minus, jx_plus) + vy * own
    if kind == "x":
        ye = m.xedge_y(j)
        xc = m.x0 + (i + 0.5) * m.dx
        pts_x = xc + nodes * m.dx
        own = eval_edge_poly(field.jx[i, j], nodes)
        jy_minus = recon_minus.eval(pts_x, np.full_like(pts_x, ye))[1]
        jy_plus = recon_plus.eval(pts_x, np.full_like(pts_x, ye))[1]
        return vy * _select(vy, jy_minus, jy_plus) + vx * own
    raise ValueError(f"edge kind must be 'x' or 'y', got {kind!r}")


def edge_body_integrals(phi_star, degree):
    """Line-averaged moments (<phi*>, <xi phi*>, <(xi^2 - 1/20) phi*>).

    phi_star holds values at the degree's p+2 quadrature nodes (last axis);
    degree-p updates consume the first p of the three entries.
    """
    t = operator_tables(degree)
    phi_star = np.asarray(phi_star)
    return phi_star @ t.w0, phi_star @ t.w1, phi_star @ t.w2


# ----------------------------------------------------------------------
# vectorized versions used by the semidiscrete operator


def vertex_potential_grid(jy, jx, v, lattice, tables):
    """phi** for every vertex; entry (i, j) is zone (i, j)'s top-right corner."""
    vx, vy = v
    x_up = 0.0
    if vx != 0:
        x_minus = jx @ tables.e_plus
        x_plus = lattice.shift(jx, 1, 0) @ tables.e_minus
        x_up = _select(vx, x_minus, x_plus)
    y_up = 0.0
    if vy != 0:
        y_minus = jy @ tables.e_plus
        y_plus = lattice.shift(jy, 0, 1) @ tables.e_minus
        y_up = _select(vy, y_minus, y_plus)
    phi = vx * x_up + vy * y_up
    if np.ndim(phi) == 0:
        phi = np.zeros(jy.shape[:-1], dtype=jy.dtype)
    return phi


def edge_star_grids(jy, jx, coeffs, v, dx, dy, lattice, tables):
    """phi* node values on all y-edges and x-edges: arrays (..., p+2)."""
    vx, vy = v

    phi_y = vy * (jy @ tables.basis.vand.T) if vy != 0 else 0.0
    if vx != 0:
        side_minus = (coeffs @ tables.dxr.T) / dx
        side_plus = (lattice.shift(coeffs, 1, 0) @ tables.dxl.T) / dx
        phi_y = phi_y + vx * _select(vx, side_minus, side_plus)

    phi_x = vx * (jx @ tables.basis.vand.T) if vx != 0 else 0.0
    if vy != 0:
        side_minus = (coeffs @ tables.dyt.T) / dy
        side_plus = (lattice.shift(coeffs, 0, 1) @ tables.dyb.T) / dy
        phi_x = phi_x + vy * _select(vy, side_minus, side_plus)

    shape = jy.shape[:-1] + (len(tables.nodes),)
    if np.ndim(phi_y) == 0:
        phi_y = np.zeros(shape, dtype=jy.dtype)
    if np.ndim(phi_x) == 0:
        phi_x = np.zeros(shape, dtype=jx.dtype)
    return phi_y, phi_x
