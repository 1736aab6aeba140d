"""Curl-free interior reconstruction and PNPM moment completion.

Interior reconstruction
-----------------------
Inside a zone the vector field is represented as the gradient of a scalar
potential

    psi(x, y) = sum c_ab xhat^a yhat^b,   xhat = (x - xc)/dx, yhat = (y - yc)/dy,

so J = grad(psi) is curl-free by construction. The coefficient set runs over
0 <= a, b <= p+1 with (a, b) != (0, 0) and min(a, b) <= 1: monomials with
both exponents >= 2 span exactly the "bubble" potentials whose tangential
gradient traces vanish on all four edges, so a zone's own edge data cannot
determine them. What remains is a square-ish trace-matching system

    T c = [dy*jy_right, dy*jy_left, dx*jx_top, dx*jx_bottom]   (modal traces)

with 4(p+1) equations, 4p+3 unknowns, full column rank, and a single
compatibility condition: the mean circulation of the four edges, which the
evolution keeps at machine zero. The pseudo-inverse of T therefore produces
the unique exact-trace solution whenever the data is circulation-free, and
it is precomputed once per degree (T is dimensionless; zone sizes enter
only through the right-hand-side scaling).

For p <= 2 the bubble modes are pinned to zero (their absence only shows up
beyond the scheme's design order). At p = 3 exactly one bubble keeps the
gradient inside total degree 3, the (x^2-1/4)(y^2-1/4) potential, and
pinning it would cap the fourth-order scheme's dissipation at the same h^4
floor as the third-order one: it carries the x^2 y^2 content of a smooth
potential and its normal derivatives feed the transverse part of the
upwind fluxes. The whole-mesh path therefore recovers it volumetrically:
edge means are exact vertex-potential differences, so a tensorized
sixth-order central difference of the (gauge-free) vertex potential
estimates the amplitude. The stencil annihilates every trace-determined
monomial and restores exactness for all potentials of total degree <= 4.
Sixth order is where the damping floor stops moving: a second-order row
leaves a factor-three dissipation excess at marginally resolved
wavelengths, an eighth-order row changes nothing visible. The single-zone
entry point has no neighbor data and keeps the bubble at zero.

Moment completion (PNPM)
------------------------
Schemes that evolve only degrees <= N reconstruct the missing edge moments
up to M from neighbors along the edge's own grid line, treating edge means
as 1D cell averages:

    N=0: each missing moment from the narrowest centered stencil of means
         that is exact on cubic data. The curvature rule (m_{+1} - 2 m +
         m_{-1})/2 already is; the slope rule (m_{+1} - m_{-1})/2 is not,
         so at M=3 the odd moments switch to the width-5 rows that are
         (they are unique there by parity).
    N=1: at M=2 the curvature of the parabola through the three means,
         (m_{+1} - 2 m + m_{-1})/2, with the evolved slope riding along.
         At M=3 both missing moments come from the evolved slope field
         instead: curvature (s_{+1} - s_{-1})/4 and cube
         (s_{+1} - 2 s + s_{-1})/6, the unique cubic interpolating own
         mean and all three slopes. Mean-based alternatives exist at M=3
         (own mean, own slope, both neighbor means) but overdamp the
         resolved band by a third; the slope-interpolating rule keeps the
         damping of the marginally resolved wavelengths in line with the
         scheme's design order, as the stability tables record.

All stencils are linear with fixed weights, so they apply unchanged to the
complex Fourier-mode fields used by the stability analysis.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .basis import MASS, basis_values, gauss_nodes
from .errors import ConstraintViolation
from .mesh import EdgeMomentField, PeriodicLattice

CIRCULATION_RTOL = 1e-10


@lru_cache(maxsize=None)
def potential_monomials(degree):
    """Ordered (a, b) exponent pairs of the potential ansatz at this degree."""
    out = []
    for a in range(degree + 2):
        for b in range(degree + 2):
            if (a, b) != (0, 0) and min(a, b) <= 1:
                out.append((a, b))
    return tuple(out)


# the one extra monomial reachable through the volumetric bubble recovery
BUBBLE_MONOMIALS = ((2, 2),)

# sixth-order central first-difference row, normalized like m_{+1} - m_{-1}
D6 = {-3: -1.0 / 30.0, -2: 0.3, -1: -1.5, 1: 1.5, 2: -0.3, 3: 1.0 / 30.0}


@lru_cache(maxsize=None)
def evaluation_monomials(degree):
    """Monomial list the coefficient vectors are expressed in.

    Identical to the trace ansatz except at degree 3, where the bubble
    monomial is appended for the volumetrically recovered mode.
    """
    mono = potential_monomials(degree)
    if degree == 3:
        mono = mono + BUBBLE_MONOMIALS
    return mono


@lru_cache(maxsize=None)
def bubble_basis():
    """Row expanding the p=3 bubble onto evaluation_monomials(3).

    The bubble is (xhat^2 - 1/4)(yhat^2 - 1/4), the only endpoint-vanishing
    product f(xhat) g(yhat) whose gradient stays inside total degree 3:
    every tangential trace and every corner gradient vanishes, so adding
    it never perturbs the edge data or the vertex potentials.
    """
    mono = evaluation_monomials(3)
    col = {ab: i for i, ab in enumerate(mono)}
    quad = {2: 1.0, 0: -0.25}
    rows = np.zeros((1, len(mono)))
    for a, wa in quad.items():
        for b, wb in quad.items():
            if (a, b) != (0, 0):
                rows[0, col[a, b]] = wa * wb
    return rows


def bubble_amplitudes(jy0, jx0, dx, dy, lattice):
    """Bubble amplitude of every zone from neighbor edge means, shape (..., 1).

    The mean of an edge is the potential difference between its endpoint
    vertices, so the corner block M(a, b) = psi(TR) - psi(TL) - psi(BR) + psi(BL)
    of zone (i+a, j+b) is a single mean difference; averaging the jy- and
    jx-based forms keeps the x/y symmetry exact. The tensorized difference
    D6 x D6 of those blocks isolates the x^2 y^2 content: by parity the row
    annihilates even powers, so every trace-determined monomial maps to
    exactly zero amplitude. M is translation equivariant, which makes the
    two passes separable.
    """
    my = dy * (jy0 - lattice.shift(jy0, -1, 0))
    mx = dx * (jx0 - lattice.shift(jx0, 0, -1))
    block = 0.5 * (my + mx)
    along = None
    for a, wa in D6.items():
        t = wa * lattice.shift(block, a, 0)
        along = t if along is None else along + t
    acc = None
    for b, wb in D6.items():
        t = wb * lattice.shift(along, 0, b)
        acc = t if acc is None else acc + t
    return (acc / 16.0)[..., None]


def _trace_rows(degree, mono, along_is_y, fixed):
    """Modal trace rows of one edge: (degree+1) x ncoef.

    along_is_y: True for y-edges (trace of d(psi)/d(yhat) in eta), False for
    x-edges. fixed: the transverse coordinate value, +-1/2.
    """
    nodes, weights = gauss_nodes(degree + 2)
    bv = basis_values(degree, nodes)                      # (Q, p+1)
    rows = np.zeros((degree + 1, len(mono)))
    for c, (a, b) in enumerate(mono):
        if along_is_y:
            if b == 0:
                continue
            trace = b * fixed ** a * nodes ** (b - 1)
        else:
            if a == 0:
                continue
            trace = a * nodes ** (a - 1) * fixed ** b
        rows[:, c] = (bv.T * weights) @ trace / MASS[: degree + 1]
    return rows


@lru_cache(maxsize=None)
def trace_system(degree):
    """(T, pinv(T), left_null) for the dimensionless trace-matching system.

    Row blocks: right, left, top, bottom edge moments, each degree+1 rows.
    left_null spans ker(T^T): the mean-circulation compatibility pattern.
    """
    mono = potential_monomials(degree)
    blocks = [
        _trace_rows(degree, mono, True, +0.5),    # right  (dy * jy)
        _trace_rows(degree, mono, True, -0.5),    # left
        _trace_rows(degree, mono, False, +0.5),   # top    (dx * jx)
        _trace_rows(degree, mono, False, -0.5),   # bottom
    ]
    T = np.vstack(blocks)
    u, s, vh = np.linalg.svd(T, full_matrices=True)
    if np.sum(s > 1e-10 * s[0]) != len(mono):
        raise AssertionError("trace system lost column rank; ansatz is wrong")
    pinv = np.linalg.pinv(T, rcond=1e-12)
    left_null = u[:, len(mono):]
    if left_null.shape[1] != 1:
        raise AssertionError("expected exactly one compatibility condition")
    return T, pinv, left_null[:, 0]


def gradient_eval_matrix(degree, points):
    """Dimensionless gradient evaluation at (xhat, yhat) points.

    Returns (Gx, Gy), each (len(points), ncoef), with
    Jx = (coeffs @ Gx.T)/dx and Jy = (coeffs @ Gy.T)/dy.
    """
    mono = evaluation_monomials(degree)
    pts = np.asarray(points, dtype=float)
    gx = np.zeros((len(pts), len(mono)))
    gy = np.zeros_like(gx)
    for c, (a, b) in enumerate(mono):
        if a > 0:
            gx[:, c] = a * pts[:, 0] ** (a - 1) * pts[:, 1] ** b
        if b > 0:
            gy[:, c] = b * pts[:, 0] ** a * pts[:, 1] ** (b - 1)
    return gx, gy


@dataclass
class ZoneReconstruction:
    """Curl-free polynomial field of one zone, J = grad(psi)."""

    coeffs: np.ndarray
    degree: int
    dx: float
    dy: float
    center: tuple = (0.0, 0.0)

    def eval(self, x, y):
        """(Jx, Jy) at physical points inside the zone's bounding box."""
        xh = (np.asarray(x, dtype=float) - self.center[0]) / self.dx
        yh = (np.asarray(y, dtype=float) - self.center[1]) / self.dy
        pts = np.stack([np.ravel(xh), np.ravel(yh)], axis=-1)
        gx, gy = gradient_eval_matrix(self.degree, pts)
        jx = (gx @ self.coeffs) / self.dx
        jy = (gy @ self.coeffs) / self.dy
        if np.ndim(x) == 0:
            return jx[0], jy[0]
        return jx.reshape(np.shape(x)), jy.reshape(np.shape(y))


def eval_reconstruction(recon, x, y):
    return recon.eval(x, y)


def reconstruct_zone(jy_right, jy_left, jx_top, jx_bottom, degree, dx, dy, center=(0.0, 0.0)):
    """Solve the trace system of one zone from its four edge polynomials.

    Raises ConstraintViolation if the edge means carry measurable
    circulation; the remaining system then has an exact, unique solution.
    """
    jy_right, jy_left, jx_top, jx_bottom = (
        np.asarray(v) for v in (jy_right, jy_left, jx_top, jx_bottom)
    )
    scale = max(np.abs(v).max() for v in (jy_right, jy_left, jx_top, jx_bottom))
    circ = (jy_right[0] - jy_left[0]) / dx - (jx_top[0] - jx_bottom[0]) / dy
    if scale > 0 and abs(circ) > CIRCULATION_RTOL * scale:
        raise ConstraintViolation(
            f"zone circulation {circ:.3e} exceeds {CIRCULATION_RTOL:.0e} * {scale:.3e}"
        )
    _, pinv, _ = trace_system(degree)
    t = np.concatenate([dy * jy_right, dy * jy_left, dx * jx_top, dx * jx_bottom])
    coeffs = pinv @ t
    pad = len(evaluation_monomials(degree)) - len(coeffs)
    if pad:
        coeffs = np.concatenate([coeffs, np.zeros(pad, dtype=coeffs.dtype)])
    return ZoneReconstruction(coeffs, degree, dx, dy, center)


# ----------------------------------------------------------------------
# vectorized whole-mesh reconstruction (shares the cached pinv)


def zone_coefficients(jy, jx, dx, dy, degree, lattice=PeriodicLattice()):
    """Potential coefficients of every zone, shape (..., ncoef).

    jy, jx are edge arrays of matching shape (..., degree+1) living on the
    given lattice; zone (i, j) gathers its right/left y-edges and top/bottom
    x-edges through lattice shifts. Coefficients run over
    evaluation_monomials(degree): at degree 3 the trace solve is followed by
    the volumetric bubble recovery, which widens the vector by four.
    """
    t = np.concatenate(
        [
            dy * jy,
            dy * lattice.shift(jy, -1, 0),
            dx * jx,
            dx * lattice.shift(jx, 0, -1),
        ],
        axis=-1,
    )
    _, pinv, _ = trace_system(degree)
    coeffs = t @ pinv.T
    if degree == 3:
        beta = bubble_amplitudes(jy[..., 0], jx[..., 0], dx, dy, lattice)
        full = beta @ bubble_basis()
        full[..., : coeffs.shape[-1]] += coeffs
        return full
    return coeffs


class ReconstructionGrid:
    """All-zone reconstruction of a real-space field, with batch evaluation."""

    def __init__(self, field):
        self.mesh = field.mesh
        self.degree = field.degree
        self.coeffs = zone_coefficients(
            field.jy, field.jx, self.mesh.dx, self.mesh.dy, field.degree
        )

    def eval_at_offsets(self, xhat, yhat):
        """(Jx, Jy) arrays of shape (nx, ny, P) at per-zone offsets.

        xhat, yhat are flat arrays of normalized in-zone coordinates in
        [-1/2, 1/2], shared by every zone.
        """
        pts = np.stack([np.ravel(xhat), np.ravel(yhat)], axis=-1)
        gx, gy = gradient_eval_matrix(self.degree, pts)
        jx = self.coeffs @ gx.T / self.mesh.dx
        jy = self.coeffs @ gy.T / self.mesh.dy
        return jx, jy


# ----------------------------------------------------------------------
# PNPM completion stencils


def completion_weights(n_evolved, target):
    """Human-readable stencil table {moment: {key: weight}}.

    Integer keys address edge means at that offset along the line;
    ("slope", j) keys address the evolved slope moment at offset j.
    """
    if n_evolved == 0:
        out = {1: {-1: -0.5, 1: 0.5}}
        if target >= 2:
            out[2] = {-1: 0.5, 0: -1.0, 1: 0.5}
        if target >= 3:
            out[1] = {-2: 11.0 / 120.0, -1: -41.0 / 60.0,
                      1: 41.0 / 60.0, 2: -11.0 / 120.0}
            out[3] = {-2: -1.0 / 12.0, -1: 1.0 / 6.0,
                      1: -1.0 / 6.0, 2: 1.0 / 12.0}
        return out
    if n_evolved == 1:
        if target == 2:
            return {2: {-1: 0.5, 0: -1.0, 1: 0.5}}
        return {
            2: {("slope", -1): -0.25, ("slope", 1): 0.25},
            3: {("slope", -1): 1.0 / 6.0, ("slope", 0): -1.0 / 3.0,
                ("slope", 1): 1.0 / 6.0},
        }
    raise ValueError("completion defined for evolved degree 0 or 1 only")


def _complete_edge_array(arr, n_evolved, target, shift1):
    """Fill moments n_evolved+1..target of one edge family.

    arr has shape (..., n_evolved+1); shift1(a, s) moves data s edges along
    the edge's own grid line. Returns shape (..., target+1).
    """
    m = arr[..., 0]
    out = np.zeros(arr.shape[:-1] + (target + 1,), dtype=arr.dtype)
    out[..., : n_evolved + 1] = arr
    if n_evolved == 0:
        mp, mm = shift1(m, 1), shift1(m, -1)
        out[..., 1] = 0.5 * (mp - mm)
        if target >= 2:
            out[..., 2] = 0.5 * (mp - 2.0 * m + mm)
        if target >= 3:
            mpp, mmm = shift1(m, 2), shift1(m, -2)
            out[..., 1] = (41.0 / 60.0) * (mp - mm) - (11.0 / 120.0) * (mpp - mmm)
            out[..., 3] = (1.0 / 12.0) * (mpp - mmm) - (1.0 / 6.0) * (mp - mm)
    else:
        s = arr[..., 1]
        if target == 2:
            mp, mm = shift1(m, 1), shift1(m, -1)
            out[..., 2] = 0.5 * (mp + mm) - m
        else:
            sp, sm = shift1(s, 1), shift1(s, -1)
            out[..., 2] = 0.25 * (sp - sm)
            out[..., 3] = (sp - 2.0 * s + sm) / 6.0
    return out


def complete_pair(jy, jx, n_evolved, target, lattice=PeriodicLattice()):
    """Complete both edge families to the target degree on any lattice."""
    if n_evolved == target:
        return jy, jx
    if n_evolved not in (0, 1) or not n_evolved < target <= 3:
        raise ValueError(f"unsupported completion N={n_evolved} -> M={target}")
    jy_full = _complete_edge_array(
        jy, n_evolved, target, lambda a, s: lattice.shift(a, 0, s)
    )
    jx_full = _complete_edge_array(
        jx, n_evolved, target, lambda a, s: lattice.shift(a, s, 0)
    )
    return jy_full, jx_full


def complete_moments(field, target):
    """EdgeMomentField of degree N -> degree `target` (evolved moments kept)."""
    jy, jx = complete_pair(field.jy, field.jx, field.degree, target)
    return EdgeMomentField(field.mesh, target, jy.copy(), jx.copy())
