"""Fourier-space analysis of the edge-moment advection operator.

A single Fourier mode carries one complex moment vector per edge family;
neighbor zones differ only by phase factors (a -x neighbor multiplies by
exp(-i kx dx)). Pushing basis vectors through the ordinary rhs code with a
FourierLattice therefore yields the per-mode ODE matrix of the scheme with
no separate symbolic derivation: the analyzed operator is the implemented
operator by construction.

The edge moments of one zone are not independent: the reconstruction
requires the mean circulation to vanish, which for a Fourier mode becomes
one complex-linear functional W(k) of the zone's own moments. Analysis is
restricted to the orthonormal null space B of W (computed by SVD); the
reduced matrix is A = B^H L B, and a residual check certifies that the
full operator maps range(B) into itself. At the zero mode W vanishes and
B is the identity.

Amplification matrices G come from running the shared Runge-Kutta stage
recursion on A, so the stability results describe exactly the time stepper
used on the mesh. CFL limits, stability maps and dispersion tables are
sweeps over modes built on top of that.

Eigenvalue bookkeeping: G has several branches per mode and the physical
one must be identified twice over. For the amplitude column it is the
largest |lambda| among eigenvectors whose overlap with the seeded gradient
mode is within a factor two of the best; a plain argmax of the overlap
jumps branch where two eigenvectors split the mode almost evenly, and the
damping floor then reports the spurious partner. For the phase column it
is the eigenvalue nearest the exact propagator exp(-i k.v dt), and the
defect is normalized per unit dt |k| so that entries at different
wavelengths and angles are comparable (the exact phase shift k.v dt
vanishes at perpendicular incidence, so it cannot serve as the yardstick).
"""

import os
from dataclasses import dataclass

import numpy as np

from .basis import MASS, basis_values
from .errors import EigenNoConvergence, SubspaceNotInvariant
from .mesh import FourierLattice
from .reconstruction import complete_pair, trace_system
from .semidiscrete import SchemeSpec, rhs_pair
from .timeint import step

SVD_RTOL = 1e-10          # singular values below this (relative) count as zero
INVARIANCE_RTOL = 1e-10   # allowed leakage of the rhs image out of range(B)
RHO_TOL = 1e-9            # stability means spectral radius <= 1 + RHO_TOL
BISECT_TOL = 1e-4         # absolute tolerance on the CFL bisection
N_ANGLES = 65             # velocity directions sampled in [0, pi/4]
N_KGRID = 65              # modes per axis in the stability k-sweep
_MODE_QUAD = 24           # quadrature points for exact-mode edge projections


@dataclass(frozen=True)
class FourierOperator:
    """Reduced per-mode ODE matrix A on the constrained subspace B."""

    A: np.ndarray
    B: np.ndarray
    spec: SchemeSpec
    mode: tuple
    v: tuple
    dx: float
    dy: float

    @property
    def dim(self):
        return self.A.shape[-1]


@dataclass(frozen=True)
class AmplificationResult:
    eigenvalues: np.ndarray
    spectral_radius: float
    g: complex = None
    g_exact: complex = None
    one_minus_amp: float = None
    phase_error: float = None
    degenerate: bool = False


def _theta_arrays(thx, thy):
    thx = np.atleast_1d(np.asarray(thx, dtype=float))
    thy = np.atleast_1d(np.asarray(thy, dtype=float))
    if thx.shape != thy.shape or thx.ndim != 1:
        raise ValueError("mode component arrays must be 1-d and equal length")
    return thx, thy


def _full_image(u, thx, thy, spec, v, dx, dy):
    """Apply the rhs to full DOF vectors u (K, 2(N+1)) at modes (thx, thy)."""
    n1 = spec.n_evolved + 1
    lat = FourierLattice(thx, thy)
    djy, djx = rhs_pair(
        u[..., :n1], u[..., n1:], spec.n_evolved, spec.target, v, dx, dy,
        lattice=lat, check=False,
    )
    return np.concatenate([djy, djx], axis=-1)


def constraint_functionals(thx, thy, spec, dx, dy):
    """Rows of W: the curl conditions the reconstruction imposes per mode.

    Generated numerically by composing moment completion, the trace
    gathering of the reference zone, and the trace system's left null
    vector; for every supported scheme this is a single functional (the
    mean circulation).
    """
    thx, thy = _theta_arrays(thx, thy)
    K = thx.size
    lat = FourierLattice(thx, thy)
    n1 = spec.n_evolved + 1
    n = 2 * n1
    ell = trace_system(spec.target)[2]
    w = np.empty((K, 1, n), dtype=complex)
    wabs = np.empty((K, n))
    for r in range(n):
        unit = np.zeros((K, n), dtype=complex)
        unit[:, r] = 1.0
        jy_m, jx_m = complete_pair(
            unit[:, :n1], unit[:, n1:], spec.n_evolved, spec.target, lat
        )
        trace = np.concatenate(
            [
                dy * jy_m,
                dy * lat.shift(jy_m, -1, 0),
                dx * jx_m,
                dx * lat.shift(jx_m, 0, -1),
            ],
            axis=-1,
        )
        w[:, 0, r] = trace @ ell
        wabs[:, r] = np.abs(trace) @ np.abs(ell)
    # at k = 0 (and only there) the functional cancels identically; what
    # survives is roundoff, which must not masquerade as a constraint
    noise = np.linalg.norm(w, axis=(1, 2)) <= 1e-12 * np.linalg.norm(wabs, axis=-1)
    w[noise] = 0.0
    return w


def _null_groups(w):
    """Split modes by constraint rank; yield (indices, B) with orthonormal B."""
    K, n_w, n = w.shape
    _, s, vh = np.linalg.svd(w)
    smax = s.max(axis=-1)
    ranks = (s > SVD_RTOL * np.maximum(smax, 1e-300)[:, None]).sum(axis=-1)
    groups = []
    for r in np.unique(ranks):
        idx = np.nonzero(ranks == r)[0]
        basis = vh[idx, r:, :].conj().transpose(0, 2, 1)
        groups.append((idx, np.ascontiguousarray(basis)))
    return groups


def _operator_on_basis(basis, thx, thy, spec, v, dx, dy):
    """A = B^H L B with an invariance check of range(B) under L."""
    K, n, d = basis.shape
    images = np.empty((K, n, d), dtype=complex)
    for r in range(d):
        images[:, :, r] = _full_image(basis[:, :, r], thx, thy, spec, v, dx, dy)
    A = np.einsum("knd,kne->kde", basis.conj(), images)
    resid = images - basis @ A
    leak = np.linalg.norm(resid, axis=(1, 2))
    scale = np.linalg.norm(images, axis=(1, 2))
    bad = leak > INVARIANCE_RTOL * np.maximum(scale, 1e-300)
    if bad.any():
        k = int(np.nonzero(bad)[0][0])
        raise SubspaceNotInvariant(
            f"rhs image leaves the constrained subspace at mode "
            f"({thx[k]:.6g}, {thy[k]:.6g}): leakage {leak[k]:.3e} "
            f"vs scale {scale[k]:.3e}"
        )
    return A


def assemble_A(spec, mode, v, dx=1.0, dy=1.0):
    """Reduced Fourier-space matrix for one mode (kx dx, ky dy)."""
    thx, thy = float(mode[0]), float(mode[1])
    if not (abs(thx) <= np.pi + 1e-12 and abs(thy) <= np.pi + 1e-12):
        raise ValueError("mode components must lie in [-pi, pi]")
    w = constraint_functionals([thx], [thy], spec, dx, dy)
    ((idx, basis),) = _null_groups(w)
    A = _operator_on_basis(basis, np.array([thx]), np.array([thy]), spec, v, dx, dy)
    return FourierOperator(A[0], basis[0], spec, (thx, thy), tuple(v), dx, dy)


def second_order_reference_matrix(mode, v, dx=1.0, dy=1.0):
    """Closed-form 3x3 mode matrix of the second-order scheme.

    Hand-assembled from the vertex/edge update algebra, independently of
    the numerical operator pipeline, and used as an oracle for assemble_A.

    Chart: V = (top-edge mean, top-edge slope, scaled right-edge slope),
    with the right-edge mean eliminated through the mean-circulation
    constraint.  The elimination by itself would put a 1/(1 - exp(-i thx))
    pole into A[2,0], so the third coordinate additionally carries the
    factor sin(thx/2) exp(i(thy - thx)/2); that diagonal rescaling cancels
    the pole against the matching sin(thx/2) zero of A[0,2] (an exact
    identity, not an approximation), leaving trig-polynomial entries that
    are regular on the whole Nyquist square, k = 0 included.
    """
    thx, thy = mode
    vx, vy = v
    ax, ay = abs(vx), abs(vy)
    sx, cx = np.sin(thx), np.cos(thx)
    sy, cy = np.sin(thy), np.cos(thy)
    hsy, hcy = np.sin(thy / 2), np.cos(thy / 2)
    a11 = ((dx * cy - dx) * ay - 1j * dx * sy * vy
           + (dy * cx - dy) * ax - 1j * dy * sx * vx) / (dx * dy)
    a12 = -(1j * sx * ax + (1.0 - cx) * vx) / (2.0 * dx)
    a13 = -(1j * hcy * ay + hsy * vy) / dx
    a21 = (6j * sx * ax + (6.0 - 6.0 * cx) * vx) / dx
    # tangential upwinding relaxes the slope at rate ~|vx|/dx; the
    # transverse reconstruction term rides on the abutting zones a zone
    # height away and scales with 1/dy
    a22 = ((cy - 1.0) * ay - 1j * sy * vy) / dy \
        + ((-3.0 * cx - 3.0) * ax + 3j * sx * vx) / dx
    # coupling of the right-edge slope to the right-edge mean through the
    # constraint elimination; only the product a13*a31 enters the
    # characteristic polynomial, so the chart scaling moves the whole
    # 2 sin(thy/2) factor of (1 - exp(-i thy)) here
    a31 = 6.0 * dx * hsy * ((1.0 - cy) * vy + 1j * sy * ay) / dy ** 2
    a33 = -((3.0 * cy + 3.0) * ay - 3j * sy * vy) / dy \
        - ((1.0 - cx) * ax + 1j * sx * vx) / dx
    return np.array(
        [
            [a11, a12, a13],
            [a21, a22, 0.0],
            [a31, 0.0, a33],
        ],
        dtype=complex,
    )


def gradient_mode_moments(thx, thy, degree, dx=1.0, dy=1.0, center=(0.0, 0.0)):
    """Edge moments of grad exp(i k.x) on a zone centered at `center`.

    Returns the stacked (right y-edge, top x-edge) moment vector; accepts
    scalar or array mode components (leading axis = modes).
    """
    thx, thy = _theta_arrays(thx, thy)
    xs, ws = np.polynomial.legendre.leggauss(_MODE_QUAD)
    xs = 0.5 * xs
    ws = 0.5 * ws
    bv = basis_values(degree, xs)                     # (Q, N+1)
    cx, cy = center
    kx = thx / dx
    ky = thy / dy
    # right y-edge: x = cx + dx/2, y = cy + eta dy; tangential component Jy
    amp_y = 1j * ky * np.exp(1j * (kx * (cx + dx / 2) + ky * cy))
    prof_y = np.exp(1j * thy[:, None] * xs[None, :])  # (K, Q)
    jy = amp_y[:, None] * ((prof_y * ws) @ bv) / MASS[: degree + 1]
    # top x-edge: y = cy + dy/2, x = cx + xi dx; tangential component Jx
    amp_x = 1j * kx * np.exp(1j * (ky * (cy + dy / 2) + kx * cx))
    prof_x = np.exp(1j * thx[:, None] * xs[None, :])
    jx = amp_x[:, None] * ((prof_x * ws) @ bv) / MASS[: degree + 1]
    return np.concatenate([jy, jx], axis=-1)    # (K, 2(degree+1))


def _eig(G):
    """Eigendecomposition with the failure modes mapped to package errors."""
    if not np.isfinite(G).all():
        raise EigenNoConvergence("amplification matrix contains non-finite entries")
    try:
        return np.linalg.eig(G)
    except np.linalg.LinAlgError as exc:
        raise EigenNoConvergence(str(exc)) from exc


def _eigvals(G):
    if not np.isfinite(G).all():
        raise EigenNoConvergence("amplification matrix contains non-finite entries")
    try:
        return np.linalg.eigvals(G)
    except np.linalg.LinAlgError as exc:
        raise EigenNoConvergence(str(exc)) from exc


def _pick_amplitude(lam, overlaps):
    """Physical-branch eigenvalue per mode: largest |lambda| among the
    eigenvectors whose overlap with the seeded gradient mode is within a
    factor two of the best one."""
    big = overlaps >= 0.5 * overlaps.max(axis=-1, keepdims=True)
    pick = np.argmax(np.where(big, np.abs(lam), -1.0), axis=-1)
    return np.take_along_axis(lam, pick[..., None], -1)[..., 0]


def _phase_error(g, g_exact, scale):
    """Phase defect per unit dt |k|, or (absolute defect, True) if that scale
    vanishes (frozen time or the zero mode)."""
    defect = abs(np.angle(g * np.conj(g_exact)))
    if scale < 1e-12:
        return defect, True
    return defect / scale, False


def amplification(aop, dt, method):
    """Amplification matrix eigenstructure for one assembled mode."""
    d = aop.dim
    eye = np.eye(d, dtype=complex)
    G = step(eye, lambda M: aop.A @ M, dt, method)
    lam, vec = _eig(G)
    rho = float(np.abs(lam).max())
    thx, thy = aop.mode
    m = gradient_mode_moments([thx], [thy], aop.spec.n_evolved, aop.dx, aop.dy)
    m_red = aop.B.conj().T @ m[0]
    norm = np.linalg.norm(m_red)
    if norm < 1e-12 * max(np.linalg.norm(m), 1e-300):
        return AmplificationResult(lam, rho)
    overlaps = np.abs(vec.conj().T @ (m_red / norm))
    g = complex(_pick_amplitude(lam[None, :], overlaps[None, :])[0])
    vx, vy = aop.v
    kx, ky = thx / aop.dx, thy / aop.dy
    g_exact = complex(np.exp(-1j * (kx * vx + ky * vy) * dt))
    g_phase = complex(lam[int(np.argmin(np.abs(lam - g_exact)))])
    perr, degenerate = _phase_error(g_phase, g_exact, dt * float(np.hypot(kx, ky)))
    return AmplificationResult(lam, rho, g, g_exact, 1.0 - abs(g), perr, degenerate)


# ----------------------------------------------------------------------
# sweeps


def _axis_operator_groups(spec, thx, thy, dx=1.0, dy=1.0):
    """Per constraint-rank group: (indices, B, A for v=(1,0), A for v=(0,1)).

    In the closed first velocity quadrant the upwind choices are fixed, so
    the mode matrix is linear in (vx, vy): A(v) = vx Ax + vy Ay.
    """
    w = constraint_functionals(thx, thy, spec, dx, dy)
    groups = []
    for idx, basis in _null_groups(w):
        tx, ty = thx[idx], thy[idx]
        ax = _operator_on_basis(basis, tx, ty, spec, (1.0, 0.0), dx, dy)
        ay = _operator_on_basis(basis, tx, ty, spec, (0.0, 1.0), dx, dy)
        groups.append((idx, basis, ax, ay))
    return groups


def _max_rho(groups, cx, cy, method):
    """Max spectral radius over all modes at CFL vector (cx, cy) = dt v / dx."""
    worst = 0.0
    for _, _, ax, ay in groups:
        m = cx * ax + cy * ay
        eye = np.broadcast_to(np.eye(m.shape[-1], dtype=complex), m.shape).copy()
        G = step(eye, lambda X: m @ X, 1.0, method)
        worst = max(worst, float(np.abs(_eigvals(G)).max()))
    return worst


def _k_line(full_nyquist, n):
    half = np.pi if full_nyquist else np.pi / 2
    return np.linspace(-half, half, n)


def _cfl_for_angle(groups, theta, method, c_cap, warm):
    ct, st = np.cos(theta), np.sin(theta)
    stable = lambda c: _max_rho(groups, c * ct, c * st, method) <= 1.0 + RHO_TOL
    if not stable(1e-3):
        return 0.0
    lo = max(warm * 0.8, 1e-3) if warm else 1e-3
    while not stable(lo):
        lo *= 0.5
        if lo < 1e-3:
            return 0.0
    hi = max(lo * 1.25, 2e-3)
    while stable(hi):
        lo = hi
        hi *= 2.0
        if hi > c_cap:
            return c_cap
    while hi - lo > BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if stable(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def max_cfl(spec, method, n_angles=N_ANGLES, n_k=N_KGRID, c_cap=4.0,
            full_nyquist=False, threads=None):
    """Largest C with dt = C dx stable for every |v| = 1 direction and mode.

    Sweeps velocity angles in [0, pi/4] (mirror symmetry covers the rest)
    and, per angle, bisects the stability boundary over a k-grid on
    [-pi/2, pi/2]^2 with square zones. Returns 0.0 for unstable pairings.
    """
    kline = _k_line(full_nyquist, n_k)
    KX, KY = np.meshgrid(kline, kline, indexing="ij")
    groups = _axis_operator_groups(spec, KX.ravel(), KY.ravel())
    angles = np.linspace(0.0, np.pi / 4, n_angles)
    if threads is None:
        threads = int(os.environ.get("CURLKIT_THREADS", "0") or 0) or (os.cpu_count() or 1)
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        chunks = np.array_split(angles, threads)

        def run_chunk(chunk):
            best = np.inf
            warm = None
            for th in chunk:
                warm = _cfl_for_angle(groups, th, method, c_cap, warm)
                best = min(best, warm)
                if warm == 0.0:
                    break
            return best

        with ThreadPoolExecutor(max_workers=threads) as ex:
            return float(min(ex.map(run_chunk, chunks)))
    best = np.inf
    warm = None
    for th in angles:
        warm = _cfl_for_angle(groups, th, method, c_cap, warm)
        best = min(best, warm)
        if warm == 0.0:
            break
    return float(best)


# Below this measured window a pairing is reported as having no usable
# operating point. Two failure modes land here. Integrators whose stability
# boundary leaves the imaginary axis at low order (forward Euler, and
# second-order stepping against schemes with interior damping weaker than
# theta^4) lose the long-wave limit outright; their measured window is a
# tolerance artifact that keeps shrinking as the k-grid refines toward
# theta -> 0. The cubic scheme under third-order stepping instead keeps a
# genuine sliver near 0.13, but that sits far below the 0.2069 of the
# smallest matched-order operating point and is not a usable regime.
USABLE_NU_FLOOR = 0.15


def certified_cfl(spec, method, **kwargs):
    """max_cfl, or None when the pairing has no usable stable window."""
    nu = max_cfl(spec, method, **kwargs)
    return None if nu < USABLE_NU_FLOOR else nu


def stability_map(spec, method, c_max=1.0, n_c=33, n_k=33, full_nyquist=False):
    """Grid of worst-mode spectral radii over the first CFL quadrant."""
    kline = _k_line(full_nyquist, n_k)
    KX, KY = np.meshgrid(kline, kline, indexing="ij")
    groups = _axis_operator_groups(spec, KX.ravel(), KY.ravel())
    caxis = np.linspace(0.0, c_max, n_c)
    rho = np.empty((n_c, n_c))
    for a, cx in enumerate(caxis):
        for b, cy in enumerate(caxis):
            rho[a, b] = _max_rho(groups, cx, cy, method) if (cx or cy) else 1.0
    return caxis, rho


@dataclass(frozen=True)
class DispersionRow:
    angle_deg: float
    one_minus_amp: float
    phase_err: float
    wavelength: float
    v_angle_deg: float


def dispersion_sweep(spec, method, v_angle_deg, wavelength, nu=None,
                     cfl_factor=0.95, step_deg=1.0):
    """Dissipation and phase defects versus wave-vector angle.

    The wave vector has magnitude 2 pi / (wavelength in zone widths) and
    sweeps relative angles in [-180, 180] degrees around a unit velocity
    at v_angle_deg; dt = cfl_factor * nu on unit square zones. Amplitude
    follows the physical branch, phase the branch nearest the exact
    propagator, normalized per unit dt |k|; see the module notes.
    """
    if nu is None:
        nu = max_cfl(spec, method)
    if nu <= 0.0:
        raise ValueError(f"{spec.label}+{method} is unstable; no sweep exists")
    dt = cfl_factor * nu
    phi_v = np.radians(v_angle_deg)
    v = (np.cos(phi_v), np.sin(phi_v))
    rel = np.arange(-180.0, 180.0 + 0.5 * step_deg, step_deg)
    kmag = 2.0 * np.pi / wavelength
    thx = kmag * np.cos(phi_v + np.radians(rel))
    thy = kmag * np.sin(phi_v + np.radians(rel))
    groups = _axis_operator_groups(spec, thx, thy)
    g_exact = np.exp(-1j * (thx * v[0] + thy * v[1]) * dt)
    g_amp = np.empty(rel.size, dtype=complex)
    g_phase = np.empty(rel.size, dtype=complex)
    for idx, basis, ax, ay in groups:
        A = v[0] * ax + v[1] * ay
        eye = np.broadcast_to(np.eye(A.shape[-1], dtype=complex), A.shape).copy()
        G = step(eye, lambda X: A @ X, dt, method)
        lam, vec = _eig(G)
        m = gradient_mode_moments(thx[idx], thy[idx], spec.n_evolved)
        m_red = np.einsum("knd,kn->kd", basis.conj(), m)
        m_red /= np.linalg.norm(m_red, axis=-1, keepdims=True)
        overlaps = np.abs(np.einsum("kd,kdj->kj", m_red.conj(), vec))
        g_amp[idx] = _pick_amplitude(lam, overlaps)
        near = np.argmin(np.abs(lam - g_exact[idx, None]), axis=-1)
        g_phase[idx] = lam[np.arange(idx.size), near]
    scale = dt * kmag
    rows = []
    for a, ga, gp, ge in zip(rel, g_amp, g_phase, g_exact):
        perr = float(abs(np.angle(gp * np.conj(ge))) / scale)
        rows.append(
            DispersionRow(float(a), float(1.0 - abs(ga)), perr,
                          float(wavelength), float(v_angle_deg))
        )
    return rows
