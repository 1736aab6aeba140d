"""Plane-wave and vortex transport runs: errors, energy, curl monitoring.

Two canonical advection problems drive all accuracy and conservation
checks. Both move a gradient field with a constant velocity across a
periodic square; at the final time the profile has wrapped back onto
itself, so the analytic initial gradient doubles as the exact solution.

The error norms are quadrature norms on the interior reconstruction:
L1 averages the two components' absolute errors over an (M+2)^2 tensor
Gauss rule per zone, L-infinity takes the worst single point/component.

The curl monitor samples |curl J| on a uniform (N+1) x (N+1) grid of
interior points per zone. The interior reconstruction is a gradient and
therefore analytically curl-free, so the curl observable that remains is
the zone's mean circulation density, constant within each zone; sampling
it at any interior point returns that constant.
"""

import csv
import time
from dataclasses import dataclass

import numpy as np

from .errors import Blowup
from .mesh import MeshSpec, circulation_grid, init_from_gradient
from .reconstruction import ReconstructionGrid, complete_moments
from .semidiscrete import make_rhs_operator, pack, total_quadratic_energy, unpack
from .timeint import compute_dt, step
from .upwind import operator_tables
from .vonneumann import max_cfl

N_SNAPSHOTS = 100       # uniform output intervals per run
UNSTABLE_NU = 0.02      # measured limits below this mean "no stable step exists"


def _planewave_potential(x, y):
    return np.cos(2.0 * np.pi * (x + y))


def _planewave_gradient(x, y):
    g = -2.0 * np.pi * np.sin(2.0 * np.pi * (x + y))
    return g, g


def _vortex_potential(x, y):
    return np.exp(0.5 * (1.0 - x * x - y * y))


def _vortex_gradient(x, y):
    p = np.exp(0.5 * (1.0 - x * x - y * y))
    return -x * p, -y * p


PROBLEMS = {
    "planewave": {
        "origin": (-0.5, -0.5),
        "length": 1.0,
        "tf": 1.0,
        "potential": _planewave_potential,
        "gradient": _planewave_gradient,
    },
    "vortex": {
        "origin": (-10.0, -10.0),
        "length": 20.0,
        "tf": 20.0,
        "potential": _vortex_potential,
        "gradient": _vortex_gradient,
    },
}


@dataclass(frozen=True)
class ProblemSpec:
    problem: str
    resolution: int
    scheme: object
    tf: float = None
    velocity: tuple = (1.0, 1.0)
    snapshots: int = N_SNAPSHOTS

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.resolution < 4:
            raise ValueError("resolution must be at least 4 zones per side")
        if self.scheme.rk is None:
            raise ValueError("scheme must carry a time integrator (rk)")
        if self.tf is None:
            object.__setattr__(self, "tf", PROBLEMS[self.problem]["tf"])
        if not self.tf > 0:
            raise ValueError("final time must be positive")
        if self.snapshots < 1:
            raise ValueError("need at least one output interval")

    def build_mesh(self):
        p = PROBLEMS[self.problem]
        return MeshSpec.square(self.resolution, p["length"], p["origin"])


@dataclass
class RunReport:
    l1: float
    linf: float
    energy_fraction: float
    curl_times: tuple
    curl_values: tuple
    j_scale: float
    steps: int
    wall_time: float
    resolution: int = None
    l1_order: float = None
    linf_order: float = None

    @property
    def max_curl(self):
        return max(self.curl_values)


def max_pointwise_curl(field):
    """Largest |curl J| over per-zone interior sample grids.

    The per-zone value is the mean circulation density, the single curl
    degree of freedom the edge data carries (see module docstring).
    """
    return float(np.abs(circulation_grid(field)).max())


def _field_scale(field):
    return float(
        max(np.abs(field.jy[..., 0]).max(), np.abs(field.jx[..., 0]).max())
    )


def error_norms(field, scheme, pspec):
    """(L1, Linf) against the exactly advected initial gradient field.

    Displaced sample positions wrap into the periodic box before the
    analytic gradient is evaluated, so whole-domain translations land
    back on the initial profile without cancellation error.
    """
    work = field
    if scheme.target > field.degree:
        work = complete_moments(field, scheme.target)
    t = operator_tables(work.degree)
    nodes, w = t.nodes, t.basis.weights
    X, Y = np.meshgrid(nodes, nodes, indexing="ij")
    W = np.outer(w, w).ravel()
    jx_num, jy_num = ReconstructionGrid(work).eval_at_offsets(X.ravel(), Y.ravel())

    p = PROBLEMS[pspec.problem]
    mesh = field.mesh
    cx = mesh.x0 + (np.arange(mesh.nx) + 0.5) * mesh.dx
    cy = mesh.y0 + (np.arange(mesh.ny) + 0.5) * mesh.dy
    xq = cx[:, None, None] + X.ravel()[None, None, :] * mesh.dx
    yq = cy[None, :, None] + Y.ravel()[None, None, :] * mesh.dy
    vx, vy = pspec.velocity
    length = p["length"]
    xs = p["origin"][0] + (xq - vx * pspec.tf - p["origin"][0]) % length
    ys = p["origin"][1] + (yq - vy * pspec.tf - p["origin"][1]) % length
    jx_ex, jy_ex = p["gradient"](xs, ys)

    ex = np.abs(jx_num - jx_ex)
    ey = np.abs(jy_num - jy_ex)
    l1 = float((0.5 * (ex + ey) @ W).mean())
    linf = float(max(ex.max(), ey.max()))
    return l1, linf


def run_problem(pspec, nu=None, check=True):
    """Advance one problem to its final time; report errors and monitors.

    nu is the scheme+integrator CFL limit; when not given it is measured
    on the full Nyquist square (where the quoted stability limits live).
    The time step is cfl_fraction times the limit, clipped so that every
    output boundary, the final time included, is hit exactly.
    """
    scheme = pspec.scheme
    if nu is None:
        nu = max_cfl(scheme, scheme.rk, full_nyquist=True)
    if nu < UNSTABLE_NU:
        raise ValueError(
            f"{scheme.label}+{scheme.rk} has no usable stable step (nu={nu:.4g})"
        )
    mesh = pspec.build_mesh()
    p = PROBLEMS[pspec.problem]
    field0 = init_from_gradient(p["potential"], mesh, scheme.n_evolved)
    e0 = total_quadratic_energy(field0, scheme)
    j_scale = _field_scale(field0)

    dt = compute_dt(nu, pspec.velocity, mesh, fraction=scheme.cfl_fraction)
    op = make_rhs_operator(mesh, scheme, pspec.velocity, check=check)
    u = pack(field0)

    t0 = time.perf_counter()
    curl_times = [0.0]
    curl_values = [max_pointwise_curl(field0)]
    t_now = 0.0
    steps = 0
    next_snap = 1
    # stable steps cannot grow the solution of a linear advection problem,
    # so runaway amplitude is a blow-up long before float overflow
    blow_scale = 1e100 * max(j_scale, 1.0)
    # uniform steps with only the final one shortened; the monitor records
    # right after each output boundary is crossed, at the actual step time
    while t_now < pspec.tf - 1e-12 * pspec.tf:
        h = min(dt, pspec.tf - t_now)
        u = step(u, op, h, scheme.rk)
        steps += 1
        peak = float(np.abs(u).max())
        if not np.isfinite(peak) or peak > blow_scale:
            raise Blowup(steps, t_now + h)
        t_now += h
        if t_now >= pspec.tf * next_snap / pspec.snapshots - 1e-12 * pspec.tf:
            curl_times.append(t_now)
            curl_values.append(max_pointwise_curl(unpack(u, mesh, scheme.n_evolved)))
            while t_now >= pspec.tf * next_snap / pspec.snapshots - 1e-12 * pspec.tf:
                next_snap += 1

    final = unpack(u, mesh, scheme.n_evolved)
    l1, linf = error_norms(final, scheme, pspec)
    efrac = total_quadratic_energy(final, scheme) / e0
    return RunReport(
        l1=l1,
        linf=linf,
        energy_fraction=float(efrac),
        curl_times=tuple(curl_times),
        curl_values=tuple(curl_values),
        j_scale=j_scale,
        steps=steps,
        wall_time=time.perf_counter() - t0,
        resolution=pspec.resolution,
    )


def convergence_suite(problem, scheme, resolutions, tf=None, velocity=(1.0, 1.0), nu=None):
    """Run a resolution ladder; annotate each report with observed orders.

    Orders are error ratios against the previous resolution on a log2
    scale, so doubling ladders read directly as convergence orders. The
    first report keeps the orders as None.
    """
    resolutions = list(resolutions)
    if len(resolutions) < 2:
        raise ValueError("need at least two resolutions for orders")
    if any(r < 8 for r in resolutions):
        raise ValueError("convergence resolutions must be at least 8")
    if nu is None:
        nu = max_cfl(scheme, scheme.rk, full_nyquist=True)
    reports = []
    prev = None
    for res in resolutions:
        rep = run_problem(
            ProblemSpec(problem, res, scheme, tf=tf, velocity=velocity), nu=nu
        )
        if prev is not None:
            denom = np.log2(res / prev.resolution)
            rep.l1_order = float(np.log2(prev.l1 / rep.l1) / denom)
            rep.linf_order = float(np.log2(prev.linf / rep.linf) / denom)
        reports.append(rep)
        prev = rep
    return reports


# ----------------------------------------------------------------------
# CSV emission (consumed by the plotting tool)

CURL_HEADER = ("time", "max_curl", "j_scale")
CONVERGENCE_HEADER = ("res", "l1", "l1_order", "linf", "linf_order", "energy_fraction")
DISPERSION_HEADER = ("angle_deg", "one_minus_amp", "phase_err", "wavelength", "v_angle_deg")
STABILITY_HEADER = ("cx", "cy", "rho")
ENERGY_HEADER = ("res", "energy_fraction")


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header, rows):
    """Write rows (sequences matching header) deterministically."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\r\n")
        out.writerow(header)
        for row in rows:
            out.writerow([_cell(v) for v in row])


def curl_rows(report):
    return [
        (t, c, report.j_scale)
        for t, c in zip(report.curl_times, report.curl_values)
    ]


def convergence_rows(reports):
    return [
        (r.resolution, r.l1, r.l1_order, r.linf, r.linf_order, r.energy_fraction)
        for r in reports
    ]


def dispersion_row_tuples(rows):
    return [
        (r.angle_deg, r.one_minus_amp, r.phase_err, r.wavelength, r.v_angle_deg)
        for r in rows
    ]


def stability_rows(caxis, rho):
    out = []
    for a, cx in enumerate(caxis):
        for b, cy in enumerate(caxis):
            out.append((float(cx), float(cy), float(rho[a, b])))
    return out
