"""Strong-stability-preserving Runge-Kutta steppers in Shu-Osher form.

Each stage is a convex combination

    u^(s) = sum_k alpha_sk u^(k) + dt beta_sk L(u^(k))

over earlier levels (level 0 is the step input). The same recursion runs
the mesh solver and the Fourier-space amplification matrices: `step` only
needs `+`, scalar `*` and the supplied operator, so the state can be any
ndarray, including a batch of matrices.

The five-stage fourth-order tableau is the standard optimal one; its last
combination coefficient is derived from the consistency row sum so each
stage's alphas add to one exactly in floating point.
"""

import numpy as np

_C51 = 0.517231671970585
_C52 = 0.096059710526147
_C53 = 1.0 - _C51 - _C52

# stage -> list of (source level, alpha, beta)
TABLEAUS = {
    "rk1": [
        [(0, 1.0, 1.0)],
    ],
    "ssprk2": [
        [(0, 1.0, 1.0)],
        [(0, 0.5, 0.0), (1, 0.5, 0.5)],
    ],
    "ssprk3": [
        [(0, 1.0, 1.0)],
        [(0, 0.75, 0.0), (1, 0.25, 0.25)],
        [(0, 1.0 / 3.0, 0.0), (2, 2.0 / 3.0, 2.0 / 3.0)],
    ],
    "ssprk54": [
        [(0, 1.0, 0.391752226571890)],
        [(0, 0.444370493651235, 0.0), (1, 0.555629506348765, 0.368410593050371)],
        [(0, 0.620101851488403, 0.0), (2, 0.379898148511597, 0.251891774271694)],
        [(0, 0.178079954393132, 0.0), (3, 0.821920045606868, 0.544974750228521)],
        [
            (2, _C51, 0.0),
            (3, _C52, 0.063692468666290),
            (4, _C53, 0.226007483236906),
        ],
    ],
}

ORDERS = {"rk1": 1, "ssprk2": 2, "ssprk3": 3, "ssprk54": 4}


def tableau(method):
    try:
        return TABLEAUS[method]
    except KeyError:
        raise ValueError(
            f"unknown integrator {method!r}; choose from {sorted(TABLEAUS)}"
        ) from None


def step(u, rhs_op, dt, method):
    """Advance one step of size dt; works on any ndarray state."""
    stages = tableau(method)
    levels = [u]
    images = {}
    for stage in stages:
        acc = None
        for k, alpha, beta in stage:
            term = alpha * levels[k]
            if beta != 0.0:
                if k not in images:
                    images[k] = rhs_op(levels[k])
                term = term + (dt * beta) * images[k]
            acc = term if acc is None else acc + term
        levels.append(acc)
    return levels[-1]


def compute_dt(cfl_limit, v, mesh, fraction=1.0):
    """Time step from the scheme's unit-velocity square-zone CFL limit.

    The limit nu is quoted for |v| = 1 on unit square zones with dt = nu dx;
    for general velocity and spacing it scales with the traversal rate
    sqrt((vx/dx)^2 + (vy/dy)^2).
    """
    vx, vy = v
    rate = np.hypot(vx / mesh.dx, vy / mesh.dy)
    if rate == 0.0:
        raise ValueError("advection velocity is zero; no CFL time step exists")
    return fraction * cfl_limit / rate
