"""Runge-Kutta steppers: consistency, closed forms, observed orders."""

import numpy as np
import pytest

from curlkit.mesh import MeshSpec
from curlkit.timeint import ORDERS, TABLEAUS, compute_dt, step, tableau


def test_stage_alphas_sum_to_one():
    for name, stages in TABLEAUS.items():
        for s, stage in enumerate(stages):
            total = sum(alpha for _, alpha, _ in stage)
            assert total == pytest.approx(1.0, abs=0.0), f"{name} stage {s}"


def test_sources_reference_earlier_levels():
    for stages in TABLEAUS.values():
        for s, stage in enumerate(stages):
            assert all(0 <= k <= s for k, _, _ in stage)


def test_unknown_method_rejected():
    with pytest.raises(ValueError):
        tableau("rk4")


def stability_polynomial(method, z):
    """G(z) by stepping the scalar problem u' = z u with dt = 1."""
    return step(np.asarray(1.0 + 0.0j), lambda u: z * u, 1.0, method)


def test_closed_form_polynomials():
    rng = np.random.default_rng(1)
    for z in rng.standard_normal(8) + 1j * rng.standard_normal(8):
        assert stability_polynomial("rk1", z) == pytest.approx(1 + z, rel=1e-14)
        assert stability_polynomial("ssprk2", z) == pytest.approx(
            1 + z + z ** 2 / 2, rel=1e-14
        )
        assert stability_polynomial("ssprk3", z) == pytest.approx(
            1 + z + z ** 2 / 2 + z ** 3 / 6, rel=1e-14
        )


def test_ssprk54_matches_independent_stage_evaluation():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((5, 5))
    u0 = rng.standard_normal(5)
    dt = 0.17
    # written-out stage arithmetic, kept deliberately separate from the
    # tableau-driven implementation
    L = lambda u: A @ u
    u1 = u0 + 0.391752226571890 * dt * L(u0)
    u2 = 0.444370493651235 * u0 + 0.555629506348765 * u1 + 0.368410593050371 * dt * L(u1)
    u3 = 0.620101851488403 * u0 + 0.379898148511597 * u2 + 0.251891774271694 * dt * L(u2)
    u4 = 0.178079954393132 * u0 + 0.821920045606868 * u3 + 0.544974750228521 * dt * L(u3)
    u5 = (
        0.517231671970585 * u2
        + 0.096059710526147 * u3
        + 0.063692468666290 * dt * L(u3)
        + (1.0 - 0.517231671970585 - 0.096059710526147) * u4
        + 0.226007483236906 * dt * L(u4)
    )
    out = step(u0, L, dt, "ssprk54")
    assert np.allclose(out, u5, rtol=1e-14, atol=1e-15)


def test_linear_matrix_problem_matches_closed_forms():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((5, 5))
    u0 = rng.standard_normal(5)
    dt = 0.05
    I = np.eye(5)
    G2 = I + dt * A + (dt * A) @ (dt * A) / 2
    out = step(u0, lambda u: A @ u, dt, "ssprk2")
    assert np.allclose(out, G2 @ u0, rtol=1e-13, atol=1e-15)


@pytest.mark.parametrize("method", ["rk1", "ssprk2", "ssprk3", "ssprk54"])
def test_observed_order_on_oscillator(method):
    # integrate u' = i w u to t = 1 at two resolutions and fit the order
    w = 1.3
    exact = np.exp(1j * w)
    errs = []
    for nsteps in (64, 128):
        u = np.asarray(1.0 + 0.0j)
        dt = 1.0 / nsteps
        for _ in range(nsteps):
            u = step(u, lambda s: 1j * w * s, dt, method)
        errs.append(abs(u - exact))
    order = np.log2(errs[0] / errs[1])
    assert order == pytest.approx(ORDERS[method], abs=0.15)


def test_step_works_on_matrix_batches():
    # the same recursion must accept a batch of matrices as state
    rng = np.random.default_rng(4)
    A = rng.standard_normal((7, 3, 3)) + 1j * rng.standard_normal((7, 3, 3))
    eye = np.broadcast_to(np.eye(3, dtype=complex), (7, 3, 3)).copy()
    dt = 0.11
    G = step(eye, lambda M: A @ M, dt, "ssprk3")
    for k in range(7):
        Z = dt * A[k]
        Gk = np.eye(3) + Z + Z @ Z / 2 + Z @ Z @ Z / 6
        assert np.allclose(G[k], Gk, rtol=1e-13, atol=1e-14)


def test_compute_dt_examples():
    mesh = MeshSpec.square(8)  # dx = dy = 1/8
    dt = compute_dt(0.4, (1.0, 0.0), mesh)
    assert dt == pytest.approx(0.4 / 8.0 / 1.0 * 1.0)
    dt = compute_dt(0.4, (3.0, 4.0), mesh, fraction=0.5)
    assert dt == pytest.approx(0.5 * 0.4 / (8 * 5.0))
    with pytest.raises(ValueError):
        compute_dt(0.4, (0.0, 0.0), mesh)
