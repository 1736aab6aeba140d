"""Curl-free reconstruction: rank structure, trace matching, completion stencils."""

from fractions import Fraction

import numpy as np
import pytest

from curlkit.basis import EdgeBasis, eval_edge_poly, project_edge
from curlkit.errors import ConstraintViolation
from curlkit.mesh import MeshSpec, init_from_gradient
from curlkit.reconstruction import (
    ReconstructionGrid,
    complete_moments,
    complete_pair,
    completion_weights,
    potential_monomials,
    reconstruct_zone,
    trace_system,
    zone_coefficients,
)


def random_curlfree_edges(rng, p, dx, dy, scale=1.0):
    """Random edge polynomials with exactly zero mean circulation."""
    jy_r, jy_l, jx_t, jx_b = (scale * rng.normal(size=p + 1) for _ in range(4))
    jy_r[0] = jy_l[0] + dx * (jx_t[0] - jx_b[0]) / dy
    return jy_r, jy_l, jx_t, jx_b


@pytest.mark.parametrize("p", [0, 1, 2, 3])
def test_trace_system_shape_and_compatibility(p):
    T, pinv, left_null = trace_system(p)
    ncoef = len(potential_monomials(p))
    assert ncoef == 4 * p + 3
    assert T.shape == (4 * (p + 1), ncoef)
    assert np.linalg.matrix_rank(T, tol=1e-10) == ncoef
    # the single compatibility condition is the mean-circulation pattern:
    # +right mean, -left mean, -top mean, +bottom mean
    pattern = np.zeros(4 * (p + 1))
    pattern[0], pattern[p + 1], pattern[2 * (p + 1)], pattern[3 * (p + 1)] = 1, -1, -1, 1
    pattern /= np.linalg.norm(pattern)
    overlap = abs(np.dot(pattern, left_null))
    assert overlap == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("p", [0, 1, 2, 3])
def test_constant_field_reconstruction(p):
    a, b = 1.3, -0.7
    e = np.zeros(p + 1)
    jy = e.copy()
    jy[0] = b
    jx = e.copy()
    jx[0] = a
    recon = reconstruct_zone(jy, jy, jx, jx, p, 0.5, 0.25)
    for (x, y) in [(0.0, 0.0), (0.2, -0.1), (-0.24, 0.12)]:
        jx_v, jy_v = recon.eval(x, y)
        assert jx_v == pytest.approx(a, abs=1e-12)
        assert jy_v == pytest.approx(b, abs=1e-12)


def test_p1_zone_mean_formula():
    """Zone mean of Jx = (bottom+top means)/2 + (left slope - right slope)/12."""
    rng = np.random.default_rng(5)
    for _ in range(20):
        jy_r, jy_l, jx_t, jx_b = random_curlfree_edges(rng, 1, 1.0, 1.0)
        recon = reconstruct_zone(jy_r, jy_l, jx_t, jx_b, 1, 1.0, 1.0)
        nodes, weights = np.polynomial.legendre.leggauss(4)
        nodes, weights = 0.5 * nodes, 0.5 * weights
        X, Y = np.meshgrid(nodes, nodes, indexing="ij")
        jx_v, _ = recon.eval(X, Y)
        mean_x = np.einsum("ij,i,j->", jx_v, weights, weights)
        expected = 0.5 * (jx_b[0] + jx_t[0]) + (jy_l[1] - jy_r[1]) / 12.0
        assert mean_x == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_exact_gradient_of_x2_minus_y2(p):
    basis = EdgeBasis(p)
    # zone [-1/2,1/2]^2; edge traces of grad(x^2 - y^2) = (2x, -2y)
    jy_r = project_edge(lambda t: -2.0 * t, basis)
    jy_l = jy_r.copy()
    jx_t = project_edge(lambda t: 2.0 * t, basis)
    jx_b = jx_t.copy()
    recon = reconstruct_zone(jy_r, jy_l, jx_t, jx_b, p, 1.0, 1.0)
    xs = np.linspace(-0.4, 0.4, 5)
    for x in xs:
        for y in xs:
            jx_v, jy_v = recon.eval(x, y)
            assert jx_v == pytest.approx(2 * x, abs=1e-11)
            assert jy_v == pytest.approx(-2 * y, abs=1e-11)
    jx_v, jy_v = recon.eval(0.1, -0.2)
    assert (jx_v, jy_v) == (pytest.approx(0.2, abs=1e-12), pytest.approx(0.4, abs=1e-12))


@pytest.mark.parametrize("p", [0, 1, 2, 3])
def test_trace_matching_on_random_curlfree_edges(p):
    rng = np.random.default_rng(42 + p)
    basis = EdgeBasis(p)
    dx, dy = 0.7, 1.3
    for _ in range(25):
        jy_r, jy_l, jx_t, jx_b = random_curlfree_edges(rng, p, dx, dy)
        recon = reconstruct_zone(jy_r, jy_l, jx_t, jx_b, p, dx, dy)
        scale = max(np.abs(np.concatenate([jy_r, jy_l, jx_t, jx_b])))
        for xs, edge, comp in [
            (+0.5 * dx, jy_r, "y"),
            (-0.5 * dx, jy_l, "y"),
        ]:
            vals = recon.eval(np.full_like(basis.nodes, xs), basis.nodes * dy)[1]
            target = eval_edge_poly(edge, basis.nodes)
            assert np.abs(vals - target).max() <= 1e-11 * scale
        for ys, edge in [(+0.5 * dy, jx_t), (-0.5 * dy, jx_b)]:
            vals = recon.eval(basis.nodes * dx, np.full_like(basis.nodes, ys))[0]
            target = eval_edge_poly(edge, basis.nodes)
            assert np.abs(vals - target).max() <= 1e-11 * scale


def test_structural_curl_freeness():
    """d(Jy)/dx - d(Jx)/dy of the reconstruction vanishes analytically."""
    rng = np.random.default_rng(11)
    jy_r, jy_l, jx_t, jx_b = random_curlfree_edges(rng, 3, 1.0, 1.0)
    recon = reconstruct_zone(jy_r, jy_l, jx_t, jx_b, 3, 1.0, 1.0)
    h = 1e-5
    for (x, y) in [(0.0, 0.0), (0.3, -0.2), (-0.45, 0.41)]:
        djy_dx = (recon.eval(x + h, y)[1] - recon.eval(x - h, y)[1]) / (2 * h)
        djx_dy = (recon.eval(x, y + h)[0] - recon.eval(x, y - h)[0]) / (2 * h)
        # finite differences of exact polynomials: curl cancels to O(h^2) * coeffs
        assert abs(djy_dx - djx_dy) <= 1e-8


def test_circulation_violation_raises():
    jy_r = np.array([1.0, 0.0])
    z = np.zeros(2)
    with pytest.raises(ConstraintViolation):
        reconstruct_zone(jy_r, z, z, z, 1, 1.0, 1.0)


def test_reconstruction_deterministic():
    rng = np.random.default_rng(0)
    edges = random_curlfree_edges(rng, 2, 1.0, 1.0)
    c1 = reconstruct_zone(*edges, 2, 1.0, 1.0).coeffs
    c2 = reconstruct_zone(*edges, 2, 1.0, 1.0).coeffs
    assert np.array_equal(c1, c2)


@pytest.mark.parametrize("p", [0, 1, 2, 3])
def test_global_polynomial_reproduction(p):
    """Potentials of total degree <= p+1 are recovered exactly.

    For p <= 2 the candidate set keeps exponent pairs with min(a,b) <= 1 and
    every zone is checked (the solve is zone-local). At p = 3 the bubble
    recovery makes the equal-exponent quartic x^2 y^2 reproducible as well,
    so the full total-degree-4 space is tested; since the recovery reads
    edge means up to four zones away and a polynomial is not periodic, only
    zones whose stencil avoids the wrap seam count.
    """
    rng = np.random.default_rng(100 + p)
    if p == 3:
        monos = [(a, b) for a in range(5) for b in range(5) if 0 < a + b <= 4]
        mesh = MeshSpec(12, 11, 0.3, 0.45, x0=-0.7, y0=-0.9)
        zones = [(4, 4), (6, 5), (8, 7)]
    else:
        monos = [(a, b) for (a, b) in potential_monomials(p) if a + b <= p + 1]
        mesh = MeshSpec(5, 4, 0.3, 0.45, x0=-0.7, y0=-0.9)
        zones = [(1, 1), (1, 2), (3, 1), (3, 2)]
    coeffs = rng.normal(size=len(monos))
    pot = lambda x, y: sum(c * x ** a * y ** b for c, (a, b) in zip(coeffs, monos))
    fld = init_from_gradient(pot, mesh, p)
    grid = ReconstructionGrid(fld)
    xh = np.array([-0.35, 0.0, 0.15, 0.4])
    jx_v, jy_v = grid.eval_at_offsets(xh, xh)
    scale = max(fld.max_abs(), 1.0)
    for i, j in zones:
        xc, yc = mesh.zone_center(i, j)
        x, y = xc + xh * mesh.dx, yc + xh * mesh.dy
        ex_jx = sum(c * a * x ** (a - 1) * y ** b for c, (a, b) in zip(coeffs, monos) if a)
        ex_jy = sum(c * b * x ** a * y ** (b - 1) for c, (a, b) in zip(coeffs, monos) if b)
        assert np.abs(jx_v[i, j] - ex_jx).max() <= 1e-11 * scale
        assert np.abs(jy_v[i, j] - ex_jy).max() <= 1e-11 * scale


def test_bubble_mode_pinned_to_zero():
    """The x^2 y^2 potential's edge traces coincide with (x^2+y^2)/4's.

    A single zone has no neighbor data to resolve that ambiguity, so the
    zone-local solve zeroes the bubble and returns the gradient (x/2, y/2)
    rather than (2xy^2, 2x^2y). The whole-mesh path tells them apart; see
    test_global_polynomial_reproduction[3].
    """
    basis = EdgeBasis(3)
    jy_side = project_edge(lambda t: 0.5 * t, basis)   # 2 x^2 y at x=+-1/2
    jx_side = project_edge(lambda t: 0.5 * t, basis)
    recon = reconstruct_zone(jy_side, jy_side, jx_side, jx_side, 3, 1.0, 1.0)
    jx_v, jy_v = recon.eval(0.3, 0.4)
    assert jx_v == pytest.approx(0.15, abs=1e-12)
    assert jy_v == pytest.approx(0.2, abs=1e-12)


def test_vectorized_matches_zonewise():
    mesh = MeshSpec.square(6)
    pot = lambda x, y: np.cos(2 * np.pi * (x + 2 * y))
    fld = init_from_gradient(pot, mesh, 2)
    coeffs = zone_coefficients(fld.jy, fld.jx, mesh.dx, mesh.dy, 2)
    for (i, j) in [(0, 0), (3, 4), (5, 5)]:
        recon = reconstruct_zone(
            fld.jy[i, j],
            fld.jy[(i - 1) % 6, j],
            fld.jx[i, j],
            fld.jx[i, (j - 1) % 6],
            2,
            mesh.dx,
            mesh.dy,
        )
        np.testing.assert_allclose(coeffs[i, j], recon.coeffs, atol=1e-13)


# ----------------------------------------------------------------------
# completion


def _exact_line_data(poly, centers):
    """Exact cell averages and modal slopes of a 1D polynomial."""
    P = np.polynomial.Polynomial(poly)
    Pi = P.integ()
    means = np.array([(Pi(c + 0.5) - Pi(c - 0.5)) for c in centers])
    Q = (P * np.polynomial.Polynomial([0, 1])).integ()

    def b1_moment(c):
        # 12 * int (t-c) P(t) dt over the cell
        return 12.0 * ((Q(c + 0.5) - Q(c - 0.5)) - c * (Pi(c + 0.5) - Pi(c - 0.5)))

    slopes = np.array([b1_moment(c) for c in centers])
    return means, slopes


def test_completion_constant_field():
    mesh = MeshSpec.square(5)
    fld = init_from_gradient(lambda x, y: 0.8 * x - 0.1 * y, mesh, 0)
    out = complete_moments(fld, 3)
    assert out.degree == 3
    np.testing.assert_allclose(out.jy[..., 0], fld.jy[..., 0], atol=0)
    np.testing.assert_allclose(out.jy[..., 1:], 0.0, atol=1e-13)
    np.testing.assert_allclose(out.jx[..., 1:], 0.0, atol=1e-13)


def test_completion_quadratic_example():
    """Means of y^2 on a unit line give curvature coefficient 1, exact b2."""
    centers = np.arange(-3, 4, dtype=float)
    means = centers ** 2 + 1.0 / 12.0
    w = completion_weights(0, 2)
    curv = sum(means[3 + off] * wt for off, wt in w[2].items())
    slope = sum(means[3 + off] * wt for off, wt in w[1].items())
    assert curv == pytest.approx(1.0, abs=1e-14)
    assert slope == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("n_ev,target", [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)])
def test_completion_reproduces_polynomials(n_ev, target):
    rng = np.random.default_rng(17 * target + n_ev)
    for _ in range(10):
        poly = rng.normal(size=target + 1)      # degree M polynomial
        centers = np.arange(-3, 4, dtype=float)
        means, slopes = _exact_line_data(poly, centers)
        nline = len(centers)
        jy = np.zeros((nline, 4, n_ev + 1))
        jy[:, :, 0] = means[:, None]
        if n_ev == 1:
            jy[:, :, 1] = slopes[:, None]
        # exercise the x-edge family (shifts along axis 0)
        jx = jy.copy()
        jy_full, jx_full = complete_pair(jy.transpose(1, 0, 2), jx, n_ev, target)
        # expected modal moments at the center cell from direct projection
        basis = EdgeBasis(target)
        expected = project_edge(lambda t: np.polynomial.Polynomial(poly)(t), basis)
        got = jx_full[3, 0]
        np.testing.assert_allclose(got, expected, atol=1e-12 * max(1, np.abs(expected).max()))
        got_y = jy_full.transpose(1, 0, 2)[3, 0]
        np.testing.assert_allclose(got_y, expected, atol=1e-12 * max(1, np.abs(expected).max()))


def test_p1p3_stencil_against_fraction_solve():
    """Re-derive the N=1, M=3 completion with exact rational arithmetic.

    The completed cubic interpolates the own mean and the slope moments of
    all three cells. In the modal basis (1, t, t^2 - 1/12, t^3 - 3t/20) the
    slope moment of cell j is c1 + 2j c2 + 3j^2 c3, so the system is tiny.
    """
    # data order: (mean, slope-1, slope0, slope+1); unknowns c0..c3
    rows = [
        [Fraction(1), Fraction(0), Fraction(0), Fraction(0)],   # mean at 0
        [Fraction(0), Fraction(1), Fraction(-2), Fraction(3)],  # slope at -1
        [Fraction(0), Fraction(1), Fraction(0), Fraction(0)],   # slope at 0
        [Fraction(0), Fraction(1), Fraction(2), Fraction(3)],   # slope at +1
    ]
    rhs_cols = np.eye(4, dtype=object)
    # gaussian elimination over fractions
    A = [row[:] + list(r) for row, r in zip(rows, [list(map(Fraction, rc)) for rc in rhs_cols])]
    n = 4
    for col in range(n):
        piv = next(r for r in range(col, n) if A[r][col] != 0)
        A[col], A[piv] = A[piv], A[col]
        pv = A[col][col]
        A[col] = [v / pv for v in A[col]]
        for r in range(n):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [v - f * w for v, w in zip(A[r], A[col])]
    inv = [[A[r][n + c] for c in range(n)] for r in range(n)]
    a2, a3 = inv[2], inv[3]
    w = completion_weights(1, 3)
    assert float(a2[1]) == pytest.approx(w[2]["slope", -1])
    assert float(a2[3]) == pytest.approx(w[2]["slope", 1])
    assert float(a3[1]) == pytest.approx(w[3]["slope", -1])
    assert float(a3[2]) == pytest.approx(w[3]["slope", 0])
    assert float(a3[3]) == pytest.approx(w[3]["slope", 1])
    # neither completed moment touches the mean, and M=2 keeps the
    # mean-based curvature of the parabola through the three means
    assert float(a2[0]) == 0.0 and float(a3[0]) == 0.0
    assert completion_weights(1, 2)[2] == {-1: 0.5, 0: -1.0, 1: 0.5}


def test_p0p3_stencil_minimal_width_cubic_exact():
    """b1/b3 are the unique width-5 odd rows exact on cubic means; b2 stays narrow."""
    w = completion_weights(0, 3)
    offs = range(-2, 3)
    # exact means of t^k over unit cells centered at integer offsets
    means = {k: {s: (Fraction(2 * s + 1, 2) ** (k + 1) - Fraction(2 * s - 1, 2) ** (k + 1))
                 / (k + 1) for s in offs} for k in range(4)}

    def apply(mom, k):
        return sum(Fraction(wt).limit_denominator(10**6) * means[k][s]
                   for s, wt in w[mom].items())

    # b1 sees t with weight 1 and t^3 with weight 3/20 (modal normalization)
    assert apply(1, 0) == 0 and apply(1, 2) == 0
    assert apply(1, 1) == 1 and apply(1, 3) == Fraction(3, 20)
    # b3 sees t^3 only
    assert apply(3, 0) == 0 and apply(3, 1) == 0 and apply(3, 2) == 0
    assert apply(3, 3) == 1
    # the even moment keeps the width-3 curvature rule of the M=2 member
    assert w[2] == completion_weights(0, 2)[2]
    assert apply(2, 2) == 1 and apply(2, 0) == 0


def test_completion_preserves_complex_dtype():
    jy = np.ones((5, 4, 1), dtype=complex) * (1 + 2j)
    jx = jy.copy()
    jy_f, jx_f = complete_pair(jy, jx, 0, 2)
    assert jy_f.dtype == complex and jy_f.shape == (5, 4, 3)
    np.testing.assert_allclose(jy_f[..., 0], 1 + 2j)
    np.testing.assert_allclose(jy_f[..., 1:], 0.0, atol=1e-15)
