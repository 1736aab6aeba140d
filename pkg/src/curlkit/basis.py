"""Modal basis on a single mesh edge.

Each edge carries a polynomial in the normalized coordinate
xi in [-1/2, 1/2] (edge midpoint at xi = 0), expanded in

    b0 = 1
    b1 = xi
    b2 = xi^2 - 1/12
    b3 = xi^3 - (3/20) xi

which are orthogonal on [-1/2, 1/2] with masses

    int b_m^2 dxi = 1, 1/12, 1/180, 1/2800.

Quadrature is Gauss-Legendre with p+2 points, exact through degree
2(p+2)-1, which covers every product integral the moment updates need.
"""

import numpy as np

MAX_DEGREE = 3

# int b_m^2 over the edge, one entry per mode
MASS = np.array([1.0, 1.0 / 12.0, 1.0 / 180.0, 1.0 / 2800.0])


def basis_values(degree, xi):
    """Values of b_0..b_degree at points xi, shape xi.shape + (degree+1,)."""
    if not 0 <= degree <= MAX_DEGREE:
        raise ValueError(f"degree must be in 0..{MAX_DEGREE}, got {degree}")
    xi = np.asarray(xi, dtype=float)
    cols = [np.ones_like(xi)]
    if degree >= 1:
        cols.append(xi)
    if degree >= 2:
        cols.append(xi * xi - 1.0 / 12.0)
    if degree >= 3:
        cols.append(xi ** 3 - 0.15 * xi)
    return np.stack(cols, axis=-1)


def gauss_nodes(npts):
    """Gauss-Legendre nodes/weights on [-1/2, 1/2]; weights sum to 1."""
    t, w = np.polynomial.legendre.leggauss(npts)
    return 0.5 * t, 0.5 * w


class EdgeBasis:
    """Degree-p edge basis bundled with its p+2 point quadrature rule."""

    def __init__(self, degree):
        if not 0 <= degree <= MAX_DEGREE:
            raise ValueError(f"degree must be in 0..{MAX_DEGREE}, got {degree}")
        self.degree = degree
        self.mass = MASS[: degree + 1].copy()
        self.nodes, self.weights = gauss_nodes(degree + 2)
        # vand[q, m] = b_m(node_q)
        self.vand = basis_values(degree, self.nodes)

    def __repr__(self):
        return f"EdgeBasis(degree={self.degree})"


def eval_edge_poly(coeffs, xi):
    """Evaluate sum_m coeffs[..., m] * b_m(xi).

    coeffs may carry leading batch axes; xi may be scalar or an array.
    Scalar xi contracts the mode axis; array xi appends a point axis.
    """
    coeffs = np.asarray(coeffs)
    b = basis_values(coeffs.shape[-1] - 1, xi)
    if b.ndim == 1:
        return coeffs @ b
    return coeffs @ b.swapaxes(-1, -2) if coeffs.ndim > 1 else b @ coeffs


def project_edge(f, basis):
    """L2-project a function of xi onto the modal basis.

    coeffs_m = (1/mass_m) int f b_m dxi, evaluated with the basis rule;
    exact whenever f is a polynomial of degree <= p+2.
    """
    fvals = np.asarray([f(x) for x in basis.nodes], dtype=float)
    return (basis.vand.T * basis.weights) @ fvals / basis.mass
