from fractions import Fraction

import numpy as np

from fvsupra.layouts import cell_layout, median_dual_layout
from fvsupra.mesh import build_1d_pattern, build_ti_triangular, perturb_nodes
from fvsupra.polynomials import MultiPolynomial
from fvsupra.projection import Projection, project


def square_mesh():
    return build_ti_triangular((1, 0), (0, 1), (1, 1))


def test_constant_projects_to_constant():
    mesh = square_mesh()
    for lay in (cell_layout(mesh), median_dual_layout(mesh)):
        for kind in ("pointwise", "cell-average"):
            proj = Projection(kind, lay)
            f = MultiPolynomial.constant(2, [Fraction(7, 3)])
            fld = project(proj, f)
            assert np.allclose(fld.values, 7 / 3)
            assert all(row[0] == Fraction(7, 3) for row in fld.exact)


def test_linear_average_is_centroid_value():
    mesh = square_mesh()
    lay = cell_layout(mesh)
    proj = Projection("cell-average", lay)
    f = MultiPolynomial.monomial(2, (1, 0))
    fld = project(proj, f)
    got = sorted(row[0] for row in fld.exact)
    assert got == [Fraction(1, 3), Fraction(2, 3)]


def test_quadratic_average_reference_triangle():
    # average of x^2 over the triangle (0,0),(1,0),(0,1) is 1/6
    mesh = square_mesh()
    lay = cell_layout(mesh)
    proj = Projection("cell-average", lay)
    f = MultiPolynomial.monomial(2, (2, 0))
    tri = [i for i in range(2)
           if (Fraction(1, 3), Fraction(1, 3)) == lay.rj[i]][0]
    val = proj.dof_value_exact(f, tri)[0]
    assert val == Fraction(1, 6)


def test_median_cell_average_consistent_with_subcells():
    mesh = perturb_nodes(
        build_ti_triangular((Fraction(1, 4), 0), (Fraction(1, 8), Fraction(1, 4)), (4, 4)),
        Fraction(1, 6), seed=5)
    lay = median_dual_layout(mesh)
    proj = Projection("cell-average", lay)
    f = MultiPolynomial.monomial(2, (1, 1))
    # averaging a polynomial by quadrature over subcells must agree
    j = 3
    exact = float(proj.dof_value_exact(f, j)[0])
    approx = proj.dof_value_callable(lambda p: p[0] * p[1], j, quad_order=6)[0]
    assert abs(exact - approx) < 1e-13


def test_pointwise_with_shift():
    mesh = build_1d_pattern([0.5, 0.5])
    lay = median_dual_layout(mesh)
    proj = Projection("pointwise", lay)
    f = MultiPolynomial.monomial(1, (1,))
    assert proj.dof_value_exact(f, 0, shift=(1,))[0] == Fraction(1)
    assert proj.dof_value_exact(f, 1, shift=(-1,))[0] == Fraction(-1, 2)
