"""Exact simplex integration of polynomials and the 2-exact vertex/edge rule.

The exact path maps the simplex to the reference element affinely and uses
the closed-form reference integrals of monomials; with Fraction vertices and
coefficients everything stays rational.
"""

from fractions import Fraction
from math import factorial

import numpy as np

from .exact import cross2, vec_sub
from .polynomials import MultiPolynomial


def simplex_measure(verts):
    """Signed length (d=1) or area (d=2) of a simplex given by its vertices."""
    if len(verts) == 2:
        return verts[1][0] - verts[0][0]
    if len(verts) == 3:
        a = vec_sub(verts[1], verts[0])
        b = vec_sub(verts[2], verts[0])
        return cross2(a, b) / 2
    raise ValueError("only d in {1,2} simplexes")


def simplex_centroid(verts):
    k = len(verts)
    d = len(verts[0])
    out = []
    for i in range(d):
        s = verts[0][i]
        for v in verts[1:]:
            s = s + v[i]
        out.append(s / k)
    return tuple(out)


_centroid = simplex_centroid


def _ref_integral(m):
    """Integral of s^m over the unit simplex (interval or triangle)."""
    k = len(m)
    num = 1
    for e in m:
        num *= factorial(e)
    return Fraction(num, factorial(sum(m) + k))


def integrate_poly_simplex(verts, poly):
    """Exact integral of each component of ``poly`` over the simplex.

    ``verts`` has d+1 vertices of dimension d (or 2 vertices for a segment
    embedded in 1D).  Returns a tuple of per-component integrals.
    """
    v0 = verts[0]
    cols = [vec_sub(v, v0) for v in verts[1:]]
    ref = poly.compose_affine(v0, cols)
    meas = simplex_measure(verts)
    jac = abs(meas) * factorial(len(cols))
    out = []
    for comp in ref.comps:
        s = 0
        for m, c in comp.items():
            s += c * _ref_integral(m)
        out.append(s * jac)
    return tuple(out)


def average_poly_simplex(verts, poly):
    meas = abs(simplex_measure(verts))
    return tuple(v / meas for v in integrate_poly_simplex(verts, poly))


def integrate_poly_segment(p0, p1, poly):
    """Exact line integral (with respect to arc-length fraction) times 1.

    Returns the integral over t in [0,1] of poly(p0 + t (p1-p0)); multiply by
    the segment length to get the true line integral.
    """
    ref = poly.compose_affine(p0, [vec_sub(p1, p0)])
    out = []
    for comp in ref.comps:
        s = 0
        for m, c in comp.items():
            s += c * Fraction(1, m[0] + 1)
        out.append(s)
    return tuple(out)


def quad_2exact(verts, f):
    """Vertex/edge-midpoint quadrature that integrates quadratics exactly.

    ``f`` is a callable returning a scalar (or the first component of a
    MultiPolynomial).  The weights are alpha = (2-d)/((d+1)(d+2)) at the
    vertices and beta = 4/((d+1)(d+2)) at the edge midpoints, times |e|.
    """
    d = len(verts[0])
    if isinstance(f, MultiPolynomial):
        poly = f
        f = lambda p: poly.evaluate(p)[0]
    alpha = Fraction(2 - d, (d + 1) * (d + 2))
    beta = Fraction(4, (d + 1) * (d + 2))
    total = 0
    for v in verts:
        total += alpha * f(v)
    k = len(verts)
    for i in range(k):
        for j in range(i + 1, k):
            mid = tuple((a + b) / 2 for a, b in zip(verts[i], verts[j]))
            total += beta * f(mid)
    return total * abs(simplex_measure(verts))


def second_moment_vertex_form(verts, direction):
    """M = |v| / ((d+1)(d+2)) * sum_j (e.(r_j - r_c))^2."""
    d = len(verts[0])
    c = _centroid(verts)
    s = 0
    for v in verts:
        x = sum(e * (vi - ci) for e, vi, ci in zip(direction, v, c))
        s += x * x
    return abs(simplex_measure(verts)) * s / ((d + 1) * (d + 2))


def second_moment_pairwise_form(verts, direction):
    """M = |v| / ((d+1)^2 (d+2)) * sum_{j<k} (e.(r_j - r_k))^2."""
    d = len(verts[0])
    s = 0
    k = len(verts)
    for i in range(k):
        for j in range(i + 1, k):
            x = sum(e * (a - b) for e, a, b in zip(direction, verts[i], verts[j]))
            s += x * x
    return abs(simplex_measure(verts)) * s / ((d + 1) ** 2 * (d + 2))


def second_moment_exact(verts, direction):
    """Exact integral of (e.(r - r_c))^2 over the simplex."""
    d = len(verts[0])
    c = _centroid(verts)
    lin = {}
    zero_m = (0,) * d
    const = -sum(e * ci for e, ci in zip(direction, c))
    if const != 0:
        lin[zero_m] = const
    for i in range(d):
        if direction[i] != 0:
            m = [0] * d
            m[i] = 1
            lin[tuple(m)] = direction[i]
    p = MultiPolynomial(d, [lin])
    p2 = MultiPolynomial(d, [_sq(p.comps[0])])
    return integrate_poly_simplex(verts, p2)[0]


def _sq(comp):
    out = {}
    for ma, ca in comp.items():
        for mb, cb in comp.items():
            m = tuple(x + y for x, y in zip(ma, mb))
            out[m] = out.get(m, 0) + ca * cb
    return out


# -- numerical quadrature for general callables -----------------------------

def gauss_legendre_01(npts):
    x, w = np.polynomial.legendre.leggauss(npts)
    return (x + 1.0) / 2.0, w / 2.0


def quad_callable_simplex(verts, f, order=8):
    """Gauss quadrature of a callable over a segment or triangle.

    Triangle integration uses the collapsed (Duffy) tensor rule, exact for
    polynomials of degree ~order.  Returns the integral (not the average).
    """
    verts = [tuple(float(x) for x in v) for v in verts]
    meas = abs(float(simplex_measure(verts)))
    x, w = gauss_legendre_01(order)
    if len(verts) == 2:
        a, b = verts[0][0], verts[1][0]
        total = 0.0
        for xi, wi in zip(x, w):
            total += wi * f((a + (b - a) * xi,))
        return total * abs(b - a)
    v0, v1, v2 = (np.array(v) for v in verts)
    total = 0.0
    for xi, wi in zip(x, w):
        for yj, wj in zip(x, w):
            # Duffy map from the unit square to the unit triangle
            s = xi
            t = yj * (1.0 - xi)
            jac = (1.0 - xi)
            p = v0 + s * (v1 - v0) + t * (v2 - v0)
            total += wi * wj * jac * f(tuple(p))
    return total * 2.0 * meas
