"""Projections of continuous fields onto mesh DOFs.

Pointwise projection samples at the representative points r_j; cell-average
projection integrates exactly over the control volumes (polynomials reduce
to closed-form simplex integrals; general callables need a quadrature
order).
"""

import numpy as np

from .fields import MeshField
from .polynomials import MultiPolynomial
from .quadrature import integrate_poly_simplex, quad_callable_simplex

__all__ = ["Projection", "project"]


class Projection:
    def __init__(self, kind, layout):
        if kind not in ("pointwise", "cell-average"):
            raise ValueError(f"unknown projection kind '{kind}'")
        self.kind = kind
        self.layout = layout

    def dof_value_exact(self, f, j, shift=None):
        """Exact per-DOF value of a MultiPolynomial, in the dof's chart + shift."""
        lay = self.layout
        per = lay.mesh.period
        if shift is None:
            shift = (0,) * lay.d
        if self.kind == "pointwise":
            pt = tuple(x + s * p for x, s, p in zip(lay.rj[j], shift, per))
            return f.evaluate(pt)
        offs = tuple(s * p for s, p in zip(shift, per))
        g = f.shifted(offs) if any(o != 0 for o in offs) else f
        total = None
        for simplex in lay.subcells(j):
            vals = integrate_poly_simplex(simplex, g)
            total = vals if total is None else tuple(a + b for a, b in zip(total, vals))
        return tuple(v / lay.vol[j] for v in total)

    def dof_value_callable(self, f, j, shift=None, quad_order=None):
        lay = self.layout
        per = lay.mesh.period
        if shift is None:
            shift = (0,) * lay.d
        offs = np.array([float(s * p) for s, p in zip(shift, per)])
        if self.kind == "pointwise":
            pt = np.array([float(x) for x in lay.rj[j]]) + offs
            return np.atleast_1d(np.asarray(f(tuple(pt)), dtype=float))
        if quad_order is None:
            raise ValueError("cell-average of a callable needs a quadrature order")
        total = None
        for simplex in lay.subcells(j):
            val = quad_callable_simplex(
                simplex, lambda p: np.asarray(f(tuple(np.asarray(p, dtype=float) + offs)),
                                              dtype=float),
                order=quad_order)
            total = val if total is None else total + val
        return np.atleast_1d(total / float(lay.vol[j]))


def project(proj, f, quad_order=None):
    """Project a MultiPolynomial or callable onto the layout's DOFs."""
    lay = proj.layout
    if isinstance(f, MultiPolynomial):
        rows = [proj.dof_value_exact(f, j) for j in range(lay.ndof)]
        vals = np.array([[float(x) for x in row] for row in rows])
        return MeshField(lay, vals, exact=rows)
    rows = [proj.dof_value_callable(f, j, quad_order=quad_order)
            for j in range(lay.ndof)]
    return MeshField(lay, np.vstack([np.atleast_1d(r) for r in rows]))
