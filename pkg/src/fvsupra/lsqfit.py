"""Least-squares polynomial fits on mesh stencils.

One quadratic-fit builder backs every 2-exact derivative operator (gradient,
single and double derivatives, directional Hessians); cell reconstructions
use the same normal-equations core with an exact mean constraint on the
center cell.  Stencils grow by adjacency rings on rank deficiency.
"""

from .exact import lstsq_rows
from .polynomials import MultiPolynomial, dim_P, monomial_exponents

__all__ = ["StencilFitError", "grow_stencil", "nodal_derivatives",
           "cell_reconstruction"]


class StencilFitError(ValueError):
    pass


def _adjacency(layout, j):
    if layout.dof_kind() == "vertex":
        return layout.mesh.node_neighbors(j)
    return [(k, z) for (k, z) in layout.mesh.element_vertex_neighbors(j)]


def grow_stencil(layout, j, min_size, start_rings=1, max_rings=6):
    """(dof, shift) pairs around j by BFS rings; always contains (j, 0)."""
    d = layout.d
    zero = (0,) * d
    have = {(j, zero)}
    frontier = [(j, zero)]
    rings = 0
    order = [(j, zero)]
    while rings < start_rings or len(order) < min_size:
        rings += 1
        if rings > max_rings:
            break
        new = []
        for (k, z) in frontier:
            for (m, dz) in _adjacency(layout, k):
                cand = (m, tuple(a + b for a, b in zip(dz, z)))
                if cand not in have:
                    have.add(cand)
                    new.append(cand)
        if not new:
            break
        order.extend(sorted(new))
        frontier = new
    return order, rings


def _delta(layout, j, k, z, to_num):
    per = layout.mesh.period
    rj = layout.rj[j]
    rk = layout.rj[k]
    return tuple(to_num(b + s * p - a) for a, b, s, p in zip(rj, rk, z, per))


def _weight(delta, policy):
    if policy == "uniform":
        return 1
    q = sum(x * x for x in delta)
    if q == 0:
        raise StencilFitError("coincident stencil points")
    return 1 / q


def _mono_eval(m, delta):
    v = 1
    for x, k in zip(delta, m):
        for _ in range(k):
            v = v * x
    return v


def nodal_derivatives(layout, j, degree, weight_policy="invdist2", exact=False,
                      start_rings=None):
    """Stencils of the derivative operators from a degree-``degree`` fit at DOF j.

    The fit interpolates exactly at the center (the constant is eliminated),
    which makes the operators reproduce all polynomials up to ``degree``.
    Returns a dict mapping each exponent multi-index (|m| >= 1) to the
    stencil of the corresponding derivative D^m (with the factorial factor,
    i.e. true derivatives, not raw fit coefficients).

    Entries are in the chart of j.  Raises StencilFitError naming the DOF if
    the stencil stays rank-deficient after ring growth.
    """
    d = layout.d
    to_num = (lambda x: x) if exact else float
    monos = [m for p in range(1, degree + 1) for m in monomial_exponents(d, p)]
    ncoef = len(monos)
    if start_rings is None:
        # 1D quadratic fits are the classical 3-point operators; 2D fits
        # start from the 2-ring
        start_rings = 2 if (degree >= 2 and d > 1) else 1
    rings = start_rings
    last_err = None
    while rings <= 6:
        stencil, _r = grow_stencil(layout, j, max(ncoef + 1, 0), start_rings=rings)
        pts = [(k, z) for (k, z) in stencil if (k, z) != stencil[0]]
        if len(pts) >= ncoef:
            rows, weights = [], []
            for (k, z) in pts:
                delta = _delta(layout, j, k, z, to_num)
                rows.append([_mono_eval(m, delta) for m in monos])
                weights.append(_weight(delta, weight_policy))
            try:
                cmat = lstsq_rows(rows, weights, ncoef)
            except ValueError as e:
                last_err = e
            else:
                out = {}
                zero = (0,) * d
                for mi, m in enumerate(monos):
                    fact = 1
                    for e in m:
                        for t in range(2, e + 1):
                            fact *= t
                    entries = []
                    csum = 0
                    for (k, z), c in zip(pts, cmat[mi]):
                        coeff = fact * c
                        entries.append((k, z, coeff))
                        csum += coeff
                    entries.append((j, zero, -csum))
                    out[m] = entries
                return out
        rings += 1
    raise StencilFitError(
        f"rank-deficient derivative stencil at DOF {j} (degree {degree}): {last_err}")


class CellReconstruction:
    """Constrained weighted LS reconstruction polynomial of one cell.

    p_j(r) = u_j + sum_m c_m (phi_m(r)), phi_m = (r - r_j)^m - <(r - r_j)^m>_{K_j},
    which enforces the exact mean constraint on cell j.  ``functional``
    turns any linear functional L with L[1] = 1 into a stencil for L[p_j].
    """

    def __init__(self, layout, j, monos, stencil_pts, cmat, base_avgs, shifted_monos):
        self.layout = layout
        self.j = j
        self.monos = monos
        self.pts = stencil_pts
        self.cmat = cmat
        self.base_avgs = base_avgs  # <(r-r_j)^m> over K_j
        self.shifted_monos = shifted_monos  # global-coordinate polynomials

    def functional(self, lvals):
        """Stencil of L[p_j] given L[(r - r_j)^m] for each monomial.

        ``lvals`` lists the values L applied to the uncentered monomials; the
        mean correction is applied here.
        """
        d = self.layout.d
        zero = (0,) * d
        entries = {(self.j, zero): 1}
        for mi in range(len(self.monos)):
            t = lvals[mi] - self.base_avgs[mi]
            if t == 0:
                continue
            row = self.cmat[mi]
            csum = 0
            for (k, z), c in zip(self.pts, row):
                key = (k, z)
                entries[key] = entries.get(key, 0) + t * c
                csum += c
            entries[(self.j, zero)] -= t * csum
        return [(k, s, c) for (k, s), c in entries.items() if c != 0]


def cell_reconstruction(layout, j, p, proj_avg, weight_policy="invdist2",
                        exact=False):
    """Build the p-th order reconstruction of cell j (cell-average data)."""
    d = layout.d
    to_num = (lambda x: x) if exact else float
    monos = [m for q in range(1, p + 1) for m in monomial_exponents(d, q)]
    ncoef = len(monos)
    min_size = -(-3 * dim_P(d, p) // 2)  # ceil(1.5 dim P_p), includes the cell itself
    rj = layout.rj[j]
    shifted = [MultiPolynomial.monomial(d, m).shifted(tuple(-x for x in rj))
               for m in monos]
    base_avgs = [to_num(proj_avg.dof_value_exact(poly, j)[0]) for poly in shifted]
    rings = 1
    last_err = None
    while rings <= 6:
        stencil, _r = grow_stencil(layout, j, min_size, start_rings=rings)
        pts = [(k, z) for (k, z) in stencil if (k, z) != stencil[0]]
        if len(pts) + 1 >= min_size and len(pts) >= ncoef:
            rows, weights = [], []
            for (k, z) in pts:
                delta = _delta(layout, j, k, z, to_num)
                row = [to_num(proj_avg.dof_value_exact(poly, k, shift=z)[0]) - b
                       for poly, b in zip(shifted, base_avgs)]
                rows.append(row)
                weights.append(_weight(delta, weight_policy))
            try:
                cmat = lstsq_rows(rows, weights, ncoef)
            except ValueError as e:
                last_err = e
            else:
                return CellReconstruction(layout, j, monos, pts, cmat,
                                          base_avgs, shifted)
        rings += 1
    raise StencilFitError(
        f"rank-deficient reconstruction stencil at cell {j} (p={p}): {last_err}")
