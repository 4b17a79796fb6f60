"""Scheme assembly: operator pairs (M, A) for every scheme family.

All schemes share the upwind flux
    F_jk = (A.n + |A.n|)/2 R_jk[u] + (A.n - |A.n|)/2 R_kj[u]
and differ in the reconstruction operators R_jk and (for the flux correction
family) in the mass operator.  Reconstructions are scalar stencils; with a
scalar system and rational mesh the whole assembly can run in exact
arithmetic.
"""

from fractions import Fraction

import numpy as np

from .exact import cross2, dot, vec_sub
from .lsqfit import StencilFitError, cell_reconstruction, nodal_derivatives
from .operators import FaceFlux, OperatorPair, combine_stencil, rebase_stencil
from .projection import Projection
from .quadrature import integrate_poly_segment

__all__ = [
    "upwind_face_flux", "assemble_basic_fv", "assemble_poly_recon",
    "assemble_bbr3", "assemble_edge_based", "assemble_fc",
    "assemble_fc_1d_modified", "assemble_by_name", "SCHEME_NAMES",
]

SCHEME_NAMES = ("basic", "fv-p1", "fv-p2", "bbr3", "eb-central", "eb-upwind",
                "fc-steady", "fc-div", "fc-xg", "fc-xg-mod")


def upwind_face_flux(system, n_jk, u_left, u_right):
    """Upwind numerical flux value for given one-sided reconstructions."""
    pp, pm = system.upwind_split(tuple(float(x) for x in n_jk))
    return pp @ np.atleast_1d(np.asarray(u_left, dtype=float)) \
        + pm @ np.atleast_1d(np.asarray(u_right, dtype=float))


def _splits(system, njk, exact, central):
    if exact:
        if central:
            if system.n != 1:
                raise ValueError("exact assembly needs a scalar system")
            an = system.direction_matrix_exact(njk)[0][0]
            return ((an / 2,),), ((an / 2,),)
        return system.upwind_split(njk, exact=True)
    nf = tuple(float(x) for x in njk)
    if central:
        an = system.direction_matrix(nf)
        return an / 2.0, an / 2.0
    return system.upwind_split(nf)


def _assemble(layout, system, name, p, recon, exact, mass_rows=None,
              central=False, meta=None):
    per = layout.mesh.period
    faces = []
    for f in layout.faces:
        pp, pm = _splits(system, f.njk, exact, central)
        rjk = recon(f.j, f.k, f.z, f.njk, f.rface)
        zneg = tuple(-s for s in f.z)
        rface_k = tuple(x - s * q for x, s, q in zip(f.rface, f.z, per))
        njk_neg = tuple(-x for x in f.njk)
        rkj = recon(f.k, f.j, zneg, njk_neg, rface_k)
        faces.append(FaceFlux(f.j, f.k, f.z, pp, pm, rjk, rkj))
    return OperatorPair(layout, system, name, p, faces, mass_rows=mass_rows,
                        exact=exact, meta=meta)


# -- basic finite-volume method ------------------------------------------------


def assemble_basic_fv(layout, system, exact=False):
    """R_jk[u] = u_j: the 0-exact basic finite-volume method."""
    if layout.kind != "cell":
        raise ValueError("basic FV needs a cell-centered layout")
    zero = (0,) * layout.d
    one = Fraction(1) if exact else 1.0

    def recon(j, _k, _z, _njk, _rf):
        return [(j, zero, one)]

    return _assemble(layout, system, "basic", 0, recon, exact)


# -- polynomial-reconstruction finite volume ---------------------------------------


def assemble_poly_recon(layout, system, p, weight_policy="invdist2", exact=False):
    """Cell-centered scheme with a p-th order constrained LS reconstruction.

    R_jk is the face average of the reconstruction polynomial of cell j; the
    mean constraint on cell j is enforced exactly by elimination.
    """
    if layout.kind != "cell":
        raise ValueError("polynomial reconstruction needs a cell-centered layout")
    if p not in (1, 2):
        raise ValueError("reconstruction order p must be 1 or 2")
    proj_avg = Projection("cell-average", layout)
    to_num = (lambda x: x) if exact else float
    recs = [cell_reconstruction(layout, j, p, proj_avg, weight_policy, exact)
            for j in range(layout.ndof)]

    def recon(j, _k, _z, njk, rface):
        rec = recs[j]
        lvals = []
        if layout.d == 1:
            for poly in rec.shifted_monos:
                lvals.append(to_num(poly.evaluate(rface)[0]))
        else:
            ev = (-njk[1], njk[0])  # edge vector recovered from the normal
            va = tuple(x - e / 2 for x, e in zip(rface, ev))
            vb = tuple(x + e / 2 for x, e in zip(rface, ev))
            for poly in rec.shifted_monos:
                lvals.append(to_num(integrate_poly_segment(va, vb, poly)[0]))
        return rec.functional(lvals)

    return _assemble(layout, system, f"fv-p{p}", p, recon, exact)


# -- multislope BBR3 ---------------------------------------------------------------


def _ray_hits(origin, direction, segs, tol_pos):
    """Intersections of the ray origin + t*direction (t >= 0) with segments.

    ``tol_pos`` is the absolute on-segment tolerance (0 on the exact path).
    Yields (t, seg_index, s); collinear overlaps yield the segment endpoints
    that lie on the ray.
    """
    out = []
    dd = dot(direction, direction)
    dlen = float(dd) ** 0.5
    tol_t = 0 if tol_pos == 0 else tol_pos / dlen
    for idx, (pa, pb) in enumerate(segs):
        w = vec_sub(pb, pa)
        b = vec_sub(pa, origin)
        den = cross2(direction, w)
        wlen2 = dot(w, w)
        if wlen2 == 0:
            continue
        near_parallel = tol_pos != 0 and abs(float(den)) <= tol_pos * dlen
        if den != 0 and not near_parallel:
            t = cross2(b, w) / den
            s = cross2(b, direction) / den
            pad = 0 if tol_pos == 0 else tol_pos / float(wlen2) ** 0.5
            if t >= -tol_t and -pad <= s <= 1 + pad:
                out.append((t, idx, s))
        else:
            # parallel: accept only (near-)collinear segments, at endpoints
            off = cross2(b, direction)
            if tol_pos == 0:
                if off != 0:
                    continue
            elif abs(float(off)) > tol_pos * dlen:
                continue
            for s_end, pt in ((0, pa), (1, pb)):
                t = dot(vec_sub(pt, origin), direction) / dd
                if t >= -tol_t:
                    out.append((t, idx, s_end))
    return out


def assemble_bbr3(layout, system, exact=False):
    """Multislope cell-centered scheme with ray-interpolated one-sided values.

    Both intersection points are searched among segments of cell-center
    pairs from the vertex neighborhood A(j); if more than one intersection
    exists the one furthest from r_j wins (ties broken by the largest ray
    parameter).  A missing point falls back to R_jk[u] = u_j; the fallback
    count is reported in the pair metadata.
    """
    if layout.kind != "cell" or layout.d != 2:
        raise ValueError("BBR3 needs a 2D cell-centered layout")
    mesh = layout.mesh
    per = mesh.period
    to_num = (lambda x: x) if exact else float
    tol = 0 if exact else 1e-12 * mesh.h_max()
    zero = (0, 0)
    one = Fraction(1) if exact else 1.0

    # vertex neighborhoods with unwrapped centroids, cached per cell
    hoods = []
    for j in range(layout.ndof):
        items = []
        for (m, z) in mesh.element_vertex_neighbors(j):
            pos = tuple(to_num(x + s * q)
                        for x, s, q in zip(layout.rj[m], z, per))
            items.append((m, z, pos))
        hoods.append(items)
    fallbacks = [0]

    def recon(j, k, z, _njk, rface):
        rj = tuple(to_num(x) for x in layout.rj[j])
        origin = tuple(to_num(x) for x in rface)
        direction = vec_sub(rj, origin)          # r_j sits at t = 1
        dlen = float(dot(direction, direction)) ** 0.5
        tloc = 0 if tol == 0 else tol / dlen     # parameter-space tolerance
        tau = tol * dlen                          # side-test tolerance
        hood = hoods[j]
        m = len(hood)

        # minus ray: through r_j, segments between any two neighborhood centers
        side = [float(cross2(vec_sub(pos, origin), direction))
                for (_m, _z, pos) in hood]
        minus_segs, minus_pairs = [], []
        for a in range(m):
            for b in range(a + 1, m):
                if (side[a] <= tau and side[b] >= -tau) or \
                        (side[b] <= tau and side[a] >= -tau):
                    minus_segs.append((hood[a][2], hood[b][2]))
                    minus_pairs.append((a, b))
        best_minus = None
        for (t, idx, s) in _ray_hits(origin, direction, minus_segs, tol):
            metric = abs(t - 1)
            if best_minus is None or metric > best_minus[0] + tloc or \
                    (abs(metric - best_minus[0]) <= tloc and t > best_minus[1]):
                best_minus = (metric, t, idx, s)

        # plus ray: opposite direction, segments from r_k to neighborhood centers
        rk = tuple(to_num(x + s * q) for x, s, q in zip(layout.rj[k], z, per))
        ndir = tuple(-x for x in direction)
        plus_segs = [(rk, hood[a][2]) for a in range(m)]
        best_plus = None
        for (t, idx, s) in _ray_hits(origin, ndir, plus_segs, tol):
            metric = 1 + t
            if best_plus is None or metric > best_plus[0] + tloc or \
                    (abs(metric - best_plus[0]) <= tloc and t > best_plus[1]):
                best_plus = (metric, t, idx, s)

        if best_minus is None or best_plus is None or best_minus[0] <= tloc \
                or best_plus[0] <= tloc:
            fallbacks[0] += 1
            return [(j, zero, one)]

        qminus, _tm, idxm, sm = best_minus
        qplus, _tp, idxp, sp = best_plus
        a, b = minus_pairs[idxm]
        minus_val = [(hood[a][0], hood[a][1], 1 - sm), (hood[b][0], hood[b][1], sm)]
        ap = idxp
        plus_val = [(k, z, 1 - sp), (hood[ap][0], hood[ap][1], sp)]

        cp = Fraction(2, 3) / qplus if exact else (2.0 / 3.0) / qplus
        cm = Fraction(1, 3) / qminus if exact else (1.0 / 3.0) / qminus
        entries = [(j, zero, 1 - cp + cm)]
        entries += [(kk, zz, cp * c) for (kk, zz, c) in plus_val]
        entries += [(kk, zz, -(cm * c)) for (kk, zz, c) in minus_val]
        return combine_stencil(entries)

    pair = _assemble(layout, system, "bbr3", 1, recon, exact,
                     meta={"bbr3_fallbacks": 0})
    pair.meta["bbr3_fallbacks"] = fallbacks[0]
    return pair


# -- 1-exact edge-based schemes -----------------------------------------------------


def assemble_edge_based(layout, system, variant="galerkin-central", exact=False):
    """Vertex-centered edge-based schemes on median dual cells.

    'galerkin-central': F_jk = A.n_jk (u_j + u_k)/2 (mass-lumped Galerkin).
    'gradient-upwind': upwind flux of the two one-sided edge-midpoint values
    u_j + ((r_k - r_j)/2).(G u)_j with a 1-exact least-squares nodal gradient.
    Both satisfy the edge-based 1-exactness condition at edge centers.
    """
    if layout.kind != "vertex-median":
        raise ValueError("edge-based schemes need the median-dual vertex layout")
    d = layout.d
    per = layout.mesh.period
    zero = (0,) * d
    half = Fraction(1, 2) if exact else 0.5
    one = Fraction(1) if exact else 1.0
    to_num = (lambda x: x) if exact else float

    if variant == "galerkin-central":
        def recon(j, k, z, _njk, _rf):
            return [(j, zero, half), (k, z, half)]
        return _assemble(layout, system, "eb-central", 1, recon, exact,
                         central=True)

    if variant == "gradient-upwind":
        grads = []
        for j in range(layout.ndof):
            try:
                dv = nodal_derivatives(layout, j, 1, exact=exact)
            except StencilFitError as e:
                raise StencilFitError(f"gradient stencil failure at node {j}: {e}")
            grads.append([dv[m] for m in _axis_monos(d, 1)])

        def recon(j, k, z, _njk, _rf):
            delta = tuple(to_num(b + s * q - a) for a, b, s, q in
                          zip(layout.rj[j], layout.rj[k], z, per))
            entries = [(j, zero, one)]
            for ax in range(d):
                c = delta[ax] / 2
                entries += [(kk, zz, c * cc) for (kk, zz, cc) in grads[j][ax]]
            return combine_stencil(entries)

        return _assemble(layout, system, "eb-upwind", 1, recon, exact)

    raise ValueError(f"unknown edge-based variant '{variant}'")


def _axis_monos(d, order):
    out = []
    for ax in range(d):
        m = [0] * d
        m[ax] = order
        out.append(tuple(m))
    return out


# -- flux correction family -----------------------------------------------------------


def _fc_recon(layout, exact):
    """Steady-FC reconstruction R_jk[u] = u_j + ((r_k-r_j)/2).(G u)_j, G 2-exact."""
    d = layout.d
    per = layout.mesh.period
    zero = (0,) * d
    one = Fraction(1) if exact else 1.0
    to_num = (lambda x: x) if exact else float
    fits = [nodal_derivatives(layout, j, 2, exact=exact)
            for j in range(layout.ndof)]
    gmonos = _axis_monos(d, 1)

    def recon(j, k, z, _njk, _rf):
        delta = tuple(to_num(b + s * q - a) for a, b, s, q in
                      zip(layout.rj[j], layout.rj[k], z, per))
        entries = [(j, zero, one)]
        for ax in range(d):
            c = delta[ax] / 2
            entries += [(kk, zz, c * cc) for (kk, zz, cc) in fits[j][gmonos[ax]]]
        return combine_stencil(entries)

    return recon, fits


def _hessian_stencil(fits_j, delta, d):
    """Stencil of ((delta . grad)^2 u)_j from the quadratic-fit derivatives."""
    entries = []
    if d == 1:
        entries += [(k, z, delta[0] * delta[0] * c) for (k, z, c) in fits_j[(2,)]]
        return entries
    dxx, dxy, dyy = fits_j[(2, 0)], fits_j[(1, 1)], fits_j[(0, 2)]
    cxx = delta[0] * delta[0]
    cxy = 2 * delta[0] * delta[1]
    cyy = delta[1] * delta[1]
    entries += [(k, z, cxx * c) for (k, z, c) in dxx]
    entries += [(k, z, cxy * c) for (k, z, c) in dxy]
    entries += [(k, z, cyy * c) for (k, z, c) in dyy]
    return entries


def assemble_fc(layout, system, variant="extended-galerkin", exact=False):
    """Flux correction method; variants differ in the unsteady term.

    'steady': pointwise mass (M = I).
    'divergence': mass rows from the nodal divergence of the antiderivative
        field v_j[f] reconstructed with the FC fluxes.
    'extended-galerkin': mass rows sum_k v_jk s_jk / |K_j| with
        v_jk = (r_k - r_j).n_jk / (2d) and s_jk[u] = u_j - d/(4(d+2)) H_jk[u].
    """
    if layout.kind != "vertex-median":
        raise ValueError("flux correction needs the median-dual vertex layout")
    d = layout.d
    per = layout.mesh.period
    zero = (0,) * d
    one = Fraction(1) if exact else 1.0
    to_num = (lambda x: x) if exact else float
    recon, fits = _fc_recon(layout, exact)

    if variant == "steady":
        return _assemble(layout, system, "fc-steady", 2, recon, exact)

    if variant == "extended-galerkin":
        coef = Fraction(d, 4 * (d + 2)) if exact else d / (4.0 * (d + 2))
        mass_rows = []
        for j in range(layout.ndof):
            acc = []
            volj = layout.vol[j] if exact else float(layout.vol[j])
            for (k, z, njk, _rf, _i) in layout.neighbor_records(j):
                delta = tuple(to_num(b + s * q - a) for a, b, s, q in
                              zip(layout.rj[j], layout.rj[k], z, per))
                vjk = dot(delta, tuple(to_num(x) for x in njk)) / (2 * d)
                acc.append((j, zero, vjk))
                hs = _hessian_stencil(fits[j], delta, d)
                acc += [(kk, zz, -(vjk * coef * c)) for (kk, zz, c) in hs]
            row = [(kk, zz, c / volj) for (kk, zz, c) in combine_stencil(acc)]
            mass_rows.append(row)
        return _assemble(layout, system, "fc-xg", 2, recon, exact,
                         mass_rows=mass_rows)

    if variant == "divergence":
        mass_rows = _fc_divergence_mass(layout, fits, exact)
        return _assemble(layout, system, "fc-div", 2, recon, exact,
                         mass_rows=mass_rows)

    raise ValueError(f"unknown flux-correction variant '{variant}'")


def _fc_divergence_mass(layout, fits, exact):
    """Mass rows of the divergence formulation.

    For each node j the vector mesh function v_j[f] has the components
    (1/d) [ xi_i f_l - xi_i^2 (D_i f)_l / 2 + xi_i^3 (D_ii f)_l / 6 ],
    xi = r_l - r_j, whose nodal divergence (approximated with the FC face
    reconstructions) reproduces f when f is quadratic.  The resulting
    coefficients m_jk define the mass operator.
    """
    d = layout.d
    per = layout.mesh.period
    zero = (0,) * d
    to_num = (lambda x: x) if exact else float
    first = _axis_monos(d, 1)
    second = _axis_monos(d, 2)
    mass_rows = []
    for j in range(layout.ndof):
        rj = tuple(to_num(x) for x in layout.rj[j])
        vcache = {}

        def v_at(l, shift, comp):
            key = (l, shift, comp)
            if key in vcache:
                return vcache[key]
            pos = tuple(to_num(x + s * q)
                        for x, s, q in zip(layout.rj[l], shift, per))
            xi = pos[comp] - rj[comp]
            entries = [(l, shift, xi / d)]
            fl = fits[l]
            dif = rebase_stencil(fl[first[comp]], tuple(-s for s in shift))
            entries += [(kk, zz, -(xi * xi / (2 * d)) * c) for (kk, zz, c) in dif]
            dii = rebase_stencil(fl[second[comp]], tuple(-s for s in shift))
            entries += [(kk, zz, (xi * xi * xi / (6 * d)) * c) for (kk, zz, c) in dii]
            res = combine_stencil(entries)
            vcache[key] = res
            return res

        def grad_v(l, shift, comp, ax):
            """(d/dx_ax of component comp of v) at node l, chart of j."""
            gl = rebase_stencil(fits[l][first[ax]], tuple(-s for s in shift))
            acc = []
            for (q, sq, c) in gl:
                acc += [(kk, zz, c * cc) for (kk, zz, cc) in v_at(q, sq, comp)]
            return combine_stencil(acc)

        acc_row = []
        volj = layout.vol[j] if exact else float(layout.vol[j])
        for (k, z, njk, _rf, _i) in layout.neighbor_records(j):
            rk = tuple(to_num(x + s * q)
                       for x, s, q in zip(layout.rj[k], z, per))
            nn = tuple(to_num(x) for x in njk)
            for comp in range(d):
                # R_jk[v_comp] = v_comp(j) + ((r_k-r_j)/2) . grad v_comp at j
                half_phi = [(kk, zz, c) for (kk, zz, c) in v_at(j, zero, comp)]
                for ax in range(d):
                    c0 = (rk[ax] - rj[ax]) / 2
                    half_phi += [(kk, zz, c0 * c)
                                 for (kk, zz, c) in grad_v(j, zero, comp, ax)]
                # R_kj[v_comp] = v_comp(k) + ((r_j-r_k)/2) . grad v_comp at k
                half_phi += v_at(k, z, comp)
                for ax in range(d):
                    c0 = (rj[ax] - rk[ax]) / 2
                    half_phi += [(kk, zz, c0 * c)
                                 for (kk, zz, c) in grad_v(k, z, comp, ax)]
                scale = nn[comp] / 2
                acc_row += [(kk, zz, scale * c) for (kk, zz, c) in half_phi]
        row = [(kk, zz, c / volj) for (kk, zz, c) in combine_stencil(acc_row)]
        mass_rows.append(row)
    return mass_rows


def assemble_fc_1d_modified(layout, system, exact=False):
    """1D flux correction with the modified mass term
    hbar_j (h+^2 + h-^2)/24 (L u)_j in place of (h+^3 + h-^3)/24 (L u)_j.

    2-exact on non-uniform meshes; coincides with fc-xg on uniform meshes.
    """
    if layout.kind != "vertex-median" or layout.d != 1:
        raise ValueError("the modified flux correction is a 1D vertex scheme")
    per = layout.mesh.period
    zero = (0,)
    one = Fraction(1) if exact else 1.0
    to_num = (lambda x: x) if exact else float
    recon, fits = _fc_recon(layout, exact)
    mass_rows = []
    for j in range(layout.ndof):
        hs = []
        for (k, z, _njk, _rf, _i) in layout.neighbor_records(j):
            delta = to_num(layout.rj[k][0] + z[0] * per[0] - layout.rj[j][0])
            hs.append(abs(delta))
        h2sum = sum(h * h for h in hs)
        acc = [(j, zero, one)]
        lap = fits[j][(2,)]
        c = h2sum / 24
        acc += [(kk, zz, -(c * cc)) for (kk, zz, cc) in lap]
        mass_rows.append(combine_stencil(acc))
    return _assemble(layout, system, "fc-xg-mod", 2, recon, exact,
                     mass_rows=mass_rows)


# -- registry ------------------------------------------------------------------------


def assemble_by_name(name, layout, system, exact=False, **params):
    if name == "basic":
        return assemble_basic_fv(layout, system, exact=exact)
    if name == "fv-p1":
        return assemble_poly_recon(layout, system, 1, exact=exact, **params)
    if name == "fv-p2":
        return assemble_poly_recon(layout, system, 2, exact=exact, **params)
    if name == "bbr3":
        return assemble_bbr3(layout, system, exact=exact)
    if name == "eb-central":
        return assemble_edge_based(layout, system, "galerkin-central", exact=exact)
    if name == "eb-upwind":
        return assemble_edge_based(layout, system, "gradient-upwind", exact=exact)
    if name == "fc-steady":
        return assemble_fc(layout, system, "steady", exact=exact)
    if name == "fc-div":
        return assemble_fc(layout, system, "divergence", exact=exact)
    if name == "fc-xg":
        return assemble_fc(layout, system, "extended-galerkin", exact=exact)
    if name == "fc-xg-mod":
        return assemble_fc_1d_modified(layout, system, exact=exact)
    raise ValueError(f"unknown scheme '{name}'")
