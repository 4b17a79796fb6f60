"""Truncation-error analysis and supra-convergence diagnostics.

The truncation error of the pair (M, A) on a polynomial f in the sense of a
projection Pi is
    eps_j = -(M Pi(A.grad f))_j + (A Pi f)_j,
evaluated with the shift-resolved stencils so that non-periodic polynomials
are sampled at true unwrapped positions.  Exact pairs yield exact rational
errors; the float path compares against 1e-11 times a per-polynomial scale.
"""

from dataclasses import dataclass, field
from math import factorial

import numpy as np
import scipy.sparse.linalg as spla

from .fields import MeshField
from .polynomials import MultiPolynomial, monomial_basis
from .projection import Projection

__all__ = [
    "TruncationReport", "DiagnosticsReport", "truncation_error",
    "exactness_order", "zero_mean_check", "compute_CA", "kernel_check",
    "image_membership", "scheme_constants", "stability_estimate",
    "advective_gradient", "poly_scale", "analyze_pair",
]

FLOAT_ZERO_REL = 1e-11


def advective_gradient(system, f):
    """A . grad f as a MultiPolynomial with n components."""
    derivs = [f.deriv(ax) for ax in range(system.d)]
    n = system.n
    mats = system.mats_exact if system.mats_exact is not None else system.mats
    comps = [dict() for _ in range(n)]
    out = MultiPolynomial(f.d, comps)
    for ax in range(system.d):
        dfa = derivs[ax]
        mat = mats[ax]
        contrib = [dict() for _ in range(n)]
        for alpha in range(n):
            acc = MultiPolynomial.zero(f.d, 1)
            for beta in range(n):
                coeff = mat[alpha][beta] if system.mats_exact is not None \
                    else float(mat[alpha, beta])
                if coeff == 0:
                    continue
                acc = acc + MultiPolynomial(f.d, [dfa.comps[beta]]).scaled(coeff)
            contrib[alpha] = acc.comps[0]
        out = out + MultiPolynomial(f.d, contrib)
    return out


def poly_scale(system, f):
    """Magnitude scale for truncation errors on f: ||A|| (1 + max |grad f|)."""
    g = max((f.deriv(ax).coeff_abs_sum() for ax in range(f.d)), default=0)
    return float(system.op_norm()) * (1.0 + float(g))


@dataclass
class TruncationReport:
    pair: object
    proj_kind: str
    poly: MultiPolynomial
    eps: list              # per-DOF n-tuples (Fraction or float)
    mean: tuple            # sum_j |K_j| eps_j
    norm: float            # weighted norm of eps
    exact: bool
    scale: float

    def field(self):
        vals = np.array([[float(x) for x in row] for row in self.eps])
        return MeshField(self.pair.layout, vals)

    def max_abs_mean(self):
        return max(abs(float(x)) for x in self.mean)

    def is_zero(self, rel=FLOAT_ZERO_REL):
        if self.exact:
            return all(x == 0 for row in self.eps for x in row)
        return self.norm <= rel * self.scale

    def mean_is_zero(self, rel=FLOAT_ZERO_REL):
        if self.exact:
            return all(x == 0 for x in self.mean)
        return self.max_abs_mean() <= rel * self.scale


def truncation_error(pair, proj, f):
    """eps_j(f, Pi) = -(M Pi(A.grad f))_j + (A Pi f)_j."""
    if proj.layout is not pair.layout:
        raise ValueError("projection layout does not match the operator pair")
    if f.degree() > 6:
        raise ValueError("polynomial degree capped at 6 for truncation errors")
    g = advective_gradient(pair.system, f)
    mvals = pair.apply_m_to_projection(proj, g)
    avals = pair.apply_a_to_projection(proj, f)
    n = pair.n
    eps = []
    for mv, av in zip(mvals, avals):
        eps.append(tuple(av[c] - mv[c] for c in range(n)))
    vol = pair.layout.vol
    if pair.exact:
        mean = tuple(sum(v * row[c] for v, row in zip(vol, eps))
                     for c in range(n))
    else:
        mean = tuple(sum(float(v) * float(row[c]) for v, row in zip(vol, eps))
                     for c in range(n))
    norm = float(np.sqrt(sum(float(v) * sum(float(x) ** 2 for x in row)
                             for v, row in zip(vol, eps))))
    return TruncationReport(pair, proj.kind, f, eps, mean, norm,
                            pair.exact, poly_scale(pair.system, f))


def _basis(pair, degree):
    return monomial_basis(pair.layout.d, degree, n=pair.n)


def exactness_order(pair, proj, p_max=5):
    """Largest p with vanishing truncation error on the whole of P_p."""
    order = -1
    for p in range(p_max + 1):
        ok = True
        for f in _basis(pair, p):
            rep = truncation_error(pair, proj, f)
            if not rep.is_zero():
                ok = False
                break
        if not ok:
            break
        order = p
    return order


@dataclass
class ZeroMeanReport:
    p: int
    verdict: bool
    worst: float
    per_monomial: dict


def zero_mean_check(pair, proj, p=None, polys=None):
    """Mean truncation error over the degree-(p+1) monomial basis.

    ``polys`` overrides the default basis (used for schemes whose zero-mean
    property is restricted to a subspace, like the steady flux correction).
    """
    if p is None:
        p = pair.p_design
    basis = polys if polys is not None else _basis(pair, p + 1)
    worst = 0.0
    verdict = True
    detail = {}
    for i, f in enumerate(basis):
        rep = truncation_error(pair, proj, f)
        bad = not rep.mean_is_zero()
        detail[_poly_label(f)] = rep.max_abs_mean()
        worst = max(worst, rep.max_abs_mean() / max(rep.scale, 1e-300))
        if bad:
            verdict = False
    return ZeroMeanReport(p, verdict, worst, detail)


def _poly_label(f):
    parts = []
    for c, comp in enumerate(f.comps):
        for m, coeff in comp.items():
            parts.append(f"c{c}:x^{m}")
    return "+".join(parts) or "0"


# -- weighted spectral machinery ---------------------------------------------------


def _weight_vectors(layout, n):
    w = np.repeat(layout.vol_float(), n)
    return np.sqrt(w)


def _weighted_dense(pair):
    """W^{1/2} A W^{-1/2} as a dense array (pattern-sized problems only)."""
    a = pair.matrix_a().toarray()
    sw = _weight_vectors(pair.layout, pair.n)
    return (sw[:, None] * a) / sw[None, :], sw


def compute_CA(pair):
    """C_A = 1 / (smallest positive singular value of h A restricted to the
    minimal pattern), in the volume-weighted norm.

    Returns (C_A, info dict); C_A is None for a degenerate (all-zero) operator.
    """
    rp = pair.restricted()
    h = rp.layout.h()
    b, _sw = _weighted_dense(rp)
    svals = np.linalg.svd(h * b, compute_uv=False)
    smax = svals.max() if len(svals) else 0.0
    thresh = 1e-10 * smax
    pos = svals[svals > thresh]
    info = {"h": h, "sigma_max": float(smax), "threshold": float(thresh),
            "rank": int(len(pos)), "dim": int(b.shape[0])}
    if len(pos) == 0:
        info["degenerate"] = True
        return None, info
    info["degenerate"] = False
    return float(1.0 / pos.min()), info


@dataclass
class KernelReport:
    dim: int
    holds: bool
    max_nonconstancy: float


def kernel_check(pair):
    """Assumption check: the pattern-periodic kernel of A holds only constants."""
    rp = pair.restricted()
    n = rp.n
    b, sw = _weighted_dense(rp)
    h = rp.layout.h()
    u, svals, vt = np.linalg.svd(h * b)
    smax = svals.max() if len(svals) else 0.0
    thresh = 1e-10 * smax
    null_rows = [vt[i] for i in range(len(svals)) if svals[i] <= thresh]
    # pad with exact zero rows for rank-deficient rectangular corner cases
    dim = len(null_rows) + (b.shape[1] - len(svals))
    worst = 0.0
    holds = dim == n
    ndof = rp.layout.ndof
    for row in null_rows:
        x = row / sw  # back to the unweighted field
        x = x / max(np.abs(x).max(), 1e-300)
        comps = x.reshape(ndof, n)
        dev = np.abs(comps - comps.mean(axis=0, keepdims=True)).max()
        worst = max(worst, dev)
        if dev > 1e-9:
            holds = False
    return KernelReport(dim, holds, worst)


def image_membership(report, pair=None):
    """Relative residual of the weighted least-squares solve A x = eps on the
    minimal pattern; membership threshold 1e-8.  eps = 0 is a member (0).
    """
    pair = report.pair if pair is None else pair
    rp = pair.restricted()
    if rp is not report.pair:
        proj = Projection(report.proj_kind, rp.layout)
        report = truncation_error(rp, proj, report.poly)
    b, sw = _weighted_dense(rp)
    eps = np.array([[float(x) for x in row] for row in report.eps]).reshape(-1)
    y = sw * eps
    ynorm = np.linalg.norm(y)
    if ynorm == 0.0:
        return 0.0, True
    sol, *_ = np.linalg.lstsq(b, y, rcond=None)
    resid = np.linalg.norm(b @ sol - y) / ynorm
    return float(resid), bool(resid <= 1e-8)


# -- scheme constants ---------------------------------------------------------------


def _block_norm(blk, exact):
    if exact:
        a = np.array([[float(x) for x in row] for row in blk])
    else:
        a = np.asarray(blk)
    return float(np.linalg.norm(a, 2))


def _stencil_sets(pair):
    """Union stencils S(j) of the pair (keys of M and A rows)."""
    rows = pair.a_rows()
    out = []
    for j in range(pair.layout.ndof):
        keys = set(rows[j].keys())
        if pair.mass_rows is not None:
            keys |= {(k, s) for (k, s, _c) in pair.mass_rows[j]}
        else:
            keys.add((j, (0,) * pair.layout.d))
        out.append(keys)
    return out


def _minv_norm(pair, iters=80, seed=0):
    """||M^{-1}|| in the weighted norm, by power iteration on the factorized M."""
    if pair.mass_rows is None:
        return 1.0
    m = pair.matrix_m().tocsc()
    sw = _weight_vectors(pair.layout, pair.n)
    lu = spla.splu(m)
    lut = spla.splu(m.T.tocsc())
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(m.shape[0])
    x /= np.linalg.norm(x)
    for _ in range(iters):
        # B = W^{1/2} M^{-1} W^{-1/2}; iterate with B^T B
        y = lu.solve(x / sw) * sw
        z = lut.solve(y * sw) / sw
        nz = np.linalg.norm(z)
        if nz == 0:
            return 0.0
        x = z / nz
    y = lu.solve(x / sw) * sw
    return float(np.linalg.norm(y))


def scheme_constants(pair, proj, p=None):
    """The scaling-invariant constants of the error estimate machinery.

    ||A|| is a direction-sampled estimate (flagged); ||M^{-1}|| comes from
    power iteration in the weighted norm.
    """
    lay = pair.layout
    d = lay.d
    n = pair.n
    if p is None:
        p = pair.p_design
    h = lay.h()
    per = lay.mesh.period
    rows = pair.a_rows()
    stencils = _stencil_sets(pair)

    cw = 0.0
    for j in range(lay.ndof):
        rj = np.array([float(x) for x in lay.rj[j]])
        for (k, s) in stencils[j]:
            rk = np.array([float(x + si * pi)
                           for x, si, pi in zip(lay.rj[k], s, per)])
            cw = max(cw, float(np.linalg.norm(rk - rj)) / h)

    cm = 0.0
    if pair.mass_rows is None:
        cm = 1.0
    else:
        for row in pair.mass_rows:
            cm = max(cm, sum(abs(float(c)) for (_k, _s, c) in row))

    ca_sum = 0.0
    amax = 0.0
    smax = 0
    for j in range(lay.ndof):
        tot = 0.0
        for (k, s), blk in rows[j].items():
            bn = _block_norm(blk, pair.exact)
            tot += bn
            amax = max(amax, bn)
        ca_sum = max(ca_sum, tot)
        smax = max(smax, len(stencils[j]))
    c_a = h * ca_sum

    # reverse stencil counts |{j : k in S(j)}|
    rev = {}
    for j in range(lay.ndof):
        for (k, _s) in stencils[j]:
            rev[k] = rev.get(k, 0) + 1
    rev_max = max(rev.values()) if rev else 0

    vols = lay.vol_float()
    c_v = float(vols.max() / vols.min())
    c_at = h * amax * np.sqrt(smax) * np.sqrt(rev_max) * np.sqrt(c_v)

    anorm = float(pair.system.op_norm())
    c_eps = 0.0
    for f in monomial_basis(d, p + 1, n=n, normalized=True):
        rep = truncation_error(pair, proj, f)
        c_eps = max(c_eps, rep.norm)
    c_eps /= h ** p

    c_A, ca_info = compute_CA(pair)
    c_p = factorial(p + d) // (factorial(p + 1) * factorial(d - 1))
    c_pi = n * c_p * (c_A if c_A is not None else np.inf) * c_eps
    minv = _minv_norm(pair)
    c_E = minv * (np.sqrt(d) * anorm * cm * cw ** (p + 1)
                  + c_a * cw ** (p + 2)
                  + n * c_p * c_at * cw * (c_A if c_A is not None else np.inf) * c_eps)
    return {
        "p": p, "h": h, "C_W": cw, "C_m": cm, "C_a": c_a, "C_v": c_v,
        "C_a_tilde": c_at, "A_norm_estimate": anorm, "C_eps": c_eps,
        "C_A": c_A, "C_A_degenerate": ca_info["degenerate"], "c_p": c_p,
        "C_Pi": c_pi, "M_inv_norm": minv, "C_E": c_E,
    }


def stability_estimate(pair, times, dense_limit=4000, nsamples=64, seed=0):
    """Samples of the stability function K(t) = sup_{tau<=t} ||exp(-tau M^-1 A)||.

    Dense path: matrix exponential in the weighted norm (a lower bound for
    the full V_per supremum, computed on the torus actually used and flagged
    as such).  Oversized problems fall back to propagating random unit
    fields with the time integrator.
    """
    size = pair.layout.ndof * pair.n
    times = sorted(set(float(t) for t in times))
    sw = _weight_vectors(pair.layout, pair.n)
    out = []
    if size <= dense_limit:
        from scipy.linalg import expm
        a = pair.matrix_a().toarray()
        m = pair.matrix_m().tocsc()
        lu = spla.splu(m)
        ma = np.column_stack([lu.solve(a[:, i]) for i in range(size)])
        envelope = 1.0
        for t in times:
            e = expm(-t * ma)
            val = np.linalg.norm((sw[:, None] * e) / sw[None, :], 2)
            envelope = max(envelope, val)
            out.append((t, envelope))
        return {"method": "dense-expm",
                "note": "lower bound: supremum over the assembled torus only",
                "samples": out}
    from .timeloop import integrate
    rng = np.random.default_rng(seed)
    envelope = 1.0
    prev = 0.0
    fields = [rng.standard_normal(size) for _ in range(nsamples)]
    states = [f / _weighted_norm(f, sw) for f in fields]
    for t in times:
        worst = 0.0
        new_states = []
        for f in states:
            u = MeshField(pair.layout, f.reshape(pair.layout.ndof, pair.n))
            v = integrate(pair, u, t - prev, None)
            vv = v.values.reshape(-1)
            new_states.append(vv)
            worst = max(worst, _weighted_norm(vv, sw))
        states = new_states
        prev = t
        envelope = max(envelope, worst)
        out.append((t, envelope))
    return {"method": "sampling",
            "note": "lower bound from 64 random fields",
            "samples": out}


def _weighted_norm(vec, sw):
    return float(np.linalg.norm(sw * vec))


@dataclass
class DiagnosticsReport:
    scheme: str
    p_measured: int
    zero_mean: ZeroMeanReport
    kernel: KernelReport
    c_A: float
    im_residuals: dict
    constants: dict
    stability: dict
    notes: list = field(default_factory=list)

    def advertised_ok(self):
        return (self.p_measured >= self.constants["p"]
                and self.zero_mean.verdict and self.kernel.holds)


def analyze_pair(pair, proj, p_max=5, stability_times=(0.5, 1.0),
                 zero_mean_polys=None):
    """Full diagnostics for one assembled pair."""
    p_meas = exactness_order(pair, proj, p_max=p_max)
    p = pair.p_design
    zm = zero_mean_check(pair, proj, p=p, polys=zero_mean_polys)
    kr = kernel_check(pair)
    c_A, _info = compute_CA(pair)
    consts = scheme_constants(pair, proj, p=p)
    ims = {}
    for f in _basis(pair, p + 1):
        rep = truncation_error(pair, proj, f)
        resid, member = image_membership(rep, pair)
        ims[_poly_label(f)] = resid
    stab = stability_estimate(pair, stability_times)
    return DiagnosticsReport(pair.name, p_meas, zm, kr, c_A, ims, consts, stab)
