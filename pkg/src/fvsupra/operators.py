"""Semidiscrete operator pairs (M, A) over one mesh period.

A is stored through its numerical fluxes: one record per control-volume face
holding the upwind splitting matrices and the two reconstruction stencils.
Row j and row k of A are derived from the same record, which makes the flux
antisymmetry F_jk = -F_kj structural.  Stencil entries are (dof, lattice
shift, coefficient) triples, so applying the operator to a non-periodic
polynomial (truncation-error evaluation) unwraps positions exactly.

Mass operators are scalar stencils times the identity block (all schemes
here have componentwise mass functionals).
"""

from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .layouts import cell_layout, median_dual_layout

__all__ = ["OperatorPair", "FaceFlux", "combine_stencil", "rebase_stencil"]


def combine_stencil(entries):
    """Merge duplicate (dof, shift) keys by summing coefficients."""
    acc = {}
    for (k, s, c) in entries:
        key = (k, s)
        acc[key] = acc.get(key, 0) + c
    return [(k, s, c) for (k, s), c in acc.items() if c != 0]


def rebase_stencil(entries, dz):
    """Re-express stencil entries in the chart shifted by dz."""
    return [(k, tuple(a - b for a, b in zip(s, dz)), c) for (k, s, c) in entries]


class FaceFlux:
    """Upwind flux F_jk = Pp R_jk[u] + Pm R_kj[u] for one face."""

    __slots__ = ("j", "k", "z", "pp", "pm", "rjk", "rkj")

    def __init__(self, j, k, z, pp, pm, rjk, rkj):
        self.j = j
        self.k = k
        self.z = z
        self.pp = pp      # (n,n) numpy array, or nested tuples on the exact path
        self.pm = pm
        self.rjk = rjk    # scalar stencil in the chart of j
        self.rkj = rkj    # scalar stencil in the chart of k

    def stencil_blocks_for_owner(self):
        """Block entries of F_jk in the chart of j."""
        out = []
        for (l, s, c) in self.rjk:
            out.append((l, s, c, self.pp))
        for (l, s, c) in rebase_stencil(self.rkj, tuple(-x for x in self.z)):
            out.append((l, s, c, self.pm))
        return out


class OperatorPair:
    def __init__(self, layout, system, name, p_design, face_fluxes,
                 mass_rows=None, exact=False, meta=None):
        self.layout = layout
        self.system = system
        self.name = name
        self.p_design = p_design
        self.face_fluxes = face_fluxes
        self.mass_rows = mass_rows  # None => identity
        self.exact = exact
        self.n = system.n
        self.meta = dict(meta or {})
        self._cache = {}

    # -- row construction ------------------------------------------------------

    def a_rows(self):
        """Per-DOF dict {(k, shift): n x n block} of the operator A."""
        if "a_rows" in self._cache:
            return self._cache["a_rows"]
        lay = self.layout
        n = self.n
        rows = [dict() for _ in range(lay.ndof)]

        def add(row, key, coeff, pmat):
            blk = row.get(key)
            if self.exact:
                add_blk = tuple(tuple(coeff * x for x in r) for r in pmat)
                if blk is None:
                    row[key] = add_blk
                else:
                    row[key] = tuple(tuple(a + b for a, b in zip(ra, rb))
                                     for ra, rb in zip(blk, add_blk))
            else:
                if blk is None:
                    blk = np.zeros((n, n))
                    row[key] = blk
                blk += float(coeff) * pmat

        for f in self.face_fluxes:
            inv_j = (1 / lay.vol[f.j]) if self.exact else 1.0 / float(lay.vol[f.j])
            inv_k = (1 / lay.vol[f.k]) if self.exact else 1.0 / float(lay.vol[f.k])
            blocks = f.stencil_blocks_for_owner()
            for (l, s, c, pmat) in blocks:
                add(rows[f.j], (l, s), c * inv_j, pmat)
            minus_z = tuple(-x for x in f.z)
            for (l, s, c, pmat) in blocks:
                sk = tuple(a - b for a, b in zip(s, f.z))
                add(rows[f.k], (l, sk), -(c * inv_k), pmat)
        self._cache["a_rows"] = rows
        return rows

    def m_scalar_rows(self):
        """Mass rows as scalar stencils (None means the identity)."""
        return self.mass_rows

    # -- invariants ----------------------------------------------------------------

    def mass_row_defect(self):
        """max_j ||sum_k m_jk - 1|| for the scalar mass stencils."""
        if self.mass_rows is None:
            return 0.0
        worst = 0.0
        for row in self.mass_rows:
            s = sum(c for (_k, _s, c) in row)
            worst = max(worst, abs(float(s) - 1.0))
        return worst

    def flux_antisymmetry_defect(self):
        """Structurally zero: rows j/k are generated from shared face records."""
        return 0.0

    # -- matrix views ------------------------------------------------------------------

    def _collapse(self, rows):
        n = self.n
        nd = self.layout.ndof
        data, ri, ci = [], [], []
        for j, row in enumerate(rows):
            acc = {}
            for (k, _s), blk in row.items():
                b = np.asarray([[float(x) for x in r] for r in blk]) \
                    if self.exact else blk
                if k in acc:
                    acc[k] = acc[k] + b
                else:
                    acc[k] = np.array(b, dtype=float, copy=True)
            for k, b in acc.items():
                for a in range(n):
                    for c in range(n):
                        if b[a, c] != 0.0:
                            data.append(b[a, c])
                            ri.append(j * n + a)
                            ci.append(k * n + c)
        return sp.csr_matrix((data, (ri, ci)), shape=(nd * n, nd * n))

    def matrix_a(self):
        if "mat_a" not in self._cache:
            self._cache["mat_a"] = self._collapse(self.a_rows())
        return self._cache["mat_a"]

    def matrix_m(self):
        if "mat_m" not in self._cache:
            n, nd = self.n, self.layout.ndof
            if self.mass_rows is None:
                self._cache["mat_m"] = sp.identity(nd * n, format="csr")
            else:
                data, ri, ci = [], [], []
                for j, row in enumerate(self.mass_rows):
                    acc = {}
                    for (k, _s, c) in row:
                        acc[k] = acc.get(k, 0.0) + float(c)
                    for k, c in acc.items():
                        if c != 0.0:
                            for a in range(n):
                                data.append(c)
                                ri.append(j * n + a)
                                ci.append(k * n + a)
                self._cache["mat_m"] = sp.csr_matrix(
                    (data, (ri, ci)), shape=(nd * n, nd * n))
        return self._cache["mat_m"]

    # -- application to projected polynomials ------------------------------------------

    def apply_a_to_projection(self, proj, f):
        """(A Pi f)_j for a MultiPolynomial f, exact when the pair is exact."""
        rows = self.a_rows()
        return _apply_block_rows(rows, proj, f, self.n, self.exact)

    def apply_m_to_projection(self, proj, g):
        if self.mass_rows is None:
            out = []
            for j in range(self.layout.ndof):
                out.append(proj.dof_value_exact(g, j))
            return out
        cache = {}
        out = []
        for j, row in enumerate(self.mass_rows):
            acc = [Fraction(0)] * self.n if self.exact else [0.0] * self.n
            for (k, s, c) in row:
                key = (k, s)
                if key not in cache:
                    cache[key] = proj.dof_value_exact(g, k, shift=s)
                v = cache[key]
                for a in range(self.n):
                    acc[a] += c * v[a]
            out.append(tuple(acc))
        return out

    # -- pattern restriction --------------------------------------------------------------

    def restricted(self):
        """Restriction of (M, A) to fields with the minimal pattern period.

        Returns self when the mesh has no replication provenance.  Entries of
        corresponding DOFs are averaged over the N^d copies (they coincide for
        a translation-invariant assembly).
        """
        mesh = self.layout.mesh
        if mesh.pattern is None:
            return self
        kind = self.layout.dof_kind()
        cls, cp = mesh.dof_pattern_maps("cell" if kind == "cell" else "vertex")
        nfac = mesh.pattern_factor
        pat_layout = (cell_layout if kind == "cell" else median_dual_layout)(mesh.pattern)
        npat = pat_layout.ndof
        copies = nfac ** mesh.d
        rows = self.a_rows()
        zero = Fraction(0) if self.exact else 0.0
        new_rows = [dict() for _ in range(npat)]
        wt = Fraction(1, copies) if self.exact else 1.0 / copies
        for j, row in enumerate(rows):
            jj = int(cls[j])
            target = new_rows[jj]
            for (k, s), c_blk in row.items():
                zpat = tuple(int(cp[k][ax]) + nfac * s[ax] - int(cp[j][ax])
                             for ax in range(mesh.d))
                key = (int(cls[k]), zpat)
                if self.exact:
                    add_blk = tuple(tuple(wt * x for x in r) for r in c_blk)
                    if key in target:
                        target[key] = tuple(tuple(a + b for a, b in zip(ra, rb))
                                            for ra, rb in zip(target[key], add_blk))
                    else:
                        target[key] = add_blk
                else:
                    if key not in target:
                        target[key] = np.zeros((self.n, self.n))
                    target[key] += wt * c_blk

        new_mass = None
        if self.mass_rows is not None:
            macc = [dict() for _ in range(npat)]
            for j, row in enumerate(self.mass_rows):
                jj = int(cls[j])
                for (k, s, c) in row:
                    zpat = tuple(int(cp[k][ax]) + nfac * s[ax] - int(cp[j][ax])
                                 for ax in range(mesh.d))
                    key = (int(cls[k]), zpat)
                    macc[jj][key] = macc[jj].get(key, zero) + wt * c
            new_mass = [[(k, s, c) for (k, s), c in row.items()] for row in macc]

        out = OperatorPair(pat_layout, self.system, self.name, self.p_design,
                           face_fluxes=[], mass_rows=new_mass, exact=self.exact,
                           meta={**self.meta, "restricted": True})
        out._cache["a_rows"] = new_rows
        return out

    # -- export --------------------------------------------------------------------------

    def coo_text(self):
        """Coordinate-format dump of M and A (collapsed periodic matrices)."""
        lines = [f"# scheme={self.name} n={self.n} ndof={self.layout.ndof}"]
        for tag, mat in (("M", self.matrix_m().tocoo()), ("A", self.matrix_a().tocoo())):
            for r, c, v in zip(mat.row, mat.col, mat.data):
                lines.append(f"{tag} {r} {c} {float(v)!r}")
        return "\n".join(lines) + "\n"


def _apply_block_rows(rows, proj, f, n, exact):
    cache = {}
    out = []
    for row in rows:
        acc = [Fraction(0)] * n if exact else [0.0] * n
        for (k, s), blk in row.items():
            key = (k, s)
            if key not in cache:
                cache[key] = proj.dof_value_exact(f, k, shift=s)
            v = cache[key]
            if exact:
                for a in range(n):
                    acc[a] += sum(blk[a][b] * v[b] for b in range(n))
            else:
                bv = np.asarray(blk) @ np.array([float(x) for x in v])
                for a in range(n):
                    acc[a] += bv[a]
        out.append(tuple(acc))
    return out
