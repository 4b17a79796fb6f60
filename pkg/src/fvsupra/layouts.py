"""Control-volume layouts: cell-centered and median-dual vertex-centered.

Face geometry is exact (Fractions); every oriented face area satisfies
n_jk = -n_kj structurally because each face is stored once with its owner.
All positions attached to a face are expressed in the owner's periodic
chart; the neighbor's chart is obtained by translating with the stored
integer lattice shift.
"""

from fractions import Fraction

import numpy as np

from .exact import dot, vec_sub
from .mesh import MeshError

__all__ = ["ControlVolumeLayout", "cell_layout", "median_dual_layout",
           "median_face_geometric"]


class FaceRec:
    """One control-volume face, owned by DOF j; n points into K_k."""

    __slots__ = ("j", "k", "z", "njk", "rface", "measure")

    def __init__(self, j, k, z, njk, rface, measure):
        self.j = j
        self.k = k
        self.z = z          # chart shift of k relative to j (integer lattice)
        self.njk = njk      # oriented area vector, exact
        self.rface = rface  # face centroid in the chart of j, exact
        self.measure = measure

    def __repr__(self):
        return f"FaceRec(j={self.j}, k={self.k}, z={self.z})"


class ControlVolumeLayout:
    def __init__(self, kind, mesh, rj, vol, faces, subcells=None):
        self.kind = kind
        self.mesh = mesh
        self.rj = rj
        self.vol = vol
        self.faces = faces
        self._subcells = subcells
        self.ndof = len(rj)
        self._nb = None
        self._float = {}

    # -- basic queries -------------------------------------------------------

    @property
    def d(self):
        return self.mesh.d

    def dof_kind(self):
        return "cell" if self.kind == "cell" else "vertex"

    def neighbor_records(self, j):
        """Faces of K_j as (k, z, njk, rface, face_index) in the chart of j."""
        if self._nb is None:
            nb = [[] for _ in range(self.ndof)]
            per = self.mesh.period
            for idx, f in enumerate(self.faces):
                nb[f.j].append((f.k, f.z, f.njk, f.rface, idx))
                rface_k = tuple(x - s * p for x, s, p in zip(f.rface, f.z, per))
                nb[f.k].append((f.j, tuple(-s for s in f.z),
                                tuple(-x for x in f.njk), rface_k, idx))
            self._nb = nb
        return self._nb[j]

    def subcells(self, j):
        """Exact simplex decomposition of K_j (used for cell averages)."""
        if self._subcells is None:
            raise MeshError("subcell decomposition not available for this layout")
        return self._subcells[j]

    def vol_float(self):
        if "vol" not in self._float:
            self._float["vol"] = np.array([float(v) for v in self.vol])
        return self._float["vol"]

    def rj_float(self):
        if "rj" not in self._float:
            self._float["rj"] = np.array([[float(x) for x in r] for r in self.rj])
        return self._float["rj"]

    def total_volume(self):
        s = Fraction(0)
        for v in self.vol:
            s += v
        return s

    def h(self):
        """Mesh step: the longest mesh edge."""
        return self.mesh.h_max()

    def closure_defect(self):
        """max_j |sum_k n_jk| / sum_k |n_jk| over all DOFs (floats)."""
        worst = 0.0
        for j in range(self.ndof):
            acc = np.zeros(self.d)
            tot = 0.0
            for (k, z, njk, rf, _i) in self.neighbor_records(j):
                v = np.array([float(x) for x in njk])
                acc += v
                tot += np.linalg.norm(v)
            if tot > 0:
                worst = max(worst, np.linalg.norm(acc) / tot)
        return worst

    def unit_tensor_defect(self):
        """Worst deviation of (1/|K_j|) sum_k n_jk (x) (r_k + r_j)/2 from I."""
        worst = 0.0
        per = self.mesh.period
        for j in range(self.ndof):
            acc = np.zeros((self.d, self.d))
            rj = np.array([float(x) for x in self.rj[j]])
            for (k, z, njk, rf, _i) in self.neighbor_records(j):
                rk = np.array([float(x + s * p)
                               for x, s, p in zip(self.rj[k], z, per)])
                n = np.array([float(x) for x in njk])
                acc += np.outer(n, (rk + rj) / 2.0)
            acc /= float(self.vol[j])
            worst = max(worst, np.abs(acc - np.eye(self.d)).max())
        return worst


# -- cell-centered layout --------------------------------------------------------


def cell_layout(mesh):
    """Control volumes coincide with mesh elements."""
    rj = [mesh.element_centroid(i) for i in range(mesh.n_elements)]
    vol = [mesh.element_measure(i) for i in range(mesh.n_elements)]
    faces = []
    subcells = []
    for i in range(mesh.n_elements):
        el = mesh.elements[i]
        subcells.append([tuple(mesh.vertex_position(n, s) for n, s in el)])
    for f in mesh.faces():
        (e1, slot1, a1), (e2, slot2, a2) = f.left, f.right
        z = tuple(x - y for x, y in zip(a1, a2))
        verts = mesh.element_vertices(e1)
        if mesh.d == 1:
            x = verts[slot1]
            njk = (Fraction(1) if slot1 == 1 else Fraction(-1),)
            rface = x
            meas = 1.0
        else:
            va = verts[slot1]
            vb = verts[(slot1 + 1) % 3]
            dxy = vec_sub(vb, va)
            njk = (dxy[1], -dxy[0])  # outward for CCW ordering
            rface = tuple((p + q) / 2 for p, q in zip(va, vb))
            meas = (float(dxy[0]) ** 2 + float(dxy[1]) ** 2) ** 0.5
        faces.append(FaceRec(e1, e2, z, njk, rface, meas))
    return ControlVolumeLayout("cell", mesh, rj, vol, faces, subcells)


# -- median-dual vertex-centered layout --------------------------------------------


def _opposite_face_normal(verts, slot):
    """Outward scaled normal of the simplex face opposite vertex ``slot``."""
    if len(verts) == 2:
        return (Fraction(1),) if slot == 0 else (Fraction(-1),)
    a = verts[(slot + 1) % 3]
    b = verts[(slot + 2) % 3]
    dxy = vec_sub(b, a)
    return (dxy[1], -dxy[0])


def _edge_instances(mesh, face):
    """For a node edge, yield (elem, slot_a, slot_b, chart) per incident element.

    ``chart`` translates the element into the chart where vertex a of the
    canonical edge sits at the canonical node position.
    """
    na, nb, rel = face.key
    out = []
    for (elem, slot, anchor) in (face.left, face.right):
        el = mesh.elements[elem]
        if mesh.d == 1:
            raise MeshError("edge instances are 2D only")
        sa_slot, sb_slot = slot, (slot + 1) % 3
        (n1, s1), (n2, s2) = el[sa_slot], el[sb_slot]
        # after translating the element by -anchor, the canonical lower node
        # sits at shift 0; figure out which slot is node a
        t1 = tuple(x - y for x, y in zip(s1, anchor))
        t2 = tuple(x - y for x, y in zip(s2, anchor))
        if (n1, t1) == (na, (0,) * mesh.d) and (n2, t2) == (nb, rel):
            out.append((elem, sa_slot, sb_slot, tuple(-x for x in anchor)))
        elif (n2, t2) == (na, (0,) * mesh.d) and (n1, t1) == (nb, rel):
            out.append((elem, sb_slot, sa_slot, tuple(-x for x in anchor)))
        else:
            raise MeshError("inconsistent edge instance")
    return out


def median_dual_layout(mesh):
    """Vertex-centered layout with median dual cells.

    n_jk is assembled per incident simplex from the closed formula
    n_jk_e = (1/(d(d+1))) (n_gamma(e,j) - n_gamma(e,k)) where n_gamma are the
    outward face normals of the simplex; a slower geometric path integrating
    over the median polyline is available for cross-checking.
    """
    d = mesh.d
    rj = list(mesh.nodes)
    vol = [Fraction(0)] * mesh.n_nodes
    for i in range(mesh.n_elements):
        m = mesh.element_measure(i)
        for (n, _s) in mesh.elements[i]:
            vol[n] += m / (d + 1)

    faces = []
    c = Fraction(1, d * (d + 1))
    if d == 1:
        # 1D node edges are the segments themselves; build faces from elements
        for i, el in enumerate(mesh.elements):
            (na, sa), (nb, sb) = el
            # canonical: owner = left node in its own chart
            z = tuple(x - y for x, y in zip(sb, sa))
            njk = (Fraction(1),)
            xa = mesh.vertex_position(na, (0,))
            xb = mesh.vertex_position(nb, z)
            rface = ((xa[0] + xb[0]) / 2,)
            faces.append(FaceRec(na, nb, z, njk, rface, 1.0))
    else:
        for f in mesh.faces():
            na, nb, rel = f.key
            acc = (Fraction(0), Fraction(0))
            for (elem, slot_a, slot_b, chart) in _edge_instances(mesh, f):
                verts = [tuple(x + s * p for x, s, p in zip(
                    mesh.vertex_position(n, sh), chart, mesh.period))
                    for n, sh in mesh.elements[elem]]
                ng_a = _opposite_face_normal(verts, slot_a)
                ng_b = _opposite_face_normal(verts, slot_b)
                acc = (acc[0] + c * (ng_a[0] - ng_b[0]),
                       acc[1] + c * (ng_a[1] - ng_b[1]))
            ra = mesh.nodes[na]
            rb = mesh.vertex_position(nb, rel)
            rface = tuple((p + q) / 2 for p, q in zip(ra, rb))
            meas = (float(acc[0]) ** 2 + float(acc[1]) ** 2) ** 0.5
            faces.append(FaceRec(na, nb, rel, acc, rface, meas))

    subcells = _median_subcells(mesh)
    return ControlVolumeLayout("vertex-median", mesh, rj, vol, faces, subcells)


def _median_subcells(mesh):
    """Simplex decomposition of each median cell, in the node's chart."""
    d = mesh.d
    sub = [[] for _ in range(mesh.n_nodes)]
    for i, el in enumerate(mesh.elements):
        verts = [mesh.vertex_position(n, s) for n, s in el]
        if d == 1:
            mid = ((verts[0][0] + verts[1][0]) / 2,)
            for slot, (n, s) in enumerate(el):
                x = verts[slot]
                piece = [tuple(qc - sc * pc for qc, sc, pc in zip(q, s, mesh.period))
                         for q in (x, mid)]
                if piece[0][0] > piece[1][0]:
                    piece = [piece[1], piece[0]]
                sub[n].append(tuple(piece))
        else:
            cen = tuple(sum(v[ax] for v in verts) / 3 for ax in range(2))
            for slot, (n, s) in enumerate(el):
                x = verts[slot]
                m1 = tuple((x[ax] + verts[(slot + 1) % 3][ax]) / 2 for ax in range(2))
                m2 = tuple((x[ax] + verts[(slot + 2) % 3][ax]) / 2 for ax in range(2))
                tris = [(x, m1, cen), (x, cen, m2)]
                moved = []
                for tri in tris:
                    moved.append(tuple(
                        tuple(q - sq * pq for q, sq, pq in zip(pt, s, mesh.period))
                        for pt in tri))
                sub[n].extend(moved)
    return sub


def median_face_geometric(mesh, face):
    """Geometric oracle for n_jk: integrate the unit normal over the median
    polyline (2D) or take the signed point normal (1D).

    Returns the same vector as the closed-formula path, computed from the
    midpoint-to-centroid segments directly.
    """
    if mesh.d == 1:
        return (Fraction(1),)
    na, nb, rel = face.key
    total = (Fraction(0), Fraction(0))
    for (elem, slot_a, slot_b, chart) in _edge_instances(mesh, face):
        verts = [tuple(x + s * p for x, s, p in zip(
            mesh.vertex_position(n, sh), chart, mesh.period))
            for n, sh in mesh.elements[elem]]
        pa, pb = verts[slot_a], verts[slot_b]
        mid = tuple((p + q) / 2 for p, q in zip(pa, pb))
        cen = tuple(sum(v[ax] for v in verts) / 3 for ax in range(2))
        seg = vec_sub(cen, mid)
        n = (seg[1], -seg[0])
        if dot(n, vec_sub(pb, pa)) < 0:
            n = (-n[0], -n[1])
        total = (total[0] + n[0], total[1] + n[1])
    return total
