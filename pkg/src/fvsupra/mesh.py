"""Periodic meshes on the d-torus, d in {1, 2}.

Node coordinates are stored as exact Fractions and element vertices carry
integer lattice shifts, so translation invariance is structural: an edge that
crosses the period boundary is represented exactly, never through ghost
nodes.  Geometry is always evaluated in the chart of the owning entity by
unwrapping neighbor positions with the stored shifts.
"""

import json
import random
from fractions import Fraction

import numpy as np

from .exact import cross2, frac, vec_sub

__all__ = [
    "PeriodicMesh",
    "build_1d_pattern",
    "build_ti_triangular",
    "perturb_nodes",
    "replicate_scale",
    "mesh_to_json",
    "mesh_from_json",
    "save_mesh",
    "load_mesh",
]


class MeshError(ValueError):
    pass


class Face:
    """One interior face of the torus mesh (shared by exactly two elements)."""

    __slots__ = ("key", "left", "right")

    def __init__(self, key, left, right):
        self.key = key
        self.left = left    # (elem, local_slot, anchor_shift)
        self.right = right


class PeriodicMesh:
    def __init__(self, d, period, nodes, elements, reorient=False,
                 pattern=None, pattern_factor=1,
                 node_pattern=None, node_copy=None,
                 elem_pattern=None, elem_copy=None):
        self.d = d
        self.period = tuple(frac(p) for p in period)
        self.nodes = [tuple(frac(x) for x in nd) for nd in nodes]
        elems = []
        for el in elements:
            el = tuple((int(n), tuple(int(s) for s in sh)) for n, sh in el)
            elems.append(el)
        self.elements = elems
        self.pattern = pattern
        self.pattern_factor = pattern_factor
        self.node_pattern = node_pattern
        self.node_copy = node_copy
        self.elem_pattern = elem_pattern
        self.elem_copy = elem_copy
        self._cache = {}
        if reorient:
            self._reorient()
        self._normalize_elements()
        self._validate()

    # -- construction helpers ----------------------------------------------

    def _reorient(self):
        for i, el in enumerate(self.elements):
            if self.element_measure(i) < 0:
                el = list(el)
                el[-2], el[-1] = el[-1], el[-2]
                self.elements[i] = tuple(el)
        self._cache.clear()

    def _normalize_elements(self):
        """Translate each element so its centroid lies in the fundamental cell."""
        for i, el in enumerate(self.elements):
            c = self.element_centroid(i)
            moved = False
            offs = []
            for ax in range(self.d):
                k = c[ax] // self.period[ax]
                offs.append(int(k))
                if k != 0:
                    moved = True
            if moved:
                self.elements[i] = tuple(
                    (n, tuple(s - o for s, o in zip(sh, offs))) for n, sh in el)
        self._cache.clear()

    def _validate(self):
        vol = Fraction(0)
        for i in range(len(self.elements)):
            m = self.element_measure(i)
            if m <= 0:
                raise MeshError(f"element {i} has non-positive measure {m}")
            vol += m
        cellvol = Fraction(1)
        for p in self.period:
            cellvol *= p
        if vol != cellvol:
            raise MeshError(
                f"element measures sum to {vol}, period cell volume is {cellvol}; "
                "mesh does not tile the torus")
        self.faces()  # raises if any face is not shared by exactly two elements

    # -- geometry ------------------------------------------------------------

    def vertex_position(self, n, shift):
        return tuple(x + s * p for x, s, p in zip(self.nodes[n], shift, self.period))

    def element_vertices(self, i):
        return [self.vertex_position(n, sh) for n, sh in self.elements[i]]

    def element_measure(self, i):
        v = self.element_vertices(i)
        if self.d == 1:
            return v[1][0] - v[0][0]
        a = vec_sub(v[1], v[0])
        b = vec_sub(v[2], v[0])
        return cross2(a, b) / 2

    def element_centroid(self, i):
        v = self.element_vertices(i)
        k = len(v)
        return tuple(sum(p[ax] for p in v) / k for ax in range(self.d))

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_elements(self):
        return len(self.elements)

    def cell_volume(self):
        out = Fraction(1)
        for p in self.period:
            out *= p
        return out

    # -- topology ------------------------------------------------------------

    @staticmethod
    def _edge_key(va, vb):
        """Canonical key for the torus edge between vertex instances va, vb.

        Returns (key, anchor) where translating by -anchor maps this instance
        onto the canonical representative.
        """
        (na, sa), (nb, sb) = va, vb
        if na < nb:
            rel = tuple(y - x for x, y in zip(sa, sb))
            return (na, nb, rel), sa
        if na > nb:
            rel = tuple(y - x for x, y in zip(sb, sa))
            return (nb, na, rel), sb
        rel = tuple(y - x for x, y in zip(sa, sb))
        if rel < tuple(0 for _ in rel):
            rel = tuple(-r for r in rel)
            return (na, na, rel), sb
        return (na, na, rel), sa

    def _element_edges(self, i):
        el = self.elements[i]
        if self.d == 1:
            return [(el[0],), (el[1],)]
        return [(el[0], el[1]), (el[1], el[2]), (el[2], el[0])]

    def faces(self):
        """Interior faces: node pairs in 2D, node instances in 1D."""
        if "faces" in self._cache:
            return self._cache["faces"]
        table = {}
        for i in range(len(self.elements)):
            for slot, edge in enumerate(self._element_edges(i)):
                if self.d == 1:
                    (n, s), = edge
                    key, anchor = (n,), s
                else:
                    key, anchor = self._edge_key(*edge)
                table.setdefault(key, []).append((i, slot, anchor))
        faces = []
        for key, incid in table.items():
            if len(incid) != 2:
                raise MeshError(
                    f"face {key} is shared by {len(incid)} elements; mesh is not conformal")
            faces.append(Face(key, incid[0], incid[1]))
        faces.sort(key=lambda f: f.key)
        self._cache["faces"] = faces
        return faces

    def node_edges(self):
        """Unique node-to-node edges as (n_lo, n_hi, rel_shift) keys in 2D.

        In 1D the edges are the segments themselves.
        """
        if "node_edges" in self._cache:
            return self._cache["node_edges"]
        if self.d == 2:
            out = [f.key for f in self.faces()]
        else:
            seen = {}
            for i in range(len(self.elements)):
                key, _ = self._edge_key(*self.elements[i])
                seen[key] = True
            out = sorted(seen)
        self._cache["node_edges"] = out
        return out

    def node_neighbors(self, n):
        """Neighbors of node class n as (node, shift) pairs (shift = chart of n)."""
        key = ("node_nb", n)
        if key in self._cache:
            return self._cache[key]
        if "node_nb_all" not in self._cache:
            nb = [[] for _ in self.nodes]
            for (a, b, rel) in self.node_edges():
                nb[a].append((b, rel))
                nb[b].append((a, tuple(-r for r in rel)))
            self._cache["node_nb_all"] = [sorted(set(x)) for x in nb]
        res = self._cache["node_nb_all"][n]
        self._cache[key] = res
        return res

    def node_elements(self, n):
        """Elements containing node class n, as (elem, chart_shift) pairs.

        The chart shift translates the element so that its instance of node n
        sits at the node's canonical position.
        """
        if "node_elems" not in self._cache:
            inc = [[] for _ in self.nodes]
            for i, el in enumerate(self.elements):
                for (m, sh) in el:
                    inc[m].append((i, tuple(-s for s in sh)))
            self._cache["node_elems"] = [sorted(set(x)) for x in inc]
        return self._cache["node_elems"][n]

    def element_vertex_neighbors(self, i):
        """Elements sharing at least one vertex with element i, with chart shifts.

        Returns (elem, shift) pairs in the chart of element i; includes i
        itself at shift zero (and possibly at wrap shifts on tiny patterns).
        """
        out = set()
        for (n, sh) in self.elements[i]:
            for (e, z) in self.node_elements(n):
                out.add((e, tuple(a + b for a, b in zip(z, sh))))
        return sorted(out)

    def edge_lengths(self):
        if "edge_lengths" in self._cache:
            return self._cache["edge_lengths"]
        out = []
        for i in range(len(self.elements)):
            v = self.element_vertices(i)
            if self.d == 1:
                out.append(float(v[1][0] - v[0][0]))
            else:
                for a, b in ((0, 1), (1, 2), (2, 0)):
                    dd = vec_sub(v[a], v[b])
                    out.append(float(dd[0]) ** 2 + float(dd[1]) ** 2)
        if self.d == 2:
            out = [x ** 0.5 for x in out]
        self._cache["edge_lengths"] = out
        return out

    def h_max(self):
        return max(self.edge_lengths())

    def h_min(self):
        return min(self.edge_lengths())

    # -- provenance ------------------------------------------------------------

    def pattern_mesh(self):
        """The minimal-pattern mesh this mesh was replicated from (or itself)."""
        return self.pattern if self.pattern is not None else self

    def dof_pattern_maps(self, kind):
        """(class index, copy lattice vector) arrays for the DOFs of a layout kind."""
        nd = self.n_elements if kind == "cell" else self.n_nodes
        if self.pattern is None:
            zero = np.zeros((nd, self.d), dtype=int)
            return np.arange(nd), zero
        if kind == "cell":
            return np.asarray(self.elem_pattern), np.asarray(self.elem_copy)
        return np.asarray(self.node_pattern), np.asarray(self.node_copy)


# -- builders -----------------------------------------------------------------


def build_1d_pattern(steps):
    """Periodic 1D mesh from a list of positive steps; their sum is the period."""
    steps = [frac(s) for s in steps]
    if not steps:
        raise MeshError("steps must be non-empty")
    for s in steps:
        if s <= 0:
            raise MeshError(f"non-positive step {s}")
    nodes = []
    x = Fraction(0)
    for s in steps:
        nodes.append((x,))
        x += s
    period = (x,)
    v = len(nodes)
    elements = []
    for i in range(v):
        j = i + 1
        if j < v:
            elements.append(((i, (0,)), (j, (0,))))
        else:
            elements.append(((i, (0,)), (0, (1,))))
    return PeriodicMesh(1, period, nodes, elements)


def build_ti_triangular(e1, e2, counts):
    """Translationally-invariant triangular mesh on the unit-period torus.

    Every node is i*e1 + j*e2 modulo the period; each lattice cell is split
    into two triangles with edge vectors e1, e2 and e2 - e1.  The vectors and
    counts must tile the rectangular period exactly; incommensurate input is
    rejected with the residual reported.
    """
    e1 = tuple(frac(x) for x in e1)
    e2 = tuple(frac(x) for x in e2)
    n1, n2 = int(counts[0]), int(counts[1])
    if n1 < 1 or n2 < 1:
        raise MeshError("counts must be positive")
    det = cross2(e1, e2)
    if det == 0:
        raise MeshError("e1 and e2 are linearly dependent")
    if det < 0:
        raise MeshError("e1, e2 must be positively oriented (e1 x e2 > 0)")
    period = (Fraction(1), Fraction(1))
    # the integer lattice must be contained in the lattice spanned by e1, e2
    for tvec in ((period[0], Fraction(0)), (Fraction(0), period[1])):
        a = cross2(tvec, e2) / det
        b = cross2(e1, tvec) / det
        if a.denominator != 1 or b.denominator != 1:
            raise MeshError(
                f"incommensurate lattice: translation {tuple(map(float, tvec))} = "
                f"{float(a):.6g} e1 + {float(b):.6g} e2 is not an integer combination "
                f"(residuals {float(a - round(a)):.3g}, {float(b - round(b)):.3g})")

    def wrap(pos):
        shift = tuple(int(x // p) for x, p in zip(pos, period))
        canon = tuple(x - s * p for x, s, p in zip(pos, shift, period))
        return canon, shift

    node_index = {}
    nodes = []
    for i in range(n1):
        for j in range(n2):
            pos = (i * e1[0] + j * e2[0], i * e1[1] + j * e2[1])
            canon, _ = wrap(pos)
            if canon in node_index:
                raise MeshError(
                    f"lattice point ({i},{j}) duplicates an existing node; "
                    f"counts ({n1},{n2}) do not enumerate the torus lattice")
            node_index[canon] = len(nodes)
            nodes.append(canon)
    if len(nodes) != n1 * n2:
        raise MeshError("node enumeration failed")

    def locate(pos):
        canon, shift = wrap(pos)
        if canon not in node_index:
            raise MeshError(
                f"counts ({n1},{n2}) do not close the torus lattice at {tuple(map(float, pos))}")
        return node_index[canon], shift

    elements = []
    for i in range(n1):
        for j in range(n2):
            p00 = (i * e1[0] + j * e2[0], i * e1[1] + j * e2[1])
            p10 = (p00[0] + e1[0], p00[1] + e1[1])
            p01 = (p00[0] + e2[0], p00[1] + e2[1])
            p11 = (p00[0] + e1[0] + e2[0], p00[1] + e1[1] + e2[1])
            elements.append(tuple(locate(p) for p in (p00, p10, p01)))
            elements.append(tuple(locate(p) for p in (p10, p11, p01)))
    return PeriodicMesh(2, period, nodes, elements, reorient=True)


def perturb_nodes(mesh, amplitude, seed):
    """Displace every node class by a deterministic pseudorandom vector.

    The displacement is bounded by ``amplitude`` times the shortest edge.
    Inverted elements trigger retries with halved amplitude (up to 5), then
    rejection.  Periodicity is preserved by construction (one displacement
    per node equivalence class).
    """
    amplitude = frac(amplitude)
    if amplitude < 0 or amplitude > frac("0.3"):
        raise MeshError("amplitude must lie in [0, 0.3]")
    if amplitude == 0:
        return mesh
    hmin = frac(mesh.h_min())
    rng = random.Random(seed)
    draws = []
    for _ in mesh.nodes:
        draws.append(tuple(Fraction(rng.randint(-2 ** 16, 2 ** 16), 2 ** 16)
                           for _ in range(mesh.d)))
    amp = amplitude
    for _attempt in range(6):
        scale = amp * hmin
        new_nodes = [tuple(x + scale * u for x, u in zip(nd, dr))
                     for nd, dr in zip(mesh.nodes, draws)]
        try:
            return PeriodicMesh(mesh.d, mesh.period, new_nodes,
                                [list(el) for el in mesh.elements])
        except MeshError:
            amp = amp / 2
    raise MeshError("perturbation kept inverting elements after 5 retries")


def _scale_mesh(mesh, s):
    s = frac(s)
    return PeriodicMesh(
        mesh.d,
        tuple(p * s for p in mesh.period),
        [tuple(x * s for x in nd) for nd in mesh.nodes],
        [list(el) for el in mesh.elements])


def replicate_scale(mesh, n):
    """Tile n^d copies of the mesh scaled by 1/n into the same period.

    The result records the minimal pattern (the scaled original) so analysis
    can restrict operators to fields with the pattern period.
    """
    n = int(n)
    if n < 1:
        raise MeshError("replication factor must be >= 1")
    if n == 1:
        return mesh
    d = mesh.d
    v = mesh.n_nodes
    copies = [(i,) for i in range(n)] if d == 1 else [(i, j) for i in range(n) for j in range(n)]
    copy_index = {c: k for k, c in enumerate(copies)}
    nodes = []
    for c in copies:
        for nd in mesh.nodes:
            nodes.append(tuple((x + ci * p) / n
                               for x, ci, p in zip(nd, c, mesh.period)))
    elements = []
    for c in copies:
        for el in mesh.elements:
            verts = []
            for (m, sh) in el:
                tot = tuple(ci + si for ci, si in zip(c, sh))
                wrapped = tuple(t % n for t in tot)
                newshift = tuple(t // n for t in tot)
                verts.append((copy_index[wrapped] * v + m, newshift))
            elements.append(tuple(verts))

    base = mesh.pattern_mesh()
    base_factor = mesh.pattern_factor
    node_pat, node_cp = mesh.dof_pattern_maps("vertex")
    elem_pat, elem_cp = mesh.dof_pattern_maps("cell")
    new_node_pat, new_node_cp, new_elem_pat, new_elem_cp = [], [], [], []
    for c in copies:
        for m in range(v):
            new_node_pat.append(int(node_pat[m]))
            new_node_cp.append([int(node_cp[m][ax]) + base_factor * c[ax] for ax in range(d)])
    for c in copies:
        for e in range(mesh.n_elements):
            new_elem_pat.append(int(elem_pat[e]))
            new_elem_cp.append([int(elem_cp[e][ax]) + base_factor * c[ax] for ax in range(d)])

    return PeriodicMesh(
        d, mesh.period, nodes, elements,
        pattern=_scale_mesh(base, Fraction(1, base_factor * n)),
        pattern_factor=base_factor * n,
        node_pattern=new_node_pat, node_copy=new_node_cp,
        elem_pattern=new_elem_pat, elem_copy=new_elem_cp)


# -- JSON I/O -------------------------------------------------------------------


def mesh_to_json(mesh):
    doc = {
        "dimension": mesh.d,
        "period": [float(p) for p in mesh.period],
        "nodes": [[float(x) for x in nd] for nd in mesh.nodes],
        "elements": [[[n, *sh] for n, sh in el] for el in mesh.elements],
    }
    return doc


def mesh_from_json(doc):
    d = int(doc["dimension"])
    elements = []
    for el in doc["elements"]:
        elements.append([(int(v[0]), tuple(int(s) for s in v[1:1 + d])) for v in el])
    return PeriodicMesh(d, doc["period"], doc["nodes"], elements)


def save_mesh(mesh, path):
    with open(path, "w") as f:
        json.dump(mesh_to_json(mesh), f, indent=1, sort_keys=True)
        f.write("\n")


def load_mesh(path):
    with open(path) as f:
        return mesh_from_json(json.load(f))
