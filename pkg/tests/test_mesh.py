from fractions import Fraction

import pytest

from fvsupra.mesh import (
    MeshError,
    build_1d_pattern,
    build_ti_triangular,
    load_mesh,
    mesh_from_json,
    perturb_nodes,
    replicate_scale,
    save_mesh,
)


def test_1d_uniform_pattern():
    m = build_1d_pattern([0.25, 0.25, 0.25, 0.25])
    assert m.n_nodes == 4
    assert m.period == (Fraction(1),)
    assert all(m.element_measure(i) == Fraction(1, 4) for i in range(4))


def test_1d_pattern_nodes_at_cumulative_sums():
    m = build_1d_pattern(["0.1", "0.3", "0.6"])
    assert [nd[0] for nd in m.nodes] == [0, Fraction(1, 10), Fraction(2, 5)]
    # hbar at the middle node = (0.4 - 0)/2 = 0.2
    hbar = (m.nodes[2][0] - m.nodes[0][0]) / 2
    assert hbar == Fraction(1, 5)


def test_1d_checkerboard_nodes():
    m = build_1d_pattern([0.5, 0.5])
    assert [float(nd[0]) for nd in m.nodes] == [0.0, 0.5]


def test_1d_rejects_nonpositive_step():
    with pytest.raises(MeshError):
        build_1d_pattern([0.5, -0.1])
    with pytest.raises(MeshError):
        build_1d_pattern([])


def test_ti_triangular_5h6_lattice():
    h = Fraction(1, 20)
    m = build_ti_triangular((h, 0), (h / 2, h * Fraction(5, 6) / 1), (20, 24))
    assert m.n_nodes == 480
    assert m.n_elements == 2 * 20 * 24
    area = h * (5 * h / 6) / 2
    assert all(m.element_measure(i) == area for i in range(m.n_elements))


def test_ti_triangular_unit_square():
    m = build_ti_triangular((1, 0), (0, 1), (1, 1))
    assert m.n_elements == 2
    assert m.n_nodes == 1
    assert sum(m.element_measure(i) for i in range(2)) == 1


def test_ti_triangular_incommensurate_rejected():
    h = Fraction(1, 20)
    with pytest.raises(MeshError, match="incommensurate"):
        build_ti_triangular((h, 0), (h / 3, h), (20, 20))


def test_ti_triangular_cross_product_area():
    h = Fraction(1, 21)
    m = build_ti_triangular((h, 0), (h / 3, h), (21, 21))
    assert all(m.element_measure(i) == h * h / 2 for i in range(m.n_elements))


def test_perturb_zero_amplitude_is_identity():
    m = build_ti_triangular((Fraction(1, 4), 0), (Fraction(1, 8), Fraction(1, 4)), (4, 4))
    m2 = perturb_nodes(m, 0, seed=1)
    assert m2 is m


def test_perturb_deterministic_and_valid():
    m = build_ti_triangular((Fraction(1, 4), 0), (Fraction(1, 8), Fraction(1, 4)), (4, 4))
    a = perturb_nodes(m, Fraction(1, 5), seed=42)
    b = perturb_nodes(m, Fraction(1, 5), seed=42)
    assert a.nodes == b.nodes
    c = perturb_nodes(m, Fraction(1, 5), seed=43)
    assert c.nodes != a.nodes
    assert all(a.element_measure(i) > 0 for i in range(a.n_elements))


def test_replicate_identity():
    m = build_1d_pattern([0.4, 0.6])
    assert replicate_scale(m, 1) is m


def test_replicate_1d_steps():
    m = build_1d_pattern([0.4, 0.6])
    r = replicate_scale(m, 2)
    xs = sorted(float(nd[0]) for nd in r.nodes)
    assert xs == [0.0, 0.2, 0.5, 0.7]
    assert r.pattern_factor == 2
    assert float(r.pattern.period[0]) == 0.5


def test_replicate_element_count():
    m = build_ti_triangular((Fraction(1, 2), 0), (Fraction(1, 4), Fraction(1, 2)),
                            (2, 2))
    assert m.n_elements == 8
    # 6 triangles/period scaled by N=4 -> 6*16; here 8 -> 128
    r = replicate_scale(m, 4)
    assert r.n_elements == 8 * 16
    assert sum(r.element_measure(i) for i in range(r.n_elements)) == 1


def test_replicate_compose_pattern_maps():
    m = build_1d_pattern([0.5, 0.5])
    r = replicate_scale(replicate_scale(m, 2), 2)
    assert r.pattern_factor == 4
    assert r.n_nodes == 8
    cls, cp = r.dof_pattern_maps("vertex")
    assert sorted(cls) == [0, 0, 0, 0, 1, 1, 1, 1]
    assert sorted(int(c[0]) for c in cp) == [0, 0, 1, 1, 2, 2, 3, 3]


def test_json_round_trip(tmp_path):
    m = build_ti_triangular((Fraction(1, 4), 0), (Fraction(1, 8), Fraction(1, 4)), (4, 4))
    m = perturb_nodes(m, Fraction(1, 10), seed=3)
    p1 = tmp_path / "mesh.json"
    p2 = tmp_path / "mesh2.json"
    save_mesh(m, p1)
    m2 = load_mesh(p1)
    save_mesh(m2, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert m2.n_elements == m.n_elements


def test_conformality_guard():
    # two triangles failing to share a diagonal -> not conformal
    doc = {
        "dimension": 2,
        "period": [1, 1],
        "nodes": [[0.0, 0.0], [0.5, 0.0], [0.0, 0.5], [0.5, 0.5]],
        "elements": [
            [[0, 0, 0], [1, 0, 0], [2, 0, 0]],
            [[1, 0, 0], [3, 0, 0], [2, 0, 0]],
        ],
    }
    with pytest.raises(MeshError):
        mesh_from_json(doc)  # measures cover only half the period cell
