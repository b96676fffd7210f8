import itertools

import numpy as np
import pytest

from almostreg.symmetry3d import (
    BaseKind,
    base_polyhedron,
    cyclic_group,
    group_matrices,
    point_orbits,
    rotation_group,
    symmetry_residual,
)

ORDERS = {"tet": 12, "oct": 24, "icosa": 60, "cube": 24}


@pytest.mark.parametrize("kind,order", ORDERS.items())
def test_group_is_closed_proper_and_preserves_base(kind, order):
    mats = group_matrices(kind)
    assert len(mats) == order
    assert np.allclose(mats[0], np.eye(3))
    for m in mats:
        assert np.linalg.det(m) == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(m @ m.T, np.eye(3), atol=1e-12)
    flat = mats.reshape(order, -1)
    for a, b in itertools.product(mats, repeat=2):
        d = np.abs(flat - (a @ b).reshape(-1)).max(axis=1)
        assert d.min() < 1e-9
    base = base_polyhedron(kind)
    assert symmetry_residual(base.vertices, mats) < 1e-12


@pytest.mark.parametrize(
    "kind,faces,verts,n,gv",
    [("tet", 4, 4, 3, 3), ("oct", 8, 6, 3, 4), ("icosa", 20, 12, 3, 5), ("cube", 6, 8, 4, 3)],
)
def test_base_polyhedra(kind, faces, verts, n, gv):
    b = base_polyhedron(kind)
    assert (b.face_count, b.vertex_count, b.n, b.gv_fold) == (faces, verts, n, gv)
    assert np.allclose(np.linalg.norm(b.vertices, axis=1), 1.0)
    # canonical face on +Z, outward-facing counter-clockwise
    c = b.face_center(0)
    assert np.allclose(c / np.linalg.norm(c), [0, 0, 1])
    for f in b.faces:
        p = b.vertices[list(f)]
        normal = np.cross(p[1] - p[0], p[2] - p[0])
        assert normal @ p.mean(axis=0) > 0
    lengths = {round(float(np.linalg.norm(b.vertices[i] - b.vertices[j])), 12) for i, j in b.edges()}
    assert len(lengths) == 1


def test_rotation_group_transforms_match_matrices():
    for t, m in zip(rotation_group(BaseKind.ICOSAHEDRON), group_matrices("icosa")):
        assert np.allclose(t.rotation, m)
        assert np.allclose(t.compose(t.inverse()).rotation, np.eye(3))


def test_cyclic_group():
    g = cyclic_group([1.0, 2.0, 3.0], [0, 0, 1], 5)
    assert len(g) == 5
    for t in g:
        assert np.allclose(t.apply([1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        cyclic_group([0, 0, 0], [0, 0, 1], 0)


def test_point_orbits_on_icosahedron_vertices():
    mats = group_matrices("icosa")
    b = base_polyhedron("icosa")
    orb = point_orbits(b.vertices, mats, 1e-9)
    assert len(orb.reps) == 1
    assert len(orb.stabilizers[0]) == 5
    basis = orb.fixed_basis(mats, 0)
    assert basis.shape == (3, 1)
    v = b.vertices[orb.reps[0]]
    assert abs(abs(basis[:, 0] @ v) - 1) < 1e-12
    for i, p in enumerate(b.vertices):
        assert np.allclose(mats[orb.rotation[i]] @ b.vertices[orb.reps[orb.orbit[i]]], p)


def test_point_orbits_rejects_asymmetric_sets():
    with pytest.raises(ValueError):
        point_orbits(np.array([[0.1, 0.2, 0.9]]), group_matrices("tet"), 1e-9)
