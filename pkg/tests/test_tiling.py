import numpy as np
import pytest
from scipy.spatial import cKDTree

from almostreg.lattice2d import TRIANGULAR, SQUARE
from almostreg.mapping import MappingParams, face_counts
from almostreg.symmetry3d import base_polyhedron, group_matrices, symmetry_residual
from almostreg.tiling import (
    StructureError,
    VertexClass,
    build_seed,
    dualize,
    euler_characteristic,
    generate,
    weld,
)

P = MappingParams.make


# --- independent oracle: enumerate every lattice tile of every base face --------


def _clip(poly, a, b):
    """Sutherland-Hodgman: keep the part of ``poly`` left of a->b."""
    out = []
    side = lambda p: (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    for i in range(len(poly)):
        p, q = poly[i], poly[(i + 1) % len(poly)]
        sp, sq = side(p), side(q)
        if sp >= 0:
            out.append(p)
        if sp * sq < 0:
            t = sp / (sp - sq)
            out.append(p + t * (q - p))
    return out


def _area(poly):
    if len(poly) < 3:
        return 0.0
    x = np.array([p[0] for p in poly])
    y = np.array([p[1] for p in poly])
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _ccw2(poly):
    return poly if _area_signed(poly) > 0 else poly[::-1]


def _area_signed(poly):
    x = np.array([p[0] for p in poly])
    y = np.array([p[1] for p in poly])
    return 0.5 * (np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _overlap(tile, tri):
    poly = list(tile)
    tri = _ccw2(list(tri))
    for i in range(3):
        poly = _clip(poly, tri[i], tri[(i + 1) % 3])
        if not poly:
            return 0.0
    return _area(poly)


def _bary(tri, p):
    a, b, c = tri
    m = np.array([b - a, c - a]).T
    u, v = np.linalg.solve(m, p - a)
    return np.array([1 - u - v, u, v])


def whole_lattice_mesh(kind, h, k, lattice=TRIANGULAR):
    base = base_polyhedron(kind)
    n = base.n
    if n == 3:
        lat_corners = [(0, 0), (h, k), (h + k, -h)]
    else:
        lat_corners = [(0, 0), (h, k), (h - k, h + k), (-k, h)]
    c2 = [lattice.embed(c) for c in lat_corners]
    # faces run counter-clockwise from outside; reverse them when the lattice corners run clockwise
    clockwise = _area_signed(c2) < 0
    tiles = []
    span = 2 * (h + k) + 2
    for f in base.faces:
        fo = (f[0],) + tuple(reversed(f[1:])) if clockwise else tuple(f)
        v3 = [base.vertices[i] for i in fo]
        # split the face into triangles around its centre for barycentric maps
        cen2 = sum(c2) / n
        cen3 = sum(v3) / n
        pieces = [((c2[i], c2[(i + 1) % n], cen2), (v3[i], v3[(i + 1) % n], cen3)) for i in range(n)]
        # unfolded neighbours: half-turn of the face polygon about each edge midpoint
        for i in range(n):
            a3, b3 = v3[i], v3[(i + 1) % n]
            ia, ib = base_index(base, a3), base_index(base, b3)
            other = [g for g in base.faces if g != f and {ia, ib} <= set(g)][0]
            cw = [other[0]] + list(reversed(other[1:])) if clockwise else list(other)
            s0 = cw.index(ib)
            order = [cw[(s0 + t) % n] for t in range(n)]
            assert order[1] == ia
            # corner j of the unfolded neighbour is 2M - c2[j]; corner i sits on b
            q2 = [c2[i] + c2[(i + 1) % n] - c2[j] for j in range(n)]
            q3 = [None] * n
            for t in range(n):
                q3[(i + t) % n] = base.vertices[order[t]]
            qc2, qc3 = sum(q2) / n, sum(q3) / n
            for j in range(n):
                pieces.append(((q2[j], q2[(j + 1) % n], qc2), (q3[j], q3[(j + 1) % n], qc3)))
        for i in range(-span, span + 1):
            for j in range(-span, span + 1):
                if n == 3:
                    cands = [[(i, j), (i + 1, j), (i, j + 1)], [(i, j), (i + 1, j - 1), (i + 1, j)]]
                else:
                    cands = [[(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]]
                for t in cands:
                    t2 = [lattice.embed(p) for p in t]
                    area = sum(_overlap(t2, pc[0]) for pc in pieces[:n])
                    if area < 1e-9:
                        continue
                    out = []
                    for p in t2:
                        for tri2, tri3 in pieces:
                            w = _bary(np.array(tri2), p)
                            if w.min() > -1e-9:
                                out.append(w @ np.array(tri3))
                                break
                        else:
                            raise AssertionError("tile vertex beyond the neighbouring faces")
                    tiles.append(out)
    flat = np.array([p for t in tiles for p in t])
    tree = cKDTree(flat)
    groups = {}
    ids = np.empty(len(flat), dtype=int)
    for a in range(len(flat)):
        near = min(tree.query_ball_point(flat[a], 1e-7))
        ids[a] = groups.setdefault(near, len(groups))
    verts = np.zeros((len(groups), 3))
    for a, g in enumerate(ids):
        verts[g] = flat[a]
    faces, pos = set(), 0
    for t in tiles:
        faces.add(frozenset(int(ids[pos + q]) for q in range(len(t))))
        pos += len(t)
    return verts, faces


def base_index(base, p):
    return int(np.argmin(np.linalg.norm(base.vertices - p, axis=1)))


def assert_isomorphic(mesh, verts, faces):
    assert len(verts) == len(mesh.vertices)
    d, idx = cKDTree(mesh.vertices).query(verts)
    assert d.max() < 1e-9
    assert len(set(idx.tolist())) == len(verts)
    mapped = {frozenset(int(idx[v]) for v in f) for f in faces}
    assert mapped == {frozenset(f) for f in mesh.faces}


@pytest.mark.parametrize("h,k", [(1, 0), (0, 1), (1, 1), (2, 0), (2, 1), (1, 2)])
@pytest.mark.parametrize("kind", ["icosa", "oct", "tet"])
def test_orbit_construction_matches_whole_lattice(kind, h, k):
    mesh = generate(P(kind, "tri", h, k))
    verts, faces = whole_lattice_mesh(kind, h, k)
    assert_isomorphic(mesh, verts, faces)


@pytest.mark.parametrize("h,k", [(1, 0), (1, 1), (2, 1)])
def test_cube_square_matches_whole_lattice(h, k):
    mesh = generate(P("cube", "square", h, k))
    verts, faces = whole_lattice_mesh("cube", h, k, SQUARE)
    assert_isomorphic(mesh, verts, faces)


@pytest.mark.parametrize(
    "args", [("icosa", "tri", 4, 1), ("oct", "tri", 3, 1), ("tet", "tri", 3, 2), ("cube", "square", 3, 2), ("cube", "square", 2, 2)]
)
def test_generated_counts_and_symmetry(args):
    p = P(*args)
    mesh = generate(p)
    c = face_counts(p)
    assert len(mesh.faces) == c["tiles"]
    assert len(mesh.vertices) == c["verticesTotal"]
    assert len(mesh.edges) == c["edges"]
    assert euler_characteristic(mesh) == 2
    base = p.base_polyhedron
    deg = mesh.degrees()
    assert np.count_nonzero(deg == base.gv_fold) == base.vertex_count
    assert sum(c is VertexClass.GLOBAL_AXIS for c in mesh.vertex_class) == base.vertex_count
    assert symmetry_residual(mesh.vertices, group_matrices(base)) < 1e-9


def test_vertex_provenance_regenerates_positions():
    from almostreg.tiling import transform_matrices

    p = P("icosa", "tri", 3, 1)
    mesh = generate(p)
    mats = transform_matrices(p)
    seed = mesh.meta["seed_xyz"]
    regen = np.einsum("vij,vj->vi", mats[mesh.vertex_transform], seed[mesh.vertex_seed])
    assert np.array_equal(regen, mesh.vertices)


def test_faces_are_oriented_outward_and_consistently():
    mesh = generate(P("icosa", "tri", 2, 1))
    directed = set()
    for f in mesh.faces:
        for a, b in zip(f, f[1:] + f[:1]):
            assert (a, b) not in directed
            directed.add((a, b))
    assert all((b, a) in directed for a, b in directed)


@pytest.mark.parametrize("h,k", [(1, 0), (1, 1), (2, 1), (3, 1)])
def test_goldberg_duals(h, k):
    t = h * h + h * k + k * k
    mesh = generate(P("icosa", "hex", h, k, True))
    assert mesh.face_sizes() == ({5: 12, 6: 10 * (t - 1)} if t > 1 else {5: 12})
    assert euler_characteristic(mesh) == 2


def test_dual_of_dual_restores_counts():
    mesh = generate(P("oct", "tri", 2, 1))
    dd = dualize(dualize(mesh))
    assert (len(dd.vertices), len(dd.faces)) == (len(mesh.vertices), len(mesh.faces))


def test_dualize_rejects_open_meshes():
    mesh = generate(P("icosa", "tri", 1, 0))
    mesh.faces = mesh.faces[1:]
    with pytest.raises(StructureError):
        dualize(mesh)


def test_weld_checks():
    pts = np.array([[0, 0, 0], [1e-12, 0, 0], [1, 0, 0]], dtype=float)
    labels, reps = weld(pts, 1e-9)
    assert labels.tolist() == [0, 0, 1]
    with pytest.raises(StructureError):
        weld(pts, 1e-9, expected=3)
    # a chain of close points spreads wider than the tolerance
    chain = np.array([[0.0, 0, 0], [0.8, 0, 0], [1.6, 0, 0]])
    with pytest.raises(StructureError):
        weld(chain, 1.0)


def test_bad_weld_tolerance_raises():
    with pytest.raises(StructureError):
        generate(P("icosa", "tri", 2, 1), weld_tolerance=0.5)


@pytest.mark.parametrize("kind,i", [("icosa", 1), ("icosa", 2), ("oct", 2), ("tet", 3)])
def test_bisected_fold_is_isometric(kind, i):
    p = P(kind, "tri", i, i)
    flat = generate(p)
    folded = generate(p, fold=True)
    assert folded.faces == flat.faces
    lens = lambda m: np.array([np.linalg.norm(m.vertices[a] - m.vertices[b]) for a, b in m.edges])
    # every folded edge has the lattice edge length
    assert np.ptp(lens(folded)) < 1e-9
    assert symmetry_residual(folded.vertices, group_matrices(kind)) < 1e-9


def test_seed_is_one_point_per_local_orbit():
    seed = build_seed(P("icosa", "tri", 3, 1))
    # 9 lattice points in the closed face, none at the centre
    assert len(seed.points) == 3
    assert len(seed.orbit_index) == 9
