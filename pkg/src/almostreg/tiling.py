"""Seed sets, orbit expansion and welding into closed tiled meshes."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.sparse import coo_matrix
from scipy.spatial import cKDTree

from .lattice2d import LatticeKind, LatticeSpec, cross, normalize_point
from .mapping import (
    CurationCase,
    FaceEmbedding,
    MappingParams,
    Mode,
    curation_case,
    face_counts,
    require_valid,
)
from .symmetry3d import (
    BasePolyhedron,
    FaceMap,
    axis_rotation,
    face_map,
    group_matrices,
    twofold_about,
)


class StructureError(RuntimeError):
    """The welded mesh does not match the expected structure."""


class VertexClass(enum.Enum):
    GLOBAL_AXIS = "global_axis"
    LOCAL = "local"


@dataclass
class SeedSet:
    points: list  # exact lattice points, one per local cyclic orbit
    orbit_index: dict  # lattice point in the closed face -> (seed index, cyclic index)
    fold: int


@dataclass
class TiledMesh:
    params: MappingParams
    vertices: np.ndarray
    faces: list
    vertex_seed: np.ndarray
    vertex_transform: np.ndarray
    vertex_class: list
    seed: SeedSet | None = None
    meta: dict = field(default_factory=dict)

    @property
    def edges(self) -> list[tuple[int, int]]:
        out = set()
        for f in self.faces:
            for a, b in zip(f, f[1:] + f[:1]):
                out.add((min(a, b), max(a, b)))
        return sorted(out)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(len(self.vertices), dtype=int)
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    def face_sizes(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for f in self.faces:
            out[len(f)] = out.get(len(f), 0) + 1
        return out

    @property
    def circumradius(self) -> float:
        return float(np.linalg.norm(self.vertices, axis=1).max())

    def copy_with_vertices(self, vertices: np.ndarray) -> "TiledMesh":
        return TiledMesh(
            self.params,
            np.array(vertices, dtype=float),
            list(self.faces),
            self.vertex_seed.copy(),
            self.vertex_transform.copy(),
            list(self.vertex_class),
            self.seed,
            dict(self.meta),
        )


def _local_fold(params: MappingParams) -> int:
    return params.base_polyhedron.n


def lattice_points_in_face(corners) -> list[tuple]:
    """Integer points inside or on the convex lattice polygon, row-major (i then j)."""
    xs = [Fraction(c[0]) for c in corners]
    ys = [Fraction(c[1]) for c in corners]
    n = len(corners)
    out = []
    for i in range(math.floor(min(xs)), math.ceil(max(xs)) + 1):
        for j in range(math.floor(min(ys)), math.ceil(max(ys)) + 1):
            if all(cross(corners[a], corners[(a + 1) % n], (i, j)) <= 0 for a in range(n)) or all(
                cross(corners[a], corners[(a + 1) % n], (i, j)) >= 0 for a in range(n)
            ):
                out.append((i, j))
    return out


def _primal_embedding(params: MappingParams) -> FaceEmbedding:
    if params.mode is Mode.DUAL:
        params = params.companion()
    return require_valid(params)


def build_seed(params: MappingParams) -> SeedSet:
    """Minimal set of lattice points, no two related by the local cyclic group."""
    emb = _primal_embedding(params)
    lattice = LatticeSpec(emb.params.lattice)
    fold = _local_fold(emb.params)
    seeds: list = []
    orbit: dict = {}
    for p in lattice_points_in_face(emb.corners):
        if p in orbit:
            continue
        images = [normalize_point(lattice.rotate_about(p, emb.center, fold, m)) for m in range(fold)]
        if any(q in orbit for q in images):
            continue
        s = len(seeds)
        seeds.append(p)
        for m, q in enumerate(images):
            orbit.setdefault(q, (s, m))
    return SeedSet(seeds, orbit, fold)


def _face_map(emb: FaceEmbedding) -> FaceMap:
    return face_map(
        emb.params.base_polyhedron, LatticeSpec(emb.params.lattice), emb.corners, emb.center
    )


def transform_matrices(params: MappingParams) -> np.ndarray:
    """Rotations of T_all indexed ``g * n + m`` (global element g after local step m)."""
    base = params.base_polyhedron
    n = base.n
    cyc = [axis_rotation([0, 0, 1.0], 2 * math.pi * m / n) if m else np.eye(3) for m in range(n)]
    mats = group_matrices(base)
    return np.array([g @ c for g in mats for c in cyc])


def weld(points: np.ndarray, tolerance: float, expected: int | None = None):
    """Collapse points closer than ``tolerance``.

    Returns ``(labels, representatives)`` where ``labels[i]`` is the vertex id of
    point i (ids in order of first appearance) and ``representatives[v]`` is the
    index of the first point in vertex v.
    """
    points = np.asarray(points, dtype=float)
    tree = cKDTree(points)
    pairs = tree.query_pairs(tolerance, output_type="ndarray")
    n = len(points)
    graph = coo_matrix(
        (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])) if len(pairs) else ([], ([], [])),
        shape=(n, n),
    )
    _, comp = connected_components(graph, directed=False)
    # relabel by first appearance
    first: dict[int, int] = {}
    labels = np.empty(n, dtype=int)
    reps = []
    for i, c in enumerate(comp):
        if c not in first:
            first[c] = len(reps)
            reps.append(i)
        labels[i] = first[c]
    reps = np.array(reps)
    spread = np.linalg.norm(points - points[reps][labels], axis=1)
    if len(spread) and spread.max() > tolerance:
        raise StructureError(
            f"welded cluster spans {spread.max():.3g} > tolerance {tolerance:.3g}"
        )
    if expected is not None and len(reps) != expected:
        raise StructureError(f"welding produced {len(reps)} vertices, expected {expected}")
    return labels, reps


def _tiles(kind: LatticeKind, corners) -> list[list[tuple]]:
    """Lattice faces (counter-clockwise) whose interior overlaps the face interior."""
    xs = [math.floor(Fraction(c[0])) for c in corners] + [math.ceil(Fraction(c[0])) for c in corners]
    ys = [math.floor(Fraction(c[1])) for c in corners] + [math.ceil(Fraction(c[1])) for c in corners]
    out = []
    for i in range(min(xs) - 1, max(xs) + 1):
        for j in range(min(ys) - 1, max(ys) + 1):
            if kind is LatticeKind.SQUARE:
                cands = [[(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]]
            else:
                cands = [[(i, j), (i + 1, j), (i, j + 1)], [(i, j), (i + 1, j - 1), (i + 1, j)]]
            for tile in cands:
                if _interiors_overlap(tile, corners):
                    out.append(tile)
    return out


def _ccw(poly):
    area = sum(cross((0, 0), poly[i], poly[(i + 1) % len(poly)]) for i in range(len(poly)))
    return list(poly) if area > 0 else list(reversed(poly))


def _interiors_overlap(p, q) -> bool:
    """Separating-axis test for convex polygons; touching counts as disjoint."""
    p, q = _ccw(p), _ccw(q)
    for a, b in ((p, q), (q, p)):
        n = len(a)
        for i in range(n):
            o, d = a[i], a[(i + 1) % n]
            if all(cross(o, d, v) <= 0 for v in b):
                return False
    return True


def _inside_closed(corners, p) -> bool:
    n = len(corners)
    s = [cross(corners[i], corners[(i + 1) % n], p) for i in range(n)]
    return all(x <= 0 for x in s) or all(x >= 0 for x in s)


class _Resolver:
    """Maps lattice points near the canonical face onto the folded surface."""

    def __init__(self, emb: FaceEmbedding, fmap: FaceMap):
        self.emb = emb
        self.fmap = fmap
        self.lattice = LatticeSpec(emb.params.lattice)
        self.base: BasePolyhedron = emb.params.base_polyhedron
        corners = list(emb.corners)
        n = len(corners)
        self.corners = corners
        self.edges = []
        for i in range(n):
            a, b = corners[i], corners[(i + 1) % n]
            mid2 = (a[0] + b[0], a[1] + b[1])  # twice the midpoint
            mid3 = self.embed3([(Fraction(mid2[0], 2), Fraction(mid2[1], 2))])[0]
            self.edges.append((a, b, mid2, twofold_about(self.base, mid3)))

    def embed3(self, pts) -> np.ndarray:
        xy = self.lattice.embed([[float(p[0]), float(p[1])] for p in pts])
        return self.fmap.apply(xy)

    def __call__(self, p) -> np.ndarray:
        if _inside_closed(self.corners, p):
            return self.embed3([p])[0]
        for a, b, mid2, half_turn in self.edges:
            if cross(a, b, p) == 0:
                continue
            inner_side = cross(a, b, self.corners[(self.corners.index(b) + 1) % len(self.corners)])
            if (cross(a, b, p) > 0) == (inner_side > 0):
                continue
            mirror = (mid2[0] - p[0], mid2[1] - p[1])
            if _inside_closed(self.corners, mirror):
                return half_turn @ self.embed3([mirror])[0]
        raise StructureError(f"lattice point {p} cannot be resolved onto a neighbouring face")


def canonical_tiles(params: MappingParams) -> list[np.ndarray]:
    """3D vertex positions of every lattice tile overlapping the canonical face."""
    emb = _primal_embedding(params)
    resolve = _Resolver(emb, _face_map(emb))
    return [np.array([resolve(p) for p in tile]) for tile in _tiles(emb.params.lattice, emb.corners)]


def build_faces(params: MappingParams, vertices: np.ndarray, tolerance: float) -> list[tuple]:
    """Emit every tile once, expanded over the rotation group and deduplicated."""
    emb = _primal_embedding(params)
    tiles = canonical_tiles(emb.params)
    tree = cKDTree(vertices)
    mats = group_matrices(emb.params.base_polyhedron)
    seen = set()
    faces = []
    for g in mats:
        for tile in tiles:
            d, idx = tree.query(tile @ g.T)
            if d.max() > tolerance:
                raise StructureError("tile corner does not coincide with a welded vertex")
            key = tuple(sorted(int(i) for i in idx))
            if key in seen:
                continue
            seen.add(key)
            faces.append(tuple(int(i) for i in idx))
    return faces


def _orient_outward(vertices: np.ndarray, faces: list[tuple]) -> list[tuple]:
    out = []
    for f in faces:
        p = vertices[list(f)]
        c = p.mean(axis=0)
        normal = np.zeros(3)
        for i in range(len(f)):
            normal += np.cross(p[i], p[(i + 1) % len(f)])
        out.append(f if np.dot(normal, c) > 0 else tuple(reversed(f)))
    return out


def fold_bisected(params: MappingParams, seed_xyz: np.ndarray, seed: SeedSet) -> np.ndarray:
    """Isometric refold for h == k.

    The face centre D is a lattice vertex. Creasing along AD, BD, CD and along
    the segments joining D to the neighbouring face centres keeps every lattice
    triangle (A, D, D') flat, where D' is the centre across edge AB. The radii of
    corners and centres are chosen so |AD| and |DD'| keep their lattice lengths.
    """
    emb = _primal_embedding(params)
    base = emb.params.base_polyhedron
    lattice = LatticeSpec(emb.params.lattice)
    fmap = _face_map(emb)
    corners3 = fmap.apply(lattice.embed([[float(c[0]), float(c[1])] for c in emb.corners]))
    d3 = fmap.apply(lattice.embed([float(emb.center[0]), float(emb.center[1])]))[0]
    d_hat = d3 / np.linalg.norm(d3)
    arm = float(np.linalg.norm(corners3[0] - d3))  # |AD| = |DD'| for h == k
    n = base.n
    nbr = []
    for i in range(n):
        mid = (corners3[i] + corners3[(i + 1) % n]) / 2
        nbr.append(twofold_about(base, mid) @ d_hat)
    r_d = arm / float(np.linalg.norm(d_hat - nbr[0]))
    a_hat = corners3[0] / np.linalg.norm(corners3[0])
    c = float(a_hat @ d_hat)
    r_a = r_d * c + math.sqrt(arm**2 - r_d**2 * (1 - c * c))
    new_corners = [r_a * x / np.linalg.norm(x) for x in corners3]
    new_d = r_d * d_hat
    half = Fraction(1, 2)
    out = np.array(seed_xyz, dtype=float)
    for s, p in enumerate(seed.points):
        for i in range(n):
            a, b = emb.corners[i], emb.corners[(i + 1) % n]
            if not _inside_closed([a, b, emb.center], p):
                continue
            m = (half * (a[0] + b[0]), half * (a[1] + b[1]))
            m3 = (new_d + r_d * nbr[i]) / 2
            if _inside_closed([a, emb.center, m], p):
                w = _barycentric([a, emb.center, m], p)
                out[s] = w[0] * new_corners[i] + w[1] * new_d + w[2] * m3
            else:
                w = _barycentric([b, emb.center, m], p)
                out[s] = w[0] * new_corners[(i + 1) % n] + w[1] * new_d + w[2] * m3
            break
    return out


def _barycentric(tri, p):
    a, b, c = tri
    den = Fraction(cross(a, b, c))
    wa = Fraction(cross(b, c, p)) / den
    wb = Fraction(cross(c, a, p)) / den
    return [float(wa), float(wb), float(1 - wa - wb)]


def generate(
    params: MappingParams,
    weld_tolerance: float | None = None,
    fold: bool = False,
) -> TiledMesh:
    """TilingGen: expand the seed set over all transforms and weld."""
    if params.mode is Mode.DUAL:
        primal = generate(params.companion(), weld_tolerance, fold)
        dual = dualize(primal)
        dual.params = params
        dual.meta["primal_equivalent"] = require_valid(params).primal_equivalent
        return dual
    emb = require_valid(params)
    counts = face_counts(params)
    base = params.base_polyhedron
    lattice = params.lattice_spec
    fmap = _face_map(emb)
    seed = build_seed(params)
    seed_xyz = fmap.apply(lattice.embed([[float(p[0]), float(p[1])] for p in seed.points]))
    folded = fold and curation_case(params) is CurationCase.BISECTED
    if folded:
        seed_xyz = fold_bisected(params, seed_xyz, seed)
    mats = transform_matrices(params)
    # raw points ordered by (transform index, seed index)
    raw = np.einsum("tij,sj->tsi", mats, seed_xyz).reshape(-1, 3)
    n_seed = len(seed.points)
    scale = float(np.linalg.norm(seed_xyz, axis=1).max())
    tol = weld_tolerance if weld_tolerance is not None else 1e-9 * scale
    labels, reps = weld(raw, tol, expected=counts["verticesTotal"])
    vertices = raw[reps]
    v_transform = reps // n_seed
    v_seed = reps % n_seed

    if folded:
        faces = _folded_faces(params, vertices, tol, seed, seed_xyz)
    else:
        faces = build_faces(params, vertices, tol)
    faces = _orient_outward(vertices, faces)
    if len(faces) != counts["tiles"]:
        raise StructureError(f"emitted {len(faces)} faces, expected {counts['tiles']}")

    axes = base.vertices / np.linalg.norm(base.vertices, axis=1, keepdims=True)
    unit = vertices / np.linalg.norm(vertices, axis=1, keepdims=True)
    on_axis = (np.abs(unit @ axes.T - 1.0) < 1e-9).any(axis=1)
    vclass = [VertexClass.GLOBAL_AXIS if a else VertexClass.LOCAL for a in on_axis]
    mesh = TiledMesh(params, vertices, faces, v_seed, v_transform, vclass, seed)
    mesh.meta["weld_tolerance"] = tol
    mesh.meta["folded"] = folded
    mesh.meta["seed_xyz"] = seed_xyz
    return mesh


def _folded_faces(params, vertices, tol, seed, seed_xyz):
    # topology is unchanged by folding: build faces on the flat geometry, then
    # carry the ids over by lattice provenance
    flat = generate(params, tol, fold=False)
    return flat.faces


def dualize(mesh: TiledMesh) -> TiledMesh:
    """Combinatorial dual; dual vertices are face centroids pushed to the circumsphere."""
    directed: dict[tuple[int, int], int] = {}
    for fi, f in enumerate(mesh.faces):
        for a, b in zip(f, f[1:] + f[:1]):
            if (a, b) in directed:
                raise StructureError("mesh is not consistently oriented")
            directed[(a, b)] = fi
    for a, b in directed:
        if (b, a) not in directed:
            raise StructureError("mesh is open: boundary edge found")
    radius = mesh.circumradius
    cents = np.array([mesh.vertices[list(f)].mean(axis=0) for f in mesh.faces])
    dual_v = radius * cents / np.linalg.norm(cents, axis=1, keepdims=True)

    incident: dict[int, int] = {}
    for fi, f in enumerate(mesh.faces):
        for v in f:
            incident.setdefault(v, fi)
    dual_faces = []
    for v in range(len(mesh.vertices)):
        start = incident[v]
        ring = [start]
        cur = start
        while True:
            f = mesh.faces[cur]
            i = f.index(v)
            prev = f[i - 1]
            cur = directed[(v, prev)]
            if cur == start:
                break
            ring.append(cur)
            if len(ring) > len(mesh.faces):
                raise StructureError("vertex fan does not close")
        dual_faces.append(tuple(ring))
    dual_faces = _orient_outward(dual_v, dual_faces)
    out = TiledMesh(
        mesh.params,
        dual_v,
        dual_faces,
        np.full(len(dual_v), -1),
        np.full(len(dual_v), -1),
        [VertexClass.LOCAL] * len(dual_v),
        mesh.seed,
    )
    out.meta["dual_of"] = mesh.params.as_dict()
    return out


def euler_characteristic(mesh: TiledMesh) -> int:
    return len(mesh.vertices) - len(mesh.edges) + len(mesh.faces)
