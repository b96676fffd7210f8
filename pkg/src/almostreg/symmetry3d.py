"""Regular base polyhedra, their rotation groups and the lattice-to-face map."""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, cKDTree


class BaseKind(enum.Enum):
    TETRAHEDRON = "tet"
    OCTAHEDRON = "oct"
    ICOSAHEDRON = "icosa"
    CUBE = "cube"


_GV_FOLD = {
    BaseKind.TETRAHEDRON: 3,
    BaseKind.OCTAHEDRON: 4,
    BaseKind.ICOSAHEDRON: 5,
    BaseKind.CUBE: 3,
}


@dataclass(frozen=True)
class RigidTransform:
    rotation: np.ndarray
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def apply(self, pts) -> np.ndarray:
        return np.asarray(pts, dtype=float) @ self.rotation.T + self.translation

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """``self`` after ``other``."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)


@dataclass(frozen=True)
class FaceMap:
    """Lattice plane -> canonical base face.

    Applied as: translate the face centre D to the origin, scale, spin about Z
    so corner A lands on the base vertex in the XZ half-plane, then lift along
    +Z to the face-centre distance.
    """

    center: np.ndarray  # Cartesian image of D in the lattice plane
    scale: float
    spin: float
    lift: float

    @property
    def spin_matrix(self) -> np.ndarray:
        c, s = math.cos(self.spin), math.sin(self.spin)
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])

    def apply(self, xy) -> np.ndarray:
        xy = np.atleast_2d(np.asarray(xy, dtype=float)) - self.center
        pts = np.zeros((len(xy), 3))
        pts[:, :2] = xy * self.scale
        pts = pts @ self.spin_matrix.T
        pts[:, 2] += self.lift
        return pts


@dataclass(frozen=True, eq=False)
class BasePolyhedron:
    kind: BaseKind
    vertices: np.ndarray  # circumradius 1, canonical orientation
    faces: tuple  # vertex index tuples, counter-clockwise seen from outside

    @property
    def n(self) -> int:
        return len(self.faces[0])

    @property
    def gf_fold(self) -> int:
        return self.n

    @property
    def gv_fold(self) -> int:
        return _GV_FOLD[self.kind]

    @property
    def face_count(self) -> int:
        return len(self.faces)

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def edge_count(self) -> int:
        return self.face_count * self.n // 2

    @property
    def edge_length(self) -> float:
        f = self.faces[0]
        return float(np.linalg.norm(self.vertices[f[0]] - self.vertices[f[1]]))

    @property
    def face_distance(self) -> float:
        return float(np.linalg.norm(self.face_center(0)))

    def face_center(self, i: int) -> np.ndarray:
        return self.vertices[list(self.faces[i])].mean(axis=0)

    def edges(self) -> list[tuple[int, int]]:
        out = set()
        for f in self.faces:
            for a, b in zip(f, f[1:] + f[:1]):
                out.add((min(a, b), max(a, b)))
        return sorted(out)


def _raw_vertices(kind: BaseKind) -> np.ndarray:
    if kind is BaseKind.TETRAHEDRON:
        v = [(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)]
    elif kind is BaseKind.OCTAHEDRON:
        v = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
    elif kind is BaseKind.CUBE:
        v = [(x, y, z) for x in (-1, 1) for y in (-1, 1) for z in (-1, 1)]
    else:
        p = (1 + math.sqrt(5)) / 2
        v = []
        for a in (-1, 1):
            for b in (-p, p):
                v += [(0, a, b), (a, b, 0), (b, 0, a)]
    v = np.array(v, dtype=float)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _hull_faces(verts: np.ndarray) -> list[tuple[int, ...]]:
    hull = ConvexHull(verts)
    groups: dict[tuple, set] = {}
    for simplex, eq in zip(hull.simplices, hull.equations):
        key = tuple(np.round(eq[:3], 6))
        groups.setdefault(key, set()).update(int(i) for i in simplex)
    faces = []
    for normal, idx in groups.items():
        idx = sorted(idx)
        n = np.array(normal)
        c = verts[idx].mean(axis=0)
        u = verts[idx[0]] - c
        u /= np.linalg.norm(u)
        w = np.cross(n, u)
        ang = [math.atan2(np.dot(verts[i] - c, w), np.dot(verts[i] - c, u)) for i in idx]
        order = [i for _, i in sorted(zip(ang, idx))]
        faces.append(tuple(order))
    return faces


def _rotation_between(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    v = np.cross(a, b)
    c = float(np.dot(a, b))
    if np.linalg.norm(v) < 1e-15:
        if c > 0:
            return np.eye(3)
        perp = np.cross(a, [1.0, 0, 0])
        if np.linalg.norm(perp) < 1e-8:
            perp = np.cross(a, [0, 1.0, 0])
        perp /= np.linalg.norm(perp)
        return 2 * np.outer(perp, perp) - np.eye(3)
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + vx + vx @ vx / (1 + c)


def _clean(a: np.ndarray) -> np.ndarray:
    a = a.copy()
    a[np.abs(a) < 1e-15] = 0.0
    return a


@functools.lru_cache(maxsize=None)
def base_polyhedron(kind: BaseKind | str) -> BasePolyhedron:
    """Base polyhedron with centroid at the origin, one face centre on +Z and one
    vertex of that face in the XZ half-plane with x > 0."""
    kind = BaseKind(kind)
    verts = _raw_vertices(kind)
    faces = _hull_faces(verts)
    # deterministic choice of the canonical face: highest centre, then lowest index
    centers = np.array([verts[list(f)].mean(axis=0) for f in faces])
    order = np.lexsort((np.arange(len(faces)), -np.round(centers @ [0.1, 0.3, 1.0], 9)))
    f0 = faces[order[0]]
    rot = _rotation_between(centers[order[0]], np.array([0.0, 0.0, 1.0]))
    verts = verts @ rot.T
    first = verts[f0[0]]
    spin = -math.atan2(first[1], first[0])
    c, s = math.cos(spin), math.sin(spin)
    verts = _clean(verts @ np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]]).T)
    verts[f0[0], 1] = 0.0
    faces = _hull_faces(verts)
    centers = np.array([verts[list(f)].mean(axis=0) for f in faces])
    ang = np.arctan2(centers[:, 1], centers[:, 0])
    idx = sorted(range(len(faces)), key=lambda i: (-round(centers[i, 2], 9), round(ang[i], 9)))
    faces = [faces[i] for i in idx]
    # canonical face starts at the +X vertex
    f = list(faces[0])
    start = int(np.argmax([verts[i, 0] for i in f]))
    faces[0] = tuple(f[start:] + f[:start])
    return BasePolyhedron(kind, verts, tuple(faces))


def _frame(axis: np.ndarray, ref: np.ndarray) -> np.ndarray:
    z = axis / np.linalg.norm(axis)
    x = ref - np.dot(ref, z) * z
    x /= np.linalg.norm(x)
    return np.stack([x, np.cross(z, x), z], axis=1)


@functools.lru_cache(maxsize=None)
def _rotation_group(kind: BaseKind) -> tuple:
    base = base_polyhedron(kind)
    f0 = base.faces[0]
    src = _frame(base.face_center(0), base.vertices[f0[0]])
    mats = []
    for fi, face in enumerate(base.faces):
        for vi in face:
            dst = _frame(base.face_center(fi), base.vertices[vi])
            mats.append(_clean(dst @ src.T))
    return tuple(mats)


def rotation_group(base: BasePolyhedron | BaseKind | str) -> list[RigidTransform]:
    """All proper rotations of the base polyhedron; identity first."""
    kind = base.kind if isinstance(base, BasePolyhedron) else BaseKind(base)
    return [RigidTransform(m) for m in _rotation_group(kind)]


def group_matrices(base: BasePolyhedron | BaseKind | str) -> np.ndarray:
    kind = base.kind if isinstance(base, BasePolyhedron) else BaseKind(base)
    return np.array(_rotation_group(kind))


def axis_rotation(axis, angle: float) -> np.ndarray:
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    k = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
    return np.eye(3) + math.sin(angle) * k + (1 - math.cos(angle)) * (k @ k)


def cyclic_group(center, axis, n: int) -> list[RigidTransform]:
    """Rotations by ``2*pi*m/n`` about the axis through ``center``, m = 0..n-1."""
    if n <= 0:
        raise ValueError("cyclic order must be positive")
    center = np.asarray(center, dtype=float)
    out = []
    for m in range(n):
        r = np.eye(3) if m == 0 else axis_rotation(axis, 2 * math.pi * m / n)
        out.append(RigidTransform(r, center - r @ center))
    return out


def find_rotation(mats: np.ndarray, r: np.ndarray, tol: float = 1e-9) -> int:
    d = np.abs(mats - r).reshape(len(mats), -1).max(axis=1)
    i = int(np.argmin(d))
    if d[i] > tol:
        raise ValueError("rotation is not a group element")
    return i


def twofold_about(base: BasePolyhedron, point: np.ndarray) -> np.ndarray:
    """The group's half-turn about the axis through ``point`` (an edge midpoint)."""
    u = point / np.linalg.norm(point)
    for m in group_matrices(base):
        if abs(np.trace(m) + 1) < 1e-9 and np.allclose(m @ u, u, atol=1e-9):
            return m
    raise ValueError("no two-fold axis through point")


def face_map(base: BasePolyhedron, lattice, corners, center) -> FaceMap:
    """Build the lattice -> canonical face transform for an embedded face.

    ``corners`` are exact lattice coordinates with the first corner mapped onto
    the canonical face's +X vertex; ``center`` is the exact face centre.
    """
    pts = lattice.embed([[float(c[0]), float(c[1])] for c in corners])
    d = lattice.embed([float(center[0]), float(center[1])])
    lattice_edge = float(np.linalg.norm(pts[1] - pts[0]))
    if len(corners) != base.n:
        raise ValueError("corner count does not match the base face")
    scale = base.edge_length / lattice_edge
    a = pts[0] - d
    target = base.vertices[base.faces[0][0]]
    spin = math.atan2(target[1], target[0]) - math.atan2(a[1], a[0])
    return FaceMap(center=d, scale=scale, spin=spin, lift=base.face_distance)


def symmetry_residual(points: np.ndarray, mats: np.ndarray) -> float:
    """Max over rotations of the nearest-neighbour matching distance of the point set."""
    tree = cKDTree(points)
    worst = 0.0
    for m in mats:
        d, _ = tree.query(points @ m.T)
        worst = max(worst, float(d.max()))
    return worst


@dataclass(frozen=True)
class PointOrbits:
    """Orbit bookkeeping of a symmetric point set under a rotation group.

    ``perms[g, i]`` is the index of ``R_g p_i``; point i equals
    ``R[rotation[i]] @ p[reps[orbit[i]]]``.
    """

    perms: np.ndarray
    reps: np.ndarray
    orbit: np.ndarray
    rotation: np.ndarray
    stabilizers: tuple  # per orbit: group indices fixing the representative

    def fixed_basis(self, mats: np.ndarray, o: int) -> np.ndarray:
        """Orthonormal basis (3, d) of the subspace fixed by the representative's stabilizer."""
        stab = self.stabilizers[o]
        if len(stab) == 1:
            return np.eye(3)
        proj = mats[list(stab)].mean(axis=0)
        u, s, _ = np.linalg.svd(proj)
        return u[:, s > 0.5]


def point_orbits(points: np.ndarray, mats: np.ndarray, tol: float) -> PointOrbits:
    points = np.asarray(points, dtype=float)
    tree = cKDTree(points)
    perms = np.empty((len(mats), len(points)), dtype=int)
    for g, m in enumerate(mats):
        d, idx = tree.query(points @ m.T)
        if d.max() > tol:
            raise ValueError(f"point set is not invariant (residual {d.max():.3g})")
        perms[g] = idx
    n = len(points)
    orbit = np.full(n, -1)
    rotation = np.full(n, -1)
    reps = []
    stabs = []
    for i in range(n):
        if orbit[i] >= 0:
            continue
        o = len(reps)
        reps.append(i)
        stabs.append(tuple(int(g) for g in np.nonzero(perms[:, i] == i)[0]))
        for g in range(len(mats)):
            j = perms[g, i]
            if orbit[j] < 0:
                orbit[j] = o
                rotation[j] = g
    return PointOrbits(perms, np.array(reps), orbit, rotation, tuple(stabs))
