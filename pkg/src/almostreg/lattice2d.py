"""Regular 2D lattices in integer (h, k) coordinates.

All lattice-plane arithmetic is exact: points are pairs of ``Fraction`` (or
``int``), and rotations are integer matrices acting on lattice coordinates.
Floating point only appears in :meth:`LatticeSpec.embed`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

Point = tuple  # (x, y) with int or Fraction entries


class LatticeKind(enum.Enum):
    TRIANGULAR = "tri"
    SQUARE = "square"
    HEXAGONAL = "hex"


class PointKind(enum.Enum):
    VERTEX = "vertex"
    EDGE_CENTER = "edge_center"
    FACE_CENTER = "face_center"
    NONE = "none"


class Sign(enum.Enum):
    PLUS = "+"
    MINUS = "-"


@dataclass(frozen=True)
class SymmetryPointClass:
    kind: PointKind
    max_fold: int


@dataclass(frozen=True, order=True)
class SmallTriangleId:
    """Small triangle ``t_{ij+}`` = (i,j),(i+1,j),(i,j+1); ``t_{ij-}`` = (i,j),(i+1,j-1),(i+1,j)."""

    i: int
    j: int
    sign: Sign

    def vertices(self) -> tuple[Point, Point, Point]:
        i, j = self.i, self.j
        if self.sign is Sign.PLUS:
            return (i, j), (i + 1, j), (i, j + 1)
        return (i, j), (i + 1, j - 1), (i + 1, j)

    def centroid(self) -> Point:
        vs = self.vertices()
        return (Fraction(sum(v[0] for v in vs), 3), Fraction(sum(v[1] for v in vs), 3))

    @classmethod
    def from_vertices(cls, vertices: Iterable[Point]) -> "SmallTriangleId":
        vs = sorted((int(v[0]), int(v[1])) for v in vertices)
        for sign in Sign:
            # the lexicographically smallest vertex is (i, j) for both orientations
            i, j = vs[0]
            cand = cls(i, j, sign)
            if sorted(cand.vertices()) == vs:
                return cand
        raise ValueError(f"not a small triangle: {vs}")


# Integer matrices for the smallest lattice rotation, acting on column (x, y).
# Triangular: e2 at +60 deg.  Hexagonal: e2 at +120 deg (both axes point to
# neighbouring vertices).  Square: e2 at +90 deg.
_ROT = {
    LatticeKind.TRIANGULAR: (6, ((0, -1), (1, 1))),
    LatticeKind.SQUARE: (4, ((0, -1), (1, 0))),
    LatticeKind.HEXAGONAL: (6, ((1, -1), (1, 0))),
}

_ANGLE = {
    LatticeKind.TRIANGULAR: math.pi / 3,
    LatticeKind.SQUARE: math.pi / 2,
    LatticeKind.HEXAGONAL: 2 * math.pi / 3,
}


def _as_frac(p: Sequence) -> tuple[Fraction, Fraction]:
    return Fraction(p[0]), Fraction(p[1])


def _is_int(x) -> bool:
    return Fraction(x).denominator == 1


def mat_apply(m, p: Point) -> Point:
    return (m[0][0] * p[0] + m[0][1] * p[1], m[1][0] * p[0] + m[1][1] * p[1])


def mat_mul(a, b):
    return tuple(
        tuple(sum(a[r][t] * b[t][c] for t in range(2)) for c in range(2)) for r in range(2)
    )


def mat_pow(m, n: int):
    out = ((1, 0), (0, 1))
    for _ in range(n % 12):
        out = mat_mul(m, out)
    return out


def cross(o: Point, a: Point, b: Point):
    """Orientation of (o, a, b) in lattice coordinates (sign matches Cartesian)."""
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


@dataclass(frozen=True)
class LatticeSpec:
    kind: LatticeKind

    @classmethod
    def from_name(cls, name: str) -> "LatticeSpec":
        return cls(LatticeKind(name))

    @property
    def angle(self) -> float:
        return _ANGLE[self.kind]

    @property
    def e1(self) -> np.ndarray:
        return np.array([1.0, 0.0])

    @property
    def e2(self) -> np.ndarray:
        return np.array([math.cos(self.angle), math.sin(self.angle)])

    @property
    def rotation_order(self) -> int:
        return _ROT[self.kind][0]

    def embed(self, p) -> np.ndarray:
        """Cartesian position of lattice coordinates ``p`` (shape (2,) or (n, 2))."""
        arr = np.asarray(p, dtype=float)
        basis = np.stack([self.e1, self.e2])
        return arr @ basis

    def norm2(self, v: Point) -> Fraction:
        """Exact squared Cartesian length of lattice vector ``v``."""
        x, y = _as_frac(v)
        if self.kind is LatticeKind.TRIANGULAR:
            return x * x + x * y + y * y
        if self.kind is LatticeKind.HEXAGONAL:
            return x * x - x * y + y * y
        return x * x + y * y

    def dot(self, u: Point, v: Point) -> Fraction:
        u, v = _as_frac(u), _as_frac(v)
        s = (u[0] + v[0], u[1] + v[1])
        return (self.norm2(s) - self.norm2(u) - self.norm2(v)) / 2

    def rotation(self, fold: int):
        """Integer matrix rotating by ``2*pi/fold``, or None if not a lattice map."""
        order, base = _ROT[self.kind]
        if fold < 1 or order % fold:
            return None
        return mat_pow(base, order // fold)

    def is_vertex(self, p: Point) -> bool:
        x, y = p
        if not (_is_int(x) and _is_int(y)):
            return False
        if self.kind is LatticeKind.HEXAGONAL:
            return (int(x) + int(y)) % 3 != 2
        return True

    def is_face_center(self, p: Point) -> bool:
        return self.classify_point(p).kind is PointKind.FACE_CENTER

    def _class_reps(self) -> list[Point]:
        if self.kind is LatticeKind.HEXAGONAL:
            return [(0, 0), (1, 0)]
        return [(0, 0)]

    def preserved_by(self, fold: int, p: Point) -> bool:
        """True when rotation by ``2*pi/fold`` about ``p`` maps vertices onto vertices."""
        if fold == 1:
            return True
        m = self.rotation(fold)
        if m is None:
            return False
        p = _as_frac(p)
        rp = mat_apply(m, p)
        t = (p[0] - rp[0], p[1] - rp[1])
        if not (_is_int(t[0]) and _is_int(t[1])):
            return False
        for v in self._class_reps():
            img = mat_apply(m, v)
            if not self.is_vertex((img[0] + t[0], img[1] + t[1])):
                return False
        return True

    def max_fold(self, p: Point) -> int:
        for fold in (6, 4, 3, 2):
            if self.preserved_by(fold, p):
                return fold
        return 1

    def classify_point(self, p: Point) -> SymmetryPointClass:
        p = _as_frac(p)
        fold = self.max_fold(p)
        integral = _is_int(p[0]) and _is_int(p[1])
        if self.kind is LatticeKind.HEXAGONAL:
            if integral:
                kind = PointKind.VERTEX if self.is_vertex(p) else PointKind.FACE_CENTER
            else:
                kind = PointKind.EDGE_CENTER if fold == 2 else PointKind.NONE
        elif integral:
            kind = PointKind.VERTEX
        elif fold == 2:
            kind = PointKind.EDGE_CENTER
        elif fold >= 3:
            kind = PointKind.FACE_CENTER
        else:
            kind = PointKind.NONE
        if kind is PointKind.NONE:
            fold = 1
        return SymmetryPointClass(kind, fold)

    def rotate_about(self, p: Point, center: Point, fold: int, times: int = 1) -> Point:
        """Exact image of ``p`` under ``times`` rotations by ``2*pi/fold`` about ``center``."""
        m = self.rotation(fold)
        if m is None:
            raise ValueError(f"{self.kind.value} lattice has no {fold}-fold rotation")
        m = mat_pow(m, times % fold)
        p, c = _as_frac(p), _as_frac(center)
        d = mat_apply(m, (p[0] - c[0], p[1] - c[1]))
        return (d[0] + c[0], d[1] + c[1])


def normalize_point(p: Point) -> Point:
    """Canonical hashable form: ints where integral, else Fractions."""
    out = []
    for x in p:
        f = Fraction(x)
        out.append(int(f) if f.denominator == 1 else f)
    return tuple(out)


TRIANGULAR = LatticeSpec(LatticeKind.TRIANGULAR)
SQUARE = LatticeSpec(LatticeKind.SQUARE)
HEXAGONAL = LatticeSpec(LatticeKind.HEXAGONAL)


def classify_point(lattice: LatticeSpec, p: Point) -> SymmetryPointClass:
    return lattice.classify_point(p)


def triangle_center(h: int, k: int) -> Point:
    return (Fraction(2 * h + k, 3), Fraction(k - h, 3))


def c3_partners(h: int, k: int, p: Point) -> tuple[Point, Point]:
    """C3 partners of ``p`` about the centre of the face (0,0), (h,k), (h+k,-h).

    ``q`` is the image under the rotation carrying (0,0) to (h,k); ``r`` the other.
    """
    center = triangle_center(h, k)
    corners = [(0, 0), (h, k), (h + k, -h)]
    step = 1
    if normalize_point(TRIANGULAR.rotate_about(corners[0], center, 3, 1)) != corners[1]:
        step = 2
    q = TRIANGULAR.rotate_about(p, center, 3, step)
    r = TRIANGULAR.rotate_about(p, center, 3, 2 * step)
    return normalize_point(q), normalize_point(r)


def _is_equilateral(corners: Sequence[Point]) -> bool:
    a, b, c = corners
    ab = TRIANGULAR.norm2((b[0] - a[0], b[1] - a[1]))
    bc = TRIANGULAR.norm2((c[0] - b[0], c[1] - b[1]))
    ca = TRIANGULAR.norm2((a[0] - c[0], a[1] - c[1]))
    return ab != 0 and ab == bc == ca


def small_triangle_orbit(
    h1: int, k1: int, h2: int, k2: int, h3: int, k3: int, i: int, j: int, sign: Sign
) -> tuple[SmallTriangleId, SmallTriangleId, SmallTriangleId]:
    """The small triangle ``t_{h1+i, k1+j, sign}`` and its two C3 images about the
    centroid of the corner triangle, ordered so the second image follows the
    rotation carrying the first corner to the second.

    For counter-clockwise corners this coincides with the closed form
    ``t_{h2-i-j-1, k2+i}``, ``t_{h3+j, k3-i-j-1}``.
    """
    corners = [(h1, k1), (h2, k2), (h3, k3)]
    if not _is_equilateral(corners):
        raise ValueError(f"corners {corners} are not an equilateral lattice triangle")
    center = (Fraction(h1 + h2 + h3, 3), Fraction(k1 + k2 + k3, 3))
    step = 1
    if normalize_point(TRIANGULAR.rotate_about(corners[0], center, 3, 1)) != corners[1]:
        step = 2
    first = SmallTriangleId(h1 + i, k1 + j, sign)
    out = [first]
    for t in (step, 2 * step):
        verts = [TRIANGULAR.rotate_about(v, center, 3, t) for v in first.vertices()]
        out.append(SmallTriangleId.from_vertices(verts))
    return tuple(out)
