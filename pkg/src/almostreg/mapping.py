"""Compatible-mapping validation and closed-form combinatorics."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .lattice2d import (
    HEXAGONAL,
    SQUARE,
    TRIANGULAR,
    LatticeKind,
    LatticeSpec,
    PointKind,
    normalize_point,
)
from .symmetry3d import BaseKind, BasePolyhedron, base_polyhedron


class Mode(enum.Enum):
    PRIMAL = "primal"
    DUAL = "dual"


class CurationCase(enum.Enum):
    NO_WARP = "no_warp"
    BISECTED = "bisected"
    GENERAL = "general"


class InvalidMapping(ValueError):
    def __init__(self, rejection: "Rejection"):
        super().__init__(f"{rejection.reason} ({rejection.rule})")
        self.rejection = rejection


@dataclass(frozen=True)
class MappingParams:
    base: BaseKind
    lattice: LatticeKind
    h: int
    k: int
    mode: Mode = Mode.PRIMAL

    @classmethod
    def make(cls, base: str, lattice: str, h: int, k: int, dual: bool = False) -> "MappingParams":
        return cls(BaseKind(base), LatticeKind(lattice), int(h), int(k), Mode.DUAL if dual else Mode.PRIMAL)

    @property
    def base_polyhedron(self) -> BasePolyhedron:
        return base_polyhedron(self.base)

    @property
    def lattice_spec(self) -> LatticeSpec:
        return LatticeSpec(self.lattice)

    @property
    def t_number(self) -> int:
        if self.lattice is LatticeKind.SQUARE:
            return self.h * self.h + self.k * self.k
        return self.h * self.h + self.h * self.k + self.k * self.k

    def companion(self) -> "MappingParams":
        """Primal parameters whose dual is this mapping (identity for primal)."""
        if self.mode is Mode.PRIMAL:
            return self
        lattice = LatticeKind.SQUARE if self.lattice is LatticeKind.SQUARE else LatticeKind.TRIANGULAR
        return MappingParams(self.base, lattice, self.h, self.k, Mode.PRIMAL)

    def as_dict(self) -> dict:
        return {
            "base": self.base.value,
            "lattice": self.lattice.value,
            "h": self.h,
            "k": self.k,
            "mode": self.mode.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MappingParams":
        return cls(BaseKind(d["base"]), LatticeKind(d["lattice"]), int(d["h"]), int(d["k"]), Mode(d["mode"]))


@dataclass(frozen=True)
class Rejection:
    reason: str
    rule: str

    def __bool__(self) -> bool:
        return False


@dataclass(frozen=True)
class FaceEmbedding:
    params: MappingParams
    corners: tuple  # exact lattice points, first corner maps to the canonical vertex
    center: tuple
    t_number: int
    primal_equivalent: bool = False


_TRI_BASES = {BaseKind.TETRAHEDRON, BaseKind.OCTAHEDRON, BaseKind.ICOSAHEDRON}

# face-centre sublattice of the hexagonal lattice: basis at 60 degrees, length sqrt(3)
_HEX_F1 = (2, 1)
_HEX_F2 = (1, 2)
_HEX_ORIGIN = (-1, 0)


def face_corners(params: MappingParams) -> list[tuple]:
    """Corner coordinates for (h, k); the triangle is completed at (h+k, -h)."""
    h, k = params.h, params.k
    if params.lattice is LatticeKind.SQUARE:
        corners = [(0, 0), (h, k), (h - k, h + k), (-k, h)]
        if params.mode is Mode.DUAL:
            half = Fraction(1, 2)
            corners = [(x + half, y + half) for x, y in corners]
        return [normalize_point(c) for c in corners]
    tri = [(0, 0), (h, k), (h + k, -h)]
    if params.lattice is LatticeKind.HEXAGONAL:
        ox, oy = _HEX_ORIGIN
        return [
            (ox + a * _HEX_F1[0] + b * _HEX_F2[0], oy + a * _HEX_F1[1] + b * _HEX_F2[1])
            for a, b in tri
        ]
    return tri


def _pair_rejection(params: MappingParams) -> Rejection | None:
    base, lat, mode = params.base, params.lattice, params.mode
    if base in _TRI_BASES and lat is LatticeKind.TRIANGULAR and mode is Mode.PRIMAL:
        return None
    if base in _TRI_BASES and lat is LatticeKind.HEXAGONAL:
        if mode is Mode.DUAL:
            return None
        return Rejection(
            "hexagonal lattice needs corners on face centres (dual mapping)",
            "corner off symmetry point",
        )
    if base is BaseKind.CUBE and lat is LatticeKind.SQUARE:
        return None
    return Rejection("incompatible base/lattice pair", "no compatible case")


def validate_corners(
    base: BaseKind | str,
    lattice: LatticeKind | str,
    mode: Mode,
    corners: Sequence[tuple],
    params: MappingParams | None = None,
) -> FaceEmbedding | Rejection:
    """Check a concrete placement of one base face on a lattice."""
    try:
        base = BaseKind(base)
        lattice = LatticeKind(lattice)
    except ValueError:
        return Rejection("non-regular or unknown lattice", "regular lattice required")
    spec = LatticeSpec(lattice)
    poly = base_polyhedron(base)
    probe = MappingParams(base, lattice, 1, 0, mode)
    rej = _pair_rejection(probe)
    if rej is not None:
        return rej
    corners = [normalize_point(c) for c in corners]
    n = len(corners)
    if n != poly.n:
        return Rejection(f"expected {poly.n} corners, got {n}", "regular face required")

    sides = [spec.norm2(_sub(corners[(i + 1) % n], corners[i])) for i in range(n)]
    if sides[0] == 0 or len(set(sides)) != 1:
        return Rejection("corners do not form a regular face", "regular face required")
    if n == 4:
        diag = {spec.norm2(_sub(corners[2], corners[0])), spec.norm2(_sub(corners[3], corners[1]))}
        if diag != {2 * sides[0]}:
            return Rejection("corners do not form a square", "regular face required")

    want = PointKind.VERTEX if mode is Mode.PRIMAL else PointKind.FACE_CENTER
    for c in corners:
        cls = spec.classify_point(c)
        if cls.kind is not want:
            return Rejection(
                f"corner {_fmt(c)} is a {cls.kind.value}, expected {want.value}",
                "corner off symmetry point",
            )

    center = (
        sum(Fraction(c[0]) for c in corners) / n,
        sum(Fraction(c[1]) for c in corners) / n,
    )
    fold = spec.classify_point(center).max_fold
    if fold % poly.gf_fold:
        return Rejection(
            f"face centre {_fmt(center)} has {fold}-fold lattice symmetry, needs a multiple of {poly.gf_fold}",
            "gf-symmetry violation",
        )
    for i in range(n):
        a, b = corners[i], corners[(i + 1) % n]
        mid = ((Fraction(a[0]) + b[0]) / 2, (Fraction(a[1]) + b[1]) / 2)
        if spec.classify_point(mid).max_fold < 2:
            return Rejection(f"edge midpoint {_fmt(mid)} is not a 2-fold point", "ge-symmetry violation")

    if params is None:
        t = int(sides[0] / (3 if lattice is LatticeKind.HEXAGONAL else 1))
        params = MappingParams(base, lattice, 0, 0, mode)
    else:
        t = params.t_number
    return FaceEmbedding(
        params=params,
        corners=tuple(corners),
        center=normalize_point(center),
        t_number=t,
        primal_equivalent=(base is BaseKind.TETRAHEDRON and mode is Mode.DUAL),
    )


def validate(params: MappingParams) -> FaceEmbedding | Rejection:
    if params.h < 0 or params.k < 0:
        return Rejection("h and k must be non-negative", "parameter domain")
    if params.h == 0 and params.k == 0:
        return Rejection("(h, k) must not be (0, 0)", "parameter domain")
    rej = _pair_rejection(params)
    if rej is not None:
        return rej
    return validate_corners(params.base, params.lattice, params.mode, face_corners(params), params)


def require_valid(params: MappingParams) -> FaceEmbedding:
    res = validate(params)
    if isinstance(res, Rejection):
        raise InvalidMapping(res)
    return res


def _sub(a, b):
    return (Fraction(a[0]) - Fraction(b[0]), Fraction(a[1]) - Fraction(b[1]))


def _fmt(p) -> str:
    return "(" + ", ".join(str(x) for x in p) + ")"


def seed_size(params: MappingParams) -> int:
    """Number of local cyclic orbits of lattice points in the closed face."""
    h, k = params.h, params.k
    n = params.base_polyhedron.n
    t = params.t_number
    g = math.gcd(h, k)
    # Pick's theorem: area in fundamental cells is T/2 (triangles) or T (squares)
    area2 = t if n == 3 else 2 * t
    boundary = n * g
    points = (area2 + boundary) // 2 + 1
    fixed = 1 if _center_is_lattice_point(params) else 0
    return (points + (n - 1) * fixed) // n


def _center_is_lattice_point(params: MappingParams) -> bool:
    h, k = params.h, params.k
    if params.base_polyhedron.n == 3:
        return (h - k) % 3 == 0
    return (h - k) % 2 == 0


def face_counts(params: MappingParams) -> dict:
    """Closed-form counts of the tiled polyhedron (primal tiling of ``params``)."""
    require_valid(params)
    p = params.companion()
    poly = p.base_polyhedron
    t = p.t_number
    tiles = poly.face_count * t
    edges = tiles * poly.n // 2
    vertices = 2 + edges - tiles
    out = {
        "T": t,
        "tiles": tiles,
        "verticesTotal": vertices,
        "verticesGlobal": poly.vertex_count,
        "verticesLocal": vertices - poly.vertex_count,
        "edges": edges,
        "seedSize": seed_size(p),
        "tileOrbits": -(-t // poly.n),
    }
    if params.mode is Mode.DUAL:
        out["dual"] = {
            "faces": vertices,
            "vertices": tiles,
            "edges": edges,
            "globalFaces": poly.vertex_count,
            "globalFaceSides": poly.gv_fold,
            "localFaces": vertices - poly.vertex_count,
        }
    return out


def per_face_counts(params: MappingParams) -> dict:
    """Per-face quantities for a triangular primal mapping."""
    emb = require_valid(params)
    if params.lattice is not LatticeKind.TRIANGULAR or params.mode is not Mode.PRIMAL:
        raise InvalidMapping(Rejection("per-face counts need a triangular primal mapping", "parameter domain"))
    h, k = params.h, params.k
    t = emb.t_number
    return {
        "interiorVertices": Fraction(t - 1, 2),
        "maxEdgeLinesCrossed": 2 * (h + k) - 3,
        "maxTrianglesCutPerEdge": 2 * (h + k - 1),
        "areaUnits": t,
    }


def curation_case(params: MappingParams) -> CurationCase:
    require_valid(params)
    if params.h == 0 or params.k == 0:
        return CurationCase.NO_WARP
    if params.h == params.k:
        return CurationCase.BISECTED
    return CurationCase.GENERAL
