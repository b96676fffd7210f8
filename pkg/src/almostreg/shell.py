"""ShellGen: size equation, symmetric tile decoration and placement search."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .curation import CurationOptions, curate
from .mapping import MappingParams
from .symmetry3d import BaseKind, axis_rotation, base_polyhedron, group_matrices, point_orbits
from .tiling import TiledMesh, generate

CLASH_PENALTY = -10.0
CONTACT_REWARD = 1.0


@dataclass(frozen=True, eq=False)
class BlockModel:
    centers: np.ndarray  # (k, 3)
    radii: np.ndarray  # (k,)
    label: str = "block"

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float).reshape(-1, 3)
        r = np.asarray(self.radii, dtype=float).reshape(-1)
        if len(c) == 0 or len(c) != len(r):
            raise ValueError("a block needs at least one sphere and one radius per sphere")
        if (r <= 0).any():
            raise ValueError("sphere radii must be positive")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "radii", r)

    @classmethod
    def from_dict(cls, d: dict) -> "BlockModel":
        spheres = d["spheres"]
        return cls(
            [[s["x"], s["y"], s["z"]] for s in spheres],
            [s["r"] for s in spheres],
            str(d.get("label", "block")),
        )

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "spheres": [
                {"x": float(c[0]), "y": float(c[1]), "z": float(c[2]), "r": float(r)}
                for c, r in zip(self.centers, self.radii)
            ],
        }

    def centered(self) -> np.ndarray:
        return self.centers - self.centers.mean(axis=0)

    @property
    def bounding_radius(self) -> float:
        return float((np.linalg.norm(self.centered(), axis=1) + self.radii).max())


@dataclass(frozen=True)
class Tile:
    u1: np.ndarray
    u2: np.ndarray
    f: int


@dataclass(frozen=True)
class CTile:
    v1: np.ndarray
    v2: np.ndarray
    c: np.ndarray
    o: int
    block: BlockModel


@dataclass
class ShellCandidate:
    h: int
    k: int
    chiral: bool
    m: float
    theta: float
    score: float
    rotations: np.ndarray  # (n, 3, 3) per-block placements
    translations: np.ndarray  # (n, 3)
    block: BlockModel
    meta: dict = field(default_factory=dict)

    @property
    def n_blocks(self) -> int:
        return len(self.translations)

    def sphere_centers(self) -> np.ndarray:
        local = self.block.centered()
        return (np.einsum("bij,sj->bsi", self.rotations, local) + self.translations[:, None, :]).reshape(-1, 3)

    def sphere_radii(self) -> np.ndarray:
        return np.tile(self.block.radii, self.n_blocks)

    def summary(self) -> dict:
        return {
            "h": self.h,
            "k": self.k,
            "chiral": self.chiral,
            "m": self.m,
            "theta": self.theta,
            "score": self.score,
            "blocks": self.n_blocks,
        }


def solve_size(n: int, base: BaseKind | str = BaseKind.ICOSAHEDRON, blocks_per_tile: int = 3, lattice: str = "tri") -> list[tuple[int, int]]:
    """All (h, k) with blocks_per_tile * faces * T(h, k) == n, chirality partners included."""
    if n < 1:
        raise ValueError("n must be positive")
    faces = base_polyhedron(base).face_count
    c = blocks_per_tile * faces
    if n % c:
        return []
    t = n // c
    square = lattice == "square"
    out = []
    bound = math.isqrt(t) + 1
    for h in range(bound + 1):
        for k in range(bound + 1):
            if (h, k) == (0, 0):
                continue
            tt = h * h + k * k if square else h * h + h * k + k * k
            if tt == t:
                out.append((h, k))
    out.sort(key=lambda p: (-max(p), -p[0]))
    return out


def tiles_from_mesh(mesh: TiledMesh, f: int | None = None) -> tuple[list[Tile], np.ndarray, np.ndarray, list[int]]:
    """One Tile per face, each generated from its face-orbit representative.

    Returns ``(tiles, face_orbit, face_rotation, stabilizer_orders)``.
    """
    mats = group_matrices(mesh.params.base_polyhedron)
    cents = np.array([mesh.vertices[list(fc)].mean(axis=0) for fc in mesh.faces])
    orb = point_orbits(cents, mats, 1e-7 * float(np.linalg.norm(cents, axis=1).max()))
    rep_frames = []
    for r in orb.reps:
        c = cents[r]
        u1 = c / np.linalg.norm(c)
        d = mesh.vertices[mesh.faces[r][0]] - c
        d -= (d @ u1) * u1
        rep_frames.append((u1, d / np.linalg.norm(d)))
    tiles = []
    for i, fc in enumerate(mesh.faces):
        g = mats[orb.rotation[i]]
        u1, u2 = rep_frames[orb.orbit[i]]
        tiles.append(Tile(g @ u1, g @ u2, f or len(fc)))
    stab = [len(s) for s in orb.stabilizers]
    return tiles, orb.orbit, orb.rotation, stab


def superblock_offset(block: BlockModel, f: int) -> float:
    """Smallest in-plane offset for which the f cyclic copies do not overlap (bisection)."""
    local = block.centered()
    r = block.radii

    def clash(rho: float) -> bool:
        pts = []
        for j in range(f):
            rot = axis_rotation([0, 0, 1.0], 2 * math.pi * j / f)
            pts.append((local + [rho, 0.0, 0.0]) @ rot.T)
        for a in range(f):
            for b in range(a + 1, f):
                d = np.linalg.norm(pts[a][:, None, :] - pts[b][None, :, :], axis=2)
                if (d < r[:, None] + r[None, :]).any():
                    return True
        return False

    hi = block.bounding_radius / math.sin(math.pi / f) if f > 1 else 0.0
    lo = 0.0
    if f < 2 or not clash(lo):
        return lo
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if clash(mid):
            lo = mid
        else:
            hi = mid
    # keep clear of the touching configuration so rounding cannot flip it to a clash
    return hi * (1 + 1e-9)


class _Template:
    """Immutable decoration template for one scaled mesh."""

    def __init__(self, mesh: TiledMesh, block: BlockModel, f: int | None = None, rho: float | None = None):
        self.mesh = mesh
        self.block = block
        self.tiles, self.face_orbit, self.face_rot, self.stab = tiles_from_mesh(mesh, f)
        self.f = self.tiles[0].f
        self.rho = superblock_offset(block, self.f) if rho is None else rho
        self.u1 = np.array([t.u1 for t in self.tiles])
        self.u2 = np.array([t.u2 for t in self.tiles])
        self.w = np.cross(self.u1, self.u2)
        self.local = block.centered()
        self.spin = np.array([axis_rotation([0, 0, 1.0], 2 * math.pi * j / self.f) for j in range(self.f)])
        # block orbit representatives: (rep face, copy j) for j < f / |stab|
        self.rep_blocks = []
        reps = [int(np.nonzero(self.face_orbit == o)[0][0]) for o in range(len(self.stab))]
        g = len(group_matrices(mesh.params.base_polyhedron))
        for o, face in enumerate(reps):
            for j in range(self.f // math.gcd(self.f, self.stab[o])):
                self.rep_blocks.append((face * self.f + j, g))

    def place(self, m: float, theta: float, m_faces: np.ndarray | None = None):
        """Per-block rotations and translations (block index = face * f + copy)."""
        v2 = math.cos(theta) * self.u2 + math.sin(theta) * self.w
        frame = np.stack([v2, np.cross(self.u1, v2), self.u1], axis=2)  # columns v2, v1 x v2, v1
        mm = np.full(len(self.tiles), m) if m_faces is None else np.asarray(m_faces, dtype=float)
        c = mm[:, None] * self.u1
        rot = np.einsum("fik,jkl->fjil", frame, self.spin)  # frame @ spin_j
        trans = c[:, None, :] + rot[..., 0] * self.rho
        return rot.reshape(-1, 3, 3), trans.reshape(-1, 3)

    def ctiles(self, m: float, theta: float) -> list[CTile]:
        out = []
        for t in self.tiles:
            v2 = math.cos(theta) * t.u2 + math.sin(theta) * np.cross(t.u1, t.u2)
            if abs(float(v2 @ t.u1)) > 1e-12:
                raise ValueError("decoration axis is not perpendicular to the in-plane direction")
            out.append(CTile(t.u1, v2, m * t.u1, self.f, self.block))
        return out


def decorate(
    mesh: TiledMesh,
    block: BlockModel,
    placement: tuple[float, float],
    *,
    m_faces: dict | None = None,
    f: int | None = None,
    rho: float | None = None,
) -> ShellCandidate:
    """Place one cyclic super-block of ``f`` copies on every tile.

    ``m_faces`` overrides the radial placement of individual faces; it exists to
    probe the decoration rules and breaks global symmetry when non-uniform.
    ``rho`` overrides the in-plane offset of the copies (default: smallest
    offset at which they do not overlap).
    """
    if block.bounding_radius >= mesh.circumradius:
        raise ValueError("block is larger than the mesh")
    tpl = _Template(mesh, block, f, rho)
    m, theta = placement
    for ct in tpl.ctiles(m, theta):
        if abs(float(ct.v1 @ ct.v2)) > 1e-12:
            raise ValueError("decoration axis is not perpendicular to the in-plane direction")
    mf = None
    if m_faces:
        mf = np.full(len(mesh.faces), float(m))
        for i, v in m_faces.items():
            mf[i] = v
    rot, trans = tpl.place(m, theta, mf)
    p = mesh.params
    cand = ShellCandidate(p.h, p.k, _chiral(p.h, p.k), float(m), float(theta), 0.0, rot, trans, block)
    cand.meta["rho"] = tpl.rho
    cand.meta["f"] = tpl.f
    if mf is None:
        cand.score = _score_reps(tpl, cand)
    else:
        cand.score = brute_force_score(cand)
    return cand


def _chiral(h: int, k: int) -> bool:
    return h != 0 and k != 0 and h != k


def _pair_terms(d: np.ndarray, rsum: np.ndarray, tol: float) -> float:
    gap = d - rsum
    clash = int(np.count_nonzero(gap < 0))
    contact = int(np.count_nonzero((gap >= 0) & (gap <= tol)))
    return CONTACT_REWARD * contact + CLASH_PENALTY * clash


def _contact_tol(cand: ShellCandidate, radii_scale: float) -> float:
    return 0.25 * float(cand.block.radii.min()) * radii_scale


def brute_force_score(cand: ShellCandidate, radii_scale: float = 1.0) -> float:
    """All sphere pairs across distinct blocks."""
    pts = cand.sphere_centers()
    r = cand.sphere_radii() * radii_scale
    k = len(cand.block.radii)
    owner = np.repeat(np.arange(cand.n_blocks), k)
    i, j = np.triu_indices(len(pts), 1)
    keep = owner[i] != owner[j]
    i, j = i[keep], j[keep]
    d = np.linalg.norm(pts[i] - pts[j], axis=1)
    return _pair_terms(d, r[i] + r[j], _contact_tol(cand, radii_scale))


def _score_reps(tpl: _Template, cand: ShellCandidate, radii_scale: float = 1.0) -> float:
    pts = cand.sphere_centers()
    k = len(cand.block.radii)
    r = cand.sphere_radii() * radii_scale
    tol = _contact_tol(cand, radii_scale)
    tree = cKDTree(pts)
    cutoff = 2 * float(r.max()) + tol
    owner = np.repeat(np.arange(cand.n_blocks), k)
    total = 0.0
    for b, size in tpl.rep_blocks:
        terms = 0.0
        for s in range(k):
            a = b * k + s
            nb = np.array(tree.query_ball_point(pts[a], cutoff), dtype=int)
            nb = nb[owner[nb] != b]
            if len(nb):
                d = np.linalg.norm(pts[nb] - pts[a], axis=1)
                terms += _pair_terms(d, r[nb] + r[a], tol)
        total += size * terms
    return 0.5 * total


def score(cand: ShellCandidate, radii_scale: float = 1.0, mesh: TiledMesh | None = None) -> float:
    """Representative-based score when the generating mesh is given, else all pairs."""
    if mesh is None:
        return brute_force_score(cand, radii_scale)
    tpl = _Template(mesh, cand.block, cand.meta.get("f"), cand.meta.get("rho"))
    return _score_reps(tpl, cand, radii_scale)


@dataclass(frozen=True)
class ShellOptions:
    angular: int = 64
    radial: int = 32
    m_range: tuple = (0.8, 1.6)
    refine_levels: int = 3
    blocks_per_tile: int = 3
    curate: bool = True
    curation: CurationOptions = CurationOptions()


@dataclass
class ShellResult:
    status: str
    solutions: list
    candidates: list


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("ALMOSTREG_THREADS", "")))
    except ValueError:
        return min(8, os.cpu_count() or 1)


def _scaled_mesh(params: MappingParams, block: BlockModel, opts: ShellOptions, rho: float) -> TiledMesh:
    mesh = generate(params)
    if opts.curate:
        mesh, _ = curate(mesh, opts.curation)
    e = np.array(mesh.edges)
    edge = float(np.linalg.norm(mesh.vertices[e[:, 0]] - mesh.vertices[e[:, 1]], axis=1).mean())
    n = len(mesh.faces[0])
    # tile circumradius matches the super-block radius
    s = 2 * math.sin(math.pi / n) * (rho + block.bounding_radius) / edge
    return mesh.copy_with_vertices(mesh.vertices * s)


def search_template(mesh: TiledMesh, block: BlockModel, opts: ShellOptions, f: int | None = None) -> ShellCandidate:
    tpl = _Template(mesh, block, f)
    m_ref = mesh.circumradius
    lo, hi = opts.m_range[0] * m_ref, opts.m_range[1] * m_ref
    period = 2 * math.pi / tpl.f
    dtheta = period / opts.angular
    dm = (hi - lo) / max(opts.radial - 1, 1)
    p = mesh.params

    def evaluate(theta: float, m: float) -> float:
        rot, trans = tpl.place(m, theta)
        c = ShellCandidate(p.h, p.k, False, m, theta, 0.0, rot, trans, block)
        return _score_reps(tpl, c)

    grid = [(a * dtheta, lo + b * dm) for a in range(opts.angular) for b in range(opts.radial)]
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        scores = list(pool.map(lambda tm: evaluate(*tm), grid))
    best = min(range(len(grid)), key=lambda i: (-scores[i], grid[i][0], grid[i][1]))
    theta, m = grid[best]
    val = scores[best]
    # coordinate descent on theta then m, halving the step at each level
    st, sm = dtheta, dm
    for _ in range(opts.refine_levels):
        st, sm = st / 2, sm / 2
        improved = True
        while improved:
            improved = False
            for dt, dmm in ((st, 0.0), (-st, 0.0), (0.0, sm), (0.0, -sm)):
                t2 = (theta + dt) % period
                m2 = min(max(m + dmm, lo), hi)
                v = evaluate(t2, m2)
                if v > val:
                    theta, m, val = t2, m2, v
                    improved = True
    cand = decorate(mesh, block, (m, theta), f=f)
    cand.meta.update({"m_range": [lo, hi], "scale_circumradius": m_ref})
    return cand


def shell_gen(n: int, block: BlockModel, options: ShellOptions | None = None) -> ShellResult:
    opts = options or ShellOptions()
    sols = solve_size(n, BaseKind.ICOSAHEDRON, opts.blocks_per_tile)
    if not sols:
        c = opts.blocks_per_tile * base_polyhedron(BaseKind.ICOSAHEDRON).face_count
        return ShellResult(f"no integer (h, k) with {c}*T = {n}; terminating", [], [])
    f = opts.blocks_per_tile
    rho = superblock_offset(block, f)
    cands = []
    for h, k in sols:
        # (k, h) is the mirror image of (h, k) only when the pair is chiral
        if not _chiral(h, k) and (k, h) in [(c.h, c.k) for c in cands]:
            continue
        params = MappingParams.make("icosa", "tri", h, k)
        mesh = _scaled_mesh(params, block, opts, rho)
        cands.append(search_template(mesh, block, opts, f))
    cands.sort(key=lambda c: (-c.score, c.theta, c.m))
    return ShellResult("ok", sols, cands)
