"""Symmetric edge-length curation of warped tilings."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import lbfgs
from .mapping import CurationCase, curation_case
from .symmetry3d import PointOrbits, group_matrices, point_orbits, symmetry_residual
from .tiling import TiledMesh


@dataclass(frozen=True)
class CurationOptions:
    max_iterations: int = 2000
    grad_tolerance: float = 1e-10
    displacement_weight: float = 0.1


@dataclass
class CurationReport:
    iterations: int
    energy_initial: float
    energy_final: float
    worst_ratio_initial: float
    worst_ratio_final: float
    max_displacement: float
    symmetry_residual: float
    line_search_failed: bool = False
    converged: bool = False
    energy_history: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "energyInitial": self.energy_initial,
            "energyFinal": self.energy_final,
            "worstRatioInitial": self.worst_ratio_initial,
            "worstRatioFinal": self.worst_ratio_final,
            "maxDisplacement": self.max_displacement,
            "symmetryResidual": self.symmetry_residual,
            "lineSearchFailed": self.line_search_failed,
            "converged": self.converged,
        }


def diagonal_pairs(faces) -> list[tuple[int, int]]:
    """Quad diagonals and the three long diagonals of hexagons."""
    out = set()
    for f in faces:
        n = len(f)
        if n in (4, 6):
            half = n // 2
            for i in range(half):
                a, b = f[i], f[i + half]
                out.add((min(a, b), max(a, b)))
    return sorted(out)


@dataclass
class EnergyState:
    """Orbit-parametrized vertex positions.

    Vertex i sits at ``rotations[orbit_rotation[i]] @ seeds[orbit[i]]``; a seed
    fixed by a nontrivial stabilizer only moves inside ``bases[o]``.
    """

    seeds: np.ndarray  # (S, 3) current representative positions
    initial: np.ndarray  # (S, 3)
    edges1: np.ndarray  # (E1, 2)
    edges2: np.ndarray  # (E2, 2)
    orbits: PointOrbits
    rotations: np.ndarray  # (G, 3, 3)
    bases: list  # per orbit (3, d)
    projectors: np.ndarray  # (S, 3, 3) stabilizer averages
    weight: float = 0.1

    @classmethod
    def from_mesh(
        cls, mesh: TiledMesh, weight: float = 0.1, tol: float | None = None, mats: np.ndarray | None = None
    ) -> "EnergyState":
        if mats is None:
            mats = group_matrices(mesh.params.base_polyhedron)
        scale = mesh.circumradius
        orbits = point_orbits(mesh.vertices, mats, tol if tol is not None else 1e-7 * scale)
        seeds = mesh.vertices[orbits.reps].copy()
        bases = [orbits.fixed_basis(mats, o) for o in range(len(orbits.reps))]
        proj = np.array([mats[list(s)].mean(axis=0) for s in orbits.stabilizers])
        e1 = np.array(mesh.edges, dtype=int).reshape(-1, 2)
        e2 = np.array(diagonal_pairs(mesh.faces), dtype=int).reshape(-1, 2)
        if len(e1) == 0:
            raise ValueError("energy needs at least one tile edge")
        return cls(seeds, seeds.copy(), e1, e2, orbits, mats, bases, proj, weight)

    @property
    def n_vertices(self) -> int:
        return len(self.orbits.orbit)

    def positions(self, seeds: np.ndarray | None = None) -> np.ndarray:
        seeds = self.seeds if seeds is None else seeds
        o = self.orbits
        return np.einsum("vij,vj->vi", self.rotations[o.rotation], seeds[o.orbit])

    # reduced coordinates: seeds = initial + B x, one block per orbit
    def pack(self, seeds: np.ndarray) -> np.ndarray:
        d = seeds - self.initial
        return np.concatenate([b.T @ d[o] for o, b in enumerate(self.bases)])

    def unpack(self, x: np.ndarray) -> np.ndarray:
        out = self.initial.copy()
        pos = 0
        for o, b in enumerate(self.bases):
            k = b.shape[1]
            out[o] += b @ x[pos : pos + k]
            pos += k
        return out

    def reduce_gradient(self, g_seed: np.ndarray) -> np.ndarray:
        return np.concatenate([b.T @ g_seed[o] for o, b in enumerate(self.bases)])


def _edge_term(p: np.ndarray, edges: np.ndarray, grad: np.ndarray) -> float:
    if len(edges) == 0:
        return 0.0
    d = p[edges[:, 0]] - p[edges[:, 1]]
    l = np.einsum("ij,ij->i", d, d)
    dev = l - l.mean()
    m = len(edges)
    # d/dl_e of mean squared deviation is 2*dev_e/m (the mean's own derivative cancels)
    w = (4.0 / m) * dev[:, None] * d
    np.add.at(grad, edges[:, 0], w)
    np.add.at(grad, edges[:, 1], -w)
    return float(dev @ dev) / m


def energy_and_gradient(state: EnergyState, seeds: np.ndarray | None = None) -> tuple[float, np.ndarray]:
    """Energy and its per-seed gradient (stabilizer-symmetrized)."""
    seeds = state.seeds if seeds is None else seeds
    p = state.positions(seeds)
    gv = np.zeros_like(p)
    f = _edge_term(p, state.edges1, gv) + _edge_term(p, state.edges2, gv)
    o = state.orbits
    # pull each vertex gradient back to its representative and sum over copies
    pulled = np.einsum("vji,vj->vi", state.rotations[o.rotation], gv)
    gs = np.zeros_like(seeds)
    np.add.at(gs, o.orbit, pulled)
    disp = seeds - state.initial
    n = len(seeds)
    f += state.weight / n * float(np.einsum("ij,ij->", disp, disp))
    gs += (2.0 * state.weight / n) * disp
    gs = np.einsum("sij,sj->si", state.projectors, gs)
    return f, gs


def energy(state: EnergyState, seeds: np.ndarray | None = None) -> float:
    return energy_and_gradient(state, seeds)[0]


def gradient(state: EnergyState, seeds: np.ndarray | None = None) -> np.ndarray:
    return energy_and_gradient(state, seeds)[1]


def worst_ratio(vertices: np.ndarray, faces) -> float:
    worst = 1.0
    for f in faces:
        p = vertices[list(f)]
        l = np.linalg.norm(p - np.roll(p, -1, axis=0), axis=1)
        worst = max(worst, float(l.max() / l.min()))
    return worst


def curate(
    mesh: TiledMesh, options: CurationOptions | None = None, mats: np.ndarray | None = None
) -> tuple[TiledMesh, CurationReport]:
    """Minimize the energy over orbit representatives with L-BFGS.

    ``mats`` overrides the rotation group (needed when the mesh is not in the
    canonical orientation).
    """
    opts = options or CurationOptions()
    if mats is None:
        mats = group_matrices(mesh.params.base_polyhedron)
    ratio0 = worst_ratio(mesh.vertices, mesh.faces)
    if curation_case(mesh.params) is CurationCase.NO_WARP:
        res = symmetry_residual(mesh.vertices, mats)
        f0 = energy(EnergyState.from_mesh(mesh, opts.displacement_weight, mats=mats))
        report = CurationReport(0, f0, f0, ratio0, ratio0, 0.0, res, converged=True, energy_history=[f0])
        return mesh.copy_with_vertices(mesh.vertices), report

    state = EnergyState.from_mesh(mesh, opts.displacement_weight, mats=mats)

    def fun(x):
        f, g = energy_and_gradient(state, state.unpack(x))
        return f, state.reduce_gradient(g)

    edge = float(np.sqrt(np.mean(np.sum((mesh.vertices[state.edges1[:, 0]] - mesh.vertices[state.edges1[:, 1]]) ** 2, axis=1))))
    result = lbfgs.minimize(
        fun,
        np.zeros(sum(b.shape[1] for b in state.bases)),
        max_iterations=opts.max_iterations,
        grad_tolerance=opts.grad_tolerance,
        initial_step=0.01 * edge,
    )
    state.seeds = state.unpack(result.x)
    verts = state.positions()
    out = mesh.copy_with_vertices(verts)
    if "seed_xyz" in mesh.meta:
        tree = cKDTree(mesh.vertices)
        _, idx = tree.query(np.asarray(mesh.meta["seed_xyz"]))
        out.meta["seed_xyz"] = verts[idx]
    out.meta["curated"] = True
    report = CurationReport(
        iterations=result.iterations,
        energy_initial=result.history[0],
        energy_final=result.f,
        worst_ratio_initial=ratio0,
        worst_ratio_final=worst_ratio(verts, mesh.faces),
        max_displacement=float(np.linalg.norm(verts - mesh.vertices, axis=1).max()),
        symmetry_residual=symmetry_residual(verts, mats),
        line_search_failed=result.line_search_failed,
        converged=result.converged,
        energy_history=list(result.history),
    )
    return out, report
