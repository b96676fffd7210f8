"""Mesh, block and report serialization."""
from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from .mapping import MappingParams, Mode
from .tiling import SeedSet, TiledMesh, VertexClass, build_seed, transform_matrices

MESH_FORMAT = "almostreg-mesh/1"


def _g(x: float) -> str:
    return "%.17g" % x


def to_obj(mesh: TiledMesh) -> str:
    lines = [f"v {_g(x)} {_g(y)} {_g(z)}" for x, y, z in mesh.vertices]
    lines += ["f " + " ".join(str(i + 1) for i in f) for f in mesh.faces]
    return "\n".join(lines) + "\n"


def to_off(mesh: TiledMesh) -> str:
    lines = ["OFF", f"{len(mesh.vertices)} {len(mesh.faces)} {len(mesh.edges)}"]
    lines += [f"{_g(x)} {_g(y)} {_g(z)}" for x, y, z in mesh.vertices]
    lines += [f"{len(f)} " + " ".join(str(i) for i in f) for f in mesh.faces]
    return "\n".join(lines) + "\n"


def parse_obj(text: str) -> tuple[np.ndarray, list[tuple]]:
    verts, faces = [], []
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            faces.append(tuple(int(x.split("/")[0]) - 1 for x in parts[1:]))
    return _checked(np.array(verts, dtype=float).reshape(-1, 3), faces)


def parse_off(text: str) -> tuple[np.ndarray, list[tuple]]:
    rows = [l.split() for l in text.splitlines() if l.strip() and not l.startswith("#")]
    if not rows or rows[0] != ["OFF"]:
        raise ValueError("missing OFF header")
    nv, nf, ne = (int(x) for x in rows[1])
    if len(rows) != 2 + nv + nf:
        raise ValueError("OFF record count does not match header")
    verts = np.array([[float(x) for x in r] for r in rows[2 : 2 + nv]]).reshape(-1, 3)
    faces = []
    for r in rows[2 + nv :]:
        deg = int(r[0])
        if len(r) != deg + 1:
            raise ValueError("OFF face degree does not match its index list")
        faces.append(tuple(int(x) for x in r[1:]))
    verts, faces = _checked(verts, faces)
    edges = {(min(a, b), max(a, b)) for f in faces for a, b in zip(f, f[1:] + f[:1])}
    if ne != len(edges):
        raise ValueError(f"OFF header claims {ne} edges, faces define {len(edges)}")
    return verts, faces


def _checked(verts, faces):
    for f in faces:
        if len(f) < 3:
            raise ValueError("face with fewer than 3 vertices")
        if min(f) < 0 or max(f) >= len(verts):
            raise ValueError("face index out of range")
    return verts, faces


def _frac(x) -> str:
    return str(Fraction(x))


def mesh_to_dict(mesh: TiledMesh) -> dict:
    params = mesh.params
    seed = mesh.seed
    meta = {}
    for key, val in sorted(mesh.meta.items()):
        if isinstance(val, np.ndarray):
            val = val.tolist()
        meta[key] = val
    return {
        "format": MESH_FORMAT,
        "params": params.as_dict(),
        "seed": None
        if seed is None
        else {"fold": seed.fold, "points": [[_frac(c) for c in p] for p in seed.points]},
        "transforms": transform_matrices(params.companion()).tolist(),
        "vertices": mesh.vertices.tolist(),
        "faces": [list(f) for f in mesh.faces],
        "vertexSeed": [int(x) for x in mesh.vertex_seed],
        "vertexTransform": [int(x) for x in mesh.vertex_transform],
        "vertexClass": [c.value for c in mesh.vertex_class],
        "meta": meta,
    }


def mesh_from_dict(d: dict) -> TiledMesh:
    if d.get("format") != MESH_FORMAT:
        raise ValueError(f"unsupported mesh format {d.get('format')!r}")
    params = MappingParams.from_dict(d["params"])
    seed = None
    if d.get("seed") is not None:
        pts = [tuple(_parse_exact(c) for c in p) for p in d["seed"]["points"]]
        ref = build_seed(params.companion())
        if ref.points != pts:
            raise ValueError("stored seed set does not match the mapping parameters")
        seed = SeedSet(pts, ref.orbit_index, int(d["seed"]["fold"]))
    meta = dict(d.get("meta", {}))
    if "seed_xyz" in meta:
        meta["seed_xyz"] = np.array(meta["seed_xyz"], dtype=float)
    verts, faces = _checked(np.array(d["vertices"], dtype=float).reshape(-1, 3), [tuple(f) for f in d["faces"]])
    return TiledMesh(
        params,
        verts,
        faces,
        np.array(d["vertexSeed"], dtype=int),
        np.array(d["vertexTransform"], dtype=int),
        [VertexClass(c) for c in d["vertexClass"]],
        seed,
        meta,
    )


def _parse_exact(s: str):
    f = Fraction(s)
    return int(f) if f.denominator == 1 else f


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def write_mesh(mesh: TiledMesh, path: str | Path, fmt: str | None = None) -> str:
    path = Path(path)
    fmt = fmt or (path.suffix.lstrip(".").lower() or "obj")
    if fmt == "obj":
        text = to_obj(mesh)
    elif fmt == "off":
        text = to_off(mesh)
    elif fmt == "json":
        text = dumps(mesh_to_dict(mesh))
    else:
        raise ValueError(f"unknown mesh format {fmt!r}")
    path.write_text(text)
    return fmt


def read_mesh_json(path: str | Path) -> TiledMesh:
    return mesh_from_dict(json.loads(Path(path).read_text()))


def read_block(path: str | Path):
    from .shell import BlockModel

    return BlockModel.from_dict(json.loads(Path(path).read_text()))


def report_path(mesh_path: str | Path) -> Path:
    p = Path(mesh_path)
    return p.with_name(p.stem + ".report.json")


def write_json(path: str | Path, obj) -> None:
    Path(path).write_text(dumps(obj))


def is_dual(mesh: TiledMesh) -> bool:
    return mesh.params.mode is Mode.DUAL
