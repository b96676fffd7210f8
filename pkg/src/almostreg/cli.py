"""Command-line entry point: ``almostreg {gen,counts,curate,validate,shellgen}``."""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import cli_io
from .curation import CurationOptions, curate
from .lattice2d import LatticeKind
from .mapping import InvalidMapping, MappingParams, Rejection, face_counts, per_face_counts, validate
from .shell import ShellOptions, shell_gen
from .symmetry3d import group_matrices, symmetry_residual
from .tiling import StructureError, TiledMesh, euler_characteristic, generate

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_NO_SOLUTION = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _mapping_args(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--base", choices=["tet", "oct", "icosa", "cube"], required=required)
    p.add_argument("--lattice", choices=["tri", "hex", "square"], required=required)
    p.add_argument("--h", type=int, required=required)
    p.add_argument("--k", type=int, required=required)
    p.add_argument("--dual", action="store_true")


def _curation_args(p: argparse.ArgumentParser) -> None:
    d = CurationOptions()
    p.add_argument("--lambda", dest="lam", type=float, default=d.displacement_weight, help="displacement weight")
    p.add_argument("--max-iter", type=int, default=d.max_iterations)
    p.add_argument("--grad-tol", type=float, default=d.grad_tolerance)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="almostreg", description="Almost-regular polyhedra toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a tiled polyhedron")
    _mapping_args(g)
    g.add_argument("--curate", action="store_true")
    g.add_argument("--fold-bisected", action="store_true", help="isometric refold when h == k")
    g.add_argument("--weld-tol", type=float, default=None)
    g.add_argument("-o", "--output", required=True)
    g.add_argument("--format", choices=["obj", "off", "json"], default=None)
    _curation_args(g)

    c = sub.add_parser("counts", help="closed-form counts as JSON")
    _mapping_args(c)

    cu = sub.add_parser("curate", help="curate a JSON mesh or a freshly generated one")
    cu.add_argument("--input", default=None, help="mesh JSON written by gen --format json")
    _mapping_args(cu, required=False)
    cu.add_argument("-o", "--output", required=True)
    cu.add_argument("--format", choices=["obj", "off", "json"], default=None)
    _curation_args(cu)

    v = sub.add_parser("validate", help="check a base/lattice/(h,k) mapping")
    _mapping_args(v)

    s = sub.add_parser("shellgen", help="template a shell of n blocks")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--block", required=True)
    s.add_argument("--top", type=int, default=None)
    s.add_argument("--grid", default="64x32", help="angular x radial samples")
    s.add_argument("--no-curate", action="store_true")
    s.add_argument("--expand", action="store_true", help="also write all sphere centres")
    s.add_argument("-o", "--output", required=True)
    return ap


def _params(a) -> MappingParams:
    for name in ("base", "lattice", "h", "k"):
        if getattr(a, name) is None:
            raise CliError(EXIT_INVALID, f"--{name} is required")
    return MappingParams.make(a.base, a.lattice, a.h, a.k, a.dual)


def _require(params: MappingParams) -> None:
    res = validate(params)
    if isinstance(res, Rejection):
        raise CliError(EXIT_INVALID, f"invalid mapping: {res.reason} [{res.rule}]")


def _copts(a) -> CurationOptions:
    return CurationOptions(max_iterations=a.max_iter, grad_tolerance=a.grad_tol, displacement_weight=a.lam)


def _report(mesh: TiledMesh, curation=None) -> dict:
    mats = group_matrices(mesh.params.base_polyhedron)
    return {
        "params": mesh.params.as_dict(),
        "counts": face_counts(mesh.params),
        "mesh": {
            "vertices": len(mesh.vertices),
            "faces": len(mesh.faces),
            "edges": len(mesh.edges),
            "faceSizes": {str(k): v for k, v in sorted(mesh.face_sizes().items())},
            "euler": euler_characteristic(mesh),
        },
        "symmetryResidual": symmetry_residual(mesh.vertices, mats),
        "curation": None if curation is None else curation.as_dict(),
    }


def _write(mesh: TiledMesh, out: str, fmt: str | None, curation=None) -> None:
    try:
        cli_io.write_mesh(mesh, out, fmt)
        cli_io.write_json(cli_io.report_path(out), _report(mesh, curation))
    except OSError as e:
        raise CliError(EXIT_IO, f"cannot write output: {e}") from e


def cmd_gen(a) -> int:
    params = _params(a)
    _require(params)
    mesh = generate(params, a.weld_tol, fold=a.fold_bisected)
    rep = None
    if a.curate:
        mesh, rep = curate(mesh, _copts(a))
    _write(mesh, a.output, a.format, rep)
    return EXIT_OK


def _jsonable(v):
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else str(v)
    return v


def cmd_counts(a) -> int:
    params = _params(a)
    _require(params)
    out = face_counts(params)
    if params.lattice is LatticeKind.TRIANGULAR and not a.dual:
        pf = per_face_counts(params)
        out["perFace"] = {k: _jsonable(v) for k, v in pf.items()}
    print(json.dumps(out, sort_keys=True))
    return EXIT_OK


def cmd_curate(a) -> int:
    if a.input:
        try:
            mesh = cli_io.read_mesh_json(a.input)
        except OSError as e:
            raise CliError(EXIT_IO, f"cannot read {a.input}: {e}") from e
        except (ValueError, KeyError) as e:
            raise CliError(EXIT_INVALID, f"bad mesh file: {e}") from e
    else:
        params = _params(a)
        _require(params)
        mesh = generate(params)
    mesh, rep = curate(mesh, _copts(a))
    _write(mesh, a.output, a.format, rep)
    return EXIT_OK


def cmd_validate(a) -> int:
    params = _params(a)
    res = validate(params)
    if isinstance(res, Rejection):
        print(json.dumps({"valid": False, "reason": res.reason, "rule": res.rule}, sort_keys=True))
        return EXIT_INVALID
    print(json.dumps({"valid": True, "T": res.t_number, "params": params.as_dict()}, sort_keys=True))
    return EXIT_OK


def _grid(text: str) -> tuple[int, int]:
    try:
        a, r = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise CliError(EXIT_INVALID, f"--grid expects AxR, got {text!r}") from None
    if a < 1 or r < 1:
        raise CliError(EXIT_INVALID, "--grid sizes must be positive")
    return a, r


def cmd_shellgen(a) -> int:
    if a.n < 1:
        raise CliError(EXIT_INVALID, "--n must be positive")
    ang, rad = _grid(a.grid)
    try:
        block = cli_io.read_block(a.block)
    except OSError as e:
        raise CliError(EXIT_IO, f"cannot read {a.block}: {e}") from e
    except (ValueError, KeyError, TypeError) as e:
        raise CliError(EXIT_INVALID, f"bad block file: {e}") from e
    res = shell_gen(a.n, block, ShellOptions(angular=ang, radial=rad, curate=not a.no_curate))
    if not res.solutions:
        print(res.status, file=sys.stderr)
        return EXIT_NO_SOLUTION
    cands = res.candidates[: a.top] if a.top else res.candidates
    out = Path(a.output)
    try:
        out.mkdir(parents=True, exist_ok=True)
        records = []
        rows = ["rank\th\tk\tchiral\tscore\tm\ttheta\tblocks"]
        for i, c in enumerate(cands, 1):
            rec = c.summary()
            rec["rank"] = i
            rec["rho"] = c.meta["rho"]
            rec["placements"] = [
                {"rotation": r.tolist(), "translation": t.tolist()} for r, t in zip(c.rotations, c.translations)
            ]
            records.append(rec)
            rows.append(
                f"{i}\t{c.h}\t{c.k}\t{int(c.chiral)}\t{c.score:.17g}\t{c.m:.17g}\t{c.theta:.17g}\t{c.n_blocks}"
            )
            if a.expand:
                spheres = [
                    {"x": p[0], "y": p[1], "z": p[2], "r": r}
                    for p, r in zip(c.sphere_centers().tolist(), c.sphere_radii().tolist())
                ]
                cli_io.write_json(out / f"candidate_{i}_spheres.json", {"label": block.label, "spheres": spheres})
        cli_io.write_json(
            out / "candidates.json",
            {"n": a.n, "solutions": [list(s) for s in res.solutions], "block": block.as_dict(), "candidates": records},
        )
        (out / "summary.tsv").write_text("\n".join(rows) + "\n")
    except OSError as e:
        raise CliError(EXIT_IO, f"cannot write output: {e}") from e
    return EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "counts": cmd_counts,
    "curate": cmd_curate,
    "validate": cmd_validate,
    "shellgen": cmd_shellgen,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CliError as e:
        print(f"almostreg: {e}", file=sys.stderr)
        return e.code
    except InvalidMapping as e:
        print(f"almostreg: invalid mapping: {e}", file=sys.stderr)
        return EXIT_INVALID
    except StructureError as e:
        print(f"almostreg: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
