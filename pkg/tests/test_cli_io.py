import json
import subprocess
import sys

import numpy as np
import pytest

from almostreg import cli_io
from almostreg.cli import main
from almostreg.curation import curate
from almostreg.mapping import MappingParams
from almostreg.tiling import generate

P = MappingParams.make


@pytest.mark.parametrize(
    "args", [("icosa", "tri", 3, 1), ("cube", "square", 2, 1, True), ("icosa", "hex", 2, 1, True), ("tet", "tri", 2, 2)]
)
def test_json_round_trip_is_bit_identical(tmp_path, args):
    mesh = generate(P(*args))
    path = tmp_path / "m.json"
    cli_io.write_mesh(mesh, path)
    back = cli_io.read_mesh_json(path)
    assert np.array_equal(back.vertices, mesh.vertices)
    assert back.faces == mesh.faces
    assert back.params == mesh.params
    assert np.array_equal(back.vertex_seed, mesh.vertex_seed)
    assert back.vertex_class == mesh.vertex_class
    cli_io.write_mesh(back, tmp_path / "again.json")
    assert (tmp_path / "again.json").read_bytes() == path.read_bytes()


def test_curated_json_round_trip(tmp_path):
    mesh, _ = curate(generate(P("icosa", "tri", 2, 1)))
    cli_io.write_mesh(mesh, tmp_path / "c.json")
    back = cli_io.read_mesh_json(tmp_path / "c.json")
    assert np.array_equal(back.vertices, mesh.vertices)
    assert np.array_equal(back.meta["seed_xyz"], mesh.meta["seed_xyz"])


def test_json_rejects_tampered_seed(tmp_path):
    d = cli_io.mesh_to_dict(generate(P("icosa", "tri", 2, 1)))
    d["seed"]["points"][0] = ["1/2", "0"]
    with pytest.raises(ValueError):
        cli_io.mesh_from_dict(d)


@pytest.mark.parametrize("args", [("icosa", "tri", 2, 1), ("icosa", "hex", 1, 1, True), ("cube", "square", 2, 1)])
def test_obj_and_off_exports_are_valid(tmp_path, args):
    mesh = generate(P(*args))
    cli_io.write_mesh(mesh, tmp_path / "m.obj")
    cli_io.write_mesh(mesh, tmp_path / "m.off")
    for parse, name in ((cli_io.parse_obj, "m.obj"), (cli_io.parse_off, "m.off")):
        v, f = parse((tmp_path / name).read_text())
        assert len(v) == len(mesh.vertices)
        assert [tuple(x) for x in f] == [tuple(x) for x in mesh.faces]
        assert np.array_equal(v, mesh.vertices)  # 17 significant digits survive the trip
    head = (tmp_path / "m.off").read_text().splitlines()[:2]
    assert head[0] == "OFF"
    assert head[1] == f"{len(mesh.vertices)} {len(mesh.faces)} {len(mesh.edges)}"


def test_off_parser_catches_inconsistent_headers():
    with pytest.raises(ValueError):
        cli_io.parse_off("OFF\n3 1 5\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n")
    with pytest.raises(ValueError):
        cli_io.parse_off("OFF\n3 1 3\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n")
    with pytest.raises(ValueError):
        cli_io.parse_obj("v 0 0 0\nv 1 0 0\nf 1 2\n")


def test_gen_writes_mesh_and_report(tmp_path):
    out = tmp_path / "t7.obj"
    assert main(["gen", "--base", "icosa", "--lattice", "tri", "--h", "2", "--k", "1", "--curate", "-o", str(out)]) == 0
    _, faces = cli_io.parse_obj(out.read_text())
    assert len(faces) == 140
    rep = json.loads((tmp_path / "t7.report.json").read_text())
    assert rep["counts"]["T"] == 7
    assert rep["curation"]["worstRatioFinal"] <= 1.05
    assert rep["symmetryResidual"] <= 1e-9


def test_gen_soccer_ball(tmp_path):
    out = tmp_path / "ball.off"
    assert main(["gen", "--base", "icosa", "--lattice", "hex", "--h", "1", "--k", "1", "--dual", "-o", str(out)]) == 0
    v, f = cli_io.parse_off(out.read_text())
    assert (len(v), len(f)) == (60, 32)


def test_gen_invalid_pair_exits_2(tmp_path, capsys):
    code = main(["gen", "--base", "icosa", "--lattice", "square", "--h", "1", "--k", "0", "-o", str(tmp_path / "x.obj")])
    assert code == 2
    assert "incompatible base/lattice pair" in capsys.readouterr().err
    assert not (tmp_path / "x.obj").exists()


def test_gen_unwritable_path_exits_1(tmp_path):
    target = tmp_path / "missing" / "x.obj"
    assert main(["gen", "--base", "icosa", "--lattice", "tri", "--h", "1", "--k", "0", "-o", str(target)]) == 1


def test_counts_command(capsys):
    assert main(["counts", "--base", "icosa", "--lattice", "tri", "--h", "3", "--k", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["T"] == 13 and out["tiles"] == 260
    assert main(["counts", "--base", "icosa", "--lattice", "tri", "--h", "1", "--k", "0"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert (out["tiles"], out["edges"], out["verticesTotal"]) == (20, 30, 12)


def test_counts_match_generated_square_mesh(capsys):
    assert main(["counts", "--base", "cube", "--lattice", "square", "--h", "3", "--k", "2"]) == 0
    out = json.loads(capsys.readouterr().out)
    mesh = generate(P("cube", "square", 3, 2))
    assert (out["tiles"], out["edges"], out["verticesTotal"]) == (len(mesh.faces), len(mesh.edges), len(mesh.vertices))


def test_validate_command(capsys):
    assert main(["validate", "--base", "cube", "--lattice", "tri", "--h", "1", "--k", "0"]) == 2
    assert json.loads(capsys.readouterr().out)["valid"] is False
    assert main(["validate", "--base", "oct", "--lattice", "tri", "--h", "2", "--k", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["T"] == 7


def test_curate_command_from_json(tmp_path):
    src = tmp_path / "m.json"
    assert main(["gen", "--base", "icosa", "--lattice", "tri", "--h", "3", "--k", "1", "-o", str(src)]) == 0
    dst = tmp_path / "c.json"
    assert main(["curate", "--input", str(src), "-o", str(dst)]) == 0
    rep = json.loads((tmp_path / "c.report.json").read_text())
    assert rep["curation"]["worstRatioFinal"] < rep["curation"]["worstRatioInitial"]
    assert main(["curate", "--input", str(tmp_path / "nope.json"), "-o", str(dst)]) == 1


def _block(tmp_path):
    p = tmp_path / "ball.json"
    p.write_text(json.dumps({"label": "ball", "spheres": [{"x": 0, "y": 0, "z": 0, "r": 1.0}]}))
    return p


def test_shellgen_command(tmp_path):
    block = _block(tmp_path)
    out = tmp_path / "out"
    assert main(["shellgen", "--n", "60", "--block", str(block), "--grid", "8x4", "-o", str(out), "--expand"]) == 0
    data = json.loads((out / "candidates.json").read_text())
    assert [(c["h"], c["k"]) for c in data["candidates"]] == [(1, 0)]
    assert len(data["candidates"][0]["placements"]) == 60
    spheres = json.loads((out / "candidate_1_spheres.json").read_text())["spheres"]
    assert len(spheres) == 60
    assert (out / "summary.tsv").read_text().splitlines()[0].startswith("rank")


def test_shellgen_no_solution_exits_3(tmp_path, capsys):
    assert main(["shellgen", "--n", "100", "--block", str(_block(tmp_path)), "-o", str(tmp_path / "o")]) == 3
    assert "terminating" in capsys.readouterr().err


def test_shellgen_bad_block_exits_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"spheres": [{"x": 0, "y": 0, "z": 0, "r": -1}]}))
    assert main(["shellgen", "--n", "60", "--block", str(bad), "-o", str(tmp_path / "o")]) == 2
    assert main(["shellgen", "--n", "60", "--block", str(tmp_path / "none.json"), "-o", str(tmp_path / "o")]) == 1


def test_module_entry_point(tmp_path):
    r = subprocess.run(
        [sys.executable, "-m", "almostreg", "validate", "--base", "icosa", "--lattice", "tri", "--h", "1", "--k", "1"],
        capture_output=True,
        text=True,
    )
    assert r.returncode == 0
    assert json.loads(r.stdout)["valid"]
