# -*- coding: utf-8 -*-
import json

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

from modules.contact_surface import load_surface
from modules.excel_handler import SINUSOID_SHEET, read_report_sheet
from modules.field_gen import analytic_box_field, load_field
from modules.logger import log
from modules.main import build_parser, main
from modules.scenarios import momentum_scene, write_scene_bundle
from modules.sim import RigidBody, Scene


@pytest.fixture(autouse=True)
def reset_logger():
    yield
    log.remove()


def _run(capsys, tmp_path, *argv):
    code = main(["--log-dir", str(tmp_path / "logs"), *argv])
    out, err = capsys.readouterr()
    report = json.loads(out) if code == 0 and out.strip() else None
    return code, report, err


def _pair_args(data_dir, a_pose="0,0,0,0,0,0", b_pose="0,0,0,0,0,0"):
    cube, field_ = str(data_dir / "cube.ptm"), str(data_dir / "cube.pfd")
    return ["--a-mesh", cube, "--a-field", field_, f"--a-pose={a_pose}",
            "--b-mesh", cube, "--b-field", field_, f"--b-pose={b_pose}"]


# ---------------------------------------------------------------------------
# genfield
# ---------------------------------------------------------------------------


def test_genfield_analytic_box(capsys, tmp_path, data_dir):
    output = tmp_path / "cube.pfd"
    code, report, err = _run(capsys, tmp_path, "genfield", "--mesh", str(data_dir / "cube.ptm"),
                             "--method", "analytic-box", "--modulus", "1e6", "--output", str(output))
    assert code == 0
    assert report["boundary_check"] == "ok"
    assert report["extent_max"] == 1.0
    assert "✅" in err
    assert load_field(output).modulus == 1e6
    assert list((tmp_path / "logs").glob("pfc_*.log"))


def test_genfield_laplace_slab(capsys, tmp_path, data_dir):
    output = tmp_path / "slab.pfd"
    code, report, _ = _run(capsys, tmp_path, "genfield", "--mesh", str(data_dir / "slab.ptm"),
                           "--method", "laplace", "--bc", str(data_dir / "slab_bc.json"),
                           "--output", str(output))
    assert code == 0
    assert report["method"] == "laplace"
    assert load_field(output).extent[8] == pytest.approx(0.5, abs=1e-8)


def test_genfield_laplace_requires_bc(capsys, tmp_path, data_dir):
    code, _, err = _run(capsys, tmp_path, "genfield", "--mesh", str(data_dir / "slab.ptm"),
                        "--method", "laplace", "--output", str(tmp_path / "slab.pfd"))
    assert code == 2
    assert "--bc" in err


def test_missing_mesh_is_input_error(capsys, tmp_path):
    code, _, err = _run(capsys, tmp_path, "genfield", "--mesh", str(tmp_path / "none.ptm"),
                        "--method", "analytic-box", "--output", str(tmp_path / "out.pfd"))
    assert code == 2
    assert "❌" in err


def test_unknown_method_is_usage_error(capsys, tmp_path, data_dir):
    code, _, _ = _run(capsys, tmp_path, "genfield", "--mesh", str(data_dir / "cube.ptm"),
                      "--method", "magic", "--output", str(tmp_path / "out.pfd"))
    assert code == 2


# ---------------------------------------------------------------------------
# contact / energy
# ---------------------------------------------------------------------------


def test_contact_separated(capsys, tmp_path, data_dir):
    code, report, err = _run(capsys, tmp_path, "contact", *_pair_args(data_dir, a_pose="0,0,1.5,0,0,0"))
    assert code == 0
    assert report["surface"]["triangles"] == 0
    assert report["wrench_a"]["force"] == [0.0, 0.0, 0.0]
    assert "не контактируют" in err


def test_contact_overlapping_with_export(capsys, tmp_path, data_dir):
    export = tmp_path / "surface.obj"
    code, report, _ = _run(capsys, tmp_path, "--seed", "7", "--quadrature", "3", "contact",
                           *_pair_args(data_dir, a_pose="0,0,0.9,0,0,0"),
                           "--chi", "0.1", "--export-surface", str(export))
    assert code == 0
    assert report["seed"] == 7
    assert report["quadrature"] == 3
    # A сверху: сила на A направлена вверх, на B - вниз
    assert report["wrench_a"]["force"][2] > 0.0
    assert_allclose(report["wrench_b"]["force"], -np.array(report["wrench_a"]["force"]))
    assert report["broad_phase"]["candidates"] > 0

    surface = load_surface(report["export"]["surface"])
    assert surface.n_triangles == report["surface"]["triangles"]
    assert surface.area == pytest.approx(report["surface"]["area"])


def test_contact_rejects_bad_arguments(capsys, tmp_path, data_dir):
    assert _run(capsys, tmp_path, "contact", *_pair_args(data_dir, a_pose="1,2"))[0] == 2
    assert _run(capsys, tmp_path, "contact", *_pair_args(data_dir), "--chi", "-1")[0] == 2


def test_energy(capsys, tmp_path, data_dir):
    code, report, _ = _run(capsys, tmp_path, "energy", *_pair_args(data_dir, b_pose="0,0,0.9,0,0,0"))
    assert code == 0
    assert report["U"] == pytest.approx(report["U_A"] + report["U_B"])
    assert report["U"] > 0.0
    # вытесненные объёмы в сумме дают объём перекрытия 1 × 1 × 0.1
    assert report["volume_A"] + report["volume_B"] == pytest.approx(0.1, rel=1e-9)


# ---------------------------------------------------------------------------
# simulate / sinusoid
# ---------------------------------------------------------------------------


def test_simulate_is_reproducible(capsys, tmp_path):
    scene_path = write_scene_bundle(momentum_scene(duration=1e-4), tmp_path / "scene")
    outputs = []
    for name in ("first.csv", "second.csv"):
        output = tmp_path / name
        code, report, _ = _run(capsys, tmp_path, "simulate", "--scene", str(scene_path), "--output", str(output))
        assert code == 0
        assert report["rows"] == 11
        outputs.append(output.read_bytes())
    assert outputs[0] == outputs[1]


def test_simulate_with_excel(capsys, tmp_path):
    scene_path = write_scene_bundle(momentum_scene(duration=5e-5), tmp_path / "scene")
    xlsx = tmp_path / "trajectory.xlsx"
    code, report, _ = _run(capsys, tmp_path, "simulate", "--scene", str(scene_path),
                           "--output", str(tmp_path / "out.csv"), "--xlsx", str(xlsx),
                           "--record-every", "2", "--energy-every", "0")
    assert code == 0
    assert report["xlsx"] == str(xlsx)
    assert len(read_report_sheet(xlsx)) == report["rows"] == 4


def test_simulate_malformed_scene(capsys, tmp_path):
    scene_path = tmp_path / "broken.json"
    scene_path.write_text("{\"bodies\": [", encoding="utf-8")
    code, _, err = _run(capsys, tmp_path, "simulate", "--scene", str(scene_path),
                        "--output", str(tmp_path / "out.csv"))
    assert code == 2
    assert "JSON" in err


def test_simulate_divergence(capsys, tmp_path):
    mesh, field_ = analytic_box_field([0.05, 0.05, 0.05], 1e6)
    scene = Scene([RigidBody("box", mesh, field_)], gravity=[0.0, 0.0, -1e308], dt=1e10, duration=1e10)
    scene_path = write_scene_bundle(scene, tmp_path / "scene")
    code, _, err = _run(capsys, tmp_path, "simulate", "--scene", str(scene_path),
                        "--output", str(tmp_path / "out.csv"))
    assert code == 4
    assert "шаг 1" in err


def test_sinusoid(capsys, tmp_path):
    output, xlsx = tmp_path / "sinusoid.csv", tmp_path / "sinusoid.xlsx"
    code, report, _ = _run(capsys, tmp_path, "sinusoid", "--amplitudes", "0", "0.333", "--depths", "0.4",
                           "--resolution", "8", "--output", str(output), "--xlsx", str(xlsx))
    assert code == 0
    table = pd.read_csv(output)
    assert len(table) == len(report["rows"]) == 2
    assert table["normalized_force"].iloc[0] > table["normalized_force"].iloc[1]
    assert len(read_report_sheet(xlsx, SINUSOID_SHEET)) == 2


def test_sinusoid_rejects_bad_resolution(capsys, tmp_path):
    code, _, _ = _run(capsys, tmp_path, "sinusoid", "--resolution", "1", "--output", str(tmp_path / "s.csv"))
    assert code == 2


def test_contact_verification_follows_seed(capsys, tmp_path, data_dir):
    def verification(seed):
        code, report, _ = _run(capsys, tmp_path, "--seed", str(seed), "contact",
                               *_pair_args(data_dir, a_pose="0,0,0.9,0.1,0.2,0.3"), "--verify-samples", "50")
        assert code == 0
        return report["verification"]

    first, again, other = verification(7), verification(7), verification(8)
    assert first == again
    assert first["samples"] == 50
    assert first["relative_gap"] < 1e-8
    assert first["sample_centroid"] != other["sample_centroid"]


def test_contact_rejects_negative_verify_samples(capsys, tmp_path, data_dir):
    code, _, _ = _run(capsys, tmp_path, "contact", *_pair_args(data_dir), "--verify-samples", "-1")
    assert code == 2


def test_genfield_laplace_reports_uncovered_boundary_once(capsys, tmp_path, data_dir):
    bc = tmp_path / "cube_bc.json"
    bc.write_text(json.dumps({"zero": {"axis": "z", "value": 0.5}, "one": [8]}), encoding="utf-8")
    code, report, err = _run(capsys, tmp_path, "genfield", "--mesh", str(data_dir / "cube.ptm"),
                             "--method", "laplace", "--bc", str(bc), "--output", str(tmp_path / "cube.pfd"))
    assert code == 0
    assert report["boundary_check"] == "warnings"
    assert report["warnings"] == ["4 граничных вершин не входят в множество ε=0"]
    assert err.count("граничных вершин не входят") == 1


def test_sinusoid_wavelength(capsys, tmp_path):
    def profile(*extra):
        code, report, _ = _run(capsys, tmp_path, "sinusoid", "--amplitudes", "0", "0.2", "--depths", "0.4",
                               "--output", str(tmp_path / "s.csv"), *extra)
        assert code == 0
        return report

    short, default = profile("--wavelength", "1.0"), profile()
    assert short["wavelength"] == 1.0
    assert default["wavelength"] == pytest.approx(2.0 * np.pi / 3.0)
    assert short["rows"][0]["normalized_force"] == pytest.approx(1.0, rel=0.01)
    # при той же амплитуде более короткая волна круче и вдавливается иначе
    assert short["rows"][1]["normalized_force"] != pytest.approx(default["rows"][1]["normalized_force"], rel=1e-3)


def test_sinusoid_rejects_bad_wavelength(capsys, tmp_path):
    code, _, _ = _run(capsys, tmp_path, "sinusoid", "--wavelength", "0", "--output", str(tmp_path / "s.csv"))
    assert code == 2


def test_genfield_rejects_mesh_with_open_boundary(capsys, tmp_path):
    # два тетраэдра касаются только ребром 0-1
    mesh_path = tmp_path / "bowtie.ptm"
    mesh_path.write_text(
        "ptm 1\nvertices 6\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0.5 -1 -1\n0.5 -1 0.2\ntets 2\n0 1 2 3\n0 1 4 5\n",
        encoding="utf-8",
    )
    code, _, err = _run(capsys, tmp_path, "genfield", "--mesh", str(mesh_path),
                        "--method", "analytic-box", "--output", str(tmp_path / "out.pfd"))
    assert code == 2
    assert "❌" in err


def test_chi_help_states_seconds(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["contact", "--help"])
    help_text = " ".join(capsys.readouterr().out.split())
    assert "χ, с" in help_text
    assert "с/м" not in help_text
