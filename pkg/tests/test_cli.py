import json
import math

import pytest

from graphdarcy.cli import main


def write(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


def graph_file(tmp_path, name, verts, edges):
    return write(tmp_path / name, {"vertices": verts, "edges": edges})


def p3_file(tmp_path):
    return graph_file(tmp_path, "p3.json",
                      [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], [[0, 1], [1, 2]])


def k3_file(tmp_path):
    h = math.sqrt(3) / 2
    return graph_file(tmp_path, "k3.json",
                      [[0.0, 0.0], [1.0, 0.0], [0.5, h]], [[0, 1], [1, 2], [2, 0]])


def test_cmd_map_path_graph_passes(tmp_path):
    cfg = write(tmp_path / "cfg.json", {"graph_file": p3_file(tmp_path)})
    assert main(["map", "--config", cfg, "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "map_validation.json").read_text())
    assert report["passed"]
    assert (tmp_path / "map.svg").exists()
    assert (tmp_path / "map.json").exists()


def test_cmd_map_k3_tubular_fails_condition_iv(tmp_path):
    cfg = write(tmp_path / "cfg.json",
                {"graph_file": k3_file(tmp_path), "map_kind": "tubular"})
    assert main(["map", "--config", cfg, "--out", str(tmp_path)]) == 2
    report = json.loads((tmp_path / "map_validation.json").read_text())
    assert not report["passed"]
    failing = [k for k, v in report["conditions"].items() if not v["passed"]]
    assert failing == ["iv_domain_simply_connected"]


def test_missing_file_is_usage_error(tmp_path):
    cfg = write(tmp_path / "cfg.json", {"graph_file": str(tmp_path / "nope.json")})
    assert main(["map", "--config", cfg, "--out", str(tmp_path)]) == 1
    assert main(["map", "--config", str(tmp_path / "missing_cfg.json"),
                 "--out", str(tmp_path)]) == 1


def test_unknown_config_key_rejected(tmp_path):
    cfg = write(tmp_path / "cfg.json", {"graph_file": "x", "bogus": 1})
    assert main(["map", "--config", cfg, "--out", str(tmp_path)]) == 1


def test_cmd_mesh(tmp_path):
    cfg = write(tmp_path / "cfg.json",
                {"graph_file": p3_file(tmp_path), "h_target": 0.2,
                 "refine_levels": 1})
    assert main(["mesh", "--config", cfg, "--out", str(tmp_path)]) == 0
    quality = json.loads((tmp_path / "mesh_quality.json").read_text())
    assert quality["min_angle_deg"] >= 15.0
    assert (tmp_path / "mesh.vtk").exists()
    assert (tmp_path / "mesh_facets.vtk").exists()


def test_cmd_solve_m0_case(tmp_path):
    cfg = write(tmp_path / "cfg.json", {"case": "M0_constant", "h_target": 0.3})
    assert main(["solve", "--config", cfg, "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "solve_report.json").read_text())
    assert report["passed"]
    assert report["interface_residuals"]["r_flux"] <= 1e-9
    # p2 field constant 1 in the VTK point data
    text = (tmp_path / "solution.vtk").read_text()
    tail = text.split("SCALARS p2 double 1")[1].splitlines()[2:]
    values = [float(v) for v in tail if v.strip()]
    assert all(abs(v) < 1e-9 or abs(v - 1.0) < 1e-9 for v in values)
    assert any(abs(v - 1.0) < 1e-9 for v in values)
    assert (tmp_path / "facet_traces.csv").read_text().startswith("facet,mid_x")


def test_cmd_solve_non_bipartite_graph(tmp_path):
    cfg = write(tmp_path / "cfg.json",
                {"graph_file": k3_file(tmp_path), "h_target": 0.2})
    assert main(["solve", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_cmd_solve_all_zero_beta(tmp_path):
    sq = graph_file(tmp_path, "sq.json",
                    [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
                    [[0, 1], [1, 2], [2, 3], [3, 0]])
    cfg = write(tmp_path / "cfg.json",
                {"graph_file": sq, "h_target": 0.2,
                 "coefficients": {"beta": "0", "f_flux": "-1", "f_stress": "1"}})
    assert main(["solve", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_cmd_verify_level_guard(tmp_path):
    cfg = write(tmp_path / "cfg.json", {"case": "M0_constant", "refine_levels": 1})
    assert main(["verify", "--config", cfg, "--out", str(tmp_path)]) == 1


def test_cmd_verify_m0(tmp_path, capsys):
    cfg = write(tmp_path / "cfg.json", {"case": "M0_constant", "refine_levels": 2})
    assert main(["verify", "--config", cfg, "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "verify_report.json").read_text())
    assert report["passed"]
    out = capsys.readouterr().out
    assert "PASS  exact_constant_reproduction" in out
    assert "FAIL" not in out


def test_cmd_verify_deterministic(tmp_path):
    cfg = write(tmp_path / "cfg.json", {"case": "M0_constant", "refine_levels": 2})
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["verify", "--config", cfg, "--out", str(out_a)]) == 0
    assert main(["verify", "--config", cfg, "--out", str(out_b)]) == 0
    assert (out_a / "convergence.csv").read_bytes() == \
        (out_b / "convergence.csv").read_bytes()
    assert (out_a / "verify_report.json").read_bytes() == \
        (out_b / "verify_report.json").read_bytes()


def test_cmd_project(tmp_path):
    cfg = write(tmp_path / "crg.json",
                {"field": {"vx": "1", "vy": "0"}, "h_target": 0.3})
    assert main(["project", "--config", cfg, "--out", str(tmp_path)]) == 0
    payload = json.loads((tmp_path / "projection.json").read_text())
    assert payload["complement_L2"] <= 1e-8
    assert abs(payload["orthogonality"]) <= 1e-8
