"""Command line front end: graph -> map -> mesh -> solve -> verify -> export.

Commands (all take --config <json> and --out <dir>):

    map      build and validate the domain map; writes map.json, map.svg,
             map_validation.json
    mesh     triangulate the map; writes mesh.vtk, mesh_facets.vtk,
             mesh_quality.json
    solve    assemble and solve; writes solution.vtk, facet_traces.csv,
             solve_report.json
    verify   manufactured-solution convergence plus the solver-side
             acceptance properties; writes convergence.csv, verify_report.json
    project  split a vector field into its gradient part on Omega_2;
             writes projection.json

Exit codes: 0 success, 1 usage/input error, 2 validation/verification failure.

Config schema (JSON object; unknown keys are rejected):

    graph_file     path to {"vertices": [[x, y], ...], "edges": [[i, j], ...]}
    map_kind       "downscaling" (default) or "tubular"
    epsilon        number or "auto" (default) for tubular maps
    h_target       target mesh size (default 0.25)
    refine_levels  red refinements for mesh/solve, levels for verify (default 3)
    case           builtin manufactured case ("M0_constant", "M1_trig");
                   replaces graph/coefficients for solve/verify/project
    coefficients   {"a", "beta", "gx", "gy", "F", "f_flux", "f_stress"}
    field          {"vx", "vy"} expressions for project
    outputs        {"svg", "vtk", "csv", "report"} booleans (default all on)
    tolerances     {"validate_tol", "residual_tol", "min_angle_deg"}

All emitted JSON/CSV is deterministic: fixed key order, floats at 17
significant digits.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import darcy_mixed as dm
from . import expr as ex
from . import map_builder as mb
from . import mesh as gm
from . import plane_graph as pg
from . import verify as vf
from .errors import GraphDarcyError, InputError, ValidationError, ValidationFailed

_TOP_KEYS = {"graph_file", "map_kind", "epsilon", "h_target", "refine_levels",
             "case", "coefficients", "field", "outputs", "tolerances"}
_COEFF_KEYS = {"a", "beta", "gx", "gy", "F", "f_flux", "f_stress"}
_OUTPUT_KEYS = {"svg", "vtk", "csv", "report"}
_TOL_KEYS = {"validate_tol", "residual_tol", "min_angle_deg"}


def load_config(path):
    with open(path) as fp:
        data = json.load(fp)
    if not isinstance(data, dict):
        raise InputError("config must be a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise InputError(f"unknown config keys: {sorted(unknown)}")
    for key, allowed in (("coefficients", _COEFF_KEYS), ("outputs", _OUTPUT_KEYS),
                         ("tolerances", _TOL_KEYS), ("field", {"vx", "vy"})):
        sub = data.get(key, {})
        if not isinstance(sub, dict):
            raise InputError(f"config key {key!r} must be an object")
        bad = set(sub) - allowed
        if bad:
            raise InputError(f"unknown keys under {key!r}: {sorted(bad)}")
    kind = data.get("map_kind", "downscaling")
    if kind not in ("downscaling", "tubular"):
        raise InputError(f"map_kind must be 'downscaling' or 'tubular', got {kind!r}")
    eps = data.get("epsilon", "auto")
    if eps != "auto" and not isinstance(eps, (int, float)):
        raise InputError("epsilon must be a number or 'auto'")
    levels = data.get("refine_levels", 3)
    if not isinstance(levels, int) or levels < 0:
        raise InputError("refine_levels must be a non-negative integer")
    h = data.get("h_target", 0.25)
    if not isinstance(h, (int, float)) or h <= 0:
        raise InputError("h_target must be a positive number")
    return data


def load_graph(path):
    with open(path) as fp:
        data = json.load(fp)
    if not isinstance(data, dict) or "vertices" not in data or "edges" not in data:
        raise InputError("graph file needs 'vertices' and 'edges' arrays")
    return pg.build_embedding(data["vertices"], [tuple(e) for e in data["edges"]])


def _json_dump(path, payload):
    with open(path, "w") as fp:
        json.dump(payload, fp, indent=2, sort_keys=True)
        fp.write("\n")


def _outputs(config):
    defaults = {k: True for k in _OUTPUT_KEYS}
    defaults.update(config.get("outputs", {}))
    return defaults


def _coeffs_from(config):
    strings = {"a": "1", "beta": "1", "gx": "0", "gy": "0", "F": "0",
               "f_flux": "0", "f_stress": "0"}
    strings.update(config.get("coefficients", {}))
    return dm.Coefficients.from_strings(**strings)


def _build_map(config):
    g = load_graph(config["graph_file"])
    tol = config.get("tolerances", {}).get("validate_tol")
    if config.get("map_kind", "downscaling") == "tubular":
        eps = config.get("epsilon", "auto")
        eps = mb.auto_epsilon(g) if eps == "auto" else float(eps)
        built = mb.assemble_map(g, mb.tubular_map(g, eps))
        report = mb.validate_map(built, g, tol)
        return g, built, report
    built = mb.downscaling_map(g, tol=tol)   # raises ValidationFailed on failure
    return g, built, mb.validate_map(built, g, tol)


def cmd_map(config, out_dir):
    want = _outputs(config)
    try:
        g, built, report = _build_map(config)
    except ValidationFailed as err:
        if want["report"]:
            _json_dump(os.path.join(out_dir, "map_validation.json"),
                       err.report.to_json())
        print(f"map validation failed: {err.report.summary()}", file=sys.stderr)
        return 2
    _json_dump(os.path.join(out_dir, "map.json"), mb.map_to_json(built))
    if want["svg"]:
        with open(os.path.join(out_dir, "map.svg"), "w") as fp:
            fp.write(mb.map_to_svg(built, g))
    if want["report"]:
        _json_dump(os.path.join(out_dir, "map_validation.json"), report.to_json())
    if not report.passed:
        print(f"map validation failed: {report.summary()}", file=sys.stderr)
        return 2
    return 0


def _mesh_from_config(config):
    if config.get("case"):
        case = vf.builtin_case(config["case"])
        built = case.geometry
    else:
        _, built, report = _build_map(config)
        if not report.passed:
            raise ValidationFailed(report)
    min_angle = config.get("tolerances", {}).get("min_angle_deg", 15.0)
    m = gm.triangulate(built, float(config.get("h_target", 0.25)),
                       min_angle_deg=min_angle)
    return built, m


def cmd_mesh(config, out_dir):
    want = _outputs(config)
    built, m = _mesh_from_config(config)
    for _ in range(int(config.get("refine_levels", 0))):
        m = gm.refine(m)
    if want["vtk"]:
        gm.write_vtk(m, os.path.join(out_dir, "mesh.vtk"))
        gm.write_facets_vtk(m, os.path.join(out_dir, "mesh_facets.vtk"))
    if want["report"]:
        _json_dump(os.path.join(out_dir, "mesh_quality.json"), gm.mesh_quality(m))
    return 0


def _nodal_p2(sol):
    lay = sol.layout
    values = np.zeros(lay.mesh.node_count)
    seen = set()
    for k, (region, node) in enumerate(lay.p2_entities):
        if node not in seen:
            values[node] = sol.p2[k]
            seen.add(node)
    return values


def cmd_solve(config, out_dir, seed=0):
    want = _outputs(config)
    if config.get("case"):
        case = vf.builtin_case(config["case"])
        built, coeffs = case.geometry, case.coeffs
    else:
        _, built, report = _build_map(config)
        if not report.passed:
            raise ValidationFailed(report)
        coeffs = _coeffs_from(config)
    min_angle = config.get("tolerances", {}).get("min_angle_deg", 15.0)
    m = gm.triangulate(built, float(config.get("h_target", 0.25)),
                       min_angle_deg=min_angle)
    residual_tol = config.get("tolerances", {}).get("residual_tol", 1e-10)
    sys_ = dm.assemble(m, coeffs)
    sol = dm.solve(sys_, residual_tol=residual_tol)
    post = dm.postprocess(sol)

    if want["vtk"]:
        p1_field = np.zeros(m.cell_count)
        p1_field[sol.layout.p1_cells] = sol.p1
        u1_field = np.zeros((m.cell_count, 2))
        u1_field[post["u1_cells"]] = post["u1_vectors"]
        u2_field = np.zeros((m.cell_count, 2))
        u2_field[post["u2_cells"]] = post["u2_vectors"]
        gm.write_vtk(m, os.path.join(out_dir, "solution.vtk"),
                     cell_data={"p1": p1_field, "u1": u1_field, "u2": u2_field},
                     point_data={"p2": _nodal_p2(sol)})
    traces = post["gamma"]
    residuals = vf.interface_residuals(sol, coeffs, m)
    if want["csv"]:
        beta = ex.compile_vectorized(coeffs.beta)(traces.midpoints[:, 0],
                                                  traces.midpoints[:, 1])
        fflux = ex.compile_vectorized(coeffs.f_flux)(traces.midpoints[:, 0],
                                                     traces.midpoints[:, 1])
        fstress = ex.compile_vectorized(coeffs.f_stress)(traces.midpoints[:, 0],
                                                         traces.midpoints[:, 1])
        lines = ["facet,mid_x,mid_y,u1_n,u2_n,p1,p2,r_flux,r_stress"]
        for i, f in enumerate(traces.facets):
            r_flux = traces.u1_n[i] - traces.u2_n[i] - beta[i] * traces.p2[i] - fflux[i]
            r_stress = traces.p2[i] - traces.p1[i] - fstress[i]
            row = [str(int(f))] + [f"{v:.17g}" for v in (
                traces.midpoints[i, 0], traces.midpoints[i, 1], traces.u1_n[i],
                traces.u2_n[i], traces.p1[i], traces.p2[i], r_flux, r_stress)]
            lines.append(",".join(row))
        with open(os.path.join(out_dir, "facet_traces.csv"), "w") as fp:
            fp.write("\n".join(lines) + "\n")
    report = {
        "residual": sol.residual,
        "conservation_residual": vf.conservation_residual(sol, coeffs, m),
        "interface_residuals": residuals,
        "dofs": {"u1": sol.layout.n_u1, "p1": sol.layout.n_p1,
                 "p2": sol.layout.n_p2, "constraints": sol.layout.n_constraints},
        "passed": sol.residual <= residual_tol,
    }
    if want["report"]:
        _json_dump(os.path.join(out_dir, "solve_report.json"), report)
    return 0 if report["passed"] else 2


def _verify_properties(case_name, levels, seed):
    """Solver-side acceptance properties for one manufactured case."""
    case = vf.builtin_case(case_name)
    table = vf.run_convergence(case, levels)
    props = {}

    if case_name == "M0_constant":
        worst = max(max(row.errors.values()) for row in table.rows)
        props["exact_constant_reproduction"] = {
            "passed": worst <= 1e-9, "max_error": worst, "tolerance": 1e-9}
    else:
        last = table.rates()[-1]
        props["rates_first_order_fields"] = {
            "passed": all(last[k] >= 0.9 for k in
                          ("u1_L2", "p1_L2", "p2_H1s", "u2_L2")),
            "rates": last, "threshold": 0.9}
        props["rate_p2_L2"] = {"passed": last["p2_L2"] >= 1.8,
                               "rate": last["p2_L2"], "threshold": 1.8}

    mesh0 = gm.triangulate(case.geometry, case.h0())
    meshes = [mesh0]
    for _ in range(levels - 1):
        meshes.append(gm.refine(meshes[-1]))
    conservation = []
    interface = []
    for m in meshes:
        sol = dm.solve(dm.assemble(m, case.coeffs))
        conservation.append(vf.conservation_residual(sol, case.coeffs, m))
        interface.append(vf.interface_residuals(sol, case.coeffs, m))
    if case_name == "M0_constant":
        props["conservation"] = {"passed": max(conservation) <= 1e-10,
                                 "values": conservation, "tolerance": 1e-10}
        worst_iface = max(max(r.values()) for r in interface)
        props["interface_residuals"] = {"passed": worst_iface <= 1e-9,
                                        "max": worst_iface, "tolerance": 1e-9}
    else:
        h0sq = gm.mesh_quality(meshes[0])["h_max"] ** 2
        bound = [10.0 * h0sq / 4 ** lvl for lvl in range(levels)]
        props["conservation"] = {
            "passed": all(c <= b for c, b in zip(conservation, bound)),
            "values": conservation, "bounds": bound}
        rate_flux = math.log2(interface[-2]["r_flux"] / interface[-1]["r_flux"])
        rate_stress = math.log2(interface[-2]["r_stress"] / interface[-1]["r_stress"])
        props["interface_residual_rates"] = {
            "passed": rate_flux >= 0.9 and rate_stress >= 0.9,
            "r_flux_rate": rate_flux, "r_stress_rate": rate_stress,
            "threshold": 0.9}

    ratios = table.stability_ratios()
    spread = (max(ratios) - min(ratios)) / min(ratios)
    props["stability_ratio"] = {"passed": spread <= 0.10,
                                "ratios": ratios, "spread": spread}

    coarse = gm.triangulate(case.geometry, 0.5)
    sigma0 = vf.inf_sup_estimate(coarse)
    sigma1 = vf.inf_sup_estimate(gm.refine(coarse))
    props["inf_sup"] = {"passed": sigma0 > 1e-6 and sigma1 >= 0.8 * sigma0,
                        "sigma_h": sigma0, "sigma_h2": sigma1}

    sys_c = dm.assemble(coarse, case.coeffs)
    worst = vf.coercivity_witness(sys_c, n_samples=20, seed=seed)
    bound = vf.coercivity_lower_bound(coarse, case.coeffs) / 10.0
    props["coercivity"] = {"passed": worst >= 1e-8 and worst >= bound,
                           "min_rayleigh": worst, "bound": bound}

    proj = _projection_properties(case)
    props.update(proj)
    return table, props


def _projection_properties(case):
    built = case.geometry
    m = gm.triangulate(built, 0.25)
    props = {}
    pr = dm.project_onto_V(m, (ex.parse("1"), ex.parse("0")))
    err = float(np.abs(pr.projected() - np.array([1.0, 0.0])).max())
    props["projection_constant_field"] = {"passed": err <= 1e-8, "error": err}

    errs = []
    orthos = []
    mm = m
    for _ in range(3):
        lay = dm.build_layout(mm)
        pr = dm.project_onto_V(mm, (ex.parse("x"), ex.parse("y")), lay)
        Pv = pr.projected()
        p2c, area2, _ = dm._cell_geometry(mm, lay.c2_cells)
        pts = dm._quad_points(p2c, dm.VOL_BARY)
        w = dm.VOL_W[None, :] * area2[:, None]
        rx = pts[..., 0] - Pv[:, None, 0]
        ry = pts[..., 1] - Pv[:, None, 1]
        errs.append(math.sqrt(float(np.sum(w * (rx * rx + ry * ry)))))
        orthos.append(abs(float(np.sum(
            w * (Pv[:, None, 0] * rx + Pv[:, None, 1] * ry)))))
        mm = gm.refine(mm)
    rate = math.log2(errs[-2] / errs[-1])
    props["projection_orthogonality"] = {
        "passed": max(orthos) <= 1e-8, "max_inner_product": max(orthos)}
    props["projection_gradient_rate"] = {"passed": rate >= 0.9, "rate": rate,
                                         "errors": errs}
    return props


def cmd_verify(config, out_dir, seed=0):
    want = _outputs(config)
    levels = int(config.get("refine_levels", 3))
    if levels < 2:
        raise InputError("verify needs refine_levels >= 2")
    case_name = config.get("case", "M1_trig")
    table, props = _verify_properties(case_name, levels, seed)
    if want["csv"]:
        with open(os.path.join(out_dir, "convergence.csv"), "w") as fp:
            fp.write(table.to_csv())
    passed = all(entry["passed"] for entry in props.values())
    report = {"case": case_name, "levels": levels, "seed": seed,
              "properties": props, "passed": passed}
    if want["report"]:
        _json_dump(os.path.join(out_dir, "verify_report.json"), report)
    for name, entry in sorted(props.items()):
        print(f"{'PASS' if entry['passed'] else 'FAIL'}  {name}")
    return 0 if passed else 2


def cmd_project(config, out_dir, seed=0):
    field = config.get("field")
    if not field or "vx" not in field or "vy" not in field:
        raise InputError("project needs config key 'field' with 'vx' and 'vy'")
    if config.get("case"):
        built = vf.builtin_case(config["case"]).geometry
    elif config.get("graph_file"):
        _, built, report = _build_map(config)
        if not report.passed:
            raise ValidationFailed(report)
    else:
        built, _ = vf.two_strip_map()
    m = gm.triangulate(built, float(config.get("h_target", 0.25)))
    lay = dm.build_layout(m)
    pr = dm.project_onto_V(m, (ex.parse(field["vx"]), ex.parse(field["vy"])), lay)
    Pv = pr.projected()
    fx = ex.compile_vectorized(ex.parse(field["vx"]))
    fy = ex.compile_vectorized(ex.parse(field["vy"]))
    p2c, area2, _ = dm._cell_geometry(m, lay.c2_cells)
    pts = dm._quad_points(p2c, dm.VOL_BARY)
    w = dm.VOL_W[None, :] * area2[:, None]
    rx = fx(pts[..., 0], pts[..., 1]) - Pv[:, None, 0]
    ry = fy(pts[..., 0], pts[..., 1]) - Pv[:, None, 1]
    comp_norm = math.sqrt(float(np.sum(w * (rx * rx + ry * ry))))
    ortho = float(np.sum(w * (Pv[:, None, 0] * rx + Pv[:, None, 1] * ry)))
    payload = {
        "field": {"vx": field["vx"], "vy": field["vy"]},
        "entities": [[int(r), int(nd)] for r, nd in lay.p2_entities],
        "xi": [float(v) for v in pr.xi],
        "eta": [float(v) for v in pr.eta],
        "complement_L2": comp_norm,
        "orthogonality": ortho,
    }
    _json_dump(os.path.join(out_dir, "projection.json"), payload)
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="graphdarcy", description=__doc__.split("\n")[0])
    parser.add_argument("command",
                        choices=["map", "mesh", "solve", "verify", "project"])
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default=".")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        handler = {
            "map": lambda: cmd_map(config, args.out),
            "mesh": lambda: cmd_mesh(config, args.out),
            "solve": lambda: cmd_solve(config, args.out, args.seed),
            "verify": lambda: cmd_verify(config, args.out, args.seed),
            "project": lambda: cmd_project(config, args.out, args.seed),
        }[args.command]
        return handler()
    except (InputError, FileNotFoundError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except ValidationFailed as err:
        print(f"validation failed: {err.report.summary()}", file=sys.stderr)
        return 2
    except (ValidationError, GraphDarcyError) as err:
        print(f"{type(err).__name__}: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
