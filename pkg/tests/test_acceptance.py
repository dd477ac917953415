"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines and timings.
"""

import json
import math
import time

import numpy as np
import pytest

from graphdarcy import corpus
from graphdarcy import darcy_mixed as dm
from graphdarcy import expr as ex
from graphdarcy import map_builder as mb
from graphdarcy import mesh as gm
from graphdarcy import plane_graph as pg
from graphdarcy import verify as vf
from graphdarcy.cli import main as cli_main

SEED = 20260809


def _report(number, name, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    print(f"ACCEPTANCE {number:>2} [{status}] {name}" + (f" - {detail}" if detail else ""))
    assert passed, f"criterion {number} ({name}) failed: {detail}"


def _brute_force_bridges(g):
    out = set()
    for drop in g.edges:
        adj = {v: [] for v in range(g.vertex_count)}
        for e in g.edges:
            if e == drop:
                continue
            adj[e[0]].append(e[1])
            adj[e[1]].append(e[0])
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != g.vertex_count:
            out.add(drop)
    return out


def test_criterion_1_combinatorics():
    t0 = time.monotonic()
    graphs = corpus.combinatorics_corpus(seed=SEED)
    assert len(graphs) >= 55
    double_dual_checked = 0
    for name, g in graphs:
        euler = g.vertex_count - g.edge_count + len(pg.faces(g))
        assert euler == 2, f"Euler failed on {name}"
        if g.vertex_count <= 12:
            assert pg.double_dual_isomorphic(g), f"double dual failed on {name}"
            double_dual_checked += 1
        assert pg.bridges(g) == _brute_force_bridges(g), f"bridges differ on {name}"
    elapsed = time.monotonic() - t0
    _report(1, "combinatorics corpus", elapsed <= 10.0,
            f"{len(graphs)} graphs, {double_dual_checked} double-dual checks, "
            f"{elapsed:.1f}s (budget 10s)")


def test_criterion_2_map_existence():
    t0 = time.monotonic()
    checked = 0
    for name, g in corpus.bipartite_map_corpus(seed=SEED):
        assert pg.bipartition(g) is not None, f"{name} not bipartite"
        built = mb.downscaling_map(g)          # raises on validation failure
        report = mb.validate_map(built, g)     # tol defaults to 1e-9 * bbox
        assert report.passed, f"{name}: {report.summary()}"
        checked += 1
    for name, g in corpus.tree_corpus(seed=SEED):
        regions = mb.tubular_map(g, mb.auto_epsilon(g))
        built = mb.assemble_map(g, regions)
        report = mb.validate_map(built, g)
        assert report.passed, f"tubular {name}: {report.summary()}"
        checked += 1
    elapsed = time.monotonic() - t0
    _report(2, "downscaling/tubular map existence", elapsed <= 30.0,
            f"{checked} maps validated, {elapsed:.1f}s (budget 30s)")


def test_criterion_3_tubular_k3_negative_control():
    g = corpus.k3()
    regions = mb.tubular_map(g, 0.5 * mb.auto_epsilon(g))
    built = mb.assemble_map(g, regions)
    report = mb.validate_map(built, g)
    failing = report.failing()
    _report(3, "tubular K3 fails exactly condition (iv)",
            failing == ["iv_domain_simply_connected"],
            f"failing conditions: {failing}")


def test_criterion_4_constant_reproduction():
    case = vf.builtin_case("M0_constant")
    table = vf.run_convergence(case, 2)
    worst_error = max(max(row.errors.values()) for row in table.rows)
    mesh0 = gm.triangulate(case.geometry, case.h0())
    worst_iface = 0.0
    for m in (mesh0, gm.refine(mesh0)):
        sol = dm.solve(dm.assemble(m, case.coeffs))
        res = vf.interface_residuals(sol, case.coeffs, m)
        worst_iface = max(worst_iface, res["r_flux"], res["r_stress"])
    _report(4, "M0 exact constant reproduction",
            worst_error <= 1e-9 and worst_iface <= 1e-9,
            f"max error {worst_error:.2e}, max interface residual {worst_iface:.2e} "
            f"(tol 1e-9)")


def test_criterion_5_m1_convergence_rates():
    t0 = time.monotonic()
    table = vf.run_convergence(vf.builtin_case("M1_trig"), 3)
    last = table.rates()[-1]
    elapsed = time.monotonic() - t0
    ok = (all(last[k] >= 0.9 for k in ("u1_L2", "p1_L2", "p2_H1s", "u2_L2"))
          and last["p2_L2"] >= 1.8 and elapsed <= 60.0)
    _report(5, "M1 observed convergence rates", ok,
            ", ".join(f"{k}={v:.2f}" for k, v in last.items())
            + f"; {elapsed:.1f}s (budget 60s)")


def _cellwise_quadrature_error(mesh, coeffs, layout):
    """Max cell difference between order-4 and order-2 integration of F."""
    c1 = layout.p1_cells
    p1c, area1, _ = dm._cell_geometry(mesh, c1)
    f = ex.compile_vectorized(coeffs.F)
    pts2 = dm._quad_points(p1c, dm.VOL_BARY)
    low = np.einsum("mq,mq->m", dm.VOL_W[None, :] * area1[:, None],
                    f(pts2[..., 0], pts2[..., 1]))
    pts4 = dm._quad_points(p1c, dm.ERR_BARY)
    high = np.einsum("mq,mq->m", dm.ERR_W[None, :] * area1[:, None],
                     f(pts4[..., 0], pts4[..., 1]))
    return float(np.abs(high - low).max())


def test_criterion_6_local_conservation():
    m0 = vf.builtin_case("M0_constant")
    mesh = gm.triangulate(m0.geometry, m0.h0())
    details = []
    ok = True
    for m in (mesh, gm.refine(mesh)):
        sol = dm.solve(dm.assemble(m, m0.coeffs))
        res = vf.conservation_residual(sol, m0.coeffs, m)
        ok = ok and res <= 1e-10
        details.append(f"M0 {res:.1e}")
    m1 = vf.builtin_case("M1_trig")
    mesh = gm.triangulate(m1.geometry, m1.h0())
    for _ in range(3):
        sys_ = dm.assemble(mesh, m1.coeffs)
        sol = dm.solve(sys_)
        res = vf.conservation_residual(sol, m1.coeffs, mesh)
        bound = 10.0 * _cellwise_quadrature_error(mesh, m1.coeffs, sys_.layout)
        ok = ok and res <= bound
        details.append(f"M1 {res:.1e}<=({bound:.1e})")
        mesh = gm.refine(mesh)
    _report(6, "local conservation", ok, "; ".join(details))


def test_criterion_7_stability_ratio():
    table = vf.run_convergence(vf.builtin_case("M1_trig"), 3)
    ratios = table.stability_ratios()
    spread = (max(ratios) - min(ratios)) / min(ratios)
    non_increasing = all(cur <= 1.1 * prev for prev, cur in zip(ratios, ratios[1:]))
    _report(7, "solution/data norm ratio mesh-independent",
            spread <= 0.10 and non_increasing,
            f"ratios {[f'{r:.4f}' for r in ratios]}, spread {100 * spread:.2f}%")


def test_criterion_8_discrete_inf_sup():
    built, _ = vf.two_strip_map()
    coarse = gm.triangulate(built, 0.5)
    sigma0 = vf.inf_sup_estimate(coarse)
    sigma1 = vf.inf_sup_estimate(gm.refine(coarse))
    _report(8, "discrete inf-sup stable under refinement",
            sigma0 > 1e-6 and sigma1 >= 0.8 * sigma0,
            f"sigma_h {sigma0:.4f}, sigma_h/2 {sigma1:.4f}, "
            f"ratio {sigma1 / sigma0:.3f} (>= 0.8)")


def test_criterion_9_coercivity_witness():
    case = vf.builtin_case("M0_constant")
    coarse = gm.triangulate(case.geometry, 0.5)
    sys_ = dm.assemble(coarse, case.coeffs)
    worst = vf.coercivity_witness(sys_, n_samples=20, seed=SEED)
    bound = vf.coercivity_lower_bound(coarse, case.coeffs) / 10.0
    _report(9, "coercivity on ker(B)", worst >= 1e-8 and worst >= bound,
            f"min Rayleigh {worst:.4f} >= max(1e-8, {bound:.4f})")


def test_criterion_10_projection():
    built, _ = vf.two_strip_map()
    m = gm.triangulate(built, 0.25)
    orthos = []

    pr = dm.project_onto_V(m, (ex.parse("1"), ex.parse("0")))
    const_err = float(np.abs(pr.projected() - np.array([1.0, 0.0])).max())

    def measure(mesh_, vx, vy):
        lay = dm.build_layout(mesh_)
        pr = dm.project_onto_V(mesh_, (ex.parse(vx), ex.parse(vy)), lay)
        Pv = pr.projected()
        p2c, area2, _ = dm._cell_geometry(mesh_, lay.c2_cells)
        pts = dm._quad_points(p2c, dm.VOL_BARY)
        w = dm.VOL_W[None, :] * area2[:, None]
        rx = ex.compile_vectorized(ex.parse(vx))(pts[..., 0], pts[..., 1]) - Pv[:, None, 0]
        ry = ex.compile_vectorized(ex.parse(vy))(pts[..., 0], pts[..., 1]) - Pv[:, None, 1]
        err = math.sqrt(float(np.sum(w * (rx * rx + ry * ry))))
        ortho = abs(float(np.sum(w * (Pv[:, None, 0] * rx + Pv[:, None, 1] * ry))))
        return err, ortho

    errs = []
    mm = m
    for _ in range(3):
        err, ortho = measure(mm, "x", "y")
        errs.append(err)
        orthos.append(ortho)
        mm = gm.refine(mm)
    rate = math.log2(errs[-2] / errs[-1])

    g = pg.build_embedding([(0.0, 0.0), (1.0, 0.0)], [(0, 1)])
    stadium = mb.downscaling_map(g)
    sm = gm.triangulate(stadium, 0.1)
    _, ortho3 = measure(sm, "-y", "x")
    orthos.append(ortho3)

    _report(10, "gradient-space projection (orthogonality and rate)",
            const_err <= 1e-8 and max(orthos) <= 1e-8 and rate >= 0.9,
            f"constant-field error {const_err:.1e}, max <Pv, v-Pv> "
            f"{max(orthos):.1e} (tol 1e-8), gradient-field rate {rate:.2f}")


def test_criterion_11_determinism(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"case": "M0_constant", "refine_levels": 2}))
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert cli_main(["verify", "--config", str(cfg), "--out", str(out_a)]) == 0
    assert cli_main(["verify", "--config", str(cfg), "--out", str(out_b)]) == 0
    same_csv = (out_a / "convergence.csv").read_bytes() == \
        (out_b / "convergence.csv").read_bytes()
    same_json = (out_a / "verify_report.json").read_bytes() == \
        (out_b / "verify_report.json").read_bytes()
    _report(11, "verify outputs byte-identical across runs",
            same_csv and same_json,
            f"csv identical: {same_csv}, json identical: {same_json}")
