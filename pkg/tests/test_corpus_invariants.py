"""Slower corpus-level invariants: map existence beyond the bipartite case."""

import numpy as np
import pytest

from graphdarcy import corpus
from graphdarcy import map_builder as mb
from graphdarcy import mesh as gm
from graphdarcy import plane_graph as pg


@pytest.mark.parametrize("seed,n", [(101, 20), (102, 40), (103, 60)])
def test_delaunay_downscaling_maps_validate(seed, n):
    rng = np.random.default_rng(seed)
    g = corpus.delaunay_graph(rng, n)
    built = mb.downscaling_map(g, require_bipartite=False)
    report = mb.validate_map(built, g)
    assert report.passed, report.summary()
    # region areas tile the domain
    total = sum(r.polygon.area for r in built.regions)
    assert total == pytest.approx(built.domain.area, rel=1e-9)
    # interfaces biject with edges
    assert sorted(s.edge for s in built.interfaces) == sorted(g.edges)


def test_tree_maps_are_downscaling_maps():
    rng = np.random.default_rng(7)
    g = corpus.random_tree(rng, 17)
    built = mb.downscaling_map(g)
    assert mb.validate_map(built, g).passed


def test_cycle_chain_map_meshes_and_balances():
    g = corpus.cycle_chain(2, 4)
    built = mb.downscaling_map(g)
    m = gm.triangulate(built, 0.2)
    # every facet class present and consistent
    assert (m.facet_class == gm.GAMMA).sum() > 0
    assert (m.facet_class == gm.OUTER_D).sum() > 0
    assert (m.facet_class == gm.OUTER_N).sum() > 0
    assert m.cell_areas().sum() == pytest.approx(built.domain.area, rel=1e-9)


@pytest.mark.parametrize("name,graph_fn", [
    ("bridged_grids_2x3", lambda: corpus.bridged_grids(2, 3)),
    ("cycle_chain_2x4", lambda: corpus.cycle_chain(2, 4)),
    ("star_4", lambda: corpus.star_graph(4)),
])
def test_constant_solution_on_general_maps(name, graph_fn):
    from graphdarcy import darcy_mixed as dm
    from graphdarcy import verify as vf
    g = graph_fn()
    built = mb.downscaling_map(g)
    m = gm.triangulate(built, 0.15)
    coeffs = dm.Coefficients.from_strings(f_flux="-1", f_stress="1")
    sol = dm.solve(dm.assemble(m, coeffs))
    assert np.abs(sol.p2 - 1.0).max() <= 1e-9
    assert np.abs(sol.u1).max() <= 1e-9
    assert np.abs(sol.eta).max() <= 1e-9
    res = vf.interface_residuals(sol, coeffs, m)
    assert res["r_flux"] <= 1e-9 and res["r_stress"] <= 1e-9


def test_mesh_quality_equilateral_triangle():
    nodes = np.array([(0.0, 0.0), (1.0, 0.0), (0.5, np.sqrt(3) / 2)])
    cells = np.array([[0, 1, 2]])
    facets = np.array([[1, 2], [0, 2], [0, 1]])
    m = gm.Mesh(nodes=nodes, cells=cells,
                cell_region=np.array([0]), cell_color=np.array([1]),
                facets=facets,
                facet_cells=np.array([[0, -1]] * 3),
                facet_class=np.array([gm.OUTER_D] * 3),
                facet_interface=np.array([-1] * 3),
                facet_normal=np.zeros((3, 2)),
                cell_facets=np.array([[0, 1, 2]]))
    q = gm.mesh_quality(m)
    assert q["min_angle_deg"] == pytest.approx(60.0)
    assert q["max_angle_deg"] == pytest.approx(60.0)
