import math

import pytest
from shapely.geometry import Point

from graphdarcy import map_builder as mb
from graphdarcy import plane_graph as pg
from graphdarcy.errors import (
    DegenerateGeometry,
    EpsilonTooLarge,
    HasBridge,
    NotBipartite,
    UnsupportedFace,
    ValidationFailed,
)

P2 = ([(0.0, 0.0), (1.0, 0.0)], [(0, 1)])
P3 = ([(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)], [(0, 1), (1, 2)])
TRIANGLE = ([(0.0, 0.0), (1.0, 0.0), (0.5, math.sqrt(3) / 2)],
            [(0, 1), (1, 2), (2, 0)])
SQUARE = ([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)],
          [(0, 1), (1, 2), (2, 3), (3, 0)])
STAR3 = ([(0.0, 0.0), (2.0, 0.0), (-1.0, 1.7), (-1.0, -1.7)],
         [(0, 1), (0, 2), (0, 3)])


def square_pair_with_bridge():
    verts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0),
             (3.0, 0.0), (4.0, 0.0), (4.0, 1.0), (3.0, 1.0)]
    edges = [(0, 1), (1, 2), (2, 3), (3, 0),
             (4, 5), (5, 6), (6, 7), (7, 4), (1, 4)]
    return pg.build_embedding(verts, edges)


def test_auto_epsilon_examples():
    assert mb.auto_epsilon(pg.build_embedding(*P2)) == pytest.approx(0.25)
    assert mb.auto_epsilon(pg.build_embedding(*SQUARE)) == pytest.approx(0.25)
    with pytest.raises(DegenerateGeometry):
        mb.auto_epsilon(pg.build_embedding(
            [(0.0, 0.0), (1e-12, 0.0), (1.0, 0.0)], [(0, 1), (1, 2)]))


def test_tubular_map_p2_half_stadiums():
    g = pg.build_embedding(*P2)
    regions = mb.tubular_map(g, 0.25)
    assert len(regions) == 2
    # mirror halves split at x = 0.5
    assert regions[0].polygon.area == pytest.approx(regions[1].polygon.area, rel=1e-12)
    half_stadium = 0.5 * 0.25 * 2 + 0.0  # rectangle part: length 0.5, width 0.5
    # area = half rectangle (0.5 x 0.5) + half disc of radius 0.25 (polygonal, slightly less)
    expected = 0.5 * 0.5 + 0.5 * math.pi * 0.25 ** 2
    assert regions[0].polygon.area == pytest.approx(expected, rel=5e-3)
    assert regions[0].polygon.covers(Point(0.0, 0.0))
    assert regions[1].polygon.covers(Point(1.0, 0.0))
    assert regions[0].polygon.bounds[2] == pytest.approx(0.5)  # clipped at the chord
    shared = mb._shared_boundary(regions[0].polygon, regions[1].polygon)
    assert sum(ln.length for ln in shared) == pytest.approx(0.5, rel=1e-9)


def test_tubular_map_star_center_single_loop():
    g = pg.build_embedding(*STAR3)
    eps = mb.auto_epsilon(g)
    regions = mb.tubular_map(g, eps)
    center = regions[0]
    assert center.loop_count() == 1
    assert center.polygon.covers(Point(0.0, 0.0))
    # center region is the union of the three inner half tubes
    assert center.polygon.area == pytest.approx(
        sum(r.polygon.area for r in regions) - sum(
            r.polygon.area for r in regions[1:]), rel=1e-12)


def test_tubular_map_epsilon_cap():
    g = pg.build_embedding(*P2)
    with pytest.raises(EpsilonTooLarge):
        mb.tubular_map(g, 0.3)


def test_tubular_k3_fails_only_global_simple_connectedness():
    g = pg.build_embedding(*TRIANGLE)
    regions = mb.tubular_map(g, 0.5 * mb.auto_epsilon(g))
    built = mb.assemble_map(g, regions)
    report = mb.validate_map(built, g)
    assert not report.passed
    assert report.failing() == ["iv_domain_simply_connected"]
    assert report.conditions["iv_domain_simply_connected"]["holes"] == 1


def test_barycentric_regions_triangle():
    g = pg.build_embedding(*TRIANGLE)
    regions = mb.barycentric_regions(g, {0, 1, 2})
    assert len(regions) == 3
    areas = [r.polygon.area for r in regions]
    tri_area = math.sqrt(3) / 4
    assert sum(areas) == pytest.approx(tri_area, rel=1e-12)
    assert areas[0] == pytest.approx(areas[1], rel=1e-9)
    for a in range(3):
        for b in range(a + 1, 3):
            shared = mb._shared_boundary(regions[a].polygon, regions[b].polygon)
            assert sum(ln.length for ln in shared) > 1e-3


def test_barycentric_regions_square_diagonals_share_a_point_only():
    g = pg.build_embedding(*SQUARE)
    regions = mb.barycentric_regions(g, {0, 1, 2, 3})
    for r in regions:
        assert r.polygon.area == pytest.approx(0.25, rel=1e-12)
    for a, b in [(0, 2), (1, 3)]:
        shared = mb._shared_boundary(regions[a].polygon, regions[b].polygon)
        assert sum(ln.length for ln in shared) == 0.0
        assert regions[a].polygon.intersection(regions[b].polygon).area == 0.0


def test_barycentric_single_vertex_is_disk():
    g = pg.build_embedding(*P2)
    (region,) = mb.barycentric_regions(g, {1})
    assert region.owner == 1
    eps = mb.auto_epsilon(g)
    assert region.polygon.area == pytest.approx(math.pi * eps * eps, rel=1e-2)


def test_barycentric_rejects_bridges():
    g = pg.build_embedding(*P3)
    with pytest.raises(HasBridge):
        mb.barycentric_regions(g, {0, 1, 2})


def test_barycentric_rejects_bowtie():
    verts = [(0.0, 0.0), (2.0, 1.0), (2.0, -1.0), (-2.0, 1.0), (-2.0, -1.0)]
    edges = [(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)]
    g = pg.build_embedding(verts, edges)
    with pytest.raises(UnsupportedFace):
        mb.barycentric_regions(g, {0, 1, 2, 3, 4})


def test_downscaling_map_path_is_tubular():
    g = pg.build_embedding(*P3)
    built = mb.downscaling_map(g)
    assert len(built.regions) == 3
    assert len(built.interfaces) == 2
    report = mb.validate_map(built, g)
    assert report.passed
    # chords at x = 0.5 and x = 1.5
    xs = sorted(0.5 * (s.polyline[0][0] + s.polyline[-1][0]) for s in built.interfaces)
    assert xs == pytest.approx([0.5, 1.5])


def test_downscaling_map_square():
    g = pg.build_embedding(*SQUARE)
    built = mb.downscaling_map(g)
    assert len(built.regions) == 4
    assert len(built.interfaces) == 4
    assert mb.validate_map(built, g).passed
    assert {r.color for r in built.regions} == {1, 2}
    for s in built.interfaces:
        assert built.regions[s.left_region].color == 1
        assert built.regions[s.right_region].color == 2


def test_downscaling_map_two_squares_with_bridge():
    g = square_pair_with_bridge()
    built = mb.downscaling_map(g)
    assert len(built.regions) == 8
    assert len(built.interfaces) == 9
    report = mb.validate_map(built, g)
    assert report.passed, report.summary()
    # bridge endpoints became interior to their regions via the corridor
    assert built.regions[1].polygon.contains(Point(1.0, 0.0))
    assert built.regions[4].polygon.contains(Point(3.0, 0.0))


def test_downscaling_map_triangle_requires_bipartite_flag():
    g = pg.build_embedding(*TRIANGLE)
    with pytest.raises(NotBipartite):
        mb.downscaling_map(g)
    built = mb.downscaling_map(g, require_bipartite=False)
    assert mb.validate_map(built, g).passed
    assert all(r.color == 0 for r in built.regions)


def test_region_areas_sum_to_domain_area():
    for graph in [pg.build_embedding(*P3), pg.build_embedding(*SQUARE),
                  square_pair_with_bridge()]:
        built = mb.downscaling_map(graph, require_bipartite=False)
        total = sum(r.polygon.area for r in built.regions)
        assert total == pytest.approx(built.domain.area, rel=1e-9)


def test_interfaces_bijective_with_edges():
    g = square_pair_with_bridge()
    built = mb.downscaling_map(g)
    assert sorted(s.edge for s in built.interfaces) == sorted(g.edges)
    assert len({s.id for s in built.interfaces}) == len(built.interfaces)


def test_validate_detects_swapped_owners():
    g = pg.build_embedding(*P3)
    built = mb.downscaling_map(g)
    swapped = [mb.Region(0, built.regions[2].polygon, built.regions[0].color),
               built.regions[1],
               mb.Region(2, built.regions[0].polygon, built.regions[2].color)]
    bad = mb.assemble_map(g, swapped)
    report = mb.validate_map(bad, g)
    assert not report.passed
    assert "i_owner_containment" in report.failing()


def test_validation_failed_carries_report():
    verts = [(0.0, 0.0), (1.0, 0.0), (0.5, 0.9), (0.5, 0.31)]
    edges = [(0, 1), (1, 2), (2, 0), (0, 3), (1, 3), (2, 3)]
    g = pg.build_embedding(verts, edges)  # planar K4, not bipartite
    with pytest.raises(NotBipartite):
        mb.downscaling_map(g)
    built = mb.downscaling_map(g, require_bipartite=False)
    assert mb.validate_map(built, g).passed


def test_interface_normals_point_left_to_right():
    g = pg.build_embedding(*P3)
    built = mb.downscaling_map(g)
    for s in built.interfaces:
        left_poly = built.regions[s.left_region].polygon
        right_poly = built.regions[s.right_region].polygon
        for i, n in enumerate(s.normals):
            (x0, y0), (x1, y1) = s.polyline[i], s.polyline[i + 1]
            mx, my = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
            assert abs(math.hypot(*n) - 1.0) < 1e-12
            step = 1e-6
            assert right_poly.covers(Point(mx + n[0] * step, my + n[1] * step))
            assert left_poly.covers(Point(mx - n[0] * step, my - n[1] * step))


def test_map_json_round_trip():
    g = pg.build_embedding(*SQUARE)
    built = mb.downscaling_map(g)
    data = mb.map_to_json(built)
    again = mb.map_from_json(data)
    assert len(again.regions) == len(built.regions)
    for a, b in zip(again.regions, built.regions):
        assert a.owner == b.owner and a.color == b.color
        assert a.polygon.area == pytest.approx(b.polygon.area, rel=1e-12)
    assert mb.map_to_json(again) == data


def test_interior_bridge_is_not_an_outer_bridge_and_blocks_corner_quads():
    # pendant vertex drawn inside the triangle: its bridge borders an inner
    # face, so removing outer bridges leaves one component with a bridge
    verts = [(0.0, 0.0), (4.0, 0.0), (2.0, 3.0), (2.0, 1.0)]
    edges = [(0, 1), (1, 2), (2, 0), (0, 3)]
    g = pg.build_embedding(verts, edges)
    assert pg.bridges(g) == {(0, 3)}
    assert pg.outer_bridges(g) == set()
    tree = pg.bridge_component_tree(g)
    assert len(tree.components) == 1
    with pytest.raises(HasBridge):
        mb.downscaling_map(g, require_bipartite=False)


def test_validate_reports_missing_interfaces():
    from shapely.geometry import Polygon
    g = pg.build_embedding(*P2)
    apart = [mb.Region(0, Polygon([(0, 0), (0.4, 0), (0.4, 1), (0, 1)]), 1),
             mb.Region(1, Polygon([(0.6, 0), (1, 0), (1, 1), (0.6, 1)]), 2)]
    built = mb.assemble_map(g, apart)
    report = mb.validate_map(built, g)
    assert not report.passed
    assert "v_shared_boundary_iff_edge" in report.failing()
    # the gap also disconnects the domain
    assert "iv_domain_simply_connected" in report.failing()


def test_single_vertex_graph_map():
    g = pg.build_embedding([(0.0, 0.0)], [])
    built = mb.downscaling_map(g)
    assert len(built.regions) == 1
    assert built.interfaces == ()
    assert mb.validate_map(built, g).passed


def test_svg_export_is_deterministic():
    g = pg.build_embedding(*SQUARE)
    built = mb.downscaling_map(g)
    svg1 = mb.map_to_svg(built, g)
    svg2 = mb.map_to_svg(built, g)
    assert svg1 == svg2
    assert svg1.startswith("<svg") and "polygon" in svg1 and "polyline" in svg1
