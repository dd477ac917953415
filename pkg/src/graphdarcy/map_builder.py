"""Polygonal domain maps for plane graphs.

Two constructions: tubular maps (stadium tubes of radius eps around the
embedded edges, split at edge-midpoint chords) and downscaling maps (corner
quads tiling the inner faces of each bridgeless component, tree components as
tubes/disks, components joined by corridors along the bridges).  All boolean
work is done by shapely/GEOS; shared boundaries between neighbouring regions
are produced by complementary clips of one parent polygon so both sides carry
identical coordinates.
"""

from dataclasses import dataclass
import math

import shapely
from shapely.geometry import LineString, MultiLineString, MultiPolygon, Point, Polygon
from shapely.ops import linemerge, unary_union

from . import plane_graph as pg
from .errors import (
    CorridorBlocked,
    DegenerateGeometry,
    EpsilonTooLarge,
    HasBridge,
    NotBipartite,
    TooSmall,
    UnionFailure,
    UnsupportedFace,
    ValidationFailed,
)

ARC_SEGMENTS = 8            # buffer quad_segs: 16 segments per half circle
CORRIDOR_FACTOR = 0.25      # corridor half-width = factor * clearance


@dataclass(frozen=True)
class Region:
    owner: int
    polygon: Polygon
    color: int               # 1 or 2 from the bipartition; 0 when uncolored

    def loop_count(self):
        return 1 + len(self.polygon.interiors)


@dataclass(frozen=True)
class InterfaceSegment:
    id: int
    edge: tuple              # graph edge (u, v), u < v
    left_region: int         # color-1 side (lower vertex id when uncolored)
    right_region: int
    polyline: tuple          # ((x, y), ...) vertex chain
    normals: tuple           # per-subsegment unit normal, left -> right side

    @property
    def length(self):
        return sum(math.dist(self.polyline[i], self.polyline[i + 1])
                   for i in range(len(self.polyline) - 1))


@dataclass(frozen=True)
class DownscalingMap:
    regions: tuple           # Region per vertex, indexed by owner id
    domain: Polygon
    interfaces: tuple        # InterfaceSegment per graph edge
    missing_interfaces: tuple = ()   # edges whose regions share no boundary


@dataclass
class ValidationReport:
    tol: float
    conditions: dict         # name -> {"passed": bool, ...measurements}

    @property
    def passed(self):
        return all(entry["passed"] for entry in self.conditions.values())

    def failing(self):
        return [name for name, entry in self.conditions.items() if not entry["passed"]]

    def summary(self):
        if self.passed:
            return "all six conditions pass"
        return "failed: " + ", ".join(self.failing())

    def to_json(self):
        return {"tol": self.tol, "passed": self.passed, "conditions": self.conditions}


# --- epsilon and primitive shapes ------------------------------------------

def auto_epsilon(g: pg.PlaneGraph):
    """Quarter of the tightest vertex/vertex or vertex/edge clearance."""
    if g.edge_count < 1:
        raise DegenerateGeometry("auto_epsilon needs at least one edge")
    pts = g.vertices
    best = math.inf
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            best = min(best, math.dist(pts[i], pts[j]))
    for u, v in g.edges:
        seg = LineString([pts[u], pts[v]])
        for w in range(len(pts)):
            if w in (u, v):
                continue
            best = min(best, seg.distance(Point(pts[w])))
    if best < 1e-9 * g.bbox_diagonal():
        raise DegenerateGeometry(
            f"minimum feature size {best:.3e} below 1e-9 of the bounding box")
    return 0.25 * best


def _split_rectangles(pa, pb, width):
    """Two axis rectangles sharing the chord through the midpoint of ab.

    Returns (rect_toward_a, rect_toward_b); the shared edge coordinates are
    identical in both so complementary clips agree exactly.
    """
    ax, ay = pa
    bx, by = pb
    length = math.dist(pa, pb)
    dx, dy = (bx - ax) / length, (by - ay) / length
    nx, ny = -dy, dx
    mx, my = 0.5 * (ax + bx), 0.5 * (ay + by)
    w = width
    reach = 0.5 * length + 4.0 * width
    c0 = (mx + nx * w, my + ny * w)
    c1 = (mx - nx * w, my - ny * w)
    rect_a = Polygon([c0, c1,
                      (c1[0] - dx * reach, c1[1] - dy * reach),
                      (c0[0] - dx * reach, c0[1] - dy * reach)])
    rect_b = Polygon([c0, c1,
                      (c1[0] + dx * reach, c1[1] + dy * reach),
                      (c0[0] + dx * reach, c0[1] + dy * reach)])
    return rect_a, rect_b


def _as_single_polygon(geom, what):
    if isinstance(geom, Polygon) and not geom.is_empty:
        return geom
    if isinstance(geom, MultiPolygon):
        parts = [p for p in geom.geoms if p.area > 0.0]
        if len(parts) == 1:
            return parts[0]
    raise UnionFailure(f"{what} did not produce a single polygon: {geom.geom_type}")


def tubular_map(g: pg.PlaneGraph, eps):
    """Starred regions: per-vertex unions of half-tubes of radius eps."""
    limit = auto_epsilon(g)
    if eps > limit * (1.0 + 1e-12):
        raise EpsilonTooLarge(f"eps={eps} exceeds auto_epsilon={limit}")
    colors = pg.bipartition(g) or {}
    halves = {v: [] for v in range(g.vertex_count)}
    for u, v in g.edges:
        pu, pv = g.vertices[u], g.vertices[v]
        stadium = LineString([pu, pv]).buffer(eps, quad_segs=ARC_SEGMENTS)
        rect_u, _ = _split_rectangles(pu, pv, 2.0 * eps)
        half_u = stadium.intersection(rect_u)
        half_v = stadium.difference(rect_u)
        halves[u].append(_as_single_polygon(half_u, f"half tube ({u},{v})"))
        halves[v].append(_as_single_polygon(half_v, f"half tube ({v},{u})"))
    regions = []
    for v in range(g.vertex_count):
        merged = unary_union(halves[v])
        poly = _as_single_polygon(merged, f"starred region of vertex {v}")
        regions.append(Region(v, poly, colors.get(v, 0)))
    return regions


# --- barycentric corner quads ----------------------------------------------

def _halfplane_clip(poly, pa, pb, reach):
    """Clip poly to the left side of the directed line a->b."""
    ax, ay = pa
    bx, by = pb
    length = math.dist(pa, pb)
    dx, dy = (bx - ax) / length, (by - ay) / length
    nx, ny = -dy, dx
    quad = Polygon([
        (ax - dx * reach, ay - dy * reach),
        (bx + dx * reach, by + dy * reach),
        (bx + dx * reach + nx * reach, by + dy * reach + ny * reach),
        (ax - dx * reach + nx * reach, ay - dy * reach + ny * reach),
    ])
    return poly.intersection(quad)


def _face_fan_point(cycle_points, reach):
    """Centroid for convex faces, else a kernel point; None if non-star."""
    poly = Polygon(cycle_points)
    m = len(cycle_points)
    convex = True
    for i in range(m):
        a = cycle_points[i]
        b = cycle_points[(i + 1) % m]
        c = cycle_points[(i + 2) % m]
        if pg.orient(a, b, c) < 0:
            convex = False
            break
    if convex:
        c = poly.centroid
        return (c.x, c.y)
    kernel = poly
    for i in range(m):
        kernel = _halfplane_clip(kernel, cycle_points[i], cycle_points[(i + 1) % m], reach)
        if kernel.is_empty:
            return None
    if kernel.is_empty or kernel.area <= 0.0:
        return None
    p = kernel.representative_point()
    return (p.x, p.y)


def barycentric_regions(g: pg.PlaneGraph, component):
    """Corner-quad regions tiling the closed inner faces of one component.

    The component must induce a 2-connected subgraph (single vertices are
    mapped to disks).  Adjacent vertices share the two midpoint-to-fan-point
    segments of their common edge; non-adjacent ones share at most points.
    """
    component = sorted(component)
    if len(component) == 1:
        v = component[0]
        radius = auto_epsilon(g) if g.edge_count else 1.0
        disk = Point(g.vertices[v]).buffer(radius, quad_segs=ARC_SEGMENTS)
        return [Region(v, disk, 0)]
    if len(component) < 3:
        raise TooSmall("a cyclic component needs at least 3 vertices")

    sub, old_ids = pg.induced_subgraph(g, component)
    if pg.bridges(sub):
        raise HasBridge(f"component {component} contains internal bridges")
    if pg.articulation_points(sub):
        raise UnsupportedFace(
            f"component {component} has a cut vertex; corner quads would pinch")

    reach = 3.0 * max(sub.bbox_diagonal(), 1.0)
    midpoints = {}
    for u, v in sub.edges:
        (x0, y0), (x1, y1) = sub.vertices[u], sub.vertices[v]
        midpoints[(u, v)] = (0.5 * (x0 + x1), 0.5 * (y0 + y1))

    quads = {v: [] for v in range(sub.vertex_count)}
    for face in pg.faces(sub):
        if face.is_outer:
            continue
        cycle = [u for u, _ in face.boundary]
        points = [sub.vertices[u] for u in cycle]
        fan = _face_fan_point(points, reach)
        if fan is None:
            raise UnsupportedFace(
                f"inner face {cycle} is not star-shaped; no fan point exists")
        m = len(cycle)
        for k, v in enumerate(cycle):
            nxt = cycle[(k + 1) % m]
            prv = cycle[(k - 1) % m]
            m_next = midpoints[(min(v, nxt), max(v, nxt))]
            m_prev = midpoints[(min(v, prv), max(v, prv))]
            quads[v].append(Polygon([sub.vertices[v], m_next, fan, m_prev]))

    regions = []
    for v in range(sub.vertex_count):
        merged = unary_union(quads[v])
        poly = _as_single_polygon(merged, f"corner-quad region of vertex {old_ids[v]}")
        regions.append(Region(old_ids[v], poly, 0))
    return regions


# --- downscaling map ---------------------------------------------------------

def _is_tree(g):
    return g.edge_count == g.vertex_count - 1


def downscaling_map(g: pg.PlaneGraph, require_bipartite=True, tol=None):
    """Per-vertex partition of a polygonal domain mirroring graph adjacency."""
    colors = pg.bipartition(g)
    if colors is None:
        if require_bipartite:
            raise NotBipartite("graph has an odd cycle")
        colors = {v: 0 for v in range(g.vertex_count)}

    if g.vertex_count == 1:
        disk = Point(g.vertices[0]).buffer(1.0, quad_segs=ARC_SEGMENTS)
        regions = [Region(0, disk, colors[0])]
        return _finalize(g, regions, tol)

    if _is_tree(g):
        base = tubular_map(g, auto_epsilon(g))
        regions = [Region(r.owner, r.polygon, colors[r.owner]) for r in base]
        return _finalize(g, regions, tol)

    tree = pg.bridge_component_tree(g)
    region_of = {}
    for comp in tree.components:
        for r in barycentric_regions(g, comp):
            region_of[r.owner] = r.polygon

    for ci, cj, (u, v) in tree.tree_edges:
        pu, pv = g.vertices[u], g.vertices[v]
        seg = LineString([pu, pv])
        clearance = math.inf
        for w, poly in sorted(region_of.items()):
            if w in (u, v):
                continue
            clearance = min(clearance, seg.distance(poly))
        if clearance <= 0.0:
            raise CorridorBlocked(f"bridge ({u},{v}) touches a foreign region")
        eps_c = CORRIDOR_FACTOR * min(clearance, math.dist(pu, pv))
        tube = seg.buffer(eps_c, quad_segs=ARC_SEGMENTS)
        others = [poly for w, poly in sorted(region_of.items()) if w not in (u, v)]
        if others:
            tube = tube.difference(unary_union(others))
        mid = Point(0.5 * (pu[0] + pv[0]), 0.5 * (pu[1] + pv[1]))
        pieces = list(tube.geoms) if isinstance(tube, MultiPolygon) else [tube]
        tube = next((p for p in pieces if p.covers(mid)), None)
        if tube is None:
            raise CorridorBlocked(f"no corridor through the midpoint of ({u},{v})")
        rect_u, _ = _split_rectangles(pu, pv, 2.0 * eps_c)
        piece_u = tube.intersection(rect_u)
        piece_v = tube.difference(rect_u)
        try:
            region_of[u] = _as_single_polygon(
                unary_union([region_of[u], piece_u]), f"region {u} with corridor")
            region_of[v] = _as_single_polygon(
                unary_union([region_of[v], piece_v]), f"region {v} with corridor")
        except UnionFailure as exc:
            raise CorridorBlocked(str(exc)) from exc

    regions = [Region(v, region_of[v], colors[v]) for v in range(g.vertex_count)]
    return _finalize(g, regions, tol)


def _finalize(g, regions, tol):
    built = assemble_map(g, regions)
    report = validate_map(built, g, tol)
    if not report.passed:
        raise ValidationFailed(report)
    return built


# --- domain, interfaces, validation ----------------------------------------

def _region_tol(regions):
    union_bounds = None
    for r in regions:
        b = r.polygon.bounds
        if union_bounds is None:
            union_bounds = list(b)
        else:
            union_bounds = [min(union_bounds[0], b[0]), min(union_bounds[1], b[1]),
                            max(union_bounds[2], b[2]), max(union_bounds[3], b[3])]
    diag = math.hypot(union_bounds[2] - union_bounds[0], union_bounds[3] - union_bounds[1])
    return 1e-9 * diag


def _shared_boundary(pa: Polygon, pb: Polygon):
    inter = pa.boundary.intersection(pb.boundary)
    lines = []
    if isinstance(inter, LineString):
        lines = [inter]
    elif isinstance(inter, MultiLineString):
        lines = list(inter.geoms)
    elif hasattr(inter, "geoms"):
        lines = [geom for geom in inter.geoms if isinstance(geom, LineString)]
    lines = [ln for ln in lines if ln.length > 0.0]
    return lines


def _interface_normals(polyline, left_poly, right_poly):
    """Unit normals per subsegment oriented from the left to the right region."""
    normals = []
    for i in range(len(polyline) - 1):
        (x0, y0), (x1, y1) = polyline[i], polyline[i + 1]
        seg_len = math.hypot(x1 - x0, y1 - y0)
        nx, ny = (y1 - y0) / seg_len, -(x1 - x0) / seg_len
        mx, my = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        delta = 1e-3 * seg_len
        sign = 0.0
        for _ in range(10):
            plus_in_right = right_poly.covers(Point(mx + nx * delta, my + ny * delta))
            minus_in_right = right_poly.covers(Point(mx - nx * delta, my - ny * delta))
            plus_in_left = left_poly.covers(Point(mx + nx * delta, my + ny * delta))
            if plus_in_right and not minus_in_right:
                sign = 1.0
                break
            if minus_in_right and not plus_in_right:
                sign = -1.0
                break
            if plus_in_left and not plus_in_right:
                sign = -1.0
                break
            delta *= 0.1
        if sign == 0.0:
            raise UnionFailure("cannot orient an interface normal")
        normals.append((sign * nx, sign * ny))
    return normals


def assemble_map(g: pg.PlaneGraph, regions, tol=None):
    """Compute the domain polygon and per-edge interfaces from the regions."""
    regions = tuple(sorted(regions, key=lambda r: r.owner))
    if [r.owner for r in regions] != list(range(g.vertex_count)):
        raise UnionFailure("regions do not cover the vertex set exactly once")
    if tol is None:
        tol = _region_tol(regions)
    union = unary_union([r.polygon for r in regions])
    if isinstance(union, MultiPolygon):
        domain = max(union.geoms, key=lambda p: p.area)  # validation will fail (iv)
    else:
        domain = union

    interfaces = []
    for u, v in g.edges:
        lines = _shared_boundary(regions[u].polygon, regions[v].polygon)
        lines = [ln for ln in lines if ln.length > tol]
        if not lines:
            interfaces.append(None)  # validation reports the missing interface
            continue
        merged = linemerge(MultiLineString(lines)) if len(lines) > 1 else lines[0]
        if isinstance(merged, MultiLineString):
            merged = max(merged.geoms, key=lambda ln: ln.length)
        polyline = tuple((x, y) for x, y in merged.coords)
        if regions[u].color == 2 and regions[v].color == 1:
            left, right = v, u
        elif regions[u].color == regions[v].color and regions[u].color != 0:
            raise UnionFailure(f"edge ({u},{v}) joins two color-{regions[u].color} regions")
        else:
            left, right = u, v
        normals = _interface_normals(polyline, regions[left].polygon, regions[right].polygon)
        interfaces.append(InterfaceSegment(
            id=len([i for i in interfaces if i is not None]),
            edge=(u, v), left_region=left, right_region=right,
            polyline=polyline, normals=tuple(normals)))
    missing = tuple(g.edges[k] for k, i in enumerate(interfaces) if i is None)
    interfaces = tuple(i for i in interfaces if i is not None)
    return DownscalingMap(regions, domain, interfaces, missing)


def validate_map(built: DownscalingMap, g: pg.PlaneGraph, tol=None):
    """Check the six defining conditions of a downscaling map numerically."""
    regions = built.regions
    if len(regions) != g.vertex_count:
        raise TooSmall("region count differs from vertex count")
    if tol is None:
        tol = _region_tol(regions)

    conditions = {}

    # (i) each owner vertex lies in (the closure of) its region
    offenders = []
    for r in regions:
        d = r.polygon.distance(Point(g.vertices[r.owner]))
        if d > tol:
            offenders.append({"vertex": r.owner, "distance": d})
    conditions["i_owner_containment"] = {"passed": not offenders, "offenders": offenders}

    # (ii) pairwise interior disjointness
    overlaps = []
    tree = shapely.STRtree([r.polygon for r in regions])
    for a in range(len(regions)):
        for b in tree.query(regions[a].polygon):
            b = int(b)
            if b <= a:
                continue
            inter = regions[a].polygon.intersection(regions[b].polygon)
            if inter.area >= tol * tol:
                overlaps.append({"pair": (a, b), "area": inter.area})
    conditions["ii_interior_disjoint"] = {"passed": not overlaps, "overlaps": overlaps}

    # (iii) one boundary loop per region
    multi_loop = [{"vertex": r.owner, "loops": r.loop_count()}
                  for r in regions if r.loop_count() != 1]
    conditions["iii_regions_simply_connected"] = {
        "passed": not multi_loop, "offenders": multi_loop}

    # (iv) the domain is simply connected
    union = unary_union([r.polygon for r in regions])
    n_parts = len(union.geoms) if isinstance(union, MultiPolygon) else 1
    n_holes = (sum(len(p.interiors) for p in union.geoms)
               if isinstance(union, MultiPolygon) else len(union.interiors))
    euler = n_parts - n_holes
    conditions["iv_domain_simply_connected"] = {
        "passed": n_parts == 1 and n_holes == 0,
        "components": n_parts, "holes": n_holes, "euler_characteristic": euler}

    # (v) shared boundary length > tol iff graph edge
    mismatches = []
    min_edge_shared = math.inf
    boundary_tree = shapely.STRtree([r.polygon.boundary for r in regions])
    shared_len = {}
    for a in range(len(regions)):
        for b in boundary_tree.query(regions[a].polygon.boundary):
            b = int(b)
            if b <= a:
                continue
            lines = _shared_boundary(regions[a].polygon, regions[b].polygon)
            shared_len[(a, b)] = sum(ln.length for ln in lines)
    for a in range(len(regions)):
        for b in range(a + 1, len(regions)):
            length = shared_len.get((a, b), 0.0)
            is_edge = g.has_edge(a, b)
            if is_edge:
                min_edge_shared = min(min_edge_shared, length)
            if is_edge and length <= tol:
                mismatches.append({"pair": (a, b), "shared_length": length,
                                   "expected": "edge"})
            if not is_edge and length > tol:
                mismatches.append({"pair": (a, b), "shared_length": length,
                                   "expected": "no edge"})
    conditions["v_shared_boundary_iff_edge"] = {
        "passed": not mismatches, "mismatches": mismatches,
        "min_shared_length_over_edges": (None if min_edge_shared is math.inf
                                         else min_edge_shared)}

    # (vi) outer vertices reach the domain boundary
    outer_face = next(f for f in pg.faces(g) if f.is_outer)
    outer_vertices = sorted({u for u, _ in outer_face.boundary}) or list(range(g.vertex_count))
    coast_offenders = []
    domain_boundary = built.domain.boundary
    for v in outer_vertices:
        lines = [ln for ln in _shared_boundary_lines(regions[v].polygon.boundary,
                                                     domain_boundary)]
        length = sum(ln.length for ln in lines)
        if length <= tol:
            coast_offenders.append({"vertex": v, "coast_length": length})
    conditions["vi_outer_vertices_on_coast"] = {
        "passed": not coast_offenders, "offenders": coast_offenders,
        "outer_vertices": outer_vertices}

    if built.missing_interfaces:
        conditions["v_shared_boundary_iff_edge"]["passed"] = False
        conditions["v_shared_boundary_iff_edge"]["missing_interfaces"] = \
            list(built.missing_interfaces)

    return ValidationReport(tol=tol, conditions=conditions)


def _shared_boundary_lines(boundary_a, boundary_b):
    inter = boundary_a.intersection(boundary_b)
    if isinstance(inter, LineString):
        return [inter] if inter.length > 0 else []
    if isinstance(inter, MultiLineString):
        return [ln for ln in inter.geoms if ln.length > 0]
    if hasattr(inter, "geoms"):
        return [geom for geom in inter.geoms
                if isinstance(geom, LineString) and geom.length > 0]
    return []


# --- serialization -----------------------------------------------------------

def _ring_coords(poly: Polygon):
    ext = [(x, y) for x, y in shapely.geometry.polygon.orient(poly).exterior.coords]
    return ext


def map_to_json(built: DownscalingMap):
    return {
        "regions": [
            {"owner": r.owner, "color": r.color, "polygon": _ring_coords(r.polygon)}
            for r in built.regions
        ],
        "domain": _ring_coords(built.domain),
        "interfaces": [
            {"id": s.id, "edge": list(s.edge), "left_region": s.left_region,
             "right_region": s.right_region,
             "polyline": [list(p) for p in s.polyline],
             "normals": [list(n) for n in s.normals]}
            for s in built.interfaces
        ],
    }


def map_from_json(data):
    regions = tuple(Region(r["owner"], Polygon(r["polygon"]), r["color"])
                    for r in data["regions"])
    interfaces = tuple(
        InterfaceSegment(s["id"], tuple(s["edge"]), s["left_region"], s["right_region"],
                         tuple(tuple(p) for p in s["polyline"]),
                         tuple(tuple(n) for n in s["normals"]))
        for s in data["interfaces"])
    return DownscalingMap(regions, Polygon(data["domain"]), interfaces)


_SVG_FILL = {0: "#cccccc", 1: "#9ecae1", 2: "#a1d99b"}


def map_to_svg(built: DownscalingMap, g: pg.PlaneGraph = None):
    """Deterministic standalone SVG: filled regions, stroked interfaces, dots."""
    minx, miny, maxx, maxy = built.domain.bounds
    pad = 0.05 * max(maxx - minx, maxy - miny, 1e-9)
    view = (minx - pad, miny - pad, (maxx - minx) + 2 * pad, (maxy - miny) + 2 * pad)
    scale = 600.0 / max(view[2], view[3])

    def pt(x, y):
        return f"{(x - view[0]) * scale:.3f},{(view[1] + view[3] - y) * scale:.3f}"

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{view[2]*scale:.0f}" '
        f'height="{view[3]*scale:.0f}">'
    ]
    for r in built.regions:
        coords = " ".join(pt(x, y) for x, y in r.polygon.exterior.coords)
        lines.append(f'<polygon points="{coords}" fill="{_SVG_FILL.get(r.color, "#cccccc")}" '
                     f'stroke="#555555" stroke-width="1"/>')
        for hole in r.polygon.interiors:
            coords = " ".join(pt(x, y) for x, y in hole.coords)
            lines.append(f'<polygon points="{coords}" fill="#ffffff" stroke="#555555" '
                         f'stroke-width="1"/>')
    for s in built.interfaces:
        coords = " ".join(pt(x, y) for x, y in s.polyline)
        lines.append(f'<polyline points="{coords}" fill="none" stroke="#d62728" '
                     f'stroke-width="2"/>')
    if g is not None:
        for v, (x, y) in enumerate(g.vertices):
            cx, cy = pt(x, y).split(",")
            lines.append(f'<circle cx="{cx}" cy="{cy}" r="3" fill="#000000"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
