"""Conforming triangulation of a downscaling map, with tags and refinement.

The triangulator inserts every map boundary polyline as constraint segments
(split to h_target), seeds the region interiors with a hexagonal lattice and
runs scipy's Delaunay repeatedly, inserting midpoints of constraint segments
that did not come out as mesh edges until all of them do (conforming
Delaunay by segment splitting).  Interfaces and the outer boundary are then
exactly unions of facets, so no cell straddles a region boundary.
"""

from dataclasses import dataclass
import math

import numpy as np
import shapely
from shapely.geometry import LineString, Point
from scipy.spatial import Delaunay, cKDTree

from .errors import InputError, QualityFailure, UnionFailure

INTERIOR = 0
GAMMA = 1
OUTER_D = 2
OUTER_N = 3

FACET_CLASS_NAMES = {INTERIOR: "interior", GAMMA: "gamma",
                     OUTER_D: "outer_dirichlet", OUTER_N: "outer_noflux"}


@dataclass
class Mesh:
    nodes: np.ndarray          # (N, 2)
    cells: np.ndarray          # (M, 3) node ids, counterclockwise
    cell_region: np.ndarray    # (M,)
    cell_color: np.ndarray     # (M,)
    facets: np.ndarray         # (F, 2) sorted node pairs
    facet_cells: np.ndarray    # (F, 2) incident cells, -1 for boundary slot
    facet_class: np.ndarray    # (F,)
    facet_interface: np.ndarray  # (F,) interface id for GAMMA facets, else -1
    facet_normal: np.ndarray   # (F, 2) unit normal; GAMMA: color-1 -> color-2
    cell_facets: np.ndarray    # (M, 3) facet opposite each local vertex

    def __post_init__(self):
        for arr in (self.nodes, self.cells, self.cell_region, self.cell_color,
                    self.facets, self.facet_cells, self.facet_class,
                    self.facet_interface, self.facet_normal, self.cell_facets):
            arr.setflags(write=False)

    @property
    def cell_count(self):
        return len(self.cells)

    @property
    def node_count(self):
        return len(self.nodes)

    @property
    def facet_count(self):
        return len(self.facets)

    def cell_areas(self):
        p = self.nodes[self.cells]
        return 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                      - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))

    def facet_lengths(self):
        p = self.nodes[self.facets]
        return np.hypot(p[:, 1, 0] - p[:, 0, 0], p[:, 1, 1] - p[:, 0, 1])

    def cell_centroids(self):
        return self.nodes[self.cells].mean(axis=1)

    def min_angle_deg(self):
        return float(np.min(_all_angles_deg(self.nodes, self.cells)))


def _all_angles_deg(nodes, cells):
    p = nodes[cells]
    angles = np.empty((len(cells), 3))
    for k in range(3):
        a = p[:, k]
        b = p[:, (k + 1) % 3]
        c = p[:, (k + 2) % 3]
        u = b - a
        v = c - a
        cosang = (u * v).sum(axis=1) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
        angles[:, k] = np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))
    return angles


# --- constraint preparation --------------------------------------------------

def _dedupe_points(points, tol):
    """Snap points closer than tol together; returns (unique pts, index map)."""
    pts = np.asarray(points, dtype=float)
    tree = cKDTree(pts)
    pairs = tree.query_pairs(tol, output_type="ndarray")
    parent = np.arange(len(pts))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(i) for i in range(len(pts))])
    unique_roots, index_map = np.unique(roots, return_inverse=True)
    return pts[unique_roots], index_map


def _node_pslg(points, segments, tol):
    """Split constraint segments at nodes lying on their interior."""
    tree = cKDTree(points)
    out = []
    for a, b in segments:
        pa, pb = points[a], points[b]
        length = math.dist(pa, pb)
        if length <= tol:
            continue
        mid = 0.5 * (pa + pb)
        candidates = tree.query_ball_point(mid, 0.5 * length + tol)
        d = pb - pa
        hits = []
        for idx in candidates:
            if idx in (a, b):
                continue
            t = float(np.dot(points[idx] - pa, d) / (length * length))
            if t <= 0.0 or t >= 1.0:
                continue
            closest = pa + t * d
            if math.dist(points[idx], closest) <= tol:
                hits.append((t, idx))
        chain = [a] + [idx for _, idx in sorted(hits)] + [b]
        for i in range(len(chain) - 1):
            if chain[i] != chain[i + 1]:
                out.append((chain[i], chain[i + 1]))
    return out


def _split_to_target(points, segments, h_target):
    """Subdivide segments so no piece is longer than h_target."""
    pts = [tuple(p) for p in points]
    out = []
    for a, b in segments:
        pa, pb = np.asarray(pts[a]), np.asarray(pts[b])
        length = math.dist(pa, pb)
        n_piece = max(1, math.ceil(length / h_target - 1e-12))
        prev = a
        for k in range(1, n_piece):
            q = pa + (pb - pa) * (k / n_piece)
            pts.append((float(q[0]), float(q[1])))
            out.append((prev, len(pts) - 1))
            prev = len(pts) - 1
        out.append((prev, b))
    return np.array(pts), out


def _hex_seeds(region_poly, h, segment_tree, clearance):
    minx, miny, maxx, maxy = region_poly.bounds
    dy = h * math.sqrt(3.0) / 2.0
    rows = []
    y = miny + 0.5 * dy
    row = 0
    while y < maxy:
        x0 = minx + (0.25 * h if row % 2 else 0.75 * h)
        x = x0
        while x < maxx:
            rows.append((x, y))
            x += h
        y += dy
        row += 1
    if not rows:
        return np.empty((0, 2))
    cand = np.array(rows)
    keep = shapely.contains_xy(region_poly, cand[:, 0], cand[:, 1])
    cand = cand[keep]
    if len(cand) == 0:
        return cand
    pts = shapely.points(cand)
    near = segment_tree.query(pts, predicate="dwithin", distance=clearance)
    bad = np.unique(near[0])
    mask = np.ones(len(cand), dtype=bool)
    mask[bad] = False
    return cand[mask]


def triangulate(built, h_target, min_angle_deg=15.0, max_rounds=40):
    """Conforming triangulation of a validated DownscalingMap."""
    if h_target <= 0.0:
        raise InputError("h_target must be positive")
    minx, miny, maxx, maxy = built.domain.bounds
    bbox_diag = math.hypot(maxx - minx, maxy - miny)
    tol = 1e-9 * bbox_diag

    raw_points = []
    raw_segments = []
    for region in built.regions:
        rings = [region.polygon.exterior, *region.polygon.interiors]
        for ring in rings:
            coords = list(ring.coords)
            base = len(raw_points)
            raw_points.extend(coords[:-1])
            m = len(coords) - 1
            for i in range(m):
                raw_segments.append((base + i, base + (i + 1) % m))

    points, remap = _dedupe_points(raw_points, tol)
    segments = sorted({(min(remap[a], remap[b]), max(remap[a], remap[b]))
                       for a, b in raw_segments if remap[a] != remap[b]})
    segments = _node_pslg(points, segments, tol)
    points, segments = _split_to_target(points, segments, h_target)
    segments = sorted({(min(a, b), max(a, b)) for a, b in segments})

    seg_lines = [LineString([points[a], points[b]]) for a, b in segments]
    segment_tree = shapely.STRtree(seg_lines)
    seeds = []
    for region in built.regions:
        s = _hex_seeds(region.polygon, h_target, segment_tree, 0.5 * h_target)
        if len(s):
            seeds.append(s)
    all_points = np.vstack([points] + seeds) if seeds else np.array(points)
    is_constraint = np.zeros(len(all_points), dtype=bool)
    is_constraint[:len(points)] = True

    state = _TriState(all_points, is_constraint, list(segments))
    tri = _conform(state, max_rounds)
    mesh = _build_from_delaunay(built, state.points, tri, tol)

    # Ruppert-style quality pass: insert circumcenters of skinny triangles,
    # splitting encroached constraint subsegments instead
    target = min_angle_deg + 2.0
    budget = max(25 * len(state.points), 4000)
    for _ in range(80):
        if mesh.min_angle_deg() >= target or len(state.points) > budget:
            break
        if not _quality_round(built, state, mesh, target, h_target):
            break
        tri = _conform(state, max_rounds)
        mesh = _build_from_delaunay(built, state.points, tri, tol)

    if mesh.min_angle_deg() < min_angle_deg:
        mesh = _smooth_and_rebuild(built, mesh, state.points, state.is_constraint,
                                   state.segments, min_angle_deg, tol)
    if mesh.min_angle_deg() < min_angle_deg:
        raise QualityFailure(
            f"min angle {mesh.min_angle_deg():.2f} deg below floor {min_angle_deg}")
    return mesh


class _TriState:
    def __init__(self, points, is_constraint, segments):
        self.points = points
        self.is_constraint = is_constraint
        self.segments = segments

    def add_points(self, pts, constraint):
        base = len(self.points)
        self.points = np.vstack([self.points, np.asarray(pts)])
        self.is_constraint = np.concatenate(
            [self.is_constraint, np.full(len(pts), constraint, dtype=bool)])
        return np.arange(base, base + len(pts))


def _conform(state, max_rounds):
    """Delaunay + midpoint insertion until all subsegments are mesh edges."""
    for _ in range(max_rounds):
        tri = Delaunay(state.points)
        if tri.coplanar.size:
            raise UnionFailure("duplicate points survived snapping")
        edge_set = _delaunay_edges(tri)
        missing = [seg for seg in state.segments if seg not in edge_set]
        if not missing:
            return tri
        kept = [seg for seg in state.segments if seg in edge_set]
        mids = [0.5 * (state.points[a] + state.points[b]) for a, b in missing]
        ids = state.add_points(mids, constraint=True)
        for (a, b), m in zip(missing, ids):
            kept.append((min(a, int(m)), max(a, int(m))))
            kept.append((min(b, int(m)), max(b, int(m))))
        state.segments = kept
    raise QualityFailure("conforming Delaunay did not converge")


def _quality_round(built, state, mesh, target_deg, h_target):
    """One batch of circumcenter insertions; returns False when stuck."""
    angles = _all_angles_deg(mesh.nodes, mesh.cells).min(axis=1)
    bad = np.nonzero(angles < target_deg)[0]
    if len(bad) == 0:
        return False
    p = mesh.nodes[mesh.cells[bad]]
    cc, cr = _circumcircles(p)
    short = np.minimum.reduce([
        np.hypot(*(p[:, 1] - p[:, 0]).T),
        np.hypot(*(p[:, 2] - p[:, 1]).T),
        np.hypot(*(p[:, 0] - p[:, 2]).T)])

    seg_arr = np.array(state.segments)
    seg_mid = 0.5 * (state.points[seg_arr[:, 0]] + state.points[seg_arr[:, 1]])
    seg_half = 0.5 * np.hypot(
        *(state.points[seg_arr[:, 1]] - state.points[seg_arr[:, 0]]).T)
    seg_tree = cKDTree(seg_mid)
    split_floor = 1e-3 * h_target   # stop subdividing tiny subsegments

    inside = shapely.contains_xy(built.domain, cc[:, 0], cc[:, 1])
    point_tree = cKDTree(state.points)

    new_free = []
    split = set()
    # worst first, bounded batch: large batches create fresh slivers
    order = np.argsort(angles[bad])[:max(16, len(bad) // 4)]
    for k in order:
        center = cc[k]
        # encroached subsegments: center inside a diametral circle
        near = seg_tree.query_ball_point(center, float(np.max(seg_half)) + 1e-30)
        encroached = [i for i in near
                      if np.hypot(*(center - seg_mid[i])) < seg_half[i] * (1 - 1e-12)]
        if encroached or not inside[k]:
            if not encroached:
                # outside the domain: split the nearest subsegment instead
                _, i = seg_tree.query(center)
                encroached = [int(i)]
            split.update(int(i) for i in encroached
                         if seg_half[i] * 2.0 > split_floor)
            continue
        guard = 0.4 * short[k]
        if point_tree.query(center)[0] < guard:
            continue
        if new_free and cKDTree(np.array(new_free)).query(center)[0] < guard:
            continue
        new_free.append(center)

    if not new_free and not split:
        return False
    if split:
        mids = [seg_mid[i] for i in sorted(split)]
        ids = state.add_points(mids, constraint=True)
        kept = [seg for i, seg in enumerate(state.segments) if i not in split]
        for i, m in zip(sorted(split), ids):
            a, b = state.segments[i]
            kept.append((min(a, int(m)), max(a, int(m))))
            kept.append((min(b, int(m)), max(b, int(m))))
        state.segments = kept
    if new_free:
        state.add_points(np.array(new_free), constraint=False)
    return True


def _circumcircles(p):
    """Centers and radii for triangles given as (m, 3, 2) vertex arrays."""
    a, b, c = p[:, 0], p[:, 1], p[:, 2]
    ab = b - a
    ac = c - a
    d = 2.0 * (ab[:, 0] * ac[:, 1] - ab[:, 1] * ac[:, 0])
    ab2 = (ab * ab).sum(axis=1)
    ac2 = (ac * ac).sum(axis=1)
    ux = (ac[:, 1] * ab2 - ab[:, 1] * ac2) / d
    uy = (ab[:, 0] * ac2 - ac[:, 0] * ab2) / d
    centers = a + np.stack([ux, uy], axis=1)
    radii = np.hypot(ux, uy)
    return centers, radii


def _delaunay_edges(tri):
    edges = set()
    for simplex in tri.simplices:
        for i in range(3):
            a, b = int(simplex[i]), int(simplex[(i + 1) % 3])
            edges.add((min(a, b), max(a, b)))
    return edges


def _smooth_and_rebuild(built, mesh, all_points, is_constraint, constraint_segments,
                        min_angle_deg, tol, rounds=3):
    """Laplacian smoothing of free nodes, then re-triangulate; keep the best
    conforming candidate."""
    pts = all_points.copy()
    best = mesh
    for _ in range(rounds):
        graph = np.array(sorted(_delaunay_edges(Delaunay(pts))), dtype=int)
        neighbor_sum = np.zeros_like(pts)
        neighbor_cnt = np.zeros(len(pts))
        np.add.at(neighbor_sum, graph[:, 0], pts[graph[:, 1]])
        np.add.at(neighbor_sum, graph[:, 1], pts[graph[:, 0]])
        np.add.at(neighbor_cnt, graph[:, 0], 1.0)
        np.add.at(neighbor_cnt, graph[:, 1], 1.0)
        movable = (~is_constraint) & (neighbor_cnt > 0)
        pts[movable] = neighbor_sum[movable] / neighbor_cnt[movable, None]
        tri = Delaunay(pts)
        if any(seg not in _delaunay_edges(tri) for seg in constraint_segments):
            break
        candidate = _build_from_delaunay(built, pts, tri, tol)
        if candidate.min_angle_deg() > best.min_angle_deg():
            best = candidate
        if best.min_angle_deg() >= min_angle_deg:
            break
    return best


def _build_from_delaunay(built, all_points, tri, tol):
    centroids = all_points[tri.simplices].mean(axis=1)
    region_id = np.full(len(tri.simplices), -1, dtype=int)
    for region in built.regions:
        inside = shapely.contains_xy(region.polygon, centroids[:, 0], centroids[:, 1])
        region_id[inside & (region_id == -1)] = region.owner
    keep = region_id >= 0
    cells = tri.simplices[keep].astype(int)
    cell_region = region_id[keep]

    # orient counterclockwise
    p = all_points[cells]
    area2 = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
             - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    flip = area2 < 0
    cells[flip] = cells[flip][:, [0, 2, 1]]

    # compact node numbering
    used = np.unique(cells)
    new_id = -np.ones(len(all_points), dtype=int)
    new_id[used] = np.arange(len(used))
    nodes = all_points[used]
    cells = new_id[cells]

    color_of_region = {r.owner: r.color for r in built.regions}
    cell_color = np.array([color_of_region[r] for r in cell_region], dtype=int)

    return _finish_mesh(built, nodes, cells, cell_region, cell_color, tol)


def _finish_mesh(built, nodes, cells, cell_region, cell_color, tol):
    """Facet extraction, classification, interface matching, normals."""
    facet_index = {}
    facet_list = []
    facet_cells = []
    cell_facets = np.empty((len(cells), 3), dtype=int)
    for c, cell in enumerate(cells):
        for k in range(3):
            a, b = int(cell[(k + 1) % 3]), int(cell[(k + 2) % 3])
            key = (min(a, b), max(a, b))
            f = facet_index.get(key)
            if f is None:
                f = len(facet_list)
                facet_index[key] = f
                facet_list.append(key)
                facet_cells.append([c, -1])
            else:
                if facet_cells[f][1] != -1:
                    raise UnionFailure("non-conforming facet shared by 3 cells")
                facet_cells[f][1] = c
            cell_facets[c, k] = f

    facets = np.array(facet_list, dtype=int)
    facet_cells = np.array(facet_cells, dtype=int)
    n_f = len(facets)
    facet_class = np.empty(n_f, dtype=int)
    facet_interface = np.full(n_f, -1, dtype=int)
    facet_normal = np.zeros((n_f, 2))

    iface_lines = [LineString(s.polyline) for s in built.interfaces]
    iface_tree = shapely.STRtree(iface_lines) if iface_lines else None
    match_tol = max(tol * 100.0, 1e-12)

    mids = 0.5 * (nodes[facets[:, 0]] + nodes[facets[:, 1]])
    tangents = nodes[facets[:, 1]] - nodes[facets[:, 0]]
    lengths = np.hypot(tangents[:, 0], tangents[:, 1])

    cell_centroid = nodes[cells].mean(axis=1)

    for f in range(n_f):
        c0, c1 = facet_cells[f]
        nx, ny = tangents[f, 1] / lengths[f], -tangents[f, 0] / lengths[f]
        if c1 == -1:
            color = cell_color[c0]
            facet_class[f] = OUTER_N if color == 2 else OUTER_D
            # outward from the single incident cell
            to_cell = cell_centroid[c0] - mids[f]
            if nx * to_cell[0] + ny * to_cell[1] > 0:
                nx, ny = -nx, -ny
            facet_normal[f] = (nx, ny)
        elif cell_region[c0] == cell_region[c1]:
            facet_class[f] = INTERIOR
            low = c0 if c0 < c1 else c1
            to_cell = cell_centroid[low] - mids[f]
            if nx * to_cell[0] + ny * to_cell[1] > 0:
                nx, ny = -nx, -ny
            facet_normal[f] = (nx, ny)
        else:
            facet_class[f] = GAMMA
            if iface_tree is not None:
                hits = iface_tree.query(Point(mids[f]), predicate="dwithin",
                                        distance=match_tol)
                if len(hits) == 0:
                    raise UnionFailure(
                        f"gamma facet at {mids[f]} lies on no interface polyline")
                best = min(hits, key=lambda i: iface_lines[i].distance(Point(mids[f])))
                facet_interface[f] = int(best)
            # normal out of the color-1 (or lower-region) cell
            if cell_color[c0] == 1 or (cell_color[c0] == cell_color[c1]
                                       and cell_region[c0] < cell_region[c1]):
                src = c0
            else:
                src = c1
            to_cell = cell_centroid[src] - mids[f]
            if nx * to_cell[0] + ny * to_cell[1] > 0:
                nx, ny = -nx, -ny
            facet_normal[f] = (nx, ny)

    return Mesh(nodes=nodes, cells=cells, cell_region=np.asarray(cell_region, dtype=int),
                cell_color=cell_color, facets=facets, facet_cells=facet_cells,
                facet_class=facet_class, facet_interface=facet_interface,
                facet_normal=facet_normal, cell_facets=cell_facets)


def refine(mesh: Mesh):
    """Red refinement: each triangle into four; tags and classes inherited."""
    n_old = mesh.node_count
    mid_id = n_old + np.arange(mesh.facet_count)
    mid_xy = 0.5 * (mesh.nodes[mesh.facets[:, 0]] + mesh.nodes[mesh.facets[:, 1]])
    nodes = np.vstack([mesh.nodes, mid_xy])

    cells = np.empty((4 * mesh.cell_count, 3), dtype=int)
    cell_region = np.repeat(mesh.cell_region, 4)
    cell_color = np.repeat(mesh.cell_color, 4)
    for c in range(mesh.cell_count):
        v0, v1, v2 = mesh.cells[c]
        m0 = mid_id[mesh.cell_facets[c, 0]]   # midpoint of (v1, v2)
        m1 = mid_id[mesh.cell_facets[c, 1]]   # midpoint of (v2, v0)
        m2 = mid_id[mesh.cell_facets[c, 2]]   # midpoint of (v0, v1)
        cells[4 * c + 0] = (v0, m2, m1)
        cells[4 * c + 1] = (v1, m0, m2)
        cells[4 * c + 2] = (v2, m1, m0)
        cells[4 * c + 3] = (m0, m1, m2)

    # parent facet lookup: child (endpoint, midpoint) pairs inherit the class
    parent_of = {}
    for f in range(mesh.facet_count):
        a, b = mesh.facets[f]
        m = mid_id[f]
        parent_of[(min(a, m), max(a, m))] = f
        parent_of[(min(b, m), max(b, m))] = f

    facet_index = {}
    facet_list = []
    facet_cells = []
    cell_facets = np.empty((len(cells), 3), dtype=int)
    for c, cell in enumerate(cells):
        for k in range(3):
            a, b = int(cell[(k + 1) % 3]), int(cell[(k + 2) % 3])
            key = (min(a, b), max(a, b))
            f = facet_index.get(key)
            if f is None:
                f = len(facet_list)
                facet_index[key] = f
                facet_list.append(key)
                facet_cells.append([c, -1])
            else:
                facet_cells[f][1] = c
            cell_facets[c, k] = f

    facets = np.array(facet_list, dtype=int)
    facet_cells = np.array(facet_cells, dtype=int)
    n_f = len(facets)
    facet_class = np.full(n_f, INTERIOR, dtype=int)
    facet_interface = np.full(n_f, -1, dtype=int)
    facet_normal = np.zeros((n_f, 2))

    tangents = nodes[facets[:, 1]] - nodes[facets[:, 0]]
    lengths = np.hypot(tangents[:, 0], tangents[:, 1])
    mids = 0.5 * (nodes[facets[:, 0]] + nodes[facets[:, 1]])
    centroids = nodes[cells].mean(axis=1)

    for f in range(n_f):
        key = (int(facets[f, 0]), int(facets[f, 1]))
        parent = parent_of.get(key)
        if parent is None:
            continue
        facet_class[f] = mesh.facet_class[parent]
        facet_interface[f] = mesh.facet_interface[parent]
        if facet_class[f] == INTERIOR:
            c0, c1 = facet_cells[f]
            low = c0 if (c1 == -1 or c0 < c1) else c1
            nx, ny = tangents[f, 1] / lengths[f], -tangents[f, 0] / lengths[f]
            to_cell = centroids[low] - mids[f]
            if nx * to_cell[0] + ny * to_cell[1] > 0:
                nx, ny = -nx, -ny
            facet_normal[f] = (nx, ny)
        else:
            facet_normal[f] = mesh.facet_normal[parent]
    # interior facets created inside parents and interior children keep the
    # low-cell orientation rule
    for f in range(n_f):
        if facet_class[f] == INTERIOR and facet_normal[f, 0] == 0 and facet_normal[f, 1] == 0:
            c0, c1 = facet_cells[f]
            low = c0 if (c1 == -1 or c0 < c1) else c1
            nx, ny = tangents[f, 1] / lengths[f], -tangents[f, 0] / lengths[f]
            to_cell = centroids[low] - mids[f]
            if nx * to_cell[0] + ny * to_cell[1] > 0:
                nx, ny = -nx, -ny
            facet_normal[f] = (nx, ny)

    return Mesh(nodes=nodes, cells=cells, cell_region=cell_region,
                cell_color=cell_color, facets=facets, facet_cells=facet_cells,
                facet_class=facet_class, facet_interface=facet_interface,
                facet_normal=facet_normal, cell_facets=cell_facets)


def mesh_quality(mesh: Mesh):
    """Angle and size statistics plus facet class counts."""
    angles = _all_angles_deg(mesh.nodes, mesh.cells)
    lengths = mesh.facet_lengths()
    counts = {name: int((mesh.facet_class == code).sum())
              for code, name in FACET_CLASS_NAMES.items()}
    return {
        "cells": mesh.cell_count,
        "nodes": mesh.node_count,
        "facets": mesh.facet_count,
        "min_angle_deg": float(angles.min()),
        "max_angle_deg": float(angles.max()),
        "h_min": float(lengths.min()),
        "h_max": float(lengths.max()),
        "facet_counts": counts,
        "total_area": float(mesh.cell_areas().sum()),
    }


# --- legacy VTK export --------------------------------------------------------

def write_vtk(mesh: Mesh, path, cell_data=None, point_data=None):
    """Legacy-VTK ASCII unstructured grid with optional data arrays."""
    lines = ["# vtk DataFile Version 2.0", "graphdarcy mesh", "ASCII",
             "DATASET UNSTRUCTURED_GRID",
             f"POINTS {mesh.node_count} double"]
    for x, y in mesh.nodes:
        lines.append(f"{x:.17g} {y:.17g} 0")
    lines.append(f"CELLS {mesh.cell_count} {4 * mesh.cell_count}")
    for a, b, c in mesh.cells:
        lines.append(f"3 {a} {b} {c}")
    lines.append(f"CELL_TYPES {mesh.cell_count}")
    lines.extend(["5"] * mesh.cell_count)

    cell_data = dict(cell_data or {})
    cell_data.setdefault("region", mesh.cell_region)
    cell_data.setdefault("color", mesh.cell_color)
    lines.append(f"CELL_DATA {mesh.cell_count}")
    for name, values in cell_data.items():
        values = np.asarray(values)
        if values.ndim == 1:
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(f"{v:.17g}" for v in values)
        else:
            lines.append(f"VECTORS {name} double")
            lines.extend(f"{v[0]:.17g} {v[1]:.17g} 0" for v in values)
    if point_data:
        lines.append(f"POINT_DATA {mesh.node_count}")
        for name, values in point_data.items():
            values = np.asarray(values)
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(f"{v:.17g}" for v in values)
    with open(path, "w") as fp:
        fp.write("\n".join(lines) + "\n")


def write_facets_vtk(mesh: Mesh, path):
    """Facet polylines with their class (and interface id) as cell data."""
    lines = ["# vtk DataFile Version 2.0", "graphdarcy facets", "ASCII",
             "DATASET UNSTRUCTURED_GRID",
             f"POINTS {mesh.node_count} double"]
    for x, y in mesh.nodes:
        lines.append(f"{x:.17g} {y:.17g} 0")
    lines.append(f"CELLS {mesh.facet_count} {3 * mesh.facet_count}")
    for a, b in mesh.facets:
        lines.append(f"2 {a} {b}")
    lines.append(f"CELL_TYPES {mesh.facet_count}")
    lines.extend(["3"] * mesh.facet_count)
    lines.append(f"CELL_DATA {mesh.facet_count}")
    lines.append("SCALARS facet_class int 1")
    lines.append("LOOKUP_TABLE default")
    lines.extend(str(int(v)) for v in mesh.facet_class)
    lines.append("SCALARS interface_id int 1")
    lines.append("LOOKUP_TABLE default")
    lines.extend(str(int(v)) for v in mesh.facet_interface)
    with open(path, "w") as fp:
        fp.write("\n".join(lines) + "\n")
