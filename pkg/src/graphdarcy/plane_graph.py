"""Plane graphs: straight-line embeddings with a rotation system.

Faces, dual and double dual are computed on the combinatorial map (darts with
twin/rotation permutations), so the dual's multi-edges and self-loops need no
geometric embedding.  Geometry enters only in building the rotation system,
in the exact crossing checks and in placing dual vertices for export.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import math

from .errors import (
    DuplicateCoordinate,
    EdgeCrossing,
    InternalCycle,
    IsomorphismTimeout,
    NotConnected,
    NotSimple,
)


# float filter bound for the 2d orientation determinant (Shewchuk's ccwerrboundA)
_ORIENT_ERR = (3.0 + 16.0 * 2.0 ** -53) * 2.0 ** -53


def orient(pa, pb, pc):
    """Exact sign of the cross product (b-a) x (c-a).

    Floating point with an a priori error filter; falls back to rational
    arithmetic only when the float sign is not certified.
    """
    detleft = (pa[0] - pc[0]) * (pb[1] - pc[1])
    detright = (pa[1] - pc[1]) * (pb[0] - pc[0])
    det = detleft - detright
    detsum = abs(detleft) + abs(detright)
    if abs(det) > _ORIENT_ERR * detsum:
        return 1 if det > 0 else -1
    ax, ay = Fraction(pa[0]), Fraction(pa[1])
    exact = (Fraction(pb[0]) - ax) * (Fraction(pc[1]) - ay) \
        - (Fraction(pb[1]) - ay) * (Fraction(pc[0]) - ax)
    return (exact > 0) - (exact < 0)


def _on_segment(p, a, b):
    """p collinear with ab assumed; is p within the closed segment box."""
    return (min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= p[1] <= max(a[1], b[1]))


def segments_cross(a, b, c, d, snap_tol=1e-12):
    """True when segments ab and cd intersect anywhere but a shared endpoint.

    Endpoints matching within snap_tol are treated as shared (touching is
    allowed there); everything else uses exact predicates.
    """

    def near(p, q):
        return abs(p[0] - q[0]) <= snap_tol and abs(p[1] - q[1]) <= snap_tol

    shared = [(p, q) for p in (a, b) for q in (c, d) if near(p, q)]
    o1 = orient(a, b, c)
    o2 = orient(a, b, d)
    o3 = orient(c, d, a)
    o4 = orient(c, d, b)
    if o1 == o2 == o3 == o4 == 0:
        # collinear: overlap of positive length is a crossing even with a
        # shared endpoint; touching exactly at that endpoint is fine
        pts = [p for p in (c, d) if _on_segment(p, a, b)] + \
              [p for p in (a, b) if _on_segment(p, c, d)]
        far = [p for p in pts if not any(near(p, q) for pair in shared for q in pair)]
        if shared:
            return len(far) > 0
        return len(pts) > 0
    if shared:
        return False
    if o1 != o2 and o3 != o4:
        return True
    # endpoint of one segment strictly inside the other
    if o1 == 0 and _on_segment(c, a, b):
        return True
    if o2 == 0 and _on_segment(d, a, b):
        return True
    if o3 == 0 and _on_segment(a, c, d):
        return True
    if o4 == 0 and _on_segment(b, c, d):
        return True
    return False


@dataclass(frozen=True)
class Face:
    id: int
    boundary: tuple          # cyclic tuple of darts (u, v)
    is_outer: bool
    signed_area: float


@dataclass(frozen=True)
class BridgeTree:
    components: tuple        # tuple of frozensets of vertex ids
    tree_edges: tuple        # tuple of (comp_i, comp_j, bridge_edge)


class PlaneGraph:
    """Immutable simple connected plane graph with straight-line edges."""

    def __init__(self, vertices, edges, neighbors):
        self.vertices = tuple((float(x), float(y)) for x, y in vertices)
        self.edges = tuple(edges)
        self.neighbors = tuple(tuple(ns) for ns in neighbors)  # CCW rotation
        self._edge_set = frozenset(self.edges)
        self._faces = None

    @property
    def vertex_count(self):
        return len(self.vertices)

    @property
    def edge_count(self):
        return len(self.edges)

    def has_edge(self, u, v):
        return (min(u, v), max(u, v)) in self._edge_set

    def rotation_index(self, v, w):
        return self.neighbors[v].index(w)

    def bbox_diagonal(self):
        xs = [p[0] for p in self.vertices]
        ys = [p[1] for p in self.vertices]
        return math.hypot(max(xs) - min(xs), max(ys) - min(ys))


def build_embedding(vertices, edges, snap_tol=1e-12):
    """Validate input and build the rotation system (CCW by angle)."""
    if len(vertices) < 1:
        raise NotSimple("need at least one vertex")
    pts = [(float(x), float(y)) for x, y in vertices]
    for x, y in pts:
        if not (math.isfinite(x) and math.isfinite(y)):
            raise DuplicateCoordinate("non-finite coordinate")
    seen = {}
    for i, p in enumerate(pts):
        if p in seen:
            raise DuplicateCoordinate(f"vertices {seen[p]} and {i} coincide at {p}")
        seen[p] = i

    n = len(pts)
    norm_edges = []
    edge_seen = set()
    for u, v in edges:
        u, v = int(u), int(v)
        if not (0 <= u < n and 0 <= v < n):
            raise NotSimple(f"edge ({u},{v}) references a missing vertex")
        if u == v:
            raise NotSimple(f"self-loop at vertex {u}")
        key = (min(u, v), max(u, v))
        if key in edge_seen:
            raise NotSimple(f"multi-edge {key}")
        edge_seen.add(key)
        norm_edges.append(key)
    norm_edges.sort()

    adjacency = [[] for _ in range(n)]
    for u, v in norm_edges:
        adjacency[u].append(v)
        adjacency[v].append(u)

    # connectivity from vertex 0
    stack = [0]
    reached = {0}
    while stack:
        v = stack.pop()
        for w in adjacency[v]:
            if w not in reached:
                reached.add(w)
                stack.append(w)
    if len(reached) != n:
        raise NotConnected(f"{n - len(reached)} vertices unreachable from vertex 0")

    # pairwise crossing check (exact predicates behind a bbox prefilter),
    # plus vertex-on-edge
    boxes = []
    for u, v in norm_edges:
        (x0, y0), (x1, y1) = pts[u], pts[v]
        boxes.append((min(x0, x1), min(y0, y1), max(x0, x1), max(y0, y1)))
    for i in range(len(norm_edges)):
        a, b = norm_edges[i]
        bi = boxes[i]
        for j in range(i + 1, len(norm_edges)):
            bj = boxes[j]
            if bi[2] < bj[0] or bj[2] < bi[0] or bi[3] < bj[1] or bj[3] < bi[1]:
                continue
            c, d = norm_edges[j]
            if segments_cross(pts[a], pts[b], pts[c], pts[d], snap_tol):
                raise EdgeCrossing(norm_edges[i], norm_edges[j])
    for k, (u, v) in enumerate(norm_edges):
        box = boxes[k]
        for w in range(n):
            if w in (u, v):
                continue
            x, y = pts[w]
            if x < box[0] or x > box[2] or y < box[1] or y > box[3]:
                continue
            if orient(pts[u], pts[v], pts[w]) == 0 and _on_segment(pts[w], pts[u], pts[v]):
                raise EdgeCrossing((u, v), (w, w))

    rotation = []
    for v in range(n):
        vx, vy = pts[v]
        ordered = sorted(adjacency[v],
                         key=lambda w: math.atan2(pts[w][1] - vy, pts[w][0] - vx))
        rotation.append(ordered)
    return PlaneGraph(pts, norm_edges, rotation)


# --- combinatorial map ----------------------------------------------------

class RotationGraph:
    """Abstract combinatorial map: darts with twin and per-vertex rotation.

    sigma_next[d] is the next dart counterclockwise around d's origin vertex.
    Faces are the orbits of phi(d) = sigma_prev(twin(d)).
    """

    def __init__(self, origin, twin, sigma_next):
        self.origin = tuple(origin)
        self.twin = tuple(twin)
        self.sigma_next = tuple(sigma_next)
        self.sigma_prev = [0] * len(sigma_next)
        for d, nxt in enumerate(sigma_next):
            self.sigma_prev[nxt] = d
        self.n_vertices = (max(origin) + 1) if origin else 0

    @property
    def dart_count(self):
        return len(self.origin)

    def face_next(self, d):
        return self.sigma_prev[self.twin[d]]

    def face_orbits(self):
        seen = [False] * self.dart_count
        orbits = []
        for start in range(self.dart_count):
            if seen[start]:
                continue
            orbit = []
            d = start
            while not seen[d]:
                seen[d] = True
                orbit.append(d)
                d = self.face_next(d)
            orbits.append(tuple(orbit))
        return orbits

    def dual(self):
        """Combinatorial dual: faces become vertices, rotation = face orbits."""
        orbits = self.face_orbits()
        face_of = [0] * self.dart_count
        for fid, orbit in enumerate(orbits):
            for d in orbit:
                face_of[d] = fid
        sigma_next = [0] * self.dart_count
        for orbit in orbits:
            for k, d in enumerate(orbit):
                sigma_next[d] = orbit[(k + 1) % len(orbit)]
        return RotationGraph(face_of, self.twin, sigma_next)

    def adjacency_multiset(self):
        """Undirected edge multiset {frozenset-ish sorted pair: multiplicity}."""
        counts = {}
        for d in range(self.dart_count):
            if d < self.twin[d] or self.twin[d] == d:
                u, v = self.origin[d], self.origin[self.twin[d]]
                key = (min(u, v), max(u, v))
                counts[key] = counts.get(key, 0) + 1
        return counts


def rotation_graph(g: PlaneGraph):
    """Darts of g: two per edge, ordered (edge_index, direction)."""
    dart_id = {}
    origin = []
    twin = []
    for k, (u, v) in enumerate(g.edges):
        dart_id[(u, v)] = 2 * k
        dart_id[(v, u)] = 2 * k + 1
        origin.extend([u, v])
        twin.extend([2 * k + 1, 2 * k])
    sigma_next = [0] * len(origin)
    for v in range(g.vertex_count):
        ring = [dart_id[(v, w)] for w in g.neighbors[v]]
        for k, d in enumerate(ring):
            sigma_next[d] = ring[(k + 1) % len(ring)]
    return RotationGraph(origin, twin, sigma_next), dart_id


def faces(g: PlaneGraph):
    """Faces by next-half-edge traversal; exactly one face flagged outer."""
    if g._faces is not None:
        return g._faces
    if g.edge_count == 0:
        result = (Face(0, (), True, 0.0),)
        g._faces = result
        return result
    rg, dart_id = rotation_graph(g)
    inv = {d: uv for uv, d in dart_id.items()}
    orbits = rg.face_orbits()
    records = []
    for orbit in orbits:
        walk = [inv[d] for d in orbit]
        area2 = 0.0
        for u, v in walk:
            (x0, y0), (x1, y1) = g.vertices[u], g.vertices[v]
            area2 += x0 * y1 - x1 * y0
        records.append((walk, 0.5 * area2))

    if len(records) == 1:
        outer_idx = 0
    else:
        negatives = [i for i, (_, area) in enumerate(records) if area < 0.0]
        if len(negatives) != 1:
            raise InternalCycle("face traversal produced an ambiguous outer face")
        outer_idx = negatives[0]
    result = tuple(
        Face(i, tuple(walk), i == outer_idx, area)
        for i, (walk, area) in enumerate(records)
    )
    g._faces = result
    return result


@dataclass(frozen=True)
class DualGraph:
    """Multigraph container for the dual; may hold self-loops and multi-edges."""
    positions: tuple                 # one representative point per face
    edges: tuple                     # (face_i, face_j) per primal edge, aligned with g.edges
    rotation: RotationGraph = field(repr=False, compare=False, default=None)


def dual(g: PlaneGraph):
    """One dual vertex per face, one dual edge per primal edge."""
    face_list = faces(g)
    if g.edge_count == 0:
        return DualGraph((_outside_point(g),), (), None)
    rg, dart_id = rotation_graph(g)
    dual_rg = rg.dual()
    # faces() and rg.face_orbits() enumerate orbits in the same dart order,
    # so face ids agree between the two.
    positions = []
    for f in face_list:
        if f.is_outer:
            positions.append(_outside_point(g))
        else:
            positions.append(_loop_centroid([g.vertices[u] for u, _ in f.boundary]))
    dual_edges = []
    for k in range(g.edge_count):
        d = 2 * k
        dual_edges.append((dual_rg.origin[d], dual_rg.origin[dual_rg.twin[d]]))
    return DualGraph(tuple(positions), tuple(dual_edges), dual_rg)


def _outside_point(g):
    xs = [p[0] for p in g.vertices]
    ys = [p[1] for p in g.vertices]
    pad = max(max(xs) - min(xs), max(ys) - min(ys), 1.0)
    return (max(xs) + pad, max(ys) + pad)


def _loop_centroid(points):
    area2 = 0.0
    cx = cy = 0.0
    m = len(points)
    for i in range(m):
        x0, y0 = points[i]
        x1, y1 = points[(i + 1) % m]
        w = x0 * y1 - x1 * y0
        area2 += w
        cx += (x0 + x1) * w
        cy += (y0 + y1) * w
    if abs(area2) < 1e-30:
        return (sum(p[0] for p in points) / m, sum(p[1] for p in points) / m)
    return (cx / (3.0 * area2), cy / (3.0 * area2))


def double_dual_isomorphic(g: PlaneGraph, max_vertices=12):
    """Self-test oracle: G** computed combinatorially, compared by backtracking."""
    if g.vertex_count > max_vertices:
        raise IsomorphismTimeout(
            f"{g.vertex_count} vertices exceeds the isomorphism cap {max_vertices}")
    if g.edge_count == 0:
        return True
    rg, _ = rotation_graph(g)
    ddual = rg.dual().dual()
    lhs = _multiset_to_adjacency(rg.adjacency_multiset(), g.vertex_count)
    rhs = _multiset_to_adjacency(ddual.adjacency_multiset(), ddual.n_vertices)
    return _isomorphic(lhs, rhs)


def _multiset_to_adjacency(counts, n):
    adj = [dict() for _ in range(n)]
    for (u, v), mult in counts.items():
        adj[u][v] = adj[u].get(v, 0) + mult
        if u != v:
            adj[v][u] = adj[v].get(u, 0) + mult
    return adj


def _isomorphic(adj_a, adj_b):
    n = len(adj_a)
    if len(adj_b) != n:
        return False

    def signature(adj, v):
        deg = sum(adj[v].values())
        nbr_degs = sorted(sum(adj[w].values()) for w in adj[v])
        return (deg, tuple(nbr_degs))

    sig_a = [signature(adj_a, v) for v in range(n)]
    sig_b = [signature(adj_b, v) for v in range(n)]
    if sorted(sig_a) != sorted(sig_b):
        return False

    order = sorted(range(n), key=lambda v: (-sig_a[v][0], sig_a[v]))
    mapping = [-1] * n
    used = [False] * n

    def extend(k):
        if k == n:
            return True
        v = order[k]
        for w in range(n):
            if used[w] or sig_a[v] != sig_b[w]:
                continue
            ok = True
            for u, mult in adj_a[v].items():
                mu = mapping[u]
                if mu != -1 and adj_b[w].get(mu, 0) != mult:
                    ok = False
                    break
            if ok:
                # reverse direction: mapped neighbors of w must be neighbors of v
                for u2, mult in adj_b[w].items():
                    if u2 == w:
                        if adj_a[v].get(v, 0) != mult:
                            ok = False
                            break
                        continue
                    try:
                        u_pre = mapping.index(u2)
                    except ValueError:
                        continue
                    if adj_a[v].get(u_pre, 0) != mult:
                        ok = False
                        break
            if ok:
                mapping[v] = w
                used[w] = True
                if extend(k + 1):
                    return True
                mapping[v] = -1
                used[w] = False
        return False

    return extend(0)


# --- bridges, bipartition, components -------------------------------------

def bridges(g: PlaneGraph):
    """Classical low-link bridge detection (iterative DFS)."""
    n = g.vertex_count
    disc = [-1] * n
    low = [0] * n
    clock = 0
    result = set()
    for root in range(n):
        if disc[root] != -1:
            continue
        stack = [(root, -1, 0)]
        while stack:
            v, parent, idx = stack.pop()
            if idx == 0:
                disc[v] = low[v] = clock
                clock += 1
            recursed = False
            nbrs = g.neighbors[v]
            while idx < len(nbrs):
                w = nbrs[idx]
                idx += 1
                if disc[w] == -1:
                    stack.append((v, parent, idx))
                    stack.append((w, v, 0))
                    recursed = True
                    break
                if w != parent:
                    low[v] = min(low[v], disc[w])
            if not recursed and parent != -1:
                low[parent] = min(low[parent], low[v])
                if low[v] > disc[parent]:
                    result.add((min(parent, v), max(parent, v)))
    return result


def articulation_points(g: PlaneGraph):
    """Cut vertices by the same low-link DFS."""
    n = g.vertex_count
    disc = [-1] * n
    low = [0] * n
    clock = 0
    cuts = set()
    for root in range(n):
        if disc[root] != -1:
            continue
        root_children = 0
        stack = [(root, -1, 0)]
        while stack:
            v, parent, idx = stack.pop()
            if idx == 0:
                disc[v] = low[v] = clock
                clock += 1
            recursed = False
            nbrs = g.neighbors[v]
            while idx < len(nbrs):
                w = nbrs[idx]
                idx += 1
                if disc[w] == -1:
                    if v == root:
                        root_children += 1
                    stack.append((v, parent, idx))
                    stack.append((w, v, 0))
                    recursed = True
                    break
                if w != parent:
                    low[v] = min(low[v], disc[w])
            if not recursed and parent != -1:
                low[parent] = min(low[parent], low[v])
                if parent != root and low[v] >= disc[parent]:
                    cuts.add(parent)
        if root_children > 1:
            cuts.add(root)
    return cuts


def outer_bridges(g: PlaneGraph):
    """Bridges whose both half-edges lie on the outer face boundary."""
    all_bridges = bridges(g)
    outer = next(f for f in faces(g) if f.is_outer)
    darts_on_outer = set(outer.boundary)
    result = set()
    for u, v in all_bridges:
        if (u, v) in darts_on_outer and (v, u) in darts_on_outer:
            result.add((u, v))
    return result


def bipartition(g: PlaneGraph):
    """BFS two-coloring with color(0) = 1, or None if an odd cycle exists."""
    color = {0: 1}
    queue = [0]
    while queue:
        v = queue.pop(0)
        for w in g.neighbors[v]:
            if w not in color:
                color[w] = 3 - color[v]
                queue.append(w)
            elif color[w] == color[v]:
                return None
    return color


def odd_cycle(g: PlaneGraph):
    """A witness odd cycle (vertex list) when bipartition is absent."""
    parent = {0: None}
    depth = {0: 0}
    queue = [0]
    while queue:
        v = queue.pop(0)
        for w in g.neighbors[v]:
            if w not in depth:
                depth[w] = depth[v] + 1
                parent[w] = v
                queue.append(w)
            elif depth[w] % 2 == depth[v] % 2 and parent[v] != w:
                pa, pb = v, w
                left, right = [pa], [pb]
                while depth[pa] > depth[pb]:
                    pa = parent[pa]
                    left.append(pa)
                while depth[pb] > depth[pa]:
                    pb = parent[pb]
                    right.append(pb)
                while pa != pb:
                    pa, pb = parent[pa], parent[pb]
                    left.append(pa)
                    right.append(pb)
                return left + right[-2::-1]
    return None


def bridge_component_tree(g: PlaneGraph):
    """Components of g minus its outer bridges, with the bridging tree edges."""
    removed = outer_bridges(g)
    comp_of = [-1] * g.vertex_count
    components = []
    for start in range(g.vertex_count):
        if comp_of[start] != -1:
            continue
        cid = len(components)
        members = []
        stack = [start]
        comp_of[start] = cid
        while stack:
            v = stack.pop()
            members.append(v)
            for w in g.neighbors[v]:
                key = (min(v, w), max(v, w))
                if key in removed or comp_of[w] != -1:
                    continue
                comp_of[w] = cid
                stack.append(w)
        components.append(frozenset(members))

    tree_edges = []
    for u, v in sorted(removed):
        tree_edges.append((comp_of[u], comp_of[v], (u, v)))

    k = len(components)
    if len(tree_edges) != k - 1:
        raise InternalCycle(
            f"{k} components but {len(tree_edges)} bridge edges; expected a tree")
    # connectivity of the component graph
    adj = [[] for _ in range(k)]
    for i, j, _ in tree_edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    stack = [0]
    while stack:
        c = stack.pop()
        for d in adj[c]:
            if d not in seen:
                seen.add(d)
                stack.append(d)
    if len(seen) != k:
        raise InternalCycle("bridge-component graph is disconnected")
    return BridgeTree(tuple(components), tuple(tree_edges))


def induced_subgraph(g: PlaneGraph, vertex_ids):
    """Plane subgraph on the given vertices; returns (subgraph, old_of_new)."""
    old_ids = sorted(vertex_ids)
    new_of_old = {old: new for new, old in enumerate(old_ids)}
    verts = [g.vertices[old] for old in old_ids]
    edges = [(new_of_old[u], new_of_old[v]) for u, v in g.edges
             if u in new_of_old and v in new_of_old]
    return build_embedding(verts, edges), old_ids
