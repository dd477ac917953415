"""Seeded graph corpora for the property and acceptance suites."""

import math

import numpy as np
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial import Delaunay
import scipy.sparse as sp

from . import plane_graph as pg


def delaunay_graph(rng, n, scale=10.0):
    """Delaunay triangulation of n uniform random points."""
    pts = rng.uniform(0.0, scale, size=(n, 2))
    tri = Delaunay(pts)
    edges = set()
    for simplex in tri.simplices:
        for i in range(3):
            a, b = int(simplex[i]), int(simplex[(i + 1) % 3])
            edges.add((min(a, b), max(a, b)))
    return pg.build_embedding(pts.tolist(), sorted(edges))


def random_tree(rng, n, scale=10.0):
    """Euclidean minimum spanning tree of random points (edges never cross)."""
    pts = rng.uniform(0.0, scale, size=(n, 2))
    if n == 1:
        return pg.build_embedding(pts.tolist(), [])
    if n == 2:
        return pg.build_embedding(pts.tolist(), [(0, 1)])
    tri = Delaunay(pts)
    rows, cols, weights = [], [], []
    seen = set()
    for simplex in tri.simplices:
        for i in range(3):
            a, b = int(simplex[i]), int(simplex[(i + 1) % 3])
            key = (min(a, b), max(a, b))
            if key not in seen:
                seen.add(key)
                rows.append(key[0])
                cols.append(key[1])
                weights.append(math.dist(pts[key[0]], pts[key[1]]))
    graph = sp.coo_matrix((weights, (rows, cols)), shape=(n, n))
    mst = minimum_spanning_tree(graph).tocoo()
    edges = sorted((min(int(i), int(j)), max(int(i), int(j)))
                   for i, j in zip(mst.row, mst.col))
    return pg.build_embedding(pts.tolist(), edges)


def path_graph(n, spacing=1.0):
    verts = [(i * spacing, 0.0) for i in range(n)]
    return pg.build_embedding(verts, [(i, i + 1) for i in range(n - 1)])


def star_graph(n_leaves, radius=1.0):
    verts = [(0.0, 0.0)]
    for k in range(n_leaves):
        angle = 2.0 * math.pi * k / n_leaves
        verts.append((radius * math.cos(angle), radius * math.sin(angle)))
    return pg.build_embedding(verts, [(0, k + 1) for k in range(n_leaves)])


def cycle_graph(n, radius=1.0, center=(0.0, 0.0)):
    verts = [(center[0] + radius * math.cos(2 * math.pi * k / n),
              center[1] + radius * math.sin(2 * math.pi * k / n))
             for k in range(n)]
    return pg.build_embedding(verts, [(k, (k + 1) % n) for k in range(n)])


def grid_graph(rows, cols, spacing=1.0):
    verts = [(j * spacing, i * spacing) for i in range(rows) for j in range(cols)]
    edges = []
    for i in range(rows):
        for j in range(cols):
            v = i * cols + j
            if j + 1 < cols:
                edges.append((v, v + 1))
            if i + 1 < rows:
                edges.append((v, v + cols))
    return pg.build_embedding(verts, edges)


def cycle_chain(n_cycles, cycle_len=4, radius=1.0, gap=1.5):
    """Cycles in a row, consecutive ones joined by a bridge."""
    verts = []
    edges = []
    step = 2 * radius + gap
    anchors = []
    for c in range(n_cycles):
        base = len(verts)
        cx = c * step
        for k in range(cycle_len):
            angle = 2 * math.pi * k / cycle_len
            verts.append((cx + radius * math.cos(angle),
                          radius * math.sin(angle)))
        edges.extend((base + k, base + (k + 1) % cycle_len)
                     for k in range(cycle_len))
        rightmost = base + 0      # angle 0 vertex
        leftmost = base + cycle_len // 2
        anchors.append((leftmost, rightmost))
    for c in range(n_cycles - 1):
        edges.append((anchors[c][1], anchors[c + 1][0]))
    return pg.build_embedding(verts, sorted(set(edges)))


def bridged_grids(rows, cols, gap=2.0):
    """Two grids side by side joined by one bridge (bipartite)."""
    a = grid_graph(rows, cols)
    offset = (cols - 1) + gap
    verts = list(a.vertices) + [(x + offset, y) for x, y in a.vertices]
    n = a.vertex_count
    edges = list(a.edges) + [(u + n, v + n) for u, v in a.edges]
    edges.append((cols - 1, n))   # right end of row 0 to left end of row 0
    return pg.build_embedding(verts, sorted(edges))


def k3():
    return cycle_graph(3)


def k4_planar():
    verts = [(0.0, 0.0), (4.0, 0.0), (2.0, 3.0), (2.0, 1.0)]
    edges = [(0, 1), (1, 2), (2, 0), (0, 3), (1, 3), (2, 3)]
    return pg.build_embedding(verts, edges)


def combinatorics_corpus(seed=0, n_random=50):
    """Graphs for the combinatorial checks: Delaunay plus named small ones."""
    rng = np.random.default_rng(seed)
    graphs = []
    for k in range(n_random):
        n = int(rng.integers(4, 61))
        graphs.append((f"delaunay_{k}_n{n}", delaunay_graph(rng, n)))
    graphs.append(("k3", k3()))
    graphs.append(("k4_planar", k4_planar()))
    graphs.append(("path_2", path_graph(2)))
    graphs.append(("path_5", path_graph(5)))
    graphs.append(("path_9", path_graph(9)))
    graphs.append(("star_3", star_graph(3)))
    graphs.append(("star_7", star_graph(7)))
    graphs.append(("bridged_grids_2x3", bridged_grids(2, 3)))
    graphs.append(("cycle_chain_3x4", cycle_chain(3, 4)))
    return graphs


def bipartite_map_corpus(seed=0):
    """Bipartite plane graphs with cycles and bridges, for map existence."""
    rng = np.random.default_rng(seed + 1)
    graphs = [
        ("cycle_4", cycle_graph(4)),
        ("cycle_6", cycle_graph(6)),
        ("cycle_10", cycle_graph(10)),
        ("grid_2x2", grid_graph(2, 2)),
        ("grid_3x3", grid_graph(3, 3)),
        ("grid_3x5", grid_graph(3, 5)),
        ("grid_4x4", grid_graph(4, 4)),
        ("cycle_chain_2x4", cycle_chain(2, 4)),
        ("cycle_chain_3x4", cycle_chain(3, 4)),
        ("cycle_chain_4x6", cycle_chain(4, 6)),
        ("bridged_grids_2x3", bridged_grids(2, 3)),
        ("bridged_grids_3x3", bridged_grids(3, 3)),
        ("path_2", path_graph(2)),
        ("path_6", path_graph(6)),
        ("star_4", star_graph(4)),
        ("star_6", star_graph(6)),
    ]
    for k in range(4):
        n = int(rng.integers(5, 25))
        graphs.append((f"tree_{k}_n{n}", random_tree(rng, n)))
    return graphs


def tree_corpus(seed=0):
    """Trees whose tubular maps must already be valid downscaling maps."""
    rng = np.random.default_rng(seed + 2)
    graphs = [
        ("path_2", path_graph(2)),
        ("path_7", path_graph(7)),
        ("star_5", star_graph(5)),
    ]
    for k in range(5):
        n = int(rng.integers(3, 30))
        graphs.append((f"tree_{k}_n{n}", random_tree(rng, n)))
    return graphs
