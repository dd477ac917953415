"""graphdarcy: plane-graph domain maps and a coupled mixed Darcy solver.

Pipeline: plane graph -> partitioned polygonal domain (downscaling or tubular
map) -> conforming triangulation -> saddle-point solve of the coupled Darcy
system on the two-color partition -> verification (conservation, interface
balances, inf-sup stability, manufactured-solution convergence).
"""

from .plane_graph import (
    PlaneGraph,
    bipartition,
    bridge_component_tree,
    bridges,
    build_embedding,
    double_dual_isomorphic,
    dual,
    faces,
    outer_bridges,
)
from .map_builder import (
    DownscalingMap,
    InterfaceSegment,
    Region,
    auto_epsilon,
    barycentric_regions,
    downscaling_map,
    tubular_map,
    validate_map,
)
from .mesh import Mesh, mesh_quality, refine, triangulate
from .darcy_mixed import (
    Coefficients,
    DofLayout,
    SaddleSystem,
    Solution,
    assemble,
    build_layout,
    postprocess,
    project_onto_V,
    solve,
)
from .verify import (
    ManufacturedCase,
    builtin_case,
    conservation_residual,
    inf_sup_estimate,
    interface_residuals,
    run_convergence,
    two_strip_map,
)

__version__ = "0.1.0"

__all__ = [
    "PlaneGraph", "build_embedding", "faces", "dual", "double_dual_isomorphic",
    "bridges", "outer_bridges", "bipartition", "bridge_component_tree",
    "Region", "InterfaceSegment", "DownscalingMap", "auto_epsilon",
    "tubular_map", "barycentric_regions", "downscaling_map", "validate_map",
    "Mesh", "triangulate", "refine", "mesh_quality",
    "Coefficients", "DofLayout", "SaddleSystem", "Solution", "build_layout",
    "assemble", "solve", "project_onto_V", "postprocess",
    "ManufacturedCase", "builtin_case", "run_convergence", "two_strip_map",
    "interface_residuals", "conservation_residual", "inf_sup_estimate",
]
