"""Manufactured solutions, convergence studies and stability witnesses.

The two-strip domain [0,2]x[0,1] (left unit square color 1, right color 2) is
the built-in geometry for the solver checks; both built-in cases satisfy the
boundary conditions by construction and carry closed-form derivatives that a
finite-difference cross-check guards in the tests.
"""

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.linalg as dla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from shapely.geometry import Polygon

from . import darcy_mixed as dm
from . import expr as ex
from . import map_builder as mb
from . import mesh as gm
from . import plane_graph as pg
from .errors import InputError, TooLarge, UnknownCase

INF_SUP_DOF_CAP = 3000


def two_strip_map():
    """[0,2]x[0,1] split at x=1; left square color 1, right color 2."""
    g = pg.build_embedding([(0.5, 0.5), (1.5, 0.5)], [(0, 1)])
    left = mb.Region(0, Polygon([(0, 0), (1, 0), (1, 1), (0, 1)]), 1)
    right = mb.Region(1, Polygon([(1, 0), (2, 0), (2, 1), (1, 1)]), 2)
    built = mb.assemble_map(g, [left, right])
    report = mb.validate_map(built, g)
    assert report.passed, report.summary()
    return built, g


@dataclass
class ManufacturedCase:
    name: str
    geometry: mb.DownscalingMap
    coeffs: dm.Coefficients
    exact: dict = field(repr=False)   # expression trees, see _EXACT_KEYS

    def h0(self):
        return 0.25


_EXACT_KEYS = ("p1", "p2", "eta", "u1x", "u1y", "u2x", "u2y", "dp2dx", "dp2dy")

# step(x - 1): 0 left of the interface, 1 right of it; total at every interior
# quadrature point because volume rules never sample x = 1 exactly
_STEP = "(1 + (x - 1)/abs(x - 1))/2"

_M1_F_LEFT = "2*pi^2*sin(pi*x)*sin(pi*y)"
_M1_F_RIGHT = "2*pi^2*cos(pi*(x - 1))*cos(pi*y)"

_CASES = {
    "M0_constant": {
        "coeffs": dict(a="1", beta="1", gx="0", gy="0", F="0",
                       f_flux="-1", f_stress="1"),
        "exact": dict(p1="0", p2="1", eta="0", u1x="0", u1y="0",
                      u2x="0", u2y="0", dp2dx="0", dp2dy="0"),
    },
    "M1_trig": {
        "coeffs": dict(
            a="1", beta="1", gx="0", gy="0",
            F=f"{_M1_F_LEFT} + ({_STEP})*({_M1_F_RIGHT} - ({_M1_F_LEFT}))",
            f_flux=("-pi*cos(pi*x)*sin(pi*y) - pi*sin(pi*(x - 1))*cos(pi*y)"
                    " - cos(pi*(x - 1))*cos(pi*y)"),
            f_stress="cos(pi*(x - 1))*cos(pi*y) - sin(pi*x)*sin(pi*y)",
        ),
        "exact": dict(
            p1="sin(pi*x)*sin(pi*y)",
            p2="cos(pi*(x - 1))*cos(pi*y)",
            eta="-cos(pi*(x - 1))*cos(pi*y)",
            u1x="-pi*cos(pi*x)*sin(pi*y)",
            u1y="-pi*sin(pi*x)*cos(pi*y)",
            u2x="pi*sin(pi*(x - 1))*cos(pi*y)",
            u2y="pi*cos(pi*(x - 1))*sin(pi*y)",
            dp2dx="-pi*sin(pi*(x - 1))*cos(pi*y)",
            dp2dy="-pi*cos(pi*(x - 1))*sin(pi*y)",
        ),
    },
}


def builtin_case(name):
    """The built-in manufactured cases on the two-strip domain."""
    if name not in _CASES:
        raise UnknownCase(f"unknown case {name!r}; choose from {sorted(_CASES)}")
    recipe = _CASES[name]
    built, _ = two_strip_map()
    coeffs = dm.Coefficients.from_strings(**recipe["coeffs"])
    exact = {key: ex.parse(src) for key, src in recipe["exact"].items()}
    return ManufacturedCase(name=name, geometry=built, coeffs=coeffs, exact=exact)


# --- error norms ---------------------------------------------------------------

def _compiled(exact):
    return {key: ex.compile_vectorized(tree) for key, tree in exact.items()}


def error_norms(sol: dm.Solution, exact):
    """L2/H1 errors against the exact fields, order-4 quadrature."""
    lay = sol.layout
    mesh = lay.mesh
    fns = _compiled(exact)

    # color-1 side
    c1 = lay.p1_cells
    p1c, area1, _ = dm._cell_geometry(mesh, c1)
    signs1 = dm._rt_signs(mesh, c1)
    pts1 = dm._quad_points(p1c, dm.ERR_BARY)
    w1 = dm.ERR_W[None, :] * area1[:, None]
    rt = dm._rt_basis_at(p1c, area1, signs1, pts1)
    u1h = np.einsum("mqkd,mk->mqd", rt, sol.u1[lay.u1_of_facet[mesh.cell_facets[c1]]])
    u1e = np.stack([fns["u1x"](pts1[..., 0], pts1[..., 1]),
                    fns["u1y"](pts1[..., 0], pts1[..., 1])], axis=-1)
    e_u1 = math.sqrt(float(np.sum(w1 * ((u1h - u1e) ** 2).sum(axis=-1))))
    p1e = fns["p1"](pts1[..., 0], pts1[..., 1])
    e_p1 = math.sqrt(float(np.sum(w1 * (sol.p1[:, None] - p1e) ** 2)))

    # color-2 side
    c2 = lay.c2_cells
    p2c, area2, grads2 = dm._cell_geometry(mesh, c2)
    pts2 = dm._quad_points(p2c, dm.ERR_BARY)
    w2 = dm.ERR_W[None, :] * area2[:, None]
    lam = np.einsum("qk->kq", dm.ERR_BARY)
    p2_nodal = sol.p2[lay.p2_cell_dofs]
    p2h = np.einsum("mk,kq->mq", p2_nodal, lam)
    p2e = fns["p2"](pts2[..., 0], pts2[..., 1])
    e_p2 = math.sqrt(float(np.sum(w2 * (p2h - p2e) ** 2)))

    gp2h = np.einsum("mkd,mk->md", grads2, p2_nodal)
    gp2e = np.stack([fns["dp2dx"](pts2[..., 0], pts2[..., 1]),
                     fns["dp2dy"](pts2[..., 0], pts2[..., 1])], axis=-1)
    e_p2_h1 = math.sqrt(float(np.sum(
        w2 * ((gp2h[:, None, :] - gp2e) ** 2).sum(axis=-1))))

    u2h = dm.p1_gradients(lay, sol.eta)
    u2e = np.stack([fns["u2x"](pts2[..., 0], pts2[..., 1]),
                    fns["u2y"](pts2[..., 0], pts2[..., 1])], axis=-1)
    e_u2 = math.sqrt(float(np.sum(
        w2 * ((u2h[:, None, :] - u2e) ** 2).sum(axis=-1))))

    return {"u1_L2": e_u1, "p1_L2": e_p1, "p2_L2": e_p2,
            "p2_H1s": e_p2_h1, "u2_L2": e_u2}


# --- convergence ---------------------------------------------------------------

@dataclass
class ConvergenceRow:
    level: int
    h: float
    errors: dict
    solution_norm: float
    data_norm: float


@dataclass
class ConvergenceTable:
    case: str
    rows: list

    def rates(self):
        """Observed rates log2(e_h / e_{h/2}) between consecutive rows."""
        out = []
        for prev, cur in zip(self.rows, self.rows[1:]):
            rates = {}
            for key in prev.errors:
                e0, e1 = prev.errors[key], cur.errors[key]
                if e0 > 0 and e1 > 0:
                    rates[key] = math.log2(e0 / e1)
                else:
                    rates[key] = float("inf")
            out.append(rates)
        return out

    def stability_ratios(self):
        return [row.solution_norm / row.data_norm for row in self.rows
                if row.data_norm > 0]

    def to_csv(self):
        keys = ["u1_L2", "p1_L2", "p2_L2", "p2_H1s", "u2_L2"]
        header = ["level", "h"] + [f"e_{k}" for k in keys] + [f"rate_{k}" for k in keys]
        lines = [",".join(header)]
        rates = [None] + self.rates()
        for row, rate in zip(self.rows, rates):
            cells = [str(row.level), f"{row.h:.17g}"]
            cells += [f"{row.errors[k]:.17g}" for k in keys]
            cells += ["" if rate is None else f"{rate[k]:.17g}" for k in keys]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def solution_and_data_norms(sys: dm.SaddleSystem, sol: dm.Solution):
    """X*Y norm of the solution and dual norm of the data (stability witness)."""
    N_X, N_Y = norm_matrices(sys)
    x = np.concatenate([sol.u1, sol.p2])
    y = np.concatenate([sol.eta, sol.p1])
    xn = math.sqrt(float(x @ (N_X @ x)))
    yn = math.sqrt(float(y @ (N_Y @ y)))
    d1 = math.sqrt(float(sys.F1 @ spla.spsolve(N_X.tocsc(), sys.F1)))
    # dual norm on the constrained y space via a KKT solve
    lay = sys.layout
    Chat = sp.hstack([sys.eta_constraints,
                      sp.csr_matrix((lay.n_constraints, lay.n_p1))], format="csr")
    kkt = sp.bmat([[N_Y, Chat.T], [Chat, None]], format="csc")
    rhs = np.concatenate([sys.F2, np.zeros(lay.n_constraints)])
    w = spla.spsolve(kkt, rhs)[:lay.n_y]
    d2 = math.sqrt(max(float(sys.F2 @ w), 0.0))
    return xn + yn, d1 + d2


def norm_matrices(sys: dm.SaddleSystem):
    """Gram matrices of the X and Y norms in the discrete dof bases."""
    lay = sys.layout
    mesh = lay.mesh
    c1 = lay.p1_cells
    p1c, area1, _ = dm._cell_geometry(mesh, c1)
    signs1 = dm._rt_signs(mesh, c1)
    pts1 = dm._quad_points(p1c, dm.VOL_BARY)
    rt = dm._rt_basis_at(p1c, area1, signs1, pts1)
    w1 = dm.VOL_W[None, :] * area1[:, None]
    local = np.einsum("mq,mqid,mqjd->mij", w1, rt, rt)
    dofs = lay.u1_of_facet[mesh.cell_facets[c1]]
    rows = np.repeat(dofs, 3, axis=1).reshape(-1)
    cols = np.tile(dofs, (1, 3)).reshape(-1)
    M_rt = sp.coo_matrix((local.reshape(-1), (rows, cols)),
                         shape=(lay.n_u1, lay.n_u1)).tocsr()
    D = sys.B[lay.n_p2:, :lay.n_u1]
    W = sp.diags(1.0 / area1)
    Hdiv = (M_rt + D.T @ W @ D).tocsr()

    c2 = lay.c2_cells
    p2c, area2, grads2 = dm._cell_geometry(mesh, c2)
    gg = np.einsum("mid,mjd->mij", grads2, grads2)
    K1_local = gg * area2[:, None, None]
    mass_local = (np.ones((3, 3)) + np.eye(3))[None, :, :] * (area2 / 12.0)[:, None, None]
    rows2 = np.repeat(lay.p2_cell_dofs, 3, axis=1).reshape(-1)
    cols2 = np.tile(lay.p2_cell_dofs, (1, 3)).reshape(-1)
    K1 = sp.coo_matrix((K1_local.reshape(-1), (rows2, cols2)),
                       shape=(lay.n_p2, lay.n_p2)).tocsr()
    M2 = sp.coo_matrix((mass_local.reshape(-1), (rows2, cols2)),
                       shape=(lay.n_p2, lay.n_p2)).tocsr()

    N_X = sp.bmat([[Hdiv, None], [None, (M2 + K1)]], format="csr")
    N_Y = sp.bmat([[K1, None], [None, sp.diags(area1)]], format="csr")
    return N_X, N_Y


def run_convergence(case: ManufacturedCase, levels, h0=None):
    """Nested refinements, one solve per level, order-4 error integration."""
    if levels < 2:
        raise InputError("need at least 2 levels for a convergence study")
    if h0 is None:
        h0 = case.h0()
    mesh0 = gm.triangulate(case.geometry, h0)
    rows = []
    current = mesh0
    for level in range(levels):
        sys = dm.assemble(current, case.coeffs)
        sol = dm.solve(sys)
        errors = error_norms(sol, case.exact)
        sol_norm, data_norm = solution_and_data_norms(sys, sol)
        h = gm.mesh_quality(current)["h_max"]
        rows.append(ConvergenceRow(level=level, h=h, errors=errors,
                                   solution_norm=sol_norm, data_norm=data_norm))
        if level + 1 < levels:
            current = gm.refine(current)
    return ConvergenceTable(case=case.name, rows=rows)


# --- interface and conservation residuals ---------------------------------------

def interface_residuals(sol: dm.Solution, coeffs: dm.Coefficients, mesh: gm.Mesh):
    """Midpoint residuals of the flux balance and the stress balance on Gamma."""
    traces = dm.gamma_traces(sol)
    beta = ex.compile_vectorized(coeffs.beta)(traces.midpoints[:, 0],
                                              traces.midpoints[:, 1])
    fflux = ex.compile_vectorized(coeffs.f_flux)(traces.midpoints[:, 0],
                                                 traces.midpoints[:, 1])
    fstress = ex.compile_vectorized(coeffs.f_stress)(traces.midpoints[:, 0],
                                                     traces.midpoints[:, 1])
    r_flux = np.abs(traces.u1_n - traces.u2_n - beta * traces.p2 - fflux)
    r_stress = np.abs(traces.p2 - traces.p1 - fstress)
    return {"r_flux": float(r_flux.max(initial=0.0)),
            "r_stress": float(r_stress.max(initial=0.0))}


def conservation_residual(sol: dm.Solution, coeffs: dm.Coefficients, mesh: gm.Mesh):
    """Max over color-1 cells of |sum of signed facet fluxes - integral of F|."""
    lay = sol.layout
    c1 = lay.p1_cells
    p1c, area1, _ = dm._cell_geometry(mesh, c1)
    signs1 = dm._rt_signs(mesh, c1)
    pts1 = dm._quad_points(p1c, dm.VOL_BARY)
    w1 = dm.VOL_W[None, :] * area1[:, None]
    F_cell = np.einsum("mq,mq->m",
                       w1, ex.compile_vectorized(coeffs.F)(pts1[..., 0], pts1[..., 1]))
    flux_sum = np.einsum("mk,mk->m", signs1, sol.u1[lay.u1_of_facet[mesh.cell_facets[c1]]])
    return float(np.abs(flux_sum - F_cell).max(initial=0.0))


# --- inf-sup and coercivity -------------------------------------------------------

def _eta_nullspace_basis(lay):
    """Dense basis of the per-region zero-mean eta space, block by region."""
    n = lay.n_p2
    _, area2, _ = dm._cell_geometry(lay.mesh, lay.c2_cells)
    mass_row = np.zeros(n)
    np.add.at(mass_row, lay.p2_cell_dofs.reshape(-1),
              np.repeat(area2 / 3.0, 3))
    Z = np.zeros((n, n - lay.n_constraints))
    col = 0
    for r in range(lay.n_constraints):
        idx = np.nonzero(lay.p2_region_index == r)[0]
        basis = dla.null_space(mass_row[idx][None, :])
        Z[idx, col:col + basis.shape[1]] = basis
        col += basis.shape[1]
    assert col == n - lay.n_constraints
    return Z


def inf_sup_estimate(mesh: gm.Mesh, coeffs: dm.Coefficients = None):
    """Smallest generalized singular value of B w.r.t. the X and Y norms."""
    if coeffs is None:
        coeffs = dm.Coefficients.from_strings()
    sys = dm.assemble(mesh, coeffs)
    lay = sys.layout
    total = lay.n_x + lay.n_y
    if total > INF_SUP_DOF_CAP:
        raise TooLarge(f"{total} dofs exceed the dense eigensolver cap {INF_SUP_DOF_CAP}")
    N_X, N_Y = norm_matrices(sys)
    B = sys.B.toarray()
    Zeta = _eta_nullspace_basis(lay)
    Z = dla.block_diag(Zeta, np.eye(lay.n_p1))
    BtZ = B.T @ Z                                     # (n_x, n_yz)
    G = BtZ.T @ dla.solve(N_X.toarray(), BtZ, assume_a="pos")
    Nyz = Z.T @ (N_Y.toarray() @ Z)
    vals = dla.eigvalsh(G, Nyz)
    return float(math.sqrt(max(vals[0], 0.0)))


def coercivity_witness(sys: dm.SaddleSystem, n_samples=20, seed=0):
    """Min Rayleigh quotient of A over random discrete kernel vectors of B."""
    lay = sys.layout
    total = lay.n_x + lay.n_y
    if total > INF_SUP_DOF_CAP:
        raise TooLarge(f"{total} dofs exceed the dense kernel-sampling cap")
    B = sys.B.toarray()
    kernel = dla.null_space(B)
    if kernel.shape[1] == 0:
        return float("inf")
    N_X, _ = norm_matrices(sys)
    N_X = N_X.toarray()
    A_sym = 0.5 * (sys.A + sys.A.T).toarray()
    rng = np.random.default_rng(seed)
    worst = math.inf
    for _ in range(n_samples):
        x = kernel @ rng.standard_normal(kernel.shape[1])
        num = float(x @ (A_sym @ x))
        den = float(x @ (N_X @ x))
        worst = min(worst, num / den)
    return worst


def coercivity_lower_bound(mesh: gm.Mesh, coeffs: dm.Coefficients):
    """min(ess-inf 1/a, beta-mass/|Omega_2|) computed from quadrature samples."""
    lay = dm.build_layout(mesh)
    p2c, area2, _ = dm._cell_geometry(mesh, lay.c2_cells)
    pts2 = dm._quad_points(p2c, dm.VOL_BARY)
    a_fn = ex.compile_vectorized(coeffs.a)
    a_max = float(np.max(a_fn(pts2[..., 0], pts2[..., 1])))
    p1c, area1, _ = dm._cell_geometry(mesh, lay.p1_cells)
    pts1 = dm._quad_points(p1c, dm.VOL_BARY)
    a_max = max(a_max, float(np.max(a_fn(pts1[..., 0], pts1[..., 1]))))
    sys = dm.assemble(mesh, coeffs)
    beta_mass = sum(sys.beta_region_mass.values())
    omega2 = float(np.sum(area2))
    return min(1.0 / a_max, beta_mass / omega2)
