"""Discrete spaces, assembly and solve for the coupled mixed Darcy system.

Unknowns: x = [u1, p2] with u1 in the lowest-order facet-flux H_div space on
the color-1 cells (dof = integrated normal flux through a facet, positive
along the stored facet normal) and p2 continuous piecewise linear per color-2
region; y = [u2, p1] with u2 = grad(eta) for a nodal potential eta with zero
mean on every color-2 region, and p1 piecewise constant per color-1 cell.

Blocks follow the operator definitions

    A[v1,q2]([w1,r2]) = (a v1, w1)_O1 + <beta q2, r2>_G - <(v1.n) r2>_G + <q2 (w1.n)>_G
    B[v1,q2]([w2,r1]) = (div v1, r1)_O1 + (grad q2, w2)_O2
    C[v2,q1]([w2,r1]) = (a v2, w2)_O2

and the solved linear system is the one of the weak equations,

    A x - B^T y = F1,      B x + C y = F2,

whose solution recovers div u1 = F, a u1 + grad p1 + g = 0, the interface
flux/stress balances and the outer boundary conditions with the stated signs.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import expr as ex
from . import mesh as gm
from .errors import (
    AllZeroBeta,
    EmptyColorClass,
    NonPositiveA,
    QuadratureDomainError,
    ResidualTooLarge,
    SingularNeumann,
    SingularSystem,
    ValidationError,
)

A_FLOOR = 1e-12

# order-2 volume rule, strictly interior points
VOL_BARY = np.array([[2 / 3, 1 / 6, 1 / 6],
                     [1 / 6, 2 / 3, 1 / 6],
                     [1 / 6, 1 / 6, 2 / 3]])
VOL_W = np.array([1 / 3, 1 / 3, 1 / 3])

# order-4 volume rule (6 points), used for error integration
ERR_BARY = np.array([
    [0.108103018168070, 0.445948490915965, 0.445948490915965],
    [0.445948490915965, 0.108103018168070, 0.445948490915965],
    [0.445948490915965, 0.445948490915965, 0.108103018168070],
    [0.816847572980459, 0.091576213509771, 0.091576213509771],
    [0.091576213509771, 0.816847572980459, 0.091576213509771],
    [0.091576213509771, 0.091576213509771, 0.816847572980459],
])
ERR_W = np.array([0.223381589678011] * 3 + [0.109951743655322] * 3)

# 2-point Gauss on [0, 1]
GAUSS2_T = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
GAUSS2_W = np.array([0.5, 0.5])


@dataclass
class Coefficients:
    a: tuple
    beta: tuple
    g: tuple          # pair of expression trees
    F: tuple
    f_flux: tuple
    f_stress: tuple

    @classmethod
    def from_strings(cls, a="1", beta="1", gx="0", gy="0", F="0",
                     f_flux="0", f_stress="0"):
        return cls(a=ex.parse(a), beta=ex.parse(beta),
                   g=(ex.parse(gx), ex.parse(gy)), F=ex.parse(F),
                   f_flux=ex.parse(f_flux), f_stress=ex.parse(f_stress))


def _field(tree, name):
    fn = ex.compile_vectorized(tree)

    def run(x, y):
        out = fn(x, y)
        if not np.all(np.isfinite(out)):
            raise QuadratureDomainError(f"{name} evaluated to a non-finite value")
        return out

    return run


@dataclass
class DofLayout:
    mesh: gm.Mesh
    u1_facets: np.ndarray     # facet ids carrying a flux dof
    u1_of_facet: np.ndarray   # facet id -> u1 dof (-1 if none)
    p1_cells: np.ndarray      # color-1 cell ids
    p1_of_cell: np.ndarray    # cell id -> p1 dof (-1)
    c2_cells: np.ndarray      # color-2 cell ids
    p2_entities: tuple        # sorted (region, node) pairs
    p2_cell_dofs: np.ndarray  # (len(c2_cells), 3) entity dof per local vertex
    region2_ids: tuple        # sorted color-2 region ids
    p2_region_index: np.ndarray  # entity -> index into region2_ids
    p2_index: dict            # (region, node) -> entity dof

    @property
    def n_u1(self):
        return len(self.u1_facets)

    @property
    def n_p1(self):
        return len(self.p1_cells)

    @property
    def n_p2(self):
        return len(self.p2_entities)

    @property
    def n_constraints(self):
        return len(self.region2_ids)

    @property
    def n_x(self):
        return self.n_u1 + self.n_p2

    @property
    def n_y(self):
        return self.n_p2 + self.n_p1


def build_layout(mesh: gm.Mesh):
    """Deterministic dof numbering; needs both color classes nonempty."""
    c1_cells = np.nonzero(mesh.cell_color == 1)[0]
    c2_cells = np.nonzero(mesh.cell_color == 2)[0]
    if len(c1_cells) == 0 or len(c2_cells) == 0:
        raise EmptyColorClass(
            f"need both colors; got {len(c1_cells)} color-1 and "
            f"{len(c2_cells)} color-2 cells")

    is_c1 = mesh.cell_color == 1
    u1_mask = np.zeros(mesh.facet_count, dtype=bool)
    for c in c1_cells:
        u1_mask[mesh.cell_facets[c]] = True
    u1_facets = np.nonzero(u1_mask)[0]
    u1_of_facet = np.full(mesh.facet_count, -1, dtype=int)
    u1_of_facet[u1_facets] = np.arange(len(u1_facets))

    p1_of_cell = np.full(mesh.cell_count, -1, dtype=int)
    p1_of_cell[c1_cells] = np.arange(len(c1_cells))

    entities = sorted({(int(mesh.cell_region[c]), int(node))
                       for c in c2_cells for node in mesh.cells[c]})
    index = {ent: k for k, ent in enumerate(entities)}
    p2_cell_dofs = np.empty((len(c2_cells), 3), dtype=int)
    for row, c in enumerate(c2_cells):
        region = int(mesh.cell_region[c])
        for k in range(3):
            p2_cell_dofs[row, k] = index[(region, int(mesh.cells[c, k]))]

    region2_ids = tuple(sorted({int(mesh.cell_region[c]) for c in c2_cells}))
    region_pos = {r: i for i, r in enumerate(region2_ids)}
    p2_region_index = np.array([region_pos[r] for r, _ in entities], dtype=int)

    return DofLayout(mesh=mesh, u1_facets=u1_facets, u1_of_facet=u1_of_facet,
                     p1_cells=c1_cells, p1_of_cell=p1_of_cell, c2_cells=c2_cells,
                     p2_entities=tuple(entities), p2_cell_dofs=p2_cell_dofs,
                     region2_ids=region2_ids, p2_region_index=p2_region_index,
                     p2_index=index)


# --- geometry helpers --------------------------------------------------------

def _cell_geometry(mesh, cells):
    """Vertex coords, areas, P1 gradients for the given cells."""
    p = mesh.nodes[mesh.cells[cells]]                    # (m, 3, 2)
    v1 = p[:, 1] - p[:, 0]
    v2 = p[:, 2] - p[:, 0]
    area = 0.5 * (v1[:, 0] * v2[:, 1] - v1[:, 1] * v2[:, 0])
    grads = np.empty((len(cells), 3, 2))
    for k in range(3):
        a = p[:, (k + 1) % 3]
        b = p[:, (k + 2) % 3]
        # grad of the hat function at vertex k: rot90(b - a) / (2 area)
        grads[:, k, 0] = (a[:, 1] - b[:, 1]) / (2.0 * area)
        grads[:, k, 1] = (b[:, 0] - a[:, 0]) / (2.0 * area)
    return p, area, grads


def _rt_signs(mesh, cells):
    """Orientation sign per (cell, local facet): +1 when the stored facet
    normal points out of the cell."""
    centroids = mesh.nodes[mesh.cells[cells]].mean(axis=1)
    signs = np.empty((len(cells), 3))
    for k in range(3):
        f = mesh.cell_facets[cells, k]
        mids = 0.5 * (mesh.nodes[mesh.facets[f, 0]] + mesh.nodes[mesh.facets[f, 1]])
        n = mesh.facet_normal[f]
        out = ((mids - centroids) * n).sum(axis=1)
        signs[:, k] = np.where(out > 0, 1.0, -1.0)
    return signs


def _quad_points(p, bary):
    """(m, q, 2) physical quadrature points from barycentric coordinates."""
    return np.einsum("qk,mkd->mqd", bary, p)


def _rt_basis_at(p, area, signs, pts):
    """(m, q, 3dof, 2) values of the facet-flux basis at the given points."""
    m, q = pts.shape[:2]
    vals = np.empty((m, q, 3, 2))
    for k in range(3):
        opp = p[:, k]                                    # (m, 2)
        vals[:, :, k, :] = (pts - opp[:, None, :]) \
            * (signs[:, k] / (2.0 * area))[:, None, None]
    return vals


# --- saddle system -----------------------------------------------------------

@dataclass
class SaddleSystem:
    A: sp.csr_matrix          # x-by-x
    B: sp.csr_matrix          # y-by-x
    C: sp.csr_matrix          # y-by-y
    F1: np.ndarray
    F2: np.ndarray
    eta_constraints: sp.csr_matrix   # per-region zero-mean rows on the eta block
    layout: DofLayout
    beta_region_mass: dict    # region id -> integrated beta on its interface


@dataclass
class Solution:
    u1: np.ndarray            # facet fluxes (integrated, along stored normals)
    p1: np.ndarray            # cell values on color-1 cells
    p2: np.ndarray            # nodal values per (region, node)
    eta: np.ndarray           # u2 potential, zero mean per color-2 region
    multipliers: np.ndarray
    residual: float
    layout: DofLayout


def assemble(mesh: gm.Mesh, coeffs: Coefficients):
    """Volume integrals by the order-2 rule, facet integrals by 2-point Gauss."""
    layout = build_layout(mesh)
    a_fn = _field(coeffs.a, "a")
    beta_fn = _field(coeffs.beta, "beta")
    gx_fn = _field(coeffs.g[0], "g_x")
    gy_fn = _field(coeffs.g[1], "g_y")
    F_fn = _field(coeffs.F, "F")
    fflux_fn = _field(coeffs.f_flux, "f_flux")
    fstress_fn = _field(coeffs.f_stress, "f_stress")

    n_u1, n_p1, n_p2 = layout.n_u1, layout.n_p1, layout.n_p2

    # --- color-1 side: RT mass with coefficient a, divergence, g load
    c1 = layout.p1_cells
    p1c, area1, _ = _cell_geometry(mesh, c1)
    signs1 = _rt_signs(mesh, c1)
    pts1 = _quad_points(p1c, VOL_BARY)
    a_vals1 = a_fn(pts1[..., 0], pts1[..., 1])
    if np.min(a_vals1) < A_FLOOR:
        raise NonPositiveA(f"a = {np.min(a_vals1):.3e} at a quadrature point of Omega_1")
    rt = _rt_basis_at(p1c, area1, signs1, pts1)          # (m, q, 3, 2)
    w1 = VOL_W[None, :] * area1[:, None]                 # (m, q)
    local_mass = np.einsum("mq,mqid,mqjd->mij", w1 * a_vals1, rt, rt)

    u1_dofs_per_cell = layout.u1_of_facet[mesh.cell_facets[c1]]   # (m, 3)
    assert (u1_dofs_per_cell >= 0).all()
    rows = np.repeat(u1_dofs_per_cell, 3, axis=1).reshape(-1)
    cols = np.tile(u1_dofs_per_cell, (1, 3)).reshape(-1)
    M_a = sp.coo_matrix((local_mass.reshape(-1), (rows, cols)),
                        shape=(n_u1, n_u1)).tocsr()

    D = sp.coo_matrix(
        (signs1.reshape(-1),
         (np.repeat(np.arange(n_p1), 3), u1_dofs_per_cell.reshape(-1))),
        shape=(n_p1, n_u1)).tocsr()

    gvals1 = np.stack([gx_fn(pts1[..., 0], pts1[..., 1]),
                       gy_fn(pts1[..., 0], pts1[..., 1])], axis=-1)
    load_v1_local = -np.einsum("mq,mqid,mqd->mi", w1, rt, gvals1)
    F_v1 = np.zeros(n_u1)
    np.add.at(F_v1, u1_dofs_per_cell.reshape(-1), load_v1_local.reshape(-1))

    F_r1 = np.einsum("mq,mq->m", w1, F_fn(pts1[..., 0], pts1[..., 1]))

    # --- color-2 side: P1 stiffness (unit and a-weighted), mass rows, loads
    c2 = layout.c2_cells
    p2c, area2, grads2 = _cell_geometry(mesh, c2)
    pts2 = _quad_points(p2c, VOL_BARY)
    a_vals2 = a_fn(pts2[..., 0], pts2[..., 1])
    if np.min(a_vals2) < A_FLOOR:
        raise NonPositiveA(f"a = {np.min(a_vals2):.3e} at a quadrature point of Omega_2")
    w2 = VOL_W[None, :] * area2[:, None]

    gg = np.einsum("mid,mjd->mij", grads2, grads2)
    K1_local = gg * area2[:, None, None]
    Ka_local = gg * np.einsum("mq->m", w2 * a_vals2)[:, None, None]

    rows2 = np.repeat(layout.p2_cell_dofs, 3, axis=1).reshape(-1)
    cols2 = np.tile(layout.p2_cell_dofs, (1, 3)).reshape(-1)
    K1 = sp.coo_matrix((K1_local.reshape(-1), (rows2, cols2)),
                       shape=(n_p2, n_p2)).tocsr()
    K_a = sp.coo_matrix((Ka_local.reshape(-1), (rows2, cols2)),
                        shape=(n_p2, n_p2)).tocsr()

    lam2 = np.einsum("qk->kq", VOL_BARY)                 # hat values at quad pts
    Fq = F_fn(pts2[..., 0], pts2[..., 1])
    load_q2_local = np.einsum("mq,kq->mk", w2 * Fq, lam2)
    F_q2 = np.zeros(n_p2)
    np.add.at(F_q2, layout.p2_cell_dofs.reshape(-1), load_q2_local.reshape(-1))

    gvals2 = np.stack([gx_fn(pts2[..., 0], pts2[..., 1]),
                       gy_fn(pts2[..., 0], pts2[..., 1])], axis=-1)
    load_zeta_local = -np.einsum("mq,mkd,mqd->mk", w2, grads2, gvals2)
    F_zeta = np.zeros(n_p2)
    np.add.at(F_zeta, layout.p2_cell_dofs.reshape(-1), load_zeta_local.reshape(-1))

    # per-region zero-mean constraint rows for eta
    Cm = sp.lil_matrix((layout.n_constraints, n_p2))
    for row, c in enumerate(c2):
        for k in range(3):
            dof = layout.p2_cell_dofs[row, k]
            Cm[layout.p2_region_index[dof], dof] += area2[row] / 3.0
    Cm = Cm.tocsr()

    # --- interface terms
    gamma = np.nonzero(mesh.facet_class == gm.GAMMA)[0]
    T = sp.lil_matrix((n_p2, n_u1))
    S_rows, S_cols, S_vals = [], [], []
    beta_region_mass = {int(r): 0.0 for r in layout.region2_ids}
    beta_total = 0.0
    for f in gamma:
        c0, c1_ = mesh.facet_cells[f]
        cell1 = c0 if mesh.cell_color[c0] == 1 else c1_
        cell2 = c1_ if cell1 == c0 else c0
        if mesh.cell_color[cell1] != 1 or mesh.cell_color[cell2] != 2:
            raise ValidationError("gamma facet without a color-1/color-2 pair")
        region2 = int(mesh.cell_region[cell2])
        na, nb = int(mesh.facets[f, 0]), int(mesh.facets[f, 1])
        pa, pb = mesh.nodes[na], mesh.nodes[nb]
        length = float(np.hypot(*(pb - pa)))
        dof_u = layout.u1_of_facet[f]
        dof_a = layout.p2_index[(region2, na)]
        dof_b = layout.p2_index[(region2, nb)]

        # T: integral of (phi_f . n) lambda_i = 1/2 per endpoint (exact)
        T[dof_a, dof_u] += 0.5
        T[dof_b, dof_u] += 0.5

        qx = pa[0] + GAUSS2_T * (pb[0] - pa[0])
        qy = pa[1] + GAUSS2_T * (pb[1] - pa[1])
        bvals = beta_fn(qx, qy)
        if np.min(bvals) < 0.0:
            raise ValidationError(f"beta < 0 on interface facet {f}")
        wq = GAUSS2_W * length
        lam_a = 1.0 - GAUSS2_T
        lam_b = GAUSS2_T
        for (di, li) in ((dof_a, lam_a), (dof_b, lam_b)):
            for (dj, lj) in ((dof_a, lam_a), (dof_b, lam_b)):
                S_rows.append(di)
                S_cols.append(dj)
                S_vals.append(float(np.sum(wq * bvals * li * lj)))
        mass = float(np.sum(wq * bvals))
        beta_region_mass[region2] += mass
        beta_total += mass

        # loads: -<f_flux, q2> and <f_stress, (v1.n)>
        fl = fflux_fn(qx, qy)
        F_q2[dof_a] -= float(np.sum(wq * fl * lam_a))
        F_q2[dof_b] -= float(np.sum(wq * fl * lam_b))
        fs = fstress_fn(qx, qy)
        F_v1[dof_u] += float(np.sum(wq * fs)) / length

    if beta_total <= 0.0:
        raise AllZeroBeta("integrated beta over the interface network is zero")

    T = T.tocsr()
    S_beta = sp.coo_matrix((S_vals, (S_rows, S_cols)), shape=(n_p2, n_p2)).tocsr()

    A = sp.bmat([[M_a, T.T], [-T, S_beta]], format="csr")
    B = sp.bmat([[None, K1], [D, None]], format="csr")
    C = sp.bmat([[K_a, None],
                 [None, sp.csr_matrix((n_p1, n_p1))]], format="csr")
    F1 = np.concatenate([F_v1, F_q2])
    F2 = np.concatenate([F_zeta, F_r1])
    return SaddleSystem(A=A, B=B, C=C, F1=F1, F2=F2, eta_constraints=Cm,
                        layout=layout, beta_region_mass=beta_region_mass)


def full_system(sys: SaddleSystem):
    """The solved linear system: weak-equation signs plus constraint rows."""
    lay = sys.layout
    n_lam = lay.n_constraints
    Chat = sp.hstack([sys.eta_constraints,
                      sp.csr_matrix((n_lam, lay.n_p1))], format="csr")
    M = sp.bmat([[sys.A, -sys.B.T, None],
                 [sys.B, sys.C, Chat.T],
                 [None, Chat, None]], format="csc")
    rhs = np.concatenate([sys.F1, sys.F2, np.zeros(n_lam)])
    return M, rhs


def solve(sys: SaddleSystem, residual_tol=1e-10):
    """Sparse direct solve with a post-solve relative residual check."""
    lay = sys.layout
    M, rhs = full_system(sys)
    with np.errstate(all="ignore"):
        z = spla.spsolve(M, rhs)
    if not np.all(np.isfinite(z)):
        zero_beta = [r for r, m in sys.beta_region_mass.items() if m <= 0.0]
        hints = []
        if zero_beta:
            hints.append(f"regions {zero_beta} have zero interface beta mass")
        raise SingularSystem("direct solve failed" +
                             ("; " + "; ".join(hints) if hints else ""))
    scale = float(np.linalg.norm(rhs))
    res = float(np.linalg.norm(M @ z - rhs)) / (scale if scale > 0 else 1.0)
    if res > residual_tol:
        raise ResidualTooLarge(f"relative residual {res:.3e} > {residual_tol:.1e}")
    n_u1, n_p2, n_p1 = lay.n_u1, lay.n_p2, lay.n_p1
    u1 = z[:n_u1]
    p2 = z[n_u1:n_u1 + n_p2]
    eta = z[n_u1 + n_p2:n_u1 + 2 * n_p2]
    p1 = z[n_u1 + 2 * n_p2:n_u1 + 2 * n_p2 + n_p1]
    lam = z[n_u1 + 2 * n_p2 + n_p1:]
    return Solution(u1=u1, p1=p1, p2=p2, eta=eta, multipliers=lam,
                    residual=res, layout=lay)


# --- derived fields -----------------------------------------------------------

def p1_gradients(layout, values):
    """Cellwise gradient of a p2-layout nodal field; rows follow c2_cells."""
    _, _, grads = _cell_geometry(layout.mesh, layout.c2_cells)
    return np.einsum("mkd,mk->md", grads, values[layout.p2_cell_dofs])


@dataclass
class GammaTraces:
    facets: np.ndarray
    midpoints: np.ndarray
    length: np.ndarray
    u1_n: np.ndarray
    u2_n: np.ndarray
    p1: np.ndarray
    p2: np.ndarray


def gamma_traces(sol: Solution):
    """Interface traces of the discrete solution at facet midpoints."""
    lay = sol.layout
    mesh = lay.mesh
    gamma = np.nonzero(mesh.facet_class == gm.GAMMA)[0]
    u2_cells = p1_gradients(lay, sol.eta)
    row_of_c2 = {int(c): i for i, c in enumerate(lay.c2_cells)}

    mids = np.empty((len(gamma), 2))
    lens = np.empty(len(gamma))
    u1n = np.empty(len(gamma))
    u2n = np.empty(len(gamma))
    p1t = np.empty(len(gamma))
    p2t = np.empty(len(gamma))
    for i, f in enumerate(gamma):
        na, nb = mesh.facets[f]
        pa, pb = mesh.nodes[na], mesh.nodes[nb]
        lens[i] = np.hypot(*(pb - pa))
        mids[i] = 0.5 * (pa + pb)
        c0, c1 = mesh.facet_cells[f]
        cell1 = c0 if mesh.cell_color[c0] == 1 else c1
        cell2 = c1 if cell1 == c0 else c0
        u1n[i] = sol.u1[lay.u1_of_facet[f]] / lens[i]
        u2n[i] = float(np.dot(u2_cells[row_of_c2[int(cell2)]], mesh.facet_normal[f]))
        p1t[i] = sol.p1[lay.p1_of_cell[cell1]]
        region2 = int(mesh.cell_region[cell2])
        da = lay.p2_index[(region2, int(na))]
        db = lay.p2_index[(region2, int(nb))]
        p2t[i] = 0.5 * (sol.p2[da] + sol.p2[db])
    return GammaTraces(facets=gamma, midpoints=mids, length=lens,
                       u1_n=u1n, u2_n=u2n, p1=p1t, p2=p2t)


def postprocess(sol: Solution):
    """Cell vector fields and interface traces for export and checks."""
    lay = sol.layout
    mesh = lay.mesh
    c1 = lay.p1_cells
    p1c, area1, _ = _cell_geometry(mesh, c1)
    signs1 = _rt_signs(mesh, c1)
    centroids = p1c.mean(axis=1)
    rt = _rt_basis_at(p1c, area1, signs1, centroids[:, None, :])[:, 0]  # (m,3,2)
    u1_cell = np.einsum("mkd,mk->md", rt, sol.u1[lay.u1_of_facet[mesh.cell_facets[c1]]])
    u2_cell = p1_gradients(lay, sol.eta)
    return {
        "u1_cells": c1, "u1_vectors": u1_cell,
        "u2_cells": lay.c2_cells, "u2_vectors": u2_cell,
        "gamma": gamma_traces(sol),
    }


# --- projection onto V(Omega_2) -----------------------------------------------

@dataclass
class ProjectionResult:
    layout: DofLayout
    xi: np.ndarray            # homogeneous-Dirichlet potential
    eta: np.ndarray           # zero-mean Neumann potential

    def projected(self):
        """P v = grad(xi) + grad(eta), constant per color-2 cell."""
        return p1_gradients(self.layout, self.xi + self.eta)


def _p2_boundary_entities(layout):
    """Entity dofs on the boundary of the color-2 submesh (Gamma and outer)."""
    mesh = layout.mesh
    c2_set = set(int(c) for c in layout.c2_cells)
    boundary = set()
    for f in range(mesh.facet_count):
        if mesh.facet_class[f] == gm.INTERIOR:
            continue
        for c in mesh.facet_cells[f]:
            if c >= 0 and int(c) in c2_set:
                region = int(mesh.cell_region[c])
                for node in mesh.facets[f]:
                    boundary.add(layout.p2_index[(region, int(node))])
    return boundary


def project_onto_V(mesh: gm.Mesh, v_exprs, layout=None):
    """Split a vector field into grad(xi) + grad(eta) + remainder.

    xi solves the homogeneous-Dirichlet problem on the color-2 submesh, eta
    the per-region zero-mean Neumann problem; both right-hand sides are
    assembled as (v, grad q) so the discrete projection grad(xi + eta) is
    L2-orthogonal to the remainder by construction.
    """
    if layout is None:
        layout = build_layout(mesh)
    vx_fn = _field(v_exprs[0], "v_x")
    vy_fn = _field(v_exprs[1], "v_y")

    c2 = layout.c2_cells
    p2c, area2, grads2 = _cell_geometry(mesh, c2)
    pts2 = _quad_points(p2c, VOL_BARY)
    w2 = VOL_W[None, :] * area2[:, None]
    vvals = np.stack([vx_fn(pts2[..., 0], pts2[..., 1]),
                      vy_fn(pts2[..., 0], pts2[..., 1])], axis=-1)

    n_p2 = layout.n_p2
    gg = np.einsum("mid,mjd->mij", grads2, grads2)
    K_local = gg * area2[:, None, None]
    rows2 = np.repeat(layout.p2_cell_dofs, 3, axis=1).reshape(-1)
    cols2 = np.tile(layout.p2_cell_dofs, (1, 3)).reshape(-1)
    K = sp.coo_matrix((K_local.reshape(-1), (rows2, cols2)),
                      shape=(n_p2, n_p2)).tocsr()

    load_local = np.einsum("mq,mkd,mqd->mk", w2, grads2, vvals)
    b = np.zeros(n_p2)
    np.add.at(b, layout.p2_cell_dofs.reshape(-1), load_local.reshape(-1))

    # Dirichlet problem for xi
    boundary = _p2_boundary_entities(layout)
    free = np.array([i for i in range(n_p2) if i not in boundary], dtype=int)
    xi = np.zeros(n_p2)
    if len(free):
        K_ff = K[free][:, free]
        xi[free] = spla.spsolve(K_ff.tocsc(), b[free])

    # Neumann problem for eta with per-region zero mean
    b_eta = b - K @ xi
    # discrete compatibility: constants per region are in the kernel of K and
    # exactly annihilate b_eta
    for r in range(layout.n_constraints):
        mask = layout.p2_region_index == r
        comp = float(np.sum(b_eta[mask]))
        scale = float(np.linalg.norm(b_eta)) + 1e-30
        if abs(comp) > 1e-8 * max(scale, 1.0):
            raise SingularNeumann(
                f"Neumann compatibility defect {comp:.3e} on region index {r}")
    Cm = sp.lil_matrix((layout.n_constraints, n_p2))
    for row in range(len(c2)):
        for k in range(3):
            dof = layout.p2_cell_dofs[row, k]
            Cm[layout.p2_region_index[dof], dof] += area2[row] / 3.0
    Cm = Cm.tocsr()
    kkt = sp.bmat([[K, Cm.T], [Cm, None]], format="csc")
    rhs = np.concatenate([b_eta, np.zeros(layout.n_constraints)])
    with np.errstate(all="ignore"):
        z = spla.spsolve(kkt, rhs)
    if not np.all(np.isfinite(z)):
        raise SingularNeumann("Neumann KKT solve failed")
    eta = z[:n_p2]
    return ProjectionResult(layout=layout, xi=xi, eta=eta)
