import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from graphdarcy import darcy_mixed as dm
from graphdarcy import mesh as gm
from graphdarcy import plane_graph as pg
from graphdarcy import verify as vf
from graphdarcy.errors import NonPositiveA, ResidualTooLarge, SingularSystem


def test_residual_tolerance_guard():
    built, _ = vf.two_strip_map()
    m = gm.triangulate(built, 0.5)
    sys_ = dm.assemble(m, dm.Coefficients.from_strings(f_flux="-1", f_stress="1"))
    with pytest.raises(ResidualTooLarge):
        dm.solve(sys_, residual_tol=1e-30)


@pytest.mark.filterwarnings("ignore::scipy.sparse.linalg.MatrixRankWarning")
def test_singular_system_diagnostics_mention_beta():
    built, _ = vf.two_strip_map()
    m = gm.triangulate(built, 0.5)
    sys_ = dm.assemble(m, dm.Coefficients.from_strings())
    # decouple one flux dof entirely (zero row and column): exactly singular
    A = sys_.A.tolil()
    A[0, :] = 0.0
    A[:, 0] = 0.0
    sys_.A = A.tocsr()
    B = sys_.B.tolil()
    B[:, 0] = 0.0
    sys_.B = B.tocsr()
    sys_.F1 = sys_.F1.copy()
    sys_.F1[0] = 0.0
    sys_.beta_region_mass = {r: 0.0 for r in sys_.beta_region_mass}
    with pytest.raises(SingularSystem) as err:
        dm.solve(sys_)
    assert "beta" in str(err.value)


def test_non_positive_a_floor():
    built, _ = vf.two_strip_map()
    m = gm.triangulate(built, 0.5)
    with pytest.raises(NonPositiveA):
        dm.assemble(m, dm.Coefficients.from_strings(a="0.0000000000001"))


coords = st.floats(min_value=-100.0, max_value=100.0,
                   allow_nan=False, allow_infinity=False)


@settings(max_examples=300, deadline=None)
@given(coords, coords, coords, coords, coords, coords)
def test_orient_antisymmetry_and_cyclic(ax, ay, bx, by, cx, cy):
    a, b, c = (ax, ay), (bx, by), (cx, cy)
    s = pg.orient(a, b, c)
    assert s in (-1, 0, 1)
    assert pg.orient(b, a, c) == -s
    assert pg.orient(b, c, a) == s
    assert pg.orient(c, a, b) == s


@settings(max_examples=200, deadline=None)
@given(coords, coords, coords, coords, st.integers(1, 8))
def test_orient_zero_on_collinear(ax, ay, bx, by, k):
    # c on the ray through a and b by exact dyadic interpolation
    a, b = (ax, ay), (bx, by)
    t = k / 8.0
    c = (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
    s = pg.orient(a, b, c)
    # the interpolation itself rounds, so allow the exact predicate to see a
    # tiny offset; it must agree with the rational computation, not float noise
    from fractions import Fraction
    det = (Fraction(b[0]) - Fraction(a[0])) * (Fraction(c[1]) - Fraction(a[1])) \
        - (Fraction(b[1]) - Fraction(a[1])) * (Fraction(c[0]) - Fraction(a[0]))
    assert s == (det > 0) - (det < 0)
