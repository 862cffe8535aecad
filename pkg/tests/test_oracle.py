from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracfem.coefficients import PointFunction
from fracfem.fem import Mesh1D, assemble, solve_tridiagonal
from fracfem.geometry import Microstructure
from fracfem.oracle import exact_solve


def test_single_point_hand_solve():
    sol = exact_solve([0.5], [1.0], [1.0], "dn")
    assert sol.values == pytest.approx([0.0, 1 / 3, 1 / 3], abs=1e-15)
    assert sol.slopes == pytest.approx([2 / 3, 0.0], abs=1e-15)


@pytest.mark.parametrize("bc", ["dn", "dd"])
def test_no_points_zero_solution(bc):
    sol = exact_solve([], [], [], bc)
    assert np.all(sol.values == 0)


def test_two_points_dirichlet_dirichlet():
    sol = exact_solve([1 / 3, 2 / 3], [1.0, 1.0], [1.0, 1.0], "dd")
    assert sol.values[1:3] == pytest.approx([0.25, 0.25], abs=1e-15)
    assert sol.values[-1] == 0.0


def test_robin_right_end_no_points():
    # p = x p(1) with p'(1) + β(1) p(1) = f(1)
    sol = exact_solve([], [], [], "dn", right_end_terms=(1.0, 2.0))
    assert sol.values[-1] == pytest.approx(1.0)


def test_input_validation():
    with pytest.raises(ValueError):
        exact_solve([0.5, 0.25], [1, 1], [1, 1])
    with pytest.raises(ValueError):
        exact_solve([1.0], [1], [1])
    with pytest.raises(ValueError):
        exact_solve([0.5], [-1], [1])
    with pytest.raises(ValueError):
        exact_solve([0.5], [1], [1], "dd", right_end_terms=(1, 1))


point_sets = st.lists(st.integers(1, 63), min_size=0, max_size=12, unique=True).map(
    lambda ks: sorted(Fr(k, 64) for k in ks)
)


@settings(max_examples=100, deadline=None)
@given(
    pts=point_sets,
    data=st.data(),
    bc=st.sampled_from(["dn", "dd"]),
    robin=st.booleans(),
)
def test_self_consistency_and_fem_equivalence(pts, data, bc, robin):
    m = len(pts)
    beta = data.draw(st.lists(st.floats(0, 5), min_size=m, max_size=m))
    f = data.draw(st.lists(st.floats(-2, 2), min_size=m, max_size=m))
    end = (data.draw(st.floats(0, 3)), data.draw(st.floats(-1, 1))) if robin and bc == "dn" else None
    sol = exact_solve(pts, beta, f, bc, end)
    if m:
        assert np.max(np.abs(sol.jump_residuals(beta, f))) <= 1e-13 * (1 + np.max(np.abs(f)))
    assert sol.values[0] == 0.0

    # Galerkin route on a mesh that refines the interface points
    micro_pts = list(pts) + ([Fr(1)] if end else [])
    micro = Microstructure.from_points(micro_pts)
    btab = dict(zip(pts, beta))
    ftab = dict(zip(pts, f))
    if end:
        btab[Fr(1)], ftab[Fr(1)] = end
    mesh = Mesh1D.from_points(list(pts) + [Fr(k, 128) for k in range(0, 129, 8)])
    sys = assemble(mesh, PointFunction(micro, 0, btab), None, PointFunction(micro, 0, ftab),
                   bc, "include")
    u = np.zeros(len(mesh))
    u[sys.free] = solve_tridiagonal(sys)
    ref = sol(mesh.nodes)
    assert np.max(np.abs(u - ref)) <= 1e-10 * max(1.0, np.max(np.abs(ref)))


def test_symmetric_input_gives_symmetric_output():
    pts = [0.1, 0.25, 0.75, 0.9]
    sol = exact_solve(pts, [1, 2, 2, 1], [0.3, 1, 1, 0.3], "dd")
    assert sol.values == pytest.approx(sol.values[::-1], abs=1e-15)
