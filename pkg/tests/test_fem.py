from fractions import Fraction as Fr

import numpy as np
import pytest

from fracfem.analysis import energy_terms, norms
from fracfem.coefficients import CoefficientSpec, PointFunction, zero_table
from fracfem.fem import (
    BoundaryCondition,
    Mesh1D,
    MeshMismatchError,
    PiecewiseLinearFn,
    SingularSystemError,
    TridiagonalSystem,
    assemble,
    build_mesh,
    evaluate,
    setup_problem,
    solve_problem,
    solve_tridiagonal,
    write_solution_csv,
)
from fracfem.geometry import Microstructure


def toy():
    micro = Microstructure.from_points([Fr(1, 2)])
    beta = PointFunction(micro, 0, {Fr(1, 2): 1.0})
    f = PointFunction(micro, 0, {Fr(1, 2): 1.0})
    return micro, beta, f


def empty_tables():
    micro = Microstructure.from_points([])
    return zero_table(micro, 0), zero_table(micro, 0)


def test_build_mesh():
    m = build_mesh(2)
    assert len(m) == 10
    np.testing.assert_array_equal(m.nodes, np.arange(10) / 9)
    assert len(build_mesh(6)) == 730
    np.testing.assert_array_equal(build_mesh(0).nodes, [0.0, 1.0])


def test_mesh_validation():
    with pytest.raises(ValueError):
        Mesh1D([0, Fr(1, 2)])
    with pytest.raises(ValueError):
        Mesh1D([0, Fr(1, 2), Fr(1, 2), 1])


def test_index_of_exact():
    m = build_mesh(3)
    assert m.index_of(Fr(8, 9)) == 24
    with pytest.raises(MeshMismatchError):
        m.index_of(Fr(1, 2))


def test_zero_data_system():
    beta, f = empty_tables()
    sys = assemble(Mesh1D([0, Fr(1, 2), 1]), beta, None, f, "dn", "include")
    np.testing.assert_allclose(sys.dense(), [[4, -2], [-2, 2]])
    np.testing.assert_array_equal(sys.rhs, [0, 0])
    np.testing.assert_array_equal(solve_tridiagonal(sys), [0, 0])


def test_toy_system_and_solution():
    _, beta, f = toy()
    sys = assemble(Mesh1D([0, Fr(1, 2), 1]), beta, None, f, "dn", "exclude")
    np.testing.assert_allclose(sys.dense(), [[5, -2], [-2, 2]])
    np.testing.assert_allclose(sys.rhs, [1, 0])
    np.testing.assert_allclose(solve_tridiagonal(sys), [1 / 3, 1 / 3], atol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 4])
def test_constant_volume_load_nodal_exactness(n):
    beta, f = empty_tables()
    mesh = build_mesh(n)
    sys = assemble(mesh, beta, lambda x: np.ones_like(x), f, "dd", "include")
    u = np.zeros(len(mesh))
    u[sys.free] = solve_tridiagonal(sys)
    x = mesh.nodes
    np.testing.assert_allclose(u, x * (1 - x) / 2, atol=1e-13)


def test_mesh_mismatch_detected():
    _, beta, f = toy()
    with pytest.raises(MeshMismatchError):
        assemble(Mesh1D([0, Fr(1, 3), 1]), beta, None, f)


def test_thomas_identity():
    r = np.array([1.0, -2.0, 3.5])
    sys = TridiagonalSystem(np.zeros(2), np.ones(3), np.zeros(2), r, np.arange(3))
    np.testing.assert_array_equal(solve_tridiagonal(sys), r)


@pytest.mark.parametrize("seed", range(20))
def test_thomas_residual_random_dominant(seed):
    rng = np.random.default_rng(seed)
    m = rng.integers(1, 300)
    lo = rng.uniform(-1, 1, m - 1)
    up = rng.uniform(-1, 1, m - 1)
    d = np.abs(np.r_[lo, 0]) + np.abs(np.r_[0, up]) + rng.uniform(0.1, 3, m)
    rhs = rng.normal(size=m) * 10
    sys = TridiagonalSystem(lo, d, up, rhs, np.arange(m))
    x = solve_tridiagonal(sys)
    assert np.max(np.abs(sys.matvec(x) - rhs)) <= 1e-12 * (1 + np.max(np.abs(rhs)))
    np.testing.assert_allclose(x, np.linalg.solve(sys.dense(), rhs), rtol=1e-10, atol=1e-12)


def test_thomas_singular():
    sys = TridiagonalSystem(np.array([1.0]), np.array([1.0, 1.0]), np.array([1.0]),
                            np.ones(2), np.arange(2))
    with pytest.raises(SingularSystemError):
        solve_tridiagonal(sys)


@pytest.mark.parametrize("seed", range(20))
def test_m_matrix_elimination_matches_dense(seed):
    rng = np.random.default_rng(100 + seed)
    m = rng.integers(1, 200)
    lo = -rng.uniform(0, 5, m - 1)
    up = -rng.uniform(0, 5, m - 1)
    ex = rng.uniform(0, 1, m) * (rng.uniform(size=m) < 0.3)
    ex[0] += 0.5
    d = ex - np.r_[0, lo] - np.r_[up, 0]
    rhs = rng.normal(size=m)
    sys = TridiagonalSystem(lo, d, up, rhs, np.arange(m), excess=ex)
    assert sys.is_m_matrix_form
    np.testing.assert_allclose(solve_tridiagonal(sys), np.linalg.solve(sys.dense(), rhs),
                               rtol=1e-9, atol=1e-9 * np.max(np.abs(rhs)))


def test_m_matrix_elimination_singular():
    sys = TridiagonalSystem(np.array([-1.0]), np.array([1.0, 1.0]), np.array([-1.0]),
                            np.ones(2), np.arange(2), excess=np.zeros(2))
    with pytest.raises(SingularSystemError):
        solve_tridiagonal(sys)


def test_assembled_excess_is_row_sum():
    for bc in ("dn", "dd"):
        sys = setup_problem(3, CoefficientSpec.geometric(0.5), bc=bc).system()
        row_sum = sys.diag.copy()
        row_sum[1:] += sys.lower
        row_sum[:-1] += sys.upper
        np.testing.assert_allclose(sys.excess, row_sum, atol=1e-12)


def test_tiny_storage_energy_gap_at_stage_nine():
    prob = setup_problem(9, CoefficientSpec.consistent_scaling(1, 2, 1 / 6))
    a, ell = energy_terms(prob, prob.solve())
    assert abs(a - ell) <= 1e-13 * (1 + abs(ell))


def test_solve_problem_zero_forcing_is_zero():
    for spec in (CoefficientSpec.constant(1), CoefficientSpec.geometric(0.5)):
        p = solve_problem(4, spec, forcing_on=False)
        assert np.all(p.values == 0)


@pytest.mark.parametrize("bc", ["dn", "dd"])
def test_dirichlet_nodes_exact_zero(bc):
    p = solve_problem(3, CoefficientSpec.constant(1), bc=bc)
    assert p.values[0] == 0.0
    if bc == "dd":
        assert p.values[-1] == 0.0


def test_stage_nine_residual():
    prob = setup_problem(9, CoefficientSpec.constant(1))
    sys = prob.system()
    x = solve_tridiagonal(sys)
    assert np.max(np.abs(sys.matvec(x) - sys.rhs)) <= 1e-12 * (1 + np.max(np.abs(sys.rhs)))


def test_evaluate_examples():
    fn = PiecewiseLinearFn(Mesh1D([0, Fr(1, 2), 1]), [0, 1 / 3, 1 / 3])
    assert evaluate(fn, 0.25) == pytest.approx(1 / 6, abs=1e-16)
    assert evaluate(fn, 0.5, "slope_left") == pytest.approx(2 / 3)
    assert evaluate(fn, 0.5, "slope_right") == 0.0
    assert evaluate(fn, 0.5) == 1 / 3
    with pytest.raises(ValueError):
        evaluate(fn, 0.0, "slope_left")
    with pytest.raises(ValueError):
        evaluate(fn, 1.0, "slope_right")
    with pytest.raises(ValueError):
        evaluate(fn, 1.5)


@pytest.mark.parametrize("n", [3, 6])
@pytest.mark.parametrize("spec", [CoefficientSpec.constant(1), CoefficientSpec.geometric(2 / 3)])
@pytest.mark.parametrize("bc, mode", [("dn", "include"), ("dn", "exclude"), ("dd", "include")])
def test_energy_identity(n, spec, bc, mode):
    prob = setup_problem(n, spec, bc=bc, endpoint_mode=mode, F=lambda x: np.sin(3 * x))
    p = prob.solve()
    a, ell = energy_terms(prob, p)
    assert abs(a - ell) <= 1e-10 * (1 + abs(ell))


def test_endpoint_modes_differ_only_with_endpoint_terms():
    inc = solve_problem(4, CoefficientSpec.constant(1), endpoint_mode="include")
    exc = solve_problem(4, CoefficientSpec.constant(1), endpoint_mode="exclude")
    assert not np.allclose(inc.values, exc.values)
    g_inc = solve_problem(4, CoefficientSpec.geometric(0.5), endpoint_mode="include")
    g_exc = solve_problem(4, CoefficientSpec.geometric(0.5), endpoint_mode="exclude")
    np.testing.assert_array_equal(g_inc.values, g_exc.values)


def test_boundary_condition_parse():
    assert BoundaryCondition.parse("dd") is BoundaryCondition.DIRICHLET_DIRICHLET
    with pytest.raises(ValueError):
        BoundaryCondition.parse("nd")


def test_solution_csv(tmp_path):
    fn = PiecewiseLinearFn(Mesh1D([0, Fr(1, 2), 1]), [0, 1 / 3, 1 / 3])
    path = tmp_path / "sol.csv"
    write_solution_csv(fn, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,p,dp_left"
    assert lines[1] == "0,0,"
    x, p, dp = (float(v) for v in lines[2].split(","))
    assert (x, p, dp) == (0.5, 1 / 3, 2 / 3)
    assert norms(fn).l2 > 0
