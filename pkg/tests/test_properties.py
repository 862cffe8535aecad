"""Randomized property suites; each runs at least 100 hypothesis cases."""

from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracfem.analysis import inject, norms
from fracfem.coefficients import CoefficientSpec, PointFunction, sample_random_beta
from fracfem.experiments import monte_carlo
from fracfem.fem import Mesh1D, PiecewiseLinearFn, assemble, build_mesh, setup_problem, solve_tridiagonal
from fracfem.geometry import Microstructure, cantor_extremes

CASES = settings(max_examples=100, deadline=None)

point_sets = st.lists(st.integers(1, 64), min_size=0, max_size=10, unique=True).map(
    lambda ks: sorted(Fr(k, 64) for k in ks)
)
specs = st.one_of(
    st.floats(0.01, 10).map(CoefficientSpec.constant),
    st.floats(0.05, 0.95).map(CoefficientSpec.geometric),
    st.tuples(st.floats(0.1, 5), st.sampled_from([2, 3]), st.floats(0.05, 0.3)).map(
        lambda t: CoefficientSpec.consistent_scaling(t[0], t[1], min(t[2], 0.9 / t[1]))
    ),
)
bcs = st.sampled_from(["dn", "dd"])
modes = st.sampled_from(["include", "exclude"])


def solve_general(pts, beta, f, F, bc, mode):
    micro = Microstructure.from_points(pts)
    mesh = Mesh1D.from_points(list(pts) + [Fr(k, 128) for k in range(0, 129, 4)])
    sys = assemble(mesh, PointFunction(micro, 0, dict(zip(pts, beta))), F,
                   PointFunction(micro, 0, dict(zip(pts, f))), bc, mode)
    u = np.zeros(len(mesh))
    u[sys.free] = solve_tridiagonal(sys)
    return u


@CASES
@given(pts=point_sets, data=st.data(), c=st.tuples(st.floats(0, 5), st.floats(0, 5)), bc=bcs, mode=modes)
def test_m_matrix_positivity(pts, data, c, bc, mode):
    m = len(pts)
    beta = data.draw(st.lists(st.floats(0, 10), min_size=m, max_size=m))
    f = data.draw(st.lists(st.floats(0, 3), min_size=m, max_size=m))
    u = solve_general(pts, beta, f, lambda x: c[0] + c[1] * x, bc, mode)
    assert np.all(u >= -1e-15)


@CASES
@given(n=st.integers(1, 7), spec=specs, forcing=st.booleans(), k=st.floats(0, 2), mode=modes)
def test_dirichlet_symmetry_on_cantor_data(n, spec, forcing, k, mode):
    p = setup_problem(n, spec, forcing, lambda x: k * x * (1 - x), "dd", mode).solve()
    v = p.values
    assert np.max(np.abs(v - v[::-1])) <= 1e-12 * (1 + np.max(np.abs(v)))


@CASES
@given(pts=point_sets, data=st.data(), c=st.floats(-3, 3), bc=bcs, mode=modes)
def test_linearity_in_data(pts, data, c, bc, mode):
    m = len(pts)
    beta = data.draw(st.lists(st.floats(0, 10), min_size=m, max_size=m))
    f = data.draw(st.lists(st.floats(-3, 3), min_size=m, max_size=m))
    u1 = solve_general(pts, beta, f, lambda x: c * np.cos(x), bc, mode)
    u2 = solve_general(pts, beta, [2 * v for v in f], lambda x: 2 * c * np.cos(x), bc, mode)
    np.testing.assert_allclose(u2, 2 * u1, rtol=1e-14, atol=1e-300)


@CASES
@given(m=st.integers(0, 5), extra=st.integers(1, 3), data=st.data())
def test_injection_exactness(m, extra, data):
    coarse = build_mesh(m)
    vals = data.draw(st.lists(st.floats(-10, 10), min_size=len(coarse), max_size=len(coarse)))
    fn = PiecewiseLinearFn(coarse, vals)
    a, b = norms(fn), norms(inject(fn, build_mesh(m + extra)))
    for x, y in ((a.l2, b.l2), (a.h1_semi, b.h1_semi), (a.h1_full, b.h1_full)):
        assert y == pytest.approx(x, rel=1e-14, abs=1e-300)


@CASES
@given(n=st.integers(0, 6), spec=specs, bc=bcs)
def test_injection_exactness_for_solutions(n, spec, bc):
    p = setup_problem(n, spec, bc=bc).solve()
    a, b = norms(p), norms(inject(p, build_mesh(n + 1)))
    assert b.l2 == pytest.approx(a.l2, rel=1e-14, abs=1e-300)
    assert b.h1_full == pytest.approx(a.h1_full, rel=1e-14, abs=1e-300)


@CASES
@given(vals=st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=40))
def test_norm_triple_identity(vals):
    nt = norms(PiecewiseLinearFn(Mesh1D([Fr(k, len(vals) - 1) for k in range(len(vals))]), vals))
    assert nt.h1_full**2 == pytest.approx(nt.l2**2 + nt.h1_semi**2, rel=1e-14, abs=1e-300)


@CASES
@given(seed=st.integers(0, 2**64 - 1), idx=st.integers(0, 2**40), n=st.integers(0, 5))
def test_sampling_determinism_under_seed(seed, idx, n):
    micro = cantor_extremes(n)
    a = sample_random_beta(micro, n, 0.75, 1.25, seed, idx)
    b = sample_random_beta(micro, n, 0.75, 1.25, seed, idx)
    assert a.table == b.table
    assert all(0.75 <= v < 1.25 for v in a.values())


@CASES
@given(seed=st.integers(0, 2**32), stage=st.integers(1, 3))
def test_monte_carlo_determinism_under_seed(seed, stage):
    spec = CoefficientSpec.random_uniform(0.5, 1.5)
    a = monte_carlo(stage, spec, 3, 2, seed)
    b = monte_carlo(stage, spec, 3, 2, seed)
    assert a.rows == b.rows
