import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pipesurf import discrete as d
from pipesurf.discrete import Grid, GridFunction, diff, inner, norm, norm_h1
from pipesurf.errors import InvalidParams, StaggeringMismatch


def _gf(grid, work, stag="node"):
    n = grid.N if stag == "omega_half" else grid.n_omega_nodes
    return GridFunction(np.asarray(work)[:, grid.p:grid.p + n], grid, stag)


def _random_wh(grid, rng):
    u = rng.standard_normal(grid.shape)
    if not grid.periodic:
        u[:, [0, -1]] = 0.0
    return GridFunction(u, grid)


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def sbp_worst(rng, periodic, trials=200):
    """Largest relative defect of the four summation-by-parts identities."""
    worst = 0.0
    for _ in range(trials):
        M, N = rng.integers(6, 14, size=2)
        g = Grid(int(M), int(N), (0.0, float(rng.uniform(1, 7))), periodic)
        u, v = _random_wh(g, rng), _random_wh(g, rng)
        uw, vw = u.work(), v.work()
        phi = rng.uniform(0.5, 2.0, g.work_shape)
        # (delta_t(phi delta_t u), v) = -(phi delta_t u, delta_t v)_theta
        lhs = inner(_gf(g, d.div_theta(g, phi, uw)), v)
        rhs = -inner(_gf(g, d.d_theta(g, uw), "theta_half"), _gf(g, d.d_theta(g, vw), "theta_half"),
                     _gf(g, phi, "theta_half"))
        worst = max(worst, _rel(lhs, rhs))
        lhs = inner(_gf(g, d.div_omega(g, phi, uw)), v)
        rhs = -inner(_gf(g, d.d_omega(g, uw), "omega_half"), _gf(g, d.d_omega(g, vw), "omega_half"),
                     _gf(g, phi, "omega_half"))
        worst = max(worst, _rel(lhs, rhs))
        # (nabla_t(phi nabla_w u), v) = -(phi nabla_w u, nabla_t v) and the companion
        lhs = inner(_gf(g, d.nabla_theta(g, phi * d.nabla_omega(g, uw))), v)
        rhs = -inner(_gf(g, phi * d.nabla_omega(g, uw)), _gf(g, d.nabla_theta(g, vw)))
        worst = max(worst, _rel(lhs, rhs))
        lhs = inner(_gf(g, d.nabla_omega(g, phi * d.nabla_theta(g, uw))), v)
        rhs = -inner(_gf(g, phi * d.nabla_theta(g, uw)), _gf(g, d.nabla_omega(g, vw)))
        worst = max(worst, _rel(lhs, rhs))
    return worst


@pytest.mark.parametrize("periodic", [False, True])
def test_summation_by_parts(periodic, rng):
    assert sbp_worst(rng, periodic) <= 1e-12


def test_exact_differences_on_polynomials():
    g = Grid(12, 10, (0.0, 2.0))
    T, W = np.meshgrid(g.theta, g.omega, indexing="ij")
    nt = diff("nabla_theta", GridFunction(T, g)).values
    np.testing.assert_allclose(nt[1:-1, 1:-1], 1.0, rtol=1e-13)
    d2w = diff("d2_omega", GridFunction(W**2, g)).values
    np.testing.assert_allclose(d2w[:, 1:-1], 2.0, rtol=1e-12)
    mixed = diff("d2_omega_theta", GridFunction(T * W, g)).values
    np.testing.assert_allclose(mixed[1:-1, 1:-1], 1.0, rtol=1e-12)


def test_difference_shapes():
    g = Grid(8, 6)
    u = GridFunction(np.ones(g.shape), g)
    assert diff("d_theta", u).values.shape == (8, 7)
    assert diff("d_omega", u).values.shape == (8, 6)
    assert diff("d_omega", u).staggering == "omega_half"
    with pytest.raises(InvalidParams):
        diff("laplace", u)
    with pytest.raises(StaggeringMismatch):
        diff("d_theta", diff("d_theta", u))


def test_mixed_difference_commutes(rng):
    for periodic in (False, True):
        g = Grid(10, 9, periodic=periodic)
        uw = _random_wh(g, rng).work()
        a = d.nabla_omega(g, d.nabla_theta(g, uw))
        b = d.nabla_theta(g, d.nabla_omega(g, uw))
        np.testing.assert_allclose(_gf(g, a).values[g.interior], _gf(g, b).values[g.interior], atol=1e-12)
        np.testing.assert_array_equal(d.d2_omega_theta(g, uw), a)


def test_inner_examples(rng):
    g = Grid(4, 4)
    one = GridFunction(np.ones(g.shape), g)
    assert inner(one, one) == pytest.approx(g.h_theta * g.h_omega * 12, rel=1e-15)
    u, v = _random_wh(Grid(9, 7), rng), _random_wh(Grid(9, 7), rng)
    assert inner(u, v) == inner(v, u)
    w = rng.uniform(1, 2, u.grid.shape)
    assert inner(u, v, 2 * w) == 2 * inner(u, v, w)


def test_inner_mismatch():
    g = Grid(6, 6)
    u = GridFunction(np.ones(g.shape), g)
    with pytest.raises(StaggeringMismatch):
        inner(u, diff("d_omega", u))
    with pytest.raises(StaggeringMismatch):
        u + GridFunction(np.ones((6, 7)), Grid(6, 6, (0.0, 1.0)))
    with pytest.raises(StaggeringMismatch):
        GridFunction(np.ones((6, 6)), g)


def test_norm_h1_examples():
    g = Grid(4, 4)
    assert norm_h1(GridFunction(np.zeros(g.shape), g)) == 0.0
    u = np.zeros(g.shape)
    u[1, 2] = 1.0
    ht, hw = g.h_theta, g.h_omega
    want = math.sqrt(ht * hw * (1 + 2 / ht**2 + 2 / hw**2))
    assert norm_h1(GridFunction(u, g)) == pytest.approx(want, rel=1e-14)


@settings(max_examples=50, deadline=None)
@given(M=st.integers(4, 16), N=st.integers(3, 16), seed=st.integers(0, 2**32 - 1))
def test_norm_inequalities(M, N, seed):
    g = Grid(M, N, (0.0, 3.0))
    u = _random_wh(g, np.random.default_rng(seed))
    assert norm_h1(u) >= norm(u)
    dt = diff("d_theta", u)
    assert norm(dt) <= 2 / g.h_theta * norm(u) * (1 + 1e-12)
    dw = diff("d_omega", u)
    assert norm(dw) <= 2 / g.h_omega * norm(u) * (1 + 1e-12)


def test_boundary_membership_and_periodic_index():
    g = Grid(6, 5)
    u = GridFunction(np.ones(g.shape), g)
    assert not u.satisfies_boundary()
    u.values[:, [0, -1]] = 0
    assert u.satisfies_boundary()
    gp = Grid(6, 5, periodic=True)
    x = np.arange(30, dtype=float).reshape(6, 5)
    np.testing.assert_array_equal(gp.shift(x, 6, 0), x)
    np.testing.assert_array_equal(gp.shift(x, 1, 0)[-1], x[0])


def test_csv_round_trip(rng):
    for g in (Grid(7, 5, (1.0, 2.5)), Grid(7, 5, periodic=True)):
        u = GridFunction(rng.standard_normal(g.shape), g)
        back = GridFunction.from_csv(u.to_csv(), g)
        np.testing.assert_array_equal(back.values, u.values)
        assert u.to_csv().splitlines()[0] == "i,j,theta,omega,value"


def test_quasi_uniformity():
    assert Grid(64, 64, (0.0, 2 * math.pi)).quasi_uniformity == pytest.approx(1.0)
    assert Grid(64, 16, (0.0, 2 * math.pi)).quasi_uniformity == pytest.approx(4.0)
    with pytest.raises(InvalidParams):
        Grid(2, 5)


def test_stencil_matches_array_action(rng):
    g = Grid(8, 7, (0.0, 2.0))
    coef = rng.uniform(1, 2, g.work_shape)
    op = lambda x: d.div_theta(g, coef, x) + coef * d.d2_omega_theta(g, x) - d.nabla_omega(g, x)
    st_ = op(d.Stencil.identity(g))
    A = st_.to_csr(g)
    u = rng.standard_normal(g.n_unknowns)
    want = g.work_to_vector(op(g.vector_to_work(u)))
    np.testing.assert_allclose(A @ u, want, rtol=1e-13, atol=1e-12)
