import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from msprofile.qp import QP_OPTIMAL, solve_qp

from oracles import brute_force_qp


def random_qp(rng, n, m):
    A = rng.normal(size=(n, n))
    G = A @ A.T + 0.1 * np.eye(n)
    a = rng.normal(size=n) * 5
    C = rng.normal(size=(m, n))
    # a known interior point keeps the problem feasible
    x_in = rng.normal(size=n)
    b = C @ x_in - rng.uniform(0.0, 2.0, m)
    return G, a, C, b


def test_unconstrained_minimiser():
    G = np.diag([2.0, 4.0])
    a = np.array([-2.0, -8.0])
    res = solve_qp(G, a)
    assert res.status == QP_OPTIMAL
    assert np.allclose(res.x, [1.0, 2.0], atol=1e-12)


def test_active_bound():
    res = solve_qp(np.eye(1) * 2, np.array([-6.0]), ub=[2.0])
    assert res.x[0] == pytest.approx(2.0)
    assert res.multipliers[-1] == pytest.approx(2.0)


def test_infeasible_detected():
    C = np.array([[1.0], [-1.0]])
    b = np.array([1.0, 0.0])  # x >= 1 and x <= 0
    res = solve_qp(np.eye(1), np.zeros(1), C, b)
    assert not res.success


@given(st.integers(0, 100_000), st.integers(1, 20), st.integers(1, 9))
def test_matches_active_set_enumeration(seed, n, m):
    rng = np.random.default_rng(seed)
    G, a, C, b = random_qp(rng, n, m)
    res = solve_qp(G, a, C, b)
    ref = brute_force_qp(G, a, C, b)
    assert res.success and ref is not None
    assert np.max(np.abs(res.x - ref[0])) <= 1e-6 * max(1.0, np.max(np.abs(ref[0])))


@given(st.integers(0, 100_000), st.integers(1, 8))
def test_bounds_respected(seed, n):
    rng = np.random.default_rng(seed)
    G, a, _, _ = random_qp(rng, n, 1)
    res = solve_qp(G, a * 10, lb=-np.ones(n), ub=np.ones(n))
    assert res.success
    assert np.all(res.x >= -1 - 1e-12) and np.all(res.x <= 1 + 1e-12)
