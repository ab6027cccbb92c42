import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levinv.errors import DomainCrossing, RankDeficient
from levinv.instance import ProblemInstance
from levinv.oracle import (FDConfig, fd_gradient, fd_hessian, loss_exp_direct, sigma_direct,
                           sign_guard)


def test_fd_gradient_quadratic():
    assert fd_gradient(lambda x: 0.5 * x @ x, [3.0]) == pytest.approx([3.0], abs=1e-10)


def test_fd_gradient_constant():
    assert np.array_equal(fd_gradient(lambda x: 7.0, np.ones(3)), np.zeros(3))


def test_fd_gradient_tiny_loss(tiny):
    assert fd_gradient(loss_exp_direct(tiny), [1.0]) == pytest.approx([-0.096], abs=1e-7)


def test_fd_hessian_quadratic():
    Q = np.array([[2.0, 0.5, 0.0], [0.5, 1.0, -0.3], [0.0, -0.3, 4.0]])
    H = fd_hessian(lambda x: 0.5 * x @ Q @ x, np.array([0.3, -1.0, 2.0]))
    assert np.max(np.abs(H - Q)) <= 1e-6 * np.linalg.norm(Q, 2)
    assert np.array_equal(H, H.T)


def test_fd_hessian_constant():
    assert np.array_equal(fd_hessian(lambda x: 1.0, np.ones(2)), np.zeros((2, 2)))


def test_fd_hessian_gauss_newton_value(tiny):
    inst = tiny.with_target([0.8, 0.2])
    assert fd_hessian(loss_exp_direct(inst), [1.0])[0, 0] == pytest.approx(0.0512, abs=1e-5)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3),
       st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.floats(-2, 2))
def test_fd_exact_on_degree_two(x, g, c):
    x, g = np.array(x), np.array(g)
    Q = np.array([[2.0, 1.0, 0.0], [1.0, 3.0, 0.5], [0.0, 0.5, 1.0]])
    f = lambda y: 0.5 * y @ Q @ y + g @ y + c
    want = Q @ x + g
    assert np.linalg.norm(fd_gradient(f, x) - want) <= 1e-9 * max(1.0, np.linalg.norm(want))


def test_fd_config():
    with pytest.raises(ValueError):
        FDConfig(h=0.0)
    assert np.allclose(FDConfig(1e-5).steps(np.array([0.0, -2.0])), [1e-5, 3e-5])
    assert np.allclose(FDConfig(1e-5, relative=False).steps(np.array([5.0])), [1e-5])


def test_domain_crossing_from_probe():
    inst = ProblemInstance(np.array([[1.0], [1.0]]), np.array([1.0, 0.0]), np.zeros(2))
    # s_1 = x - 1 is exactly zero at x = 1 + h
    with pytest.raises(DomainCrossing):
        fd_gradient(loss_exp_direct(inst), [1.0 - 1e-5], FDConfig(1e-5, relative=False))


def test_sign_guard():
    inst = ProblemInstance(np.array([[1.0], [1.0]]), np.array([1.0, -1.0]), np.zeros(2))
    guard = sign_guard(inst, [1.5])
    guard(np.array([1.2]))
    with pytest.raises(DomainCrossing):
        fd_gradient(loss_exp_direct(inst), [1.5], FDConfig(0.6, relative=False), guard)


def test_sigma_direct_cases(tiny):
    rng = np.random.default_rng(2)
    sq = ProblemInstance(rng.standard_normal((3, 3)), rng.standard_normal(3), np.ones(3))
    assert np.allclose(sigma_direct(sq, rng.standard_normal(3)), np.eye(3), atol=1e-12)
    two = ProblemInstance(np.array([[1.0], [1.0]]), np.zeros(2), np.zeros(2))
    assert np.allclose(sigma_direct(two, [2.0]), 0.5, atol=1e-12)
    P = sigma_direct(tiny, [1.0])
    assert np.allclose(P, [[0.8, 0.4], [0.4, 0.2]], atol=1e-12)
    assert np.allclose(P @ P, P, atol=1e-14)


def test_sigma_direct_rank():
    inst = ProblemInstance(np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]), np.ones(3), np.zeros(3))
    with pytest.raises(RankDeficient):
        sigma_direct(inst, [1.0, 1.0])
