import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levinv.errors import RankDeficient, SingularScaling
from levinv.instance import ProblemInstance
from levinv.leverage import (eval_A_of_x, eval_Q, eval_s, eval_sigma_diag, eval_sigma_full,
                             snapshot, well_posedness)
from levinv.oracle import sigma_direct

from conftest import random_case


def test_eval_s(tiny):
    assert np.array_equal(eval_s(tiny, [1.0]), [1.0, 2.0])


def test_eval_s_zero():
    inst = ProblemInstance(np.array([[1.0], [1.0]]), np.zeros(2), np.zeros(2))
    assert np.array_equal(eval_s(inst, [0.0]), [0.0, 0.0])


def test_eval_s_shape(tiny):
    with pytest.raises(ValueError):
        eval_s(tiny, [1.0, 2.0])


def test_cancellation_is_singular():
    inst = ProblemInstance(np.eye(2), np.ones(2), np.zeros(2))
    assert np.array_equal(eval_s(inst, [1.0, 1.0]), [0.0, 0.0])
    with pytest.raises(SingularScaling) as err:
        eval_A_of_x(inst, [1.0, 1.0])
    assert err.value.index == 0


def test_eval_A_of_x(tiny):
    assert np.array_equal(eval_A_of_x(tiny, [1.0]), [[1.0], [0.5]])


def test_scale_cancellation():
    inst = ProblemInstance(np.array([[1.0], [2.0]]), np.zeros(2), np.zeros(2))
    assert np.allclose(eval_A_of_x(inst, [1.0]), [[1.0], [1.0]])


def test_singular_index_reported():
    inst = ProblemInstance(np.array([[1.0], [1.0], [1.0]]), np.array([0.0, 1.0, 0.0]), np.zeros(3))
    with pytest.raises(SingularScaling) as err:
        snapshot(inst, [1.0])
    assert err.value.index == 1


def test_square_is_identity():
    rng = np.random.default_rng(0)
    inst = ProblemInstance(rng.standard_normal((4, 4)), rng.standard_normal(4), np.ones(4))
    x = rng.standard_normal(4)
    assert np.allclose(eval_sigma_full(inst, x), np.eye(4), atol=1e-12)
    assert np.allclose(eval_sigma_diag(inst, x), 1.0, atol=1e-12)


def test_symmetric_two_row():
    inst = ProblemInstance(np.array([[1.0], [1.0]]), np.zeros(2), np.zeros(2))
    assert np.allclose(eval_sigma_full(inst, [1.0]), 0.5, atol=1e-15)


def test_tiny_sigma(tiny):
    want = np.array([[0.8, 0.4], [0.4, 0.2]])
    assert np.allclose(eval_sigma_full(tiny, [1.0]), want, atol=1e-15)
    assert np.allclose(sigma_direct(tiny, [1.0]), want, atol=1e-12)
    assert np.allclose(eval_sigma_diag(tiny, [1.0]), [0.8, 0.2], atol=1e-15)
    snap = snapshot(tiny, [1.0], want_full=True)
    assert np.allclose(eval_Q(snap), want**2)
    assert snap.sigma_min_Ax == pytest.approx(np.sqrt(1.25))


def test_rank_deficient_A_of_x():
    inst = ProblemInstance(np.array([[1.0, 1.0], [2.0, 2.0], [1.0, 1.0]]), np.ones(3), np.zeros(3))
    with pytest.raises(RankDeficient):
        snapshot(inst, [1.0, 1.0])


def test_snapshot_lazy_full(planted):
    inst, _, truth = planted
    lazy = snapshot(inst, truth.x_star)
    full = snapshot(inst, truth.x_star, want_full=True)
    assert lazy.sigma_full is None
    assert np.allclose(lazy.sigma(), full.sigma_full, atol=1e-14)
    assert np.allclose(lazy.sigma_column(3), full.sigma_column(3), atol=1e-14)
    assert lazy.with_full().sigma_full is not None
    with pytest.raises(ValueError):
        full.sigma_full[0, 0] = 1.0


@pytest.mark.parametrize("seed", range(100))
def test_projection_invariants(seed):
    inst, _, _, x = random_case(seed, noise=0.0)
    snap = snapshot(inst, x, want_full=True)
    P = snap.sigma_full
    n, d = inst.n, inst.d
    assert np.max(np.abs(P - P.T)) <= 1e-10
    assert np.linalg.norm(P @ P - P) <= 1e-8 * n
    assert abs(np.sum(snap.sigma_diag) - d) <= 1e-8
    assert np.all(snap.sigma_diag >= -1e-12) and np.all(snap.sigma_diag <= 1 + 1e-12)
    assert np.max(np.abs(snap.sigma_diag - np.diag(P))) <= 1e-12
    assert np.linalg.norm(P, 2) <= 1 + 1e-10
    assert np.linalg.norm(snap.gram_inv, 2) <= snap.sigma_min_Ax**-2 * (1 + 1e-8)
    assert np.max(np.abs(P - sigma_direct(inst, x))) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(-10.0, -0.1))
def test_scale_invariance_b_zero(x, y):
    inst = ProblemInstance(np.array([[1.0], [-2.0], [0.5]]), np.zeros(3), np.zeros(3))
    assert np.allclose(eval_sigma_diag(inst, [x]), eval_sigma_diag(inst, [y]), atol=1e-14)


def test_well_posedness_tiny(tiny):
    wp = well_posedness(tiny, [1.0], beta=0.01)
    assert wp.ok and wp.sigma_min_Ax == pytest.approx(np.sqrt(1.25))
    assert wp.rank_A == 1 and wp.min_abs_s == 1.0 and wp.argmin_s == 0


def test_well_posedness_near_zero():
    inst = ProblemInstance(np.array([[1.0], [1.0]]), np.array([1.0 - 1e-15, 0.0]), np.zeros(2))
    wp = well_posedness(inst, [1.0], beta=0.01)
    assert not wp.ok and wp.argmin_s == 0


def test_well_posedness_margin_pass(planted):
    inst, _, truth = planted
    wp = well_posedness(inst, truth.x_star, beta=0.09)
    assert wp.sigma_min_Ax >= 0.09 and wp.beta_ok
