import numpy as np
import pytest

from levinv.generator import (GenConfig, format_truth, gen_instance, parse_truth, perturb_start,
                              stream)
from levinv.gradient import grad_loss_total
from levinv.instance import validate
from levinv.leverage import well_posedness
from levinv.objective import loss_total


@pytest.mark.parametrize("seed", range(10))
def test_planted_optimum(seed):
    inst, reg, truth = gen_instance(GenConfig(12, 3, seed=seed))
    assert loss_total(inst, truth.x_star, reg).loss_total <= 1e-20
    assert np.linalg.norm(grad_loss_total(inst, truth.x_star, reg).grad_total) <= 1e-12
    assert abs(inst.c.sum() - 3) <= 1e-8
    assert np.all((inst.c >= 0) & (inst.c <= 1))


def test_repeatable():
    a = gen_instance(GenConfig(10, 2, seed=5))
    b = gen_instance(GenConfig(10, 2, seed=5))
    assert a[0].A.tobytes() == b[0].A.tobytes()
    assert a[0].b.tobytes() == b[0].b.tobytes()
    assert a[2].x_star.tobytes() == b[2].x_star.tobytes()
    c = gen_instance(GenConfig(10, 2, seed=6))
    assert not np.array_equal(a[0].A, c[0].A)


def test_streams_are_independent():
    # the noise stream must not change A, x* or s*
    a = gen_instance(GenConfig(10, 2, seed=5))
    b = gen_instance(GenConfig(10, 2, seed=5, noise=0.1))
    assert np.array_equal(a[0].A, b[0].A) and np.array_equal(a[0].b, b[0].b)
    assert not np.array_equal(a[0].c, b[0].c)
    assert np.all((b[0].c >= 0) & (b[0].c <= 1))


def test_stream_is_philox():
    assert isinstance(stream(1, "A").bit_generator, np.random.Philox)
    assert stream(1, "A").random() == stream(1, 1).random()
    assert stream(1, "A").random() != stream(1, "x_star").random()


def test_margin_and_validation():
    inst, reg, truth = gen_instance(GenConfig(20, 4, seed=7, margin=0.5))
    assert validate(inst).ok
    wp = well_posedness(inst, truth.x_star, beta=0.01)
    assert wp.ok and wp.min_abs_s >= 0.5
    assert np.min(np.abs(truth.s_star)) >= 0.5
    assert np.allclose(inst.A @ truth.x_star - inst.b, truth.s_star, atol=1e-12)


def test_regularized_mode():
    inst, reg, truth = gen_instance(GenConfig(20, 4, seed=1, mode="regularized", l=1.0, beta=0.01))
    assert reg.satisfies_bound(inst.A)
    smin = np.linalg.svd(inst.A, compute_uv=False)[-1]
    assert truth.sigma_min_A == pytest.approx(smin)
    assert np.allclose(reg.w**2, max(0.0, -0.44 + 1.0 / smin**2) + 1e-12)


@pytest.mark.parametrize("kw", [{"n": 2, "d": 3}, {"n": 3, "d": 2, "margin": 0.0},
                                {"n": 3, "d": 2, "mode": "other"}, {"n": 3, "d": 2, "noise": -1}])
def test_bad_config(kw):
    with pytest.raises(ValueError):
        GenConfig(**kw)


def test_perturb_start():
    x = np.array([1.0, -2.0, 0.5])
    assert np.array_equal(perturb_start(x, 0.0, 3), x)
    a = perturb_start(x, 0.3, 1)
    b = perturb_start(x, 0.3, 2)
    assert abs(np.linalg.norm(a - x) - 0.3) <= 1e-14
    assert abs(np.linalg.norm(b - x) - 0.3) <= 1e-14
    assert not np.allclose(a, b)
    with pytest.raises(ValueError):
        perturb_start(x, -1.0, 0)


def test_truth_round_trip():
    _, reg, truth = gen_instance(GenConfig(8, 3, seed=2, mode="regularized", noise=0.01))
    back = parse_truth(format_truth(truth))
    assert back.x_star.tobytes() == truth.x_star.tobytes()
    assert back.s_star.tobytes() == truth.s_star.tobytes()
    assert back.reg.w.tobytes() == reg.w.tobytes()
    assert (back.seed, back.mode, back.margin) == (2, "regularized", truth.margin)
    assert back.extra["noise"] == 0.01
