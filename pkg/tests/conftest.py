import numpy as np
import pytest

from levinv.generator import GenConfig, gen_instance
from levinv.instance import ProblemInstance, RegConfig


@pytest.fixture
def tiny():
    # A = [[1],[1]], b = [0,-1]; at x = 1: s = [1, 2], sigma = [[.8,.4],[.4,.2]]
    return ProblemInstance(np.array([[1.0], [1.0]]), np.array([0.0, -1.0]), np.array([0.5, 0.5]))


@pytest.fixture
def planted():
    inst, reg, truth = gen_instance(GenConfig(15, 4, seed=3))
    return inst, reg, truth


def random_case(seed, n=None, d=None, noise=0.05):
    """Generated instance with a noisy target, plus a probe point with |s_i| >= 0.25."""
    from levinv.crosscheck import probe_point
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 41)) if n is None else n
    d = int(rng.integers(1, min(8, n) + 1)) if d is None else d
    inst, reg, truth = gen_instance(GenConfig(n, d, seed=seed, noise=noise))
    x = probe_point(inst, truth.x_star, 0.1 * (1 + np.linalg.norm(truth.x_star)), seed)
    return inst, reg, truth, x


def zero_reg(inst):
    return RegConfig.zero(inst.n)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import LINES
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
