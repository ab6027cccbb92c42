"""Recover parameters from target leverage scores.

Given ``A``, ``b`` and a target vector ``c``, find ``x`` whose rescaled
matrix ``diag(Ax - b)^{-1} A`` has leverage scores ``c``.
"""

__version__ = "0.1.0"

from .errors import (DomainCrossing, EmptyRun, InstanceFormatError, InvalidStart, LevinvError,
                     RankDeficient, SingularHessian, SingularScaling, StepTrapped)
from .instance import (ProblemInstance, RegConfig, SolveSettings, ValidationReport,
                       load_instance, parse_instance, save_instance, validate)
from .leverage import (LeverageSnapshot, eval_A_of_x, eval_Q, eval_s, eval_sigma_diag,
                       eval_sigma_full, snapshot, well_posedness)
from .objective import LossBreakdown, loss_exp, loss_frobenius, loss_reg, loss_total
from .gradient import grad_loss_exp, grad_loss_reg, grad_loss_total, grad_sigma_diag_i
from .hessian import (hessian_loss_exp, hessian_loss_reg, hessian_sigma_ii, hessian_terms,
                      hessian_total, pd_certificate)
from .oracle import FDConfig, fd_gradient, fd_hessian, sigma_direct
from .generator import GenConfig, GroundTruth, gen_instance, perturb_start
from .solver import (GDConfig, NewtonConfig, Objective, TrackedRun, averaged_iterate,
                     contraction_report, gradient_descent, newton)
from .diagnostics import (basic_lipschitz_suite, empirical_hessian_lipschitz, norm_bound_suite,
                          timing_bench)
