"""Parametric variational inference for scalar latents.

Closed-form and Monte Carlo ELBOs, score-function and pathwise gradient
estimators, gradient ascent, amortized inference with a small encoder, and
quadrature / finite-difference reference routines to check them against.
"""

from .amortize import AmortizeConfig, Dataset, Encoder, encoder_forward, train_amortized
from .distributions import (
    POSITIVE_REALS,
    REALS,
    Exponential,
    Gamma,
    Interval,
    Lognormal,
    Normal,
    RngState,
)
from .estimators import (
    ElboEstimate,
    EstimatorConfig,
    EstimatorKind,
    GradientEstimate,
    elbo_closed_form,
    elbo_closed_form_grad,
    elbo_mc,
    evidence_gap,
    grad_pathwise,
    grad_reparam,
    grad_score_function,
)
from .model import CallableModel, GammaExpModel, Model
from .optimize import OptConfig, ascend, elbo_curve
from .oracle import QuadratureSpec, finite_diff_grad, quad_elbo, quad_kl, quad_log_evidence
from .varfam import (
    LOGNORMAL,
    NORMAL,
    SupportError,
    VariationalParams,
    support_compatible,
)

__version__ = "0.1.0"
