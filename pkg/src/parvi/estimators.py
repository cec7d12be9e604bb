"""ELBO values and ELBO gradients.

Monte Carlo routines draw ``eps ~ N(0, 1)`` from the configured stream and
push it through the family's reparameterization path, so the score-function
and pathwise estimators see the same ``z`` draws when given the same config.
Every Monte Carlo output carries a standard error (sample stddev / sqrt(L)).

A ``-inf`` integrand does not raise: the estimate comes back with ``ok``
false and the offending draw recorded.  Pairing a family with a model whose
latent support it exceeds raises :class:`~parvi.varfam.SupportError` before
anything is sampled, unless ``check_support=False`` is set to study the
failure deliberately.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy import special

from .distributions import RngState
from .model import GammaExpModel
from .oracle import QuadratureSpec, quad_elbo, quad_kl
from .varfam import LognormalFamily, VariationalFamily, VariationalParams, require_compatible

__all__ = [
    "EstimatorKind",
    "EstimatorConfig",
    "ElboEstimate",
    "GradientEstimate",
    "EvidenceGap",
    "draw_noise",
    "elbo_terms",
    "score_function_terms",
    "reparam_terms",
    "elbo_mc",
    "elbo_closed_form",
    "elbo_closed_form_grad",
    "grad_closed_form",
    "grad_score_function",
    "grad_reparam",
    "grad_pathwise",
    "estimate_gradient",
    "evidence_gap",
]


class EstimatorKind(str, enum.Enum):
    SCORE_FUNCTION = "score"
    REPARAMETERIZED = "reparam"
    CLOSED_FORM = "closed-form"


@dataclass(frozen=True)
class EstimatorConfig:
    """Sample count ``samples`` (L) and the random stream to draw from.

    ``keep_score_term=False`` drops the direct ``-d/dtheta log q`` term from
    the pathwise estimator; it has zero mean, so the estimator stays unbiased
    but its variance changes.
    """

    samples: int = 1000
    rng: RngState = field(default_factory=RngState)
    keep_score_term: bool = True
    check_support: bool = True

    def __post_init__(self):
        if int(self.samples) != self.samples or self.samples < 1:
            raise ValueError(f"samples must be a positive integer, got {self.samples}")


@dataclass(frozen=True)
class ElboEstimate:
    value: float
    standard_error: float
    samples: int
    failed_index: int | None = None
    failed_draw: float | None = None

    @property
    def ok(self) -> bool:
        return self.failed_index is None


@dataclass(frozen=True)
class GradientEstimate:
    """Gradient wrt (mu, sigma) with per-component standard errors.

    ``elbo`` is the ELBO estimate from the same draws, when available.
    """

    grad: np.ndarray
    standard_error: np.ndarray
    samples: int
    kind: EstimatorKind
    elbo: float = math.nan
    failed_index: int | None = None
    failed_draw: float | None = None

    @property
    def ok(self) -> bool:
        return self.failed_index is None


class EvidenceGap(NamedTuple):
    elbo: float
    kl: float
    log_evidence: float


def _mean_se(values: np.ndarray):
    n = values.shape[0]
    mean = values.mean(axis=0)
    if n < 2:
        return mean, np.full(np.shape(mean), np.inf)
    return mean, values.std(axis=0, ddof=1) / math.sqrt(n)


def draw_noise(cfg: EstimatorConfig) -> np.ndarray:
    return cfg.rng.generator().standard_normal(int(cfg.samples))


def _first_bad(values: np.ndarray):
    bad = ~np.isfinite(values)
    if values.ndim > 1:
        bad = bad.any(axis=tuple(range(1, values.ndim)))
    idx = np.flatnonzero(bad)
    return int(idx[0]) if idx.size else None


def elbo_terms(model, family: VariationalFamily, params: VariationalParams, z) -> np.ndarray:
    """Per-draw integrand log p(x, z) - log q(z)."""
    with np.errstate(invalid="ignore"):
        return np.asarray(model.log_joint(z)) - np.asarray(family.log_density(params, z))


def score_function_terms(model, family, params, eps):
    """Per-draw pieces of the score-function estimator.

    Returns ``(z, weights, scores)`` where ``weights`` are the ELBO integrand
    values and ``scores`` the (L, 2) array of d/d(mu, sigma) log q(z).
    """
    z = family.reparam_sample(params, eps)
    weights = elbo_terms(model, family, params, z)
    inside = family.support.contains(z) & np.isfinite(weights)
    scores = np.full(z.shape + (2,), np.nan)
    if np.any(inside):
        scores[inside] = family.score(params, z[inside])
    return z, weights, scores


def reparam_terms(model, family, params, eps, keep_score_term: bool = True):
    """Per-draw pieces of the pathwise estimator.

    Returns ``(z, weights, grads)``; ``grads[i]`` is the total derivative of
    ``log p(x, g(eps_i)) - log q_theta(g(eps_i))`` wrt (mu, sigma).
    """
    z = family.reparam_sample(params, eps)
    weights = elbo_terms(model, family, params, z)
    grads = np.full(z.shape + (2,), np.nan)
    ok = np.isfinite(weights)
    if np.any(ok):
        zo, eo = z[ok], np.asarray(eps)[ok]
        dz = model.log_joint_grad_z(zo) - family.grad_z_log_density(params, zo)
        g = dz[..., None] * family.reparam_jacobian(params, eo)
        if keep_score_term:
            g = g - family.score(params, zo)
        grads[ok] = g
    return z, weights, grads


def _prepare(model, family, cfg):
    if cfg.check_support:
        require_compatible(family, model)
    return draw_noise(cfg)


def elbo_mc(model, family: VariationalFamily, params: VariationalParams,
            cfg: EstimatorConfig = EstimatorConfig()) -> ElboEstimate:
    """Monte Carlo ELBO: average of log p(x, z) - log q(z) over L draws."""
    eps = _prepare(model, family, cfg)
    z = family.reparam_sample(params, eps)
    terms = elbo_terms(model, family, params, z)
    bad = _first_bad(terms)
    if bad is not None:
        return ElboEstimate(-math.inf, math.inf, cfg.samples, bad, float(z[bad]))
    mean, se = _mean_se(terms)
    return ElboEstimate(float(mean), float(se), cfg.samples)


def _check_closed_form(alpha, beta, x, sigma):
    for name, v in (("alpha", alpha), ("beta", beta), ("sigma", sigma)):
        if not np.all(np.asarray(v) > 0):
            raise ValueError(f"{name} must be > 0, got {v}")
    if not np.all(np.asarray(x) >= 0):
        raise ValueError(f"x must be >= 0, got {x}")


def elbo_closed_form(alpha, beta, x, mu, sigma):
    """Exact ELBO of a Lognormal(mu, sigma^2) approximation in the
    Gamma-Exponential model.  Broadcasts over array arguments."""
    _check_closed_form(alpha, beta, x, sigma)
    out = (
        alpha * np.log(beta) + 0.5 * math.log(2 * math.pi) - special.gammaln(alpha)
        + (alpha + 1.0) * mu
        - (beta + x) * np.exp(mu + 0.5 * np.square(sigma))
        + np.log(sigma) + 0.5
    )
    return float(out) if np.ndim(out) == 0 else out


def elbo_closed_form_grad(alpha, beta, x, mu, sigma) -> np.ndarray:
    """Gradient of :func:`elbo_closed_form` wrt (mu, sigma); last axis length 2."""
    _check_closed_form(alpha, beta, x, sigma)
    m = (beta + x) * np.exp(mu + 0.5 * np.square(sigma))
    return np.stack(np.broadcast_arrays(alpha + 1.0 - m, 1.0 / sigma - sigma * m), axis=-1)


def _require_gamma_lognormal(model, family):
    if not (isinstance(model, GammaExpModel) and isinstance(family, LognormalFamily)):
        raise TypeError("closed-form ELBO needs a GammaExpModel with the Lognormal family")


def grad_closed_form(model: GammaExpModel, family, params: VariationalParams) -> GradientEstimate:
    _require_gamma_lognormal(model, family)
    args = (model.alpha, model.beta, model.x, params.loc, params.scale)
    return GradientEstimate(
        elbo_closed_form_grad(*args), np.zeros(2), 0, EstimatorKind.CLOSED_FORM,
        elbo=elbo_closed_form(*args),
    )


def _gradient_from_terms(kind, z, weights, per_sample, samples):
    bad = _first_bad(per_sample)
    if bad is None:
        bad = _first_bad(weights)
    if bad is not None:
        return GradientEstimate(
            np.full(2, np.nan), np.full(2, np.inf), samples, kind, -math.inf, bad, float(z[bad]),
        )
    g, se = _mean_se(per_sample)
    return GradientEstimate(g, se, samples, kind, elbo=float(weights.mean()))


def grad_score_function(model, family: VariationalFamily, params: VariationalParams,
                        cfg: EstimatorConfig = EstimatorConfig()) -> GradientEstimate:
    """REINFORCE estimator: mean of (log p - log q) * d/dtheta log q."""
    eps = _prepare(model, family, cfg)
    z, weights, scores = score_function_terms(model, family, params, eps)
    with np.errstate(invalid="ignore"):
        per_sample = weights[:, None] * scores
    return _gradient_from_terms(EstimatorKind.SCORE_FUNCTION, z, weights, per_sample, cfg.samples)


def grad_reparam(model, family: VariationalFamily, params: VariationalParams,
                 cfg: EstimatorConfig = EstimatorConfig()) -> GradientEstimate:
    """Pathwise estimator through ``z = g_theta(eps)``."""
    if not family.reparameterizable:
        raise TypeError(f"{family!r} has no reparameterization path")
    eps = _prepare(model, family, cfg)
    z, weights, per_sample = reparam_terms(model, family, params, eps, cfg.keep_score_term)
    return _gradient_from_terms(EstimatorKind.REPARAMETERIZED, z, weights, per_sample, cfg.samples)


def grad_pathwise(f_grad_z: Callable, family: VariationalFamily, params: VariationalParams,
                  cfg: EstimatorConfig = EstimatorConfig()) -> GradientEstimate:
    """Pathwise gradient of E_q[f(z)] for an arbitrary differentiable ``f``,
    given its derivative ``f_grad_z``."""
    eps = draw_noise(cfg)
    z = family.reparam_sample(params, eps)
    per_sample = np.asarray(f_grad_z(z))[:, None] * family.reparam_jacobian(params, eps)
    return _gradient_from_terms(EstimatorKind.REPARAMETERIZED, z, np.zeros_like(z), per_sample, cfg.samples)


def estimate_gradient(kind, model, family, params, cfg: EstimatorConfig = EstimatorConfig()) -> GradientEstimate:
    kind = EstimatorKind(kind)
    if kind is EstimatorKind.CLOSED_FORM:
        return grad_closed_form(model, family, params)
    if kind is EstimatorKind.SCORE_FUNCTION:
        return grad_score_function(model, family, params, cfg)
    return grad_reparam(model, family, params, cfg)


def evidence_gap(model: GammaExpModel, family: VariationalFamily, params: VariationalParams,
                 spec: QuadratureSpec = QuadratureSpec()) -> EvidenceGap:
    """(ELBO, KL to the exact posterior, log evidence) for a conjugate model.

    The three are computed independently, so ``elbo + kl == log_evidence``
    is a genuine check rather than a tautology.
    """
    require_compatible(family, model)
    if isinstance(family, LognormalFamily):
        elbo = elbo_closed_form(model.alpha, model.beta, model.x, params.loc, params.scale)
    else:
        elbo = quad_elbo(model, family, params, spec)
    kl = quad_kl(family.distribution(params), model.analytic_posterior(), spec)
    return EvidenceGap(float(elbo), float(kl), float(model.log_evidence()))
