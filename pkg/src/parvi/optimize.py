"""Plain gradient ascent on the ELBO over (mu, log sigma)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import RngState
from .estimators import EstimatorConfig, EstimatorKind, estimate_gradient, evidence_gap
from .oracle import QuadratureSpec
from .varfam import VariationalFamily, VariationalParams, require_compatible

__all__ = ["OptConfig", "TraceRecord", "OptTrace", "ascend", "elbo_curve", "CurvePoint"]

SMOOTHING = 0.9


@dataclass(frozen=True)
class OptConfig:
    """Settings for :func:`ascend`.

    ``schedule`` is ``"constant"`` or ``"inverse-sqrt"`` (step size
    ``step_size / sqrt(k + 1)``); ``None`` picks constant for the closed-form
    gradient and inverse-sqrt for Monte Carlo estimators.
    """

    step_size: float = 0.05
    max_steps: int = 5000
    schedule: str | None = None
    tolerance: float = 1e-6
    grad_estimator: EstimatorKind = EstimatorKind.CLOSED_FORM
    samples_per_step: int = 256
    rng: RngState = field(default_factory=RngState)

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError(f"step_size must be > 0, got {self.step_size}")
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.schedule not in (None, "constant", "inverse-sqrt"):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        object.__setattr__(self, "grad_estimator", EstimatorKind(self.grad_estimator))

    @property
    def resolved_schedule(self) -> str:
        if self.schedule is not None:
            return self.schedule
        return "constant" if self.grad_estimator is EstimatorKind.CLOSED_FORM else "inverse-sqrt"

    def step_at(self, k: int) -> float:
        if self.resolved_schedule == "constant":
            return self.step_size
        return self.step_size / math.sqrt(k + 1)


@dataclass(frozen=True)
class TraceRecord:
    step: int
    loc: float
    scale: float
    elbo: float
    grad_loc: float
    grad_scale: float


@dataclass
class OptTrace:
    records: list[TraceRecord] = field(default_factory=list)
    converged: bool = False
    status: str = "running"

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


def ascend(model, family: VariationalFamily, params0: VariationalParams | None = None,
           cfg: OptConfig = OptConfig()):
    """Maximize the ELBO by gradient ascent.

    Iterates ``u_{k+1} = u_k + eta_k * grad_u ELBO`` in ``u = (mu, log sigma)``.
    Stops when the exponentially smoothed gradient norm drops below
    ``cfg.tolerance`` or after ``cfg.max_steps`` updates.  Step ``k`` draws
    from substream ``k`` of ``cfg.rng``, so runs are reproducible.

    Returns ``(params, trace)``.  A non-finite gradient halts the run with
    ``trace.status == "failed"`` and the partial trace.
    """
    require_compatible(family, model)
    params = params0 if params0 is not None else VariationalParams.from_loc_scale(0.0, 1.0)
    trace = OptTrace()
    smoothed = None
    for k in range(cfg.max_steps + 1):
        est_cfg = EstimatorConfig(cfg.samples_per_step, cfg.rng.substream(k))
        est = estimate_gradient(cfg.grad_estimator, model, family, params, est_cfg)
        grad = np.asarray(est.grad, dtype=float)
        if not (est.ok and np.all(np.isfinite(grad))):
            trace.status = "failed"
            return params, trace
        trace.records.append(TraceRecord(k, params.loc, params.scale, est.elbo, *grad))
        g_u = params.to_unconstrained_grad(grad)
        norm = float(np.linalg.norm(g_u))
        smoothed = norm if smoothed is None else SMOOTHING * smoothed + (1 - SMOOTHING) * norm
        if smoothed < cfg.tolerance:
            trace.converged = True
            trace.status = "converged"
            return params, trace
        if k == cfg.max_steps:
            break
        params = VariationalParams.from_unconstrained(params.to_unconstrained() + cfg.step_at(k) * g_u)
    trace.status = "max-steps"
    return params, trace


@dataclass(frozen=True)
class CurvePoint:
    loc: float
    elbo: float
    kl: float
    log_evidence: float


def elbo_curve(model, family: VariationalFamily, scale: float, locs,
               spec: QuadratureSpec = QuadratureSpec()) -> list[CurvePoint]:
    """ELBO, KL and log evidence along a grid of locations at fixed scale."""
    out = []
    for mu in np.asarray(locs, dtype=float):
        gap = evidence_gap(model, family, VariationalParams.from_loc_scale(float(mu), scale), spec)
        out.append(CurvePoint(float(mu), *gap))
    return out
