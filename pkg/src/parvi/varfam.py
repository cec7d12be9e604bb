"""Variational families q_theta(z) over a scalar latent.

Two location/scale families are provided, Normal and Lognormal.  Both are
reparameterizable through ``z = g(eps)`` with ``eps ~ N(0, 1)``:
``mu + sigma * eps`` and ``exp(mu + sigma * eps)`` respectively.

Coordinates: scores and Jacobians are reported with respect to
``(mu, sigma)``.  The optimizer works in the unconstrained ``(mu, log sigma)``
frame; :meth:`VariationalParams.to_unconstrained_grad` applies the chain-rule
factor ``sigma`` to the second component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import (
    LOG_SQRT_2PI,
    POSITIVE_REALS,
    REALS,
    Distribution,
    Interval,
    Lognormal,
    Normal,
)

__all__ = [
    "VariationalParams",
    "VariationalFamily",
    "NormalFamily",
    "LognormalFamily",
    "NORMAL",
    "LOGNORMAL",
    "SupportError",
    "SupportReport",
    "support_compatible",
    "require_compatible",
    "SUPPORT_RULE",
]

SUPPORT_RULE = "q(z) needs to be zero whenever p(z|x) is zero"


@dataclass(frozen=True)
class VariationalParams:
    """Location ``mu`` and scale ``sigma``, stored as ``(mu, log sigma)``."""

    loc: float
    log_scale: float

    def __post_init__(self):
        if not (math.isfinite(self.loc) and math.isfinite(self.log_scale)):
            raise ValueError(f"non-finite variational parameters ({self.loc}, {self.log_scale})")

    @classmethod
    def from_loc_scale(cls, loc: float, scale: float) -> VariationalParams:
        if not scale > 0:
            raise ValueError(f"scale must be > 0, got {scale}")
        return cls(float(loc), math.log(scale))

    @classmethod
    def from_unconstrained(cls, vec) -> VariationalParams:
        loc, log_scale = np.asarray(vec, dtype=float)
        return cls(float(loc), float(log_scale))

    @property
    def scale(self) -> float:
        return math.exp(self.log_scale)

    def to_unconstrained(self) -> np.ndarray:
        return np.array([self.loc, self.log_scale])

    def to_unconstrained_grad(self, grad) -> np.ndarray:
        """Map a gradient in (mu, sigma) to one in (mu, log sigma)."""
        grad = np.asarray(grad, dtype=float)
        return grad * np.array([1.0, self.scale])


class SupportError(ValueError):
    """Variational family puts mass where the model's posterior has none."""


@dataclass(frozen=True)
class SupportReport:
    ok: bool
    family_support: Interval
    latent_support: Interval

    def __bool__(self) -> bool:
        return self.ok

    @property
    def message(self) -> str:
        if self.ok:
            return f"family support {self.family_support} is contained in latent support {self.latent_support}"
        return (
            f"family support {self.family_support} is not contained in the model's "
            f"latent support {self.latent_support}: {SUPPORT_RULE}"
        )


class VariationalFamily:
    name: str = ""
    support: Interval = REALS
    reparameterizable: bool = True

    def distribution(self, params: VariationalParams) -> Distribution:
        raise NotImplementedError

    def log_density(self, params: VariationalParams, z):
        return self.distribution(params).log_pdf(z)

    def score(self, params: VariationalParams, z) -> np.ndarray:
        """Gradient of log q wrt (mu, sigma); last axis has length 2."""
        z = np.asarray(z, dtype=float)
        if not np.all(self.support.contains(z)):
            raise ValueError(f"score evaluated outside family support {self.support}")
        d = self._centered(params, z)
        s = params.scale
        s2 = s * s
        return np.stack([d / s2, (d * d / s2 - 1.0) / s], axis=-1)

    def grad_z_log_density(self, params: VariationalParams, z):
        """d/dz log q(z) with the parameters held fixed."""
        raise NotImplementedError

    def reparam_sample(self, params: VariationalParams, eps):
        raise NotImplementedError

    def reparam_jacobian(self, params: VariationalParams, eps) -> np.ndarray:
        """dz/d(mu, sigma) along the path ``z = g(eps)``; last axis length 2."""
        raise NotImplementedError

    def _centered(self, params, z):
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class NormalFamily(VariationalFamily):
    name = "normal"
    support = REALS

    def distribution(self, params):
        return Normal(params.loc, params.scale)

    def _centered(self, params, z):
        return z - params.loc

    def grad_z_log_density(self, params, z):
        return -(np.asarray(z, dtype=float) - params.loc) / params.scale**2

    def reparam_sample(self, params, eps):
        return params.loc + params.scale * np.asarray(eps, dtype=float)

    def reparam_jacobian(self, params, eps):
        eps = np.asarray(eps, dtype=float)
        return np.stack([np.ones_like(eps), eps], axis=-1)


class LognormalFamily(VariationalFamily):
    name = "lognormal"
    support = POSITIVE_REALS

    def distribution(self, params):
        return Lognormal(params.loc, params.scale)

    def _centered(self, params, z):
        return np.log(z) - params.loc

    def grad_z_log_density(self, params, z):
        z = np.asarray(z, dtype=float)
        return -(1.0 + (np.log(z) - params.loc) / params.scale**2) / z

    def reparam_sample(self, params, eps):
        return np.exp(params.loc + params.scale * np.asarray(eps, dtype=float))

    def reparam_jacobian(self, params, eps):
        eps = np.asarray(eps, dtype=float)
        z = self.reparam_sample(params, eps)
        return np.stack([z, eps * z], axis=-1)

    def log_density(self, params, z):
        # inline form; avoids building a Distribution per call in hot loops
        z = np.asarray(z, dtype=float)
        if not np.all(np.isfinite(z)):
            raise ValueError("log_density requires finite arguments")
        pos = z > 0
        logz = np.log(np.where(pos, z, 1.0))
        u = (logz - params.loc) / params.scale
        out = np.where(pos, -0.5 * u * u - params.log_scale - LOG_SQRT_2PI - logz, -np.inf)
        return float(out) if out.ndim == 0 else out


NORMAL = NormalFamily()
LOGNORMAL = LognormalFamily()

FAMILIES = {f.name: f for f in (NORMAL, LOGNORMAL)}


def support_compatible(family: VariationalFamily, model) -> SupportReport:
    """Check that the family's support lies inside the model's latent support."""
    latent = model.latent_support
    return SupportReport(family.support.issubset(latent), family.support, latent)


def require_compatible(family: VariationalFamily, model) -> None:
    report = support_compatible(family, model)
    if not report:
        raise SupportError(report.message)
