"""Joint models ``p(x, z)`` seen through a small closed interface: the log
joint, its derivative in the (scalar) latent, and the latent support.

The estimators never look inside a model, so anything exposing these three
members can be plugged in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .distributions import POSITIVE_REALS, Exponential, Gamma, Interval

__all__ = ["Model", "CallableModel", "GammaExpModel"]


class Model:
    """Interface for a joint density over one scalar latent."""

    latent_support: Interval

    def log_joint(self, z):
        raise NotImplementedError

    def log_joint_grad_z(self, z):
        raise NotImplementedError


@dataclass(frozen=True)
class CallableModel(Model):
    """Model assembled from plain functions.

    ``log_joint`` must already return ``-inf`` outside ``latent_support``.
    """

    log_joint_fn: Callable
    grad_fn: Callable
    latent_support: Interval
    observation: object = None

    def log_joint(self, z):
        return self.log_joint_fn(z)

    def log_joint_grad_z(self, z):
        return self.grad_fn(z)


@dataclass(frozen=True)
class GammaExpModel(Model):
    """Exponential(rate=lam) likelihood with a Gamma(alpha, beta) prior on lam.

    ``x`` is usually a scalar; an array of observations broadcasts against
    ``z`` elementwise (one latent per observation), which is how the
    factorized model in :mod:`parvi.amortize` evaluates a batch.
    """

    alpha: float
    beta: float
    x: float

    latent_support = POSITIVE_REALS

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be > 0, got {self.beta}")
        x = np.asarray(self.x, dtype=float)
        if not np.all(np.isfinite(x)) or np.any(x < 0):
            raise ValueError(f"observations must be finite and >= 0, got {self.x}")

    @property
    def prior(self) -> Gamma:
        return Gamma(self.alpha, self.beta)

    def log_joint(self, z):
        """log p(x | lam) + log p(lam); ``-inf`` for lam <= 0."""
        z = np.asarray(z, dtype=float)
        if not np.all(np.isfinite(z)):
            raise ValueError("log_joint requires finite latent values")
        a, b = self.alpha, self.beta
        x = np.asarray(self.x, dtype=float)
        pos = z > 0
        zs = np.where(pos, z, 1.0)
        val = a * math.log(b) - special.gammaln(a) + a * np.log(zs) - (b + x) * zs
        out = np.where(pos, val, -np.inf)
        return float(out) if out.ndim == 0 else out

    def log_joint_grad_z(self, z):
        z = np.asarray(z, dtype=float)
        if np.any(~(z > 0)):
            raise ValueError("log_joint_grad_z is defined only for lam > 0")
        out = self.alpha / z - (self.beta + np.asarray(self.x, dtype=float))
        return float(out) if out.ndim == 0 else out

    def likelihood(self, lam: float) -> Exponential:
        return Exponential(lam)

    def analytic_posterior(self) -> Gamma:
        return Gamma(self.alpha + 1.0, self.beta + float(self.x))

    def log_evidence(self):
        a, b = self.alpha, self.beta
        out = math.log(a) + a * math.log(b) - (a + 1.0) * np.log(b + np.asarray(self.x, dtype=float))
        return float(out) if np.ndim(out) == 0 else out

    def optimal_lognormal(self) -> tuple[float, float]:
        """Maximizer (mu, sigma) of the closed-form Lognormal ELBO."""
        a, b = self.alpha, self.beta
        sigma = 1.0 / math.sqrt(a + 1.0)
        mu = np.log((a + 1.0) / (b + np.asarray(self.x, dtype=float))) - 0.5 * sigma**2
        return (float(mu) if np.ndim(mu) == 0 else mu), sigma
