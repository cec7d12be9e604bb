"""Brute-force reference computations.

Everything here is deliberately plain: composite Simpson quadrature with node
doubling, and central finite differences.  These routines are the yardstick
for the closed forms and Monte Carlo estimators elsewhere in the package, so
they share no code with them beyond density evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .distributions import POSITIVE_REALS, Distribution, Interval
from .varfam import SupportError, VariationalFamily, VariationalParams

__all__ = [
    "QuadratureSpec",
    "QuadratureError",
    "simpson",
    "quad_log_evidence",
    "quad_kl",
    "quad_elbo",
    "finite_diff_grad",
]

# how far below the peak (in log units) the integration window must reach
_TAIL_DROP = 60.0


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    """Settings for the transformed Simpson rule.

    ``transform`` is ``"log"`` (integrate over y = log z, for positive
    latents), ``"identity"`` or ``None`` to pick from the support.  ``bounds``
    are in the transformed variable; when omitted they are located
    automatically around the integrand's mode.
    """

    transform: str | None = None
    nodes: int = 64
    bounds: tuple[float, float] | None = None
    tol: float = 1e-10
    max_nodes: int = 2**22

    def __post_init__(self):
        if self.nodes < 64:
            raise ValueError("at least 64 quadrature nodes are required")
        if self.transform not in (None, "log", "identity"):
            raise ValueError(f"unknown transform {self.transform!r}")
        if self.bounds is not None and not all(map(math.isfinite, self.bounds)):
            raise ValueError("quadrature bounds must be finite")

    def resolve(self, support: Interval) -> str:
        if self.transform is not None:
            return self.transform
        return "log" if support == POSITIVE_REALS else "identity"


def simpson(f: Callable, lo: float, hi: float, nodes: int = 64, tol: float = 1e-10,
            max_nodes: int = 2**22) -> float:
    """Composite Simpson rule on [lo, hi], doubling intervals until two
    successive values differ by less than ``tol``."""
    n = nodes + (nodes % 2)
    prev = None
    while n <= max_nodes:
        y = np.linspace(lo, hi, n + 1)
        fy = f(y)
        w = np.ones(n + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        val = float(np.dot(w, fy) * (hi - lo) / (3.0 * n))
        if prev is not None and abs(val - prev) < tol:
            return val
        prev = val
        n *= 2
    raise QuadratureError(f"no convergence up to {max_nodes} nodes; last values {prev!r}")


def _window(log_w: Callable, transform: str, spec: QuadratureSpec) -> tuple[float, float]:
    """Finite window in the transformed variable outside of which the
    log-weight has fallen more than ``_TAIL_DROP`` below its peak."""
    if spec.bounds is not None:
        return spec.bounds
    span = 60.0 if transform == "log" else 1e3
    grid = np.linspace(-span, span, 24001)
    with np.errstate(all="ignore"):
        lw = np.nan_to_num(log_w(grid), nan=-np.inf, posinf=-np.inf)
    k = int(np.argmax(lw))
    peak = lw[k]
    if not math.isfinite(peak):
        raise QuadratureError("integrand vanishes on the search grid")
    c = grid[k]
    h = 1e-3
    curv = (log_w(np.array([c + h]))[0] - 2 * peak + log_w(np.array([c - h]))[0]) / h**2
    width = 1.0 / math.sqrt(-curv) if curv < 0 else 1.0
    lo, hi = c - 12 * width, c + 12 * width
    while log_w(np.array([lo]))[0] > peak - _TAIL_DROP:
        lo -= width
    while log_w(np.array([hi]))[0] > peak - _TAIL_DROP:
        hi += width
    return lo, hi


def _to_latent(transform):
    if transform == "log":
        return np.exp, lambda y: y  # z, log|dz/dy|
    return (lambda y: y), (lambda y: np.zeros_like(y))


def quad_log_evidence(model, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """log of the integral of exp(log_joint) over the latent."""
    transform = spec.resolve(model.latent_support)
    to_z, log_jac = _to_latent(transform)

    def log_w(y):
        with np.errstate(over="ignore"):
            z = to_z(y)
        z = np.where(np.isfinite(z), z, 1e300)
        return np.asarray(model.log_joint(z)) + log_jac(y)

    lo, hi = _window(log_w, transform, spec)
    grid = np.linspace(lo, hi, 4097)
    peak = float(np.max(log_w(grid)))
    total = simpson(lambda y: np.exp(log_w(y) - peak), lo, hi, spec.nodes, spec.tol, spec.max_nodes)
    return math.log(total) + peak


def _quad_expectation(log_q: Callable, g: Callable, support: Interval, spec: QuadratureSpec) -> float:
    """Integral of exp(log_q(z)) * g(z) over the support."""
    transform = spec.resolve(support)
    to_z, log_jac = _to_latent(transform)

    def log_w(y):
        with np.errstate(over="ignore"):
            z = to_z(y)
        z = np.where(np.isfinite(z), z, 1e300)
        return np.asarray(log_q(z)) + log_jac(y)

    lo, hi = _window(log_w, transform, spec)

    def integrand(y):
        z = to_z(y)
        w = np.exp(log_w(y))
        gz = g(z)
        return np.where(w > 0, w * gz, 0.0)

    return simpson(integrand, lo, hi, spec.nodes, spec.tol, spec.max_nodes)


def quad_kl(q: Distribution, p: Distribution, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """KL(q || p) by quadrature over the support of q."""
    if not q.support.issubset(p.support):
        raise SupportError(f"support of q {q.support} is not contained in support of p {p.support}")

    def g(z):
        with np.errstate(invalid="ignore"):
            return q.log_pdf(z) - p.log_pdf(z)

    return _quad_expectation(q.log_pdf, g, q.support, spec)


def quad_elbo(model, family: VariationalFamily, params: VariationalParams,
              spec: QuadratureSpec = QuadratureSpec()) -> float:
    """ELBO of q_theta against ``model`` by quadrature over the family support."""
    if not family.support.issubset(model.latent_support):
        raise SupportError(f"family support {family.support} exceeds latent support {model.latent_support}")
    q = family.distribution(params)
    return _quad_expectation(q.log_pdf, lambda z: model.log_joint(z) - q.log_pdf(z), q.support, spec)


def finite_diff_grad(f: Callable, theta, h=None) -> np.ndarray:
    """Central differences of scalar ``f`` at ``theta``.

    Default step per coordinate is ``1e-5 * max(1, |theta_i|)``.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if h is None:
        steps = 1e-5 * np.maximum(1.0, np.abs(theta))
    else:
        steps = np.broadcast_to(np.asarray(h, dtype=float), theta.shape)
    grad = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = steps[i]
        fp, fm = float(f(theta + e)), float(f(theta - e))
        if not (math.isfinite(fp) and math.isfinite(fm)):
            raise ValueError(f"non-finite evaluation at coordinate {i}: f(+)={fp}, f(-)={fm}")
        grad[i] = (fp - fm) / (2.0 * steps[i])
    return grad
