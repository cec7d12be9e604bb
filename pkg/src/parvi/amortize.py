"""Amortized inference for the factorized Gamma-Exponential model.

Each observation x_i has its own rate lam_i ~ Gamma(alpha, beta) and
x_i ~ Exponential(lam_i).  Instead of fitting one Lognormal (mu_i, sigma_i)
per point, a one-hidden-layer tanh network maps x_i to (mu_i, log sigma_i)
and is trained on the negated sum of local ELBOs.

The network is small enough that forward and backward passes are written
out by hand; gradients of the local ELBO wrt (mu_i, sigma_i) come from the
pathwise estimator in :mod:`parvi.estimators`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .distributions import Gamma, RngState
from .estimators import elbo_closed_form, reparam_terms
from .model import GammaExpModel
from .varfam import LOGNORMAL, VariationalParams

__all__ = [
    "Dataset",
    "Encoder",
    "AmortizeConfig",
    "LocalElboError",
    "AmortizationReport",
    "TrainingTrace",
    "encoder_forward",
    "local_elbo_objective",
    "train_amortized",
    "amortization_report",
    "expected_loss",
]


class LocalElboError(FloatingPointError):
    def __init__(self, index: int, message: str):
        super().__init__(f"data point {index}: {message}")
        self.index = index


@dataclass(frozen=True)
class Dataset:
    observations: np.ndarray

    def __post_init__(self):
        obs = np.asarray(self.observations, dtype=float).ravel()
        if obs.size < 1:
            raise ValueError("dataset must contain at least one observation")
        bad = np.flatnonzero(~(np.isfinite(obs) & (obs > 0)))
        if bad.size:
            raise ValueError(f"observation {bad[0]} is not a positive finite number: {obs[bad[0]]}")
        object.__setattr__(self, "observations", obs)

    def __len__(self):
        return self.observations.size

    @classmethod
    def from_file(cls, path) -> Dataset:
        """One positive decimal per line; blank lines are skipped."""
        values = []
        for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
            text = line.strip()
            if not text:
                continue
            try:
                v = float(text)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not a number: {text!r}") from None
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{path}:{lineno}: observation must be positive, got {text}")
            values.append(v)
        if not values:
            raise ValueError(f"{path}: no observations")
        return cls(np.array(values))

    @classmethod
    def generate(cls, alpha: float, beta: float, n: int, rng: RngState) -> Dataset:
        """Draw lam_i from the prior, then x_i ~ Exponential(lam_i)."""
        lam = Gamma(alpha, beta).sample(rng, n)
        x = rng.generator(1).exponential(1.0 / lam)
        return cls(x)

    def to_text(self) -> str:
        return "".join(f"{v:.17g}\n" for v in self.observations)


def _feature(x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(x) & (x > 0)):
        raise ValueError("encoder input must be positive and finite")
    return np.log(x)


@dataclass(frozen=True)
class Encoder:
    """log x -> tanh(w1 * log x + b1) -> (mu, log sigma) = w2 @ h + b2.

    Observations are positive and heavy-tailed, so the network sees log x.
    """

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    @property
    def hidden(self) -> int:
        return self.b1.size

    @classmethod
    def init(cls, hidden: int, rng: RngState) -> Encoder:
        # first layer U(+-1/sqrt(fan_in)) with fan_in = 1; output layer zeroed
        # so every point starts at (mu, sigma) = (0, 1)
        if hidden < 1:
            raise ValueError("hidden width must be >= 1")
        g = rng.generator()
        return cls(
            g.uniform(-1.0, 1.0, hidden),
            g.uniform(-1.0, 1.0, hidden),
            np.zeros((2, hidden)),
            np.zeros(2),
        )

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.w1, self.b1, self.w2.ravel(), self.b2])

    @classmethod
    def from_vector(cls, vec, hidden: int) -> Encoder:
        vec = np.asarray(vec, dtype=float)
        h = hidden
        if vec.size != 4 * h + 2:
            raise ValueError(f"expected {4 * h + 2} parameters for hidden={h}, got {vec.size}")
        return cls(vec[:h].copy(), vec[h:2 * h].copy(), vec[2 * h:4 * h].reshape(2, h).copy(), vec[4 * h:].copy())

    def forward(self, x):
        """Batched forward pass.  Returns (outputs (B, 2), hidden activations (B, H))."""
        u = _feature(x)
        h = np.tanh(np.outer(u, self.w1) + self.b1)
        return h @ self.w2.T + self.b2, h

    def backward(self, x, h, d_out) -> Encoder:
        """Gradient wrt all weights given d loss / d outputs (B, 2)."""
        d_pre = (d_out @ self.w2) * (1.0 - h * h)
        return Encoder(d_pre.T @ _feature(x), d_pre.sum(axis=0), d_out.T @ h, d_out.sum(axis=0))

    def params(self, x) -> list[VariationalParams]:
        out, _ = self.forward(x)
        return [VariationalParams(float(m), float(s)) for m, s in out]


def encoder_forward(encoder: Encoder, x: float) -> VariationalParams:
    return encoder.params(x)[0]


@dataclass(frozen=True)
class AmortizeConfig:
    hidden: int = 16
    batch_size: int = 20
    samples: int = 32
    epochs: int = 50
    step_size: float = 0.01
    seed: int = 0
    report_samples: int = 1000
    schedule: str = "constant"

    def step_at(self, epoch: int) -> float:
        # inverse-sqrt decays per epoch; needed for an exact fit when N is tiny
        if self.schedule == "constant":
            return self.step_size
        return self.step_size / math.sqrt(epoch + 1)

    def __post_init__(self):
        if self.hidden < 1:
            raise ValueError("hidden must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.samples < 1 or self.epochs < 1:
            raise ValueError("samples and epochs must be >= 1")
        if not self.step_size > 0:
            raise ValueError("step_size must be > 0")
        if self.schedule not in ("constant", "inverse-sqrt"):
            raise ValueError(f"unknown schedule {self.schedule!r}")


def local_elbo_objective(ds: Dataset, encoder: Encoder, alpha: float, beta: float, batch,
                         samples: int, rng: RngState):
    """Negated sum of local ELBOs over ``batch`` and its exact gradient.

    Point ``i`` draws its noise from ``rng.generator(i)``, so a point's term
    does not depend on which batch it sits in.  Returns
    ``(loss, grad, local_losses)`` where ``grad`` is an :class:`Encoder`
    holding d loss / d weights.
    """
    batch = np.asarray(batch, dtype=int)
    if batch.size == 0 or batch.min() < 0 or batch.max() >= len(ds):
        raise IndexError("batch indices out of range")
    x = ds.observations[batch]
    out, h = encoder.forward(x)
    local = np.empty(batch.size)
    d_out = np.empty((batch.size, 2))
    for j, i in enumerate(batch):
        eps = rng.generator(int(i)).standard_normal(samples)
        model = GammaExpModel(alpha, beta, float(x[j]))
        try:
            params = VariationalParams(float(out[j, 0]), float(out[j, 1]))
            with np.errstate(over="ignore", invalid="ignore"):
                _, weights, grads = reparam_terms(model, LOGNORMAL, params, eps)
        except (OverflowError, ValueError) as exc:
            raise LocalElboError(int(i), str(exc)) from None
        if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(grads))):
            raise LocalElboError(int(i), "non-finite local ELBO term")
        local[j] = -weights.mean()
        d_out[j] = -params.to_unconstrained_grad(grads.mean(axis=0))
    return math.fsum(local), encoder.backward(x, h, d_out), local


@dataclass
class TrainingTrace:
    """Per-step MC losses, per-epoch mean MC loss, and per-epoch mean of the
    exact (closed-form) loss evaluated after every step."""

    step_losses: list[float] = field(default_factory=list)
    epoch_losses: list[float] = field(default_factory=list)
    expected_losses: list[float] = field(default_factory=list)
    status: str = "running"


@dataclass(frozen=True)
class AmortizationReport:
    x: np.ndarray
    mu_pred: np.ndarray
    sigma_pred: np.ndarray
    mu_opt: np.ndarray
    sigma_opt: float
    gap: float
    gap_mc: float
    gap_se: float

    @property
    def median_abs_mu_error(self) -> float:
        return float(np.median(np.abs(self.mu_pred - self.mu_opt)))


def expected_loss(ds: Dataset, encoder: Encoder, alpha: float, beta: float) -> float:
    """Per-point mean of the negated local ELBOs, computed in closed form."""
    out, _ = encoder.forward(ds.observations)
    with np.errstate(over="ignore"):
        elbos = elbo_closed_form(alpha, beta, ds.observations, out[:, 0], np.exp(out[:, 1]))
    return -math.fsum(elbos) / len(ds)


def amortization_report(ds: Dataset, encoder: Encoder, alpha: float, beta: float,
                        samples: int = 1000, rng: RngState = RngState()) -> AmortizationReport:
    """Compare encoder outputs with the per-point ELBO maximizers.

    ``gap`` is exact (closed-form ELBOs); ``gap_mc`` re-estimates it with
    common random numbers per point and carries standard error ``gap_se``.
    """
    x = ds.observations
    out, _ = encoder.forward(x)
    mu_pred, sigma_pred = out[:, 0], np.exp(out[:, 1])
    mu_opt, sigma_opt = GammaExpModel(alpha, beta, x).optimal_lognormal()
    gap = math.fsum(
        elbo_closed_form(alpha, beta, x, mu_opt, sigma_opt) - elbo_closed_form(alpha, beta, x, mu_pred, sigma_pred)
    )
    means, variances = [], []
    for i in range(x.size):
        eps = rng.generator(i).standard_normal(samples)
        model = GammaExpModel(alpha, beta, float(x[i]))
        best = VariationalParams.from_loc_scale(float(mu_opt[i]), sigma_opt)
        pred = VariationalParams(float(out[i, 0]), float(out[i, 1]))
        _, w_best, _ = reparam_terms(model, LOGNORMAL, best, eps)
        _, w_pred, _ = reparam_terms(model, LOGNORMAL, pred, eps)
        d = w_best - w_pred
        means.append(d.mean())
        variances.append(d.var(ddof=1) / samples if samples > 1 else math.inf)
    return AmortizationReport(
        x, mu_pred, sigma_pred, mu_opt, sigma_opt, gap,
        math.fsum(means), math.sqrt(math.fsum(variances)),
    )


def train_amortized(ds: Dataset, alpha: float, beta: float, cfg: AmortizeConfig = AmortizeConfig()):
    """Minibatch SGD on the negated sum of local ELBOs.

    The update uses the batch-mean gradient.  Randomness: epoch ``e``
    shuffles with ``RngState(seed, 0).generator(e)``; step ``t`` draws
    per-point noise from ``RngState(seed, t + 2)``.  Returns
    ``(encoder, trace, report)``; a non-finite loss halts training with
    ``trace.status == "diverged"``.
    """
    n = len(ds)
    batch_size = min(cfg.batch_size, n)
    encoder = Encoder.init(cfg.hidden, RngState(cfg.seed, 1))
    trace = TrainingTrace()
    t = 0
    for epoch in range(cfg.epochs):
        order = RngState(cfg.seed, 0).generator(epoch).permutation(n)
        epoch_total = 0.0
        exact = []
        for start in range(0, n, batch_size):
            batch = order[start:start + batch_size]
            try:
                loss, grad, _ = local_elbo_objective(ds, encoder, alpha, beta, batch, cfg.samples,
                                                     RngState(cfg.seed, t + 2))
            except LocalElboError:
                trace.status = "diverged"
                return encoder, trace, None
            if not math.isfinite(loss):
                trace.status = "diverged"
                return encoder, trace, None
            step = cfg.step_at(epoch) / batch.size
            encoder = Encoder.from_vector(encoder.to_vector() - step * grad.to_vector(), cfg.hidden)
            trace.step_losses.append(loss / batch.size)
            exact.append(expected_loss(ds, encoder, alpha, beta))
            epoch_total += loss
            t += 1
        trace.epoch_losses.append(epoch_total / n)
        trace.expected_losses.append(math.fsum(exact) / len(exact))
    trace.status = "completed"
    report = amortization_report(ds, encoder, alpha, beta, cfg.report_samples, RngState(cfg.seed, 1))
    return encoder, trace, report
