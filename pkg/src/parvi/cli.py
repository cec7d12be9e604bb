"""Command-line front end.

Subcommands: ``elbo-curve``, ``fit``, ``gradcheck``, ``amortize``.  Tables go
to ``--output`` (stdout by default) as CSV or JSON lines; the first record is
always a metadata record holding the command, the full configuration and the
package version.  Diagnostics go to stderr.  Numbers are written with 9
significant digits and nothing time-dependent is emitted, so identical
arguments give byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__
from .amortize import AmortizeConfig, Dataset, train_amortized
from .distributions import RngState
from .estimators import EstimatorConfig, EstimatorKind, elbo_closed_form_grad, grad_reparam, grad_score_function
from .model import GammaExpModel
from .optimize import OptConfig, ascend, elbo_curve
from .varfam import FAMILIES, VariationalParams, require_compatible

PROG = "parvi"


class CliError(Exception):
    pass


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    return f"{float(v):.9g}"


def _json_value(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return float(f"{v:.9g}") if math.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (list, tuple)):
        return [_json_value(u) for u in v]
    if isinstance(v, dict):
        return {k: _json_value(u) for k, u in v.items()}
    return v


class TableWriter:
    """Writes a metadata record, a header and rows in CSV or JSON-lines."""

    def __init__(self, stream, fmt: str, meta: dict, columns: list[str]):
        self.stream, self.fmt, self.columns = stream, fmt, columns
        if fmt == "csv":
            self._line("# " + json.dumps(_json_value(meta), sort_keys=True))
            self._line(",".join(columns))
        else:
            self._line(json.dumps({"meta": _json_value(meta)}, sort_keys=True))

    def _line(self, text: str):
        self.stream.write(text + "\n")

    def row(self, *values):
        if self.fmt == "csv":
            self._line(",".join(_fmt(v) for v in values))
        else:
            rec = {c: _json_value(v) for c, v in zip(self.columns, values)}
            self._line(json.dumps(rec))

    def trailer(self, key: str, payload: dict):
        if self.fmt == "csv":
            self._line(f"# {key} " + json.dumps(_json_value(payload), sort_keys=True))
        else:
            self._line(json.dumps({key: _json_value(payload)}, sort_keys=True))


@contextmanager
def _open_output(path):
    if path in (None, "-"):
        yield sys.stdout
        return
    try:
        fh = open(path, "w", newline="\n")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror}") from None
    with fh:
        yield fh


def _meta(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command")}
    return {"command": args.command, "config": cfg, "seed": getattr(args, "seed", None), "version": __version__}


def _model(args) -> GammaExpModel:
    try:
        return GammaExpModel(args.alpha, args.beta, args.x_obs)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _positive(name, v):
    if not (math.isfinite(v) and v > 0):
        raise CliError(f"{name} must be > 0, got {v}")


def cmd_elbo_curve(args) -> int:
    _positive("--sigma", args.sigma)
    model = _model(args)
    family = FAMILIES[args.family]
    if args.mu:
        grid = np.array(args.mu, dtype=float)
    else:
        if args.mu_step <= 0 or args.mu_max < args.mu_min:
            raise CliError("need --mu-step > 0 and --mu-max >= --mu-min")
        count = int(math.floor((args.mu_max - args.mu_min) / args.mu_step + 1e-9)) + 1
        grid = args.mu_min + args.mu_step * np.arange(count)
    require_compatible(family, model)
    rows = elbo_curve(model, family, args.sigma, grid)
    with _open_output(args.output) as out:
        w = TableWriter(out, args.format, _meta(args), ["mu", "elbo", "kl", "log_evidence"])
        for r in rows:
            w.row(r.loc, r.elbo, r.kl, r.log_evidence)
    return 0


def cmd_fit(args) -> int:
    model = _model(args)
    family = FAMILIES[args.family]
    require_compatible(family, model)
    _positive("--sigma0", args.sigma0)
    try:
        cfg = OptConfig(
            step_size=args.step_size, max_steps=args.max_steps, schedule=args.schedule,
            tolerance=args.tolerance, grad_estimator=EstimatorKind(args.estimator),
            samples_per_step=args.samples, rng=RngState(args.seed),
        )
        params, trace = ascend(model, family, VariationalParams.from_loc_scale(args.mu0, args.sigma0), cfg)
    except (ValueError, TypeError) as exc:
        raise CliError(str(exc)) from None
    columns = ["step", "mu", "sigma", "elbo", "grad_mu", "grad_sigma"]
    summary = {
        "mu": params.loc, "sigma": params.scale,
        "elbo": trace.records[-1].elbo if trace.records else math.nan,
        "steps": max(len(trace) - 1, 0), "status": trace.status, "seed": args.seed,
    }
    with _open_output(args.output) as out:
        w = TableWriter(out, args.format, _meta(args), columns)
        for r in trace:
            w.row(r.step, r.loc, r.scale, r.elbo, r.grad_loc, r.grad_scale)
        w.trailer("summary", summary)
    print(
        "fit: mu={mu} sigma={sigma} elbo={elbo} steps={steps} status={status} seed={seed}".format(
            **{k: _fmt(v) for k, v in summary.items()}
        ),
        file=sys.stderr,
    )
    return 0 if trace.status != "failed" else 1


def cmd_gradcheck(args) -> int:
    model = _model(args)
    family = FAMILIES[args.family]
    require_compatible(family, model)
    if args.repeats < 2:
        raise CliError("--repeats must be >= 2")
    estimators = [("score", grad_score_function), ("reparam", grad_reparam)]
    columns = ["mu", "sigma", "estimator", "mean_grad_mu", "mean_grad_sigma", "se_mu", "se_sigma",
               "var_mu", "var_sigma", "truth_mu", "truth_sigma"]
    with _open_output(args.output) as out:
        w = TableWriter(out, args.format, _meta(args), columns)
        for mu in args.mu:
            for sigma in args.sigma:
                _positive("--sigma", sigma)
                params = VariationalParams.from_loc_scale(mu, sigma)
                truth = elbo_closed_form_grad(args.alpha, args.beta, args.x_obs, mu, sigma)
                for name, fn in estimators:
                    grads = np.array([
                        fn(model, family, params, EstimatorConfig(args.samples, RngState(args.seed, r))).grad
                        for r in range(args.repeats)
                    ])
                    mean = grads.mean(axis=0)
                    var = grads.var(axis=0, ddof=1)
                    se = np.sqrt(var / args.repeats)
                    w.row(mu, sigma, name, *mean, *se, *var, *truth)
    return 0


def cmd_amortize(args) -> int:
    if args.data is not None:
        path = Path(args.data)
        if not path.is_file():
            raise CliError(f"dataset file not found: {path}")
        try:
            ds = Dataset.from_file(path)
        except ValueError as exc:
            raise CliError(str(exc)) from None
    else:
        ds = Dataset.generate(args.alpha, args.beta, args.generate, RngState(args.seed, 2**32))
    try:
        cfg = AmortizeConfig(hidden=args.hidden, batch_size=args.batch_size, samples=args.samples,
                             epochs=args.epochs, step_size=args.step_size, seed=args.seed,
                             schedule=args.schedule)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    encoder, trace, report = train_amortized(ds, args.alpha, args.beta, cfg)
    if report is None:
        raise CliError(f"training diverged after {len(trace.step_losses)} steps")
    columns = ["x", "mu_pred", "sigma_pred", "mu_opt", "sigma_opt"]
    with _open_output(args.output) as out:
        w = TableWriter(out, args.format, _meta(args), columns)
        for i in range(len(ds)):
            w.row(report.x[i], report.mu_pred[i], report.sigma_pred[i], report.mu_opt[i], report.sigma_opt)
        w.trailer("training_curve", {"epoch_loss": trace.epoch_losses, "expected_loss": trace.expected_losses})
        w.trailer("summary", {
            "n": len(ds), "gap": report.gap, "gap_mc": report.gap_mc, "gap_se": report.gap_se,
            "median_abs_mu_error": report.median_abs_mu_error, "seed": args.seed,
        })
    return 0


def _add_model_args(p):
    p.add_argument("--alpha", type=float, default=3.0, help="Gamma prior shape")
    p.add_argument("--beta", type=float, default=1.0, help="Gamma prior rate")
    p.add_argument("--x-obs", type=float, default=1.0, help="observation")
    p.add_argument("--family", choices=sorted(FAMILIES), default="lognormal")


def _add_output_args(p):
    p.add_argument("--output", "-o", default="-", help="output file ('-' for stdout)")
    p.add_argument("--format", choices=["csv", "jsonl"], default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("elbo-curve", help="ELBO, KL and log evidence along a grid of mu")
    _add_model_args(p)
    p.add_argument("--sigma", type=float, default=0.5)
    p.add_argument("--mu", type=float, nargs="+", help="explicit grid (overrides range)")
    p.add_argument("--mu-min", type=float, default=-0.5)
    p.add_argument("--mu-max", type=float, default=1.5)
    p.add_argument("--mu-step", type=float, default=0.05)
    _add_output_args(p)
    p.set_defaults(func=cmd_elbo_curve)

    p = sub.add_parser("fit", help="maximize the ELBO by gradient ascent")
    _add_model_args(p)
    p.add_argument("--estimator", choices=[k.value for k in EstimatorKind], default="reparam")
    p.add_argument("--mu0", type=float, default=0.0)
    p.add_argument("--sigma0", type=float, default=1.0)
    p.add_argument("--step-size", type=float, default=0.05)
    p.add_argument("--max-steps", type=int, default=5000)
    p.add_argument("--schedule", choices=["constant", "inverse-sqrt"], default=None)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--samples", "-L", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    _add_output_args(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("gradcheck", help="compare gradient estimators against the exact gradient")
    _add_model_args(p)
    p.add_argument("--mu", type=float, nargs="+", default=[0.0])
    p.add_argument("--sigma", type=float, nargs="+", default=[0.5])
    p.add_argument("--samples", "-L", type=int, default=1000)
    p.add_argument("--repeats", "-R", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    _add_output_args(p)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("amortize", help="train an encoder on the factorized model")
    p.add_argument("--alpha", type=float, default=3.0)
    p.add_argument("--beta", type=float, default=1.0)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--data", help="file with one positive observation per line")
    src.add_argument("--generate", type=int, default=200, help="draw N points from the model")
    p.add_argument("--hidden", type=int, default=16)
    p.add_argument("--batch-size", type=int, default=20)
    p.add_argument("--samples", "-L", type=int, default=32)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--step-size", type=float, default=0.01)
    p.add_argument("--schedule", choices=["constant", "inverse-sqrt"], default="constant",
                   help="inverse-sqrt decays the step once per epoch")
    p.add_argument("--seed", type=int, default=0)
    _add_output_args(p)
    p.set_defaults(func=cmd_amortize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
