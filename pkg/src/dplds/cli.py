"""Command-line interface.

Exit codes: 0 success, 2 parse/validation error, 3 infeasible budget or
rank failure, 4 numerical failure.  Errors are also written to stderr as a
single JSON object ``{"error": <class>, "message": <text>, "exit_code": n}``.
Set ``DPLDS_LOG`` (e.g. ``DEBUG``) to control log verbosity.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import design as dsg
from .errors import DpldsError, NumericalError, ValidationError
from .experiment import MECHANISMS, ExperimentConfig, run_experiment, trajectories_csv
from .privacy import (
    CovarianceMatrix,
    GaussianPrior,
    MechanismSpec,
    bdp_check,
    bdp_input_check,
    prior_matched_weight,
    dp_check,
)
from .specfun import PrivacyBudget, c_gamma
from .sysmat import bode_gain, close_loop, lift, load_model, model_from_dict

log = logging.getLogger("dplds")


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    except OSError as exc:
        raise ValidationError(f"{path}: {exc.strerror}") from None


def _matrix(value, what):
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise ValidationError(f"{what} must be a nonempty list of rows")
    if len({len(r) for r in value}) != 1:
        raise ValidationError(f"{what} has ragged rows")
    try:
        return np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError(f"{what} has non-numeric entries") from None


def _model_ref(value, base: Path):
    """A model given inline as a dict or as a path relative to ``base``."""
    if isinstance(value, dict):
        return model_from_dict(value)
    if isinstance(value, str):
        return load_model(base / value)
    raise ValidationError("model reference must be an object or a file path")


def prior_from_spec(spec: dict, horizon: int | None, base: Path = Path(".")) -> GaussianPrior:
    """Build a prior from its JSON description.

    Supported kinds: ``filter`` (``model`` inline or path), ``lowpass``
    (``cutoff``, ``order``), ``step`` (``sigma_s``), ``white`` (``variance``,
    ``block_size``) and ``covariance`` (``matrix``, ``block_size``).
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValidationError("prior spec must be an object with a 'kind' field")
    kind = spec["kind"]
    if kind == "covariance":
        prior = GaussianPrior(CovarianceMatrix(_matrix(spec.get("matrix"), "prior matrix")),
                              block_size=int(spec.get("block_size", 1)))
        if horizon is not None and prior.horizon != horizon:
            raise ValidationError(
                f"prior covariance implies horizon {prior.horizon}, but --horizon is {horizon}")
        return prior
    if horizon is None:
        raise ValidationError(f"prior kind {kind!r} needs a horizon (--horizon)")
    if kind == "filter":
        return dsg.filter_prior(_model_ref(spec.get("model"), base), horizon)
    if kind == "lowpass":
        filt = dsg.lowpass_reference_model(float(spec.get("cutoff", 0.03)),
                                           int(spec.get("order", 4)))
        return dsg.filter_prior(filt, horizon)
    if kind == "step":
        return dsg.step_prior(_matrix(spec.get("sigma_s"), "sigma_s"), horizon)
    if kind == "white":
        m = int(spec.get("block_size", 1))
        return dsg.white_prior((horizon + 1) * m, float(spec.get("variance", 1.0)), m)
    raise ValidationError(f"unknown prior kind {kind!r}")


def _load_prior(args):
    if args.prior is None:
        raise ValidationError("--prior is required")
    path = Path(args.prior)
    return prior_from_spec(_read_json(path), args.horizon, path.parent)


def _budget(args, need_gamma=True):
    if need_gamma and args.gamma is None:
        raise ValidationError("--gamma is required")
    return PrivacyBudget(args.epsilon, args.delta, args.gamma)


def _write(text: str, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def cmd_design(args) -> int:
    prior = _load_prior(args)
    budget = _budget(args)
    if args.channel == "output":
        if args.mechanism != "optimal":
            raise ValidationError("output channel supports only --mechanism optimal")
        if args.model is None:
            raise ValidationError("--model is required for the output channel")
        N = lift(load_model(args.model), prior.horizon)
        result = dsg.optimal_output_noise(prior, N, budget,
                                          allow_degenerate=args.allow_degenerate)
    elif args.mechanism == "optimal":
        result = dsg.optimal_input_noise(prior, budget, allow_degenerate=args.allow_degenerate)
    elif args.mechanism == "iid":
        result = dsg.iid_input_noise(prior, budget, allow_degenerate=args.allow_degenerate)
    else:
        raise ValidationError("design needs --mechanism optimal or iid")
    _write(_dump(result.to_dict()), args.out)
    log.info("designed %s noise: trace=%.6g margin=%.3g", result.formula, result.trace,
             result.margin)
    return 0


def _noise_cov(path):
    data = _read_json(path)
    if isinstance(data, dict) and "factor" in data:
        # The exact factor survives ill-conditioning that refactoring would not.
        F = _matrix(data["factor"], "noise factor")
        return CovarianceMatrix.from_factor(F), data.get("channel")
    if isinstance(data, dict):
        mat = data.get("covariance", data.get("matrix"))
        channel = data.get("channel")
    else:
        mat, channel = data, None
    return CovarianceMatrix(_matrix(mat, "noise covariance")), channel


def cmd_check(args) -> int:
    if args.noise is None:
        raise ValidationError("--noise is required")
    cov, file_channel = _noise_cov(args.noise)
    channel = args.channel or file_channel or "output"
    mech = MechanismSpec(channel, cov)
    dp_mode = args.weight is not None or args.prior_weight
    budget = _budget(args, need_gamma=not dp_mode or args.prior_weight)

    if dp_mode:
        if channel != "output":
            raise ValidationError("the K-adjacency check applies to output noise")
        if args.weight is not None:
            data = _read_json(args.weight)
            mat = data.get("matrix", data.get("covariance")) if isinstance(data, dict) else data
            K = CovarianceMatrix(_matrix(mat, "weight K"))
            T = K.dim // args.input_dim - 1
        else:
            prior = _load_prior(args)
            K, T = prior_matched_weight(prior, budget.gamma), prior.horizon
        if args.model is None:
            raise ValidationError("--model is required for the output channel")
        report = dp_check(K, mech, lift(load_model(args.model), T), budget)
    else:
        prior = _load_prior(args)
        if channel == "input":
            report = bdp_input_check(prior, mech, budget, allow_degenerate=args.allow_degenerate)
        else:
            if args.model is None:
                raise ValidationError("--model is required for the output channel")
            N = lift(load_model(args.model), prior.horizon)
            report = bdp_check(prior, mech, N, budget, allow_degenerate=args.allow_degenerate)
    _write(_dump(report.to_dict()), args.out)
    verdict = "satisfied" if report.satisfied else "NOT satisfied"
    print(f"{report.kind}: {verdict} lhs={report.lhs:.10g} rhs={report.rhs:.10g} "
          f"margin={report.margin:.3e}", file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return 0


def _experiment_config(args) -> ExperimentConfig:
    cfg = {}
    base = Path(".")
    if args.config:
        base = Path(args.config).parent
        cfg = _read_json(args.config)
        if not isinstance(cfg, dict):
            raise ValidationError("experiment config must be a JSON object")
    kw = {}
    plant = args.model or cfg.get("plant")
    if plant is not None:
        kw["plant"] = load_model(plant) if args.model else _model_ref(plant, base)
    controller = args.controller or cfg.get("controller")
    if controller is not None:
        kw["controller"] = (load_model(controller) if args.controller
                            else _model_ref(controller, base))
    if args.prior or "reference_filter" in cfg:
        spec = _read_json(args.prior) if args.prior else cfg["reference_filter"]
        if args.prior:
            base = Path(args.prior).parent
        if isinstance(spec, dict) and spec.get("kind") == "lowpass":
            kw["reference_filter"] = dsg.lowpass_reference_model(
                float(spec.get("cutoff", 0.03)), int(spec.get("order", 4)))
        elif isinstance(spec, dict) and spec.get("kind") == "filter":
            kw["reference_filter"] = _model_ref(spec.get("model"), base)
        else:
            kw["reference_filter"] = _model_ref(spec, base)
    eps = args.epsilon if args.epsilon is not None else cfg.get("epsilon", 100.0)
    delta = args.delta if args.delta is not None else cfg.get("delta", 0.1)
    gamma = args.gamma if args.gamma is not None else cfg.get("gamma", 0.5)
    kw["budget"] = PrivacyBudget(float(eps), float(delta), float(gamma))
    kw["horizon"] = args.horizon if args.horizon is not None else int(cfg.get("horizon", 100))
    mechs = args.mechanism or cfg.get("mechanisms") or list(MECHANISMS)
    kw["mechanisms"] = tuple(mechs)
    if args.seeds is not None or args.seed is not None or "seeds" not in cfg:
        count = args.seeds if args.seeds is not None else 20
        start = args.seed if args.seed is not None else 0
        kw["seeds"] = tuple(range(start, start + count))
    else:
        kw["seeds"] = tuple(int(s) for s in cfg["seeds"])
    kw["samples"] = args.samples if args.samples is not None else int(cfg.get("samples", 0))
    return ExperimentConfig(**kw)


def cmd_experiment(args) -> int:
    config = _experiment_config(args)
    report = run_experiment(config)
    if report.unstable:
        log.warning("closed loop is not asymptotically stable (spectral radius %.4g)",
                    report.spectral_radius)
    summary = report.to_dict()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(_dump(summary))
        (out / "trajectories.csv").write_text(trajectories_csv(report))
    else:
        sys.stdout.write(_dump(summary))
    for name, oc in report.outcomes.items():
        print(f"{name:>9}: mse={oc.mse_mean:.6g} Tr(Theta S Theta^T)={oc.error_variance_trace:.6g} "
              f"Tr(S)={oc.noise_trace:.6g} private={oc.check.satisfied}", file=sys.stderr)
    return 0


def _csv(rows, header) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def cmd_c_curve(args) -> int:
    if not 0 < args.gamma < 1:
        raise ValidationError(f"--gamma must lie in (0, 1), got {args.gamma}")
    if args.t_min < 0 or args.t_max < args.t_min:
        raise ValidationError("need 0 <= --t-min <= --t-max")
    rows = [(T, repr(c_gamma(args.gamma, T, args.m))) for T in range(args.t_min, args.t_max + 1)]
    _write(_csv(rows, ["T", "c"]), args.out)
    return 0


def cmd_bode(args) -> int:
    if args.model is None:
        raise ValidationError("--model is required")
    model = load_model(args.model)
    if args.controller:
        loop = close_loop(model, load_model(args.controller))
        model = {"output": loop.output_model, "error": loop.error_model}[args.loop]
    lo = args.lambda_min if args.lambda_min is not None else 1e-4 * math.pi
    hi = args.lambda_max if args.lambda_max is not None else math.pi
    if not 0 < lo < hi <= math.pi:
        raise ValidationError("need 0 < lambda_min < lambda_max <= pi")
    grid = np.geomspace(lo, hi, args.points, endpoint=False)
    rows = [(repr(p.frequency), repr(p.gain), p.error or "") for p in bode_gain(model, grid)]
    _write(_csv(rows, ["lambda", "gain", "error"]), args.out)
    return 0


def _add_budget(p, required=True):
    p.add_argument("--epsilon", type=float, required=required)
    p.add_argument("--delta", type=float, required=required)
    p.add_argument("--gamma", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dplds", description="Bayesian differential privacy for linear dynamical systems")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="synthesize a minimum-energy noise covariance")
    p.add_argument("--model", help="system model JSON (needed for the output channel)")
    p.add_argument("--prior", help="prior spec JSON")
    _add_budget(p)
    p.add_argument("--horizon", type=int)
    p.add_argument("--channel", choices=("input", "output"), default="output")
    p.add_argument("--mechanism", choices=("optimal", "iid"), default="optimal")
    p.add_argument("--allow-degenerate", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("check", help="verify a noise covariance against a privacy budget")
    p.add_argument("--model")
    p.add_argument("--prior")
    p.add_argument("--weight", help="adjacency weight K JSON (runs the (K, eps, delta) check)")
    p.add_argument("--prior-weight", action="store_true",
                   help="check (K, eps, delta)-DP with K = Sigma^{-1}/c^2 built from --prior")
    p.add_argument("--input-dim", type=int, default=1, help="per-step input dimension for --weight")
    p.add_argument("--noise", help="noise covariance JSON (a design output works)")
    _add_budget(p)
    p.add_argument("--horizon", type=int)
    p.add_argument("--channel", choices=("input", "output"))
    p.add_argument("--allow-degenerate", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("experiment", help="closed-loop tracking comparison of noise mechanisms")
    p.add_argument("--config", help="experiment config JSON")
    p.add_argument("--model", help="plant model JSON")
    p.add_argument("--controller", help="controller model JSON")
    p.add_argument("--prior", help="reference filter spec JSON (kind lowpass/filter, or a model)")
    _add_budget(p, required=False)
    p.add_argument("--horizon", type=int)
    p.add_argument("--mechanism", action="append", choices=MECHANISMS)
    p.add_argument("--seeds", type=int, help="number of seeds (default 20)")
    p.add_argument("--seed", type=int, help="first seed (default 0)")
    p.add_argument("--samples", type=int, help="Monte-Carlo pairs for empirical BDP (0 = skip)")
    p.add_argument("--out", help="output directory for report.json and trajectories.csv")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("c-curve", help="emit c(gamma, T) over a range of horizons")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--t-min", type=int, default=0)
    p.add_argument("--t-max", type=int, default=200)
    p.add_argument("--out")
    p.set_defaults(func=cmd_c_curve)

    p = sub.add_parser("bode", help="emit the largest-singular-value gain over frequency")
    p.add_argument("--model", help="model JSON (the plant when --controller is given)")
    p.add_argument("--controller", help="close the loop with this controller")
    p.add_argument("--loop", choices=("output", "error"), default="error",
                   help="closed-loop channel: r -> y_p or r -> e")
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--lambda-min", type=float)
    p.add_argument("--lambda-max", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bode)
    return parser


def _setup_logging():
    level = os.environ.get("DPLDS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DpldsError as exc:
        err, code = exc, exc.exit_code
    except np.linalg.LinAlgError as exc:
        err, code = NumericalError(str(exc)), NumericalError.exit_code
    print(json.dumps({"error": type(err).__name__, "message": str(err), "exit_code": code}),
          file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
