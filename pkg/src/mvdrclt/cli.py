"""Batch command line front-end.

Exit codes: 0 success or statistical pass, 1 statistical fail, 2 invalid
configuration or arguments, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import asymptotics, deteq, montecarlo, stats
from .config import ConfigError, ExperimentConfig, load_config
from .linalg import JacobiConvergenceError
from .model import CanonicalModel, Mode, UlaSpatial, build_spatial, canonicalize

log = logging.getLogger("mvdrclt")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

REFERENCE_INTERFERERS = (-20.0, 50.0, 55.0)
VARIANCE_RATIO_BOUNDS = (0.85, 1.15)


class NumericalError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Analysis:
    model: CanonicalModel
    fixed_point: deteq.FixedPoint
    deteq: deteq.DetEq
    bounds: deteq.BoundReport
    prediction: asymptotics.AsymptoticPrediction

    def center_and_variance(self) -> tuple[str, float, float]:
        """Sample column, asymptotic center and variance for the configured mode."""
        p = self.prediction
        mode = self.model.mode
        if mode is Mode.SUPERVISED:
            return "snr", p.snr_bar_s, p.sigma_s2
        if mode is Mode.MSE:
            return "mse", p.mse_bar, p.sigma_mse2
        if p.snr_bar_u is None or p.sigma_u2 is None:
            raise NumericalError("unsupervised SNR limit undefined (bbar <= abar^2)")
        return "snr", p.snr_bar_u, p.sigma_u2


def build_model(cfg: ExperimentConfig) -> CanonicalModel:
    try:
        return canonicalize(cfg.scenario)
    except JacobiConvergenceError as exc:
        raise NumericalError(str(exc)) from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def analyze(cfg: ExperimentConfig) -> Analysis:
    model = build_model(cfg)
    try:
        fp = deteq.solve_fixed_point(model.lam, model.t, model.alpha)
        de = deteq.deterministic_equivalents(fp.delta, fp.delta_tilde, model.lam, model.t, model.alpha)
        bounds = deteq.check_bounds(de, model.lam, model.t, model.alpha)
        pred = asymptotics.predict(model, de)
    except (ArithmeticError, ValueError) as exc:
        raise NumericalError(str(exc)) from exc
    return Analysis(model, fp, de, bounds, pred)


def prediction_document(cfg: ExperimentConfig, an: Analysis) -> dict:
    p = an.prediction.to_dict()
    de = an.deteq
    doc = {
        "M": cfg.M,
        "N": cfg.N,
        "alpha": cfg.scenario.alpha,
        "mode": cfg.mode.value,
        "delta": de.delta,
        "delta_tilde": de.delta_tilde,
        "gamma": de.gamma,
        "gamma_tilde": de.gamma_tilde,
        "one_minus_gg": de.one_minus_gg,
        "fixed_point_iterations": an.fixed_point.iterations,
        "fixed_point_residual": an.fixed_point.residual,
        "snr_opt": an.model.snr_opt,
    }
    for key in ("abar", "bbar", "snr_bar_s", "snr_bar_u", "V", "S", "T_script", "sigma_s2", "sigma_u2",
                "sigma_matrix", "coeffs", "mse_bar", "sigma_mse2", "v_lower_bound"):
        doc[key] = p[key]
    doc["bound_report"] = an.bounds.to_dict()
    return doc


def _dump(doc) -> None:
    json.dump(doc, sys.stdout, indent=2, allow_nan=False)
    sys.stdout.write("\n")


def _simulate(cfg: ExperimentConfig, model: CanonicalModel, workers: int) -> montecarlo.McSamples:
    try:
        return montecarlo.run_experiment(montecarlo.McConfig(model, cfg.reps, cfg.seed, workers))
    except montecarlo.MonteCarloError as exc:
        raise NumericalError(str(exc)) from exc


def cmd_predict(args) -> int:
    cfg = load_config(args.config)
    _dump(prediction_document(cfg, analyze(cfg)))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    samples = _simulate(cfg, build_model(cfg), args.workers)
    montecarlo.write_samples_csv(samples, args.out)
    log.info("wrote %d rows to %s", samples.reps, args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    an = analyze(cfg)
    column, center, sigma2 = an.center_and_variance()
    p = an.prediction
    bias = asymptotics.second_order_bias(p.abar, p.bbar, p.sigma_matrix, cfg.N, cfg.mode)
    samples = _simulate(cfg, an.model, args.workers)
    report = stats.clt_report(
        samples.column(column), center, sigma2 * args.sigma_scale**2, cfg.N, cfg.mode.value,
        args.threshold, VARIANCE_RATIO_BOUNDS, an.bounds.passed, bias,
    )
    _dump(report.to_dict())
    log.info("validate %s: KS=%.4f, variance ratio=%.4f", report.verdict, report.ks_normal, report.variance_ratio)
    return EXIT_OK if report.verdict == "pass" else EXIT_FAIL


def cmd_beta_oracle(args) -> int:
    M, N = args.m, args.n
    if M < 2 or N < M + 1:
        raise ConfigError(f"beta oracle needs M >= 2 and N >= M + 1, got M={M}, N={N}")
    if args.reps < 1:
        raise ConfigError("reps must be at least 1")
    R0, s = build_spatial(UlaSpatial(interferer_angles_deg=REFERENCE_INTERFERERS), M)
    try:
        x = montecarlo.beta_oracle_run(M, N, R0, s, args.reps, args.seed)
    except montecarlo.MonteCarloError as exc:
        raise NumericalError(str(exc)) from exc
    p, q = N + 2 - M, M - 1
    ks = stats.ks_statistic(np.sort(x), lambda v: stats.beta_cdf(v, p, q))
    mean = float(x.mean())
    se = float(x.std(ddof=1)) / math.sqrt(x.size) if x.size > 1 else math.inf
    expected = p / (p + q)
    mean_ok = abs(mean - expected) <= 4 * se
    in_unit = bool(np.all((x > 0) & (x < 1)))
    verdict = "pass" if (ks <= args.threshold and mean_ok and in_unit) else "fail"
    _dump({
        "M": M, "N": N, "reps": args.reps, "seed": args.seed,
        "beta_p": p, "beta_q": q,
        "ks_beta": ks, "ks_threshold": args.threshold,
        "mean": mean, "expected_mean": expected, "standard_error": se, "mean_within_4se": mean_ok,
        "all_in_unit_interval": in_unit,
        "verdict": verdict,
    })
    return EXIT_OK if verdict == "pass" else EXIT_FAIL


def cmd_hist(args) -> int:
    cfg = load_config(args.config)
    try:
        data = montecarlo.read_samples_csv(args.samples)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read samples: {exc}") from exc
    an = analyze(cfg)
    column, center, sigma2 = an.center_and_variance()
    if column not in data:
        raise ConfigError(f"samples file has no {column!r} column")
    bins = args.bins if args.bins is not None else cfg.bins
    try:
        h = stats.histogram(data[column], bins)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    scale = math.sqrt(sigma2 / cfg.N)
    ref = stats.normal_pdf((h.midpoints - center) / scale) / scale
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_left", "bin_right", "count", "density", "reference_pdf"])
        for k in range(bins):
            w.writerow([f"{h.edges[k]:.17g}", f"{h.edges[k + 1]:.17g}", int(h.counts[k]),
                        f"{h.density[k]:.17g}", f"{ref[k]:.17g}"])
    if h.underflow or h.overflow:
        log.warning("%d samples below and %d above the histogram range", h.underflow, h.overflow)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mvdrclt", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="deterministic equivalents and CLT variances as JSON")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", help="Monte Carlo samples as CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=0, help="worker threads (0 = all cores)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="KS and variance check of the simulated CLT")
    p.add_argument("--config", required=True)
    p.add_argument("--threshold", type=float, default=0.03)
    p.add_argument("--workers", type=int, default=0)
    p.add_argument("--sigma-scale", type=float, default=1.0,
                   help="multiply the predicted standard deviation (negative controls)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("beta-oracle", help="unloaded SCM against its exact Beta law")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--reps", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=0.02)
    p.set_defaults(func=cmd_beta_oracle)

    p = sub.add_parser("hist", help="histogram CSV with the asymptotic Gaussian density")
    p.add_argument("--samples", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--bins", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_hist)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except NumericalError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
