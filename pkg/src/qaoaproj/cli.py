"""Command-line experiment runner.

Every subcommand writes a table of :class:`~qaoaproj.results.ResultRow` as
CSV (default) or JSON, to ``--out`` or stdout, and a short human summary to
stderr. Exit codes: 0 all checks pass, 1 a check failed, 2 bad configuration,
3 solver or resource failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import analytic, oracle, train, verify
from .results import ResultRow, write_rows

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3

NOISE_KINDS = {"none": "none", "phase": "phase-noise", "undertrain": "undertrain"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    n_values: tuple[int, ...]
    p_values: tuple[int, ...]
    p_max: int | None
    strategy: str
    noise: str
    sigma: float
    undertrain_iterations: int
    seeds: int
    seed: int
    restarts: int
    probes: int
    out: str | None
    fmt: str

    def __post_init__(self):
        if not self.n_values:
            raise ConfigError("n range is empty")
        if not self.p_values:
            raise ConfigError("p range is empty")
        if min(self.n_values) < 1 or min(self.p_values) < 1:
            raise ConfigError("n and p must be >= 1")
        if self.fmt not in ("csv", "json"):
            raise ConfigError(f"unknown format {self.fmt!r}")
        if self.seeds < 1:
            raise ConfigError("--seeds must be >= 1")
        if self.p_max is not None and self.p_max < 1:
            raise ConfigError("--p-max must be >= 1")


def parse_range(text: str) -> tuple[int, ...]:
    """'7' -> (7,), 'A:B' -> A..B inclusive."""
    try:
        if ":" in text:
            lo, hi = (int(t) for t in text.split(":", 1))
            return tuple(range(lo, hi + 1))
        return (int(text),)
    except ValueError:
        raise ConfigError(f"expected an integer or A:B range, got {text!r}") from None


DEFAULTS = {
    "verify": dict(n="10", p="1"),
    "optimal-angles": dict(n="1:24", p="1"),
    "lastlayer": dict(n="6:12", p="5"),
    "saturation": dict(n="4:6", p="1", seeds=10),
    "concentration": dict(n="8:16", p="1"),
}


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    defaults = DEFAULTS[args.command]
    if args.n is not None and args.n_range is not None:
        raise ConfigError("give either --n or --n-range, not both")
    n_text = args.n_range or (str(args.n) if args.n is not None else defaults["n"])
    p_text = args.p if args.p is not None else defaults["p"]
    seeds = args.seeds if args.seeds is not None else defaults.get("seeds", 1)
    if args.noise != "phase" and args.sigma is not None:
        raise ConfigError("--sigma only applies to --noise phase")
    sigma = args.sigma if args.sigma is not None else (0.05 if args.noise == "phase" else 0.0)
    if sigma < 0:
        raise ConfigError("--sigma must be non-negative")
    return ExperimentConfig(
        command=args.command,
        n_values=parse_range(n_text),
        p_values=parse_range(p_text),
        p_max=args.p_max,
        strategy=args.strategy,
        noise=args.noise,
        sigma=sigma,
        undertrain_iterations=args.undertrain_iterations,
        seeds=seeds,
        seed=args.seed,
        restarts=args.restarts,
        probes=args.probes,
        out=args.out,
        fmt=args.format,
    )


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def cmd_verify(cfg: ExperimentConfig, corrupt: bool = False) -> tuple[int, list[ResultRow]]:
    suite = verify.SuiteConfig(max_n=max(cfg.n_values), probes=cfg.probes, seed=cfg.seed)
    rows = []
    failed = 0
    for res in verify.run_suite(suite, corrupt=corrupt):
        status = "PASS" if res.passed else "FAIL"
        failed += not res.passed
        line = f"{status} {res.name} max_error={res.max_error:.3e} tol={res.tolerance:.1e}"
        print(line + (f" ({res.detail})" if res.detail else ""))
        rows.append(ResultRow(
            experiment=f"verify/{res.name}",
            n=suite.max_n,
            residuals={"max_error": res.max_error, "tolerance": res.tolerance,
                       "passed": res.passed},
        ))
    print(f"{len(rows) - failed}/{len(rows)} properties passed")
    return (EXIT_CHECK_FAILED if failed else EXIT_OK), rows


def cmd_optimal_angles(cfg: ExperimentConfig) -> tuple[int, list[ResultRow]]:
    rows = []
    ok = True
    solver_failed = False
    previous_gap = None
    for n in cfg.n_values:
        t0 = time.perf_counter()
        try:
            sol = analytic.solve_optimal_p1(n)
        except analytic.SolverFailure as exc:
            solver_failed = True
            rows.append(ResultRow("optimal-angles", n, 1, 1, residuals={"solver_failure": True}))
            _say(f"n={n}: solver failure: {exc}")
            continue
        residuals = {
            "beta_equation": sol.residual,
            "n_beta": n * sol.beta,
            "pi_gap": abs((n + 2) * sol.beta - np.pi),
        }
        if n >= 5:
            asym = analytic.asymptotic_angles(n)
            residuals.update(asymptotic_beta=asym.beta, asymptotic_gamma=asym.gamma,
                             beta_difference=sol.beta - asym.beta)
        rows.append(ResultRow("optimal-angles", n, 1, 1, sol.gamma, sol.beta, sol.magnitude_sq,
                              residuals, time.perf_counter() - t0))
        ok &= abs(sol.residual) < 1e-12
        gap = residuals["pi_gap"]
        if previous_gap is not None and n >= 8 and gap >= previous_gap:
            ok = False
            _say(f"n={n}: |(n+2)beta - pi| did not decrease")
        previous_gap = gap
    if solver_failed:
        return EXIT_SOLVER, rows
    return (EXIT_OK if ok else EXIT_CHECK_FAILED), rows


def _optimizer_config(cfg: ExperimentConfig, strategy: str, seed: int) -> train.OptimizerConfig:
    return train.OptimizerConfig(strategy=strategy, restarts=cfg.restarts, rng_seed=seed)


def _depth_results(cfg: ExperimentConfig, n: int) -> dict[int, tuple]:
    """(schedule, value, converged, seconds) per requested depth for one n."""
    conf = _optimizer_config(cfg, cfg.strategy, cfg.seed)
    t0 = time.perf_counter()
    p_top = max(cfg.p_values)
    if cfg.strategy == "global":
        ladder = train.optimize_global_ladder(n, p_top, conf)
        entries = [(s, t.final.magnitude_sq, t.final.converged) for s, t in ladder]
    else:
        trace = train.optimize_layerwise(n, p_top, conf)
        entries = [(r.schedule, r.magnitude_sq, r.converged) for r in trace.records]
    elapsed = time.perf_counter() - t0
    return {p: entries[p - 1] + (elapsed,) for p in cfg.p_values}


def cmd_lastlayer(cfg: ExperimentConfig) -> tuple[int, list[ResultRow]]:
    if max(cfg.p_values) > 5:
        raise ConfigError("lastlayer supports p <= 5")
    rows = []
    ok = True
    by_p: dict[int, list] = {p: [] for p in cfg.p_values}
    for n in cfg.n_values:
        for p, (schedule, value, converged, elapsed) in _depth_results(cfg, n).items():
            defect = train.last_layer_defect(schedule)
            tol = 1e-6 if p == 1 else 0.01
            if converged and defect >= tol:
                ok = False
                _say(f"n={n} p={p}: last-layer defect {defect:.3e} >= {tol}")
            if not converged:
                _say(f"n={n} p={p}: not converged, excluded from the check")
            by_p[p].append(schedule)
            for k in range(p):
                layer_defect = abs(analytic.wrap_angle(
                    schedule.gammas[k] + 2 * schedule.betas[k] - np.pi))
                rows.append(ResultRow(
                    f"lastlayer/{cfg.strategy}", n, p, k + 1,
                    schedule.gammas[k], schedule.betas[k], value,
                    {"layer_defect": layer_defect, "last_layer_defect": defect,
                     "converged": converged},
                    elapsed,
                ))
    for p, schedules in by_p.items():
        if len(schedules) < 2:
            continue
        for fit in train.layer_fits(schedules):
            rows.append(ResultRow(
                f"lastlayer-fit/{cfg.strategy}", None, p, fit.layer,
                residuals={"slope": fit.slope, "intercept": fit.intercept,
                           "rms_residual": fit.rms_residual},
            ))
    return (EXIT_OK if ok else EXIT_CHECK_FAILED), rows


def _noise_model(cfg: ExperimentConfig) -> train.NoiseModel:
    if cfg.noise == "phase":
        return train.NoiseModel.phase(cfg.sigma)
    if cfg.noise == "undertrain":
        return train.NoiseModel.undertrain(cfg.undertrain_iterations)
    return train.NoiseModel()


def cmd_saturation(cfg: ExperimentConfig) -> tuple[int, list[ResultRow]]:
    noise = _noise_model(cfg)
    label = f"noise={cfg.noise}" + (f",sigma={cfg.sigma:g}" if cfg.noise == "phase" else "")
    rows = []
    ok = True
    for n in cfg.n_values:
        p_max = cfg.p_max or 2 * n + 2
        p_stars = []
        for s in range(cfg.seed, cfg.seed + cfg.seeds):
            t0 = time.perf_counter()
            trace = train.optimize_layerwise(n, p_max, _optimizer_config(cfg, "layerwise", s), noise)
            elapsed = time.perf_counter() - t0
            p_stars.append(trace.saturation_depth)
            for rec in trace.records:
                rows.append(ResultRow(
                    f"saturation/{label}/seed={s}", n, rec.p, rec.p,
                    rec.schedule.gammas[-1], rec.schedule.betas[-1], rec.magnitude_sq,
                    {"improvement": rec.improvement, "gradient_norm": rec.gradient_norm,
                     "converged": rec.converged,
                     "p_star": -1 if trace.saturation_depth is None else trace.saturation_depth},
                    elapsed,
                ))
        counts = Counter(-1 if v is None else v for v in p_stars)
        modal, _ = min(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        at_n = counts.get(n, 0)
        summary = {"modal_p_star": modal, "seeds": len(p_stars), "count_at_n": at_n,
                   "count_none": counts.get(-1, 0),
                   "count_beyond_n": sum(c for v, c in counts.items() if v > n)}
        rows.append(ResultRow(f"saturation-summary/{label}", n, p_max, None, residuals=summary))
        shown = "none" if modal == -1 else modal
        _say(f"n={n} {label}: p* per seed {p_stars}, modal {shown}")
        if cfg.noise == "none":
            ok &= modal == n
        else:
            ok &= (len(p_stars) - at_n) * 2 > len(p_stars)
    return (EXIT_OK if ok else EXIT_CHECK_FAILED), rows


def cmd_concentration(cfg: ExperimentConfig) -> tuple[int, list[ResultRow]]:
    rows = []
    for p in cfg.p_values:
        if p > 5:
            raise ConfigError("concentration supports p <= 5")
        for row in train.concentration_scan(cfg.n_values, p, _optimizer_config(cfg, "global", cfg.seed)):
            for k in range(p):
                rows.append(ResultRow(
                    "concentration", row.n, p, k + 1,
                    row.schedule.gammas[k], row.schedule.betas[k], row.magnitude_sq,
                    {"delta": row.delta, "converged": row.converged},
                ))
    return EXIT_OK, rows


COMMANDS = {
    "optimal-angles": cmd_optimal_angles,
    "lastlayer": cmd_lastlayer,
    "saturation": cmd_saturation,
    "concentration": cmd_concentration,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, help="single qubit count")
    common.add_argument("--n-range", metavar="A:B", help="inclusive qubit-count range")
    common.add_argument("--p", metavar="P|A:B", help="depth or inclusive depth range")
    common.add_argument("--p-max", type=int, help="maximum depth for layerwise runs (default 2n+2)")
    common.add_argument("--strategy", choices=("global", "layerwise"), default="global")
    common.add_argument("--noise", choices=tuple(NOISE_KINDS), default="none")
    common.add_argument("--sigma", type=float, help="phase-noise std-dev in radians (default 0.05)")
    common.add_argument("--undertrain-iterations", type=int, default=5)
    common.add_argument("--seeds", type=int, help="number of consecutive seeds")
    common.add_argument("--seed", type=int, default=0, help="first seed")
    common.add_argument("--restarts", type=int, default=20)
    common.add_argument("--probes", type=int, default=100, help="random probes per verify property")
    common.add_argument("--out", metavar="PATH", help="write the table here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="qaoaproj", description="Projector-target QAOA experiments and verification."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", parents=[common], help="run the cross-validation suite")
    v.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)
    sub.add_parser("optimal-angles", parents=[common], help="single-layer optimal angles per n")
    sub.add_parser("lastlayer", parents=[common], help="last-layer relation of optimised schedules")
    sub.add_parser("saturation", parents=[common], help="saturation depth of layerwise training")
    sub.add_parser("concentration", parents=[common], help="optimal angles across consecutive n")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args)
        if cfg.command == "verify":
            status, rows = cmd_verify(cfg, corrupt=args.corrupt)
        else:
            status, rows = COMMANDS[cfg.command](cfg)
    except (ConfigError, ValueError) as exc:
        if isinstance(exc, oracle.ResourceLimitError):
            _say(f"resource limit: {exc}")
            return EXIT_SOLVER
        _say(f"configuration error: {exc}")
        return EXIT_CONFIG
    except analytic.SolverFailure as exc:
        _say(f"solver failure: {exc}")
        return EXIT_SOLVER
    text = write_rows(rows, cfg.out, cfg.fmt)
    if cfg.out is None and cfg.command != "verify":
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
