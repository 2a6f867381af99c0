"""Outer-loop training: multistart global optimisation, layerwise training,
saturation detection and the two saturation-breaking modifications
(under-training and coherent phase noise).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from . import analytic
from . import _kernels, symsim
from .symsim import AngleSchedule

log = logging.getLogger(__name__)

TIE_TOL = 1e-12


@dataclass(frozen=True)
class OptimizerConfig:
    strategy: Literal["global", "layerwise"] = "global"
    restarts: int = 20
    max_iterations: int = 10000
    gradient_tolerance: float = 1e-10
    improvement_epsilon: float = 1e-8
    init: Literal["asymptotic-seed", "uniform-random", "zeros"] = "asymptotic-seed"
    rng_seed: int = 0
    grow_depth: bool = True

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.gradient_tolerance <= 0 or self.improvement_epsilon <= 0:
            raise ValueError("tolerances must be positive")
        if self.strategy not in ("global", "layerwise"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.init not in ("asymptotic-seed", "uniform-random", "zeros"):
            raise ValueError(f"unknown init {self.init!r}")


@dataclass(frozen=True)
class NoiseModel:
    kind: Literal["none", "phase-noise", "undertrain"] = "none"
    sigma: float = 0.0
    undertrain_iterations: int | None = None

    def __post_init__(self):
        if self.kind not in ("none", "phase-noise", "undertrain"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        # sigma = 0 with phase noise is allowed; it must reproduce the noiseless run
        if self.kind != "phase-noise" and self.sigma != 0:
            raise ValueError("sigma is only meaningful for phase noise")
        if (self.kind == "undertrain") != (self.undertrain_iterations is not None):
            raise ValueError("undertrain_iterations is set iff kind == 'undertrain'")
        if self.undertrain_iterations is not None and self.undertrain_iterations < 1:
            raise ValueError("undertrain_iterations must be >= 1")

    @classmethod
    def phase(cls, sigma: float = 0.05) -> NoiseModel:
        return cls("phase-noise", sigma=sigma)

    @classmethod
    def undertrain(cls, iterations: int = 5) -> NoiseModel:
        return cls("undertrain", undertrain_iterations=iterations)


@dataclass
class LayerRecord:
    p: int
    schedule: AngleSchedule
    magnitude_sq: float
    improvement: float
    gradient_norm: float
    iterations: int
    converged: bool


@dataclass
class TrainingTrace:
    n: int
    strategy: str
    records: list[LayerRecord] = field(default_factory=list)
    saturation_depth: int | None = None

    @property
    def final(self) -> LayerRecord:
        return self.records[-1]

    @property
    def overlaps(self) -> np.ndarray:
        return np.array([r.magnitude_sq for r in self.records])

    @property
    def improvements(self) -> np.ndarray:
        return np.array([r.improvement for r in self.records])

    @property
    def converged(self) -> bool:
        return all(r.converged for r in self.records)


@dataclass
class AscentResult:
    x: np.ndarray
    value: float
    gradient_norm: float
    iterations: int
    converged: bool


def ascend(
    value_and_grad: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
    starts,
    max_iterations: int = 10000,
    gradient_tolerance: float = 1e-10,
    armijo: float = 1e-4,
    shrink: float = 0.5,
) -> list[AscentResult]:
    """Steepest ascent with Armijo backtracking, run for a batch of starts.

    ``value_and_grad`` maps an (m, d) array of points to values (m,) and
    gradients (m, d). Every row follows its own trajectory; batching only
    shares the numpy calls. The trial step is the Barzilai-Borwein length from
    the previous step, so only the step size adapts and the direction is
    always the gradient. Once the Armijo gain falls under the rounding noise
    of the objective, a trial is also accepted if the value did not drop
    beyond that noise and the gradient norm shrank.
    """
    x = np.array(starts, dtype=float, ndmin=2)
    m = len(x)
    fx, gx = value_and_grad(x)
    gnorm = np.linalg.norm(gx, axis=1)
    step = np.ones(m)
    x_prev = np.full_like(x, np.nan)
    g_prev = np.full_like(x, np.nan)
    iterations = np.zeros(m, dtype=int)
    stalled = np.zeros(m, dtype=bool)
    eps = np.finfo(float).eps
    for _ in range(max_iterations):
        active = np.flatnonzero((gnorm >= gradient_tolerance) & ~stalled)
        if len(active) == 0:
            break
        s = x[active] - x_prev[active]
        y = gx[active] - g_prev[active]
        sy = np.einsum("ij,ij->i", s, y)
        ss = np.einsum("ij,ij->i", s, s)
        # ascent: curvature along s is negative near a maximum
        with np.errstate(invalid="ignore", divide="ignore"):
            bb = np.where(sy < 0, np.minimum(ss / -sy, 1e3), np.maximum(step[active], 1.0))
        t = np.where(np.isfinite(bb), bb, step[active])
        pending = np.arange(len(active))
        while len(pending):
            rows = active[pending]
            trial = x[rows] + t[pending, None] * gx[rows]
            f_new, g_new = value_and_grad(trial)
            gain = armijo * t[pending] * gnorm[rows] ** 2
            slack = 16 * eps * np.maximum(np.abs(fx[rows]), 1e-300)
            ok = (f_new >= fx[rows] + gain) | (
                (gain < slack)
                & (f_new >= fx[rows] - slack)
                & (np.linalg.norm(g_new, axis=1) < gnorm[rows])
            )
            done = rows[ok]
            x_prev[done], g_prev[done] = x[done], gx[done]
            x[done], fx[done], gx[done] = trial[ok], f_new[ok], g_new[ok]
            gnorm[done] = np.linalg.norm(g_new[ok], axis=1)
            step[done] = t[pending][ok]
            iterations[done] += 1
            t[pending[~ok]] *= shrink
            dead = ~ok & (t[pending] * gnorm[rows] < 1e-18)
            stalled[rows[dead]] = True
            pending = pending[~ok & ~dead]
    return [
        AscentResult(x[i].copy(), float(fx[i]), float(gnorm[i]), int(iterations[i]),
                     bool(gnorm[i] < gradient_tolerance))
        for i in range(m)
    ]


def gradient_ascent(f, grad, x0, max_iterations: int = 10000,
                    gradient_tolerance: float = 1e-10) -> AscentResult:
    """Single-start convenience wrapper around :func:`ascend` for scalar callables."""

    def value_and_grad(xs):
        return (np.array([f(x) for x in xs]), np.array([grad(x) for x in xs]))

    return ascend(value_and_grad, [x0], max_iterations, gradient_tolerance)[0]


def ascend_overlap(n: int, starts, free=None, max_iterations: int = 10000,
                   gradient_tolerance: float = 1e-10,
                   prefix: AngleSchedule | None = None) -> list[AscentResult]:
    """:func:`ascend` on |g_p|^2, compiled.

    ``free`` masks which of the 2p angles move. ``prefix`` is a frozen
    schedule applied before the trained layers.
    """
    starts = np.array(starts, dtype=float, ndmin=2)
    free = np.ones(starts.shape[1], dtype=bool) if free is None else np.asarray(free, dtype=bool)
    evals, v0, psi0 = symsim._eigen_frame(n)
    if prefix is not None and prefix.p:
        psi0 = symsim.eigen_state(n, prefix)
    xs, values, gnorms, iterations = _kernels.ascend_rows(
        evals, v0, psi0, starts, free, int(max_iterations), float(gradient_tolerance),
        1e-4, 0.5,
    )
    return [
        AscentResult(xs[i], float(values[i]), float(gnorms[i]), int(iterations[i]),
                     bool(gnorms[i] < gradient_tolerance))
        for i in range(len(xs))
    ]


def _canonical_norm(theta: np.ndarray) -> float:
    return float(np.linalg.norm(AngleSchedule.from_vector(theta).canonical().to_vector()))


def _pick_best(results: list[AscentResult]) -> AscentResult:
    """Highest overlap, converged or not; ties go to the smallest canonical-schedule norm."""
    best_value = max(r.value for r in results)
    tied = [r for r in results if r.value >= best_value - TIE_TOL]
    return min(tied, key=lambda r: _canonical_norm(r.x))


def seed_angles(n: int) -> tuple[float, float]:
    """Single-layer (gamma, beta) seed: the large-n expansion, or the exact root for n < 5."""
    if n >= 5:
        a = analytic.asymptotic_angles(n)
        return a.gamma, a.beta
    s = analytic.solve_optimal_p1(n)
    return s.gamma, s.beta


def initial_points(n: int, p: int, config: OptimizerConfig, rng: np.random.Generator,
                   extra: list[np.ndarray] | None = None) -> list[np.ndarray]:
    points = [np.asarray(x, dtype=float) for x in (extra or [])]
    if config.init == "asymptotic-seed":
        gamma, beta = seed_angles(n)
        points.append(np.concatenate([np.full(p, gamma), np.full(p, beta)]))
    elif config.init == "zeros":
        points.append(np.zeros(2 * p))
    while len(points) < config.restarts:
        points.append(rng.uniform(0.0, np.pi, 2 * p))
    return points[: max(config.restarts, len(extra or []))]


def interpolate_layers(values: np.ndarray) -> np.ndarray:
    """Stretch p per-layer angles onto p + 1 layers by linear interpolation."""
    p = len(values)
    padded = np.concatenate([[0.0], values, [0.0]])
    i = np.arange(1, p + 2)
    return (i - 1) / p * padded[i - 1] + (p - i + 1) / p * padded[i]


def grown_starts(schedule: AngleSchedule) -> list[np.ndarray]:
    """Depth p + 1 starting points built from a depth-p optimum."""
    starts = []
    for s in (schedule, schedule.inverted()):
        starts.append(np.concatenate([interpolate_layers(s.gammas), interpolate_layers(s.betas)]))
    # an identity layer appended reproduces the depth-p overlap
    starts.append(schedule.append(0.0, 0.0).to_vector())
    return starts


def _optimize_fixed_depth(n: int, p: int, config: OptimizerConfig,
                          extra_starts: list[np.ndarray] | None
                          ) -> tuple[AngleSchedule, TrainingTrace]:
    rng = np.random.default_rng(config.rng_seed)
    starts = initial_points(n, p, config, rng, extra_starts)
    results = ascend_overlap(n, starts, None, config.max_iterations, config.gradient_tolerance)
    best = _pick_best(results)
    if not best.converged:
        log.warning("global optimisation n=%d p=%d: best restart did not converge", n, p)
    schedule = AngleSchedule.from_vector(best.x).canonical()
    trace = TrainingTrace(n, "global")
    trace.records.append(LayerRecord(
        p=p,
        schedule=schedule,
        magnitude_sq=best.value,
        improvement=best.value - 2.0**-n,
        gradient_norm=best.gradient_norm,
        iterations=best.iterations,
        converged=best.converged,
    ))
    return schedule, trace


def optimize_global_ladder(n: int, p_max: int, config: OptimizerConfig | None = None,
                           extra_starts: list[np.ndarray] | None = None
                           ) -> list[tuple[AngleSchedule, TrainingTrace]]:
    """Global optima for every depth 1..p_max.

    Each depth restarts from the configured random points plus starts grown
    from the previous depth's optimum. Random restarts alone miss the best
    basin at p >= 4 surprisingly often. ``extra_starts`` only apply at p_max.
    """
    if p_max < 1:
        raise ValueError("p must be >= 1")
    config = config or OptimizerConfig()
    out = []
    previous = None
    for p in range(1, p_max + 1):
        extra = list(grown_starts(previous)) if previous is not None else []
        if p == p_max and extra_starts:
            extra += [np.asarray(x, dtype=float) for x in extra_starts]
        schedule, trace = _optimize_fixed_depth(n, p, config, extra or None)
        out.append((schedule, trace))
        previous = schedule
    return out


def optimize_global(n: int, p: int, config: OptimizerConfig | None = None,
                    extra_starts: list[np.ndarray] | None = None
                    ) -> tuple[AngleSchedule, TrainingTrace]:
    """Optimise all 2p angles at once from several starting points."""
    if p < 1:
        raise ValueError("p must be >= 1")
    config = config or OptimizerConfig()
    if config.grow_depth and p > 1:
        return optimize_global_ladder(n, p, config, extra_starts)[-1]
    return _optimize_fixed_depth(n, p, config, extra_starts)


def optimize_layerwise(n: int, p_max: int, config: OptimizerConfig | None = None,
                       noise: NoiseModel | None = None) -> TrainingTrace:
    """Grow the circuit one layer at a time, training only the newest layer.

    Each new layer is started from (0, 0), which reproduces the previous
    overlap, plus the configured seeds. With phase noise every stored angle is
    perturbed after each layer (except the last) is trained.
    """
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    config = config or OptimizerConfig(strategy="layerwise")
    noise = noise or NoiseModel()
    rng = np.random.default_rng(config.rng_seed)
    noise_rng = np.random.default_rng([config.rng_seed, 1])
    iterations = config.max_iterations
    if noise.kind == "undertrain":
        iterations = min(iterations, noise.undertrain_iterations)

    schedule = AngleSchedule()
    previous = 2.0**-n
    trace = TrainingTrace(n, "layerwise")
    for p in range(1, p_max + 1):
        starts = initial_points(n, 1, config, rng, extra=[np.zeros(2)] if p > 1 else None)
        results = ascend_overlap(n, starts, None, iterations, config.gradient_tolerance,
                                 prefix=schedule)
        best = _pick_best(results)
        if noise.kind != "undertrain" and not best.converged:
            log.warning("layerwise n=%d p=%d: best restart did not converge", n, p)
        gamma_new, beta_new = best.x
        schedule = schedule.append(gamma_new % (2 * np.pi), beta_new % np.pi)
        trace.records.append(LayerRecord(
            p=p,
            schedule=schedule,
            magnitude_sq=best.value,
            improvement=best.value - previous,
            gradient_norm=best.gradient_norm,
            iterations=best.iterations,
            converged=best.converged,
        ))
        previous = best.value
        if noise.kind == "phase-noise" and p < p_max:
            schedule = AngleSchedule(
                schedule.gammas + noise_rng.normal(0.0, noise.sigma, p),
                schedule.betas + noise_rng.normal(0.0, noise.sigma, p),
            )
    trace.saturation_depth = detect_saturation(trace, config.improvement_epsilon)
    return trace


def detect_saturation(trace: TrainingTrace, epsilon: float = 1e-8) -> int | None:
    """Smallest depth from which every recorded improvement stays below epsilon.

    The depth reported is the last layer that still helped, i.e. p* such that
    layers p* + 1, p* + 2, ... all gain less than epsilon. None when the final
    layer still improves.
    """
    improvements = trace.improvements
    if len(improvements) == 0 or improvements[-1] >= epsilon:
        return None
    p_star = len(improvements)
    while p_star > 1 and improvements[p_star - 1] < epsilon:
        p_star -= 1
    return trace.records[p_star - 1].p


def last_layer_defect(schedule: AngleSchedule) -> float:
    """|gamma_p + 2 beta_p - pi| wrapped to [0, pi]; invariant on the inversion orbit."""
    return abs(analytic.wrap_angle(schedule.gammas[-1] + 2 * schedule.betas[-1] - np.pi))


@dataclass(frozen=True)
class LayerFit:
    layer: int
    slope: float
    intercept: float
    rms_residual: float


def layer_fits(schedules: list[AngleSchedule]) -> list[LayerFit]:
    """Least-squares line gamma_k = intercept + slope * beta_k per layer, across schedules.

    Schedules are typically the optima for a range of qubit counts at fixed p.
    """
    if len(schedules) < 2:
        raise ValueError("need at least two schedules to fit a line")
    p = schedules[0].p
    fits = []
    for k in range(p):
        betas = np.array([s.betas[k] for s in schedules])
        gammas = np.array([s.gammas[k] for s in schedules])
        slope, intercept = np.polyfit(betas, gammas, 1)
        resid = gammas - (intercept + slope * betas)
        fits.append(LayerFit(k + 1, float(slope), float(intercept), float(np.sqrt(np.mean(resid**2)))))
    return fits


@dataclass
class ConcentrationRow:
    n: int
    schedule: AngleSchedule
    magnitude_sq: float
    converged: bool
    delta: float | None


def concentration_scan(n_values, p: int, config: OptimizerConfig | None = None
                       ) -> list[ConcentrationRow]:
    """Global optima for consecutive qubit counts, warm-started from the previous n.

    ``delta`` is the Euclidean distance between the canonical angle vectors
    for n and the previous n.
    """
    if not 1 <= p <= 5:
        raise ValueError("concentration scan supports 1 <= p <= 5")
    config = config or OptimizerConfig()
    rows: list[ConcentrationRow] = []
    previous: AngleSchedule | None = None
    for n in sorted(n_values):
        extra = [previous.to_vector()] if previous is not None else None
        schedule, trace = optimize_global(n, p, config, extra_starts=extra)
        delta = None
        if previous is not None:
            delta = float(np.linalg.norm(schedule.to_vector() - previous.to_vector()))
        rows.append(ConcentrationRow(n, schedule, trace.final.magnitude_sq, trace.converged, delta))
        previous = schedule
    return rows
