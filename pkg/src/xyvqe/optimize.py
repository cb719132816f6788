"""Derivative-free minimizers and a seeded multi-start driver.

All methods count objective evaluations against ``max_evals`` and record
an ``(eval_index, value)`` history.  For Nelder-Mead and Powell the
recorded value is the best seen so far, so the history is non-increasing;
for SPSA it is the raw (noisy) measurement.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import NumericalError
from .rng import child_rng

METHODS = ("NELDER_MEAD", "POWELL", "SPSA")

GOLDEN = (math.sqrt(5) - 1) / 2  # 0.618...

Objective = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "NELDER_MEAD"
    max_evals: int = 20000
    tolerance_f: float = 1e-8
    tolerance_x: float = 1e-6
    seed: int = 0
    bounds: tuple[tuple[float, float], ...] | None = None
    initial_step: float = 0.5
    line_tolerance: float = 1e-6
    spsa_a: float = 0.2
    spsa_c: float = 0.1
    spsa_A: float | None = None
    # SPSA only: stop once a window of evaluations improves on the previous
    # window by less than this (typically one standard error of the objective).
    noise_floor: float | None = None
    noise_window: int = 50

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.max_evals < 1:
            raise ValueError(f"max_evals must be >= 1, got {self.max_evals}")
        if self.tolerance_f <= 0 or self.tolerance_x <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class RestartSummary:
    index: int
    x0: np.ndarray
    best_value: float
    evals_used: int
    converged: bool


@dataclass
class OptRun:
    best_value: float
    best_params: np.ndarray
    evals_used: int
    history: list[tuple[int, float]]
    converged: bool
    message: str = ""
    restarts: list[RestartSummary] = field(default_factory=list)


class _BudgetExhausted(Exception):
    pass


class _Tracker:
    """Counts evaluations, enforces the budget and keeps the incumbent."""

    def __init__(self, f: Objective, cfg: OptimizerConfig, record_best: bool):
        self.f = f
        self.max_evals = cfg.max_evals
        self.record_best = record_best
        if cfg.bounds is not None:
            b = np.asarray(cfg.bounds, dtype=float)
            self.lo, self.hi = b[:, 0], b[:, 1]
        else:
            self.lo = self.hi = None
        self.evals = 0
        self.best_value = math.inf
        self.best_x: np.ndarray | None = None
        self.history: list[tuple[int, float]] = []

    def clip(self, x: np.ndarray) -> np.ndarray:
        if self.lo is None:
            return x
        return np.clip(x, self.lo, self.hi)

    def __call__(self, x: np.ndarray) -> float:
        if self.evals >= self.max_evals:
            raise _BudgetExhausted
        x = self.clip(np.asarray(x, dtype=float))
        value = float(self.f(x))
        self.evals += 1
        if not math.isfinite(value):
            raise NumericalError(f"objective returned {value!r} at evaluation {self.evals} (x={x.tolist()})")
        if value < self.best_value:
            self.best_value = value
            self.best_x = x.copy()
        self.history.append((self.evals, self.best_value if self.record_best else value))
        return value


# --- Nelder-Mead -------------------------------------------------------------------


def _nelder_mead(fun: _Tracker, x0: np.ndarray, cfg: OptimizerConfig) -> tuple[bool, str]:
    rho, chi, gamma, sigma = 1.0, 2.0, 0.5, 0.5
    n = x0.size
    sim = np.vstack([x0] + [x0 + cfg.initial_step * np.eye(n)[i] for i in range(n)])
    fs = np.array([fun(x) for x in sim])
    while True:
        order = np.argsort(fs, kind="stable")
        sim, fs = sim[order], fs[order]
        if np.max(np.abs(fs[1:] - fs[0])) <= cfg.tolerance_f and np.max(np.abs(sim[1:] - sim[0])) <= cfg.tolerance_x:
            return True, "simplex converged"
        centroid = sim[:-1].mean(axis=0)
        xr = centroid + rho * (centroid - sim[-1])
        fr = fun(xr)
        if fr < fs[0]:
            xe = centroid + rho * chi * (centroid - sim[-1])
            fe = fun(xe)
            if fe < fr:
                sim[-1], fs[-1] = xe, fe
            else:
                sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-2]:
            sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-1]:
            xc = centroid + gamma * (xr - centroid)
            fc = fun(xc)
            if fc <= fr:
                sim[-1], fs[-1] = xc, fc
                continue
        else:
            xcc = centroid + gamma * (sim[-1] - centroid)
            fcc = fun(xcc)
            if fcc < fs[-1]:
                sim[-1], fs[-1] = xcc, fcc
                continue
        for i in range(1, n + 1):
            sim[i] = sim[0] + sigma * (sim[i] - sim[0])
            fs[i] = fun(sim[i])


# --- Powell ------------------------------------------------------------------------


def _bracket(g: Callable[[float], float], f0: float, step: float) -> tuple[float, float, float, float]:
    """Find a < b < c (or reversed) with g(b) <= g(a), g(c); returns (a, b, c, g(b))."""
    a, fa = 0.0, f0
    b, fb = step, g(step)
    if fb > fa:
        a, b, fa, fb = b, a, fb, fa
    c = b + (b - a) / GOLDEN
    fc = g(c)
    for _ in range(60):
        if fc >= fb:
            return a, b, c, fb
        a, b, fa, fb = b, c, fb, fc
        c = b + (b - a) / GOLDEN
        fc = g(c)
    return a, b, c, min(fb, fc)


def _golden_line(g: Callable[[float], float], f0: float, step: float, tol: float) -> tuple[float, float]:
    a, b, c, fb = _bracket(g, f0, step)
    lo, hi = min(a, c), max(a, c)
    # golden-section on [lo, hi]; reuse the interior point b where it helps
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = g(x1), g(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = g(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = g(x2)
    candidates = [(f1, x1), (f2, x2), (fb, b), (f0, 0.0)]
    fbest, tbest = min(candidates)
    return tbest, fbest


def _powell(fun: _Tracker, x0: np.ndarray, cfg: OptimizerConfig) -> tuple[bool, str]:
    n = x0.size
    dirs = [cfg.initial_step * e for e in np.eye(n)]
    x = x0.copy()
    fx = fun(x)
    while True:
        x_start, f_start = x.copy(), fx
        biggest_drop, biggest_k = 0.0, 0
        for k, d in enumerate(dirs):
            f_before = fx
            t, fx = _golden_line(lambda s: fun(x + s * d), fx, 1.0, cfg.line_tolerance)
            x = x + t * d
            if f_before - fx > biggest_drop:
                biggest_drop, biggest_k = f_before - fx, k
        if f_start - fx <= cfg.tolerance_f:
            return True, "objective change below tolerance"
        d_new = x - x_start
        if np.linalg.norm(d_new) <= cfg.tolerance_x:
            return True, "step below tolerance"
        f_ext = fun(x_start + 2 * d_new)
        if f_ext < f_start:
            lhs = 2 * (f_start - 2 * fx + f_ext) * (f_start - fx - biggest_drop) ** 2
            rhs = biggest_drop * (f_start - f_ext) ** 2
            if lhs < rhs:
                t, fx = _golden_line(lambda s: fun(x + s * d_new), fx, 1.0, cfg.line_tolerance)
                x = x + t * d_new
                dirs[biggest_k] = dirs[-1]
                dirs[-1] = d_new


# --- SPSA --------------------------------------------------------------------------


def _spsa(
    fun: _Tracker, x0: np.ndarray, cfg: OptimizerConfig, rng: np.random.Generator
) -> tuple[bool, str, np.ndarray]:
    a, c = cfg.spsa_a, cfg.spsa_c
    big_a = 0.1 * cfg.max_evals if cfg.spsa_A is None else cfg.spsa_A
    x = x0.copy()
    window: list[float] = []
    prev_mean: float | None = None
    k = 0
    try:
        while True:
            ak = a / (k + 1 + big_a) ** 0.602
            ck = c / (k + 1) ** 0.101
            delta = rng.choice((-1.0, 1.0), size=x.size)
            y_plus = fun(x + ck * delta)
            y_minus = fun(x - ck * delta)
            grad = (y_plus - y_minus) / (2 * ck) * delta
            step = ak * grad
            x = fun.clip(x - step)
            k += 1
            if cfg.noise_floor is not None:
                window += [y_plus, y_minus]
                if len(window) >= cfg.noise_window:
                    mean = float(np.mean(window))
                    if prev_mean is not None and prev_mean - mean < cfg.noise_floor:
                        return True, "improvement below noise floor", x
                    prev_mean, window = mean, []
            elif np.linalg.norm(step) <= cfg.tolerance_x:
                return True, "step below tolerance", x
    except _BudgetExhausted:
        return False, "evaluation budget exhausted", x


# --- drivers -----------------------------------------------------------------------


def minimize(
    f: Objective,
    x0: Sequence[float],
    cfg: OptimizerConfig = OptimizerConfig(),
    rng: np.random.Generator | None = None,
) -> OptRun:
    x0 = np.array(x0, dtype=float).ravel()
    if cfg.method == "SPSA":
        tracker = _Tracker(f, cfg, record_best=False)
        if rng is None:
            rng = child_rng(cfg.seed, 0)
        converged, message, x = _spsa(tracker, x0, cfg, rng)
        x = tracker.clip(x)
        try:
            final = tracker(x)
        except _BudgetExhausted:
            final = tracker.history[-1][1] if tracker.history else float(f(x))
        return OptRun(final, x, tracker.evals, tracker.history, converged, message)

    tracker = _Tracker(f, cfg, record_best=True)
    try:
        if cfg.method == "NELDER_MEAD":
            converged, message = _nelder_mead(tracker, x0, cfg)
        else:
            converged, message = _powell(tracker, x0, cfg)
    except _BudgetExhausted:
        converged, message = False, "evaluation budget exhausted"
    if tracker.best_x is None:
        return OptRun(math.inf, x0, 0, [], False, "no evaluations performed")
    return OptRun(tracker.best_value, tracker.best_x, tracker.evals, tracker.history, converged, message)


def _restart_job(args) -> OptRun:
    f, x0, cfg, seed, index = args
    return minimize(f, x0, cfg, rng=child_rng(seed, index, 1))


def multi_start(
    f: Objective,
    param_dim: int,
    restarts: int,
    cfg: OptimizerConfig = OptimizerConfig(),
    jobs: int = 1,
    low: float = -math.pi,
    high: float = math.pi,
    initial_points: Sequence[Sequence[float]] | None = None,
) -> OptRun:
    """Best of ``restarts`` independent runs from uniform random starting points.

    Starting point ``r`` comes from the stream ``(cfg.seed, r)``, so the
    result does not depend on ``jobs`` or on completion order; ties go to
    the lower restart index.  ``initial_points`` replace the first random
    starts.  An objective exposing ``spawn(index)`` (e.g. one drawing shot
    noise) is replaced by ``f.spawn(r)`` for restart ``r``.
    """
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    starts = [child_rng(cfg.seed, r).uniform(low, high, size=param_dim) for r in range(restarts)]
    for r, x in enumerate(initial_points or ()):
        if r < restarts:
            starts[r] = np.array(x, dtype=float)
    spawn = getattr(f, "spawn", None)
    tasks = [(spawn(r) if spawn else f, starts[r], cfg, cfg.seed, r) for r in range(restarts)]
    if jobs > 1 and restarts > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, restarts)) as pool:
            runs = list(pool.map(_restart_job, tasks))
    else:
        runs = [_restart_job(t) for t in tasks]
    best_index = min(range(restarts), key=lambda r: (runs[r].best_value, r))
    best = runs[best_index]
    summaries = [
        RestartSummary(r, starts[r], runs[r].best_value, runs[r].evals_used, runs[r].converged) for r in range(restarts)
    ]
    return replace(best, restarts=summaries)
