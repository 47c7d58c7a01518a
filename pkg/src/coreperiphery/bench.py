"""Planted-structure benchmark sweeps with statistical aggregation.

Error rates are always reported after minimizing over the two group-label
permutations.  Every trial derives its own seed from (sweep seed, grid
index, trial index), so results are reproducible and independent of
execution order.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .bp import Params, run_bp
from .degree_model import fit_degree_model, naive_split
from .em import DegenerateGroupError, FitConfig, FitFailureError, classify, fit
from .sbm import (MixingMatrix, PlantedNetwork, ThetaParametrization,
                  mixing_from_theta, sample_sbm, weak_structure_mixing)

logger = logging.getLogger(__name__)

METHODS = ("bp_em", "degree_em", "naive")


def error_rate(predicted: np.ndarray, truth: np.ndarray) -> float:
    """Fraction misclassified, minimized over the two label permutations."""
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise ValueError("assignment/truth length mismatch")
    mismatch = float((predicted != truth).mean())
    return min(mismatch, 1.0 - mismatch)


@dataclass(frozen=True)
class SweepConfig:
    n: int = 100_000
    trials: int = 10
    seed: int = 0
    methods: tuple[str, ...] = METHODS
    true_params_mode: bool = False
    restarts: int = 3
    # theta-family sweep
    theta1: float | None = None
    r: float = 2.0
    theta2_grid: tuple[float, ...] | None = None
    # weak-structure sweep
    c: float | None = None
    alpha1: float = 1.0
    alpha2: float = 1.0
    delta_grid: tuple[float, ...] | None = None
    gamma1: float = 0.5

    def __post_init__(self):
        if (self.theta2_grid is None) == (self.delta_grid is None):
            raise ValueError("configure exactly one of theta2_grid / delta_grid")
        for method in self.methods:
            if method not in METHODS:
                raise ValueError(f"unknown method {method!r}")
        # validate every grid point up front
        for _, _ in self.grid():
            pass

    def grid(self) -> Iterable[tuple[float, MixingMatrix]]:
        if self.theta2_grid is not None:
            if self.theta1 is None:
                raise ValueError("theta sweep needs theta1")
            for theta2 in self.theta2_grid:
                yield theta2, mixing_from_theta(
                    ThetaParametrization(self.theta1, theta2, self.r))
        else:
            if self.c is None:
                raise ValueError("weak-structure sweep needs c")
            for delta in self.delta_grid:
                yield delta, weak_structure_mixing(
                    self.c, self.alpha1, self.alpha2, delta)

    @property
    def parameter_name(self) -> str:
        return "theta2" if self.theta2_grid is not None else "delta"


@dataclass
class SweepRow:
    parameter: float
    method: str
    mean_error: float
    stderr: float
    trials: int
    mean_iters: float
    failures: int
    errors: list[float] = field(default_factory=list)


def _trial_seed(seed: int, point: int, trial: int) -> int:
    return int(np.random.SeedSequence([seed, point, trial]).generate_state(1)[0])


def default_theta2_grid(theta1: float, r: float, points: int = 11,
                        margin: float = 0.05) -> tuple[float, ...]:
    """Evenly spaced admissible theta2 values with a safety margin off the
    open interval's endpoints."""
    lo, hi = ThetaParametrization.theta2_bounds(theta1, r)
    width = hi - lo
    return tuple(np.linspace(lo + margin * width, hi - margin * width, points))


def _run_method(method: str, net: PlantedNetwork, cfg: SweepConfig,
                seed: int) -> tuple[np.ndarray, int, bool]:
    """Returns (assignment, iterations, converged)."""
    if method == "naive":
        return naive_split(net.graph, cfg.gamma1), 0, True
    if method == "degree_em":
        res = fit_degree_model(net.graph, seed=seed)
        return res.assignment, res.iterations, res.converged
    # bp_em
    if cfg.true_params_mode:
        params = Params(net.gamma1, net.mixing)
        bp = run_bp(net.graph, params, seed=seed)
        assignment, _ = classify(bp.marginals)
        return assignment, bp.iterations, bp.converged
    res = fit(net.graph, FitConfig(restarts=cfg.restarts, seed=seed))
    return res.assignment, res.em_iterations, res.converged


def _run_trial(cfg: SweepConfig, point_idx: int, value: float,
               mixing: MixingMatrix, trial: int) -> dict[str, tuple]:
    """One generated network, every method; returns per-method outcomes."""
    seed = _trial_seed(cfg.seed, point_idx, trial)
    net = sample_sbm(cfg.n, cfg.gamma1, mixing, seed)
    outcome: dict[str, tuple] = {}
    for method in cfg.methods:
        try:
            assignment, its, converged = _run_method(method, net, cfg, seed)
        except (DegenerateGroupError, FitFailureError) as exc:
            logger.warning("%s failed at %s=%g trial %d: %s",
                           method, cfg.parameter_name, value, trial, exc)
            outcome[method] = None
            continue
        outcome[method] = (error_rate(assignment, net.truth), its, converged)
    return outcome


def run_sweep(cfg: SweepConfig, workers: int = 1) -> list[SweepRow]:
    """Generate trials at every grid point, run each method, aggregate the
    per-method error rate mean and standard error across trials.

    Trials may run on a thread pool (the BP kernel releases the GIL); the
    aggregation order is fixed, so results do not depend on workers.
    """
    rows: list[SweepRow] = []
    for point_idx, (value, mixing) in enumerate(cfg.grid()):
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(
                    lambda t: _run_trial(cfg, point_idx, value, mixing, t),
                    range(cfg.trials)))
        else:
            outcomes = [_run_trial(cfg, point_idx, value, mixing, t)
                        for t in range(cfg.trials)]

        per_method: dict[str, list[float]] = {m: [] for m in cfg.methods}
        iters: dict[str, list[int]] = {m: [] for m in cfg.methods}
        failures: dict[str, int] = {m: 0 for m in cfg.methods}
        for outcome in outcomes:
            for method in cfg.methods:
                if outcome[method] is None:
                    failures[method] += 1
                    continue
                err, its, converged = outcome[method]
                if not converged:
                    failures[method] += 1
                per_method[method].append(err)
                iters[method].append(its)
        for method in cfg.methods:
            errs = per_method[method]
            if not errs:
                raise RuntimeError(
                    f"all trials failed for {method} at "
                    f"{cfg.parameter_name}={value}")
            arr = np.array(errs)
            stderr = float(arr.std(ddof=1) / np.sqrt(len(arr))) if len(arr) > 1 else 0.0
            rows.append(SweepRow(
                parameter=float(value), method=method,
                mean_error=float(arr.mean()), stderr=stderr,
                trials=len(arr),
                mean_iters=float(np.mean(iters[method])) if iters[method] else 0.0,
                failures=failures[method], errors=errs))
    return rows


def write_sweep_csv(cfg: SweepConfig, rows: Sequence[SweepRow],
                    stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    if cfg.theta2_grid is not None:
        header = ["theta1", "theta2"]
        fixed = [repr(cfg.theta1)]
    else:
        header = ["c", "delta"]
        fixed = [repr(cfg.c)]
    writer.writerow(header + ["method", "mean_error", "stderr", "trials",
                              "mean_iters", "failures"])
    for row in rows:
        writer.writerow(fixed + [repr(row.parameter), row.method,
                                 repr(row.mean_error), repr(row.stderr),
                                 row.trials, repr(row.mean_iters),
                                 row.failures])


@dataclass
class LinearCheckResult:
    slope: float
    expected_slope: float
    residual: float
    trials_used: int
    ranking_matches_degree: bool


def weak_structure_linear_check(n: int, c: float, alpha1: float, alpha2: float,
                                delta: float, trials: int,
                                seed: int) -> LinearCheckResult:
    """Regress measured BP log-odds against (k_i - c)/c in true-params mode.

    For small delta the slope approaches (alpha1 + alpha2)/2 * delta and the
    marginal ranking collapses onto the degree ranking.
    """
    mixing = weak_structure_mixing(c, alpha1, alpha2, delta)
    xs: list[np.ndarray] = []
    ys: list[np.ndarray] = []
    used = 0
    ranking_ok = True
    for trial in range(trials):
        trial_seed = _trial_seed(seed, 0, trial)
        net = sample_sbm(n, 0.5, mixing, trial_seed)
        bp = run_bp(net.graph, Params(0.5, mixing), seed=trial_seed)
        if not bp.converged:
            logger.warning("BP did not converge in trial %d; dropped", trial)
            continue
        used += 1
        q = np.clip(bp.marginals, 1e-300, 1.0)
        log_odds = np.log(q[:, 0]) - np.log(q[:, 1])
        degrees = net.graph.degrees
        xs.append((degrees - c) / c)
        ys.append(log_odds)
        # marginal ranking must follow degree ranking (ties allowed)
        order = np.argsort(degrees, kind="stable")
        q_sorted = bp.marginals[order, 0]
        k_sorted = degrees[order]
        drops = np.diff(q_sorted) < -1e-9
        if np.any(drops & (np.diff(k_sorted) > 0)):
            ranking_ok = False

    if used == 0:
        raise RuntimeError("no converged trials for the linearity check")
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return LinearCheckResult(
        slope=float(slope),
        expected_slope=0.5 * (alpha1 + alpha2) * delta,
        residual=residual,
        trials_used=used,
        ranking_matches_degree=ranking_ok,
    )
