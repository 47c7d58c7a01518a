"""EM outer loop: BP as the E-step surrogate, closed-form M-step, random
restarts scored by a Bethe-approximated likelihood bound, and the final
core/periphery assignment."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ._accel import aitken_extrapolate
from .bp import BpResult, Params, run_bp, two_point_marginals
from .graph import Graph
from .sbm import DEGENERATE, MixingMatrix

logger = logging.getLogger(__name__)

CORE = 1
PERIPHERY = 2

_P_FLOOR = 1e-12
_MASS_FLOOR = 1e-9


class DegenerateGroupError(RuntimeError):
    """A group's posterior mass collapsed during the M-step."""


class FitFailureError(RuntimeError):
    """Every restart degenerated; diagnostics in the message."""


@dataclass(frozen=True)
class FitConfig:
    restarts: int = 5
    em_tol: float = 1e-6
    em_max_iter: int = 100
    bp_tol: float = 1e-8
    bp_max_iter: int = 200
    seed: int = 0
    init_spread: float = 0.2
    damping: float = 0.0
    # every `accel_every` EM steps the parameter sequence is extrapolated to
    # its geometric limit (Aitken); 0 disables and runs plain EM
    accel_every: int = 4

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if min(self.em_tol, self.bp_tol) <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class FitResult:
    params: Params
    marginals: np.ndarray
    assignment: np.ndarray        # per-vertex CORE / PERIPHERY
    objective: float
    em_iterations: int
    converged: bool
    structure_class: str
    restarts_used: int = 0
    degenerate_restarts: int = 0
    tie_count: int = 0


def m_step(graph: Graph, marginals: np.ndarray,
           edge_marginals: np.ndarray) -> Params:
    """Closed-form parameter update from one- and two-point marginals.

    gamma_r is the mean vertex mass; p_rs sums the edge tables over both
    orientations and divides by the product of group masses, returned in
    scaled form c_rs = n * p_rs and clamped away from {0, 1}.
    """
    n = graph.n
    mass = marginals.sum(axis=0)
    if mass.min() < _MASS_FLOOR * n:
        raise DegenerateGroupError(
            f"group mass collapsed: sums={mass.tolist()} (n={n})")
    gamma1 = float(mass[0] / n)

    # sum over ordered pairs (i,j) with A_ij=1: table + its transpose
    edge_sum = edge_marginals.sum(axis=0)
    num = edge_sum + edge_sum.T
    denom = np.outer(mass, mass)
    p = np.clip(num / denom, _P_FLOOR, 1.0 - _P_FLOOR)
    return Params(gamma1, MixingMatrix(c11=float(n * p[0, 0]),
                                       c12=float(n * p[0, 1]),
                                       c22=float(n * p[1, 1])))


def _entropy(p: np.ndarray, axis=None) -> np.ndarray:
    q = np.clip(p, 1e-300, 1.0)
    return -(p * np.log(q)).sum(axis=axis)


def bethe_objective(graph: Graph, params: Params, marginals: np.ndarray,
                    edge_marginals: np.ndarray) -> float:
    """Likelihood lower bound with the entropy in the Bethe approximation.

    Exact on trees up to an additive parameter-independent constant; used to
    rank EM restarts.
    """
    n = graph.n
    c = params.mixing.as_array()
    log_c = np.log(np.clip(c, 1e-300, None))
    mass = marginals.sum(axis=0)
    gamma = np.array([params.gamma1, params.gamma2])

    energy = float((edge_marginals * log_c).sum())
    energy -= 0.5 * float(mass @ c @ mass) / n
    energy += float((marginals @ np.log(gamma)).sum())

    entropy = float(_entropy(edge_marginals.reshape(graph.m, 4), axis=1).sum())
    entropy -= float(((graph.degrees - 1) * _entropy(marginals, axis=1)).sum())
    return energy + entropy


def classify(marginals: np.ndarray) -> tuple[np.ndarray, int]:
    """Argmax assignment (groups assumed canonically ordered); exact ties go
    to the core and are counted."""
    core = marginals[:, 0] >= marginals[:, 1]
    ties = int((marginals[:, 0] == marginals[:, 1]).sum())
    return np.where(core, CORE, PERIPHERY).astype(np.int64), ties


def _init_params(graph: Graph, rng: np.random.Generator,
                 spread: float) -> Params:
    """Random start near the observed density.

    The three densities are jittered around the mean degree, separated, and
    then ordered at random: starts fixed to one ordering (say c11 > c12 >
    c22) never escape into the basins of the other mixing regimes, so e.g.
    an assortative pair of cliques would go undetected.
    """
    c_hat = max(graph.mean_degree(), 1e-6)
    gamma1 = rng.uniform(0.3, 0.7)
    jitter = lambda: c_hat * (1.0 + rng.uniform(-spread, spread))
    vals = np.sort([jitter(), jitter(), jitter()])[::-1]
    # enforce strict separation even if jitters collide
    vals[0] *= 1.0 + 0.5 * spread
    vals[2] *= 1.0 - 0.5 * spread
    vals = vals[rng.permutation(3)]
    return Params(gamma1, MixingMatrix(*vals))


def _canonicalize(params: Params, marginals: np.ndarray,
                  ) -> tuple[Params, np.ndarray]:
    """Order groups so group 1 has the larger within-group density."""
    if params.mixing.c22 > params.mixing.c11:
        return params.swapped(), marginals[:, ::-1].copy()
    return params, marginals


def _as_vector(params: Params) -> np.ndarray:
    c = params.mixing
    return np.array([params.gamma1, c.c11, c.c12, c.c22])


def _from_vector(v: np.ndarray) -> Params:
    gamma1 = float(np.clip(v[0], 1e-3, 1.0 - 1e-3))
    c = np.maximum(v[1:], 1e-9)
    return Params(gamma1, MixingMatrix(*c))


def _aitken(history: list[np.ndarray]) -> Params | None:
    """Extrapolated parameter estimate, clipped into the valid domain."""
    v = aitken_extrapolate(history)
    return None if v is None else _from_vector(v)


def _run_restart(graph: Graph, config: FitConfig, seed: int,
                 ) -> tuple[Params, BpResult, np.ndarray, int, bool]:
    rng = np.random.default_rng(seed)
    params = _init_params(graph, rng, config.init_spread)
    eta = None
    bp_seed = int(rng.integers(2 ** 62))

    converged = False
    iterations = 0
    history: list[np.ndarray] = []
    for iterations in range(1, config.em_max_iter + 1):
        bp = run_bp(graph, params, seed=bp_seed, init=eta,
                    tol=config.bp_tol, max_iter=config.bp_max_iter,
                    damping=config.damping)
        eta = bp.eta  # warm-start the next E-step
        tables = two_point_marginals(graph, params, bp.eta)
        new = m_step(graph, bp.marginals, tables)

        c_old = params.mixing.as_array()
        c_new = new.mixing.as_array()
        scale = max(float(np.abs(c_old).mean()), 1e-12)
        dc = float(np.abs(c_new - c_old).max())
        dg = abs(new.gamma1 - params.gamma1)
        params = new
        if dc < config.em_tol * scale and dg < config.em_tol:
            converged = True
            break

        history.append(_as_vector(new))
        if (config.accel_every and len(history) >= 3
                and iterations % config.accel_every == 0):
            extrapolated = _aitken(history)
            if extrapolated is not None:
                params = extrapolated
                history.clear()

    bp = run_bp(graph, params, seed=bp_seed, init=eta,
                tol=config.bp_tol, max_iter=config.bp_max_iter,
                damping=config.damping)
    tables = two_point_marginals(graph, params, bp.eta)
    return params, bp, tables, iterations, converged


def fit(graph: Graph, config: FitConfig = FitConfig()) -> FitResult:
    """Full maximum-likelihood fit across random restarts.

    Each restart alternates BP with the closed-form M-step until the
    parameters settle; the restart with the highest Bethe objective wins.
    Degenerate restarts (a group's mass collapsing) are re-seeded up to a
    budget and counted.
    """
    if graph.n == 0:
        raise ValueError("cannot fit an empty graph")
    root = np.random.SeedSequence(config.seed)
    seeds = [int(s.generate_state(1)[0]) for s in root.spawn(3 * config.restarts)]

    best = None
    best_objective = -np.inf
    used = 0
    degenerate = 0
    attempts = iter(seeds)
    while used < config.restarts:
        try:
            seed = next(attempts)
        except StopIteration:
            break
        try:
            params, bp, tables, iterations, converged = _run_restart(
                graph, config, seed)
        except DegenerateGroupError as exc:
            logger.info("restart degenerated (%s); re-seeding", exc)
            degenerate += 1
            continue
        used += 1
        objective = bethe_objective(graph, params, bp.marginals, tables)
        if objective > best_objective:
            best_objective = objective
            best = (params, bp, iterations, converged)

    if best is None:
        raise FitFailureError(
            f"all {degenerate} restart attempt(s) degenerated on this graph")

    params, bp, iterations, converged = best
    params, marginals = _canonicalize(params, bp.marginals)
    assignment, ties = classify(marginals)
    return FitResult(
        params=params,
        marginals=marginals,
        assignment=assignment,
        objective=best_objective,
        em_iterations=iterations,
        converged=converged,
        structure_class=params.mixing.classify(),
        restarts_used=used,
        degenerate_restarts=degenerate,
        tie_count=ties,
    )
