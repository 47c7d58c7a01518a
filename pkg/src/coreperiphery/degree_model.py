"""Degree-only core-periphery fit.

On the one-parameter family c = (theta*r, theta, theta/r) the posterior
marginals are a closed-form function of vertex degree, so no message passing
is needed: the fit is a two-equation fixed-point iteration on (gamma, r).
Also provides the naive fixed-fraction degree split used as a baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._accel import aitken_extrapolate
from .em import CORE, PERIPHERY, DegenerateGroupError, classify
from .graph import Graph
from .sbm import MixingMatrix, group_mean_degrees

_LOG_CAP = 700.0  # exp overflow guard


@dataclass
class DegreeModelParams:
    gamma1: float
    r: float
    theta: float

    @property
    def gamma2(self) -> float:
        return 1.0 - self.gamma1

    @property
    def mixing(self) -> MixingMatrix:
        return MixingMatrix(self.theta * self.r, self.theta, self.theta / self.r)


@dataclass
class DegreeFitResult:
    params: DegreeModelParams
    marginals: np.ndarray
    assignment: np.ndarray
    iterations: int
    converged: bool
    tie_count: int = 0


def degree_marginals(degrees: np.ndarray, gamma1: float, r: float,
                     d1: float, d2: float) -> np.ndarray:
    """Closed-form core probabilities
    q_1^i = gamma1 e^{-d1} r^{k_i} / (gamma2 e^{-d2} + gamma1 e^{-d1} r^{k_i}).
    """
    log_odds = (np.log(gamma1) - np.log1p(-gamma1)
                + (d2 - d1) + degrees * np.log(r))
    q1 = 1.0 / (1.0 + np.exp(-np.clip(log_odds, -_LOG_CAP, _LOG_CAP)))
    return np.column_stack([q1, 1.0 - q1])


def fit_degree_model(graph: Graph, tol: float = 1e-10,
                     max_iter: int = 500, seed: int = 0) -> DegreeFitResult:
    """Fixed-point iteration for the degree-sufficient SBM sub-family.

    Each iterate: group degree means (kappa_1, kappa_2) from the current
    marginals, then gamma from vertex masses, r = kappa_1/kappa_2,
    theta = kappa_1*kappa_2/c, then marginals from the closed form.
    """
    degrees = graph.degrees.astype(np.float64)
    c_mean = graph.mean_degree()
    if c_mean == 0:
        raise DegenerateGroupError("graph has no edges")
    n = graph.n

    # start from an even split with r from the top/bottom degree halves
    order = np.argsort(degrees)[::-1]
    top = degrees[order[: n // 2 or 1]].mean()
    bottom = max(degrees[order[n // 2:]].mean(), 1e-12) if n > 1 else top
    gamma1 = 0.5
    r = max(top / bottom, 1.01)
    theta = c_mean  # placeholder; recomputed from kappas each iterate
    d1, d2 = group_mean_degrees(gamma1, MixingMatrix(theta * r, theta, theta / r))
    q = degree_marginals(degrees, gamma1, r, d1, d2)

    converged = False
    iterations = 0
    history: list[np.ndarray] = []
    for iterations in range(1, max_iter + 1):
        mass = q.sum(axis=0)
        if mass.min() < 1e-9 * n:
            raise DegenerateGroupError(f"group mass collapsed: {mass.tolist()}")
        kappa = (degrees[:, None] * q).sum(axis=0) / mass
        if kappa[1] <= 0:
            raise DegenerateGroupError("periphery expected degree vanished")

        new_gamma1 = float(mass[0] / n)
        new_r = max(float(kappa[0] / kappa[1]), 1.0)
        theta = float(kappa[0] * kappa[1] / c_mean)
        change = max(abs(new_gamma1 - gamma1), abs(new_r - r))
        gamma1, r = new_gamma1, new_r

        history.append(np.array([gamma1, r]))
        if len(history) >= 3 and iterations % 4 == 0:
            ext = aitken_extrapolate(history)
            if ext is not None:
                gamma1 = float(np.clip(ext[0], 1e-3, 1.0 - 1e-3))
                r = max(float(ext[1]), 1.0)
                history.clear()

        d1, d2 = group_mean_degrees(
            gamma1, MixingMatrix(theta * max(r, 1.0 + 1e-12),
                                 theta, theta / max(r, 1.0 + 1e-12)))
        if r <= 1.0:
            # no degree signal: marginals flat at gamma
            q = np.tile([gamma1, 1.0 - gamma1], (n, 1))
        else:
            q = degree_marginals(degrees, gamma1, r, d1, d2)
        if change < tol:
            converged = True
            break

    assignment, ties = classify(q)
    params = DegreeModelParams(gamma1=gamma1, r=r, theta=theta)
    return DegreeFitResult(params=params, marginals=q, assignment=assignment,
                           iterations=iterations, converged=converged,
                           tie_count=ties)


def naive_split(graph: Graph, core_fraction: float = 0.5) -> np.ndarray:
    """Put the ceil(core_fraction * n) highest-degree vertices in the core.

    Ties at the threshold degree are broken by ascending vertex index, so the
    split is deterministic.
    """
    if not 0 < core_fraction < 1:
        raise ValueError("core_fraction must lie strictly in (0, 1)")
    n = graph.n
    k_core = int(np.ceil(core_fraction * n))
    # sort by (-degree, index); stable sort on index order gives index ties
    order = np.argsort(-graph.degrees, kind="stable")
    assignment = np.full(n, PERIPHERY, dtype=np.int64)
    assignment[order[:k_core]] = CORE
    return assignment
