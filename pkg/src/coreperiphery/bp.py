"""Belief propagation for the two-group SBM posterior at fixed parameters.

The state is a per-half-edge message table (group-1 component only; the
group-2 component is its complement) plus per-vertex marginals.  The
external field -- the all-vertex product in the update rule -- is evaluated
once per sweep in exponential form from the aggregate group masses, which is
the leading-order form in 1/n and costs O(n) per sweep instead of O(n) per
message.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import bp_sweep_kernel
from .graph import Graph
from .sbm import MixingMatrix


class DegenerateEdgeError(ValueError):
    """A two-point table summed to zero (zero densities + hard messages)."""


@dataclass(frozen=True)
class Params:
    """Model parameters: group priors and scaled mixing matrix."""

    gamma1: float
    mixing: MixingMatrix

    def __post_init__(self):
        if not 0 < self.gamma1 < 1:
            raise ValueError("gamma1 must lie strictly in (0, 1)")

    @property
    def gamma2(self) -> float:
        return 1.0 - self.gamma1

    def swapped(self) -> "Params":
        c = self.mixing
        return Params(self.gamma2, MixingMatrix(c.c22, c.c12, c.c11))


@dataclass
class BpResult:
    eta: np.ndarray          # (2m,) group-1 message components
    marginals: np.ndarray    # (n, 2) one-point marginals
    converged: bool
    iterations: int
    final_delta: float
    deltas: list[float] = field(default_factory=list)


def external_field(params: Params, marginals: np.ndarray,
                   n: int | None = None) -> tuple[float, float]:
    """Per-group field h_r = exp(-sum_s c_rs * (sum_k q_s^k) / n)."""
    if n is None:
        n = len(marginals)
    s1 = float(marginals[:, 0].sum())
    s2 = float(marginals[:, 1].sum())
    c = params.mixing
    h1 = np.exp(-(c.c11 * s1 + c.c12 * s2) / n)
    h2 = np.exp(-(c.c12 * s1 + c.c22 * s2) / n)
    return h1, h2


def init_messages(graph: Graph, rng: np.random.Generator) -> np.ndarray:
    return rng.random(2 * graph.m)


def bp_sweep(graph: Graph, params: Params, eta: np.ndarray,
             marginals: np.ndarray, rng: np.random.Generator,
             damping: float = 0.0) -> float:
    """Update every message once (asynchronous, fresh random vertex order)
    and refresh marginals; returns the max absolute message change."""
    h1, h2 = external_field(params, marginals)
    c = params.mixing
    perm = rng.permutation(graph.n)
    q1 = np.ascontiguousarray(marginals[:, 0])
    delta = bp_sweep_kernel(
        graph.indptr, graph.indices, graph.reverse, eta, q1, perm,
        params.gamma1 * h1, params.gamma2 * h2,
        c.c11, c.c12, c.c22, damping)
    marginals[:, 0] = q1
    marginals[:, 1] = 1.0 - q1
    return float(delta)


def run_bp(graph: Graph, params: Params, *,
           seed: int | None = 0,
           init: np.ndarray | None = None,
           tol: float = 1e-8,
           max_iter: int = 200,
           damping: float = 0.0,
           collect_deltas: bool = False) -> BpResult:
    """Iterate sweeps until the max message change drops below tol.

    Deterministic given seed (which drives both the random initial messages
    and the per-sweep update order).  Non-convergence is reported through the
    `converged` flag, never raised.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    rng = np.random.default_rng(seed)
    eta = init.copy() if init is not None else init_messages(graph, rng)
    marginals = np.empty((graph.n, 2))
    marginals[:, 0] = params.gamma1
    marginals[:, 1] = params.gamma2

    deltas: list[float] = []
    delta = np.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        delta = bp_sweep(graph, params, eta, marginals, rng, damping)
        if collect_deltas:
            deltas.append(delta)
        if delta < tol:
            break
    return BpResult(eta=eta, marginals=marginals, converged=delta < tol,
                    iterations=iterations, final_delta=delta, deltas=deltas)


def two_point_marginals(graph: Graph, params: Params,
                        eta: np.ndarray) -> np.ndarray:
    """Per-edge 2x2 joint tables q_rs^{ij} ~ eta_r^{i->j} eta_s^{j->i} c_rs.

    Returns an (m, 2, 2) array, row t aligned with graph.edges[t]; axis 1 is
    the group of the first endpoint.
    """
    c = params.mixing
    a = eta[graph.edge_slots[:, 0]]   # eta_1^{i->j}
    b = eta[graph.edge_slots[:, 1]]   # eta_1^{j->i}
    tables = np.empty((graph.m, 2, 2))
    tables[:, 0, 0] = a * b * c.c11
    tables[:, 0, 1] = a * (1 - b) * c.c12
    tables[:, 1, 0] = (1 - a) * b * c.c12
    tables[:, 1, 1] = (1 - a) * (1 - b) * c.c22
    totals = tables.sum(axis=(1, 2))
    bad = np.flatnonzero(totals <= 0)
    if len(bad):
        raise DegenerateEdgeError(
            f"two-point table degenerate on {len(bad)} edge(s), "
            f"first at edge index {bad[0]}")
    tables /= totals[:, None, None]
    return tables


def odds_ratio(marginals: np.ndarray, i: int) -> float:
    """Core-to-periphery posterior odds q_1^i / q_2^i (inf when q_2^i = 0)."""
    q1, q2 = marginals[i]
    if q2 == 0.0:
        return np.inf
    return float(q1 / q2)
