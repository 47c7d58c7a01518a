"""Exact posterior over group assignments by 2^n enumeration (n <= 20).

The oracle keeps the exact Bernoulli model with p_rs = c_rs / n -- no sparse
expansion -- so it serves as independent ground truth for BP, the M-step,
and the Bethe objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import enumerate_log_weights
from .bp import Params
from .em import DegenerateGroupError
from .graph import Graph
from .sbm import MixingMatrix

MAX_VERTICES = 20


@dataclass
class ExactPosterior:
    one_point: np.ndarray    # (n, 2)
    two_point: np.ndarray    # (n, n, 2, 2), defined for ALL ordered pairs i != j
    log_evidence: float


def _model_terms(graph: Graph, params: Params):
    n = graph.n
    if n > MAX_VERTICES:
        raise ValueError(f"exact enumeration capped at n={MAX_VERTICES}")
    p = params.mixing.as_array() / n
    if p.max() >= 1.0:
        raise ValueError("p_rs = c_rs/n must be below 1 for the exact model")
    log_p = np.log(np.clip(p, 1e-300, None))
    log_1mp = np.log1p(-p)
    log_gamma = np.log([params.gamma1, params.gamma2])
    return log_p, log_1mp, log_gamma


def exact_posterior(graph: Graph, params: Params) -> ExactPosterior:
    """Enumerate all 2^n assignments and reduce to one- and two-point
    marginals plus the exact log-evidence."""
    n = graph.n
    log_p, log_1mp, log_gamma = _model_terms(graph, params)
    log_w = enumerate_log_weights(
        n, np.ascontiguousarray(graph.edges), log_p, log_1mp, log_gamma)

    peak = log_w.max()
    w = np.exp(log_w - peak)
    total = w.sum()
    log_evidence = float(peak + np.log(total))
    w /= total

    # accumulate q2[i] = P(g_i = 2) and E2[i, j] = P(g_i = 2, g_j = 2) in
    # state chunks; every two-point entry follows from these by inclusion-
    # exclusion with the one-point marginals.
    q2 = np.zeros(n)
    e2 = np.zeros((n, n))
    chunk = 1 << 16
    arange_n = np.arange(n)
    for lo in range(0, 1 << n, chunk):
        hi = min(lo + chunk, 1 << n)
        states = np.arange(lo, hi, dtype=np.int64)
        bits = ((states[:, None] >> arange_n) & 1).astype(np.float64)
        wc = w[lo:hi]
        q2 += wc @ bits
        e2 += (bits * wc[:, None]).T @ bits

    one_point = np.column_stack([1.0 - q2, q2])
    two_point = np.empty((n, n, 2, 2))
    two_point[:, :, 1, 1] = e2
    two_point[:, :, 1, 0] = q2[:, None] - e2
    two_point[:, :, 0, 1] = q2[None, :] - e2
    two_point[:, :, 0, 0] = 1.0 - q2[:, None] - q2[None, :] + e2
    # the diagonal of e2 holds P(g_i = 2), so i == j entries reduce to the
    # one-point marginals on the diagonal of the 2x2 table, as they should
    return ExactPosterior(one_point=one_point, two_point=two_point,
                          log_evidence=log_evidence)


def exact_log_likelihood(graph: Graph, params: Params) -> float:
    """Exact log P(A | p, gamma): the log of the evidence sum."""
    n = graph.n
    log_p, log_1mp, log_gamma = _model_terms(graph, params)
    log_w = enumerate_log_weights(
        n, np.ascontiguousarray(graph.edges), log_p, log_1mp, log_gamma)
    peak = log_w.max()
    return float(peak + np.log(np.exp(log_w - peak).sum()))


def exact_em_step(graph: Graph, params: Params) -> Params:
    """One exact E+M cycle using the unsimplified M-step
    p_rs = sum_ij A_ij q_rs^ij / sum_ij q_rs^ij (ordered pairs, i != j)."""
    n = graph.n
    post = exact_posterior(graph, params)
    mass = post.one_point.sum(axis=0)
    if mass.min() < 1e-9 * n:
        raise DegenerateGroupError(f"group mass collapsed: {mass.tolist()}")
    gamma1 = float(mass[0] / n)

    num = np.zeros((2, 2))
    for i, j in graph.edges:
        num += post.two_point[i, j] + post.two_point[j, i]
    denom = post.two_point.sum(axis=(0, 1))
    denom -= sum(np.diag([post.one_point[i, 0], post.one_point[i, 1]])
                 for i in range(n))  # drop the i == j diagonal entries
    p = num / denom
    return Params(gamma1, MixingMatrix(c11=float(n * p[0, 0]),
                                       c12=float(n * p[0, 1]),
                                       c22=float(n * p[1, 1])))
