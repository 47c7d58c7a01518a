"""Two-group stochastic block model: mixing matrices and fast sampling.

Edge probabilities are carried in scaled form c_rs = n * p_rs throughout.
Sampling is O(m) expected time: within each of the three group-pair blocks
the present pairs are drawn by geometric skipping over the linearized pair
index space, so million-node benchmarks stay cheap.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .graph import Graph, from_edges

logger = logging.getLogger(__name__)

CORE_PERIPHERY = "core-periphery"
ASSORTATIVE = "assortative"
DISASSORTATIVE = "disassortative"
DEGENERATE = "degenerate"


@dataclass(frozen=True)
class MixingMatrix:
    """Symmetric scaled group-pair densities (c12 = c21 implicitly)."""

    c11: float
    c12: float
    c22: float

    def __post_init__(self):
        if min(self.c11, self.c12, self.c22) < 0:
            raise ValueError(f"negative mixing entry: {self}")

    def as_array(self) -> np.ndarray:
        return np.array([[self.c11, self.c12], [self.c12, self.c22]])

    def canonical(self) -> "MixingMatrix":
        """Order groups so group 1 has the larger within-group density."""
        if self.c22 > self.c11:
            return MixingMatrix(self.c22, self.c12, self.c11)
        return self

    def classify(self, rel_tol: float = 1e-3) -> str:
        """Name the mixing regime, with ties (within rel_tol) degenerate."""
        c11, c12, c22 = self.canonical().c11, self.c12, self.canonical().c22
        scale = max((c11 + c12 + c22) / 3.0, 1e-300)
        def gt(a, b):
            return a - b > rel_tol * scale
        if gt(c11, c12) and gt(c12, c22):
            return CORE_PERIPHERY
        if gt(c11, c12) and gt(c22, c12):
            return ASSORTATIVE
        if gt(c12, c11) and gt(c12, c22):
            return DISASSORTATIVE
        return DEGENERATE


@dataclass(frozen=True)
class ThetaParametrization:
    """Benchmark parametrization c = theta1*u1*u1^T + theta2*u2*u2^T with
    u1 = (sqrt(r), 1/sqrt(r)), u2 = (1/sqrt(r), -sqrt(r))."""

    theta1: float
    theta2: float
    r: float

    def __post_init__(self):
        if self.theta1 <= 0:
            raise ValueError("theta1 must be positive")
        if self.r <= 1:
            raise ValueError("r must exceed 1")
        lo, hi = self.theta2_bounds(self.theta1, self.r)
        if not lo < self.theta2 < hi:
            raise ValueError(
                f"theta2={self.theta2} outside admissible interval "
                f"({lo}, {hi}) for theta1={self.theta1}, r={self.r}")

    @staticmethod
    def theta2_bounds(theta1: float, r: float) -> tuple[float, float]:
        """Open interval of theta2 keeping all entries nonnegative and
        c11 > c12 > c22: the lower endpoint is whichever of c22 >= 0
        (theta2 >= -theta1/r^2) and c11 > c12 (theta2 > -theta1*r(r-1)/(r+1))
        binds first, the upper endpoint is c12 > c22."""
        lo = max(-theta1 / r ** 2, -theta1 * r * (r - 1) / (r + 1))
        hi = theta1 * (1 - 1 / r) / (r + 1)
        return lo, hi


def mixing_from_theta(p: ThetaParametrization) -> MixingMatrix:
    """Evaluate the rank-one-sum parametrization; theta2=0 gives the
    degree-sufficient family (theta*r, theta, theta/r)."""
    return MixingMatrix(
        c11=p.theta1 * p.r + p.theta2 / p.r,
        c12=p.theta1 - p.theta2,
        c22=p.theta1 / p.r + p.theta2 * p.r,
    )


def weak_structure_mixing(c: float, alpha1: float, alpha2: float,
                          delta: float) -> MixingMatrix:
    """The weak-structure family (c + a1*d, c, c - a2*d); delta=0 is a
    uniform random graph."""
    if c <= 0 or alpha1 <= 0 or alpha2 <= 0:
        raise ValueError("c, alpha1, alpha2 must be positive")
    if delta < 0 or c - alpha2 * delta < 0:
        raise ValueError(f"delta={delta} drives c22 negative (c={c}, alpha2={alpha2})")
    return MixingMatrix(c + alpha1 * delta, c, c - alpha2 * delta)


def group_mean_degrees(gamma1: float, c: MixingMatrix) -> tuple[float, float]:
    """Mean degrees of core and periphery vertices under (gamma, c)."""
    gamma2 = 1.0 - gamma1
    d1 = gamma1 * c.c11 + gamma2 * c.c12
    d2 = gamma1 * c.c12 + gamma2 * c.c22
    return d1, d2


@dataclass
class PlantedNetwork:
    graph: Graph
    truth: np.ndarray  # per-vertex group label, 1 = core, 2 = periphery
    gamma1: float
    mixing: MixingMatrix


def _skip_sample(rng: np.random.Generator, total: int, p: float) -> np.ndarray:
    """Indices of Bernoulli(p) successes among `total` slots, by geometric
    skipping: expected O(total * p) work."""
    if total <= 0 or p <= 0.0:
        return np.empty(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(total, dtype=np.int64)
    out = []
    pos = -1
    # draw gap batches sized to overshoot the expected remaining count
    while True:
        remaining = total - pos - 1
        batch = int(remaining * p + 4 * np.sqrt(remaining * p) + 16)
        gaps = rng.geometric(p, size=batch)
        positions = pos + np.cumsum(gaps)
        cut = np.searchsorted(positions, total)
        out.append(positions[:cut])
        if cut < len(positions):
            break
        pos = int(positions[-1])
    return np.concatenate(out)


def _pairs_within(members: np.ndarray, flat: np.ndarray) -> np.ndarray:
    """Map linear indices over the i<j pairs of `members` to endpoint pairs."""
    k = len(members)
    # row i covers indices [i*k - i(i+1)/2, ...), invert with the quadratic
    b = 2 * k - 1
    i = np.floor((b - np.sqrt(b * b - 8.0 * flat)) / 2.0).astype(np.int64)
    # guard float rounding at row boundaries
    row_start = i * k - i * (i + 1) // 2
    i = np.where(flat < row_start, i - 1, i)
    row_start = i * k - i * (i + 1) // 2
    over = flat >= row_start + (k - 1 - i)
    i = np.where(over, i + 1, i)
    row_start = i * k - i * (i + 1) // 2
    j = flat - row_start + i + 1
    return np.column_stack([members[i], members[j]])


def _pairs_between(a: np.ndarray, b: np.ndarray, flat: np.ndarray) -> np.ndarray:
    nb = len(b)
    return np.column_stack([a[flat // nb], b[flat % nb]])


def sample_sbm(n: int, gamma1: float, c: MixingMatrix,
               seed: int) -> PlantedNetwork:
    """Draw a planted two-group SBM network.

    Labels and the three group-pair edge blocks each consume an independent
    child stream of `seed`, so the edge sample is reproducible regardless of
    block sampling order.  Probabilities c_rs/n > 1 are clamped to 1 with a
    warning.
    """
    if n < 2:
        raise ValueError("need at least two vertices")
    if not 0 < gamma1 < 1:
        raise ValueError("gamma1 must lie strictly between 0 and 1")

    ss = np.random.SeedSequence(seed)
    label_seed, s11, s12, s22 = ss.spawn(4)
    truth = np.where(
        np.random.default_rng(label_seed).random(n) < gamma1, 1, 2
    ).astype(np.int64)

    group1 = np.flatnonzero(truth == 1)
    group2 = np.flatnonzero(truth == 2)

    def prob(c_rs: float) -> float:
        p = c_rs / n
        if p > 1.0:
            logger.warning("clamping p_rs = %g to 1", p)
            return 1.0
        return p

    blocks = []
    n1, n2 = len(group1), len(group2)
    flat = _skip_sample(np.random.default_rng(s11), n1 * (n1 - 1) // 2, prob(c.c11))
    if len(flat):
        blocks.append(_pairs_within(group1, flat))
    flat = _skip_sample(np.random.default_rng(s22), n2 * (n2 - 1) // 2, prob(c.c22))
    if len(flat):
        blocks.append(_pairs_within(group2, flat))
    flat = _skip_sample(np.random.default_rng(s12), n1 * n2, prob(c.c12))
    if len(flat):
        blocks.append(_pairs_between(group1, group2, flat))

    edges = np.concatenate(blocks) if blocks else np.empty((0, 2), dtype=np.int64)
    graph = from_edges(n, edges)
    return PlantedNetwork(graph=graph, truth=truth, gamma1=gamma1, mixing=c)
