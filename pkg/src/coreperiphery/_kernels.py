"""Numba kernels for the belief-propagation sweep and exact enumeration.

Messages are stored as the group-1 component eta1 per directed half-edge
(group 2 is the complement).  One sweep updates every half-edge once,
asynchronously, visiting vertices in the supplied permutation; marginals are
refreshed from the same neighbor terms without the target-exclusion.

Per-neighbor factors are normalized to sum to one, so products over
neighbors stay in [0, 1] and the pairwise ratio is preserved; vertices of
very high degree fall back to log-domain sums to dodge underflow.
"""

import numpy as np
from numba import njit

# floor applied before dividing/logging linear-domain factors
_FLOOR = 1e-300

# above this degree products switch to log-domain accumulation
_LOG_DEGREE = 64


@njit(cache=True, nogil=True, fastmath=True)
def bp_sweep_kernel(indptr, indices, reverse, eta, q, perm,
                    g1h1, g2h2, c11, c12, c22, damping):
    """One asynchronous sweep; returns the max absolute message change.

    g1h1 / g2h2 are the prior-times-external-field weights, linear domain.
    """
    delta = 0.0
    nbuf = 0
    for i in perm:
        deg = indptr[i + 1] - indptr[i]
        if deg > nbuf:
            nbuf = deg
    t1 = np.empty(nbuf, dtype=np.float64)
    t2 = np.empty(nbuf, dtype=np.float64)

    for idx in range(len(perm)):
        i = perm[idx]
        start = indptr[i]
        deg = indptr[i + 1] - indptr[i]

        if deg <= _LOG_DEGREE:
            # normalized linear-domain factors
            p1 = 1.0
            p2 = 1.0
            for a in range(deg):
                inc = eta[reverse[start + a]]
                f1 = inc * c11 + (1.0 - inc) * c12
                f2 = inc * c12 + (1.0 - inc) * c22
                s = f1 + f2
                if s < _FLOOR:
                    f1 = 0.5
                    f2 = 0.5
                    s = 1.0
                t1[a] = f1 / s
                t2[a] = f2 / s
                p1 *= t1[a]
                p2 *= t2[a]

            m1 = g1h1 * p1
            m2 = g2h2 * p2
            q[i] = m1 / (m1 + m2)

            for a in range(deg):
                s1 = 1.0
                s2 = 1.0
                for b in range(deg):
                    if b != a:
                        s1 *= t1[b]
                        s2 *= t2[b]
                m1 = g1h1 * s1
                m2 = g2h2 * s2
                new = m1 / (m1 + m2)
                if damping > 0.0:
                    new = (1.0 - damping) * new + damping * eta[start + a]
                change = abs(new - eta[start + a])
                if change > delta:
                    delta = change
                eta[start + a] = new
        else:
            # log-domain with subtraction for the target exclusion
            tot1 = 0.0
            tot2 = 0.0
            for a in range(deg):
                inc = eta[reverse[start + a]]
                f1 = inc * c11 + (1.0 - inc) * c12
                f2 = inc * c12 + (1.0 - inc) * c22
                if f1 < _FLOOR:
                    f1 = _FLOOR
                if f2 < _FLOOR:
                    f2 = _FLOOR
                t1[a] = np.log(f1)
                t2[a] = np.log(f2)
                tot1 += t1[a]
                tot2 += t2[a]

            lg1 = np.log(g1h1)
            lg2 = np.log(g2h2)
            q[i] = 1.0 / (1.0 + np.exp(lg2 + tot2 - lg1 - tot1))

            for a in range(deg):
                l1 = lg1 + tot1 - t1[a]
                l2 = lg2 + tot2 - t2[a]
                new = 1.0 / (1.0 + np.exp(l2 - l1))
                if damping > 0.0:
                    new = (1.0 - damping) * new + damping * eta[start + a]
                change = abs(new - eta[start + a])
                if change > delta:
                    delta = change
                eta[start + a] = new

    return delta


@njit(cache=True, nogil=True)
def enumerate_log_weights(n, edges, log_p, log_1mp, log_gamma):
    """Log-weight of every group assignment of an n-vertex graph.

    Assignment s encodes vertex i in group 1 when bit i of s is 0.  Non-edge
    factors enter through group-pair counts, so the cost per assignment is
    O(m + n) rather than O(n^2).
    """
    total = 1 << n
    m = edges.shape[0]
    out = np.empty(total, dtype=np.float64)
    for s in range(total):
        n2 = 0
        for i in range(n):
            n2 += (s >> i) & 1
        n1 = n - n2
        lw = n1 * log_gamma[0] + n2 * log_gamma[1]
        # all-pairs non-edge baseline from counts
        lw += (n1 * (n1 - 1) / 2.0) * log_1mp[0, 0]
        lw += (n2 * (n2 - 1) / 2.0) * log_1mp[1, 1]
        lw += (n1 * n2) * log_1mp[0, 1]
        # correct pairs that are actually edges
        for t in range(m):
            gi = (s >> edges[t, 0]) & 1
            gj = (s >> edges[t, 1]) & 1
            lw += log_p[gi, gj] - log_1mp[gi, gj]
        out[s] = lw
    return out
