"""Partition objectives: weighted modularity and the two-level map equation."""
from __future__ import annotations

import numpy as np

from ..graph import Hpdn
from ..partition import Partition


def _edge_rows(g: Hpdn) -> np.ndarray:
    return np.repeat(np.arange(g.n, dtype=np.int64), np.diff(g.indptr))


def modularity(g: Hpdn, p: Partition, resolution: float = 1.0) -> float:
    """Newman modularity with self-loops entering A_ii as 2*W_ii.

    Q = (1/2w) sum_ij (A_ij - resolution * k_i k_j / 2w) delta(c_i, c_j)
    """
    memb = p.aligned(g.nodes)
    k = g.modularity_degrees()
    m2 = float(k.sum())
    if m2 == 0.0:
        return 0.0
    nc = p.n_communities
    rows = _edge_rows(g)
    same = memb[rows] == memb[g.indices]
    internal = np.bincount(memb[rows[same]], weights=g.weights[same], minlength=nc).astype(np.float64)
    internal += 2.0 * np.bincount(memb, weights=g.loops, minlength=nc)
    tot = np.bincount(memb, weights=k, minlength=nc)
    return float(np.sum(internal / m2 - resolution * (tot / m2) ** 2))


def _plogp(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log2(x[pos])
    return out


def module_flows(g: Hpdn, p: Partition) -> tuple[np.ndarray, np.ndarray, float]:
    """Per-module (exit weight, strength) and the total strength."""
    memb = p.aligned(g.nodes)
    nc = p.n_communities
    s = g.strengths()
    rows = _edge_rows(g)
    cut = memb[rows] != memb[g.indices]
    exit_w = np.bincount(memb[rows[cut]], weights=g.weights[cut], minlength=nc).astype(np.float64)
    flow = np.bincount(memb, weights=s, minlength=nc)
    return exit_w, flow, float(s.sum())


def map_equation(g: Hpdn, p: Partition) -> float:
    """Two-level map equation (bits) for an undirected weighted graph.

    Visit rates are p_i = s_i / sum(s) and module exit rates q_c are the module's
    boundary weight over sum(s):

        L = q H(Q) + sum_c p_c H(P_c)
          = plogp(q) - 2 sum_c plogp(q_c) - sum_i plogp(p_i) + sum_c plogp(q_c + p_c)
    """
    exit_w, flow, total = module_flows(g, p)
    if total == 0.0:
        return 0.0
    q_c = exit_w / total
    p_c = flow / total
    p_i = g.strengths() / total
    q = q_c.sum()
    return float(
        _plogp(np.array([q]))[0]
        - 2.0 * _plogp(q_c).sum()
        - _plogp(p_i).sum()
        + _plogp(q_c + p_c).sum()
    )


def node_entropy(g: Hpdn) -> float:
    """-sum_i plogp(p_i): the partition-independent part of the map equation."""
    s = g.strengths()
    total = s.sum()
    if total == 0:
        return 0.0
    return float(-_plogp(s / total).sum())
