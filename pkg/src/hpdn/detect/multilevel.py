"""Louvain and Infomap: greedy local moves alternated with aggregation.

Both searches share the same driver. A level runs node moves on the current
(super-)graph, collapses modules into super-nodes and repeats while anything
moves. The converged partition is then fine-tuned by re-running node moves on
the original graph from that partition; if that improves the objective the
multilevel search resumes from the fine-tuned partition.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import _kernels
from ..graph import Hpdn
from ..partition import Partition, canonical_labels
from .config import Algorithm, DetectConfig
from .objectives import node_entropy

MAX_ROUNDS = 50


@dataclass
class SearchTrace:
    """Objective after every level, in the search's own direction."""

    objective: float = 0.0
    history: list = field(default_factory=list)
    levels: int = 0


def _relabel(comm: np.ndarray) -> tuple[np.ndarray, int]:
    _, inv = np.unique(comm, return_inverse=True)
    return inv.astype(np.int64), int(inv.max()) + 1 if len(inv) else 0


def aggregate(indptr, indices, weights, loops, comm, nc):
    """Collapse nodes by ``comm``; returns CSR without self-loops plus loop weights.

    Loop weight of a super-node = its internal edge weight (each edge once) plus
    member self-loops.
    """
    n = len(indptr) - 1
    rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
    cs, cd = comm[rows], comm[indices]
    same = cs == cd
    new_loops = np.bincount(cs[same], weights=weights[same], minlength=nc).astype(np.float64) / 2.0
    new_loops += np.bincount(comm, weights=loops, minlength=nc)
    key = cs[~same] * nc + cd[~same]
    uniq, inv = np.unique(key, return_inverse=True)
    new_w = np.bincount(inv, weights=weights[~same], minlength=len(uniq))
    src, dst = uniq // nc, uniq % nc
    new_ptr = np.zeros(nc + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=nc), out=new_ptr[1:])
    return new_ptr, dst.astype(np.int64), new_w.astype(np.float64), new_loops


class _Level:
    __slots__ = ("indptr", "indices", "weights", "loops", "k", "flow")

    def __init__(self, indptr, indices, weights, loops, k, flow):
        self.indptr, self.indices, self.weights = indptr, indices, weights
        self.loops, self.k, self.flow = loops, k, flow

    @property
    def n(self):
        return len(self.indptr) - 1


def _base_level(g: Hpdn) -> _Level:
    s = g.strengths()
    return _Level(
        np.array(g.indptr), np.array(g.indices), np.array(g.weights), np.array(g.loops),
        s + g.loops, s,
    )


def _collapse(level: _Level, comm: np.ndarray, nc: int) -> _Level:
    ptr, idx, w, loops = aggregate(level.indptr, level.indices, level.weights, level.loops, comm, nc)
    k = np.bincount(comm, weights=level.k, minlength=nc)
    flow = np.bincount(comm, weights=level.flow, minlength=nc)
    return _Level(ptr, idx, w, loops, k, flow)


def _local_moves(algo: Algorithm, level: _Level, comm, order, cfg: DetectConfig, total_flow):
    if algo is Algorithm.Louvain:
        return _kernels.louvain_local_moves(
            level.indptr, level.indices, level.weights, level.loops, level.k,
            comm, order, cfg.louvain_resolution, cfg.tol,
        )
    return _kernels.infomap_local_moves(
        level.indptr, level.indices, level.weights, level.flow, comm, order, total_flow, cfg.tol,
    )


def _improved(algo, new, old, tol) -> bool:
    gain = new - old if algo is Algorithm.Louvain else old - new
    return gain > tol * abs(old) and gain > 1e-15


def _multilevel(g: Hpdn, cfg: DetectConfig, algo: Algorithm, start: np.ndarray, rng, trace: SearchTrace):
    """One multilevel pass from ``start`` (membership over original nodes)."""
    base = _base_level(g)
    total_flow = float(base.flow.sum())
    membership, nc = _relabel(start)
    level = _collapse(base, membership, nc) if nc < g.n else base
    objective = None
    while True:
        comm = np.arange(level.n, dtype=np.int64)
        order = rng.permutation(level.n).astype(np.int64)
        moves, obj = _local_moves(algo, level, comm, order, cfg, total_flow)
        trace.levels += 1
        if objective is None or moves:
            objective = obj
            trace.history.append(obj)
        if moves == 0:
            break
        comm, nc = _relabel(comm)
        membership = comm[membership]
        if nc == level.n:
            break
        level = _collapse(level, comm, nc)
    return membership, objective


def _fine_tune(g: Hpdn, cfg: DetectConfig, algo: Algorithm, membership: np.ndarray, rng):
    base = _base_level(g)
    comm = membership.astype(np.int64).copy()
    order = rng.permutation(base.n).astype(np.int64)
    moves, obj = _local_moves(algo, base, comm, order, cfg, float(base.flow.sum()))
    return comm, moves, obj


def run_search(g: Hpdn, cfg: DetectConfig, algo: Algorithm) -> tuple[Partition, SearchTrace]:
    rng = cfg.rng()
    trace = SearchTrace()
    if g.n == 0:
        return Partition([], []), trace
    membership, objective = _multilevel(g, cfg, algo, np.arange(g.n), rng, trace)
    for _ in range(MAX_ROUNDS):
        tuned, moves, obj = _fine_tune(g, cfg, algo, membership, rng)
        if moves == 0 or not _improved(algo, obj, objective, cfg.tol):
            break
        trace.history.append(obj)
        # node moves only ever improve the objective, so this cannot regress
        membership, objective = _multilevel(g, cfg, algo, tuned, rng, trace)
    if algo is Algorithm.Infomap:
        objective = objective + node_entropy(g)
        trace.history = [h + node_entropy(g) for h in trace.history]
    trace.objective = objective
    return Partition(list(g.nodes), canonical_labels(membership).tolist()), trace


def louvain(g: Hpdn, config: DetectConfig | None = None, **overrides) -> Partition:
    """Modularity maximisation (Blondel et al. local moving + aggregation)."""
    cfg = _config(config, Algorithm.Louvain, overrides)
    return run_search(g, cfg, Algorithm.Louvain)[0]


def infomap(g: Hpdn, config: DetectConfig | None = None, **overrides) -> Partition:
    """Two-level map-equation minimisation with the same multilevel search."""
    cfg = _config(config, Algorithm.Infomap, overrides)
    return run_search(g, cfg, Algorithm.Infomap)[0]


def _config(config, algo, overrides) -> DetectConfig:
    from dataclasses import replace

    cfg = config or DetectConfig(algorithm=algo)
    return replace(cfg, algorithm=algo, **overrides)
