"""Degree-corrected stochastic block model (flat, microcanonical).

Integer edge weights are read as edge multiplicities of an undirected
multigraph. For a partition ``b`` into ``B`` non-empty blocks the description
length (nats) is ``S = S_lik + L_e + L_b + L_k`` with

    S_lik = sum_{i<j} ln A_ij! + sum_i ln A_ii!! - sum_i ln k_i!
            + sum_r ln e_r! - sum_{r<s} ln m_rs! - sum_r ln e_rr!!
    L_e   = ln multiset(B(B+1)/2, E)                 (block edge counts)
    L_b   = ln N + ln C(N-1, B-1) + ln N! - sum_r ln n_r!   (partition)
    L_k   = sum_r ln multiset(n_r, e_r)              (degrees, uniform per block)

where A_ii = 2 * (self-loop multiplicity), k_i counts self-loops twice,
m_rs is the number of edges between blocks r != s, e_rr = 2 m_rr with m_rr the
edges inside r, e_r = sum_{i in r} k_i, E the total number of edges, n_r the
block sizes and multiset(n, k) = C(n + k - 1, k). Lower is better.

Inference: agglomerative merging from singletons (blocks propose partners
reached by short walks on the block graph; the best non-conflicting merges
are applied, shrinking B by ~1/1.3 per round), keeping the lowest-S partition
seen (each level is relaxed by a few sweeps), followed by Metropolis
single-node sweeps at unit temperature and a final pass of exact pairwise
block merges while they lower ``S``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .. import _kernels
from ..errors import NonIntegerWeights
from ..graph import Hpdn
from ..partition import Partition, canonical_labels
from .config import Algorithm, DetectConfig

LN2 = math.log(2.0)
TABLE_CAP = 1 << 20
MERGE_SHRINK = 1.3
MERGE_SAMPLES = 12
LEVEL_SWEEPS = 10
MERGE_REFINE_MAX = 64


def log_factorial(x) -> float:
    return math.lgamma(float(x) + 1.0)


def _lf(arr) -> float:
    return float(sum(math.lgamma(float(v) + 1.0) for v in np.asarray(arr).ravel()))


def log_binom(a, b) -> float:
    if b <= 0 or b >= a:
        return 0.0
    return log_factorial(a) - log_factorial(b) - log_factorial(a - b)


def log_multiset(n, k) -> float:
    return log_binom(n + k - 1, k)


@dataclass(frozen=True)
class DescriptionLength:
    likelihood: float
    edges: float
    partition: float
    degrees: float

    @property
    def model(self) -> float:
        return self.edges + self.partition + self.degrees

    @property
    def total(self) -> float:
        return self.likelihood + self.model


class _IntGraph:
    """Integer view of an Hpdn restricted to ``keep`` nodes."""

    def __init__(self, g: Hpdn, keep: np.ndarray | None = None):
        if not g.is_integer_weighted():
            raise NonIntegerWeights("block model needs integer edge weights (multiplicities)")
        if keep is None:
            keep = np.arange(g.n)
        remap = np.full(g.n, -1, dtype=np.int64)
        remap[keep] = np.arange(len(keep))
        rows = np.repeat(np.arange(g.n), np.diff(g.indptr))
        sel = (remap[rows] >= 0) & (remap[g.indices] >= 0)
        src, dst = remap[rows[sel]], remap[g.indices[sel]]
        n = len(keep)
        self.n = n
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=self.indptr[1:])
        self.indices = dst.astype(np.int64)
        self.weights = np.rint(g.weights[sel]).astype(np.int64)
        self.loops = np.rint(g.loops[keep]).astype(np.int64)
        out = np.bincount(src, weights=self.weights, minlength=n).astype(np.int64) if n else np.zeros(0, np.int64)
        self.k = out + 2 * self.loops
        self.E = int(self.weights.sum() // 2 + self.loops.sum())
        self._rows = src

    def node_constant(self) -> float:
        upper = self.weights[self._rows < self.indices]
        return _lf(upper) + float(np.sum(self.loops) * LN2) + _lf(self.loops) - _lf(self.k)

    def blocks(self, b: np.ndarray, nb: int):
        """Block aggregates: off-diagonal CSR (bptr, bidx, bw), diag m_rr, e_r, n_r."""
        cs, cd = b[self._rows], b[self.indices]
        same = cs == cd
        diag = np.bincount(cs[same], weights=self.weights[same], minlength=nb).astype(np.int64) // 2
        diag += np.bincount(b, weights=self.loops, minlength=nb).astype(np.int64)
        key = cs[~same] * nb + cd[~same]
        uniq, inv = np.unique(key, return_inverse=True)
        bw = np.bincount(inv, weights=self.weights[~same], minlength=len(uniq)).astype(np.int64)
        src, dst = uniq // nb, uniq % nb
        bptr = np.zeros(nb + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=nb), out=bptr[1:])
        e = np.bincount(b, weights=self.k, minlength=nb).astype(np.int64)
        nsize = np.bincount(b, minlength=nb).astype(np.int64)
        return bptr, dst.astype(np.int64), bw, diag, e, nsize, src

    def description_length(self, b: np.ndarray, nb: int, n_total: int | None = None,
                           extra_blocks: int = 0) -> DescriptionLength:
        bptr, bidx, bw, diag, e, nsize, src = self.blocks(b, nb)
        upper = bw[src < bidx]
        lik = (
            self.node_constant()
            + _lf(e)
            - _lf(upper)
            - float(np.sum(diag) * LN2) - _lf(diag)
        )
        N = self.n + extra_blocks if n_total is None else n_total
        B = nb + extra_blocks
        edges = log_multiset(B * (B + 1) // 2, self.E)
        part = math.log(N) + log_binom(N - 1, B - 1) + log_factorial(N) - _lf(nsize)
        degrees = float(sum(log_multiset(int(nr), int(er)) for nr, er in zip(nsize, e)))
        return DescriptionLength(lik, edges, part, degrees)


def sbm_description_length_terms(g: Hpdn, p: Partition) -> DescriptionLength:
    memb = p.aligned(g.nodes)
    ig = _IntGraph(g)
    return ig.description_length(memb, p.n_communities)


def sbm_description_length(g: Hpdn, p: Partition) -> float:
    """Description length (nats) of ``g`` under the DC-SBM with partition ``p``."""
    return sbm_description_length_terms(g, p).total


def _logfact_table(size: int) -> np.ndarray:
    size = max(2, min(size, TABLE_CAP))
    return np.array([math.lgamma(x + 1.0) for x in range(size)], dtype=np.float64)


def _round_constant(N: int, B: int, E: int) -> float:
    """B-dependent terms changed by one merge (B -> B - 1)."""
    return (
        log_binom(N - 1, B - 2) - log_binom(N - 1, B - 1)
        + log_multiset((B - 1) * B // 2, E) - log_multiset(B * (B + 1) // 2, E)
    )


def _merge_round(ig: _IntGraph, b: np.ndarray, nb: int, table, seed: int) -> tuple[np.ndarray, int]:
    bptr, bidx, bw, diag, e, nsize, _ = ig.blocks(b, nb)
    bcum = np.cumsum(bw.astype(np.float64))
    partner, delta = _kernels.sbm_merge_proposals(
        bptr, bidx, bw, bcum, diag, e, nsize, table, MERGE_SAMPLES, seed,
    )
    target = max(1, int(nb / MERGE_SHRINK))
    n_merge = max(1, nb - target)
    cand = [(float(delta[r]), r, int(partner[r])) for r in range(nb) if partner[r] >= 0]
    cand.sort()
    parent = np.arange(nb)
    used = np.zeros(nb, dtype=bool)
    done = 0
    for _, r, s in cand:
        if done >= n_merge:
            break
        if used[r] or used[s]:
            continue
        used[r] = used[s] = True
        parent[r] = s
        done += 1
    if done == 0:
        return b, nb
    new_b = parent[b]
    new_b = canonical_labels(new_b.tolist())
    return new_b, int(new_b.max()) + 1


def _agglomerate(ig: _IntGraph, rng: np.random.Generator, table, level_sweeps: int) -> np.ndarray:
    b = np.arange(ig.n, dtype=np.int64)
    nb = ig.n
    best_b, best_s = b, ig.description_length(b, nb).total
    while nb > 1:
        new_b, new_nb = _merge_round(ig, b, nb, table, int(rng.integers(0, 2**63)))
        if new_nb == nb:
            break
        # relax each level before judging it; greedy merges alone get stuck
        b = _sweep(ig, new_b, level_sweeps, table, int(rng.integers(0, 2**63)))
        nb = new_nb
        s = ig.description_length(b, nb).total
        if s < best_s:
            best_b, best_s = b, s
    return best_b


def _dense_blocks(ig: _IntGraph, b: np.ndarray, nb: int):
    bptr, bidx, bw, diag, e, nsize, src = ig.blocks(b, nb)
    m = np.zeros((nb, nb), dtype=np.int64)
    m[src, bidx] = bw
    m[np.arange(nb), np.arange(nb)] = diag
    return m, e, nsize


def _block_level_dl(ig: _IntGraph, m: np.ndarray, e: np.ndarray, nsize: np.ndarray) -> float:
    """Description length minus the node constant, from dense block aggregates."""
    nb = len(e)
    iu = np.triu_indices(nb, 1)
    diag = np.diag(m)
    lik = _lf(e) - _lf(m[iu]) - float(np.sum(diag) * LN2) - _lf(diag)
    N = ig.n
    model = (
        log_multiset(nb * (nb + 1) // 2, ig.E)
        + math.log(N) + log_binom(N - 1, nb - 1) + log_factorial(N) - _lf(nsize)
        + float(sum(log_multiset(int(nr), int(er)) for nr, er in zip(nsize, e)))
    )
    return lik + model


def _merged(m, e, nsize, r, s):
    keep = [t for t in range(len(e)) if t != s]
    m2 = m.copy()
    m2[r, :] += m2[s, :]
    m2[:, r] += m2[:, s]
    # m[r, s] was counted twice into the new diagonal entry
    m2[r, r] = m[r, r] + m[s, s] + m[r, s]
    e2 = e.copy()
    e2[r] += e2[s]
    n2 = nsize.copy()
    n2[r] += n2[s]
    return m2[np.ix_(keep, keep)], e2[keep], n2[keep]


def _merge_refine(ig: _IntGraph, b: np.ndarray, sweeps: int, rng: np.random.Generator, table) -> np.ndarray:
    """Apply the best exact pairwise block merge while it lowers the description length."""
    while True:
        nb = int(b.max()) + 1
        if nb < 2 or nb > MERGE_REFINE_MAX:
            return b
        m, e, nsize = _dense_blocks(ig, b, nb)
        current = _block_level_dl(ig, m, e, nsize)
        best = (current, -1, -1)
        for r in range(nb):
            for s in range(r + 1, nb):
                cand = _block_level_dl(ig, *_merged(m, e, nsize, r, s))
                if cand < best[0] - 1e-12:
                    best = (cand, r, s)
        if best[1] < 0:
            return b
        _, r, s = best
        b = canonical_labels(np.where(b == s, r, b).tolist())
        b = _sweep(ig, b, sweeps, table, int(rng.integers(0, 2**63)))


def _sweep(ig: _IntGraph, b: np.ndarray, sweeps: int, table, seed: int) -> np.ndarray:
    nb = int(b.max()) + 1
    if sweeps == 0 or nb < 2:
        return b
    m, e, nsize = _dense_blocks(ig, b, nb)
    work = b.copy()
    best_b, f_best = _kernels.sbm_sweeps(
        ig.indptr, ig.indices, ig.weights, ig.loops, ig.k, work, m, e, nsize, table, sweeps, seed,
    )
    return np.asarray(best_b, dtype=np.int64) if f_best < 0 else b


def block_model(g: Hpdn, config: DetectConfig | None = None, **overrides) -> Partition:
    cfg = replace(config or DetectConfig(algorithm=Algorithm.BlockModel), algorithm=Algorithm.BlockModel,
                  **overrides)
    if not g.is_integer_weighted():
        raise NonIntegerWeights("block model needs integer edge weights (multiplicities)")
    rng = cfg.rng()
    active = np.flatnonzero(~g.isolated())
    labels = np.arange(g.n, dtype=np.int64) + g.n  # isolated nodes stay singletons
    if len(active) > 0:
        ig = _IntGraph(g, active)
        table = _logfact_table(ig.n + 2 * ig.E + 2)
        b = _agglomerate(ig, rng, table, min(LEVEL_SWEEPS, cfg.sbm_mcmc_sweeps))
        b = _sweep(ig, b, cfg.sbm_mcmc_sweeps, table, int(rng.integers(0, 2**63)))
        b = _merge_refine(ig, b, min(LEVEL_SWEEPS, cfg.sbm_mcmc_sweeps), rng, table)
        labels[active] = b
    return Partition(list(g.nodes), labels.tolist())
