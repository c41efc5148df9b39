"""Immutable weighted undirected graph over ZCTAs and its summary statistics.

Adjacency is CSR over dense node indices with self-loops held apart in
``loops``. Two strength conventions are exposed:

* ``strength``: row sum plus the self-loop weight once (conductance, map equation);
* ``modularity_degree``: row sum plus the self-loop weight twice (modularity).
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import _kernels
from .errors import EmptyGraph, MalformedRow, UnknownNode


def format_weight(w: float) -> str:
    """Integral weights print as integers, others with round-trip precision."""
    if float(w).is_integer() and abs(w) < 2**53:
        return str(int(w))
    return repr(float(w))


class Hpdn:
    """Hospital-patient discharge network.

    Nodes are sorted lexicographically so that construction is independent of
    input order.
    """

    __slots__ = ("nodes", "_index", "indptr", "indices", "weights", "loops")

    def __init__(self, nodes, indptr, indices, weights, loops):
        self.nodes = tuple(nodes)
        self._index = {z: i for i, z in enumerate(self.nodes)}
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.weights = np.ascontiguousarray(weights, dtype=np.float64)
        self.loops = np.ascontiguousarray(loops, dtype=np.float64)
        for arr in (self.indptr, self.indices, self.weights, self.loops):
            arr.setflags(write=False)

    # -- construction -------------------------------------------------
    @classmethod
    def from_edges(cls, edges: Iterable[tuple], nodes: Iterable[str] = ()) -> "Hpdn":
        """Build from ``(a, b, weight)`` triples; repeated pairs are summed.

        ``nodes`` may add isolated nodes. Zero-weight edges are dropped.
        """
        acc: dict[tuple[str, str], float] = {}
        labels = set(nodes)
        for a, b, w in edges:
            a, b = str(a), str(b)
            w = float(w)
            if w < 0 or not math.isfinite(w):
                raise ValueError(f"edge {a}-{b} has invalid weight {w}")
            labels.add(a)
            labels.add(b)
            if w == 0:
                continue
            key = (a, b) if a <= b else (b, a)
            acc[key] = acc.get(key, 0.0) + w
        return cls._from_pairs(sorted(labels), acc)

    @classmethod
    def from_flows(cls, flows) -> "Hpdn":
        """Symmetrize directed flows: W_ij = N(i->j) + N(j->i), W_ii = N(i->i)."""
        acc: dict[tuple[str, str], float] = {}
        labels = set()
        for (p, f), n in flows.entries.items():
            labels.add(p)
            labels.add(f)
            key = (p, f) if p <= f else (f, p)
            acc[key] = acc.get(key, 0) + n
        return cls._from_pairs(sorted(labels), {k: float(v) for k, v in acc.items()})

    @classmethod
    def _from_pairs(cls, labels: Sequence[str], acc: dict) -> "Hpdn":
        index = {z: i for i, z in enumerate(labels)}
        n = len(labels)
        loops = np.zeros(n)
        src, dst, wts = [], [], []
        for (a, b), w in acc.items():
            i, j = index[a], index[b]
            if i == j:
                loops[i] += w
            else:
                src += (i, j)
                dst += (j, i)
                wts += (w, w)
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        wts = np.asarray(wts, dtype=np.float64)
        order = np.lexsort((dst, src))
        src, dst, wts = src[order], dst[order], wts[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(labels, indptr, dst, wts, loops)

    # -- accessors ----------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.nodes)

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, label) -> bool:
        return label in self._index

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise UnknownNode(f"unknown node {label!r}") from None

    def _row(self, i: int) -> slice:
        return slice(self.indptr[i], self.indptr[i + 1])

    def degree(self, label: str) -> int:
        """Number of distinct neighbours other than the node itself."""
        i = self.index(label)
        return int(self.indptr[i + 1] - self.indptr[i])

    def strength(self, label: str) -> float:
        i = self.index(label)
        return float(self.weights[self._row(i)].sum() + self.loops[i])

    def neighbors(self, label: str) -> list[str]:
        i = self.index(label)
        return [self.nodes[j] for j in self.indices[self._row(i)]]

    def weight(self, a: str, b: str) -> float:
        i, j = self.index(a), self.index(b)
        if i == j:
            return float(self.loops[i])
        row = self.indices[self._row(i)]
        pos = np.searchsorted(row, j)
        if pos < len(row) and row[pos] == j:
            return float(self.weights[self.indptr[i] + pos])
        return 0.0

    def strengths(self) -> np.ndarray:
        """Node strengths with self-loops counted once."""
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        return np.bincount(rows, weights=self.weights, minlength=self.n) + self.loops

    def modularity_degrees(self) -> np.ndarray:
        """Node degrees for the modularity null model (self-loops counted twice)."""
        return self.strengths() + self.loops

    def out_weights(self) -> np.ndarray:
        """Row sums excluding self-loops."""
        return self.strengths() - self.loops

    @property
    def total_weight(self) -> float:
        """Sum of W_ij over unordered pairs plus self-loops."""
        return float(self.weights.sum() / 2.0 + self.loops.sum())

    @property
    def n_edges(self) -> int:
        return int(len(self.indices) // 2)

    def edges(self):
        """Yield ``(a, b, w)`` with a <= b, self-loops included, lexicographic order."""
        out = []
        for i, a in enumerate(self.nodes):
            if self.loops[i] > 0:
                out.append((a, a, float(self.loops[i])))
            for p in range(self.indptr[i], self.indptr[i + 1]):
                j = self.indices[p]
                if j > i:
                    out.append((a, self.nodes[j], float(self.weights[p])))
        out.sort()
        return out

    def is_integer_weighted(self) -> bool:
        return bool(np.all(self.weights == np.round(self.weights)) and np.all(self.loops == np.round(self.loops)))

    def isolated(self) -> np.ndarray:
        """Mask of nodes with no neighbour other than themselves."""
        return np.diff(self.indptr) == 0

    def components(self) -> np.ndarray:
        """Connected-component id per node (ids in order of lowest member)."""
        comp = np.full(self.n, -1, dtype=np.int64)
        ip, ix = self.indptr, self.indices
        cid = 0
        for s in range(self.n):
            if comp[s] >= 0:
                continue
            comp[s] = cid
            stack = [s]
            while stack:
                u = stack.pop()
                for v in ix[ip[u]:ip[u + 1]]:
                    if comp[v] < 0:
                        comp[v] = cid
                        stack.append(v)
            cid += 1
        return comp

    def __eq__(self, other) -> bool:
        if not isinstance(other, Hpdn):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.loops, other.loops)
        )

    def __repr__(self) -> str:
        return f"Hpdn(n={self.n}, m={self.n_edges}, w={format_weight(self.total_weight)})"

    # -- I/O ----------------------------------------------------------
    def write_edges(self, path) -> None:
        """TSV ``zcta_a<TAB>zcta_b<TAB>weight``, a <= b, sorted; no header."""
        buf = io.StringIO()
        for a, b, w in self.edges():
            buf.write(f"{a}\t{b}\t{format_weight(w)}\n")
        if isinstance(path, (str, Path)):
            Path(path).write_text(buf.getvalue(), encoding="utf-8")
        else:
            path.write(buf.getvalue())

    @classmethod
    def read_edges(cls, path) -> "Hpdn":
        text = Path(path).read_text(encoding="utf-8") if isinstance(path, (str, Path)) else path.read()
        edges = []
        for rowno, line in enumerate(text.splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise MalformedRow(rowno, f"expected 3 tab-separated fields, got {len(parts)}")
            try:
                w = float(parts[2])
            except ValueError:
                raise MalformedRow(rowno, f"bad weight {parts[2]!r}") from None
            edges.append((parts[0].strip(), parts[1].strip(), w))
        return cls.from_edges(edges)


@dataclass(frozen=True)
class NetworkStats:
    n: int
    m: int
    w: float
    rho: float
    l: Optional[float]
    c: float
    c_weighted: float
    components: int
    l_largest_component_only: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        if float(self.w).is_integer():
            d["w"] = int(self.w)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def average_shortest_path(g: Hpdn) -> tuple[Optional[float], int, bool]:
    """Mean hop distance over connected ordered pairs of the largest component.

    Returns ``(l, n_components, restricted)``; ``l`` is None when the largest
    component has a single node.
    """
    comp = g.components()
    n_comp = int(comp.max()) + 1 if g.n else 0
    sizes = np.bincount(comp)
    big = int(np.argmax(sizes))
    sources = np.flatnonzero(comp == big).astype(np.int64)
    total, pairs = _kernels.bfs_distance_sum(g.indptr, g.indices, sources)
    l = total / pairs if pairs else None
    return l, n_comp, n_comp > 1


def clustering(g: Hpdn, weighted: bool = False) -> float:
    """Average local clustering over nodes with at least two neighbours.

    The weighted variant is the geometric-mean form with weights scaled by the
    largest weight in the graph (self-loops included in that maximum).
    """
    deg = np.diff(g.indptr)
    mask = deg >= 2
    if not mask.any():
        return 0.0
    max_w = max(float(g.weights.max()) if len(g.weights) else 0.0, float(g.loops.max()))
    tri, wtri = _kernels.triangle_stats(g.indptr, g.indices, g.weights, max_w)
    d = deg[mask].astype(np.float64)
    vals = (wtri if weighted else tri)[mask] * 2.0 / (d * (d - 1.0))
    return float(vals.mean())


def stats(g: Hpdn) -> NetworkStats:
    if g.n == 0:
        raise EmptyGraph("graph has no nodes")
    n, m = g.n, g.n_edges
    rho = 2.0 * m / (n * (n - 1)) if n > 1 else 0.0
    l, n_comp, restricted = average_shortest_path(g)
    return NetworkStats(
        n=n,
        m=m,
        w=g.total_weight,
        rho=rho,
        l=l,
        c=clustering(g),
        c_weighted=clustering(g, weighted=True),
        components=n_comp,
        l_largest_component_only=restricted,
    )
