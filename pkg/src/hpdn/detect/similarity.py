from __future__ import annotations

import numpy as np

from ..errors import PartitionMismatch
from ..partition import Partition


def _comb2(x):
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1.0) / 2.0


def partition_similarity(p1: Partition, p2: Partition) -> float:
    """Adjusted Rand index between two partitions of the same node set."""
    if p1.nodes != p2.nodes:
        raise PartitionMismatch("partitions cover different node sets")
    n = len(p1.nodes)
    a, b = p1.membership, p2.membership
    table = np.zeros((p1.n_communities, p2.n_communities), dtype=np.int64)
    np.add.at(table, (a, b), 1)
    index = _comb2(table).sum()
    rows = _comb2(table.sum(axis=1)).sum()
    cols = _comb2(table.sum(axis=0)).sum()
    total = _comb2(n)
    if total == 0:
        return 1.0
    expected = rows * cols / total
    top = (rows + cols) / 2.0
    if top == expected:
        # both trivial (all-in-one or all-singletons on both sides)
        return 1.0
    return float((index - expected) / (top - expected))
