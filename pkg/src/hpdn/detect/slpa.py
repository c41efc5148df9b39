"""Speaker-listener label propagation with non-overlapping post-processing."""
from __future__ import annotations

import numpy as np

from .. import _kernels
from ..graph import Hpdn
from ..partition import Partition
from .config import Algorithm, DetectConfig


def postprocess(memory: np.ndarray, threshold: float) -> np.ndarray:
    """Pick one label per node from its memory.

    Labels heard with frequency below ``threshold`` are dropped; the most
    frequent survivor wins, ties going to the lowest label. A node with no
    surviving label keeps its most frequent one.
    """
    out = np.empty(memory.shape[0], dtype=np.int64)
    length = memory.shape[1]
    for i, row in enumerate(memory):
        labels, counts = np.unique(row, return_counts=True)
        freq = counts / length
        keep = freq >= threshold
        if keep.any():
            labels, counts = labels[keep], counts[keep]
        out[i] = labels[np.argmax(counts)]
    return out


def slpa(g: Hpdn, config: DetectConfig | None = None, **overrides) -> Partition:
    from dataclasses import replace

    cfg = replace(config or DetectConfig(algorithm=Algorithm.Slpa), algorithm=Algorithm.Slpa, **overrides)
    memory = _kernels.slpa_propagate(g.indptr, g.indices, g.weights, cfg.slpa_iterations, cfg.seed)
    labels = postprocess(memory, cfg.slpa_threshold)
    return Partition(list(g.nodes), labels.tolist())
