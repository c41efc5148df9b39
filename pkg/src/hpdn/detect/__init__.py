"""Community detection: Louvain, Infomap, degree-corrected block model, SLPA."""
from __future__ import annotations

from ..graph import Hpdn
from ..partition import Partition
from .blockmodel import block_model, sbm_description_length, sbm_description_length_terms
from .config import Algorithm, DetectConfig
from .multilevel import infomap, louvain, run_search
from .objectives import map_equation, modularity
from .similarity import partition_similarity
from .slpa import slpa

_RUNNERS = {
    Algorithm.Louvain: louvain,
    Algorithm.Infomap: infomap,
    Algorithm.BlockModel: block_model,
    Algorithm.Slpa: slpa,
}


def detect(g: Hpdn, config: DetectConfig) -> Partition:
    return _RUNNERS[config.algorithm](g, config)


def objective(g: Hpdn, p: Partition, algorithm: Algorithm, resolution: float = 1.0) -> dict:
    """Objective value reported alongside a partition."""
    algorithm = Algorithm.parse(algorithm)
    if algorithm is Algorithm.Louvain:
        return {"name": "modularity", "value": modularity(g, p, resolution)}
    if algorithm is Algorithm.Infomap:
        return {"name": "map_equation_bits", "value": map_equation(g, p)}
    if algorithm is Algorithm.BlockModel:
        return {"name": "description_length_nats", "value": sbm_description_length(g, p)}
    return {"name": "modularity", "value": modularity(g, p, resolution)}


__all__ = [
    "Algorithm", "DetectConfig", "detect", "objective",
    "louvain", "infomap", "block_model", "slpa",
    "modularity", "map_equation", "sbm_description_length", "sbm_description_length_terms",
    "partition_similarity",
]
