from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidConfig

SEED_MASK = (1 << 64) - 1


class Algorithm(str, enum.Enum):
    Louvain = "louvain"
    Infomap = "infomap"
    BlockModel = "sbm"
    Slpa = "slpa"

    @classmethod
    def parse(cls, name: "str | Algorithm") -> "Algorithm":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "").replace("-", "").replace(" ", "")
        aliases = {"blockmodel": cls.BlockModel, "dcsbm": cls.BlockModel}
        for member in cls:
            if key in (member.value, member.name.lower()):
                return member
        if key in aliases:
            return aliases[key]
        raise InvalidConfig(f"unknown algorithm {name!r}; choose from louvain, infomap, sbm, slpa")

    @property
    def display(self) -> str:
        return {"louvain": "LOUVAIN", "infomap": "INFOMAP", "sbm": "BLOCK MODEL", "slpa": "SLPA"}[self.value]


@dataclass(frozen=True)
class DetectConfig:
    algorithm: Algorithm = Algorithm.Louvain
    seed: int = 0
    slpa_iterations: int = 100
    slpa_threshold: float = 0.5
    louvain_resolution: float = 1.0
    sbm_mcmc_sweeps: int = 100
    tol: float = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm.parse(self.algorithm))
        object.__setattr__(self, "seed", int(self.seed) & SEED_MASK)
        if not 0.0 < self.slpa_threshold <= 1.0:
            raise InvalidConfig("slpa_threshold must lie in (0, 1]")
        if self.slpa_iterations < 1:
            raise InvalidConfig("slpa_iterations must be >= 1")
        if self.sbm_mcmc_sweeps < 0:
            raise InvalidConfig("sbm_mcmc_sweeps must be >= 0")
        if self.louvain_resolution <= 0:
            raise InvalidConfig("louvain_resolution must be positive")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)
