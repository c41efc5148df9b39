"""Synthetic discharge flows with planted communities.

Every ZCTA is a patient residence; a ``hub_fraction`` of each community's
ZCTAs also host facilities. Each resident sends Poisson(mean_internal_flow)
discharges to every hub of its own community and Poisson(mean_external_flow)
to every hub of every other community. Flows are directed patient -> hub.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidConfig
from .ingest import DischargeType, FlowTable
from .partition import Partition

ZCTA_BASE = 90000


@dataclass(frozen=True)
class PlantedConfig:
    n_communities: int = 4
    community_sizes: Optional[Sequence[int]] = None
    mean_internal_flow: float = 50.0
    mean_external_flow: float = 1.0
    hub_fraction: float = 1.0
    seed: int = 0
    community_size: int = 16

    def sizes(self) -> list[int]:
        if self.community_sizes is not None:
            return [int(s) for s in self.community_sizes]
        return [self.community_size] * self.n_communities

    def validate(self) -> None:
        sizes = self.sizes()
        if self.n_communities < 1 or len(sizes) != self.n_communities:
            raise InvalidConfig("community_sizes must have n_communities entries")
        if any(s < 1 for s in sizes):
            raise InvalidConfig("community sizes must be >= 1")
        if not self.mean_internal_flow > 0:
            raise InvalidConfig("mean_internal_flow must be positive")
        if self.mean_external_flow < 0:
            raise InvalidConfig("mean_external_flow must be non-negative")
        if not 0.0 < self.hub_fraction <= 1.0:
            raise InvalidConfig("hub_fraction must lie in (0, 1]")
        if sum(sizes) > 99999 - ZCTA_BASE + 1:
            raise InvalidConfig("too many nodes for 5-digit synthetic ZCTAs")


def zcta_label(i: int) -> str:
    return f"{ZCTA_BASE + i:05d}"


def generate(config: PlantedConfig) -> tuple[FlowTable, Partition]:
    """Draw a flow table and its ground-truth partition.

    The ground truth covers the ZCTAs that appear in the flow table (a ZCTA
    whose every draw is zero would otherwise be absent from the network).
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    sizes = config.sizes()
    truth = np.repeat(np.arange(len(sizes)), sizes)
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    hubs = [
        np.arange(start, start + max(1, math.ceil(config.hub_fraction * size)))
        for start, size in zip(starts, sizes)
    ]
    all_hubs = np.concatenate(hubs)
    hub_comm = truth[all_hubs]
    entries: dict[tuple[str, str], int] = {}
    for i in range(len(truth)):
        means = np.where(hub_comm == truth[i], config.mean_internal_flow, config.mean_external_flow)
        counts = rng.poisson(means)
        for h, c in zip(all_hubs, counts):
            if c:
                entries[(zcta_label(i), zcta_label(int(h)))] = int(c)
    flows = FlowTable(None, None, entries)
    present = set(flows.zctas)
    nodes = [zcta_label(i) for i in range(len(truth)) if zcta_label(i) in present]
    labels = [int(truth[int(z) - ZCTA_BASE]) for z in nodes]
    return flows, Partition(nodes, labels)
