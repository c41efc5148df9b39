"""Quality metrics for a delineation.

The localization index is computed from the *directed* flow table (patient
ZCTA -> facility ZCTA); conductance uses the undirected network. Mixing the two
up gives plausible-looking but wrong numbers, e.g. a community that only sends
patients out would look half-localized on the symmetrized graph.

Communities whose metric has a zero denominator are flagged (``None``) and
left out of the bootstrap inputs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import EmptyValues, NoResidentDischarges, PartitionMismatch, ZeroStrength
from .graph import Hpdn
from .ingest import FlowTable
from .partition import Partition

DEFAULT_B = 1000
SeedLike = Union[int, np.random.SeedSequence]


def _flow_communities(flows: FlowTable, p: Partition):
    """Community of each flow row's patient and facility ZCTA, plus counts."""
    items = flows.sorted_items()
    missing = sorted({z for (a, b), _ in items for z in (a, b) if z not in p})
    if missing:
        raise PartitionMismatch(f"ZCTAs in flows but not in partition: {', '.join(missing[:10])}")
    src = np.fromiter((p[a] for (a, _), _ in items), dtype=np.int64, count=len(items))
    dst = np.fromiter((p[b] for (_, b), _ in items), dtype=np.int64, count=len(items))
    cnt = np.fromiter((n for _, n in items), dtype=np.int64, count=len(items))
    return src, dst, cnt


def _resident_totals(flows: FlowTable, p: Partition) -> tuple[np.ndarray, np.ndarray]:
    """Per-community (N_D(c,c), N_D(c)) as exact integers."""
    src, dst, cnt = _flow_communities(flows, p)
    nc = p.n_communities
    total = np.zeros(nc, dtype=np.int64)
    inside = np.zeros(nc, dtype=np.int64)
    np.add.at(total, src, cnt)
    np.add.at(inside, src[src == dst], cnt[src == dst])
    return inside, total


def _check_community(p: Partition, c: int) -> int:
    c = int(c)
    if not 0 <= c < p.n_communities:
        raise KeyError(f"no community {c} (partition has {p.n_communities})")
    return c


def localization_index(flows: FlowTable, p: Partition, c: int) -> float:
    """Share of discharges of residents of ``c`` that stay inside ``c``.

    Raises NoResidentDischarges when nobody living in ``c`` has a discharge.
    """
    c = _check_community(p, c)
    inside, total = _resident_totals(flows, p)
    if total[c] == 0:
        raise NoResidentDischarges(f"community {c} has no resident discharges")
    return float(inside[c]) / float(total[c])


def community_discharges(flows: FlowTable, p: Partition, c: int) -> int:
    c = _check_community(p, c)
    return int(_resident_totals(flows, p)[1][c])


def _strength_totals(g: Hpdn, p: Partition) -> tuple[np.ndarray, np.ndarray]:
    """Per-community (external weight, total strength)."""
    memb = p.aligned(g.nodes)
    nc = p.n_communities
    rows = np.repeat(np.arange(g.n, dtype=np.int64), np.diff(g.indptr))
    cut = memb[rows] != memb[g.indices]
    ext = np.bincount(memb[rows[cut]], weights=g.weights[cut], minlength=nc).astype(np.float64)
    vol = np.bincount(memb, weights=g.strengths(), minlength=nc).astype(np.float64)
    return ext, vol


def conductance(g: Hpdn, p: Partition, c: int) -> float:
    """External over total incident strength of ``c``.

    Internal edges count from both endpoints and self-loops once, i.e. the
    denominator is the sum of member strengths. Raises ZeroStrength for a
    community without incident weight.
    """
    c = _check_community(p, c)
    ext, vol = _strength_totals(g, p)
    if vol[c] == 0.0:
        raise ZeroStrength(f"community {c} has zero strength")
    return float(ext[c]) / float(vol[c])


def bootstrap_summary(values: Sequence[float], B: int = DEFAULT_B, seed: SeedLike = 0) -> tuple[float, float]:
    """Mean and standard deviation of ``B`` resample means.

    Resamples have the size of ``values`` and are drawn with replacement from
    ``numpy.random.default_rng(seed)``; the std uses ``ddof=1`` over the B
    replicate means (a singleton replicate set gives 0).
    """
    x = np.asarray(values, dtype=np.float64)
    if x.size == 0:
        raise EmptyValues("bootstrap needs at least one value")
    if B < 1:
        raise ValueError("B must be >= 1")
    if isinstance(seed, (int, np.integer)):
        seed = int(seed) & ((1 << 64) - 1)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, x.size, size=(B, x.size))
    means = x[idx].mean(axis=1)
    std = float(means.std(ddof=1)) if B > 1 else 0.0
    return float(means.mean()), std


@dataclass(frozen=True)
class CommunityMetrics:
    community_id: int
    li: Optional[float]
    conductance: Optional[float]
    discharges: int
    size: int
    name: Optional[str] = None

    def to_dict(self) -> dict:
        out = {
            "community_id": self.community_id,
            "size": self.size,
            "li": self.li,
            "conductance": self.conductance,
            "discharges": self.discharges,
        }
        if self.name is not None:
            out["name"] = self.name
        return out


@dataclass
class DelineationReport:
    per_community: list
    li_mean: Optional[float]
    li_std: Optional[float]
    conductance_mean: Optional[float]
    conductance_std: Optional[float]
    discharges_mean: float
    discharges_std: float
    undefined_li_count: int
    undefined_conductance_count: int
    seed: int
    B: int
    meta: dict = field(default_factory=dict)

    @property
    def n_communities(self) -> int:
        return len(self.per_community)

    def to_dict(self) -> dict:
        out = {"n_communities": self.n_communities}
        out.update(self.meta)
        out.update(
            li_mean=self.li_mean,
            li_std=self.li_std,
            conductance_mean=self.conductance_mean,
            conductance_std=self.conductance_std,
            discharges_mean=self.discharges_mean,
            discharges_std=self.discharges_std,
            undefined_li_count=self.undefined_li_count,
            undefined_conductance_count=self.undefined_conductance_count,
            seed=self.seed,
            B=self.B,
            per_community=[m.to_dict() for m in self.per_community],
        )
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _summary(values: list, B: int, seed) -> tuple[Optional[float], Optional[float]]:
    if not values:
        return None, None
    return bootstrap_summary(values, B, seed)


def evaluate_partition(
    flows: FlowTable,
    g: Hpdn,
    p: Partition,
    B: int = DEFAULT_B,
    seed: int = 0,
    algorithm: Optional[str] = None,
) -> DelineationReport:
    """Per-community metrics and their bootstrap summaries.

    The three bootstrap runs (li, conductance, discharges) draw from independent
    children of ``SeedSequence(seed)``.
    """
    seed = int(seed) & ((1 << 64) - 1)
    inside, total = _resident_totals(flows, p)
    ext, vol = _strength_totals(g, p)
    sizes = p.sizes()
    per = []
    for c in range(p.n_communities):
        li = float(inside[c]) / float(total[c]) if total[c] else None
        cond = float(ext[c]) / float(vol[c]) if vol[c] else None
        name = p.names[c] if p.names is not None else None
        per.append(CommunityMetrics(c, li, cond, int(total[c]), int(sizes[c]), name))
    li_vals = [m.li for m in per if m.li is not None]
    c_vals = [m.conductance for m in per if m.conductance is not None]
    d_vals = [m.discharges for m in per]
    s_li, s_c, s_d = np.random.SeedSequence(seed).spawn(3)
    li_mean, li_std = _summary(li_vals, B, s_li)
    c_mean, c_std = _summary(c_vals, B, s_c)
    d_mean, d_std = _summary(d_vals, B, s_d)
    meta = {}
    if algorithm is not None:
        meta["algorithm"] = algorithm
    if flows.discharge_type is not None:
        meta["discharge_type"] = flows.discharge_type.value
    if flows.year is not None:
        meta["year"] = flows.year
    return DelineationReport(
        per_community=per,
        li_mean=li_mean,
        li_std=li_std,
        conductance_mean=c_mean,
        conductance_std=c_std,
        discharges_mean=d_mean if d_mean is not None else 0.0,
        discharges_std=d_std if d_std is not None else 0.0,
        undefined_li_count=len(per) - len(li_vals),
        undefined_conductance_count=len(per) - len(c_vals),
        seed=seed,
        B=B,
        meta=meta,
    )
