"""Dartmouth-style HSA delineation used as a comparison baseline.

1. facilities are grouped into towns (an input table, or one town per facility
   ZCTA in the degenerate mode);
2. every patient ZCTA joins the town that treats the plurality of its
   residents;
3. enclaves (a ZCTA whose neighbours all sit in one other community) are
   absorbed by that community until nothing changes.
"""
from __future__ import annotations

import csv
import logging
from collections import defaultdict
from pathlib import Path
from typing import Mapping, Optional, Union

from .errors import MalformedRow, MissingAdjacency, MissingColumn, UnmappedFacility
from .ingest import FlowTable
from .partition import Partition

log = logging.getLogger(__name__)

Adjacency = Mapping[str, frozenset]


def plurality_assign(flows: FlowTable, town_map: Optional[Mapping[str, str]] = None) -> Partition:
    """Assign each ZCTA to the town receiving most of its residents' discharges.

    Ties go to the town with the larger total inflow, then to the
    lexicographically smaller town. ZCTAs that only host facilities (no
    resident discharges) join the town of their own facility. With
    ``town_map=None`` each facility ZCTA is its own town.
    """
    facilities = sorted({f for _, f in flows.entries})
    if town_map is None:
        town_map = {f: f for f in facilities}
    unmapped = [f for f in facilities if f not in town_map]
    if unmapped:
        raise UnmappedFacility(f"facility ZCTAs without a town: {', '.join(unmapped[:10])}")

    by_patient: dict[str, dict[str, int]] = defaultdict(lambda: defaultdict(int))
    inflow: dict[str, int] = defaultdict(int)
    for (patient, facility), n in flows.entries.items():
        town = town_map[facility]
        by_patient[patient][town] += n
        inflow[town] += n

    assignment: dict[str, str] = {}
    for patient, towns in by_patient.items():
        assignment[patient] = min(towns, key=lambda t: (-towns[t], -inflow[t], t))
    for f in facilities:
        assignment.setdefault(f, town_map[f])
    names = {t: t for t in set(assignment.values())}
    return Partition.from_mapping(assignment, names)


def enclave_fix(p: Partition, adjacency: Adjacency, max_iterations: Optional[int] = None) -> Partition:
    """Absorb enclaves into the community that surrounds them.

    A ZCTA is an enclave when all of its neighbours (within the partition)
    belong to one community other than its own. Sweeps visit ZCTAs in sorted
    order and move enclaves immediately; sweeps repeat until one makes no
    move. Every move turns all of the enclave's boundary edges into internal
    ones, so the number of cut edges falls strictly and the loop terminates.
    """
    missing = [z for z in p.nodes if z not in adjacency]
    if missing:
        raise MissingAdjacency(f"no adjacency entry for: {', '.join(missing[:10])}")
    labels = {z: int(c) for z, c in zip(p.nodes, p.membership)}
    neighbours = {z: sorted(n for n in adjacency[z] if n in labels and n != z) for z in p.nodes}
    sweeps = 0
    while max_iterations is None or sweeps < max_iterations:
        sweeps += 1
        moved = 0
        for z in p.nodes:
            nbrs = neighbours[z]
            if not nbrs:
                continue
            around = {labels[n] for n in nbrs}
            if len(around) == 1:
                (c,) = around
                if c != labels[z]:
                    labels[z] = c
                    moved += 1
        if not moved:
            break
    log.debug("enclave_fix finished after %d sweep(s)", sweeps)
    names = dict(enumerate(p.names)) if p.names is not None else None
    return Partition(list(labels), list(labels.values()), names)


def dartmouth(flows: FlowTable, town_map: Optional[Mapping[str, str]], adjacency: Optional[Adjacency]) -> Partition:
    p = plurality_assign(flows, town_map)
    return enclave_fix(p, adjacency) if adjacency is not None else p


def _rows(path: Union[str, Path], cols: tuple[str, str]):
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in cols:
            if col not in header:
                raise MissingColumn(f"{Path(path).name}: column {col!r} not in header {header}")
        for rowno, row in enumerate(reader, start=1):
            a, b = (row[cols[0]] or "").strip(), (row[cols[1]] or "").strip()
            if not a or not b:
                raise MalformedRow(rowno, "empty field")
            yield rowno, a, b


def load_town_map(path: Union[str, Path]) -> dict[str, str]:
    """Read ``facility_zcta,town``; a facility listed twice must agree with itself."""
    out: dict[str, str] = {}
    for rowno, zcta, town in _rows(path, ("facility_zcta", "town")):
        if out.setdefault(zcta, town) != town:
            raise MalformedRow(rowno, f"facility {zcta} mapped to both {out[zcta]!r} and {town!r}")
    return out


def load_adjacency(path: Union[str, Path]) -> dict[str, frozenset]:
    """Read ``zcta_a,zcta_b`` pairs and close them under symmetry."""
    acc: dict[str, set] = defaultdict(set)
    for _, a, b in _rows(path, ("zcta_a", "zcta_b")):
        acc[a].add(b)
        acc[b].add(a)
    for z in acc:
        acc[z].discard(z)
    return {z: frozenset(v) for z, v in acc.items()}
