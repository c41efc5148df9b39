"""Non-overlapping assignment of ZCTAs to communities."""
from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import MalformedRow, MissingColumn, PartitionMismatch


def canonical_labels(labels: Sequence) -> np.ndarray:
    """Relabel to 0..k-1 in order of first appearance."""
    seen: dict = {}
    out = np.empty(len(labels), dtype=np.int64)
    for i, lab in enumerate(labels):
        out[i] = seen.setdefault(lab, len(seen))
    return out


class Partition:
    """Community ids are contiguous from 0, numbered by first appearance in
    sorted node order, so two partitions that differ only by a relabeling
    compare equal.

    ``names`` optionally carries a display name per community (e.g. the town
    of a Dartmouth-style assignment).
    """

    __slots__ = ("nodes", "membership", "names", "_index")

    def __init__(self, nodes: Sequence[str], labels: Sequence, names: Optional[Mapping] = None):
        if len(nodes) != len(labels):
            raise ValueError("nodes and labels differ in length")
        if len(set(nodes)) != len(nodes):
            raise ValueError("duplicate nodes in partition")
        order = sorted(range(len(nodes)), key=lambda i: nodes[i])
        self.nodes = tuple(nodes[i] for i in order)
        raw = [labels[i] for i in order]
        self.membership = canonical_labels(raw)
        self.membership.setflags(write=False)
        self._index = {z: i for i, z in enumerate(self.nodes)}
        if names is not None:
            first = {}
            for lab, cid in zip(raw, self.membership):
                first.setdefault(int(cid), names.get(lab, str(lab)))
            self.names = tuple(first[c] for c in range(len(first)))
        else:
            self.names = None

    @classmethod
    def from_mapping(cls, assignment: Mapping[str, object], names: Optional[Mapping] = None) -> "Partition":
        nodes = list(assignment)
        return cls(nodes, [assignment[z] for z in nodes], names)

    @classmethod
    def singletons(cls, nodes: Sequence[str]) -> "Partition":
        return cls(list(nodes), list(range(len(nodes))))

    @classmethod
    def whole(cls, nodes: Sequence[str]) -> "Partition":
        return cls(list(nodes), [0] * len(nodes))

    @property
    def n_communities(self) -> int:
        return int(self.membership.max()) + 1 if len(self.membership) else 0

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, node) -> bool:
        return node in self._index

    def __getitem__(self, node: str) -> int:
        return int(self.membership[self._index[node]])

    def get(self, node: str, default=None):
        i = self._index.get(node)
        return default if i is None else int(self.membership[i])

    def assignment(self) -> dict[str, int]:
        return {z: int(c) for z, c in zip(self.nodes, self.membership)}

    def communities(self) -> list[list[str]]:
        out: list[list[str]] = [[] for _ in range(self.n_communities)]
        for z, c in zip(self.nodes, self.membership):
            out[c].append(z)
        return out

    def sizes(self) -> np.ndarray:
        return np.bincount(self.membership, minlength=self.n_communities)

    def aligned(self, nodes: Sequence[str]) -> np.ndarray:
        """Membership vector in the order of ``nodes``; node sets must match."""
        if len(nodes) != len(self.nodes) or any(z not in self._index for z in nodes):
            missing = [z for z in nodes if z not in self._index][:5]
            extra = sorted(set(self.nodes) - set(nodes))[:5]
            raise PartitionMismatch(
                f"partition/graph node sets differ (missing from partition: {missing}, "
                f"not in graph: {extra})"
            )
        return np.fromiter((self.membership[self._index[z]] for z in nodes), dtype=np.int64, count=len(nodes))

    def restricted(self, nodes: Sequence[str]) -> "Partition":
        keep = [z for z in nodes if z in self._index]
        return Partition(keep, [self[z] for z in keep])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return self.nodes == other.nodes and np.array_equal(self.membership, other.membership)

    def __hash__(self):
        return hash((self.nodes, self.membership.tobytes()))

    def __repr__(self) -> str:
        return f"Partition(n={len(self.nodes)}, n_communities={self.n_communities})"

    def write_csv(self, path) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["zcta", "community_id"])
        for z, c in zip(self.nodes, self.membership):
            w.writerow([z, int(c)])
        if isinstance(path, (str, Path)):
            Path(path).write_text(buf.getvalue(), encoding="utf-8")
        else:
            path.write(buf.getvalue())

    @classmethod
    def read_csv(cls, path) -> "Partition":
        text = Path(path).read_text(encoding="utf-8-sig") if isinstance(path, (str, Path)) else path.read()
        reader = csv.DictReader(io.StringIO(text))
        header = reader.fieldnames or []
        for col in ("zcta", "community_id"):
            if col not in header:
                raise MissingColumn(f"partition column {col!r} not in header {header}")
        nodes, labels = [], []
        for rowno, row in enumerate(reader, start=1):
            z, c = (row["zcta"] or "").strip(), (row["community_id"] or "").strip()
            if not z or not c:
                raise MalformedRow(rowno, "empty field")
            nodes.append(z)
            labels.append(c)
        if len(set(nodes)) != len(nodes):
            dup = sorted(z for z in set(nodes) if nodes.count(z) > 1)[:5]
            raise MalformedRow(len(nodes), f"duplicate zcta(s) {dup}")
        return cls(nodes, labels)
