"""Discharge-record ingestion: CSV parsing, ZIP filtering, ZIP->ZCTA crosswalk
and aggregation into directed flow tables.

The flow table keeps direction (patient residence -> facility location); the
undirected network is only formed by :func:`build_hpdn`.
"""
from __future__ import annotations

import csv
import enum
import io
import logging
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Optional, TextIO, Union

from .errors import EmptySelection, MalformedRow, MissingColumn

log = logging.getLogger(__name__)

_FIVE_DIGITS = re.compile(r"[0-9]{5}")
_COUNT = re.compile(r"[0-9]{1,3}(,[0-9]{3})+|[0-9]+")

PathLike = Union[str, Path]


class DischargeType(enum.Enum):
    InpatientFromED = "Inpatient from ED"
    Inpatient = "Inpatient"
    AmbulatorySurgery = "Ambulatory Surgery"
    EDOnly = "ED Only"

    @classmethod
    def parse(cls, text: str) -> "DischargeType":
        key = re.sub(r"[\s_\-]+", "", str(text)).lower()
        for member in cls:
            if key in (member.name.lower(), re.sub(r"\s+", "", member.value).lower()):
                return member
        aliases = {
            "inpatientfromemergencydepartment": cls.InpatientFromED,
            "edonly": cls.EDOnly,
            "emergencydepartmentonly": cls.EDOnly,
            "ambulatory": cls.AmbulatorySurgery,
            "as": cls.AmbulatorySurgery,
            "ed": cls.EDOnly,
        }
        if key in aliases:
            return aliases[key]
        raise ValueError(f"unknown discharge type {text!r}")

    @property
    def slug(self) -> str:
        return self.name


@dataclass(frozen=True)
class DischargeRecord:
    discharge_type: DischargeType
    year: int
    facility_name: str
    facility_zip: str
    patient_zip: str
    count: int

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be non-negative")


@dataclass(frozen=True)
class ColumnMap:
    """Header names of the discharge CSV. CHHS releases rename these between years."""

    discharge_type: str = "type"
    year: str = "year"
    facility_name: Optional[str] = "facility_name"
    facility_zip: str = "facility_zip"
    patient_zip: str = "patient_zip"
    count: str = "count"

    def required(self) -> dict[str, str]:
        cols = {
            "discharge_type": self.discharge_type,
            "year": self.year,
            "facility_zip": self.facility_zip,
            "patient_zip": self.patient_zip,
            "count": self.count,
        }
        if self.facility_name is not None:
            cols["facility_name"] = self.facility_name
        return cols


class Exclusion(NamedTuple):
    record: DischargeRecord
    reason: str
    end: str  # "patient" or "facility"


def is_zip5(value: str) -> bool:
    return _FIVE_DIGITS.fullmatch(value) is not None


def _open_text(source: Union[PathLike, TextIO]):
    if isinstance(source, (str, Path)):
        return open(source, newline="", encoding="utf-8-sig")
    return _NoClose(source)


class _NoClose:
    def __init__(self, stream):
        self.stream = stream

    def __enter__(self):
        return self.stream

    def __exit__(self, *exc):
        return False


def parse_discharges(
    csv_stream: Union[PathLike, TextIO], column_map: ColumnMap = ColumnMap()
) -> list[DischargeRecord]:
    """Read a discharge CSV into records.

    Row numbers in errors are 1-based data rows (the header is row 0).
    """
    with _open_text(csv_stream) as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for name, col in column_map.required().items():
            if col not in header:
                raise MissingColumn(f"column {col!r} ({name}) not in header {header}")

        records = []
        for rowno, row in enumerate(reader, start=1):
            records.append(_parse_row(row, rowno, column_map))
    return records


def _parse_row(row: dict, rowno: int, cmap: ColumnMap) -> DischargeRecord:
    def field_(col):
        value = row.get(col)
        if value is None or not value.strip():
            raise MalformedRow(rowno, f"empty field {col!r}")
        return value.strip()

    raw_count = field_(cmap.count)
    if not _COUNT.fullmatch(raw_count):
        raise MalformedRow(rowno, f"bad count {raw_count!r}")
    raw_year = field_(cmap.year)
    try:
        year = int(raw_year)
    except ValueError:
        raise MalformedRow(rowno, f"bad year {raw_year!r}") from None
    try:
        dtype = DischargeType.parse(field_(cmap.discharge_type))
    except ValueError as exc:
        raise MalformedRow(rowno, str(exc)) from None
    name = field_(cmap.facility_name) if cmap.facility_name else ""
    return DischargeRecord(
        discharge_type=dtype,
        year=year,
        facility_name=name,
        facility_zip=field_(cmap.facility_zip),
        patient_zip=field_(cmap.patient_zip),
        count=int(raw_count.replace(",", "")),
    )


def filter_records(
    records: Iterable[DischargeRecord],
) -> tuple[list[DischargeRecord], list[Exclusion]]:
    """Keep records whose patient and facility ZIPs are exactly five ASCII digits.

    Excluded rows carry the offending raw token ("HOMELESS", "OUTSIDE U.S.", ...)
    as their reason.
    """
    kept, excluded = [], []
    for rec in records:
        if not is_zip5(rec.patient_zip):
            excluded.append(Exclusion(rec, rec.patient_zip, "patient"))
        elif not is_zip5(rec.facility_zip):
            excluded.append(Exclusion(rec, rec.facility_zip, "facility"))
        else:
            kept.append(rec)
    return kept, excluded


class Crosswalk:
    """ZIP -> ZCTA lookup. A miss is reported as ``None``, never passed through."""

    def __init__(self, mapping: Mapping[str, str]):
        for z, c in mapping.items():
            if not (is_zip5(z) and is_zip5(c)):
                raise ValueError(f"crosswalk entry {z!r}->{c!r} is not 5-digit")
        self._map = dict(mapping)

    def lookup(self, zip_code: str) -> Optional[str]:
        return self._map.get(zip_code)

    def __contains__(self, zip_code: str) -> bool:
        return zip_code in self._map

    def __len__(self) -> int:
        return len(self._map)

    @classmethod
    def load(cls, path: Union[PathLike, TextIO], zip_col: str = "zip", zcta_col: str = "zcta"):
        mapping = {}
        with _open_text(path) as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            for col in (zip_col, zcta_col):
                if col not in header:
                    raise MissingColumn(f"crosswalk column {col!r} not in header {header}")
            for rowno, row in enumerate(reader, start=1):
                z, c = (row[zip_col] or "").strip(), (row[zcta_col] or "").strip()
                if not (is_zip5(z) and is_zip5(c)):
                    raise MalformedRow(rowno, f"crosswalk entry {z!r}->{c!r} is not 5-digit")
                mapping[z] = c
        return cls(mapping)


class CrosswalkResult(NamedTuple):
    records: list[DischargeRecord]
    dropped: list[DischargeRecord]
    unmapped_zips: frozenset


def apply_crosswalk(
    records: Iterable[DischargeRecord], crosswalk: Crosswalk, policy: str = "identity"
) -> CrosswalkResult:
    """Replace patient and facility ZIPs by their ZCTAs.

    ``policy="drop"`` removes records with an unmapped ZIP at either end;
    ``policy="identity"`` keeps the ZIP as its own ZCTA.
    """
    if policy not in ("drop", "identity"):
        raise ValueError(f"unknown unmapped-ZIP policy {policy!r}")
    out, dropped, missing = [], [], set()
    for rec in records:
        p = crosswalk.lookup(rec.patient_zip)
        f = crosswalk.lookup(rec.facility_zip)
        if p is None:
            missing.add(rec.patient_zip)
        if f is None:
            missing.add(rec.facility_zip)
        if p is None or f is None:
            if policy == "drop":
                dropped.append(rec)
                continue
            p = rec.patient_zip if p is None else p
            f = rec.facility_zip if f is None else f
        out.append(
            DischargeRecord(rec.discharge_type, rec.year, rec.facility_name, f, p, rec.count)
        )
    if missing:
        log.info(
            "%d ZIPs missing from crosswalk (policy=%s, %d records dropped)",
            len(missing), policy, len(dropped),
        )
    return CrosswalkResult(out, dropped, frozenset(missing))


@dataclass(frozen=True)
class FlowTable:
    """Directed discharge counts keyed by (patient ZCTA, facility ZCTA)."""

    discharge_type: Optional[DischargeType]
    year: Optional[int]
    entries: Mapping[tuple[str, str], int]
    excluded_count: int = 0

    def __post_init__(self):
        clean = {}
        for key, n in self.entries.items():
            n = int(n)
            if n < 0:
                raise ValueError(f"negative flow for {key}")
            if n:
                clean[key] = n
        object.__setattr__(self, "entries", MappingProxyType(clean))

    @property
    def total(self) -> int:
        return sum(self.entries.values())

    @property
    def excluded_fraction(self) -> float:
        denom = self.excluded_count + self.total
        return self.excluded_count / denom if denom else 0.0

    @property
    def zctas(self) -> list[str]:
        return sorted({z for key in self.entries for z in key})

    def __len__(self) -> int:
        return len(self.entries)

    def sorted_items(self):
        return sorted(self.entries.items())

    def write_csv(self, path: Union[PathLike, TextIO]) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["patient_zcta", "facility_zcta", "count"])
        for (p, f), n in self.sorted_items():
            w.writerow([p, f, n])
        _write_text(path, buf.getvalue())

    @classmethod
    def read_csv(
        cls,
        path: Union[PathLike, TextIO],
        discharge_type: Optional[DischargeType] = None,
        year: Optional[int] = None,
    ) -> "FlowTable":
        entries: dict[tuple[str, str], int] = defaultdict(int)
        with _open_text(path) as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            for col in ("patient_zcta", "facility_zcta", "count"):
                if col not in header:
                    raise MissingColumn(f"flow column {col!r} not in header {header}")
            for rowno, row in enumerate(reader, start=1):
                p, f, n = row["patient_zcta"].strip(), row["facility_zcta"].strip(), row["count"].strip()
                if not p or not f:
                    raise MalformedRow(rowno, "empty ZCTA")
                if not n.isdigit():
                    raise MalformedRow(rowno, f"bad count {n!r}")
                entries[(p, f)] += int(n)
        return cls(discharge_type, year, dict(entries))


def _write_text(path, text: str) -> None:
    if isinstance(path, (str, Path)):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        path.write(text)


def aggregate_flows(
    records: Iterable[DischargeRecord],
    discharge_type: Optional[DischargeType],
    year: Optional[int],
    excluded: Iterable[DischargeRecord] = (),
) -> FlowTable:
    """Sum counts per (patient ZCTA, facility ZCTA) for one discharge type and year.

    ``None`` for type or year matches everything. ``excluded`` are the records
    removed upstream; those matching the selection feed ``excluded_count``.
    """
    def selected(rec):
        return (discharge_type is None or rec.discharge_type == discharge_type) and (
            year is None or rec.year == year
        )

    entries: dict[tuple[str, str], int] = defaultdict(int)
    matched = False
    for rec in records:
        if selected(rec):
            matched = True
            entries[(rec.patient_zip, rec.facility_zip)] += rec.count
    if not matched:
        what = discharge_type.value if discharge_type else "any type"
        raise EmptySelection(f"no records for {what}, year {year}")
    n_excluded = sum(
        (r.record if isinstance(r, Exclusion) else r).count
        for r in excluded
        if selected(r.record if isinstance(r, Exclusion) else r)
    )
    return FlowTable(discharge_type, year, dict(entries), n_excluded)


def build_hpdn(flows: FlowTable):
    """Symmetrize a flow table into the undirected discharge network."""
    from .graph import Hpdn

    if not flows.entries:
        raise EmptySelection("flow table is empty")
    return Hpdn.from_flows(flows)
