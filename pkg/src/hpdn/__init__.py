"""Hospital-patient discharge networks and network-based Health Service Area
delineation."""

__version__ = "0.1.0"

from .errors import HpdnError
from .graph import Hpdn, NetworkStats, stats
from .ingest import (
    ColumnMap, Crosswalk, DischargeRecord, DischargeType, FlowTable,
    aggregate_flows, apply_crosswalk, build_hpdn, filter_records, parse_discharges,
)
from .partition import Partition
from .detect import Algorithm, DetectConfig, detect
from .evaluate import (
    DelineationReport, bootstrap_summary, community_discharges, conductance,
    evaluate_partition, localization_index,
)
from .baseline import enclave_fix, plurality_assign
from .synth import PlantedConfig, generate

__all__ = [
    "HpdnError", "Hpdn", "NetworkStats", "stats", "Partition",
    "ColumnMap", "Crosswalk", "DischargeRecord", "DischargeType", "FlowTable",
    "aggregate_flows", "apply_crosswalk", "build_hpdn", "filter_records", "parse_discharges",
    "Algorithm", "DetectConfig", "detect",
    "DelineationReport", "bootstrap_summary", "community_discharges", "conductance",
    "evaluate_partition", "localization_index",
    "enclave_fix", "plurality_assign", "PlantedConfig", "generate",
]
