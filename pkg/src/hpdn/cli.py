"""``hpdn`` command line: build networks, detect communities, evaluate, compare.

Every command that writes into an output directory also drops a
``manifest-<command>[-<algorithm>].json`` there with its inputs, settings and
outputs. Manifests carry no timestamps or timings, so re-running a command
with the same inputs reproduces the directory byte for byte.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .baseline import dartmouth, load_adjacency, load_town_map
from .detect import Algorithm, DetectConfig, detect, objective
from .errors import EmptySelection, HpdnError, SchemaMismatch
from .evaluate import DEFAULT_B, evaluate_partition
from .graph import Hpdn, stats
from .ingest import (
    ColumnMap, Crosswalk, DischargeType, FlowTable, aggregate_flows, apply_crosswalk,
    build_hpdn, filter_records, parse_discharges,
)
from .partition import Partition
from .synth import PlantedConfig, generate

log = logging.getLogger("hpdn")

SEED_ENV = "HPDN_SEED"


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1 (exit 2 is reserved for an empty selection)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or not raw.strip():
        return 0
    try:
        return int(raw)
    except ValueError:
        raise HpdnError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _manifest(out_dir: Path, command: str, inputs: dict, settings: dict, outputs: list,
              algorithm: Optional[str] = None, **extra) -> None:
    name = f"manifest-{command}" + (f"-{algorithm}" if algorithm else "") + ".json"
    doc = {
        "command": command,
        "tool_version": __version__,
        "inputs": {k: str(v) for k, v in inputs.items()},
        **extra,
        "settings": settings,
        "output_dir": str(out_dir),
        "outputs": sorted(outputs),
    }
    _write(out_dir / name, _dump(doc))


def _read_manifests(directory: Path, prefix: str) -> list[dict]:
    docs = []
    for path in sorted(directory.glob(f"{prefix}*.json")):
        try:
            docs.append(json.loads(path.read_text(encoding="utf-8")))
        except ValueError:
            log.warning("ignoring unreadable manifest %s", path)
    return docs


# -- build / stats ----------------------------------------------------------

def _column_map(pairs: Sequence[str]) -> ColumnMap:
    fields = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep or key not in ColumnMap.__dataclass_fields__:
            raise HpdnError(f"--column expects FIELD=HEADER with FIELD in {sorted(ColumnMap.__dataclass_fields__)}")
        fields[key] = value or None
    return ColumnMap(**fields)


def cmd_build(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dtype = DischargeType.parse(args.type) if args.type else None
    crosswalk = Crosswalk.load(args.crosswalk, args.zip_col, args.zcta_col)
    with open(args.discharges, newline="", encoding="utf-8-sig") as fh:
        records = parse_discharges(fh, _column_map(args.column))
    kept, excluded = filter_records(records)
    mapped = apply_crosswalk(kept, crosswalk, args.unmapped_policy)
    flows = aggregate_flows(mapped.records, dtype, args.year, [e.record for e in excluded] + list(mapped.dropped))
    g = build_hpdn(flows)
    flows.write_csv(out / "flows.csv")
    g.write_edges(out / "edges.tsv")
    _write(out / "stats.json", stats(g).to_json())
    _manifest(
        out, "build",
        {"discharges": args.discharges, "crosswalk": args.crosswalk},
        {"unmapped_policy": args.unmapped_policy, "columns": asdict(_column_map(args.column))},
        ["flows.csv", "edges.tsv", "stats.json"],
        discharge_type=dtype.value if dtype else None,
        year=args.year,
        excluded_count=flows.excluded_count,
        excluded_fraction=flows.excluded_fraction,
        unmapped_zips=len(mapped.unmapped_zips),
    )
    print(f"{g.n} ZCTAs, {g.n_edges} edges, {flows.total} discharges "
          f"({flows.excluded_fraction:.2%} excluded) -> {out}")
    return 0


def cmd_stats(args) -> int:
    text = stats(Hpdn.read_edges(args.edges)).to_json()
    if args.out:
        _write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 0


# -- detect -------------------------------------------------------------------

def _detect_config(args, algo: Algorithm) -> DetectConfig:
    return DetectConfig(
        algorithm=algo,
        seed=args.seed,
        slpa_iterations=args.slpa_iterations,
        slpa_threshold=args.slpa_threshold,
        louvain_resolution=args.resolution,
        sbm_mcmc_sweeps=args.sbm_sweeps,
    )


def _run_one(edges_path: str, cfg: DetectConfig) -> tuple[str, str, float]:
    """Partition CSV text, sidecar JSON text and wall time for one algorithm."""
    g = Hpdn.read_edges(edges_path)
    t0 = time.perf_counter()
    p = detect(g, cfg)
    elapsed = time.perf_counter() - t0
    buf = io.StringIO()
    p.write_csv(buf)
    sidecar = {
        "algorithm": cfg.algorithm.value,
        "n_communities": p.n_communities,
        "objective": objective(g, p, cfg.algorithm, cfg.louvain_resolution),
        "seed": cfg.seed,
    }
    return buf.getvalue(), _dump(sidecar), elapsed


def _config_dict(cfg: DetectConfig) -> dict:
    d = asdict(cfg)
    d["algorithm"] = cfg.algorithm.value
    return d


def cmd_detect(args) -> int:
    if (args.edges is None) == (args.edges_opt is None):
        raise HpdnError("give the edge TSV exactly once (positional or --edges)")
    args.edges = args.edges or args.edges_opt
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    algos = list(Algorithm) if args.algo == "all" else [Algorithm.parse(args.algo)]
    configs = [_detect_config(args, a) for a in algos]
    if args.jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=min(args.jobs, len(configs))) as pool:
            results = list(pool.map(_run_one, [args.edges] * len(configs), configs))
    else:
        results = [_run_one(args.edges, cfg) for cfg in configs]
    for cfg, (part_csv, sidecar, elapsed) in zip(configs, results):
        name = cfg.algorithm.value
        _write(out / f"partition-{name}.csv", part_csv)
        _write(out / f"objective-{name}.json", sidecar)
        _manifest(out, "detect", {"edges": args.edges}, _config_dict(cfg),
                  [f"partition-{name}.csv", f"objective-{name}.json"], algorithm=name)
        n_c = json.loads(sidecar)["n_communities"]
        print(f"{cfg.algorithm.display}: {n_c} communities in {elapsed:.2f}s")
    return 0


def cmd_baseline(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    flows = FlowTable.read_csv(args.flows)
    towns = load_town_map(args.towns) if args.towns else None
    adjacency = load_adjacency(args.adjacency) if args.adjacency else None
    p = dartmouth(flows, towns, adjacency)
    p.write_csv(out / "partition-dartmouth.csv")
    _manifest(out, "baseline",
              {"flows": args.flows, "towns": args.towns or "", "adjacency": args.adjacency or ""},
              {"degenerate_towns": towns is None, "enclave_fix": adjacency is not None},
              ["partition-dartmouth.csv"], algorithm="dartmouth")
    print(f"DARTMOUTH: {p.n_communities} communities")
    return 0


# -- evaluate / compare -----------------------------------------------------

def _lookup_context(flows_path: Path, partition_path: Path) -> dict:
    """Discharge type/year from the build manifest, algorithm from the detect manifest."""
    ctx: dict = {}
    for doc in _read_manifests(flows_path.parent, "manifest-build"):
        if flows_path.name in doc.get("outputs", []):
            ctx["discharge_type"] = doc.get("discharge_type")
            ctx["year"] = doc.get("year")
    for prefix in ("manifest-detect", "manifest-baseline"):
        for doc in _read_manifests(partition_path.parent, prefix):
            if partition_path.name in doc.get("outputs", []):
                ctx["algorithm"] = doc.get("settings", {}).get("algorithm", "dartmouth")
    return {k: v for k, v in ctx.items() if v is not None}


def cmd_evaluate(args) -> int:
    flows_path, part_path = Path(args.flows), Path(args.partition)
    ctx = _lookup_context(flows_path, part_path)
    dtype = DischargeType.parse(args.type) if args.type else (
        DischargeType.parse(ctx["discharge_type"]) if "discharge_type" in ctx else None)
    year = args.year if args.year is not None else ctx.get("year")
    flows = FlowTable.read_csv(flows_path, dtype, year)
    g = Hpdn.read_edges(args.edges)
    p = Partition.read_csv(part_path)
    algorithm = args.algorithm or ctx.get("algorithm")
    report = evaluate_partition(flows, g, p, B=args.B, seed=args.seed, algorithm=algorithm)
    doc = report.to_dict()
    validate_report(doc)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write(out, _dump(doc))
    _manifest(out.parent, "evaluate",
              {"flows": args.flows, "edges": args.edges, "partition": args.partition},
              {"B": args.B, "seed": report.seed, "algorithm": algorithm},
              [out.name], algorithm=None if out.stem == "report" else out.stem,
              discharge_type=dtype.value if dtype else None, year=year)
    li = "undefined" if report.li_mean is None else f"{report.li_mean:.3f}"
    print(f"N_C={report.n_communities} <li>={li} -> {out}")
    return 0


def _schema() -> dict:
    text = resources.files("hpdn").joinpath("schemas/report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate_report(doc: dict, source: str = "report") -> None:
    import jsonschema

    try:
        jsonschema.validate(doc, _schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaMismatch(f"{source}: {where}: {exc.message}") from None


COMPARE_COLUMNS = ("type", "year", "algorithm", "N_C", "li_mean", "li_std", "c_mean", "c_std", "d_mean", "d_std")


def _compare_row(doc: dict, path: Path) -> dict:
    algo = doc.get("algorithm")
    display = Algorithm.parse(algo).display if algo in {a.value for a in Algorithm} else (algo or path.stem).upper()
    return {
        "type": doc.get("discharge_type", ""),
        "year": doc.get("year", ""),
        "algorithm": display,
        "N_C": doc["n_communities"],
        "li_mean": doc["li_mean"], "li_std": doc["li_std"],
        "c_mean": doc["conductance_mean"], "c_std": doc["conductance_std"],
        "d_mean": doc["discharges_mean"], "d_std": doc["discharges_std"],
    }


def _fmt(mean, std, digits: int) -> str:
    if mean is None:
        return "n/a"
    return f"{mean:.{digits}f} ± {std:.{digits}f}"


def compare_table(rows: list[dict]) -> tuple[str, str]:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COMPARE_COLUMNS)
    for r in rows:
        w.writerow(["" if r[c] is None else r[c] for c in COMPARE_COLUMNS])
    header = ["TYPE", "YEAR", "ALGORITHM", "N_C", "<li>", "<c>", "<d>"]
    body = [
        [str(r["type"]), str(r["year"]), r["algorithm"], str(r["N_C"]),
         _fmt(r["li_mean"], r["li_std"], 2), _fmt(r["c_mean"], r["c_std"], 2),
         _fmt(r["d_mean"], r["d_std"], 0)]
        for r in rows
    ]
    widths = [max(len(line[i]) for line in [header] + body) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(wd) for cell, wd in zip(line, widths)).rstrip() for line in [header] + body]
    return buf.getvalue(), "\n".join(lines) + "\n"


def cmd_compare(args) -> int:
    # shell globs over an output directory pick up its manifests too
    args.reports = [r for r in args.reports if not Path(r).name.startswith("manifest-")]
    if len(args.reports) < 2:
        print("compare needs at least two reports", file=sys.stderr)
        return 1
    rows = []
    for name in args.reports:
        path = Path(name)
        doc = json.loads(path.read_text(encoding="utf-8"))
        validate_report(doc, str(path))
        if "year" not in doc or "discharge_type" not in doc:
            for m in _read_manifests(path.parent, "manifest-evaluate"):
                if path.name in m.get("outputs", []):
                    doc.setdefault("year", m.get("year"))
                    doc.setdefault("discharge_type", m.get("discharge_type"))
        rows.append(_compare_row(doc, path))
    csv_text, table = compare_table(rows)
    if args.out:
        _write(Path(args.out), csv_text)
    sys.stdout.write(table)
    return 0


# -- export / synth -----------------------------------------------------------

def cmd_export_geojson(args) -> int:
    from .geo import export_geojson

    p = Partition.read_csv(args.partition)
    export_geojson(p, args.boundaries, args.out, args.zcta_property)  # logs missing ZCTAs
    print(f"{p.n_communities} communities -> {args.out}")
    return 0


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sizes = [int(s) for s in args.sizes.split(",")] if args.sizes else None
    cfg = PlantedConfig(
        n_communities=len(sizes) if sizes else args.communities,
        community_sizes=sizes,
        community_size=args.size,
        mean_internal_flow=args.internal,
        mean_external_flow=args.external,
        hub_fraction=args.hub_fraction,
        seed=args.seed,
    )
    flows, truth = generate(cfg)
    dtype = DischargeType.parse(args.type)
    flows.write_csv(out / "flows.csv")
    truth.write_csv(out / "truth.csv")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["type", "year", "facility_name", "facility_zip", "patient_zip", "count"])
    for (patient, facility), n in flows.sorted_items():
        w.writerow([dtype.value, args.year, f"Facility {facility}", facility, patient, n])
    _write(out / "discharges.csv", buf.getvalue())
    zctas = flows.zctas
    _write(out / "crosswalk.csv", "zip,zcta\n" + "".join(f"{z},{z}\n" for z in zctas))
    settings = {k: v for k, v in asdict(cfg).items()}
    settings["community_sizes"] = cfg.sizes()
    _manifest(out, "synth", {}, settings, ["flows.csv", "truth.csv", "discharges.csv", "crosswalk.csv"],
              discharge_type=dtype.value, year=args.year)
    print(f"{len(zctas)} ZCTAs, {flows.total} discharges, {truth.n_communities} planted communities -> {out}")
    return 0


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hpdn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hpdn {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def seeded(p):
        p.add_argument("--seed", type=int, default=None, help=f"default: ${SEED_ENV} or 0")

    p = sub.add_parser("build", help="discharge CSV + crosswalk -> flows, edges, stats")
    p.add_argument("discharges")
    p.add_argument("crosswalk")
    p.add_argument("--type", help="discharge type, e.g. 'ED Only' (default: all)")
    p.add_argument("--year", type=int)
    p.add_argument("--unmapped-policy", choices=("identity", "drop"), default="identity")
    p.add_argument("--zip-col", default="zip")
    p.add_argument("--zcta-col", default="zcta")
    p.add_argument("--column", action="append", metavar="FIELD=HEADER",
                   help="rename a discharge column (repeatable)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("stats", help="network statistics of an edge TSV")
    p.add_argument("edges")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("detect", help="community detection on an edge TSV")
    p.add_argument("edges", nargs="?")
    p.add_argument("--edges", dest="edges_opt", metavar="FILE", help="same as the positional argument")
    p.add_argument("--algo", required=True, choices=[a.value for a in Algorithm] + ["all"])
    seeded(p)
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for --algo all")
    p.add_argument("--slpa-iterations", "--slpa-iters", type=int, default=100)
    p.add_argument("--slpa-threshold", "--slpa-r", type=float, default=0.5)
    p.add_argument("--resolution", type=float, default=1.0)
    p.add_argument("--sbm-sweeps", "--sweeps", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("baseline", help="Dartmouth-style plurality + enclave delineation")
    p.add_argument("flows")
    p.add_argument("--towns", help="CSV facility_zcta,town (default: one town per facility ZCTA)")
    p.add_argument("--adjacency", help="CSV zcta_a,zcta_b for the enclave step")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("evaluate", help="quality report for a partition")
    p.add_argument("flows")
    p.add_argument("edges")
    p.add_argument("partition")
    p.add_argument("--B", type=int, default=DEFAULT_B)
    seeded(p)
    p.add_argument("--algorithm")
    p.add_argument("--type")
    p.add_argument("--year", type=int)
    p.add_argument("--out", required=True, help="report JSON path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="side-by-side table of reports")
    p.add_argument("reports", nargs="+")
    p.add_argument("--out", help="CSV output path")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("export-geojson", help="dissolve ZCTA polygons per community")
    p.add_argument("partition")
    p.add_argument("boundaries")
    p.add_argument("--zcta-property")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_geojson)

    p = sub.add_parser("synth", help="planted-partition discharge data")
    p.add_argument("--communities", type=int, default=4)
    p.add_argument("--size", type=int, default=16)
    p.add_argument("--sizes", help="comma-separated community sizes (overrides --communities/--size)")
    p.add_argument("--internal", type=float, default=50.0)
    p.add_argument("--external", type=float, default=1.0)
    p.add_argument("--hub-fraction", type=float, default=1.0)
    p.add_argument("--type", default="ED Only")
    p.add_argument("--year", type=int, default=2018)
    seeded(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if hasattr(args, "seed") and args.seed is None:
            args.seed = _default_seed()
        return args.func(args)
    except EmptySelection as exc:
        print(f"hpdn {args.command}: {exc}", file=sys.stderr)
        return 2
    except (HpdnError, ValueError) as exc:
        print(f"hpdn {args.command}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        where = exc.filename if exc.filename is not None else ""
        print(f"hpdn {args.command}: {exc.strerror or exc}: {where}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
