"""End-to-end acceptance checks, one test per criterion.

Each test records its outcome with the ``criterion`` fixture before asserting,
so the terminal summary lists every criterion even when some fail.
"""
import filecmp
import json
import math
import os
import random
import statistics
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

import oracles
from hpdn.detect import (
    Algorithm, DetectConfig, detect, infomap, louvain, map_equation, modularity, partition_similarity,
)
from hpdn.evaluate import bootstrap_summary, conductance, evaluate_partition, localization_index
from hpdn.errors import NoResidentDischarges
from hpdn.graph import Hpdn, stats
from hpdn.ingest import (
    ColumnMap, Crosswalk, DischargeType, FlowTable, aggregate_flows, apply_crosswalk, build_hpdn,
    filter_records, parse_discharges,
)
from hpdn.partition import Partition
from hpdn.synth import PlantedConfig, generate


def _rel_err(got, want) -> float:
    """Relative error against a reference that may be an exact Fraction."""
    if want == 0:
        return 0.0 if got == 0 else math.inf
    return float(abs(Fraction(got) - Fraction(want)) / abs(Fraction(want)))


def _random_flows(rnd, n, self_flows=True):
    nodes = [f"{90000 + i:05d}" for i in range(n)]
    flows = {}
    for a in nodes:
        for b in nodes:
            if (self_flows or a != b) and rnd.random() < 0.35:
                flows[(a, b)] = rnd.randint(1, 20)
    if not flows:
        flows[(nodes[0], nodes[-1])] = rnd.randint(1, 20)
    return flows


def _symmetrize(flows):
    edges = {}
    for (a, b), w in flows.items():
        key = (a, b) if a <= b else (b, a)
        edges[key] = edges.get(key, 0) + w
    return edges


def test_criterion_01_metric_oracles(criterion):
    rnd = random.Random(20240101)
    worst = 0.0
    failures = []
    t0 = time.perf_counter()
    for trial in range(200):
        n = rnd.randint(2, 12)
        raw = _random_flows(rnd, n)
        flows = FlowTable(None, None, raw)
        g = build_hpdn(flows)
        nodes = list(g.nodes)
        edges = _symmetrize(raw)
        labels = [rnd.randint(0, max(0, rnd.randint(0, n - 1))) for _ in nodes]
        p = Partition(nodes, labels)
        canon = [p[z] for z in nodes]
        checks = [
            ("modularity", modularity(g, p), oracles.modularity(nodes, edges, canon)),
            ("map_equation", map_equation(g, p), oracles.map_equation(nodes, edges, canon)),
        ]
        assignment = dict(zip(nodes, canon))
        for c in range(p.n_communities):
            want_c = oracles.conductance(nodes, edges, canon, c)
            if want_c is not None:
                checks.append(("conductance", conductance(g, p, c), want_c))
            want_li = oracles.localization_index(raw, assignment, c)
            if want_li is not None:
                checks.append(("localization_index", localization_index(flows, p, c), want_li))
        for name, got, want in checks:
            err = _rel_err(got, want)
            worst = max(worst, err)
            if err > 1e-12:
                failures.append((trial, name, got, float(want)))
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 10.0
    criterion(1, ok, f"200 graphs, worst rel err {worst:.1e}, {elapsed:.1f}s")
    assert not failures, failures[:5]
    assert elapsed < 10.0


def test_criterion_02_closed_forms(criterion, two_triangles):
    comps = Partition(list(two_triangles.nodes), [0, 0, 0, 1, 1, 1])
    q = modularity(two_triangles, comps)
    single = Hpdn.from_edges([("a", "b", 1)])
    L = map_equation(single, Partition.whole(single.nodes))
    flows = FlowTable(None, None, {("a", "b"): 3, ("b", "c"): 2, ("c", "c"): 1})
    g = build_hpdn(flows)
    whole = Partition.whole(g.nodes)
    li, c = localization_index(flows, whole, 0), conductance(g, whole, 0)
    ok = q == 0.5 and L == 1.0 and li == 1.0 and c == 0.0
    criterion(2, ok, f"Q={q!r} L={L!r} li={li!r} c={c!r}")
    assert q == 0.5
    assert L == 1.0
    assert li == 1.0 and c == 0.0


def _exhaustive_optima(g: Hpdn):
    """Best modularity and lowest map equation over all set partitions."""
    n = g.n
    W = np.zeros((n, n))
    rows = np.repeat(np.arange(n), np.diff(g.indptr))
    W[rows, g.indices] = g.weights
    loops = np.asarray(g.loops)
    A = W + np.diag(2.0 * loops)
    k = A.sum(axis=1)
    m2 = k.sum()
    s = W.sum(axis=1) + loops
    total = s.sum()

    def plogp(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        pos = x > 0
        out[pos] = x[pos] * np.log2(x[pos])
        return out

    node_term = -plogp(s / total).sum()
    best_q, best_l = -np.inf, np.inf
    for labels in oracles.set_partitions(n):
        lab = np.asarray(labels)
        nc = lab.max() + 1
        M = np.zeros((nc, n))
        M[lab, np.arange(n)] = 1.0
        block_a = M @ A @ M.T
        q = float(np.trace(block_a) / m2 - ((M @ k) / m2) @ ((M @ k) / m2))
        block_w = M @ W @ M.T
        exit_w = (block_w.sum(axis=1) - np.diag(block_w)) / total
        p_c = (M @ s) / total
        L = float(plogp([exit_w.sum()])[0] - 2 * plogp(exit_w).sum() + node_term + plogp(exit_w + p_c).sum())
        best_q = max(best_q, q)
        best_l = min(best_l, L)
    return best_q, best_l


def test_criterion_03_exhaustive_optimality(criterion):
    rnd = random.Random(7)
    t0 = time.perf_counter()
    q_pass = l_pass = 0
    gaps = []
    for trial in range(20):
        n = rnd.randint(4, 8)
        nodes, edges = oracles.random_weighted_graph(rnd, n, rnd.uniform(0.25, 0.7))
        if not edges:
            edges[(nodes[0], nodes[1])] = rnd.randint(1, 20)
        g = Hpdn.from_edges([(a, b, w) for (a, b), w in edges.items()], nodes=nodes)
        best_q, best_l = _exhaustive_optima(g)
        q = modularity(g, louvain(g, seed=trial))
        L = map_equation(g, infomap(g, seed=trial))
        q_gap, l_gap = best_q - q, L - best_l
        q_pass += q_gap <= 1e-9
        l_pass += l_gap <= 1e-9
        if q_gap > 1e-9 or l_gap > 1e-9:
            gaps.append((trial, g.n, round(q_gap, 12), round(l_gap, 12)))
    elapsed = time.perf_counter() - t0
    for trial, n, qg, lg in gaps:
        print(f"graph {trial} (n={n}): modularity gap {qg}, map-equation gap {lg}")
    ok = q_pass >= 18 and l_pass >= 18 and elapsed < 60
    criterion(3, ok, f"louvain {q_pass}/20, infomap {l_pass}/20 at optimum, {elapsed:.1f}s; gaps {gaps}")
    assert q_pass >= 18, gaps
    assert l_pass >= 18, gaps
    assert elapsed < 60


def test_criterion_04_planted_recovery(criterion):
    t0 = time.perf_counter()
    perfect = {a: 0 for a in Algorithm}
    slpa_good = 0
    for seed in range(10):
        flows, truth = generate(PlantedConfig(n_communities=4, community_size=16,
                                              mean_internal_flow=50, mean_external_flow=1, seed=seed))
        g = build_hpdn(flows)
        for algo in Algorithm:
            p = detect(g, DetectConfig(algorithm=algo, seed=seed))
            ari = partition_similarity(p, truth)
            perfect[algo] += ari == 1.0
            if algo is Algorithm.Slpa:
                slpa_good += ari >= 0.9
    elapsed = time.perf_counter() - t0
    ok = (all(perfect[a] >= 9 for a in (Algorithm.Louvain, Algorithm.Infomap, Algorithm.BlockModel))
          and slpa_good >= 8 and elapsed < 60)
    detail = ", ".join(f"{a.value} {perfect[a]}/10" for a in Algorithm) + f", slpa ARI>=0.9 {slpa_good}/10, {elapsed:.1f}s"
    criterion(4, ok, detail)
    for a in (Algorithm.Louvain, Algorithm.Infomap, Algorithm.BlockModel):
        assert perfect[a] >= 9, detail
    assert slpa_good >= 8, detail
    assert elapsed < 60


def test_criterion_05_heterogeneity_ordering(criterion):
    counts = {a: [] for a in (Algorithm.Slpa, Algorithm.Infomap, Algorithm.Louvain)}
    for seed in range(10):
        flows, _ = generate(PlantedConfig(n_communities=8, community_size=20,
                                          mean_internal_flow=10, mean_external_flow=3, seed=seed))
        g = build_hpdn(flows)
        for algo in counts:
            counts[algo].append(detect(g, DetectConfig(algorithm=algo, seed=seed)).n_communities)
    med = {a: statistics.median(v) for a, v in counts.items()}
    ok = med[Algorithm.Slpa] > med[Algorithm.Infomap] > med[Algorithm.Louvain]
    detail = ", ".join(f"{a.value} median N_C {med[a]}" for a in counts)
    criterion(5, ok, detail)
    assert med[Algorithm.Slpa] > med[Algorithm.Infomap] > med[Algorithm.Louvain], counts


@pytest.mark.chhs
def test_criterion_06_chhs_ed_only_2018(criterion):
    root = Path(os.environ["HPDN_CHHS_DIR"])
    cmap_path = root / "columns.json"
    cmap = ColumnMap(**json.loads(cmap_path.read_text())) if cmap_path.exists() else ColumnMap()
    with open(root / "discharges.csv", newline="", encoding="utf-8-sig") as fh:
        records = parse_discharges(fh, cmap)
    kept, excluded = filter_records(records)
    mapped = apply_crosswalk(kept, Crosswalk.load(root / "crosswalk.csv"), "drop")
    flows = aggregate_flows(mapped.records, DischargeType.EDOnly, 2018,
                            [e.record for e in excluded] + mapped.dropped)
    g = build_hpdn(flows)
    st = stats(g)
    published = {"n": 1.76e3, "m": 1.42e5, "w": 1.14e7, "rho": 9.17e-2}
    stat_ok = all(abs(getattr(st, k) - v) <= 0.02 * v for k, v in published.items())
    lv = evaluate_partition(flows, g, louvain(g, seed=0), B=1000, seed=0)
    im = evaluate_partition(flows, g, infomap(g, seed=0), B=1000, seed=0)
    lv_ok = 18 <= lv.n_communities <= 32 and lv.li_mean >= 0.85
    im_ok = (im.li_mean > im.conductance_mean and abs(im.li_mean - 0.84) <= 0.1
             and abs(im.conductance_mean - 0.15) <= 0.1)
    detail = (f"n={st.n} m={st.m} w={st.w:.3g} rho={st.rho:.3g}; louvain N_C={lv.n_communities} "
              f"<li>={lv.li_mean:.2f}; infomap <li>={im.li_mean:.2f} <c>={im.conductance_mean:.2f}")
    criterion(6, stat_ok and lv_ok and im_ok, detail)
    assert stat_ok and lv_ok and im_ok, detail


def _test_graphs():
    rnd = random.Random(99)
    out = []
    for i in range(30):
        raw = _random_flows(rnd, rnd.randint(2, 10), self_flows=i % 2 == 0)
        out.append(FlowTable(None, None, raw))
    flows, _ = generate(PlantedConfig(seed=1))
    out.append(flows)
    out.append(FlowTable(None, None, {("a", "b"): 1, ("b", "c"): 1, ("c", "a"): 1,
                                      ("d", "e"): 1, ("e", "f"): 1, ("f", "d"): 1}))
    return out


def test_criterion_07_degeneracy_endpoints(criterion):
    bad = []
    checked_singletons = 0
    for i, flows in enumerate(_test_graphs()):
        g = build_hpdn(flows)
        whole = Partition.whole(g.nodes)
        rep = evaluate_partition(flows, g, whole, B=10, seed=0)
        m = rep.per_community[0]
        if not (m.li == 1.0 and m.conductance == 0.0):
            bad.append((i, "whole", m))
        if not g.loops.any():
            checked_singletons += 1
            singles = Partition.singletons(g.nodes)
            for c in range(singles.n_communities):
                if conductance(g, singles, c) != 1.0:
                    bad.append((i, "singleton", c))
    criterion(7, not bad, f"{len(_test_graphs())} graphs, {checked_singletons} loopless singleton checks")
    assert not bad, bad[:5]


def test_criterion_08_bootstrap(criterion):
    means, stds = [], []
    for seed in range(50):
        m, s = bootstrap_summary([1, 2, 3], B=1000, seed=seed)
        means.append(m)
        stds.append(s)
    grand, mean_std = float(np.mean(means)), float(np.mean(stds))
    target = math.sqrt(2 / 9)
    ok = abs(grand - 2.0) <= 0.05 and abs(mean_std - target) <= 0.2 * target
    criterion(8, ok, f"grand mean {grand:.4f}, mean std {mean_std:.4f} vs {target:.4f}")
    assert abs(grand - 2.0) <= 0.05
    assert abs(mean_std - target) <= 0.2 * target


def _pipeline(workdir: Path, jobs: int) -> None:
    env = dict(os.environ, HPDN_SEED="11", OMP_NUM_THREADS=str(jobs), OPENBLAS_NUM_THREADS=str(jobs))

    def run(*args):
        proc = subprocess.run([sys.executable, "-m", "hpdn.cli", *args], cwd=workdir, env=env,
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        return proc.stdout

    workdir.mkdir()
    run("synth", "--communities", "4", "--size", "12", "--internal", "20", "--external", "2", "--out", "synth")
    run("build", "synth/discharges.csv", "synth/crosswalk.csv", "--type", "ED Only", "--year", "2018",
        "--out", "net")
    run("detect", "net/edges.tsv", "--algo", "all", "--jobs", str(jobs), "--sbm-sweeps", "20", "--out", "detect")
    for algo in ("louvain", "infomap", "sbm", "slpa"):
        run("evaluate", "net/flows.csv", "net/edges.tsv", f"detect/partition-{algo}.csv",
            "--B", "200", "--out", f"reports/{algo}.json")
    table = run("compare", "reports/louvain.json", "reports/infomap.json", "reports/sbm.json",
                "reports/slpa.json", "--out", "reports/compare.csv")
    (workdir / "compare.txt").write_text(table)


def _tree(root: Path):
    return sorted(p.relative_to(root) for p in root.rglob("*") if p.is_file())


def test_criterion_09_determinism(criterion, tmp_path):
    _pipeline(tmp_path / "a", jobs=1)
    _pipeline(tmp_path / "b", jobs=1)
    _pipeline(tmp_path / "c", jobs=8)
    files = _tree(tmp_path / "a")
    diffs = []
    for other in ("b", "c"):
        if _tree(tmp_path / other) != files:
            diffs.append((other, "file sets differ"))
            continue
        for rel in files:
            if not filecmp.cmp(tmp_path / "a" / rel, tmp_path / other / rel, shallow=False):
                diffs.append((other, str(rel)))
    criterion(9, not diffs, f"{len(files)} files compared across 3 runs (jobs 1, 1, 8)")
    assert not diffs, diffs


def test_criterion_10_directed_li(criterion):
    flows = FlowTable(None, None, {("A", "B"): 10})
    g = build_hpdn(flows)
    p = Partition(["A", "B"], [0, 1])
    li_a = localization_index(flows, p, p["A"])
    with pytest.raises(NoResidentDischarges):
        localization_index(flows, p, p["B"])
    report = evaluate_partition(flows, g, p, B=10, seed=0)
    flagged = report.per_community[p["B"]].li is None and report.undefined_li_count == 1
    criterion(10, li_a == 0.0 and flagged, f"LI(A)={li_a}, LI(B) flagged={flagged}")
    assert li_a == 0.0
    assert flagged
