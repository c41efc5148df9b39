import json
import math
import random
from fractions import Fraction

import numpy as np
import pytest

import oracles
from hpdn.cli import validate_report
from hpdn.errors import EmptyValues, NoResidentDischarges, PartitionMismatch, ZeroStrength
from hpdn.evaluate import (
    bootstrap_summary, community_discharges, conductance, evaluate_partition, localization_index,
)
from hpdn.graph import Hpdn
from hpdn.ingest import DischargeType, FlowTable, build_hpdn
from hpdn.partition import Partition
from hpdn.synth import PlantedConfig, generate

WORKED = FlowTable(None, None, {
    ("z1", "z1"): 10, ("z1", "z3"): 5, ("z2", "z1"): 20, ("z3", "z3"): 8, ("z3", "z1"): 2,
})
WORKED_P = Partition.from_mapping({"z1": "A", "z2": "A", "z3": "B"})


def test_worked_localization_and_discharges():
    a = WORKED_P["z1"]
    assert localization_index(WORKED, WORKED_P, a) == 30 / 35
    assert community_discharges(WORKED, WORKED_P, a) == 35
    b = WORKED_P["z3"]
    assert localization_index(WORKED, WORKED_P, b) == 8 / 10


def test_li_uses_direction():
    flows = FlowTable(None, None, {("A", "B"): 10})
    p = Partition(["A", "B"], [0, 1])
    assert localization_index(flows, p, p["A"]) == 0.0
    # B has no residents at all
    with pytest.raises(NoResidentDischarges):
        localization_index(flows, p, p["B"])
    assert community_discharges(flows, p, p["B"]) == 0


def test_conductance_closed_form():
    g = Hpdn.from_edges([("1", "2", 4), ("2", "3", 1)])
    p = Partition(["1", "2", "3"], [0, 0, 1])
    assert conductance(g, p, 0) == pytest.approx(1 / 9, rel=1e-15)
    assert conductance(g, p, 1) == 1.0
    assert conductance(g, Partition.whole(g.nodes), 0) == 0.0


def test_conductance_self_loop_counts_once():
    g = Hpdn.from_edges([("a", "a", 3), ("a", "b", 1)])
    p = Partition(["a", "b"], [0, 1])
    assert conductance(g, p, p["a"]) == pytest.approx(1 / 4)
    want = oracles.conductance(["a", "b"], {("a", "a"): 3, ("a", "b"): 1}, [0, 1], 0)
    assert conductance(g, p, p["a"]) == float(want)


def test_zero_strength_and_bad_community():
    g = Hpdn.from_edges([("a", "b", 1)], nodes=["c"])
    p = Partition(["a", "b", "c"], [0, 0, 1])
    with pytest.raises(ZeroStrength):
        conductance(g, p, 1)
    with pytest.raises(KeyError):
        conductance(g, p, 7)


def test_flows_outside_partition_named():
    with pytest.raises(PartitionMismatch, match="z3"):
        localization_index(WORKED, Partition(["z1", "z2"], [0, 1]), 0)


def test_bootstrap_singleton():
    for B in (1, 2, 50):
        assert bootstrap_summary([5], B=B, seed=3) == (5.0, 0.0)


def test_bootstrap_three_values():
    sample_sd = float(np.std([1, 2, 3], ddof=1))
    for seed in range(5):
        mean, sd = bootstrap_summary([1, 2, 3], B=1000, seed=seed)
        assert abs(mean - 2.0) <= 2 * sd / math.sqrt(1000)
        assert abs(sd - sample_sd / math.sqrt(3)) <= 0.2 * sample_sd / math.sqrt(3)


def test_bootstrap_errors_and_determinism():
    with pytest.raises(EmptyValues):
        bootstrap_summary([])
    with pytest.raises(ValueError):
        bootstrap_summary([1.0], B=0)
    assert bootstrap_summary([1, 4, 9], seed=11) == bootstrap_summary([1, 4, 9], seed=11)


def test_report_one_community():
    g = build_hpdn(WORKED)
    rep = evaluate_partition(WORKED, g, Partition.whole(g.nodes), B=20, seed=1)
    assert rep.n_communities == 1
    assert rep.li_mean == 1.0 and rep.conductance_mean == 0.0
    assert rep.discharges_mean == WORKED.total
    assert rep.li_std == 0.0


def test_report_counts_undefined():
    flows = FlowTable(None, None, {("A", "B"): 10})
    g = Hpdn.from_edges([("A", "B", 10)], nodes=["C"])
    p = Partition(["A", "B", "C"], [0, 1, 2])
    rep = evaluate_partition(flows, g, p, B=10)
    assert rep.undefined_li_count == 2  # B and C have no residents
    assert rep.undefined_conductance_count == 1  # C is isolated
    assert rep.li_mean == 0.0
    assert rep.conductance_mean == 1.0
    assert [m.li for m in rep.per_community] == [0.0, None, None]


def test_report_json_validates():
    flows, truth = generate(PlantedConfig(seed=3, n_communities=4, community_sizes=[5, 6, 7, 8]))
    flows = FlowTable(DischargeType.EDOnly, 2018, flows.entries)
    rep = evaluate_partition(flows, build_hpdn(flows), truth, B=50, seed=9, algorithm="truth")
    doc = json.loads(rep.to_json())
    validate_report(doc, "report")
    assert doc["n_communities"] == 4 and len(doc["per_community"]) == 4
    assert doc["algorithm"] == "truth" and doc["year"] == 2018
    assert doc["discharge_type"] == DischargeType.EDOnly.value


def test_seed_changes_only_bootstrap():
    flows, truth = generate(PlantedConfig(seed=1))
    g = build_hpdn(flows)
    a = evaluate_partition(flows, g, truth, B=30, seed=1)
    b = evaluate_partition(flows, g, truth, B=30, seed=2)
    assert a.per_community == b.per_community
    assert a.li_std != b.li_std


def test_discharge_totals_partition_the_flows():
    flows, truth = generate(PlantedConfig(seed=4, mean_external_flow=3.0))
    assert sum(community_discharges(flows, truth, c) for c in range(truth.n_communities)) == flows.total


def test_exact_against_fraction_oracle():
    rnd = random.Random(8)
    nodes = [f"z{i}" for i in range(7)]
    entries = {(a, b): rnd.randint(0, 9) for a in nodes for b in nodes if rnd.random() < 0.4}
    flows = FlowTable(None, None, entries)
    p = Partition(flows.zctas, [rnd.randint(0, 2) for _ in flows.zctas])
    assignment = {z: p[z] for z in p.nodes}
    for c in range(p.n_communities):
        want = oracles.localization_index(flows.entries, assignment, c)
        if want is None:
            with pytest.raises(NoResidentDischarges):
                localization_index(flows, p, c)
        else:
            assert Fraction(localization_index(flows, p, c)) == pytest.approx(want, rel=1e-15)


def test_truth_beats_random_partition():
    for seed in range(10):
        flows, truth = generate(PlantedConfig(seed=seed, mean_external_flow=3.0))
        g = build_hpdn(flows)
        rng = np.random.default_rng(seed)
        labels = rng.permutation(truth.membership)  # same N_C and sizes
        shuffled = Partition(list(truth.nodes), labels.tolist())
        t = evaluate_partition(flows, g, truth, B=50, seed=seed)
        r = evaluate_partition(flows, g, shuffled, B=50, seed=seed)
        assert t.li_mean > r.li_mean
