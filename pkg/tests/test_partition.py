import io

import pytest

from hpdn.errors import MalformedRow, MissingColumn, PartitionMismatch
from hpdn.partition import Partition, canonical_labels


def test_canonical_labels():
    assert canonical_labels(["x", "y", "x", "z"]).tolist() == [0, 1, 0, 2]


def test_relabeling_compares_equal():
    p = Partition(["b", "a", "c"], [7, 7, 3])
    q = Partition(["a", "b", "c"], ["u", "u", "v"])
    assert p == q and hash(p) == hash(q)
    assert p.nodes == ("a", "b", "c")
    assert p.membership.tolist() == [0, 0, 1]


def test_membership_is_read_only():
    p = Partition(["a"], [0])
    with pytest.raises(ValueError):
        p.membership[0] = 1


def test_duplicates_rejected():
    with pytest.raises(ValueError):
        Partition(["a", "a"], [0, 1])


def test_communities_and_sizes():
    p = Partition.from_mapping({"c": 1, "a": 0, "b": 1})
    assert p.communities() == [["a"], ["b", "c"]]
    assert p.sizes().tolist() == [1, 2]
    assert p.n_communities == 2


def test_names_follow_canonical_ids():
    p = Partition(["a", "b"], ["T2", "T1"], names={"T1": "Oakland", "T2": "Berkeley"})
    assert p.names == ("Berkeley", "Oakland")


def test_aligned_reports_mismatch():
    p = Partition(["a", "b"], [0, 1])
    assert p.aligned(["b", "a"]).tolist() == [1, 0]
    with pytest.raises(PartitionMismatch, match="'c'"):
        p.aligned(["a", "c"])


def test_csv_roundtrip(tmp_path):
    p = Partition(["z2", "z1", "z3"], [5, 5, 9])
    path = tmp_path / "p.csv"
    p.write_csv(path)
    assert path.read_text() == "zcta,community_id\nz1,0\nz2,0\nz3,1\n"
    assert Partition.read_csv(path) == p


def test_csv_errors():
    with pytest.raises(MissingColumn):
        Partition.read_csv(io.StringIO("zcta,cid\na,1\n"))
    with pytest.raises(MalformedRow, match="duplicate"):
        Partition.read_csv(io.StringIO("zcta,community_id\na,1\na,2\n"))
