import io
from collections import deque
from fractions import Fraction

import pytest

from powersched.core_types import (Demand, Edge, JobOnProcessor, Processor, RoutingInstance,
                                   SchedulingInstance, SchemaError, dumps, load, loads, save, validate)


def minimal():
    return SchedulingInstance.single_processor([(0, 1, 1)], alpha=2)


def bfs_reachable(edges, s):
    seen, q = {s}, deque([s])
    while q:
        u = q.popleft()
        for a, b in edges:
            if a == u and b not in seen:
                seen.add(b)
                q.append(b)
    return seen


def test_minimal_instance_is_valid():
    assert validate(minimal()) == []


def test_empty_window_is_reported():
    inst = SchedulingInstance.single_processor([(2, 2, 1)], alpha=2)
    msgs = [v.message for v in validate(inst)]
    assert "empty window" in msgs


def test_infinite_work_window_not_checked_but_job_needs_one_finite():
    procs = (Processor(0, 2.0), Processor(1, 3.0))
    row = (JobOnProcessor(Fraction(0), Fraction(1), Fraction(1)), JobOnProcessor(Fraction(5), Fraction(5), None))
    assert validate(SchedulingInstance(procs, (row,))) == []
    bad = (JobOnProcessor(Fraction(0), Fraction(1), None),) * 2
    assert any("infinite" in v.message for v in validate(SchedulingInstance(procs, (bad,))))


def test_unreachable_demand_matches_bfs():
    edges = [("a", "b"), ("b", "c"), ("d", "c")]
    inst = RoutingInstance(("a", "b", "c", "d"),
                           tuple(Edge(u, v, Fraction(1), 2.0) for u, v in edges),
                           (Demand("a", "c"), Demand("a", "d")))
    violations = validate(inst)
    expected_bad = [k for k, (s, t) in enumerate([("a", "c"), ("a", "d")]) if t not in bfs_reachable(edges, s)]
    assert [v.path for v in violations] == [f"demands[{k}]" for k in expected_bad]
    assert all(v.message == "no path from source to destination" for v in violations)


def test_undirected_routing_reaches_backwards():
    inst = RoutingInstance((0, 1), (Edge(0, 1, Fraction(1), 2.0),), (Demand(1, 0),), directed=False)
    assert validate(inst) == []


def test_round_trip_minimal():
    inst = minimal()
    assert loads(dumps(inst)) == inst


def test_rational_round_trip_is_exact(tmp_path):
    inst = SchedulingInstance.single_processor([("1/3", "7/3", "2/7")], alpha=2.5)
    path = tmp_path / "x.json"
    save(inst, path)
    back = load(path)
    assert back == inst
    assert back.jobs[0][0].release == Fraction(1, 3)
    assert '"1/3"' in path.read_text()


def test_missing_alpha_names_field():
    text = dumps(minimal()).replace('"alpha": 2.0,', "")
    with pytest.raises(SchemaError, match=r"processors\[0\]\.alpha"):
        loads(text)


def test_schema_mismatch_and_parse_error():
    with pytest.raises(SchemaError, match="schema version"):
        loads(dumps(minimal()).replace("powersched/1", "powersched/0"))
    with pytest.raises(SchemaError, match="line 2"):
        loads('{\n  "schema": ,\n}')


def test_canonical_serialization():
    a = SchedulingInstance.single_processor([("2/4", 1, 1)], alpha=2)
    b = SchedulingInstance.single_processor([(Fraction(1, 2), "1", 1)], alpha=2)
    assert dumps(a) == dumps(b)
    buf = io.StringIO()
    save(a, buf)
    assert buf.getvalue() == dumps(a)


def test_validate_is_total_on_odd_data():
    procs = (Processor(3, 0.5),)
    inst = SchedulingInstance(procs, ((JobOnProcessor(Fraction(-1), Fraction(-2), Fraction(-1)),), ()))
    paths = {v.path for v in validate(inst)}
    assert "processors[0].id" in paths and "processors[0].alpha" in paths and "jobs[1]" in paths
