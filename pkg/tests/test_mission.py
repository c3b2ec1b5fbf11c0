import json

import networkx as nx
import numpy as np
import pytest
from hypothesis import given

from reconplan import (Mission, MissionError, MultiPlan, Plan, load_mission, load_plans, make_hardness_instance,
                       make_path_instance, save_mission, save_plans, validate_mission, validate_plan)
from reconplan import library
from reconplan.mission import hardness_threshold

from .conftest import missions


def test_bundled_instances_are_valid():
    for name in library.manifest():
        m = library.mission(name)
        assert validate_mission(m) is None
        for plans in library.manifest()[name]["plans"]:
            for plan in library.plan(name, plans):
                assert validate_plan(m, plan) is None


def test_k10_matrix_is_symmetric_with_probabilities_on_the_diagonal(k10):
    mat = k10.matrix()
    assert mat.shape == (10, 10)
    assert np.array_equal(mat, mat.T)
    assert np.array_equal(np.diag(mat), k10.p)
    assert k10.p[0] == 1.0 and k10.w[0] == 0.0
    # complete graph
    assert len(k10.edges) == 45


def test_fig1_structure(fig1):
    assert fig1.n == 4
    assert fig1.edges == {(0, 1): 0.6, (0, 2): 0.9, (0, 3): 0.6, (1, 2): 0.3, (1, 3): 0.1, (2, 3): 0.9}
    assert list(fig1.p) == [1.0, 0.9, 0.5, 0.1]
    assert fig1.total_weight == 3.0


@pytest.mark.parametrize("change, message", [
    (lambda q, p, w: p.__setitem__(0, 0.9), "base transmission probability must be 1"),
    (lambda q, p, w: w.__setitem__(0, 1.0), "base information value must be 0"),
    (lambda q, p, w: p.__setitem__(2, 1.5), "transmission probabilities must lie in [0, 1]"),
    (lambda q, p, w: w.__setitem__(1, -1.0), "information values must be finite and non-negative"),
    (lambda q, p, w: q.__setitem__((0, 1), 0.5), "crossing probabilities must be symmetric"),
])
def test_validate_mission_reports_violations(fig1, change, message):
    q, p, w = fig1.q.copy(), fig1.p.copy(), fig1.w.copy()
    change(q, p, w)
    assert validate_mission(Mission(q=q, p=p, w=w)) == message


def test_disconnected_mission():
    m = Mission.from_edges(4, {(0, 1): 0.5, (2, 3): 0.5}, [1, 1, 1, 1], [0, 1, 1, 1])
    assert validate_mission(m) == "graph not connected"


def test_from_edges_rejects_self_loops_and_parallel_edges():
    with pytest.raises(MissionError, match="self-loop"):
        Mission.from_edges(2, {(1, 1): 0.5}, [1, 1], [0, 1])
    with pytest.raises(MissionError, match="parallel"):
        Mission.from_edges(2, {(0, 1): 0.5, (1, 0): 0.4}, [1, 1], [0, 1])


def test_from_matrix_rejects_asymmetry():
    with pytest.raises(MissionError, match="symmetric"):
        Mission.from_matrix([[1, 0.5], [0.4, 1]], [0, 1])


def test_mission_arrays_are_read_only(fig1):
    with pytest.raises(ValueError):
        fig1.q[0, 1] = 0.0


@pytest.mark.parametrize("plan, message", [
    (Plan((0, 1, 0), (0, 0, 0)), "final send must be 1"),
    (Plan((0, 1, 0), (1, 0, 1)), "first send must be 0"),
    (Plan((0, 1), (0, 1)), "route must start and end at the base"),
    (Plan((0, 1, 0), (0, 1)), "route and send must have equal length"),
    (Plan((0, 7, 0), (0, 0, 1)), "route contains an unknown vertex"),
    (Plan((0, 1, 0), (0, 2, 1)), "send entries must be 0 or 1"),
    (Plan((), ()), "route must not be empty"),
])
def test_validate_plan_reports_violations(fig1, plan, message):
    assert validate_plan(fig1, plan) == message


def test_validate_plan_missing_edge():
    m = make_path_instance(3)
    assert validate_plan(m, Plan((0, 2, 0), (0, 0, 1))) == "no edge between 0 and 2"


def test_trivial_and_repeating_plans_are_valid(fig1):
    assert validate_plan(fig1, Plan((0,), (1,))) is None
    assert validate_plan(fig1, Plan((0, 1, 0, 1, 0), (0, 1, 0, 0, 1))) is None


@given(missions())
def test_mission_round_trips_through_json(tmp_path_factory, m):
    path = tmp_path_factory.mktemp("m") / "m.json"
    save_mission(m, path)
    back = load_mission(path)
    assert np.array_equal(back.q, m.q) and np.array_equal(back.p, m.p) and np.array_equal(back.w, m.w)


def test_plan_files(tmp_path, fig1):
    single = Plan((0, 2, 0), (0, 0, 1))
    save_plans(single, tmp_path / "a.json")
    assert json.loads((tmp_path / "a.json").read_text()) == {"route": [0, 2, 0], "send": [0, 0, 1]}
    assert load_plans(tmp_path / "a.json") == MultiPlan((single,))
    multi = MultiPlan((single, Plan((0,), (1,))))
    save_plans(multi, tmp_path / "b.json")
    assert load_plans(tmp_path / "b.json") == multi
    (tmp_path / "c.json").write_text("[]")
    with pytest.raises(MissionError):
        load_plans(tmp_path / "c.json")
    (tmp_path / "d.json").write_text('{"route": [0]}')
    with pytest.raises(MissionError, match="missing field"):
        load_plans(tmp_path / "d.json")


def test_mission_file_dimension_mismatch(tmp_path):
    (tmp_path / "m.json").write_text(json.dumps({"n": 3, "matrix": [[1, 0.5], [0.5, 1]], "w": [0, 1]}))
    with pytest.raises(MissionError, match="dimensions"):
        load_mission(tmp_path / "m.json")


def test_path_instance():
    m = make_path_instance(4)
    assert m.edges == {(0, 1): 0.5, (1, 2): 0.5, (2, 3): 0.5}
    assert list(m.p) == [1, 0, 0, 0]
    assert list(m.w) == [0, 1, 1, 1]
    assert validate_mission(m) is None


def test_hardness_instance_on_a_four_cycle():
    m, r = make_hardness_instance(nx.cycle_graph(4), 0.5)
    # 0.5 + 0.25 + 0.125: a Hamiltonian path delivers one unit per crossing
    assert r == pytest.approx(0.875, abs=1e-15)
    assert np.all(m.p == 1.0)
    assert list(m.w) == [0, 1, 1, 1]
    assert set(m.edges.values()) == {0.5}


def test_hardness_threshold_is_a_geometric_sum():
    for n in range(2, 9):
        for q in (0.1, 0.5, 0.9):
            assert hardness_threshold(q, n) == pytest.approx(sum(q**k for k in range(1, n)), rel=1e-12)


def test_hardness_instance_needs_labelled_vertices():
    with pytest.raises(MissionError):
        make_hardness_instance([(1, 2), (2, 3)], 0.5)
    with pytest.raises(MissionError):
        make_hardness_instance(nx.path_graph(3), 1.0)
