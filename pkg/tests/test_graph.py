import numpy as np
import pytest
from hypothesis import given, strategies as st

from uagpnm.errors import ContractError, IdempotencyError, ParseError, ValidationError
from uagpnm.graph import (UNBOUNDED, DataGraph, Kind, PathBound, PatternGraph, Target, Update,
                          UpdateBatch, apply_update, batch_problems, dump_edge_list, dump_labels,
                          dump_pattern, inverse, load_data_graph, load_pattern_graph, parse_updates,
                          validate_batch)
from uagpnm.worked import TEAM_EDGES, TEAM_IDS, team_graph, team_pattern, team_updates


def D(kind, u, v=None):
    if kind == "+E":
        return Update.insert_edge(Target.DATA, u, v)
    if kind == "-E":
        return Update.delete_edge(Target.DATA, u, v)
    if kind == "+N":
        return Update.insert_node(Target.DATA, u, v)
    return Update.delete_node(Target.DATA, u)


# ---------------------------------------------------------------- bounds

def test_path_bound_parse_and_allow():
    assert PathBound.parse("3").k == 3
    assert PathBound.parse("*") == UNBOUNDED
    assert PathBound(2).allows(2) and not PathBound(2).allows(3)
    assert UNBOUNDED.allows(10**6)
    assert str(UNBOUNDED) == "*"


@pytest.mark.parametrize("token", ["0", "-2"])
def test_path_bound_rejects_non_positive(token):
    with pytest.raises(ValidationError):
        PathBound.parse(token)


def test_path_bound_rejects_garbage():
    with pytest.raises(ParseError):
        PathBound.parse("two")


# ---------------------------------------------------------------- updates

def test_update_shape_checks():
    with pytest.raises(ValidationError):
        Update.insert_edge(Target.PATTERN, 0, 1)  # pattern edge needs a bound
    with pytest.raises(ValidationError):
        Update.insert_edge(Target.DATA, 0, 1, 2)  # data edge has none
    with pytest.raises(ValidationError):
        Update.insert_edge(Target.DATA, 3, 3)
    with pytest.raises(ValidationError):
        Update.insert_node(Target.PATTERN, 0, ["A", "B"])
    with pytest.raises(ValidationError):
        Update.insert_node(Target.DATA, 0, [])


def test_update_equality_ignores_ordinal():
    a = Update.insert_edge(Target.DATA, 1, 2, ordinal=0)
    b = Update.insert_edge(Target.DATA, 1, 2, ordinal=7)
    assert a == b and hash(a) == hash(b)


def test_update_line_round_trip():
    batch = UpdateBatch([
        Update.insert_edge(Target.PATTERN, 0, 3, 2),
        Update.insert_edge(Target.PATTERN, 1, 3, UNBOUNDED),
        Update.delete_edge(Target.DATA, 4, 5),
        Update.insert_node(Target.DATA, 9, ["A", "B"]),
        Update.delete_node(Target.PATTERN, 2),
    ])
    again = parse_updates(batch.to_text())
    assert list(again) == list(batch)
    assert [u.ordinal for u in again] == list(range(5))


@pytest.mark.parametrize("line", ["X +E 1 2", "D ?E 1 2", "D +E 1", "P +E 1 2", "D -N 1 2", "D +N 1"])
def test_parse_updates_rejects(line):
    with pytest.raises((ParseError, ValidationError)):
        parse_updates(line)


def test_parse_updates_reports_line_number():
    with pytest.raises(ParseError) as exc:
        parse_updates("# header\nD +E 1 2\nD +E x 2\n")
    assert exc.value.lineno == 3


# ---------------------------------------------------------------- annihilation

def test_insert_then_delete_cancels():
    b = UpdateBatch([D("+E", 1, 2), D("-E", 1, 2), D("+E", 3, 4)])
    assert len(b) == 1 and b.annihilated == 2


def test_data_delete_then_reinsert_cancels():
    b = UpdateBatch([D("-E", 1, 2), D("+E", 1, 2)])
    assert len(b) == 0


def test_pattern_delete_then_reinsert_is_kept():
    b = UpdateBatch([Update.delete_edge(Target.PATTERN, 0, 1), Update.insert_edge(Target.PATTERN, 0, 1, 3)])
    assert len(b) == 2 and b.annihilated == 0


def test_node_pair_drops_updates_in_between():
    b = UpdateBatch([D("+N", 9, "A"), D("+E", 9, 1), D("+E", 2, 3), D("-N", 9)])
    assert list(b) == [D("+E", 2, 3)]
    assert b.annihilated == 3


# ---------------------------------------------------------------- data graph

def test_data_graph_basics():
    g = team_graph()
    assert len(g) == 8 and g.n_edges == len(TEAM_EDGES)
    assert g.nodes_with_label("SE") == {TEAM_IDS["SE_1"], TEAM_IDS["SE_2"]}
    with pytest.raises(IdempotencyError):
        g.add_edge(TEAM_IDS["PM_1"], TEAM_IDS["SE_2"])
    with pytest.raises(ValidationError):
        g.add_edge(0, 99)
    with pytest.raises(ValidationError):
        g.add_node(20, [])


def test_retired_ids_cannot_return():
    g = team_graph()
    g.remove_node(0)
    assert g.capacity == 8 and 0 in g.retired
    with pytest.raises(IdempotencyError):
        g.add_node(0, "PM")


def test_edge_list_and_label_round_trip():
    g = team_graph()
    again = load_data_graph(dump_edge_list(g), dump_labels(g), strict=True)
    assert again == g


def test_loader_defaults_and_strict():
    g = load_data_graph("0 1\n1 2\n1 2\n2 2\n", "0 A\n")
    assert g.labels[2] == frozenset(["UNK"])
    assert g.duplicate_edges == 1 and g.self_loops == 1 and g.n_edges == 2
    with pytest.raises(ValidationError):
        load_data_graph("0 1\n", "0 A\n", strict=True)


@pytest.mark.parametrize("edges,labels", [("0 1 2\n", ""), ("a b\n", ""), ("0 1\n", "0\n"),
                                          ("0 1\n", "0 A\n0 B\n"), ("-1 2\n", "")])
def test_loader_rejects(edges, labels):
    with pytest.raises(ParseError):
        load_data_graph(edges, labels)


def _csr_adjacency(g):
    indptr, indices = g.csr()
    alive = g.alive_mask()
    out = {}
    for u in g.nodes:
        row = indices[indptr[u]:indptr[u + 1]]
        out[u] = {int(v) for v in row if v != u and alive[v]}
    return out


@given(st.lists(st.tuples(st.sampled_from(["+E", "-E", "+N", "-N"]), st.integers(0, 14), st.integers(0, 14)),
                max_size=40))
def test_csr_tracks_mutations(ops):
    g = DataGraph.from_edges({i: "A" for i in range(6)}, [(0, 1), (1, 2), (2, 0), (3, 4)])
    g.csr()
    snapshot = g.copy()
    for kind, a, b in ops:
        try:
            if kind == "+E":
                g.add_edge(a, b)
            elif kind == "-E":
                g.remove_edge(a, b)
            elif kind == "+N":
                g.add_node(a, "A")
            else:
                g.remove_node(a)
        except (IdempotencyError, ValidationError):
            pass
    assert _csr_adjacency(g) == {u: set(vs) for u, vs in g.succ.items()}
    # copies share arrays until written; the snapshot must be unaffected
    assert _csr_adjacency(snapshot) == {u: set(vs) for u, vs in snapshot.succ.items()}


def test_subgraph_keeps_ids():
    g = team_graph()
    sub = g.subgraph([2, 3, 5])
    assert set(sub.nodes) == {2, 3, 5}
    assert sub.edge_set() == {(2, 3), (3, 5), (5, 3)}


# ---------------------------------------------------------------- pattern graph

def test_pattern_text_round_trip():
    p = team_pattern()
    p.add_edge(2, 3, UNBOUNDED)
    assert load_pattern_graph(dump_pattern(p)) == p


@pytest.mark.parametrize("text,err", [
    ("node 0 A\nnode 0 B\n", ValidationError),
    ("node 0 A\nedge 0 1 2\n", ValidationError),
    ("node 0 A\nnode 1 B\nedge 0 1 0\n", ValidationError),
    ("node 0 A\nnode 1 B\nedge 0 1 x\n", ParseError),
    ("vertex 0 A\n", ParseError),
])
def test_pattern_loader_rejects(text, err):
    with pytest.raises(err):
        load_pattern_graph(text)


def test_pattern_remove_node_drops_edges():
    p = team_pattern()
    p.remove_node(1)
    assert set(p.bounds) == {(0, 2)}
    assert not p.is_weakly_connected()


# ---------------------------------------------------------------- apply / inverse / validation

def test_apply_update_rejects_wrong_target():
    with pytest.raises(ContractError):
        apply_update(team_graph(), team_updates()["U_P1"])


def _random_valid_update(rng, g):
    nodes = sorted(g.nodes)
    for _ in range(100):
        kind = rng.choice(["+E", "-E", "+N", "-N"])
        if kind == "+E":
            a, b = rng.sample(nodes, 2)
            if not g.has_edge(a, b):
                return D("+E", a, b)
        elif kind == "-E" and g.n_edges:
            return D("-E", *rng.choice(sorted(g.edge_set())))
        elif kind == "+N":
            return D("+N", g.capacity, "Z")
        elif kind == "-N" and len(nodes) > 2:
            return D("-N", rng.choice(nodes))
    raise AssertionError("no update found")


def test_frame_property(rng):
    """An update changes its own element and nothing else."""
    for _ in range(200):
        g = team_graph()
        up = _random_valid_update(rng, g)
        before_edges, before_nodes = g.edge_set(), dict(g.labels)
        apply_update(g, up)
        if up.kind is Kind.INSERT_EDGE:
            assert g.edge_set() - before_edges == {(up.u, up.v)} and g.labels == before_nodes
        elif up.kind is Kind.DELETE_EDGE:
            assert before_edges - g.edge_set() == {(up.u, up.v)} and g.labels == before_nodes
        elif up.kind is Kind.INSERT_NODE:
            assert g.edge_set() == before_edges and set(g.labels) - set(before_nodes) == {up.u}
        else:
            incident = {e for e in before_edges if up.u in e}
            assert g.edge_set() == before_edges - incident
            assert set(before_nodes) - set(g.labels) == {up.u}


def test_inverse_restores_graph(rng):
    for _ in range(200):
        g = team_graph()
        up = _random_valid_update(rng, g)
        if up.kind is Kind.DELETE_NODE:
            inv = inverse(up, g)
            assert inv.kind is Kind.INSERT_NODE and inv.labels == g.labels[up.u]
            continue
        before = g.copy()
        inv = inverse(up, g)
        apply_update(g, up)
        apply_update(g, inv)
        assert g == before


def test_inverse_of_pattern_edge_delete_restores_bound():
    p = team_pattern()
    up = Update.delete_edge(Target.PATTERN, 0, 1)
    inv = inverse(up, p)
    apply_update(p, up)
    apply_update(p, inv)
    assert p == team_pattern()
    with pytest.raises(ContractError):
        inverse(up)


def test_validate_batch_reports_everything_without_mutation():
    g, p = team_graph(), team_pattern()
    batch = UpdateBatch([D("+E", 0, 3), D("-E", 6, 0), Update.insert_edge(Target.PATTERN, 0, 9, 2)])
    problems = batch_problems(batch, p, g)
    assert len(problems) == 3
    assert "already present" in problems[0]
    assert "not present" in problems[1]
    assert "unknown node 9" in problems[2]
    with pytest.raises(ValidationError):
        validate_batch(batch, p, g)
    assert g == team_graph() and p == team_pattern()


def test_validate_batch_follows_batch_order():
    g, p = team_graph(), team_pattern()
    ok = UpdateBatch([D("+N", 8, "QA"), D("+E", 8, 0), D("-N", 1), D("+E", 0, 2)])
    validate_batch(ok, p, g)
    bad = UpdateBatch([D("-N", 1), D("+E", 1, 0)])
    assert batch_problems(bad, p, g)


def test_csr_is_numpy():
    indptr, indices = team_graph().csr()
    assert indptr.dtype == np.int64 and indptr.size == 9 and indices.size == len(TEAM_EDGES)
