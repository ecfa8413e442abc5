import random

import pytest

import oracles
from conftest import applied, random_instance
from uagpnm.distance import apsp_baseline, update_distances
from uagpnm.elimination import (AffectedSet, CandidateSet, EliminationRelation, RelationKind,
                                _extended_pattern, affected_nodes, batch_affected_sets,
                                batch_candidate_sets, build_eh_tree, candidate_nodes, detect_type1,
                                detect_type2, detect_type3, plan_elimination, type1_relations,
                                type2_relations, type3_relations)
from uagpnm.errors import ContractError
from uagpnm.graph import DataGraph, PatternGraph, Target, Update, UpdateBatch, apply_update
from uagpnm.matcher import brute_force_match, match_nodes
from uagpnm.worked import TEAM_NAMES, name_of, team_batch, team_graph, team_pattern, team_updates


def names(ids):
    return {TEAM_NAMES[i] for i in ids}


@pytest.fixture
def team():
    g, p = team_graph(), team_pattern()
    D = apsp_baseline(g)
    return g, p, D, match_nodes(p, g, D)


def _sets(batch, g, p, D, iq):
    cands = batch_candidate_sets(batch.pattern_updates, D, iq, g, p)
    affs = batch_affected_sets(batch.data_updates, D, g)
    return cands, affs


def _all_relations(batch, pattern, data):
    D = apsp_baseline(data)
    iq = match_nodes(pattern, data, D)
    cands, affs = _sets(batch, data, pattern, D, iq)
    _, g2 = applied(pattern, data, batch)
    ext = _extended_pattern(pattern, batch.pattern_updates)
    rels = type1_relations(cands) | type2_relations(affs) | \
        type3_relations(cands, affs, apsp_baseline(g2), iq, data, ext)
    sets = {**cands, **affs}
    return rels, build_eh_tree(sets, rels), sets


# ---------------------------------------------------------------- worked example

def test_candidate_sets_worked(team):
    g, p, D, iq = team
    ups = team_updates()
    c1 = candidate_nodes(ups["U_P1"], D, iq, g, p)
    c2 = candidate_nodes(ups["U_P2"], D, iq, g, p)
    assert names(c1.remove_candidates) == oracles.CAN_U_P1 and not c1.add_candidates
    assert names(c2.remove_candidates) == oracles.CAN_U_P2 and not c2.add_candidates


def test_affected_sets_worked(team):
    g, _, D, _ = team
    ups = team_updates()
    a1, _ = affected_nodes(ups["U_D1"], D, g)
    a2, _ = affected_nodes(ups["U_D2"], D, g)
    assert names(a1.nodes) == oracles.AFF_U_D1
    assert names(a2.nodes) == oracles.AFF_U_D2


def test_affected_nodes_are_change_endpoints(team):
    g, _, D, _ = team
    for up in team_updates().values():
        if up.is_data:
            aff, new = affected_nodes(up, D, g)
            new2, changes = update_distances(D, g, up)
            assert new == new2
            assert aff.nodes == {c.source for c in changes} | {c.target for c in changes}


def test_relations_worked(team):
    g, p, D, iq = team
    batch = team_batch()
    t1 = detect_type1(batch.pattern_updates, D, iq, g, p)
    t2 = detect_type2(batch.data_updates, D, g)
    assert {(r.kind, name_of(r.eliminator), name_of(r.eliminated)) for r in t1} == \
        {(RelationKind.TYPE_I, "U_P1", "U_P2")}
    assert {(r.kind, name_of(r.eliminator), name_of(r.eliminated)) for r in t2} == \
        {(RelationKind.TYPE_II, "U_D1", "U_D2")}
    cands, affs = _sets(batch, g, p, D, iq)
    _, g2 = applied(p, g, batch)
    t3 = detect_type3(batch.pattern_updates, batch.data_updates, cands, affs, apsp_baseline(g2), p, iq, g)
    pairs = {(name_of(r.eliminator), name_of(r.eliminated)) for r in t3}
    assert ("U_D1", "U_P1") in pairs
    # U_D2 covers neither candidate set (TE_2 is outside it)
    assert not any(d == "U_D2" for d, _ in pairs)


def test_eh_tree_worked():
    rels, tree, _ = _all_relations(team_batch(), team_pattern(), team_graph())
    assert tree.dump(name_of) == oracles.EH_TREE_DUMP
    ups = team_updates()
    assert [r.update for r in tree.roots] == [ups["U_D1"]]
    assert set(tree.children_of(ups["U_D1"])) == {ups["U_D2"], ups["U_P1"]}
    assert tree.children_of(ups["U_P1"]) == [ups["U_P2"]]


def test_eh_tree_ignores_batch_order():
    shapes = set()
    for order in [("U_P1", "U_P2", "U_D1", "U_D2"), ("U_P2", "U_P1", "U_D2", "U_D1"),
                  ("U_D2", "U_P2", "U_D1", "U_P1")]:
        _, tree, _ = _all_relations(team_batch(order), team_pattern(), team_graph())
        shapes.add(tree.dump(name_of))
    assert shapes == {oracles.EH_TREE_DUMP}


def test_type3_semantics_on_worked_pair():
    g, p = team_graph(), team_pattern()
    iq = brute_force_match(p, g)
    ups = team_updates()
    apply_update(p, ups["U_P1"])
    apply_update(g, ups["U_D1"])
    assert brute_force_match(p, g) == iq


def test_type3_vacuous_pair_can_change_the_answer():
    """An empty candidate set passes the type III test against any data
    update with a non-empty affected set, even one that adds matches."""
    g = DataGraph.from_edges({0: "A", 1: "B", 2: "A"}, [(0, 1), (1, 0)])
    p = PatternGraph.from_spec({0: "A", 1: "B"}, [(0, 1, 1)])
    up_p = Update.insert_edge(Target.PATTERN, 1, 0, 1)
    up_d = Update.insert_edge(Target.DATA, 2, 1)
    batch = UpdateBatch([up_p, up_d])
    rels, _, sets = _all_relations(batch, p, g)
    assert not sets[up_p].nodes
    assert EliminationRelation(RelationKind.TYPE_III, up_d, up_p) in rels
    before = brute_force_match(p, g)
    p2, g2 = applied(p, g, batch)
    assert brute_force_match(p2, g2) != before


# ---------------------------------------------------------------- rules

def test_relation_kind_contract():
    ups = team_updates()
    with pytest.raises(ContractError):
        EliminationRelation(RelationKind.TYPE_I, ups["U_D1"], ups["U_P1"])
    with pytest.raises(ContractError):
        EliminationRelation(RelationKind.TYPE_II, ups["U_P1"], ups["U_D1"])
    with pytest.raises(ContractError):
        EliminationRelation(RelationKind.TYPE_III, ups["U_P1"], ups["U_D1"])


def test_wrong_targets_rejected(team):
    g, p, D, iq = team
    ups = team_updates()
    with pytest.raises(ContractError):
        candidate_nodes(ups["U_D1"], D, iq, g, p)
    with pytest.raises(ContractError):
        affected_nodes(ups["U_P1"], D, g)
    with pytest.raises(ContractError):
        detect_type2([ups["U_P1"]], D, g)


def test_type1_needs_same_class():
    a = Update.insert_edge(Target.PATTERN, 0, 1, 2)
    b = Update.delete_edge(Target.PATTERN, 2, 3)
    cands = {a: CandidateSet(a, remove_candidates=frozenset({1, 2})),
             b: CandidateSet(b, add_candidates=frozenset({1}))}
    assert type1_relations(cands) == set()


def test_equal_sets_pick_one_eliminator():
    a = Update.insert_edge(Target.DATA, 5, 1)
    b = Update.insert_edge(Target.DATA, 2, 1)
    affs = {a: AffectedSet(a, frozenset({1, 2})), b: AffectedSet(b, frozenset({1, 2}))}
    rels = type2_relations(affs)
    assert len(rels) == 1
    (r,) = rels
    assert r.eliminator == b  # smaller canonical key


def test_disjoint_and_single_sets_give_nothing():
    a = Update.insert_edge(Target.DATA, 0, 1)
    b = Update.insert_edge(Target.DATA, 2, 3)
    assert type2_relations({a: AffectedSet(a, frozenset({0, 1}))}) == set()
    assert type2_relations({a: AffectedSet(a, frozenset({0, 1})), b: AffectedSet(b, frozenset({2, 3}))}) == set()


def test_wide_bound_has_no_candidates(team):
    g, p, D, iq = team
    c = candidate_nodes(Update.insert_edge(Target.PATTERN, 1, 2, 50), D, iq, g, p)
    assert c.nodes == frozenset()


def test_node_update_candidates(team):
    g, p, D, iq = team
    ins = candidate_nodes(Update.insert_node(Target.PATTERN, 7, "DB"), D, iq, g, p)
    assert names(ins.remove_candidates) == {"DB_1"}
    dele = candidate_nodes(Update.delete_node(Target.PATTERN, 3), D, iq, g, p)
    assert names(dele.add_candidates) == {"TE_1", "TE_2"}


def test_edge_delete_candidates_are_failing_non_members():
    g = DataGraph.from_edges({0: "A", 1: "B", 2: "A", 3: "C"}, [(0, 1), (2, 3), (3, 1)])
    p = PatternGraph.from_spec({0: "A", 1: "B"}, [(0, 1, 1)])
    D = apsp_baseline(g)
    iq = match_nodes(p, g, D)
    assert iq == {0: {0}, 1: {1}}
    c = candidate_nodes(Update.delete_edge(Target.PATTERN, 0, 1), D, iq, g, p)
    assert c.add_candidates == {2}


# ---------------------------------------------------------------- properties

def _random_batches(count, seed0=0):
    for seed in range(seed0, seed0 + count):
        data, pattern, batch, _ = random_instance(seed, max_nodes=30, pattern_nodes=(3, 6), max_updates=3)
        yield seed, data, pattern, batch


def test_containment_soundness_and_parent_supersets():
    for seed, data, pattern, batch in _random_batches(60):
        rels, tree, sets = _all_relations(batch, pattern, data)
        for r in rels:
            if r.kind is not RelationKind.TYPE_III:
                assert sets[r.eliminator].nodes >= sets[r.eliminated].nodes
            else:
                assert sets[r.eliminator].nodes >= sets[r.eliminated].nodes and sets[r.eliminator].nodes
        for child, parent in tree.parent.items():
            if parent is not None and parent.target is child.target:
                assert sets[parent].nodes >= sets[child].nodes


def test_plan_matches_relation_tree():
    for seed, data, pattern, batch in _random_batches(60, 100):
        rels, tree, sets = _all_relations(batch, pattern, data)
        D = apsp_baseline(data)
        iq = match_nodes(pattern, data, D)
        cands, affs = _sets(batch, data, pattern, D, iq)
        _, g2 = applied(pattern, data, batch)
        plan = plan_elimination(cands, affs, apsp_baseline(g2), iq, data,
                                _extended_pattern(pattern, batch.pattern_updates))
        assert plan.tree.shape() == tree.shape()
        assert plan.tree.parent == tree.parent
        counts = {k: sum(1 for r in rels if r.kind.value == v) for k, v in
                  (("type1", "I"), ("type2", "II"), ("type3", "III"))}
        assert plan.counts == counts


def test_permutation_invariance_small():
    rng = random.Random(5)
    for seed, data, pattern, batch in _random_batches(25, 200):
        rels, tree, _ = _all_relations(batch, pattern, data)
        for _ in range(3):
            ups = list(batch)
            rng.shuffle(ups)
            perm = UpdateBatch(ups)
            if perm.annihilated or _invalid(perm, pattern, data):
                continue
            rels2, tree2, _ = _all_relations(perm, pattern, data)
            assert rels2 == rels and tree2.shape() == tree.shape()


def _invalid(batch, pattern, data):
    from uagpnm.graph import batch_problems
    return bool(batch_problems(batch, pattern, data))
