import random

import pytest

import oracles
from conftest import applied, random_instance
from uagpnm.bench import synthetic_graph
from uagpnm.engine import Method, answer_initial_query, answer_subsequent_query
from uagpnm.errors import ValidationError
from uagpnm.graph import Target, Update, UpdateBatch, batch_problems
from uagpnm.matcher import brute_force_match
from uagpnm.worked import PATTERN_NAMES, TEAM_NAMES, team_batch, team_graph, team_pattern

METHODS = list(Method)


def named(result):
    return {PATTERN_NAMES[u]: {TEAM_NAMES[v] for v in vs} for u, vs in result.items()}


def test_method_parse():
    assert Method.parse("ua") is Method.UA
    assert Method.parse("INC_PER_UPDATE") is Method.INC_PER_UPDATE
    with pytest.raises(ValueError):
        Method.parse("fast")


@pytest.mark.parametrize("method", METHODS)
def test_worked_batch(method):
    s = answer_initial_query(team_pattern(), team_graph())
    assert named(s.iquery) == oracles.IQUERY
    res, s2 = answer_subsequent_query(s, team_batch(), method)
    p, g = applied(team_pattern(), team_graph(), team_batch())
    assert res == brute_force_match(p, g)
    assert s.data == team_graph() and s.pattern == team_pattern()  # copy by default
    assert s2.data == g and s2.pattern == p


def test_worked_stats():
    s = answer_initial_query(team_pattern(), team_graph())
    _, ua = answer_subsequent_query(s, team_batch(), Method.UA)
    _, inc = answer_subsequent_query(s, team_batch(), Method.INC_PER_UPDATE)
    _, eh = answer_subsequent_query(s, team_batch(), Method.EH_DATA_ONLY)
    assert ua.stats.eliminated == 4 and ua.stats.passes == 1
    assert ua.stats.relations == {"type1": 1, "type2": 1, "type3": 2}
    assert inc.stats.passes == 4
    assert eh.stats.eliminated == 1 and eh.stats.passes == 3
    assert set(ua.stats.timings_us) == {"sets", "detect", "apply", "match"}
    assert ua.stats.total_us == pytest.approx(sum(ua.stats.timings_us.values()))


@pytest.mark.parametrize("method", METHODS)
def test_empty_batch_returns_initial_answer(method):
    s = answer_initial_query(team_pattern(), team_graph())
    res, s2 = answer_subsequent_query(s, UpdateBatch([]), method)
    assert res == s.iquery
    if method is not Method.SCRATCH:
        assert s2.stats.passes == 0


def test_invalid_batch_changes_nothing():
    s = answer_initial_query(team_pattern(), team_graph())
    bad = UpdateBatch([Update.insert_edge(Target.DATA, 0, 7), Update.delete_edge(Target.DATA, 0, 7),
                       Update.delete_edge(Target.DATA, 6, 0)])
    with pytest.raises(ValidationError):
        answer_subsequent_query(s, bad, Method.UA, inplace=True)
    assert s.data == team_graph() and s.pattern == team_pattern()


def test_inplace_reuses_session():
    s = answer_initial_query(team_pattern(), team_graph())
    _, s2 = answer_subsequent_query(s, team_batch(), "Ua", inplace=True)
    assert s2 is s and s.iquery == brute_force_match(s.pattern, s.data)


def test_methods_agree_on_random_batches():
    for seed in range(80):
        data, pattern, batch, _ = random_instance(seed, max_nodes=35, pattern_nodes=(2, 6), max_updates=8)
        s = answer_initial_query(pattern.copy(), data.copy())
        p, g = applied(pattern, data, batch)
        want = brute_force_match(p, g)
        for m in METHODS:
            res, s2 = answer_subsequent_query(s, batch, m)
            assert res == want, (seed, m)
            assert s2.slen.n == g.capacity


def test_passes_never_exceed_batch_size():
    for seed in range(60):
        data, pattern, batch, _ = random_instance(seed, max_nodes=30, max_updates=8)
        s = answer_initial_query(pattern.copy(), data.copy())
        _, ua = answer_subsequent_query(s, batch, Method.UA)
        _, inc = answer_subsequent_query(s, batch, Method.INC_PER_UPDATE)
        assert ua.stats.passes <= 1 <= max(1, inc.stats.passes)
        assert inc.stats.passes == len(batch)
        assert ua.stats.eliminated <= len(batch)


def test_batch_order_does_not_change_the_answer():
    rng = random.Random(11)
    for seed in range(40):
        data, pattern, batch, _ = random_instance(seed, max_nodes=30, max_updates=6)
        s = answer_initial_query(pattern.copy(), data.copy())
        ref, _ = answer_subsequent_query(s, batch, Method.UA)
        ups = list(batch)
        rng.shuffle(ups)
        perm = UpdateBatch(ups)
        if perm.annihilated or batch_problems(perm, pattern, data):
            continue
        assert answer_subsequent_query(s, perm, Method.UA)[0] == ref


def test_initial_query_on_larger_graph():
    g = synthetic_graph(200, 1200, 4, 3)
    from uagpnm.bench import generate_pattern, label_universe
    p = generate_pattern(label_universe(4), 5, seed=2)
    a = answer_initial_query(p, g)
    b = answer_initial_query(p, g, partitioned=False)
    assert a.slen == b.slen and a.iquery == b.iquery == brute_force_match(p, g)
    assert set(a.stats.timings_us) == {"apsp", "match"}
