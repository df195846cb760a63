import math
import random
from collections import Counter

import pytest

from layerids.alerts import AlertLog
from layerids.engine import (
    CostParams, Layer, LayerConfig, LayeredEngine, LayerStats, StaleEpochError, cost_of,
    packet_cost, run,
)
from layerids.matcher import compile
from layerids.packets import Packet
from layerids.rules import ContentPattern, Rule, RuleSet, split
from layerids.trafficgen import FloodSpec, generate_flood, packet_from_rule

from randgen import random_ruleset, random_stream


def _rules_all_tcp(n):
    return RuleSet(tuple(Rule(s, "tcp", f"r{s}", contents=(ContentPattern(b"k%d" % s),))
                         for s in range(1, n + 1)))


def test_cost_empty_payload_is_alpha():
    m = compile(_rules_all_tcp(5))
    p = Packet(0, "tcp", 1, 2, 3, 4, b"")
    assert cost_of(p, m, CostParams("per_rule_scan")) == 100
    assert cost_of(p, m, CostParams("automaton")) == 100


def test_cost_formula_substitution():
    m = compile(_rules_all_tcp(10))
    p = Packet(0, "tcp", 1, 2, 3, 4, b"x" * 100)
    assert m.header_count(p) == 10
    assert cost_of(p, m, CostParams("per_rule_scan", alpha=100, beta=1)) == 1100
    expected = 100 + 100 + 0.5 * 100 * math.log2(1 + 10)
    assert cost_of(p, m, CostParams("automaton")) == pytest.approx(expected)


def test_cost_counts_only_header_passing_rules():
    rs = RuleSet((Rule(1, "udp", "u"), Rule(2, "tcp", "t"), Rule(3, "ip", "i")))
    p = Packet(0, "tcp", 1, 2, 3, 4, b"ab")
    assert cost_of(p, compile(rs), CostParams()) == 100 + 2 * 2


def test_full_costs_more_than_primary(master, default_split):
    primary, _ = default_split
    full_l = Layer(LayerConfig("f", "primary", master))
    prim_l = Layer(LayerConfig("p", "primary", primary))
    for r in (master[1], master[33], master[500], master[3211]):
        p = packet_from_rule(r)
        if not p.payload:
            continue
        for mode in ("per_rule_scan", "automaton"):
            full_l.config = LayerConfig("f", "primary", master, cost=CostParams(mode))
            prim_l.config = LayerConfig("p", "primary", primary, cost=CostParams(mode))
            assert packet_cost(p, full_l) > packet_cost(p, prim_l)


def test_cost_params_validation():
    with pytest.raises(ValueError):
        CostParams("magic")
    with pytest.raises(ValueError):
        CostParams(alpha=-1)
    with pytest.raises(ValueError):
        LayerConfig("x", "primary", RuleSet(), service_rate=0)
    with pytest.raises(ValueError):
        LayerConfig("x", "primary", RuleSet(), queue_capacity=0)
    with pytest.raises(ValueError):
        LayerConfig("x", "tertiary", RuleSet())


def test_layer_stats_drop_pct():
    assert LayerStats.from_counts(182688, 15155).drop_pct == pytest.approx(8.296, abs=1e-3)
    assert LayerStats.from_counts(193890, 3309).drop_pct == pytest.approx(1.707, abs=1e-3)
    assert LayerStats().drop_pct == 0.0
    with pytest.raises(ValueError):
        LayerStats(10, 10, 1)


def test_queue_admission_by_hand():
    # each packet costs alpha=100 units; rate 1e6 units/s -> 100 us service
    cfg = LayerConfig("l", "primary", RuleSet(), service_rate=1e6, queue_capacity=2)
    stream = [Packet(t, "udp", 1, 2, 3, 4) for t in (0, 10, 20, 30, 100, 150, 200, 260)]
    res = run(stream, [cfg])["l"].stats
    # t=0 served 0-100, t=10 queued 100-200, t=20/t=30 dropped (2 in system),
    # t=100 departs first -> admitted (200-300), t=150 dropped, t=200 admitted (300-400),
    # t=260 dropped (t=200's and t=100's jobs still in system)
    assert (res.received, res.analyzed, res.dropped) == (8, 4, 4)


def test_no_contention_means_no_drops():
    rnd = random.Random(1)
    rs = random_ruleset(rnd, 20)
    stream = random_stream(rnd, rs, 300)
    res = run(stream, [LayerConfig("a", "primary", rs), LayerConfig("b", "complementary", rs)])
    for r in res.values():
        assert r.stats.dropped == 0 and r.stats.analyzed == r.stats.received == 300


def test_conservation_and_determinism_under_load(master, default_split):
    primary, complement = default_split
    spec = FloodSpec(20000, 200_000, 0.5, 7)
    stream = generate_flood(master, spec)
    cfgs = [LayerConfig(n, role, rs, service_rate=6e7, queue_capacity=4)
            for n, role, rs in (("full", "primary", master), ("p", "primary", primary),
                                ("c", "complementary", complement))]
    log1, log2 = AlertLog(), AlertLog()
    r1 = run(stream, cfgs, log1)
    r2 = run(stream, cfgs, log2)
    for lid, r in r1.items():
        s = r.stats
        assert s.received == len(stream) == s.analyzed + s.dropped
        assert s == r2[lid].stats
    assert r1["full"].stats.dropped > 0
    assert log1.dumps() == log2.dumps()


def test_drop_monotone_in_nested_ruleset_size(master):
    stream = generate_flood(master, FloodSpec(20000, 500_000, 0.5, 3))
    for mode, rate in (("per_rule_scan", 6e7), ("automaton", 2e7)):
        cfgs = [LayerConfig(f"n{n}", "primary", RuleSet(master.rules[:n]), rate, 8, CostParams(mode))
                for n in (33, 330, 3211)]
        res = run(stream, cfgs)
        drops = [res[c.layer_id].stats.drop_pct for c in cfgs]
        assert drops == sorted(drops) and drops[0] < drops[-1]


def test_union_completeness_small():
    rnd = random.Random(2)
    for _ in range(20):
        rs = random_ruleset(rnd, 20)
        a, b = split(rs, {s for s in rs.sids if rnd.random() < 0.5})
        stream = random_stream(rnd, rs, 50)
        two = run(stream, [LayerConfig("a", "primary", a), LayerConfig("b", "complementary", b)])
        one = run(stream, [LayerConfig("f", "primary", rs)])
        pairs = Counter((x.ts_us, x.src_ip, x.sid) for r in two.values() for x in r.alerts)
        assert pairs == Counter((x.ts_us, x.src_ip, x.sid) for x in one["f"].alerts)


def test_unordered_stream_is_fatal():
    eng = LayeredEngine([LayerConfig("l", "primary", RuleSet())])
    eng.process(Packet(10, "udp", 1, 2, 3, 4))
    with pytest.raises(ValueError, match="unordered"):
        eng.process(Packet(5, "udp", 1, 2, 3, 4))


def test_engine_config_errors():
    with pytest.raises(ValueError):
        LayeredEngine([])
    with pytest.raises(ValueError):
        LayeredEngine([LayerConfig("x", "primary", RuleSet())] * 2)
    with pytest.raises(KeyError):
        LayeredEngine([LayerConfig("x", "primary", RuleSet())]).swap_ruleset("y", RuleSet(), 1)


def test_swap_identical_ruleset_keeps_stats():
    rs = _rules_all_tcp(3)
    eng = LayeredEngine([LayerConfig("l", "primary", rs)])
    eng.process(packet_from_rule(rs[1], 0))
    before = eng.layer("l").matcher
    assert eng.swap_ruleset("l", RuleSet(rs.rules, "copy"), 1) == 1
    assert eng.layer("l").matcher is before
    eng.process(packet_from_rule(rs[2], 1))
    res = eng.results()["l"]
    assert res.stats == LayerStats(2, 2, 0)
    assert [a.sid for a in res.alerts] == [1, 2]


def test_swap_stale_epoch_rejected():
    eng = LayeredEngine([LayerConfig("l", "primary", RuleSet())])
    eng.swap_ruleset("l", RuleSet(), 3)
    with pytest.raises(StaleEpochError):
        eng.swap_ruleset("l", RuleSet(), 3)


def test_swap_mid_stream_epoch_attribution():
    rs = _rules_all_tcp(4)
    a, b = split(rs, {1, 2})
    eng = LayeredEngine([LayerConfig("l", "primary", a, service_rate=1e6, queue_capacity=10)])
    for t in range(4):
        eng.process(packet_from_rule(rs[1 + t], t * 10))
    eng.swap_ruleset("l", b, 1)
    for t in range(4):
        eng.process(packet_from_rule(rs[1 + t], 100 + t * 10))
    res = eng.results()["l"]
    assert len(res.epochs) == len(res.alerts)
    assert [(x.sid, e) for x, e in zip(res.alerts, res.epochs)] == [(1, 0), (2, 0), (3, 1), (4, 1)]


def test_alert_log_receives_layer_ids():
    rs = _rules_all_tcp(2)
    log = AlertLog()
    run([packet_from_rule(rs[2], 5)], [LayerConfig("x", "primary", rs), LayerConfig("y", "complementary", rs)], log)
    assert [(a.layer_id, a.sid, a.ts_us) for a in log] == [("x", 2, 5), ("y", 2, 5)]
