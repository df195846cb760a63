import random

import pytest
from hypothesis import given, settings, strategies as st

from layerids.alerts import SignatureStats
from layerids.baseline import baseline_alert_log
from layerids.partitioner import (
    INCLUDE_ALL, UNBOUNDED, PartitionParams, apply_partition, partition,
)
from layerids.rules import Rule, RuleSet, read_ruleset

# Raw baseline counts with the long ICMP signature name split in two entries,
# both carrying its count of 3.
RAW_COUNTS = [2, 3, 3, 3, 4, 4, 5, 11, 14, 14, 17, 18, 19, 20, 21, 26, 28, 29, 35, 40,
                    48, 49, 84, 96, 105, 129, 163, 981, 998, 1525, 1754, 3409, 21886, 86006]


def _master(sids):
    return RuleSet(tuple(Rule(s, "tcp", f"r{s}") for s in sids))


def test_baseline_default_params_admit_33(master):
    part = partition(master, baseline_alert_log().stats(), PartitionParams())
    assert sorted(part.primary_sids) == list(range(1, 34))
    assert len(part.complementary_sids) == 3211 - 33


def test_baseline_min_freq_15():
    # the split ICMP entry is below 15 either way
    expected = sum(1 for c in RAW_COUNTS if c >= 15)
    assert expected == 24
    part = partition(_master(range(1, 3212)), baseline_alert_log().stats(), PartitionParams(min_freq=15))
    assert len(part.primary_sids) == expected


def test_baseline_max_num_and_high_threshold(master):
    st_ = baseline_alert_log().stats()
    top10 = partition(master, st_, PartitionParams(max_num=10)).primary_sids
    assert sorted(top10) == list(range(24, 34))
    assert top10[0] == 33
    assert partition(master, st_, PartitionParams(min_freq=100000)).primary_sids == ()


def test_tie_break_example():
    a, b, c = 1, 2, 3
    st_ = {a: SignatureStats(a, 5, 100), b: SignatureStats(b, 9, 100), c: SignatureStats(c, 9, 100)}
    part = partition(_master([a, b, c]), st_, PartitionParams(min_freq=1, max_num=2))
    assert part.primary_sids == (b, c)
    assert part.complementary_sids == (a,)


def test_valid_time_filter():
    st_ = {1: SignatureStats(1, 5, 10), 2: SignatureStats(2, 5, 50)}
    part = partition(_master([1, 2]), st_, PartitionParams(valid_time=20))
    assert part.primary_sids == (2,)
    part = partition(_master([1, 2]), st_, PartitionParams(valid_time=INCLUDE_ALL))
    assert set(part.primary_sids) == {1, 2}


def test_unknown_sids_ignored_with_count(caplog):
    st_ = {1: SignatureStats(1, 5, 10), 99: SignatureStats(99, 50, 10)}
    part = partition(_master([1]), st_, PartitionParams())
    assert part.primary_sids == (1,) and part.ignored == 1
    assert "not in the master" in caplog.text


def test_min_freq_zero_only_admits_seen_sids():
    part = partition(_master([1, 2]), {1: SignatureStats(1, 1, 0)}, PartitionParams(min_freq=0))
    assert part.primary_sids == (1,)


@pytest.mark.parametrize("kw", [{"min_freq": -1}, {"max_num": 0}, {"max_num": 2.5}, {"valid_time": "x"}])
def test_invalid_params(kw):
    with pytest.raises(ValueError):
        PartitionParams(**kw)


def test_apply_partition_files(tmp_path, master):
    part = partition(master, baseline_alert_log().stats(), PartitionParams())
    prim, comp = apply_partition(master, part, tmp_path)
    assert len(prim) == 33 and len(comp) == 3178
    first = {n: (tmp_path / n).read_bytes() for n in ("signature.rule", "complement.rule")}
    apply_partition(master, part, tmp_path)
    assert {n: (tmp_path / n).read_bytes() for n in first} == first
    assert read_ruleset(tmp_path / "signature.rule").sids == set(range(1, 34))
    assert read_ruleset(tmp_path / "complement.rule").sids == master.sids - set(range(1, 34))


def test_apply_empty_primary(tmp_path):
    m = _master([1, 2, 3])
    part = partition(m, {}, PartitionParams())
    prim, comp = apply_partition(m, part, tmp_path, "a.rule", "b.rule")
    assert len(prim) == 0 and comp.rules == m.rules
    assert len(read_ruleset(tmp_path / "a.rule")) == 0


# ---------------------------------------------------------------- properties

@st.composite
def instances(draw):
    sids = draw(st.lists(st.integers(1, 60), unique=True, min_size=0, max_size=25))
    seen = draw(st.lists(st.integers(1, 70), unique=True, max_size=30))
    stats_ = {s: SignatureStats(s, draw(st.integers(1, 12)), draw(st.integers(0, 100))) for s in seen}
    params = PartitionParams(
        min_freq=draw(st.integers(0, 13)),
        valid_time=draw(st.one_of(st.just(INCLUDE_ALL), st.integers(-5, 105))),
        max_num=draw(st.one_of(st.just(UNBOUNDED), st.integers(1, 30))),
    )
    return _master(sids), stats_, params


def check_partition_bounds(master, stats_, params):
    part = partition(master, stats_, params)
    prim, comp = set(part.primary_sids), set(part.complementary_sids)
    assert len(prim) == len(part.primary_sids)
    if params.max_num is not UNBOUNDED:
        assert len(prim) <= params.max_num
    for sid in prim:
        s = stats_[sid]
        assert s.freq >= params.min_freq
        assert params.valid_time is INCLUDE_ALL or s.ltime >= params.valid_time
    assert not prim & comp and prim | comp == master.sids
    # excluded candidates were cut by capacity in favour of sids at least as frequent
    lowest = min((stats_[s].freq for s in prim), default=None)
    for sid in comp:
        if sid in stats_ and params.admits(stats_[sid]):
            assert params.max_num is not UNBOUNDED and len(prim) == params.max_num
            assert stats_[sid].freq <= lowest
    # anti-monotone in min_freq
    higher = PartitionParams(params.min_freq + 1, params.valid_time, params.max_num)
    unbounded = PartitionParams(params.min_freq, params.valid_time, UNBOUNDED)
    unbounded_higher = PartitionParams(params.min_freq + 1, params.valid_time, UNBOUNDED)
    assert set(partition(master, stats_, unbounded_higher).primary_sids) <= \
        set(partition(master, stats_, unbounded).primary_sids)
    assert len(partition(master, stats_, higher).primary_sids) <= len(prim)
    assert partition(master, stats_, params) == part


@settings(max_examples=500, deadline=None)
@given(instances())
def test_partition_bounds_property(inst):
    check_partition_bounds(*inst)


def test_partition_deterministic_under_stats_order():
    rnd = random.Random(9)
    stats_ = {s: SignatureStats(s, rnd.randint(1, 4), 0) for s in range(1, 40)}
    rev = dict(reversed(list(stats_.items())))
    m = _master(range(1, 40))
    p = PartitionParams(max_num=7)
    assert partition(m, stats_, p) == partition(m, rev, p)
