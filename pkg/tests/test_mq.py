import random

from ramzzz.mq import MqStructure, mq_level_report
from ramzzz.placement import group_pages
from ramzzz.trace import SyntheticTraceParams, generate_synthetic_trace


def touch(mq, page, times, now=0):
    for _ in range(times):
        mq.on_access(page, now)


def test_new_page_enters_queue_zero_head():
    mq = MqStructure(M=4, lifetime=100)
    mq.on_access(1, 0)
    mq.on_access(2, 1)
    d = mq.descriptor(2)
    assert (d.freq_counter, d.queue_index) == (1, 0)
    assert mq.queue(0) == [2, 1]


def test_promotion_at_powers_of_two():
    mq = MqStructure(M=5, lifetime=100)
    levels = []
    for _ in range(16):
        mq.on_access(7, 0)
        levels.append(mq.descriptor(7).queue_index)
    # counter reaches 2, 4, 8, 16 -> one queue up each time
    assert levels == [0, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3, 3, 3, 3, 3, 4]


def test_top_queue_saturates():
    mq = MqStructure(M=3, lifetime=100)
    touch(mq, 0, 50)
    d = mq.descriptor(0)
    assert d.queue_index == 2
    assert d.freq_counter == 8  # capped at 2**M


def test_expire_sinks_one_level():
    mq = MqStructure(M=5, lifetime=10)
    touch(mq, 1, 8, now=0)  # queue 3
    assert mq.descriptor(1).queue_index == 3
    assert mq.expire(5) == 0
    assert mq.expire(11) == 1
    d = mq.descriptor(1)
    assert d.queue_index == 2 and d.expiration_time == 21


def test_expire_keeps_queue_zero():
    mq = MqStructure(M=4, lifetime=10)
    mq.on_access(3, 0)
    assert mq.expire(1000) == 0
    assert mq.descriptor(3).queue_index == 0


def test_expire_without_stale_pages_is_identity():
    mq = MqStructure(M=4, lifetime=100)
    touch(mq, 1, 4)
    touch(mq, 2, 2)
    before = mq.hotness_order()
    assert mq.expire(50) == 0
    assert mq.hotness_order() == before


def test_hotness_order_four_rank_example():
    # P6, P7 are the most frequently used pages, the rest colder
    mq = MqStructure(M=4, lifetime=10**6)
    for page, count in [(0, 1), (1, 1), (2, 2), (3, 2), (4, 3), (5, 2), (6, 8), (7, 9)]:
        touch(mq, page, count)
    order = mq.hotness_order()
    assert set(order[:2]) == {6, 7}
    groups = group_pages(mq, 4, 2)
    assert set(groups[0]) == {6, 7}
    assert sum(len(g) for g in groups) == 8


def test_hotness_order_empty_and_single_queue():
    assert MqStructure().hotness_order() == []
    mq = MqStructure(M=4)
    for p in (5, 3, 9):
        mq.on_access(p, 0)
    assert mq.hotness_order() == mq.queue(0) == [9, 3, 5]


def test_recency_breaks_ties():
    mq = MqStructure(M=4)
    touch(mq, 1, 2)
    touch(mq, 2, 2)
    mq.on_access(1, 5)  # counter 3, stays in queue 1 but becomes its head
    assert mq.queue(1) == [1, 2]


def test_level_report():
    mq = MqStructure(M=3)
    touch(mq, 0, 1)
    report = mq_level_report(mq)
    assert report == [1.0, None, None]


def test_level_report_monotone_on_skewed_workload():
    trace = generate_synthetic_trace(SyntheticTraceParams(total_cycles=10**7, num_pages=500,
                                                          access_rate=0.002, seed=9))
    mq = MqStructure(M=16, lifetime=10**7)
    for a in trace:
        mq.on_access(a.page, a.cycle)
    means = [m for m in mq.level_report() if m is not None]
    assert means == sorted(means)
    assert len(means) >= 3


def test_invariants_under_random_operations():
    rng = random.Random(0)
    mq = MqStructure(M=6, lifetime=50)
    now = 0
    for _ in range(3000):
        now += rng.randrange(5)
        if rng.random() < 0.05:
            mq.expire(now)
        else:
            mq.on_access(rng.randrange(40), now)
        for i in range(mq.M):
            for p in mq.queue(i):
                d = mq.descriptor(p)
                assert d.queue_index == i
                # a page never sits above the level its counter allows
                assert d.freq_counter >= 2 ** i
    order = mq.hotness_order()
    assert sorted(order) == sorted(set(order)) and len(order) == len(mq)
