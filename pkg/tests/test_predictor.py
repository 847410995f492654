import math
import random

import numpy as np
import pytest

from ramzzz.idlehist import SparseHistogram
from ramzzz.predictor import (
    RankAccessProfile, histogram_l1, idle_length_prob, log2_bins, page_access_prob,
    predict_after_migration, predict_carry_forward, prediction_error, rank_idle_prob,
    rescale_histogram,
)
from ramzzz.trace import SyntheticTraceParams, generate_synthetic_trace


def test_page_access_prob():
    assert page_access_prob(5, 4, 1000) == pytest.approx(0.02)
    assert page_access_prob(0, 4, 1000) == 0
    assert page_access_prob(500, 4, 1000) == 1.0
    with pytest.raises(ValueError):
        page_access_prob(1, 1, 0)


def test_rank_idle_prob():
    assert rank_idle_prob([0.5, 0.5]) == 0.25
    assert rank_idle_prob([]) == 1.0
    assert rank_idle_prob([0.2, 1.0]) == 0.0
    with pytest.raises(ValueError):
        rank_idle_prob([1.5])


def test_idle_length_prob():
    assert idle_length_prob(0.5, 2) == 0.125
    assert idle_length_prob(0.0, 0) == 1.0 and idle_length_prob(0.0, 3) == 0.0
    assert sum(idle_length_prob(0.7, k) for k in range(400)) == pytest.approx(1.0)


def test_profile_from_counts():
    prof = RankAccessProfile.from_counts([5, 5], g=4, T=1000)
    assert prof.Q == pytest.approx(0.98 ** 2)
    assert prof.log_w([0, 1]) == pytest.approx(
        [math.log(1 - prof.Q), math.log(prof.Q) + math.log(1 - prof.Q)])


def test_carry_forward_is_a_copy():
    h = SparseHistogram.from_pairs(100, [(3, 2), (40, 1)])
    out = predict_carry_forward(h)
    assert out == h and out.counts is not h.counts
    assert len(predict_carry_forward(SparseHistogram.empty(10))) == 0


def test_identity_ratio_only_renormalizes():
    g, T = 10, 1000
    h = SparseHistogram.from_pairs(T, [(40, 10), (190, 2)])  # occupies 500 + 400
    out = predict_after_migration(h, 0.9, 0.9, g)
    assert out.counts == pytest.approx(h.counts * T / 900)


def test_doubling_ratio_halves_counts():
    # with length_unit chosen so k = 1 for every bucket, W_new/W_old is a constant
    g, T = 0, 100
    h = SparseHistogram.from_pairs(T, [(50, 2)])
    # Q=0 would erase every bucket, so the previous histogram is kept
    assert predict_after_migration(h, 0.5, 0.0, g, length_unit=50) == h
    q_old, q_new = 0.2, 0.6
    ratio = (q_new * (1 - q_new)) / (q_old * (1 - q_old))
    out = predict_after_migration(h, q_old, q_new, g, length_unit=50)
    assert ratio == pytest.approx(1.5)
    assert out.counts == pytest.approx([2.0])  # s' = 1.5 T, so the 1.5x gain cancels


def test_normalization_hits_target():
    rng = random.Random(3)
    for _ in range(100):
        T, g = rng.randint(1000, 10**6), rng.randint(1, 400)
        pairs = [(rng.randint(1, T // 10), rng.randint(1, 20)) for _ in range(rng.randint(1, 30))]
        h = SparseHistogram.from_pairs(T, pairs)
        qo, qn = rng.random(), rng.random()
        unit = rng.choice([1.0, float(g)])
        target = rng.choice([None, T * rng.uniform(0.5, 1.0)])
        out = predict_after_migration(h, qo, qn, g, length_unit=unit, target=target)
        fill = T if target is None else target
        if len(out):
            assert out.occupied_time(g) == pytest.approx(fill, rel=1e-6)
            assert (out.counts >= 0).all()


def test_underflow_keeps_counts_finite():
    h = SparseHistogram.from_pairs(10**8, [(10**7, 1), (50, 100)])
    out = predict_after_migration(h, 0.999999, 0.5, 200)
    assert np.isfinite(out.counts).all()


def test_bad_arguments():
    h = SparseHistogram.from_pairs(100, [(3, 1)])
    with pytest.raises(ValueError):
        predict_after_migration(h, 0.5, 0.5, 1, length_unit=0)
    with pytest.raises(ValueError):
        predict_after_migration(h, 0.5, 0.5, 1, target=-1)
    with pytest.raises(ValueError):
        rescale_histogram(h, -1)


def test_empty_falls_back():
    assert len(predict_after_migration(SparseHistogram.empty(10), 0.1, 0.2, 1)) == 0


def test_rescale():
    h = SparseHistogram.from_pairs(100, [(3, 2)])
    assert rescale_histogram(h, 0.5).counts.tolist() == [1.0]
    assert len(rescale_histogram(h, 0)) == 0


def test_log2_bins_and_error():
    a = SparseHistogram.from_pairs(100, [(1, 1), (2, 2), (3, 1), (9, 4)])
    assert log2_bins(a) == {0: 1.0, 1: 3.0, 3: 4.0}
    p = SparseHistogram.from_pairs(100, [(3, 3), (12, 4)])
    assert histogram_l1(p, a) == (1.0, 8.0)
    assert prediction_error(p, a) == pytest.approx(1 / 8)
    assert prediction_error(SparseHistogram.empty(5), SparseHistogram.empty(5)) is None
    assert prediction_error(p, SparseHistogram.empty(100)) == math.inf


def test_poisson_rank_gaps_fit_an_exponential():
    g = 200
    trace = generate_synthetic_trace(SyntheticTraceParams(
        total_cycles=2 * 10**7, num_pages=64, access_rate=0.002, hot_fraction=0.5,
        hot_share=0.5, seed=12))
    cycles = np.array([a.cycle for a in trace if a.page % 4 == 0])
    gaps = np.diff(cycles) - g
    gaps = gaps[gaps > 0]
    counts, edges = np.histogram(gaps, bins=20, range=(0, np.quantile(gaps, 0.95)))
    mid = (edges[:-1] + edges[1:]) / 2
    keep = counts > 0
    y = np.log(counts[keep])
    slope, icept = np.polyfit(mid[keep], y, 1)
    fit = slope * mid[keep] + icept
    r2 = 1 - ((y - fit) ** 2).sum() / ((y - y.mean()) ** 2).sum()
    assert slope < 0
    assert r2 >= 0.85
