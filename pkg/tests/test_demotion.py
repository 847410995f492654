import math
import random
from fractions import Fraction

import numpy as np
import pytest

from conftest import toy_spec
from ramzzz.demotion import (
    INF, DemotionConfig, DemotionError, break_even_config, candidate_timeouts, evaluate,
    exhaustive_config, greedy_config, idle_energy, objective_value, total_delay, total_energy,
)
from ramzzz.idlehist import SparseHistogram

ONE = toy_spec([0.5], energies=[2.0], resync=[4.0])
TWO = toy_spec([0.6, 0.2], energies=[1.0, 5.0])
HIST = SparseHistogram.from_pairs(100, [(3, 2), (9, 1)])


def dense_period(timeouts, t, powers, energies, resync, p_act=Fraction(1)):
    """Walk an idle period one cycle at a time."""
    e, state = Fraction(0), 0
    for c in range(t):
        for i, d in enumerate(timeouts, 1):
            if d is not None and d <= c:
                state = max(state, i)
        e += p_act if state == 0 else powers[state - 1]
    if state:
        return e + energies[state - 1], resync[state - 1]
    return e, 0


def dense_total(timeouts, hist_pairs, powers, energies, resync):
    E, D = Fraction(0), 0
    for t, n in hist_pairs:
        e, d = dense_period(timeouts, t, powers, energies, resync)
        E += e * n
        D += d * n
    return E, D


def test_idle_energy_examples():
    assert idle_energy(DemotionConfig((5,)), 9, ONE) == pytest.approx(9.0)
    cfg = DemotionConfig((2, 6))
    assert idle_energy(cfg, 10, TWO) == pytest.approx(10.2)
    assert idle_energy(cfg, 6, TWO) == pytest.approx(5.4)


def test_idle_energy_requires_demotion():
    with pytest.raises(DemotionError):
        idle_energy(DemotionConfig((5,)), 5, ONE)


def test_total_energy_and_delay_examples():
    assert total_energy(DemotionConfig((5,)), HIST, ONE) == pytest.approx(15.0)
    assert total_energy(DemotionConfig((0,)), HIST, ONE) == pytest.approx(13.5)
    assert total_energy(DemotionConfig.disabled(1), HIST, ONE) == pytest.approx(15.0)
    assert total_delay(DemotionConfig((5,)), HIST, ONE) == 4
    assert total_delay(DemotionConfig((0,)), HIST, ONE) == 12
    assert total_delay(DemotionConfig.disabled(1), HIST, ONE) == 0


def test_disabled_state_is_skipped():
    # S1 disabled, the rank goes straight from ACT to S2
    cfg = DemotionConfig((INF, 4))
    assert idle_energy(cfg, 10, TWO) == pytest.approx(4 + 0.2 * 6 + 5)
    assert cfg.active_states == (2,)
    assert cfg.deepest_state(4) == 0 and cfg.deepest_state(5) == 2


@pytest.mark.parametrize("bad", [(5, 3), (-1,), (math.nan,)])
def test_config_validation(bad):
    with pytest.raises(DemotionError):
        DemotionConfig(bad)


def test_config_list_round_trip():
    cfg = DemotionConfig((0, INF, 12.5))
    assert cfg.to_list() == [0, None, 12.5]
    assert DemotionConfig.from_list(cfg.to_list()) == cfg


def random_instance(rng, T=10_000, max_m=4, lengths=25):
    M = rng.randint(1, max_m)
    powers = sorted((Fraction(x, 100) for x in rng.sample(range(1, 100), M)), reverse=True)
    energies = [Fraction(rng.randint(0, 500), 10) for _ in range(M)]
    resync = sorted(rng.randint(1, 50) for _ in range(M))
    pairs = sorted({rng.randint(1, T): rng.randint(1, 5) for _ in range(rng.randint(0, lengths))}.items())
    timeouts = []
    last = 0
    for _ in range(M):
        if rng.random() < 0.25:
            timeouts.append(None)
        else:
            last = rng.randint(last, min(T, last + T // M))
            timeouts.append(last)
    return M, powers, energies, resync, pairs, timeouts


def test_matches_dense_reference():
    rng = random.Random(5)
    for _ in range(60):
        M, P, Es, Rs, pairs, tos = random_instance(rng, T=400, lengths=12)
        spec = toy_spec([float(p) for p in P], [float(e) for e in Es], [float(r) for r in Rs])
        hist = SparseHistogram.from_pairs(400, pairs)
        cfg = DemotionConfig(tuple(INF if d is None else d for d in tos))
        E, D = evaluate(cfg, hist, spec)
        ref_E, ref_D = dense_total(tos, pairs, P, Es, Rs)
        assert E == pytest.approx(float(ref_E), rel=1e-9, abs=1e-9)
        assert D == ref_D


def test_greedy_single_state_example():
    sol = greedy_config(HIST, ONE)
    assert sol.config.timeouts == (0.0,)
    assert sol.energy == pytest.approx(13.5)


def test_greedy_equals_exhaustive_for_one_state():
    rng = random.Random(2)
    for _ in range(100):
        _, P, Es, Rs, pairs, _ = random_instance(rng, max_m=1)
        spec = toy_spec([float(P[0])], [float(Es[0])], [float(Rs[0])])
        hist = SparseHistogram.from_pairs(10_000, pairs)
        budget = rng.choice([INF, rng.randint(0, 200)])
        g = greedy_config(hist, spec, budget)
        x = exhaustive_config(hist, spec, budget)
        assert g.objective == pytest.approx(x.objective, rel=1e-12, abs=1e-9)


def test_empty_histogram_stays_active():
    sol = exhaustive_config(SparseHistogram.empty(100), TWO)
    assert sol.energy == 0 and sol.delay == 0
    g = greedy_config(SparseHistogram.empty(100), TWO)
    assert g.config == DemotionConfig.disabled(2)


def test_long_period_goes_deepest_immediately(ddr3):
    hist = SparseHistogram.from_pairs(10**8, [(5 * 10**7, 1)])
    sol = exhaustive_config(hist, ddr3, candidates=[0.0])
    assert sol.config.deepest_state(5 * 10**7) == ddr3.M
    assert min(sol.config.timeouts) == 0
    deepest_only = DemotionConfig((INF,) * (ddr3.M - 1) + (0,))
    assert sol.energy == pytest.approx(idle_energy(deepest_only, 5 * 10**7, ddr3))


def test_zero_budget_disables_everything(ddr3):
    hist = SparseHistogram.from_pairs(10**6, [(100, 50), (90_000, 3)])
    for solver in (greedy_config, exhaustive_config):
        sol = solver(hist, ddr3.restrict(3), budget=0)
        assert sol.delay == 0
        assert sol.config == DemotionConfig.disabled(3)


def test_budget_always_respected():
    rng = random.Random(11)
    for _ in range(200):
        M, P, Es, Rs, pairs, _ = random_instance(rng)
        spec = toy_spec([float(p) for p in P], [float(e) for e in Es], [float(r) for r in Rs])
        hist = SparseHistogram.from_pairs(10_000, pairs)
        budget = rng.randint(0, 300)
        for obj in ("energy", "ed2"):
            sol = greedy_config(hist, spec, budget, obj)
            assert sol.delay <= budget
            ts = [t for t in sol.config.timeouts if math.isfinite(t)]
            assert ts == sorted(ts)


def test_more_states_never_hurt_the_optimum(ddr3):
    rng = np.random.default_rng(4)
    for _ in range(10):
        lengths = rng.integers(1, 40_000, size=12)
        hist = SparseHistogram.from_pairs(10**6, [(int(x), int(rng.integers(1, 9))) for x in lengths])
        prev = math.inf
        for k in (1, 2, 3):
            sol = exhaustive_config(hist, ddr3.restrict(k), budget=20_000)
            assert sol.objective <= prev * (1 + 1e-12)
            prev = sol.objective


def test_exhaustive_guard():
    hist = SparseHistogram.from_pairs(10_000, [(i, 1) for i in range(1, 200)])
    with pytest.raises(DemotionError):
        exhaustive_config(hist, toy_spec([0.5, 0.3, 0.1]), max_configs=1000)


def test_objective_value():
    assert objective_value(7.0, 3.0, 10.0, "energy") == 7.0
    assert objective_value(2.0, 0.0, 10.0, "ed2") == 200.0
    assert objective_value(2.0, 6.0, 0.0, "ed2") == 4 * objective_value(2.0, 3.0, 0.0, "ed2")
    # the rest of the system burns stall_power while this rank stalls
    assert objective_value(2.0, 1.0, 9.0, "ed2", energy_offset=3.0, stall_power=0.5) == 5.5 * 100
    with pytest.raises(DemotionError):
        objective_value(1.0, 1.0, 1.0, "edp")


def test_candidates():
    assert candidate_timeouts(HIST) == [0.0, 3.0, 9.0]
    assert candidate_timeouts(SparseHistogram.empty(8), exponential=True) == [0.0, 1.0, 2.0, 4.0, 8.0]


def test_break_even_config(ddr3):
    cfg = break_even_config(ddr3)
    assert cfg.timeouts == (42, 100, 100, 2462, 20093)
