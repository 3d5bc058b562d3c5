import itertools
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from curriculum_graybox.curriculum import (EvalCache, EvalResult, InfeasibleCurriculum,
                                           Normalizer, RegretConfig, TaskLibrary,
                                           check_curriculum, count_feasible, enumerate_feasible,
                                           evaluate_curriculum, evaluate_many, merit,
                                           rank_curriculum, stage_seeds)
from curriculum_graybox.gridworld import load_grid
from curriculum_graybox.learner import LearnerConfig, PolicyParams, train
from curriculum_graybox.tasks import generate_library

SMALL = RegretConfig(episodes_final=15, repetitions=2, base_seed=3)


@pytest.fixture(scope="module")
def lib():
    return generate_library(4, n=3, L=2)


def test_counts_from_the_benchmark_tables():
    t = time.perf_counter()
    assert count_feasible(12, 4) == 13345
    assert sum(1 for _ in enumerate_feasible(12, 4)) == 13345
    assert count_feasible(7, 7) == 13700
    assert sum(1 for _ in enumerate_feasible(7, 7)) == 13700
    assert time.perf_counter() - t < 1.0
    assert count_feasible(5, 3) == 1 + 5 + 20 + 60 == 86


def test_enumeration_exhaustive_small():
    for n in range(1, 9):
        for L in range(1, n + 1):
            if count_feasible(n, L) > 20000:
                continue
            seqs = list(enumerate_feasible(n, L))
            assert len(seqs) == count_feasible(n, L) == len(set(seqs))
            brute = {s for k in range(L + 1) for s in itertools.product(range(n), repeat=k)
                     if len(set(s)) == k}
            assert set(seqs) == brute
            assert seqs == sorted(seqs, key=lambda s: (len(s), s))
    with pytest.raises(ValueError):
        list(enumerate_feasible(3, 4))


def test_check_curriculum():
    assert check_curriculum([2, 0], 3, 2) == (2, 0)
    for bad in ([1, 1], [0, 1, 2], [3]):
        with pytest.raises(InfeasibleCurriculum):
            check_curriculum(bad, 3, 2)


def test_library_validation():
    t = load_grid("S.T")
    with pytest.raises(ValueError):
        TaskLibrary((t,), t, 2)


def _fake(c, regret):
    return EvalResult(c, regret, -regret, np.zeros((1, 1)), Normalizer(), 0.0, (0,))


def test_rank_ties_and_sort_oracle():
    rng = np.random.default_rng(0)
    cs = list(enumerate_feasible(4, 2))
    vals = rng.integers(0, 5, len(cs)).astype(float)
    results = [_fake(c, v) for c, v in zip(cs, vals)]
    ordered = sorted(vals)
    for c, v in zip(cs, vals):
        assert rank_curriculum(c, results) == ordered.index(v) + 1
    flat = [_fake(c, 1.0) for c in cs]
    assert all(rank_curriculum(c, flat) == 1 for c in cs)
    with pytest.raises(KeyError):
        rank_curriculum((9,), results)


def test_empty_curriculum_is_direct_training(lib):
    res = evaluate_curriculum(lib, (), SMALL)
    norm = Normalizer.for_task(lib.final_task)
    for r, seed in enumerate(res.seeds):
        _, fin = stage_seeds(seed, ())
        learner = replace(SMALL.learner, episodes=SMALL.episodes_final, rng_seed=fin)
        _, rets = train(lib.final_task, PolicyParams.zeros(SMALL.tiles), learner, SMALL.tiles)
        assert np.array_equal(res.returns[r], rets)
    expected = np.mean([np.sum(1.0 - norm(row)) for row in res.returns])
    assert res.regret == pytest.approx(expected, abs=1e-12)
    assert res.seeds == (3, 4)


def test_zero_gap_normalizer(lib):
    # (ret + 1e300) / 1e300 rounds to exactly 1.0 for every achievable return
    cfg = replace(SMALL, normalizer=Normalizer(offset=-1e300, scale=1e300), threshold=1.0)
    res = evaluate_curriculum(lib, (0,), cfg)
    assert res.regret == 0.0
    assert res.merit == cfg.episodes_final * cfg.threshold


@pytest.mark.parametrize("c", [(), (0,), (1, 2), (2, 0)])
def test_merit_regret_identity(lib, c):
    res = evaluate_curriculum(lib, c, SMALL)
    assert res.merit + res.regret == pytest.approx(SMALL.episodes_final * SMALL.threshold,
                                                   abs=1e-9)
    assert merit(res) == pytest.approx(res.merit, abs=1e-12)
    again = evaluate_curriculum(lib, c, SMALL)
    assert again.same_as(res)


def test_threshold_zero_gives_negative_regret_as_merit(lib):
    res = evaluate_curriculum(lib, (1,), replace(SMALL, threshold=0.0))
    assert res.merit == pytest.approx(-res.regret, abs=1e-12)


def test_cache_transparency(lib):
    cache = EvalCache()
    cs = list(enumerate_feasible(3, 2))
    with_cache = evaluate_many(lib, cs, SMALL, cache)
    assert cache.misses == len(cs) and len(cache) == len(cs)
    again = evaluate_many(lib, cs, SMALL, cache)
    assert cache.hits == len(cs)
    without = [evaluate_curriculum(lib, c, SMALL) for c in cs]
    for a, b, c in zip(with_cache, again, without):
        assert a is b
        assert a.same_as(c)


def test_parallel_matches_serial(lib):
    cs = list(enumerate_feasible(3, 2))
    serial = evaluate_many(lib, cs, SMALL, workers=1)
    threaded = evaluate_many(lib, cs, SMALL, EvalCache(), workers=3)
    assert all(a.same_as(b) for a, b in zip(serial, threaded))


def test_digest_separates_repetitions(lib):
    cache = EvalCache()
    r2 = evaluate_curriculum(lib, (0,), SMALL, cache)
    r3 = evaluate_curriculum(lib, (0,), replace(SMALL, repetitions=3), cache)
    assert len(cache) == 2
    assert r3.returns.shape[0] == 3 and r2.returns.shape[0] == 2
    assert SMALL.digest(lib) != replace(SMALL, learner=LearnerConfig(epsilon=0.2)).digest(lib)


def test_cache_persistence_and_torn_tail(lib, tmp_path):
    path = tmp_path / "cache.jsonl"
    cache = EvalCache(path)
    first = evaluate_curriculum(lib, (1, 0), SMALL, cache)
    evaluate_curriculum(lib, (2,), SMALL, cache)
    # simulate an interrupted writer
    with open(path, "a", encoding="utf-8") as fh:
        fh.write('{"curriculum": [0], "digest": "tru')
    reloaded = EvalCache(path)
    assert len(reloaded) == 2
    hit = evaluate_curriculum(lib, (1, 0), SMALL, reloaded)
    assert reloaded.hits == 1 and hit.same_as(first)
    # a new record after the torn line must survive the next reload
    evaluate_curriculum(lib, (0,), SMALL, reloaded)
    assert len(EvalCache(path)) == 3


def test_stage_seeds_pair_the_final_stage():
    a_src, a_fin = stage_seeds(5, (0, 1))
    b_src, b_fin = stage_seeds(5, (1,))
    assert a_fin == b_fin
    assert len(a_src) == 2 and a_src[0] != a_src[1]
    assert stage_seeds(6, ())[1] != a_fin


def test_regret_config_validation():
    with pytest.raises(ValueError):
        RegretConfig(repetitions=0)
    with pytest.raises(ValueError):
        RegretConfig(episodes_final=0)


def test_perm_sum_closed_form():
    for n in range(1, 9):
        for L in range(1, n + 1):
            assert count_feasible(n, L) == sum(math.factorial(n) // math.factorial(n - k)
                                               for k in range(L + 1))
