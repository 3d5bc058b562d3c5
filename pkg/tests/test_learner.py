from dataclasses import replace

import numpy as np
import pytest

from curriculum_graybox.gridworld import (ACTIONS, Action, GridState, TaskSpec, discounted_return,
                                          initial_state, load_grid, step)
from curriculum_graybox.learner import (LearnerConfig, PolicyParams, TileCodingConfig,
                                        feature_table, featurize,
                                        greedy_return, q_hat, select_action, train)
from curriculum_graybox.tasks import random_task
from oracles import one_step_sarsa

TILES = TileCodingConfig()


def test_features_are_translation_invariant():
    # same treasure offset and hazard layout, both far enough from the walls
    a = TaskSpec(0, 8, 8, (2, 2), (4, 5), fires={(2, 3)})
    b = TaskSpec(1, 9, 8, (4, 3), (6, 6), fires={(4, 4)})
    for act in ACTIONS:
        fa = featurize(TILES, a, GridState((2, 2)), act)
        fb = featurize(TILES, b, GridState((4, 3)), act)
        assert np.array_equal(fa, fb)
        assert np.array_equal(fa, featurize(TILES, a, GridState((2, 2)), act))


def test_feature_cardinality_random_states():
    rng = np.random.default_rng(0)
    for k in range(20):
        task = random_task(rng, k, 7, 7, 3, 3)
        for _ in range(50):
            pos = (int(rng.integers(7)), int(rng.integers(7)))
            f = featurize(TILES, task, GridState(pos), Action(int(rng.integers(4))))
            assert len(f) == TILES.num_tilings
            assert len(set(f.tolist())) == TILES.num_tilings
            assert np.all((f >= 0) & (f < TILES.K))


def test_q_hat():
    feats = np.arange(8) * 3
    assert q_hat(PolicyParams.zeros(TILES), feats) == 0.0
    assert q_hat(PolicyParams(np.ones(TILES.K)), feats) == 8.0
    rng = np.random.default_rng(1)
    theta = PolicyParams(rng.standard_normal(TILES.K))
    idx = rng.choice(TILES.K, size=8, replace=False)
    dense = np.zeros(TILES.K)
    dense[idx] = 1.0
    assert q_hat(theta, idx) == pytest.approx(dense @ theta.weights, abs=1e-12)
    with pytest.raises(IndexError):
        q_hat(theta, [TILES.K])


def test_select_action_greedy_and_ties():
    task = load_grid("S....\n.....\n....T")
    s = GridState((0, 0))
    rng = np.random.default_rng(0)
    zero = PolicyParams.zeros(TILES)
    assert select_action(zero, task, s, 0.0, rng, TILES) == Action.NORTH
    theta = zero.copy()
    theta.weights[featurize(TILES, task, s, Action.EAST)] += 1.0
    for _ in range(20):
        assert select_action(theta, task, s, 0.0, rng, TILES) == Action.EAST


def test_select_action_uniform_when_epsilon_one():
    task = load_grid("S....\n.....\n....T")
    rng = np.random.default_rng(42)
    theta = PolicyParams.zeros(TILES)
    draws = 10_000
    counts = np.zeros(4)
    for _ in range(draws):
        counts[select_action(theta, task, GridState((1, 1)), 1.0, rng, TILES)] += 1
    expected = draws / 4
    sigma = np.sqrt(draws * 0.25 * 0.75)
    assert np.all(np.abs(counts - expected) < 3 * sigma)


def test_train_zero_episodes():
    task = load_grid("S.T")
    theta0 = PolicyParams(np.arange(TILES.K, dtype=float))
    theta, returns = train(task, theta0, LearnerConfig(episodes=0), TILES)
    assert np.array_equal(theta.weights, theta0.weights)
    assert len(returns) == 0


def test_train_deterministic():
    task = random_task(np.random.default_rng(3), 0, 6, 6, 2, 2)
    cfg = LearnerConfig(episodes=60, rng_seed=11)
    t1, r1 = train(task, PolicyParams.zeros(TILES), cfg, TILES)
    t2, r2 = train(task, PolicyParams.zeros(TILES), cfg, TILES)
    assert np.array_equal(t1.weights, t2.weights)
    assert np.array_equal(r1, r2)
    t3, _ = train(task, PolicyParams.zeros(TILES), replace(cfg, rng_seed=12), TILES)
    assert not np.array_equal(t1.weights, t3.weights)


@pytest.mark.parametrize("seed", range(5))
def test_corridor_reaches_optimum(seed):
    task = load_grid("S.T")
    theta, _ = train(task, PolicyParams.zeros(TILES), LearnerConfig(episodes=100, rng_seed=seed),
                     TILES)
    assert abs(greedy_return(task, theta, TILES) - 197.0) <= 1e-9


@pytest.mark.parametrize("task_seed", [0, 1])
def test_lambda_zero_matches_one_step_sarsa(task_seed):
    task = random_task(np.random.default_rng(task_seed), 0, 6, 6, 2, 2)
    cfg = LearnerConfig(episodes=40, trace_decay=0.0, rng_seed=5)
    theta, returns = train(task, PolicyParams.zeros(TILES), cfg, TILES)
    w, oracle_returns = one_step_sarsa(task, np.zeros(TILES.K), cfg.alpha(TILES), cfg.epsilon,
                                       cfg.episodes, cfg.rng_seed, TILES)
    assert np.array_equal(theta.weights, w)
    assert np.array_equal(returns, oracle_returns)


def test_returns_match_replayed_trace():
    """Replay the greedy policy of a trained learner and re-sum the rewards."""
    task = random_task(np.random.default_rng(8), 0, 5, 5, 1, 1)
    theta, _ = train(task, PolicyParams.zeros(TILES), LearnerConfig(episodes=50), TILES)
    feats = feature_table(TILES, task)

    def greedy(s):
        values = [theta.weights[feats[task.cell_index(s.position), a]].sum() for a in ACTIONS]
        return ACTIONS[int(np.argmax(values))]

    s = initial_state(task)
    rewards = []
    for _ in range(task.max_steps):
        out = step(task, s, greedy(s))
        rewards.append(out.reward)
        if out.terminal:
            break
        s = out.next_state
    assert greedy_return(task, theta, TILES) == pytest.approx(
        discounted_return(rewards, task.discount), abs=1e-9)


def test_transfer_keeps_shape():
    a = random_task(np.random.default_rng(1), 0, 5, 5, 1, 1)
    b = random_task(np.random.default_rng(2), 1, 7, 7, 2, 2)
    theta, _ = train(a, PolicyParams.zeros(TILES), LearnerConfig(episodes=10), TILES)
    theta2, _ = train(b, theta, LearnerConfig(episodes=10), TILES)
    assert theta2.K == TILES.K
    with pytest.raises(ValueError):
        train(b, PolicyParams(np.zeros(10)), LearnerConfig(episodes=1), TILES)


def test_policy_params_file_roundtrip(tmp_path):
    theta = PolicyParams(np.random.default_rng(0).standard_normal(TILES.K), TILES.digest())
    path = tmp_path / "theta.bin"
    theta.save(path)
    back = PolicyParams.load(path, TILES)
    assert np.array_equal(back.weights, theta.weights)
    with pytest.raises(ValueError):
        PolicyParams.load(path, TileCodingConfig(num_tilings=4))
