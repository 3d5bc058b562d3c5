"""Independent reference implementations shared by several test modules."""
import numpy as np

from curriculum_graybox.gridworld import ACTIONS, discounted_return, initial_state, step
from curriculum_graybox.learner import exploration_draws, featurize


def one_step_sarsa(task, theta, alpha, epsilon, episodes, seed, tiles):
    """Plain one-step Sarsa written against the environment API."""
    w = theta.copy()
    draws = exploration_draws(seed, episodes, task.max_steps)

    def q(s, a):
        total = 0.0
        for k in featurize(tiles, task, s, a):
            total += w[k]
        return total

    def choose(s, u):
        if u[0] < epsilon:
            return ACTIONS[min(int(u[1] * 4.0), 3)]
        values = [q(s, a) for a in ACTIONS]
        return ACTIONS[int(np.argmax(values))]

    returns = []
    for ep in range(episodes):
        s = initial_state(task)
        a = choose(s, draws[ep, 0])
        rewards = []
        for t in range(task.max_steps):
            out = step(task, s, a)
            rewards.append(out.reward)
            if out.terminal:
                target = out.reward
            else:
                a2 = choose(out.next_state, draws[ep, t + 1])
                target = out.reward + task.discount * q(out.next_state, a2)
            delta = target - q(s, a)
            for k in featurize(tiles, task, s, a):
                w[k] += alpha * delta
            if out.terminal:
                break
            s, a = out.next_state, a2
        returns.append(discounted_return(rewards, task.discount))
    return w, np.array(returns)
