"""Cyber layer: distributed observers of the leader state.

Each agent runs ``xhat_i' = A xhat_i + gamma_i`` with the pinned consensus
correction

    gamma_i = mu * (sum_j alpha_ij (xhat_j - xhat_i) + g_i (x0 - xhat_i)).

``alpha_ij > 0`` means agent i listens to agent j; ``g_i > 0`` means agent i
sees the leader directly.
"""
from collections import deque
from dataclasses import dataclass

import numpy as np

from ._linalg import frozen
from .errors import ValidationError

DEFAULT_MU = 10.0


@dataclass(frozen=True, eq=False)
class ObserverGraph:
    alpha: np.ndarray
    pinning: np.ndarray
    mu: float = DEFAULT_MU

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float)
        pinning = np.array(self.pinning, dtype=float).ravel()
        if alpha.ndim != 2 or alpha.shape != (pinning.size, pinning.size):
            raise ValidationError(
                f"alpha {alpha.shape} must be N x N with N = {pinning.size} pinning gains")
        for i, j in zip(*np.nonzero(alpha < 0)):
            raise ValidationError(f"alpha[{i},{j}] = {alpha[i, j]} is negative")
        for i in np.nonzero(np.diag(alpha) != 0)[0]:
            raise ValidationError(f"alpha[{i},{i}] must be zero")
        for i in np.nonzero(pinning < 0)[0]:
            raise ValidationError(f"pinning gain g[{i}] = {pinning[i]} is negative")
        if not np.any(pinning > 0):
            raise ValidationError("at least one agent must be pinned to the leader")
        if not self.mu > 0:
            raise ValidationError(f"mu must be positive, got {self.mu}")
        object.__setattr__(self, "alpha", frozen(alpha))
        object.__setattr__(self, "pinning", frozen(pinning))
        object.__setattr__(self, "mu", float(self.mu))

    @property
    def n_agents(self):
        return self.pinning.size

    @property
    def pinned(self):
        """Agents with direct leader access."""
        return tuple(int(i) for i in np.nonzero(self.pinning > 0)[0])

    def error_matrix(self):
        """``mu (L + G)`` so that the stacked observer error obeys ``e' = (I x A - mu (L+G) x I) e``."""
        lap = np.diag(self.alpha.sum(axis=1)) - self.alpha
        return self.mu * (lap + np.diag(self.pinning))


def leader_reachable(graph):
    seen = set(graph.pinned)
    queue = deque(seen)
    while queue:
        j = queue.popleft()
        for i in np.nonzero(graph.alpha[:, j] > 0)[0]:
            if int(i) not in seen:
                seen.add(int(i))
                queue.append(int(i))
    return len(seen) == graph.n_agents


def _states(graph, observer_states, leader_state):
    xhat = np.atleast_2d(np.asarray(observer_states, dtype=float))
    x0 = np.asarray(leader_state, dtype=float).ravel()
    if xhat.shape != (graph.n_agents, x0.size):
        raise ValidationError(
            f"observer states {xhat.shape} do not match N={graph.n_agents}, n={x0.size}")
    return xhat, x0


def gamma(graph, observer_states, leader_state):
    """Consensus corrections, one row per agent."""
    xhat, x0 = _states(graph, observer_states, leader_state)
    e = xhat - x0
    return -graph.error_matrix() @ e


def observer_rhs(a, graph, observer_states, leader_state):
    xhat, x0 = _states(graph, observer_states, leader_state)
    a = np.asarray(a, dtype=float)
    if a.shape != (x0.size, x0.size):
        raise ValidationError(f"A {a.shape} does not match state dimension {x0.size}")
    return xhat @ a.T + gamma(graph, xhat, x0)
