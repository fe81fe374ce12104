"""Closed-loop assembly, spectra, and time-domain simulation of the full stack.

The state of a run is the leader ``x0``, N observers ``xhat_i`` and N agents
``x_i``.  Agents use ``u_i = F (sum_j a_ij eta_j - d_i eta_i)`` with
``eta_i = x_i - xhat_i``, so in the tracking error ``xi_i = x_i - x0`` the
observer-free part of the loop is ``xi' = (I x A - M x BF) xi``.
"""
from dataclasses import dataclass

import numpy as np

from ._linalg import frozen, multiset_distance, sort_eigs
from .coupling import CouplingMatrix, CouplingNetwork, build_coupling, diagonalize
from .errors import DivergenceError, ValidationError
from .network import ObserverGraph, observer_rhs
from .synthesis import FeedbackGain, Plant

DEFAULT_STEP = 1e-3
DIVERGENCE_LIMIT = 1e9
_CHECK_EVERY = 256


def _coupling_matrix(cm):
    if isinstance(cm, CouplingMatrix):
        return cm.m
    if isinstance(cm, CouplingNetwork):
        return build_coupling(cm).m
    return np.atleast_2d(np.asarray(cm, dtype=float))


def _gain(f):
    return f.f if isinstance(f, FeedbackGain) else np.atleast_2d(np.asarray(f, dtype=float))


def closed_loop_matrix(plant, cm, f):
    """``I_N x A - M x (B F)``: block (i, j) is ``delta_ij A - m_ij B F``."""
    m = _coupling_matrix(cm)
    f = _gain(f)
    if f.shape != (plant.m, plant.n):
        raise ValidationError(f"F must be {plant.m}x{plant.n}, got {f.shape}")
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"coupling matrix must be square, got {m.shape}")
    return np.kron(np.eye(m.shape[0]), plant.a) - np.kron(m, plant.b @ f)


def block_spectrum(plant, cm, f):
    return sort_eigs(np.linalg.eigvals(closed_loop_matrix(plant, cm, f)))


@dataclass(frozen=True, eq=False)
class DecoupledComparison:
    modes: np.ndarray
    mode_spectra: tuple
    block: np.ndarray
    distance: float
    tolerance: float

    @property
    def passed(self):
        return self.distance <= self.tolerance


def decoupled_compare(plant, cm, f, rtol=1e-6):
    """Check the block spectrum against the union of ``eig(A - p_i B F)`` over modes ``p_i``."""
    diag = diagonalize(_coupling_matrix(cm))
    bf = plant.b @ _gain(f)
    spectra = tuple(sort_eigs(np.linalg.eigvals(plant.a - p * bf)) for p in diag.p)
    block = block_spectrum(plant, cm, f)
    dist = multiset_distance(block, np.concatenate(spectra))
    tol = rtol * (1.0 + float(np.max(np.abs(block))))
    return DecoupledComparison(diag.p, spectra, block, dist, tol)


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything needed for one run; observer states default to the leader's."""

    plant: Plant
    coupling: CouplingNetwork
    observers: ObserverGraph
    gain: FeedbackGain
    x0_init: np.ndarray
    agent_inits: np.ndarray
    observer_inits: np.ndarray = None
    t_final: float = 20.0
    step: float = DEFAULT_STEP

    def __post_init__(self):
        n, N = self.plant.n, self.coupling.n_agents
        x0 = np.array(self.x0_init, dtype=float).ravel()
        agents = np.atleast_2d(np.array(self.agent_inits, dtype=float))
        obs = (np.tile(x0, (N, 1)) if self.observer_inits is None
               else np.atleast_2d(np.array(self.observer_inits, dtype=float)))
        if x0.size != n:
            raise ValidationError(f"leader state has {x0.size} entries, plant has n={n}")
        for name, arr in (("agent", agents), ("observer", obs)):
            if arr.shape != (N, n):
                raise ValidationError(f"{name} initial states {arr.shape}, expected {(N, n)}")
        if self.observers.n_agents != N:
            raise ValidationError(
                f"observer graph has {self.observers.n_agents} agents, coupling has {N}")
        if _gain(self.gain).shape != (self.plant.m, n):
            raise ValidationError(f"F must be {self.plant.m}x{n}")
        if not self.step > 0:
            raise ValidationError(f"step must be positive, got {self.step}")
        if not self.t_final >= self.step:
            raise ValidationError(f"t_final {self.t_final} is shorter than one step")
        object.__setattr__(self, "x0_init", frozen(x0))
        object.__setattr__(self, "agent_inits", frozen(agents))
        object.__setattr__(self, "observer_inits", frozen(obs))
        object.__setattr__(self, "t_final", float(self.t_final))
        object.__setattr__(self, "step", float(self.step))

    @property
    def n_steps(self):
        return int(np.floor(self.t_final / self.step + 1e-9))


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    times: np.ndarray
    leader: np.ndarray      # (T, n)
    agents: np.ndarray      # (T, N, n)
    observers: np.ndarray   # (T, N, n)

    @property
    def eta(self):
        return self.agents - self.observers

    @property
    def xi(self):
        return self.agents - self.leader[:, None, :]

    @property
    def e(self):
        return self.observers - self.leader[:, None, :]


def _pack(x0, obs, agents):
    return np.concatenate([x0, obs.ravel(), agents.ravel()])


def _unpack(y, N, n):
    return y[:n], y[n:n + N * n].reshape(N, n), y[n + N * n:].reshape(N, n)


def stack_rhs(scenario):
    """Right-hand side of the leader/observer/agent ODE on the packed state."""
    plant, graph = scenario.plant, scenario.observers
    m = build_coupling(scenario.coupling).m
    a, b, f = plant.a, plant.b, _gain(scenario.gain)
    N, n = scenario.coupling.n_agents, plant.n

    def rhs(y):
        x0, obs, agents = _unpack(y, N, n)
        eta = agents - obs
        u = -(m @ eta) @ f.T
        return _pack(x0 @ a.T, observer_rhs(a, graph, obs, x0), agents @ a.T + u @ b.T)

    return rhs


def rk4_step(rhs, y, h):
    k1 = rhs(y)
    k2 = rhs(y + h / 2 * k1)
    k3 = rhs(y + h / 2 * k2)
    k4 = rhs(y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4_propagator(gen, h):
    """One classical RK4 step for ``y' = L y`` as a matrix: sum of (hL)^k / k!, k <= 4."""
    hl = h * gen
    out = np.eye(gen.shape[0])
    term = np.eye(gen.shape[0])
    for k in range(1, 5):
        term = term @ hl / k
        out = out + term
    return out


def linear_generator(rhs, dim):
    """Matrix of a linear right-hand side, built column by column."""
    eye = np.eye(dim)
    return np.column_stack([rhs(eye[:, j]) for j in range(dim)])


def simulate(scenario, method="propagator"):
    """Integrate the full stack with classical fixed-step RK4, sampling every step.

    ``method="propagator"`` applies the exact RK4 step matrix of the linear
    system (same iterates as stepping the right-hand side, much faster);
    ``method="rk4"`` evaluates the right-hand side four times per step.
    """
    N, n = scenario.coupling.n_agents, scenario.plant.n
    rhs = stack_rhs(scenario)
    y = _pack(scenario.x0_init, scenario.observer_inits, scenario.agent_inits)
    h, steps = scenario.step, scenario.n_steps
    if method == "propagator":
        prop = rk4_propagator(linear_generator(rhs, y.size), h)
        advance = prop.__matmul__
    elif method == "rk4":
        def advance(y):
            return rk4_step(rhs, y, h)
    else:
        raise ValueError(f"unknown method {method!r}")

    times = h * np.arange(steps + 1)
    out = np.empty((steps + 1, y.size))
    out[0] = y
    start = 1
    while start <= steps:
        stop = min(start + _CHECK_EVERY, steps + 1)
        for i in range(start, stop):
            y = advance(y)
            out[i] = y
        block = out[start:stop]
        bad = ~np.isfinite(block).all(axis=1) | (np.abs(block).max(axis=1) > DIVERGENCE_LIMIT)
        if bad.any():
            i = start + int(np.argmax(bad))
            rec = _record(times[:i + 1], out[:i + 1], N, n)
            raise DivergenceError(f"state diverged at t = {times[i]:.6g}", time=times[i], record=rec)
        start = stop
    return _record(times, out, N, n)


def _record(times, out, N, n):
    T = times.size
    return TrajectoryRecord(times, out[:, :n],
                            agents=out[:, n + N * n:].reshape(T, N, n),
                            observers=out[:, n:n + N * n].reshape(T, N, n))


@dataclass(frozen=True, eq=False)
class Metrics:
    theta: np.ndarray  # (T, N) first state component of every agent
    phi: np.ndarray    # worst regulation error max_i |xi_i1|
    psi: np.ndarray    # spread max_i xi_i1 - min_i xi_i1


def metrics(record):
    xi1 = record.xi[:, :, 0]
    return Metrics(record.agents[:, :, 0], np.abs(xi1).max(axis=1),
                   xi1.max(axis=1) - xi1.min(axis=1))


def crossing_time(times, series, threshold):
    """First sample time after which ``series`` stays at or below ``threshold``; None if never."""
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    above = np.nonzero(np.asarray(series) > threshold)[0]
    if above.size == 0:
        return float(times[0])
    if above[-1] + 1 >= len(times):
        return None
    return float(times[above[-1] + 1])
