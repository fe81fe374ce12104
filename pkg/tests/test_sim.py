import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from coupled_regulation._linalg import multiset_distance
from coupled_regulation.coupling import CouplingNetwork, build_coupling, compute_kz
from coupled_regulation.errors import DegeneracyError, DivergenceError, ValidationError
from coupled_regulation.network import ObserverGraph
from coupled_regulation.scenario import GAIN_FAST, ring_adjacency, ring_benchmark
from coupled_regulation.sim import (Scenario, TrajectoryRecord, block_spectrum,
                                    closed_loop_matrix, crossing_time, decoupled_compare,
                                    metrics, rk4_step, simulate, stack_rhs)
from coupled_regulation.synthesis import FeedbackGain, positive_real_gain

from conftest import random_diagonalizable_network, ring_network

F_FAST = np.array(GAIN_FAST)


def assemble_by_blocks(a, b, m, f):
    N, n = m.shape[0], a.shape[0]
    out = np.zeros((N * n, N * n))
    for i in range(N):
        for j in range(N):
            out[i * n:(i + 1) * n, j * n:(j + 1) * n] = (i == j) * a - m[i, j] * b @ f
    return out


def test_closed_loop_single_agent(ring_plant):
    got = closed_loop_matrix(ring_plant, [[0.7]], F_FAST)
    np.testing.assert_allclose(got, ring_plant.a - 0.7 * ring_plant.b @ F_FAST)


def test_closed_loop_identity_coupling(ring_plant):
    got = closed_loop_matrix(ring_plant, np.eye(2), F_FAST)
    blk = ring_plant.a - ring_plant.b @ F_FAST
    np.testing.assert_allclose(got, sla.block_diag(blk, blk))


def test_closed_loop_ring(ring_plant, ring_coupled):
    cm = build_coupling(ring_coupled)
    got = closed_loop_matrix(ring_plant, cm, F_FAST)
    assert got.shape == (10, 10)
    np.testing.assert_allclose(got[0:2, 2:4], 0.2 * ring_plant.b @ F_FAST, atol=1e-15)
    np.testing.assert_allclose(got, assemble_by_blocks(ring_plant.a, ring_plant.b, cm.m, F_FAST),
                               atol=1e-15)


def test_closed_loop_rejects_bad_gain(ring_plant):
    with pytest.raises(ValidationError):
        closed_loop_matrix(ring_plant, np.eye(2), [[1.0, 2.0, 3.0]])


def test_block_spectrum_diag(ring_plant):
    got = block_spectrum(ring_plant, np.diag([1.0, 2.0]), F_FAST)
    want = []
    for d in (1.0, 2.0):
        # lambda^2 + d f2 lambda - 0.5 d f1
        want += list(np.roots([1.0, d * F_FAST[0, 1], -0.5 * d * F_FAST[0, 0]]))
    assert multiset_distance(got, want) <= 1e-12
    assert np.all(np.diff(got.real) >= 0)


def test_block_spectrum_positive_real_pipeline(ring_plant, ring_coupled):
    cm = build_coupling(ring_coupled)
    gain = positive_real_gain(ring_plant, compute_kz(cm))
    assert np.all(block_spectrum(ring_plant, cm, gain).real < 0)


def test_decoupled_diagonal(ring_plant):
    rep = decoupled_compare(ring_plant, np.diag([0.5, 1.0, 3.0]), F_FAST)
    assert rep.distance <= 1e-12
    assert rep.passed


def test_decoupled_ring_small_coupling(ring_plant):
    rep = decoupled_compare(ring_plant, build_coupling(ring_network(1.0, 0.01)), F_FAST)
    assert rep.distance <= 1e-6
    assert len(rep.mode_spectra) == 5


def test_decoupled_jordan_block(ring_plant):
    with pytest.raises(DegeneracyError):
        decoupled_compare(ring_plant, [[1.0, -1.0], [0.0, 1.0]], F_FAST)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_decoupled_identity_random(seed):
    plant = ring_benchmark(0.2, 0.2).plant()
    net = random_diagonalizable_network(np.random.default_rng(seed))
    assert decoupled_compare(plant, build_coupling(net), F_FAST).passed


def _ring_scenario(rho=0.2, eps=0.2, f=GAIN_FAST, t_final=5.0, step=1e-2, **kw):
    return ring_benchmark(rho, eps, f, horizon=t_final, step=step, **kw).to_scenario()


def test_leader_ramp_is_exact():
    rec = simulate(_ring_scenario(t_final=4.0, step=0.1))
    np.testing.assert_allclose(rec.leader[:, 0], -0.5 * rec.times, atol=1e-13)
    np.testing.assert_allclose(rec.leader[:, 1], 1.0, atol=0)


def test_consensus_manifold_is_invariant():
    sf = ring_benchmark(0.2, 0.2)
    sf.agents = [list(sf.leader) for _ in range(5)]
    rec = simulate(sf.to_scenario(t_final=3.0, step=0.01))
    # the leader ramps, so roundoff scales with |x0|
    for arr in (rec.eta, rec.xi, rec.e):
        assert np.max(np.abs(arr)) <= 1e-12


def test_record_identity_e_equals_xi_minus_eta():
    rng = np.random.default_rng(0)
    sf = ring_benchmark(0.2, 0.2, observers=(rng.normal(size=(5, 2)) + [0, 1]).tolist())
    rec = simulate(sf.to_scenario(t_final=2.0, step=0.01))
    assert np.max(np.abs(rec.e - (rec.xi - rec.eta))) <= 1e-12


def test_propagator_matches_rhs_stepping():
    rng = np.random.default_rng(1)
    sf = ring_benchmark(0.2, 0.2, observers=(rng.normal(size=(5, 2)) + [0, 1]).tolist())
    sc = sf.to_scenario(t_final=1.0, step=0.01)
    fast = simulate(sc)
    slow = simulate(sc, method="rk4")
    assert np.max(np.abs(fast.agents - slow.agents)) <= 1e-12
    assert np.max(np.abs(fast.observers - slow.observers)) <= 1e-12


def test_rk4_step_scalar_decay():
    # one step of y' = -y from 1: 1 - h + h^2/2 - h^3/6 + h^4/24
    h = 0.3
    got = rk4_step(lambda y: -y, np.array([1.0]), h)
    assert got[0] == pytest.approx(1 - h + h**2 / 2 - h**3 / 6 + h**4 / 24, abs=1e-15)


def test_matches_matrix_exponential():
    sc = _ring_scenario(t_final=20.0, step=1e-3)
    rec = simulate(sc)
    gen = closed_loop_matrix(sc.plant, sc.coupling, sc.gain)
    xi0 = rec.xi[0].ravel()
    idx = np.arange(0, rec.times.size, 100)
    exact = sla.expm(rec.times[idx, None, None] * gen) @ xi0
    assert np.max(np.abs(rec.xi[idx].reshape(idx.size, -1) - exact)) <= 1e-6


def test_fourth_order_convergence():
    def defect(h):
        sc = _ring_scenario(t_final=20.0, step=h)
        rec = simulate(sc)
        gen = closed_loop_matrix(sc.plant, sc.coupling, sc.gain)
        exact = sla.expm(20.0 * gen) @ rec.xi[0].ravel()
        return np.max(np.abs(rec.xi[-1].ravel() - exact))
    e1, e2 = defect(0.1), defect(0.05)
    assert e1 / e2 >= 8
    assert np.log2(e1 / e2) == pytest.approx(4, abs=0.5)


def test_divergence_is_reported():
    sf = ring_benchmark(0.2, 0.0, f=[[0.0, -5.0]])
    with pytest.raises(DivergenceError) as info:
        simulate(sf.to_scenario(t_final=200.0, step=0.01))
    err = info.value
    rec = err.record
    assert rec.times[-1] == pytest.approx(err.time)
    assert np.abs(rec.agents[-1]).max() > 1e9
    assert np.abs(rec.agents[-2]).max() <= 1e9


def test_row_count():
    sc = _ring_scenario(t_final=1.0, step=0.3)
    rec = simulate(sc)
    assert rec.times.size == int(np.floor(1.0 / 0.3)) + 1


def test_scenario_rejects_bad_shapes(ring_plant, ring_coupled):
    obs = ObserverGraph(ring_adjacency(), [1, 0, 0, 0, 0])
    with pytest.raises(ValidationError):
        Scenario(ring_plant, ring_coupled, obs, FeedbackGain(F_FAST), [0, 1], np.zeros((4, 2)))
    with pytest.raises(ValidationError):
        Scenario(ring_plant, ring_coupled, obs, FeedbackGain(F_FAST), [0, 1], np.zeros((5, 2)),
                 step=0.0)
    with pytest.raises(ValidationError):
        Scenario(ring_plant, CouplingNetwork.uncoupled([1, 1]), obs, FeedbackGain(F_FAST),
                 [0, 1], np.zeros((2, 2)))


def _record_from_xi1(values):
    values = np.atleast_2d(np.asarray(values, dtype=float))
    T, N = values.shape
    agents = np.zeros((T, N, 2))
    agents[:, :, 0] = values
    return TrajectoryRecord(np.arange(T, dtype=float), np.zeros((T, 2)), agents, np.zeros((T, N, 2)))


def test_metrics_simple():
    met = metrics(_record_from_xi1([[1, 2, 3, 4, 5]]))
    assert met.phi[0] == 5 and met.psi[0] == 4
    np.testing.assert_array_equal(met.theta[0], [1, 2, 3, 4, 5])


def test_metrics_zero():
    met = metrics(_record_from_xi1(np.zeros((3, 5))))
    assert np.all(met.phi == 0) and np.all(met.psi == 0)


def test_metrics_ring_initial_value():
    met = metrics(simulate(_ring_scenario(t_final=0.1, step=0.01)))
    assert met.phi[0] == 3.0 and met.psi[0] == 6.0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=3), min_size=1, max_size=5))
def test_metrics_bounds(rows):
    met = metrics(_record_from_xi1(rows))
    assert np.all(met.phi >= 0) and np.all(met.psi >= 0)
    assert np.all(met.psi <= 2 * met.phi * (1 + 1e-15))


@pytest.mark.parametrize("values, want", [
    ([3, 1, 0.4, 0.45, 0.3], 2.0),
    ([3, 0.4, 0.6, 0.3], 3.0),
    ([3, 2, 1, 0.9], None),
    ([0.1, 0.2], 0.0),
])
def test_crossing_time(values, want):
    assert crossing_time(np.arange(len(values), dtype=float), values, 0.5) == want


def test_crossing_time_rejects_threshold():
    with pytest.raises(ValueError):
        crossing_time([0.0], [1.0], 0.0)


def test_stack_rhs_agent_law():
    sf = ring_benchmark(0.2, 0.2)
    sc = sf.to_scenario(t_final=1.0, step=0.1)
    rhs = stack_rhs(sc)
    rng = np.random.default_rng(5)
    y = rng.normal(size=2 + 20)
    obs, agents = y[2:12].reshape(5, 2), y[12:].reshape(5, 2)
    eta = agents - obs
    a_mat = build_coupling(sc.coupling).adjacency
    d = sc.coupling.self_gains
    want = np.array([sc.plant.a @ agents[i] + sc.plant.b @ F_FAST @
                     (sum(a_mat[i, j] * eta[j] for j in range(5)) - d[i] * eta[i])
                     for i in range(5)])
    np.testing.assert_allclose(rhs(y)[12:].reshape(5, 2), want, atol=1e-13)
