import numpy as np
import pytest

from eacpsim import system
from eacpsim.bath import BathInitialCondition, BathSpec
from eacpsim.numeric import KET_0, SIGMA_X, SIGMA_Z, PropagationError
from eacpsim.system import (
    PopulationSeries,
    SystemParams,
    hamiltonian,
    populations,
    propagate_exact,
    write_populations_csv,
)


def decoupled_bath():
    spec = BathSpec(omega=[1.0], coupling=[1.0], mass=[1.0])
    return spec, BathInitialCondition(x0=[0.0], p0=[0.0])


def constant_force_bath(g, omega=1e-6):
    # a near-static mode realizes f(t) = g to within g * (omega * t)^2 / 2
    spec = BathSpec(omega=[omega], coupling=[1.0], mass=[1.0])
    return spec, BathInitialCondition(x0=[g], p0=[0.0])


def test_hamiltonian_is_sigma_x_for_bare_tunneling():
    h = hamiltonian(SystemParams(omega_rabi=1.0), f=0.0)
    assert np.allclose(h, SIGMA_X, atol=1e-15)


def test_hamiltonian_with_driving_force():
    h = hamiltonian(SystemParams(omega_rabi=1.0), f=2.0)
    assert np.allclose(h, np.array([[-2.0, 1.0], [1.0, 2.0]]), atol=1e-15)


def test_hamiltonian_pure_bias():
    h = hamiltonian(SystemParams(omega_rabi=0.0, epsilon=0.5), f=0.0)
    assert np.allclose(h, 0.5 * SIGMA_Z, atol=1e-15)


def test_populations_basis_states():
    assert populations(np.array([1.0, 0.0])) == (1.0, 0.0)
    p1, p2 = populations(np.array([1.0, 1.0]) / np.sqrt(2))
    assert p1 == pytest.approx(0.5) and p2 == pytest.approx(0.5)
    p1, p2 = populations(np.array([np.sqrt(0.3), 1j * np.sqrt(0.7)]))
    assert p1 == pytest.approx(0.3) and p2 == pytest.approx(0.7)


def test_exact_propagator_reproduces_rabi_oscillation():
    spec, ic = decoupled_bath()
    series = propagate_exact(SystemParams(omega_rabi=1.0), spec, ic, 10.0, 0.01)
    assert np.abs(series.p1 - np.cos(series.times) ** 2).max() < 1e-10


def test_exact_propagator_frozen_without_tunneling():
    spec, ic = decoupled_bath()
    series = propagate_exact(SystemParams(omega_rabi=0.0, epsilon=0.5), spec, ic, 5.0, 0.01)
    assert np.abs(series.p1 - 1.0).max() < 1e-12


def test_exact_propagator_static_detuning_rabi_formula():
    g = 1.5
    spec, ic = constant_force_bath(-g)  # H = sigma_x + g sigma_z
    series = propagate_exact(SystemParams(omega_rabi=1.0), spec, ic, 10.0, 0.005)
    r = np.sqrt(1.0 + g * g)
    expected = 1.0 - np.sin(r * series.times) ** 2 / (1.0 + g * g)
    assert np.abs(series.p1 - expected).max() < 1e-5


def test_exact_propagator_norm_conservation_long_run():
    spec, ic = decoupled_bath()
    series = propagate_exact(SystemParams(omega_rabi=1.0), spec, ic, 10.0, 1e-3)
    assert series.times.size == 10_001
    assert np.abs(series.p1 + series.p2 - 1.0).max() < 1e-10


def test_exact_propagator_is_second_order_in_dt():
    # time-dependent driving so the midpoint rule's dt^2 error is visible;
    # the reference is the same scheme at a 40x finer step
    spec = BathSpec(omega=[1.3], coupling=[1.5], mass=[1.0])
    ic = BathInitialCondition(x0=[1.2], p0=[0.8])
    params = SystemParams(omega_rabi=1.0)
    fine = propagate_exact(params, spec, ic, 5.0, 0.001)

    def max_err(dt):
        series = propagate_exact(params, spec, ic, 5.0, dt)
        stride = int(round(dt / 0.001))
        return np.abs(series.p1 - fine.p1[::stride]).max()

    ratio = max_err(0.08) / max_err(0.04)
    assert 2.8 <= ratio <= 5.5


def test_exact_propagator_aborts_on_norm_drift(monkeypatch):
    spec, ic = decoupled_bath()
    monkeypatch.setattr(system, "matrix_exp_2x2", lambda h, dt: 1.01 * np.eye(2))
    with pytest.raises(PropagationError, match="norm drift"):
        propagate_exact(SystemParams(omega_rabi=1.0), spec, ic, 1.0, 0.1)


def test_population_series_samples_and_csv(tmp_path):
    series = PopulationSeries(
        times=np.array([0.0, 0.5]), p1=np.array([1.0, 0.8]), p2=np.array([0.0, 0.2])
    )
    samples = series.samples()
    assert samples[1].t == 0.5 and samples[1].p2 == 0.2
    path = tmp_path / "pops.csv"
    write_populations_csv(path, series, method="exact")
    lines = path.read_text().splitlines()
    assert lines[0] == "t,p1,p2,method"
    assert lines[1].endswith(",exact")
    assert len(lines) == 3
