import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eacpsim import ansatz

angles = st.floats(-2 * np.pi, 2 * np.pi, allow_nan=False)


def finite_difference(theta, i, h=1e-5):
    up = np.asarray(theta, dtype=float).copy()
    dn = up.copy()
    up[i - 1] += h
    dn[i - 1] -= h
    return (ansatz.state(up) - ansatz.state(dn)) / (2 * h)


def test_state_at_origin_is_ket0():
    assert np.allclose(ansatz.state(np.zeros(4)), [1.0, 0.0], atol=1e-15)


def test_state_full_x_rotation():
    assert np.allclose(ansatz.state([0, 0, np.pi, 0]), [0.0, -1.0j], atol=1e-12)


def test_state_pure_global_phase():
    assert np.allclose(ansatz.state([np.pi / 2, 0, 0, 0]), [1.0j, 0.0], atol=1e-12)


def test_gate_sequence_layout():
    names = [g.name for g in ansatz.GATE_SEQUENCE]
    assert names == ["phase", "rz", "rx", "rz"]
    assert [g.generator for g in ansatz.GATE_SEQUENCE] == [None, "z", "x", "z"]
    assert ansatz.GATE_SEQUENCE[0].derivative_prefactor == 1.0j
    assert all(g.derivative_prefactor == -0.5j for g in ansatz.GATE_SEQUENCE[1:])


def test_derivative_examples_at_origin():
    th = np.zeros(4)
    assert np.allclose(ansatz.derivative(th, 1), [1.0j, 0.0], atol=1e-15)
    assert np.allclose(ansatz.derivative(th, 2), [-0.5j, 0.0], atol=1e-15)
    assert np.allclose(ansatz.derivative(th, 3), [0.0, -0.5j], atol=1e-15)
    assert np.allclose(ansatz.derivative(th, 4), [-0.5j, 0.0], atol=1e-15)


def test_derivative_index_validation():
    with pytest.raises(ValueError):
        ansatz.derivative(np.zeros(4), 0)
    with pytest.raises(ValueError):
        ansatz.derivative(np.zeros(4), 5)


def test_derivatives_match_finite_differences():
    rng = np.random.default_rng(21)
    worst = 0.0
    for _ in range(200):
        theta = rng.uniform(-2 * np.pi, 2 * np.pi, 4)
        derivs = ansatz.derivatives(theta)
        for i in range(1, 5):
            err = np.abs(derivs[i - 1] - finite_difference(theta, i)).max()
            worst = max(worst, err)
    assert worst <= 1e-8


def test_state_norm_over_many_random_parameters():
    rng = np.random.default_rng(5)
    thetas = rng.uniform(-10, 10, size=(10_000, 4))
    for theta in thetas:
        psi = ansatz.state(theta)
        assert abs(np.vdot(psi, psi).real - 1.0) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(t1=angles, t2=angles, t4=angles)
def test_populations_independent_of_z_angles_when_unrotated(t1, t2, t4):
    # with theta_3 = 0 the state never leaves |0> up to phase
    psi = ansatz.state([t1, t2, 0.0, t4])
    assert abs(psi[0]) == pytest.approx(1.0, abs=1e-12)
    assert abs(psi[1]) == pytest.approx(0.0, abs=1e-12)


def test_angles_for_state_ket0():
    assert np.allclose(ansatz.angles_for_state([1.0, 0.0]), np.zeros(4), atol=1e-15)


def test_angles_for_state_minus_i_ket1():
    theta = ansatz.angles_for_state([0.0, -1.0j])
    assert np.allclose(theta, [0.0, 0.0, np.pi, 0.0], atol=1e-12)


def test_angles_for_state_plus_superposition():
    target = np.array([1.0, 1.0]) / np.sqrt(2)
    theta = ansatz.angles_for_state(target)
    assert np.abs(ansatz.state(theta) - target).max() <= 1e-10


def test_angles_for_state_roundtrip_random_targets():
    rng = np.random.default_rng(2)
    for _ in range(300):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        v /= np.linalg.norm(v)
        theta = ansatz.angles_for_state(v)
        assert np.abs(ansatz.state(theta) - v).max() <= 1e-10


def test_angles_for_state_rejects_unnormalized():
    with pytest.raises(ValueError, match="normalized"):
        ansatz.angles_for_state([1.0, 1.0])
