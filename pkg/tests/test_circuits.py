import numpy as np
import pytest

from eacpsim import ansatz, circuits
from eacpsim.bath import BathSpec, BathInitialCondition, as_generator
from eacpsim.circuits import (
    CircuitBackend,
    NoiseParams,
    ShotConfig,
    assemble_circuit,
    build_a_circuit,
    build_c_circuit,
    dump_circuits,
    estimate,
    format_circuit,
    run,
)
from eacpsim.mclachlan import assemble_analytic
from eacpsim.system import SystemParams, hamiltonian

PARAMS = SystemParams(omega_rabi=1.0)
EXACT = ShotConfig(shots=0)


def analytic_elements(theta, f):
    derivs = ansatz.derivatives(theta)
    psi = ansatz.state(theta)
    a = derivs.conj() @ derivs.T
    c = derivs.conj() @ (hamiltonian(PARAMS, f) @ psi)
    return a, c


def exact_estimate(circ):
    return circ.scale * run(circ, EXACT)


# --- construction and exact-mode values ---------------------------------


def test_a_diagonal_element_has_unit_raw_expectation():
    circ = build_a_circuit(np.zeros(4), 2, 2, "real")
    assert run(circ, EXACT) == pytest.approx(1.0, abs=1e-12)
    assert exact_estimate(circ) == pytest.approx(0.25, abs=1e-12)


def test_a_cross_element_vanishes_at_origin():
    circ = build_a_circuit(np.zeros(4), 2, 3, "real")
    assert exact_estimate(circ) == pytest.approx(0.0, abs=1e-12)


def test_c_circuit_examples_at_origin():
    th = np.zeros(4)
    assert exact_estimate(build_c_circuit(th, 3, "x", "imag")) == pytest.approx(0.5, abs=1e-12)
    assert exact_estimate(build_c_circuit(th, 1, "z", "imag")) == pytest.approx(-1.0, abs=1e-12)
    assert exact_estimate(build_c_circuit(th, 2, "x", "imag")) == pytest.approx(0.0, abs=1e-12)


def test_index_validation():
    with pytest.raises(ValueError):
        build_a_circuit(np.zeros(4), 2, 1, "real")
    with pytest.raises(ValueError):
        build_a_circuit(np.zeros(4), 0, 1, "real")
    with pytest.raises(ValueError):
        build_c_circuit(np.zeros(4), 5, "x", "imag")
    with pytest.raises(ValueError):
        build_c_circuit(np.zeros(4), 2, "y", "imag")
    with pytest.raises(ValueError):
        build_a_circuit(np.zeros(4), 1, 2, "magnitude")


def test_exact_circuits_reproduce_analytic_overlaps():
    rng = np.random.default_rng(31)
    for _ in range(100):
        theta = rng.uniform(-2 * np.pi, 2 * np.pi, 4)
        f = rng.uniform(-4, 4)
        a, c = analytic_elements(theta, f)
        for i in range(1, 5):
            for j in range(i, 5):
                re = exact_estimate(build_a_circuit(theta, i, j, "real"))
                im = exact_estimate(build_a_circuit(theta, i, j, "imag"))
                assert re == pytest.approx(a[i - 1, j - 1].real, abs=1e-12)
                assert im == pytest.approx(a[i - 1, j - 1].imag, abs=1e-12)
        g = PARAMS.epsilon - f
        for i in range(1, 5):
            val = 0.0 + 0.0j
            for term, coeff in (("x", PARAMS.omega_rabi), ("z", g)):
                re = exact_estimate(build_c_circuit(theta, i, term, "real"))
                im = exact_estimate(build_c_circuit(theta, i, term, "imag"))
                val += coeff * (re + 1j * im)
            assert val == pytest.approx(c[i - 1], abs=1e-12)


def test_statevector_stays_normalized_through_circuits():
    rng = np.random.default_rng(6)
    for _ in range(50):
        theta = rng.uniform(-6, 6, 4)
        circ = build_a_circuit(theta, 2, 4, "imag")
        state = circuits._execute(circ, None, rng)
        assert abs(np.vdot(state, state).real - 1.0) < 1e-12


# --- sampling ------------------------------------------------------------


def test_unit_expectation_is_exact_at_any_shot_count():
    circ = build_a_circuit(np.zeros(4), 2, 2, "real")  # raw expectation 1
    assert run(circ, ShotConfig(shots=1_000_000, rng_seed=3)) == 1.0


def test_zero_expectation_estimate_is_bounded():
    circ = build_a_circuit(np.zeros(4), 2, 3, "real")  # raw expectation 0
    for seed in range(20):
        est = run(circ, ShotConfig(shots=10_000, rng_seed=seed))
        assert abs(est) <= 0.04  # 2.58 / sqrt(S) = 0.026; bound holds with margin


def test_shot_estimates_are_deterministic_given_seed():
    circ = build_c_circuit(np.array([0.3, -0.7, 1.1, 0.2]), 3, "x", "imag")
    a = run(circ, ShotConfig(shots=500, rng_seed=42))
    b = run(circ, ShotConfig(shots=500, rng_seed=42))
    assert a == b
    c = run(circ, ShotConfig(shots=500, rng_seed=43))
    assert a != c


def test_zero_noise_matches_noiseless_with_same_seed():
    circ = build_c_circuit(np.array([0.3, -0.7, 1.1, 0.2]), 3, "z", "imag")
    clean = run(circ, ShotConfig(shots=400, rng_seed=9))
    zero_noise = run(circ, ShotConfig(shots=400, rng_seed=9), NoiseParams(0.0, 0.0, 0.0))
    assert clean == zero_noise


def test_shot_error_scales_as_inverse_sqrt():
    rng = np.random.default_rng(12)
    theta = np.array([0.4, 1.2, 0.9, -0.3])
    f = 0.7
    a, _ = analytic_elements(theta, f)
    errors = {s: [] for s in (100, 10_000)}
    circ = build_a_circuit(theta, 1, 2, "real")
    truth = a[0, 1].real
    for s in errors:
        for _ in range(400):
            errors[s].append(circ.scale * circuits.run_with_rng(circ, s, None, rng) - truth)
    ratio = np.median(np.abs(errors[100])) / np.median(np.abs(errors[10_000]))
    assert 10 / 1.6 <= ratio <= 10 * 1.6


def test_noise_perturbs_results():
    theta = np.array([0.3, -0.7, 1.1, 0.2])
    circ = build_c_circuit(theta, 3, "z", "imag")
    noisy = NoiseParams(p1=0.3, p2=0.3, ro=0.0)
    clean = run(circ, EXACT)
    values = {run(circ, ShotConfig(shots=0, rng_seed=s), noisy) for s in range(30)}
    assert len(values) > 1  # error channel actually fires
    assert all(-1.0 <= v <= 1.0 for v in values)


def test_readout_error_shrinks_exact_expectation():
    circ = build_a_circuit(np.zeros(4), 2, 2, "real")  # raw expectation 1
    est = run(circ, ShotConfig(shots=0, rng_seed=0), NoiseParams(0.0, 0.0, 0.25))
    assert est == pytest.approx(0.5, abs=1e-12)


def test_noise_params_validation():
    with pytest.raises(ValueError):
        NoiseParams(p1=-0.1, p2=0.0, ro=0.0)
    with pytest.raises(ValueError):
        NoiseParams(p1=0.0, p2=0.7, ro=0.0)
    with pytest.raises(ValueError):
        ShotConfig(shots=-1)


# --- assembly ------------------------------------------------------------


def test_assembled_system_matches_analytic_in_exact_mode():
    spec = BathSpec(omega=[0.5, 2.0], coupling=[0.3, 0.6], mass=[1.0, 1.0])
    ic = BathInitialCondition(x0=[1.0, -0.5], p0=[0.2, 0.1])
    rng = as_generator(0)
    from eacpsim.bath import driving_force

    for _ in range(100):
        theta = rng.uniform(-2 * np.pi, 2 * np.pi, 4)
        t = rng.uniform(0.0, 10.0)
        sys_c = assemble_circuit(theta, t, PARAMS, spec, ic, 0, None, rng)
        sys_a = assemble_analytic(theta, PARAMS, driving_force(spec, ic, t), t=t)
        assert np.abs(sys_c.a_real - sys_a.a_real).max() <= 1e-10
        assert np.abs(sys_c.c_imag - sys_a.c_imag).max() <= 1e-10
        assert np.abs(sys_c.a_real - sys_c.a_real.T).max() == 0.0  # mirrored exactly


def test_backend_is_deterministic_per_seed():
    spec = BathSpec(omega=[1.0], coupling=[0.5], mass=[1.0])
    ic = BathInitialCondition(x0=[0.7], p0=[-0.2])
    theta = np.array([0.1, 0.2, 0.3, 0.4])
    one = CircuitBackend(PARAMS, spec, ic, shots=200, seed=(5, 0, 1)).assemble(theta, 1.0)
    two = CircuitBackend(PARAMS, spec, ic, shots=200, seed=(5, 0, 1)).assemble(theta, 1.0)
    assert np.array_equal(one.a_real, two.a_real)
    assert np.array_equal(one.c_imag, two.c_imag)


# --- textual dump --------------------------------------------------------


def test_format_circuit_structure():
    text = format_circuit(build_a_circuit(np.zeros(4), 2, 4, "imag"))
    lines = text.strip().splitlines()
    assert lines[0].startswith("# A[2,4].imag")
    assert lines[1] == "h ancilla - -"
    assert lines[2] == "sdg ancilla - -"
    assert lines[-1] == "measure ancilla - -"
    assert lines[-2] == "h ancilla - -"
    # two controlled insertions with opposite polarity
    controls = [ln for ln in lines if "ancilla=" in ln]
    assert len(controls) == 2
    assert controls[0].split()[2] == "ancilla=0"
    assert controls[1].split()[2] == "ancilla=1"
    # derivative Pauli of parameter 4 sits right after the first rz
    assert lines[3].startswith("rz system")
    assert lines[4].startswith("z system ancilla=0")


def test_dump_circuits_writes_all_blocks(tmp_path):
    path = tmp_path / "circuits.txt"
    dump_circuits(np.zeros(4), path)
    text = path.read_text()
    # 10 A pairs and 8 C terms, both parts each
    assert text.count("# A[") == 20
    assert text.count("# C[") == 16


def test_estimate_applies_scale():
    theta = np.array([0.2, 0.5, 1.0, -0.4])
    circ = build_a_circuit(theta, 2, 2, "real")
    rng = as_generator(1)
    assert estimate(circ, 0, None, rng) == pytest.approx(0.25, abs=1e-12)
