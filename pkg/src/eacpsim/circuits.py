"""Two-qubit (system + ancilla) statevector simulator for the modified
Hadamard-test circuits that estimate the A-matrix and C-vector elements.

Construction: the ancilla is prepared in superposition and the two circuit
branches share the ansatz gates; derivative Paulis are inserted at the depth
of their gate, the first controlled on ancilla=0 and the second on ancilla=1.
The ancilla X-basis expectation then equals the real part of the overlap of
the two branches (imaginary part via an S-dagger phase insertion).  Each
builder records the real scale factor that maps the measured expectation to
the requested Re/Im part of the matrix or vector element.

Execution modes: exact expectation (shots = 0), finite-shot Bernoulli
sampling, and a parametric stochastic-Pauli noise channel with readout flips.
One noise pattern is drawn per circuit execution, which keeps the state at
four amplitudes (trajectory picture, not a density matrix).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import ansatz
from .bath import BathInitialCondition, BathSpec, as_generator, driving_force
from .mclachlan import McLachlanSystem
from .numeric import SIGMA_X, SIGMA_Y, SIGMA_Z
from .system import SystemParams

_H = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
_SDG = np.array([[1.0, 0.0], [0.0, -1.0j]])
_PAULIS = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}
_PAULI_LIST = (SIGMA_X, SIGMA_Y, SIGMA_Z)

#: Insertion position of each rotation parameter: number of system gates
#: applied before the derivative Pauli.  Parameter 4 acts first.
_INSERT_POS = {4: 1, 3: 2, 2: 3}
_END_POS = 3


@dataclass(frozen=True)
class ShotConfig:
    """Shot count (0 means exact expectation) and sampling seed."""

    shots: int
    rng_seed: int = 0

    def __post_init__(self):
        if self.shots < 0:
            raise ValueError(f"shots must be >= 0, got {self.shots}")


@dataclass(frozen=True)
class NoiseParams:
    """Stochastic-Pauli error rates: per single-qubit gate, per controlled
    gate, and the readout flip probability."""

    p1: float
    p2: float
    ro: float

    def __post_init__(self):
        for name in ("p1", "p2", "ro"):
            v = getattr(self, name)
            if not 0.0 <= v <= 0.5:
                raise ValueError(f"{name} must be in [0, 0.5], got {v}")

    def any(self) -> bool:
        return self.p1 > 0 or self.p2 > 0 or self.ro > 0


@dataclass(frozen=True, eq=False)
class CircuitOp:
    """One gate: name, target qubit, optional ancilla control polarity."""

    name: str
    qubit: str  # "ancilla" | "system"
    control: int | None = None  # ancilla polarity for controlled Paulis
    angle: float | None = None
    matrix: np.ndarray = field(repr=False, default=None)


@dataclass(frozen=True, eq=False)
class HadamardTestCircuit:
    """Gate list plus the scale mapping the ancilla expectation to the
    requested quantity."""

    ops: tuple[CircuitOp, ...]
    scale: float
    label: str


def _resolve_part(prefactor: complex, conjugate: bool, part: str):
    """Reduce ``Re/Im(prefactor * raw)`` (raw possibly conjugated) to a
    measurement basis and a real scale.

    Returns (measure_imag, scale) such that the requested value equals
    scale times the measured Re or Im of the branch overlap.
    """
    if part not in ("real", "imag"):
        raise ValueError(f"part must be 'real' or 'imag', got {part!r}")
    pr, pi = prefactor.real, prefactor.imag
    if pr != 0.0 and pi != 0.0:
        raise ValueError("prefactor must be purely real or purely imaginary")
    s = -1.0 if conjugate else 1.0
    if part == "real":
        # Re(pre * raw) = pr*Re(raw) - pi*s*Im(raw)
        return (False, pr) if pi == 0.0 else (True, -pi * s)
    # Im(pre * raw) = pi*Re(raw) + pr*s*Im(raw)
    return (True, pr * s) if pi == 0.0 else (False, pi)


def _system_gates(theta) -> list[CircuitOp]:
    th = np.asarray(theta, dtype=float)
    return [
        CircuitOp("rz", "system", angle=float(th[3]), matrix=_rz_matrix(th[3])),
        CircuitOp("rx", "system", angle=float(th[2]), matrix=_rx_matrix(th[2])),
        CircuitOp("rz", "system", angle=float(th[1]), matrix=_rz_matrix(th[1])),
    ]


def _rz_matrix(angle: float) -> np.ndarray:
    half = 0.5 * angle
    return np.array([[np.exp(-1j * half), 0.0], [0.0, np.exp(1j * half)]])


def _rx_matrix(angle: float) -> np.ndarray:
    c, s = np.cos(0.5 * angle), np.sin(0.5 * angle)
    return np.array([[c, -1j * s], [-1j * s, c]])


def _build(theta, insertions, prefactor, conjugate, part, label) -> HadamardTestCircuit:
    """Assemble the full op list.  ``insertions`` is a list of
    (position, pauli_name, control_polarity) with position counting system
    gates applied before the controlled Pauli."""
    measure_imag, scale = _resolve_part(prefactor, conjugate, part)
    ops: list[CircuitOp] = [CircuitOp("h", "ancilla", matrix=_H)]
    if measure_imag:
        ops.append(CircuitOp("sdg", "ancilla", matrix=_SDG))
    gates = _system_gates(theta)
    by_pos: dict[int, list] = {}
    for pos, pauli, control in insertions:
        by_pos.setdefault(pos, []).append((control, pauli))
    for depth, gate in enumerate(gates, start=1):
        ops.append(gate)
        # control-0 insertion precedes control-1 at equal depth
        for control, pauli in sorted(by_pos.get(depth, [])):
            ops.append(
                CircuitOp(pauli, "system", control=control, matrix=_PAULIS[pauli])
            )
    ops.append(CircuitOp("h", "ancilla", matrix=_H))
    return HadamardTestCircuit(ops=tuple(ops), scale=scale, label=label)


def build_a_circuit(theta, i: int, j: int, part: str = "real") -> HadamardTestCircuit:
    """Hadamard-test circuit whose scaled expectation is Re or Im of
    A_ij = <d_i psi | d_j psi> for 1 <= i <= j <= 4.

    The global-phase parameter (i = 1) has derivative i|psi>, so those
    circuits degenerate to a single controlled insertion.
    """
    if not (1 <= i <= j <= ansatz.THETA_DIM):
        raise ValueError(f"need 1 <= i <= j <= {ansatz.THETA_DIM}, got ({i}, {j})")
    label = f"A[{i},{j}].{part}"
    gen = {k: g.generator for k, g in zip((1, 2, 3, 4), ansatz.GATE_SEQUENCE)}
    if i == 1 and j == 1:
        return _build(theta, [], 1.0 + 0.0j, False, part, label)
    if i == 1:
        # A_1j = -(1/2) <psi | D_j psi>; derivative branch on ancilla=1
        ins = [(_INSERT_POS[j], gen[j], 1)]
        return _build(theta, ins, -0.5 + 0.0j, False, part, label)
    # Earlier-applied insertion (parameter j) rides ancilla=0; the circuit
    # overlap is <D_j branch | D_i branch> = 4 A_ji, so A_ij needs the
    # conjugate.
    ins = [(_INSERT_POS[j], gen[j], 0), (_INSERT_POS[i], gen[i], 1)]
    return _build(theta, ins, 0.25 + 0.0j, True, part, label)


def build_c_circuit(theta, i: int, pauli_term: str, part: str = "imag") -> HadamardTestCircuit:
    """Hadamard-test circuit for Re or Im of <d_i psi | P |psi> with P the
    X or Z Hamiltonian term.  The Hamiltonian Pauli is inserted after all
    ansatz gates on the ancilla=1 branch; the caller combines the X and Z
    terms with their coefficients to form C_i."""
    if not 1 <= i <= ansatz.THETA_DIM:
        raise ValueError(f"parameter index must be in 1..{ansatz.THETA_DIM}, got {i}")
    term = pauli_term.lower()
    if term not in ("x", "z"):
        raise ValueError(f"pauli_term must be 'x' or 'z', got {pauli_term!r}")
    label = f"C[{i}].{term}.{part}"
    gen = {k: g.generator for k, g in zip((1, 2, 3, 4), ansatz.GATE_SEQUENCE)}
    if i == 1:
        ins = [(_END_POS, term, 1)]
        return _build(theta, ins, -1.0j, False, part, label)
    ins = [(_INSERT_POS[i], gen[i], 0), (_END_POS, term, 1)]
    return _build(theta, ins, 0.5j, False, part, label)


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


def _apply_op(state: np.ndarray, op: CircuitOp) -> np.ndarray:
    if op.control is None:
        if op.qubit == "ancilla":
            return op.matrix @ state
        return state @ op.matrix.T
    out = state.copy()
    out[op.control, :] = op.matrix @ state[op.control, :]
    return out


def _apply_pauli_error(state, qubit: str, rng) -> np.ndarray:
    pauli = _PAULI_LIST[rng.integers(3)]
    if qubit == "ancilla":
        return pauli @ state
    return state @ pauli.T


def _execute(circuit: HadamardTestCircuit, noise: NoiseParams | None, rng) -> np.ndarray:
    """Run the gate list once; returns the (2, 2) state indexed
    [ancilla, system].  With noise, each touched qubit independently suffers
    a uniformly random Pauli after the gate with the configured probability."""
    state = np.zeros((2, 2), dtype=complex)
    state[0, 0] = 1.0
    for op in circuit.ops:
        state = _apply_op(state, op)
        if noise is not None:
            if op.control is None:
                prob, touched = noise.p1, (op.qubit,)
            else:
                prob, touched = noise.p2, ("ancilla", "system")
            if prob > 0.0:
                for qubit in touched:
                    if rng.random() < prob:
                        state = _apply_pauli_error(state, qubit, rng)
    return state


def _ancilla_z(state: np.ndarray) -> float:
    probs = np.abs(state) ** 2
    return float(probs[0].sum() - probs[1].sum())


def run_with_rng(
    circuit: HadamardTestCircuit,
    shots: int,
    noise: NoiseParams | None,
    rng: np.random.Generator,
) -> float:
    """Raw ancilla expectation estimate (before the circuit's scale factor)."""
    z = _ancilla_z(_execute(circuit, noise if noise and noise.any() else None, rng))
    ro = noise.ro if noise is not None else 0.0
    if shots == 0:
        return (1.0 - 2.0 * ro) * z
    p_plus = min(max(0.5 * (1.0 + z), 0.0), 1.0)
    if ro > 0.0:
        p_plus = p_plus * (1.0 - ro) + (1.0 - p_plus) * ro
    k = rng.binomial(shots, p_plus)
    return 2.0 * k / shots - 1.0


def run(
    circuit: HadamardTestCircuit,
    shots: ShotConfig,
    noise: NoiseParams | None = None,
) -> float:
    """Execute one circuit: exact expectation for shots = 0, otherwise the
    mean of ``shots`` Bernoulli outcomes (drawn in one binomial).  Identical
    seeds and configuration give bit-identical estimates."""
    rng = as_generator(shots.rng_seed)
    return run_with_rng(circuit, shots.shots, noise, rng)


def estimate(
    circuit: HadamardTestCircuit,
    shots: int,
    noise: NoiseParams | None,
    rng: np.random.Generator,
) -> float:
    """Scaled estimate of the quantity the circuit encodes."""
    return circuit.scale * run_with_rng(circuit, shots, noise, rng)


def assemble_circuit(
    theta,
    t: float,
    params: SystemParams,
    spec: BathSpec,
    ic: BathInitialCondition,
    shots: int,
    noise: NoiseParams | None,
    rng: np.random.Generator,
) -> McLachlanSystem:
    """Fill A^R (upper triangle, mirrored) and C^I from circuit estimates.

    C_i combines the two Hamiltonian terms as
    C_i^I = Omega * Im<d_i|X|psi> + (epsilon - f(t)) * Im<d_i|Z|psi>.
    """
    f = driving_force(spec, ic, t)
    g = params.epsilon - f
    n = ansatz.THETA_DIM
    a_real = np.empty((n, n))
    for i in range(1, n + 1):
        for j in range(i, n + 1):
            val = estimate(build_a_circuit(theta, i, j, "real"), shots, noise, rng)
            a_real[i - 1, j - 1] = val
            a_real[j - 1, i - 1] = val
    c_imag = np.empty(n)
    for i in range(1, n + 1):
        im_x = estimate(build_c_circuit(theta, i, "x", "imag"), shots, noise, rng)
        im_z = estimate(build_c_circuit(theta, i, "z", "imag"), shots, noise, rng)
        c_imag[i - 1] = params.omega_rabi * im_x + g * im_z
    return McLachlanSystem(a_real=a_real, c_imag=c_imag, t=t)


class CircuitBackend:
    """Assembles A^R / C^I from Hadamard-test circuits.

    ``shots = 0`` with no noise is the statevector mode that must reproduce
    the analytic backend exactly.  The backend owns its generator, so one
    trajectory's estimates form a single deterministic stream.
    """

    def __init__(
        self,
        params: SystemParams,
        spec: BathSpec,
        ic: BathInitialCondition,
        shots: int = 0,
        noise: NoiseParams | None = None,
        seed=0,
    ):
        self.params = params
        self.spec = spec
        self.ic = ic
        self.shots = int(shots)
        self.noise = noise
        self.rng = as_generator(seed)

    def assemble(self, theta, t: float) -> McLachlanSystem:
        return assemble_circuit(
            theta, t, self.params, self.spec, self.ic, self.shots, self.noise, self.rng
        )


def format_circuit(circuit: HadamardTestCircuit) -> str:
    """Textual gate list, one gate per line: name, target, control, angle."""
    lines = [f"# {circuit.label} scale={circuit.scale:g}"]
    for op in circuit.ops:
        control = "-" if op.control is None else f"ancilla={op.control}"
        angle = "-" if op.angle is None else f"{op.angle:.12g}"
        lines.append(f"{op.name} {op.qubit} {control} {angle}")
    lines.append("measure ancilla - -")
    return "\n".join(lines) + "\n"


def dump_circuits(theta, path) -> None:
    """Write every A and C circuit for one theta to a text file."""
    blocks = []
    for i in range(1, ansatz.THETA_DIM + 1):
        for j in range(i, ansatz.THETA_DIM + 1):
            for part in ("real", "imag"):
                blocks.append(format_circuit(build_a_circuit(theta, i, j, part)))
    for i in range(1, ansatz.THETA_DIM + 1):
        for term in ("x", "z"):
            for part in ("real", "imag"):
                blocks.append(format_circuit(build_c_circuit(theta, i, term, part)))
    Path(path).write_text("\n".join(blocks))
