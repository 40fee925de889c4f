"""Exact single-qubit ZXZ ansatz.

The trial state is |psi(theta)> = U(theta)|0> with

    U(theta) = exp(i theta_1) Rz(theta_2) Rx(theta_3) Rz(theta_4)

and the hardware rotation convention R(alpha) = exp(-i alpha Pauli / 2).
Parameter indices follow the 1-based convention used throughout: index 1 is
the global phase, indices 2..4 the z, x, z rotation angles.  Angles are
unconstrained so integrated parameter trajectories stay continuous.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

THETA_DIM = 4


@dataclass(frozen=True)
class Gate:
    """One entry of the ansatz gate sequence.

    ``generator`` is the Pauli axis of a rotation gate (None for the global
    phase); ``derivative_prefactor`` is the factor multiplying the generator
    insertion in the parameter derivative (-i/2 for rotations, i for the
    phase).
    """

    name: str
    generator: str | None
    param_index: int
    derivative_prefactor: complex


#: Listed by parameter index; application order is the reverse (Rz(theta_4)
#: acts on |0> first, the global phase last).
GATE_SEQUENCE: tuple[Gate, ...] = (
    Gate("phase", None, 1, 1.0j),
    Gate("rz", "z", 2, -0.5j),
    Gate("rx", "x", 3, -0.5j),
    Gate("rz", "z", 4, -0.5j),
)

def _check_theta(theta) -> np.ndarray:
    th = np.asarray(theta, dtype=float)
    if th.shape != (THETA_DIM,):
        raise ValueError(f"theta must have shape ({THETA_DIM},), got {th.shape}")
    return th


def state(theta) -> np.ndarray:
    """|psi(theta)> as a unit-norm 2-vector."""
    th = _check_theta(theta)
    c = np.cos(0.5 * th[2])
    s = np.sin(0.5 * th[2])
    phase0 = np.exp(1j * (th[0] - 0.5 * th[1] - 0.5 * th[3]))
    phase1 = np.exp(1j * (th[0] + 0.5 * th[1] - 0.5 * th[3]))
    return np.array([phase0 * c, -1j * phase1 * s])


def derivatives(theta) -> np.ndarray:
    """All four parameter derivatives of |psi(theta)> as rows of a (4, 2) array.

    Row i-1 holds d|psi>/d(theta_i): i|psi> for the phase, and the state with
    (-i/2) times the generator Pauli inserted at the gate's position for the
    rotations.  The sequence products collapse to closed-form amplitudes,
    which keeps per-call cost low inside integration loops:

        d2 = (-i/2) Z |psi>,
        d3 = (-i/2) Rz(t2) X Rx(t3) Rz(t4)|0> (times the phase),
        d4 = (-i/2) |psi>   (Z acts as identity on Rz(t4)|0>).
    """
    th = _check_theta(theta)
    c = np.cos(0.5 * th[2])
    s = np.sin(0.5 * th[2])
    phase0 = np.exp(1j * (th[0] - 0.5 * th[1] - 0.5 * th[3]))
    phase1 = np.exp(1j * (th[0] + 0.5 * th[1] - 0.5 * th[3]))
    a0 = phase0 * c
    a1 = -1j * phase1 * s
    return np.array(
        [
            [1j * a0, 1j * a1],
            [-0.5j * a0, 0.5j * a1],
            [-0.5 * phase0 * s, -0.5j * phase1 * c],
            [-0.5j * a0, -0.5j * a1],
        ]
    )


def derivative(theta, i: int) -> np.ndarray:
    """d|psi(theta)>/d(theta_i) for a single 1-based parameter index."""
    if not 1 <= i <= THETA_DIM:
        raise ValueError(f"parameter index must be in 1..{THETA_DIM}, got {i}")
    return derivatives(theta)[i - 1]


def angles_for_state(target) -> np.ndarray:
    """Closed-form angles reproducing ``target`` exactly.

    Every normalized single-qubit state is reachable; the returned theta uses
    the theta_4 = 0 gauge.  Verify with ``state(angles_for_state(v)) == v``.
    """
    v = np.asarray(target, dtype=complex)
    if v.shape != (2,):
        raise ValueError(f"target must be a 2-vector, got shape {v.shape}")
    norm = float(np.vdot(v, v).real)
    if abs(norm - 1.0) > 1e-8:
        raise ValueError(f"target must be normalized, |v|^2 = {norm}")
    r0 = abs(v[0])
    r1 = abs(v[1])
    theta3 = 2.0 * np.arctan2(r1, r0)
    phi0 = float(np.angle(v[0])) if r0 > 0 else 0.0
    if r1 == 0.0:
        theta2 = 0.0
    else:
        # amplitude of |1> is -i exp(i(theta_1 + theta_2/2)) sin(theta_3/2)
        phi1 = float(np.angle(v[1]))
        theta2 = phi1 + 0.5 * np.pi - phi0
    theta1 = phi0 + 0.5 * theta2
    return np.array([theta1, theta2, theta3, 0.0])
