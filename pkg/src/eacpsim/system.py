"""Two-level system driven by the classical bath force, and the exact
benchmark propagator.

Conventions: the reactant state is |0>, the +1 eigenstate of sigma_z, and
H(t) = Omega sigma_x + (epsilon - f(t)) sigma_z with f the driving force.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bath import BathInitialCondition, BathSpec, driving_force
from .numeric import KET_0, SIGMA_X, SIGMA_Z, PropagationError, matrix_exp_2x2

NORM_DRIFT_LIMIT = 1e-8


@dataclass(frozen=True)
class SystemParams:
    """Tunneling frequency Omega and static bias epsilon (atomic units)."""

    omega_rabi: float
    epsilon: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.omega_rabi) or not np.isfinite(self.epsilon):
            raise ValueError("system parameters must be finite")


@dataclass(frozen=True)
class PopulationSample:
    t: float
    p1: float
    p2: float


@dataclass(frozen=True)
class PopulationSeries:
    """Reactant/product populations on a uniform time grid."""

    times: np.ndarray
    p1: np.ndarray
    p2: np.ndarray

    def samples(self) -> list[PopulationSample]:
        return [
            PopulationSample(float(t), float(a), float(b))
            for t, a, b in zip(self.times, self.p1, self.p2)
        ]


def hamiltonian(params: SystemParams, f: float) -> np.ndarray:
    """H = Omega sigma_x + (epsilon - f) sigma_z for a driving force value f."""
    return params.omega_rabi * SIGMA_X + (params.epsilon - f) * SIGMA_Z


def populations(state: np.ndarray) -> tuple[float, float]:
    """(p1, p2) = squared magnitudes of the |0> and |1> amplitudes."""
    psi = np.asarray(state)
    return float(np.abs(psi[0]) ** 2), float(np.abs(psi[1]) ** 2)


def propagate_exact(
    params: SystemParams,
    spec: BathSpec,
    ic: BathInitialCondition,
    t_max: float,
    dt: float,
    initial_state: np.ndarray = KET_0,
) -> PopulationSeries:
    """Classical benchmark: step the wavefunction with midpoint unitaries.

    Each step applies exp(-i H(t + dt/2) dt) built from the driving force at
    the step midpoint.  Steps are exactly norm-preserving, so any norm drift
    beyond 1e-8 signals a stepping bug and aborts.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if t_max < 0:
        raise ValueError(f"t_max must be >= 0, got {t_max}")
    n_steps = int(round(t_max / dt))
    times = np.arange(n_steps + 1) * dt
    psi = np.asarray(initial_state, dtype=complex).copy()
    p1 = np.empty(n_steps + 1)
    p2 = np.empty(n_steps + 1)
    p1[0], p2[0] = populations(psi)
    for k in range(n_steps):
        t_mid = (k + 0.5) * dt
        f = driving_force(spec, ic, t_mid)
        psi = matrix_exp_2x2(hamiltonian(params, f), dt) @ psi
        norm = float(np.vdot(psi, psi).real)
        if abs(norm - 1.0) > NORM_DRIFT_LIMIT:
            raise PropagationError(
                f"norm drift {abs(norm - 1.0):.3e} exceeds {NORM_DRIFT_LIMIT}",
                t=float(times[k + 1]),
                last_state=psi,
            )
        p1[k + 1], p2[k + 1] = populations(psi)
    return PopulationSeries(times=times, p1=p1, p2=p2)


def write_populations_csv(path, series: PopulationSeries, method: str) -> None:
    """Population time series as CSV with columns t, p1, p2, method."""
    lines = ["t,p1,p2,method"]
    for t, a, b in zip(series.times, series.p1, series.p2):
        lines.append(f"{t:.17g},{a:.17g},{b:.17g},{method}")
    Path(path).write_text("\n".join(lines) + "\n")
