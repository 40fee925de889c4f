"""Variational equation of motion: assemble the metric A and force vector C,
solve the regularized linear system for theta-dot, and advance theta with RK4.

The equation of motion is sum_j A^R_ij thetadot_j = C^I_i with
A_ij = <d_i psi | d_j psi> and C_i = <d_i psi | H | psi>.  A is Hermitian, so
A^R is symmetric; the ZXZ ansatz carries a gauge redundancy that makes A^R
structurally rank-deficient, hence the always-on Tikhonov weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import ansatz
from .bath import BathInitialCondition, BathSpec, driving_force
from .numeric import DEFAULT_TIKHONOV, PropagationError, rk4_step, solve_regularized
from .system import PopulationSeries, SystemParams, hamiltonian, populations

BACKEND_NAMES = ("analytic", "statevector", "shots", "noisy")


@dataclass(frozen=True)
class McLachlanSystem:
    """Real part of A and imaginary part of C at one instant."""

    a_real: np.ndarray  # (4, 4)
    c_imag: np.ndarray  # (4,)
    t: float


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float
    t_max: float
    lambda_reg: float = DEFAULT_TIKHONOV
    backend: str = "analytic"
    theta0: np.ndarray = field(default_factory=lambda: np.zeros(ansatz.THETA_DIM))

    def __post_init__(self):
        object.__setattr__(self, "theta0", np.asarray(self.theta0, dtype=float))
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_max < 0:
            raise ValueError(f"t_max must be >= 0, got {self.t_max}")
        if self.lambda_reg < 0:
            raise ValueError(f"lambda_reg must be >= 0, got {self.lambda_reg}")
        if self.backend not in BACKEND_NAMES:
            raise ValueError(
                f"backend must be one of {BACKEND_NAMES}, got {self.backend!r}"
            )
        if self.theta0.shape != (ansatz.THETA_DIM,):
            raise ValueError("theta0 must have 4 entries")


@dataclass(frozen=True)
class TrajectoryResult:
    """One variational trajectory: parameters and populations per step."""

    times: np.ndarray    # (n,)
    thetas: np.ndarray   # (n, 4)
    p1: np.ndarray       # (n,)
    p2: np.ndarray       # (n,)

    def populations(self) -> PopulationSeries:
        return PopulationSeries(times=self.times, p1=self.p1, p2=self.p2)


def assemble_analytic(
    theta, params: SystemParams, f: float, t: float = 0.0
) -> McLachlanSystem:
    """Assemble A^R and C^I from the ansatz derivatives and H(f).

    A_ij = <d_i psi|d_j psi> and C_i = <d_i psi|H|psi> evaluated with exact
    statevector algebra; this is the noise-free reference backend.
    """
    derivs = ansatz.derivatives(theta)
    psi = ansatz.state(theta)
    a = derivs.conj() @ derivs.T
    c = derivs.conj() @ (hamiltonian(params, f) @ psi)
    return McLachlanSystem(a_real=np.real(a), c_imag=np.imag(c), t=t)


def theta_dot(sys: McLachlanSystem, lambda_reg: float = DEFAULT_TIKHONOV) -> np.ndarray:
    """Parameter velocities solving A^R thetadot = C^I with Tikhonov weight."""
    return solve_regularized(sys.a_real, sys.c_imag, lambda_reg)


class AnalyticBackend:
    """Assembles the exact A^R / C^I for a given bath trajectory."""

    def __init__(self, params: SystemParams, spec: BathSpec, ic: BathInitialCondition):
        self.params = params
        self.spec = spec
        self.ic = ic

    def assemble(self, theta, t: float) -> McLachlanSystem:
        return assemble_analytic(theta, self.params, driving_force(self.spec, self.ic, t), t=t)


def evolve(
    config: EvolutionConfig,
    params: SystemParams,
    spec: BathSpec,
    ic: BathInitialCondition,
    backend,
) -> TrajectoryResult:
    """Integrate theta with RK4, re-assembling A and C at every stage time.

    ``backend`` must provide ``assemble(theta, t) -> McLachlanSystem``; the
    driving force is re-evaluated inside the backend at each of the stage
    times t, t+dt/2, t+dt.  Populations are read off the ansatz state at
    every recorded step.  Non-finite parameters abort with the last good
    step attached to the exception.

    Plain analytic backends are routed through a compiled kernel performing
    the identical computation; ensembles rely on it for throughput.
    """
    if type(backend) is AnalyticBackend:
        return _evolve_analytic_fast(config, params, spec, ic)
    return _evolve_generic(config, params, spec, ic, backend)


def _evolve_analytic_fast(
    config: EvolutionConfig,
    params: SystemParams,
    spec: BathSpec,
    ic: BathInitialCondition,
) -> TrajectoryResult:
    from ._fastpath import evolve_analytic_kernel

    n_steps = int(round(config.t_max / config.dt))
    thetas, p1, p2, n_ok = evolve_analytic_kernel(
        np.asarray(config.theta0, dtype=float),
        n_steps,
        config.dt,
        config.lambda_reg,
        spec.omega,
        spec.coupling,
        ic.x0,
        ic.p0 / (spec.mass * spec.omega),
        params.omega_rabi,
        params.epsilon,
    )
    if n_ok < n_steps:
        raise PropagationError(
            f"non-finite parameters after step at t={n_ok * config.dt}",
            t=n_ok * config.dt,
            last_state=thetas[n_ok].copy(),
        )
    times = np.arange(n_steps + 1) * config.dt
    return TrajectoryResult(times=times, thetas=thetas, p1=p1, p2=p2)


def _evolve_generic(
    config: EvolutionConfig,
    params: SystemParams,
    spec: BathSpec,
    ic: BathInitialCondition,
    backend,
) -> TrajectoryResult:
    n_steps = int(round(config.t_max / config.dt))
    times = np.arange(n_steps + 1) * config.dt
    thetas = np.empty((n_steps + 1, ansatz.THETA_DIM))
    p1 = np.empty(n_steps + 1)
    p2 = np.empty(n_steps + 1)

    def rate(t, th):
        return theta_dot(backend.assemble(th, t), config.lambda_reg)

    theta = np.asarray(config.theta0, dtype=float).copy()
    thetas[0] = theta
    p1[0], p2[0] = populations(ansatz.state(theta))
    for k in range(n_steps):
        t = float(times[k])
        try:
            theta = rk4_step(rate, t, theta, config.dt)
        except PropagationError as err:
            raise PropagationError(
                f"variational propagation aborted at t={t}: {err}",
                t=t,
                last_state=thetas[k].copy(),
            ) from err
        if not np.all(np.isfinite(theta)):
            raise PropagationError(
                f"non-finite parameters after step at t={t}",
                t=t,
                last_state=thetas[k].copy(),
            )
        thetas[k + 1] = theta
        p1[k + 1], p2[k + 1] = populations(ansatz.state(theta))
    return TrajectoryResult(times=times, thetas=thetas, p1=p1, p2=p2)


def write_trajectory_csv(path, result: TrajectoryResult) -> None:
    """Per-trajectory CSV with columns t, theta1..theta4, p1, p2."""
    lines = ["t,theta1,theta2,theta3,theta4,p1,p2"]
    for k in range(result.times.size):
        th = ",".join(f"{v:.17g}" for v in result.thetas[k])
        lines.append(f"{result.times[k]:.17g},{th},{result.p1[k]:.17g},{result.p2[k]:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")
