"""Harmonic bath: Ohmic spectral density, mode discretization, thermal Wigner
sampling of initial conditions, and the classical driving trajectories.

Atomic units (hbar = 1) throughout.  All masses default to 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

SeedLike = "int | tuple | np.random.SeedSequence | np.random.Generator"


def as_generator(seed) -> np.random.Generator:
    """Coerce an int, tuple, SeedSequence, or Generator into a Generator.

    Tuples map to ``SeedSequence(tuple)``, which is how per-trajectory
    substreams ``(base_seed, index)`` are derived reproducibly and
    order-independently.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(np.random.SeedSequence(seed))


@dataclass(frozen=True)
class SpectralDensityParams:
    """Ohmic bath strength: dimensionless Kondo parameter and cutoff frequency."""

    xi: float
    omega_c: float

    def __post_init__(self):
        if not (self.xi > 0 and np.isfinite(self.xi)):
            raise ValueError(f"Kondo parameter xi must be > 0, got {self.xi}")
        if not (self.omega_c > 0 and np.isfinite(self.omega_c)):
            raise ValueError(f"cutoff omega_c must be > 0, got {self.omega_c}")


@dataclass(frozen=True)
class ThermalParams:
    """Inverse temperature beta (atomic units)."""

    beta: float

    def __post_init__(self):
        if not (self.beta > 0 and np.isfinite(self.beta)):
            raise ValueError(f"beta must be > 0, got {self.beta}")


@dataclass(frozen=True)
class BathMode:
    """One discretized oscillator: frequency, system coupling, mass."""

    omega: float
    coupling: float
    mass: float = 1.0


@dataclass(frozen=True)
class BathSpec:
    """Discretized bath stored as parallel arrays over modes.

    Frequencies must be strictly increasing and positive, couplings and
    masses positive.  Instances are immutable and safe to share across
    trajectory workers.
    """

    omega: np.ndarray
    coupling: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        for name in ("omega", "coupling", "mass"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (self.omega.ndim == 1 and self.omega.size >= 1):
            raise ValueError("bath needs at least one mode")
        if self.coupling.shape != self.omega.shape or self.mass.shape != self.omega.shape:
            raise ValueError("omega, coupling, mass must have equal lengths")
        if not np.all(np.isfinite(self.omega)) or not np.all(self.omega > 0):
            raise ValueError("frequencies must be positive and finite")
        if np.any(np.diff(self.omega) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        if not np.all(np.isfinite(self.coupling)) or not np.all(self.coupling > 0):
            raise ValueError("couplings must be positive and finite")
        if not np.all(np.isfinite(self.mass)) or not np.all(self.mass > 0):
            raise ValueError("masses must be positive and finite")

    @property
    def n_modes(self) -> int:
        return int(self.omega.size)

    @classmethod
    def from_modes(cls, modes) -> "BathSpec":
        modes = list(modes)
        return cls(
            omega=np.array([m.omega for m in modes]),
            coupling=np.array([m.coupling for m in modes]),
            mass=np.array([m.mass for m in modes]),
        )

    def modes(self) -> list[BathMode]:
        return [
            BathMode(float(w), float(c), float(m))
            for w, c, m in zip(self.omega, self.coupling, self.mass)
        ]

    def reorganization_energy(self) -> float:
        """sum_j c_j^2 / (2 m_j omega_j^2), the bath-strength scalar used as
        a discretization consistency check."""
        return float(np.sum(self.coupling**2 / (2.0 * self.mass * self.omega**2)))


@dataclass(frozen=True)
class BathInitialCondition:
    """One phase-space sample (positions, momenta), one entry per mode."""

    x0: np.ndarray
    p0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))
        object.__setattr__(self, "p0", np.asarray(self.p0, dtype=float))
        if self.x0.shape != self.p0.shape or self.x0.ndim != 1:
            raise ValueError("x0 and p0 must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(self.x0)) and np.all(np.isfinite(self.p0))):
            raise ValueError("initial conditions must be finite")


def spectral_density(params: SpectralDensityParams, omega) -> np.ndarray:
    """Ohmic spectral density J(omega) = (pi/2) xi omega exp(-omega/omega_c)."""
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise ValueError("spectral density is defined for omega >= 0")
    return (np.pi / 2.0) * params.xi * w * np.exp(-w / params.omega_c)


def discretize(params: SpectralDensityParams, n_modes: int) -> BathSpec:
    """Discretize the Ohmic density into ``n_modes`` oscillators.

    Equal-weight quadrature in J(omega)/omega:

        omega_j = -omega_c * ln(1 - j/(N+1)),   j = 1..N
        c_j     = omega_j * sqrt(xi * m_j * omega_c / (N+1))

    with unit masses.  This choice reproduces the continuum density as
    N -> infinity and gives the closed-form reorganization energy
    N/(N+1) * xi * omega_c / 2.
    """
    if n_modes < 1:
        raise ValueError(f"n_modes must be >= 1, got {n_modes}")
    j = np.arange(1, n_modes + 1, dtype=float)
    omega = -params.omega_c * np.log(1.0 - j / (n_modes + 1))
    mass = np.ones(n_modes)
    coupling = omega * np.sqrt(params.xi * mass * params.omega_c / (n_modes + 1))
    return BathSpec(omega=omega, coupling=coupling, mass=mass)


def wigner_variances(spec: BathSpec, thermal: ThermalParams):
    """Closed-form thermal Wigner variances per mode.

    Var(x0_j) = 1 / (2 m_j omega_j tanh(omega_j beta / 2))
    Var(p0_j) = m_j omega_j / (2 tanh(omega_j beta / 2))
    """
    th = np.tanh(0.5 * spec.omega * thermal.beta)
    var_x = 1.0 / (2.0 * spec.mass * spec.omega * th)
    var_p = spec.mass * spec.omega / (2.0 * th)
    return var_x, var_p


def sample_wigner(spec: BathSpec, thermal: ThermalParams, seed) -> BathInitialCondition:
    """Draw one (x0, p0) sample from the thermal Wigner distribution.

    Every mode is an independent zero-mean Gaussian in both position and
    momentum, so direct sampling is unbiased; no Markov chain is needed.
    Deterministic given the seed: positions are drawn first, then momenta.
    """
    rng = as_generator(seed)
    var_x, var_p = wigner_variances(spec, thermal)
    x0 = rng.standard_normal(spec.n_modes) * np.sqrt(var_x)
    p0 = rng.standard_normal(spec.n_modes) * np.sqrt(var_p)
    return BathInitialCondition(x0=x0, p0=p0)


def trajectory(spec: BathSpec, ic: BathInitialCondition, t: float) -> np.ndarray:
    """Free harmonic positions x_j(t) = x0 cos(wt) + (p0/(m w)) sin(wt).

    Exact for every t (no integration error); the system's back-action on
    the bath is omitted by construction.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    wt = spec.omega * t
    return ic.x0 * np.cos(wt) + (ic.p0 / (spec.mass * spec.omega)) * np.sin(wt)


def driving_force(spec: BathSpec, ic: BathInitialCondition, t: float) -> float:
    """Collective coupling f(t) = sum_j c_j x_j(t) felt by the two-level system."""
    return float(np.dot(spec.coupling, trajectory(spec, ic, t)))


# ---------------------------------------------------------------------------
# CSV import/export so runs can be replayed bit-exactly.
# ---------------------------------------------------------------------------

_FMT = "%.17g"  # round-trips float64 exactly


def save_bath_csv(spec: BathSpec, path) -> None:
    """Write mode table with columns j, omega_j, c_j, m_j."""
    lines = ["j,omega_j,c_j,m_j"]
    for idx in range(spec.n_modes):
        lines.append(
            f"{idx + 1},{_FMT % spec.omega[idx]},{_FMT % spec.coupling[idx]},"
            f"{_FMT % spec.mass[idx]}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def load_bath_csv(path) -> BathSpec:
    rows = _read_csv(path, header="j,omega_j,c_j,m_j")
    return BathSpec(omega=rows[:, 1], coupling=rows[:, 2], mass=rows[:, 3])


def save_ic_csv(ic: BathInitialCondition, path) -> None:
    """Write one Wigner sample with columns j, x0_j, p0_j."""
    lines = ["j,x0_j,p0_j"]
    for idx in range(ic.x0.size):
        lines.append(f"{idx + 1},{_FMT % ic.x0[idx]},{_FMT % ic.p0[idx]}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_ic_csv(path) -> BathInitialCondition:
    rows = _read_csv(path, header="j,x0_j,p0_j")
    return BathInitialCondition(x0=rows[:, 1], p0=rows[:, 2])


def _read_csv(path, header: str) -> np.ndarray:
    text = Path(path).read_text().strip().splitlines()
    if not text or text[0].strip() != header:
        raise ValueError(f"{path}: expected header {header!r}")
    return np.array([[float(v) for v in line.split(",")] for line in text[1:]])
