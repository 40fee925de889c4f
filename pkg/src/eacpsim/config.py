"""Experiment configuration: defaults, INI-file loading, flag overrides, and
the resolved-config echo that makes every run replayable.

The file format is a flat INI with one section per parameter group.  Unknown
sections or keys are rejected so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .bath import SpectralDensityParams, ThermalParams
from .circuits import NoiseParams, ShotConfig
from .mclachlan import BACKEND_NAMES, EvolutionConfig
from .system import SystemParams


class ConfigError(ValueError):
    """Invalid configuration file or flag combination."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a CLI command needs, fully resolved."""

    system: SystemParams = SystemParams(omega_rabi=1.0, epsilon=0.0)
    bath: SpectralDensityParams = SpectralDensityParams(xi=2.0, omega_c=1.5)
    n_modes: int = 60
    thermal: ThermalParams = ThermalParams(beta=1.0)
    evolution: EvolutionConfig = field(
        default_factory=lambda: EvolutionConfig(dt=0.01, t_max=10.0)
    )
    shots: ShotConfig = ShotConfig(shots=50_000)
    noise: NoiseParams = NoiseParams(p1=0.0, p2=0.0, ro=0.0)
    n_samples: int = 10_000
    seed: int = 1
    workers: int = 1
    out_dir: Path = Path("eacpsim-out")
    shots_list: tuple[int, ...] = (100, 10_000, 1_000_000)
    checkpoints: tuple[int, ...] = (100, 300, 1_000, 3_000, 10_000)

    def __post_init__(self):
        object.__setattr__(self, "out_dir", Path(self.out_dir))
        if self.n_modes < 1:
            raise ConfigError(f"n_modes must be >= 1, got {self.n_modes}")
        if self.n_samples < 1:
            raise ConfigError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")


# section -> key -> parser
_SCHEMA = {
    "system": {"omega_rabi": float, "epsilon": float},
    "bath": {"xi": float, "omega_c": float, "n_modes": int},
    "thermal": {"beta": float},
    "evolution": {
        "dt": float,
        "t_max": float,
        "lambda_reg": float,
        "backend": str,
        "theta0": str,
    },
    "shots": {"shots": int},
    "noise": {"p1": float, "p2": float, "ro": float},
    "ensemble": {"n_samples": int},
    "run": {"seed": int, "workers": int, "out_dir": str},
    "shot_stats": {"shots_list": str},
    "convergence": {"checkpoints": str},
}


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v.strip()) for v in text.split(",") if v.strip())
    except ValueError as err:
        raise ConfigError(f"expected a comma-separated integer list, got {text!r}") from err


def _parse_theta0(text: str) -> np.ndarray:
    values = [v.strip() for v in text.split(",") if v.strip()]
    if len(values) != 4:
        raise ConfigError(f"theta0 needs 4 comma-separated values, got {text!r}")
    return np.array([float(v) for v in values])


def load_config_file(path) -> dict:
    """Parse an INI file into a {section: {key: value}} dict, validating
    every section and key against the schema."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    values: dict = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        values[section] = {}
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            caster = _SCHEMA[section][key]
            try:
                values[section][key] = caster(raw)
            except ValueError as err:
                raise ConfigError(f"[{section}] {key}: {err}") from err
    return values


def build_config(file_values: dict | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Resolve defaults <- config file <- flag overrides into one config.

    ``overrides`` uses flat keys (seed, shots, backend, dt, t_max, n_modes,
    n_samples, workers, out_dir) mirroring the CLI flags; None entries are
    ignored.
    """
    fv = file_values or {}
    ov = {k: v for k, v in (overrides or {}).items() if v is not None}

    def pick(section, key, default):
        return fv.get(section, {}).get(key, default)

    base = ExperimentConfig()
    try:
        system = SystemParams(
            omega_rabi=pick("system", "omega_rabi", base.system.omega_rabi),
            epsilon=pick("system", "epsilon", base.system.epsilon),
        )
        bath = SpectralDensityParams(
            xi=pick("bath", "xi", base.bath.xi),
            omega_c=pick("bath", "omega_c", base.bath.omega_c),
        )
        thermal = ThermalParams(beta=pick("thermal", "beta", base.thermal.beta))
        theta0_raw = pick("evolution", "theta0", None)
        evolution = EvolutionConfig(
            dt=ov.get("dt", pick("evolution", "dt", base.evolution.dt)),
            t_max=ov.get("t_max", pick("evolution", "t_max", base.evolution.t_max)),
            lambda_reg=pick("evolution", "lambda_reg", base.evolution.lambda_reg),
            backend=ov.get("backend", pick("evolution", "backend", base.evolution.backend)),
            theta0=_parse_theta0(theta0_raw) if theta0_raw else base.evolution.theta0,
        )
        seed = ov.get("seed", pick("run", "seed", base.seed))
        shots = ShotConfig(
            shots=ov.get("shots", pick("shots", "shots", base.shots.shots)),
            rng_seed=seed,
        )
        noise = NoiseParams(
            p1=pick("noise", "p1", base.noise.p1),
            p2=pick("noise", "p2", base.noise.p2),
            ro=pick("noise", "ro", base.noise.ro),
        )
        shots_list_raw = fv.get("shot_stats", {}).get("shots_list")
        checkpoints_raw = fv.get("convergence", {}).get("checkpoints")
        return ExperimentConfig(
            system=system,
            bath=bath,
            n_modes=ov.get("n_modes", pick("bath", "n_modes", base.n_modes)),
            thermal=thermal,
            evolution=evolution,
            shots=shots,
            noise=noise,
            n_samples=ov.get("n_samples", pick("ensemble", "n_samples", base.n_samples)),
            seed=seed,
            workers=ov.get("workers", pick("run", "workers", base.workers)),
            out_dir=Path(ov.get("out_dir", pick("run", "out_dir", base.out_dir))),
            shots_list=_parse_int_list(shots_list_raw) if shots_list_raw else base.shots_list,
            checkpoints=_parse_int_list(checkpoints_raw) if checkpoints_raw else base.checkpoints,
        )
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError(str(err)) from err


def format_config(config: ExperimentConfig) -> str:
    """Render the fully resolved configuration as INI text (the run echo)."""
    theta0 = ",".join(f"{v:.17g}" for v in config.evolution.theta0)
    lines = [
        "[system]",
        f"omega_rabi = {config.system.omega_rabi:.17g}",
        f"epsilon = {config.system.epsilon:.17g}",
        "",
        "[bath]",
        f"xi = {config.bath.xi:.17g}",
        f"omega_c = {config.bath.omega_c:.17g}",
        f"n_modes = {config.n_modes}",
        "",
        "[thermal]",
        f"beta = {config.thermal.beta:.17g}",
        "",
        "[evolution]",
        f"dt = {config.evolution.dt:.17g}",
        f"t_max = {config.evolution.t_max:.17g}",
        f"lambda_reg = {config.evolution.lambda_reg:.17g}",
        f"backend = {config.evolution.backend}",
        f"theta0 = {theta0}",
        "",
        "[shots]",
        f"shots = {config.shots.shots}",
        "",
        "[noise]",
        f"p1 = {config.noise.p1:.17g}",
        f"p2 = {config.noise.p2:.17g}",
        f"ro = {config.noise.ro:.17g}",
        "",
        "[ensemble]",
        f"n_samples = {config.n_samples}",
        "",
        "[run]",
        f"seed = {config.seed}",
        f"workers = {config.workers}",
        f"out_dir = {config.out_dir}",
        "",
        "[shot_stats]",
        f"shots_list = {','.join(str(s) for s in config.shots_list)}",
        "",
        "[convergence]",
        f"checkpoints = {','.join(str(c) for c in config.checkpoints)}",
    ]
    return "\n".join(lines) + "\n"


def with_overrides(config: ExperimentConfig, **kwargs) -> ExperimentConfig:
    return replace(config, **kwargs)
