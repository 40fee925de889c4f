"""Command-line front end.

Subcommands: discretize | single | ensemble | shot-stats | convergence.
Every run writes its CSV outputs, the fully resolved configuration, and a
manifest (config hash, seed, version, per-file checksums, timings) into the
output directory so it can be replayed bit-exactly.

Exit codes: 0 success, 2 configuration error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .bath import discretize, sample_wigner, save_bath_csv, save_ic_csv
from .circuits import CircuitBackend, NoiseParams
from .config import ConfigError, ExperimentConfig, build_config, format_config, load_config_file
from .ensemble import (
    EnsembleConfig,
    TooManyAbortsError,
    convergence_scan,
    run_ensemble,
    shot_error_stats,
    write_convergence_csv,
    write_ensemble_csv,
    write_error_stats_csv,
)
from .mclachlan import AnalyticBackend, TrajectoryResult, evolve
from .numeric import PropagationError
from .system import propagate_exact

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eacpsim",
        description=(
            "Ensemble-averaged classical-path variational dynamics for the "
            "spin-boson model"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("discretize", "write the discretized bath mode table"),
        ("single", "one seeded trajectory: exact vs variational vs sampled"),
        ("ensemble", "Monte Carlo ensemble average of the populations"),
        ("shot-stats", "shot-error statistics along a reference trajectory"),
        ("convergence", "running-mean convergence against sample count"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="INI configuration file")
        p.add_argument("--seed", type=int, help="base random seed")
        p.add_argument("--shots", type=int, help="measurement shots per estimate")
        p.add_argument(
            "--backend",
            choices=("analytic", "statevector", "shots", "noisy"),
            help="assembly backend for variational evolution",
        )
        p.add_argument("--dt", type=float, help="integration timestep")
        p.add_argument("--t-max", dest="t_max", type=float, help="time horizon")
        p.add_argument("--n-modes", dest="n_modes", type=int, help="bath modes")
        p.add_argument(
            "--n-samples", dest="n_samples", type=int, help="Monte Carlo samples"
        )
        p.add_argument("--workers", type=int, help="parallel trajectory workers")
        p.add_argument("--out", dest="out_dir", type=Path, help="output directory")
    return parser


def _resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    file_values = load_config_file(args.config) if args.config else None
    overrides = {
        key: getattr(args, key, None)
        for key in (
            "seed",
            "shots",
            "backend",
            "dt",
            "t_max",
            "n_modes",
            "n_samples",
            "workers",
            "out_dir",
        )
    }
    return build_config(file_values, overrides)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _finalize_run(
    command: str, config: ExperimentConfig, files: list[Path], elapsed: float
) -> None:
    out = config.out_dir
    config_text = format_config(config)
    config_path = out / "config.ini"
    config_path.write_text(config_text)
    manifest = {
        "command": command,
        "version": __version__,
        "seed": config.seed,
        "config_sha256": hashlib.sha256(config_text.encode()).hexdigest(),
        "files": {p.name: _sha256(p) for p in [config_path, *files]},
        "elapsed_seconds": elapsed,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _single_trajectory_inputs(config: ExperimentConfig):
    spec = discretize(config.bath, config.n_modes)
    ic = sample_wigner(spec, config.thermal, (config.seed, 0))
    return spec, ic


def cmd_discretize(config: ExperimentConfig) -> list[Path]:
    spec = discretize(config.bath, config.n_modes)
    path = config.out_dir / "bath.csv"
    save_bath_csv(spec, path)
    expected = config.n_modes / (config.n_modes + 1) * config.bath.xi * config.bath.omega_c / 2
    actual = spec.reorganization_energy()
    print(
        f"discretize: {config.n_modes} modes, reorganization energy "
        f"{actual:.12g} (closed form {expected:.12g}, "
        f"continuum {config.bath.xi * config.bath.omega_c / 2:.12g})"
    )
    return [path]


def cmd_single(config: ExperimentConfig) -> list[Path]:
    spec, ic = _single_trajectory_inputs(config)
    exact = propagate_exact(
        config.system, spec, ic, config.evolution.t_max, config.evolution.dt
    )
    analytic_cfg = replace(config.evolution, backend="analytic")
    tdva = evolve(analytic_cfg, config.system, spec, ic, AnalyticBackend(config.system, spec, ic))
    noise = config.noise if config.noise.any() else None
    sampled_backend = CircuitBackend(
        config.system, spec, ic,
        shots=config.shots.shots, noise=noise, seed=(config.seed, 0, 1),
    )
    sampled = evolve(analytic_cfg, config.system, spec, ic, sampled_backend)

    ic_path = config.out_dir / "initial_condition.csv"
    save_ic_csv(ic, ic_path)
    path = config.out_dir / "single.csv"
    lines = ["t,p1_exact,p1_tdva,p1_shots"]
    for k in range(exact.times.size):
        lines.append(
            f"{exact.times[k]:.17g},{exact.p1[k]:.17g},"
            f"{tdva.p1[k]:.17g},{sampled.p1[k]:.17g}"
        )
    path.write_text("\n".join(lines) + "\n")
    print(
        f"single: max |p1_tdva - p1_exact| = {np.abs(tdva.p1 - exact.p1).max():.3e}, "
        f"max |p1_shots - p1_exact| = {np.abs(sampled.p1 - exact.p1).max():.3e}"
    )
    return [ic_path, path]


def _ensemble_config(config: ExperimentConfig) -> EnsembleConfig:
    return EnsembleConfig(
        n_samples=config.n_samples,
        base_seed=config.seed,
        evolution=config.evolution,
        thermal=config.thermal,
    )


def cmd_ensemble(config: ExperimentConfig) -> list[Path]:
    spec = discretize(config.bath, config.n_modes)
    noise = config.noise if config.noise.any() else None
    result = run_ensemble(
        _ensemble_config(config),
        config.system,
        spec,
        shots=config.shots,
        noise=noise,
        workers=config.workers,
    )
    path = config.out_dir / "ensemble.csv"
    write_ensemble_csv(path, result)
    print(
        f"ensemble: {result.n_samples} trajectories "
        f"({result.n_aborted} aborted), final mean P1 = {result.mean_p1[-1]:.4f}"
    )
    return [path]


def cmd_shot_stats(config: ExperimentConfig) -> list[Path]:
    spec, ic = _single_trajectory_inputs(config)
    reference = evolve(
        replace(config.evolution, backend="analytic"),
        config.system, spec, ic, AnalyticBackend(config.system, spec, ic),
    )
    # statistics over the integration steps, not the t=0 record
    steps = TrajectoryResult(
        times=reference.times[1:],
        thetas=reference.thetas[1:],
        p1=reference.p1[1:],
        p2=reference.p2[1:],
    )
    stats = shot_error_stats(
        steps, config.system, spec, ic, config.shots_list, seed=config.seed
    )
    path = config.out_dir / "shot_stats.csv"
    write_error_stats_csv(path, stats)
    print(
        f"shot-stats: {len(stats.elements)} elements x {len(stats.shots_list)} "
        f"shot counts over {steps.times.size} timesteps"
    )
    return [path]


def cmd_convergence(config: ExperimentConfig) -> list[Path]:
    spec = discretize(config.bath, config.n_modes)
    checkpoints = [c for c in config.checkpoints if c < config.n_samples]
    checkpoints.append(config.n_samples)
    scan = convergence_scan(
        _ensemble_config(config), config.system, spec, checkpoints,
        workers=config.workers,
    )
    path = config.out_dir / "convergence.csv"
    write_convergence_csv(path, scan)
    print(
        "convergence: deviations "
        + ", ".join(
            f"M={m}: {d:.4g}" for m, d in zip(scan.checkpoints, scan.deviations)
        )
    )
    return [path]


_COMMANDS = {
    "discretize": cmd_discretize,
    "single": cmd_single,
    "ensemble": cmd_ensemble,
    "shot-stats": cmd_shot_stats,
    "convergence": cmd_convergence,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _resolve_config(args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    config.out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    try:
        files = _COMMANDS[args.command](config)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (PropagationError, TooManyAbortsError) as err:
        print(f"numerical abort: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    _finalize_run(args.command, config, files, time.perf_counter() - start)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
