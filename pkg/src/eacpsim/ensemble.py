"""Monte Carlo orchestration: sample bath initial conditions, run independent
variational trajectories (optionally in parallel), and reduce them to ensemble
means, convergence curves, and shot-error statistics.

Reproducibility contract: trajectory ``i`` draws its initial condition from
the substream ``(base_seed, i)`` and its measurement stream from
``(base_seed, i, 1)``, and the reduction averages a trajectory-indexed array.
Results are therefore bit-identical for any worker count or completion order.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import circuits
from .bath import BathInitialCondition, BathSpec, ThermalParams, sample_wigner
from .circuits import NoiseParams, ShotConfig
from .mclachlan import (
    AnalyticBackend,
    EvolutionConfig,
    TrajectoryResult,
    assemble_analytic,
    evolve,
)
from .numeric import PropagationError
from .system import SystemParams
from .bath import driving_force

ABORT_FRACTION_LIMIT = 0.01


class TooManyAbortsError(RuntimeError):
    """More than the tolerated fraction of trajectories aborted."""


@dataclass(frozen=True)
class EnsembleConfig:
    n_samples: int
    base_seed: int
    evolution: EvolutionConfig
    thermal: ThermalParams

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")


@dataclass(frozen=True)
class EnsembleResult:
    times: np.ndarray
    mean_p1: np.ndarray
    mean_p2: np.ndarray
    stderr_p1: np.ndarray
    n_samples: int          # trajectories entering the average
    n_aborted: int
    per_trajectory: np.ndarray | None = None  # (n_samples, n_times) P1 curves


def make_backend(
    evolution: EvolutionConfig,
    params: SystemParams,
    spec: BathSpec,
    ic: BathInitialCondition,
    shots: ShotConfig | None,
    noise: NoiseParams | None,
    seed,
):
    """Instantiate the assembly backend named by ``evolution.backend``."""
    name = evolution.backend
    if name == "analytic":
        return AnalyticBackend(params, spec, ic)
    if name == "statevector":
        return circuits.CircuitBackend(params, spec, ic, shots=0, noise=None, seed=seed)
    if shots is None:
        raise ValueError(f"backend {name!r} needs a ShotConfig")
    if name == "shots":
        return circuits.CircuitBackend(
            params, spec, ic, shots=shots.shots, noise=None, seed=seed
        )
    if name == "noisy":
        if noise is None:
            raise ValueError("backend 'noisy' needs NoiseParams")
        return circuits.CircuitBackend(
            params, spec, ic, shots=shots.shots, noise=noise, seed=seed
        )
    raise ValueError(f"unknown backend {name!r}")


def run_trajectory(
    index: int,
    config: EnsembleConfig,
    params: SystemParams,
    spec: BathSpec,
    shots: ShotConfig | None = None,
    noise: NoiseParams | None = None,
) -> TrajectoryResult:
    """Evolve the trajectory for one Monte Carlo index with its substreams."""
    ic = sample_wigner(spec, config.thermal, (config.base_seed, index))
    backend = make_backend(
        config.evolution, params, spec, ic, shots, noise, seed=(config.base_seed, index, 1)
    )
    return evolve(config.evolution, params, spec, ic, backend)


def _worker(args):
    index, config, params, spec, shots, noise = args
    try:
        res = run_trajectory(index, config, params, spec, shots, noise)
        return index, res.p1, res.p2, None
    except PropagationError as err:
        return index, None, None, str(err)


def run_ensemble(
    config: EnsembleConfig,
    params: SystemParams,
    spec: BathSpec,
    *,
    shots: ShotConfig | None = None,
    noise: NoiseParams | None = None,
    workers: int = 1,
    keep_trajectories: bool = False,
) -> EnsembleResult:
    """Average ``n_samples`` independent trajectories pointwise in time.

    Aborted trajectories are excluded with a warning; more than 1 percent of
    aborts raises :class:`TooManyAbortsError` so silent bias is impossible.
    """
    m = config.n_samples
    n_times = int(round(config.evolution.t_max / config.evolution.dt)) + 1
    times = np.arange(n_times) * config.evolution.dt
    p1 = np.full((m, n_times), np.nan)
    p2 = np.full((m, n_times), np.nan)
    failures: list[tuple[int, str]] = []

    jobs = [(i, config, params, spec, shots, noise) for i in range(m)]
    if workers > 1 and m > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, m // (8 * workers))
            results = pool.map(_worker, jobs, chunksize=chunk)
            for index, row1, row2, err in results:
                if err is None:
                    p1[index] = row1
                    p2[index] = row2
                else:
                    failures.append((index, err))
    else:
        for job in jobs:
            index, row1, row2, err = _worker(job)
            if err is None:
                p1[index] = row1
                p2[index] = row2
            else:
                failures.append((index, err))

    if failures:
        warnings.warn(
            f"{len(failures)} of {m} trajectories aborted and were excluded "
            f"(first: index {failures[0][0]}: {failures[0][1]})"
        )
        if len(failures) > ABORT_FRACTION_LIMIT * m:
            raise TooManyAbortsError(
                f"{len(failures)} aborts exceed the {ABORT_FRACTION_LIMIT:.0%} cap"
            )
        keep = np.ones(m, dtype=bool)
        keep[[idx for idx, _ in failures]] = False
        p1 = p1[keep]
        p2 = p2[keep]

    kept = p1.shape[0]
    mean_p1 = p1.mean(axis=0)
    mean_p2 = p2.mean(axis=0)
    if kept > 1:
        stderr = p1.std(axis=0, ddof=1) / np.sqrt(kept)
    else:
        stderr = np.zeros(n_times)
    return EnsembleResult(
        times=times,
        mean_p1=mean_p1,
        mean_p2=mean_p2,
        stderr_p1=stderr,
        n_samples=kept,
        n_aborted=len(failures),
        per_trajectory=p1 if keep_trajectories else None,
    )


@dataclass(frozen=True)
class ConvergenceResult:
    checkpoints: np.ndarray
    deviations: np.ndarray  # max over t of |running mean - full mean|


def convergence_scan(
    config: EnsembleConfig,
    params: SystemParams,
    spec: BathSpec,
    checkpoints,
    *,
    workers: int = 1,
    result: EnsembleResult | None = None,
) -> ConvergenceResult:
    """Running-mean deviation from the full ensemble mean at each checkpoint.

    Checkpoints must be ascending with the last equal to ``n_samples``.  An
    already-computed ensemble (with per-trajectory curves) can be passed in
    to avoid re-running.
    """
    cps = np.asarray(checkpoints, dtype=int)
    if cps.size == 0 or np.any(np.diff(cps) <= 0):
        raise ValueError("checkpoints must be strictly ascending")
    if cps[-1] != config.n_samples:
        raise ValueError("last checkpoint must equal n_samples")
    if result is None or result.per_trajectory is None:
        result = run_ensemble(
            config, params, spec, workers=workers, keep_trajectories=True
        )
    if result.n_aborted:
        raise RuntimeError("convergence scan requires an abort-free ensemble")
    curves = result.per_trajectory
    cumulative = np.cumsum(curves, axis=0)
    full_mean = cumulative[-1] / curves.shape[0]
    deviations = np.array(
        [np.abs(cumulative[m - 1] / m - full_mean).max() for m in cps]
    )
    return ConvergenceResult(checkpoints=cps, deviations=deviations)


def fit_convergence_exponent(scan: ConvergenceResult) -> float:
    """Log-log slope of deviation vs checkpoint, excluding the trivial final
    checkpoint (deviation zero by construction)."""
    mask = scan.deviations > 0
    mask[-1] = False
    if mask.sum() < 2:
        raise ValueError("need at least two nonzero checkpoints to fit")
    return float(
        np.polyfit(np.log(scan.checkpoints[mask]), np.log(scan.deviations[mask]), 1)[0]
    )


# ---------------------------------------------------------------------------
# Shot-error statistics along a reference trajectory
# ---------------------------------------------------------------------------

_A_ELEMENTS = [(i, j) for i in range(1, 5) for j in range(i, 5)]


@dataclass(frozen=True)
class ErrorStats:
    """Signed estimation errors per (element, shot count) across timesteps."""

    elements: tuple[str, ...]
    shots_list: tuple[int, ...]
    errors: dict  # (element label, shots) -> np.ndarray of signed errors

    def rows(self) -> list[tuple]:
        """(element, shots, median, q1, q3, p0_5, p99_5) per combination."""
        out = []
        for label in self.elements:
            for s in self.shots_list:
                err = self.errors[(label, s)]
                q = np.quantile(err, [0.5, 0.25, 0.75, 0.005, 0.995])
                out.append((label, s, q[0], q[1], q[2], q[3], q[4]))
        return out


def shot_error_stats(
    trajectory: TrajectoryResult,
    params: SystemParams,
    spec: BathSpec,
    ic: BathInitialCondition,
    shots_list,
    *,
    seed: int = 0,
    include_zero_elements: bool = False,
) -> ErrorStats:
    """Estimate every A^R / C^I element at each recorded step with each shot
    count and record the signed error against the analytic value.

    By default only elements whose analytic value is nonzero somewhere along
    the trajectory are tracked (identically-zero elements carry no signal).
    """
    steps = list(zip(trajectory.times, trajectory.thetas))
    analytic = [
        assemble_analytic(theta, params, driving_force(spec, ic, t), t=t)
        for t, theta in steps
    ]

    a_labels = {pair: f"A[{pair[0]},{pair[1]}]" for pair in _A_ELEMENTS}
    c_labels = {i: f"C[{i}]" for i in range(1, 5)}
    if include_zero_elements:
        tracked_a = list(_A_ELEMENTS)
        tracked_c = list(range(1, 5))
    else:
        tracked_a = [
            (i, j)
            for (i, j) in _A_ELEMENTS
            if max(abs(sys.a_real[i - 1, j - 1]) for sys in analytic) > 1e-9
        ]
        tracked_c = [
            i for i in range(1, 5)
            if max(abs(sys.c_imag[i - 1]) for sys in analytic) > 1e-9
        ]

    labels = [a_labels[p] for p in tracked_a] + [c_labels[i] for i in tracked_c]
    shots_list = tuple(int(s) for s in shots_list)
    errors: dict = {}
    for s_idx, s in enumerate(shots_list):
        rng = np.random.default_rng(np.random.SeedSequence((seed, s_idx)))
        errs = {label: np.empty(len(steps)) for label in labels}
        for k, (t, theta) in enumerate(steps):
            ref = analytic[k]
            g = params.epsilon - driving_force(spec, ic, t)
            for (i, j) in tracked_a:
                est = circuits.estimate(
                    circuits.build_a_circuit(theta, i, j, "real"), s, None, rng
                )
                errs[a_labels[(i, j)]][k] = est - ref.a_real[i - 1, j - 1]
            for i in tracked_c:
                im_x = circuits.estimate(
                    circuits.build_c_circuit(theta, i, "x", "imag"), s, None, rng
                )
                im_z = circuits.estimate(
                    circuits.build_c_circuit(theta, i, "z", "imag"), s, None, rng
                )
                est = params.omega_rabi * im_x + g * im_z
                errs[c_labels[i]][k] = est - ref.c_imag[i - 1]
        for label in labels:
            errors[(label, s)] = errs[label]
    return ErrorStats(elements=tuple(labels), shots_list=shots_list, errors=errors)


def write_ensemble_csv(path, result: EnsembleResult) -> None:
    """Columns t, mean_p1, mean_p2, stderr_p1, n_samples."""
    lines = ["t,mean_p1,mean_p2,stderr_p1,n_samples"]
    for k in range(result.times.size):
        lines.append(
            f"{result.times[k]:.17g},{result.mean_p1[k]:.17g},"
            f"{result.mean_p2[k]:.17g},{result.stderr_p1[k]:.17g},{result.n_samples}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_error_stats_csv(path, stats: ErrorStats) -> None:
    """Columns element, shots, median, q1, q3, p0_5, p99_5."""
    lines = ["element,shots,median,q1,q3,p0_5,p99_5"]
    for row in stats.rows():
        label, s, *qs = row
        lines.append(f"{label},{s}," + ",".join(f"{v:.17g}" for v in qs))
    Path(path).write_text("\n".join(lines) + "\n")


def write_convergence_csv(path, scan: ConvergenceResult) -> None:
    """Columns n_samples, max_abs_deviation."""
    lines = ["n_samples,max_abs_deviation"]
    for m, d in zip(scan.checkpoints, scan.deviations):
        lines.append(f"{m},{d:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")
