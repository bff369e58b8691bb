"""Stationary, exponentially correlated control-field noise.

The noise component of the control field is modeled as a zero-mean
Ornstein-Uhlenbeck process with stationary variance ``sigma2`` and
autocovariance

    <x(t) x(t+tau)> = sigma2 * exp(-|tau| / tau_c).

The OU process is the unique choice that is Gaussian, stationary, Markov,
and exponentially correlated, and it admits an *exact* discrete-time
recursion (no integration bias):

    x[n+1] = a x[n] + sigma * sqrt(1 - a^2) * xi[n],   a = exp(-dt / tau_c),

with ``xi`` i.i.d. standard normal and ``x[0]`` drawn from the stationary
marginal, so every path is stationary from t = 0.  Gaussian marginals make
the central-limit argument for the accumulated stochastic phase exact
rather than asymptotic.

Reproducibility contract: a path is a pure function of (spec, duration,
dt, seed).  Ensembles derive one child seed per realization index from a
master seed, so results never depend on generation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import ResolutionError

__all__ = [
    "NoiseSpec",
    "NoisePath",
    "make_noise_path",
    "make_noise_ensemble",
    "estimate_autocorrelation",
    "split_seed",
    "realization_rng",
]

#: dt must be at least this many times smaller than tau_c.
RESOLUTION_FACTOR = 10.0


@dataclass(frozen=True)
class NoiseSpec:
    """Statistical description of the control-field noise.

    variance         stationary variance sigma^2 (field^2 units)
    correlation_time correlation time tau_c (seconds)
    dimension        1 for scalar rf noise, 3 for isotropic vector noise
    kernel           normalized autocorrelation profile; only the
                     exponential kernel exp(-|tau|/tau_c) is supported
    """

    variance: float
    correlation_time: float
    dimension: int = 1
    kernel: str = "exponential"

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError(f"variance must be >= 0, got {self.variance}")
        if self.correlation_time <= 0:
            raise ValueError(
                f"correlation_time must be > 0, got {self.correlation_time}"
            )
        if self.dimension not in (1, 3):
            raise ValueError(f"dimension must be 1 or 3, got {self.dimension}")
        if self.kernel != "exponential":
            raise ValueError(f"unsupported kernel {self.kernel!r}")

    def kernel_profile(self, tau):
        """Normalized fluctuation profile f(tau), with f(0) = 1."""
        return np.exp(-np.abs(np.asarray(tau, dtype=float)) / self.correlation_time)


@dataclass(frozen=True)
class NoisePath:
    """One realization of the noise on a uniform time grid.

    ``samples`` has shape (n_times, dimension).  Regenerating with the same
    (spec, duration, dt, seed) reproduces the samples bit-exactly.
    """

    spec: NoiseSpec
    time_grid: np.ndarray
    samples: np.ndarray
    seed: int

    def __post_init__(self):
        if self.samples.shape != (self.time_grid.size, self.spec.dimension):
            raise ValueError(
                f"samples shape {self.samples.shape} does not match grid "
                f"({self.time_grid.size}, {self.spec.dimension})"
            )

    @property
    def dt(self) -> float:
        return float(self.time_grid[1] - self.time_grid[0])

    @property
    def duration(self) -> float:
        return float(self.time_grid[-1] - self.time_grid[0])

    def scaled(self, factor: float) -> "NoisePath":
        """Path with samples multiplied by ``factor`` (for linearity checks)."""
        return NoisePath(
            spec=NoiseSpec(
                variance=self.spec.variance * factor**2,
                correlation_time=self.spec.correlation_time,
                dimension=self.spec.dimension,
                kernel=self.spec.kernel,
            ),
            time_grid=self.time_grid,
            samples=self.samples * factor,
            seed=self.seed,
        )

    def to_csv(self, path) -> None:
        """Export as CSV columns (t, b_1, ..., b_dim)."""
        header = "t_s," + ",".join(
            f"b{i}_field" for i in range(self.spec.dimension)
        )
        np.savetxt(
            path,
            np.column_stack([self.time_grid, self.samples]),
            delimiter=",",
            header=header,
            comments="",
        )


def split_seed(master_seed: int, index: int) -> int:
    """64-bit child seed for realization ``index`` of an ensemble.

    Splitting is counter-based (``SeedSequence(master, spawn_key=(i,))``),
    so the seed for realization i does not depend on how many other
    realizations exist or in which order they are generated.
    """
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])


def realization_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent generator for realization ``index`` of an ensemble."""
    return np.random.default_rng(
        np.random.SeedSequence(split_seed(master_seed, index))
    )


def _grid(duration: float, dt: float) -> np.ndarray:
    n_steps = int(round(duration / dt))
    return np.arange(n_steps + 1) * dt


def _check_resolution(spec: NoiseSpec, duration: float, dt: float) -> None:
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if duration < dt:
        raise ValueError(f"duration must be >= dt, got {duration} < {dt}")
    bound = spec.correlation_time / RESOLUTION_FACTOR
    if dt > bound * (1 + 1e-12):
        raise ResolutionError(
            f"dt = {dt} too coarse to resolve the correlation structure; "
            f"need dt <= tau_c/{RESOLUTION_FACTOR:g} = {bound}"
        )


def _ou_from_normals(spec: NoiseSpec, xi: np.ndarray, dt: float) -> np.ndarray:
    """Exact OU recursion applied along the first axis of ``xi``.

    ``xi[0]`` seeds the stationary initial value; subsequent rows drive the
    AR(1) update.  Implemented as a single IIR filter pass.
    """
    sigma = np.sqrt(spec.variance)
    a = np.exp(-dt / spec.correlation_time)
    innovations = xi * (sigma * np.sqrt(1.0 - a * a))
    innovations[0] = xi[0] * sigma  # stationary marginal at t = 0
    return lfilter([1.0], [1.0, -a], innovations, axis=0)


def make_noise_path(
    spec: NoiseSpec, duration: float, dt: float, seed: int
) -> NoisePath:
    """Generate one noise realization on the grid 0, dt, ..., duration.

    The exact discretization has stationary marginal variance sigma^2 and
    autocovariance sigma^2 exp(-|tau|/tau_c); the ``dimension`` components
    are independent.
    """
    _check_resolution(spec, duration, dt)
    t = _grid(duration, dt)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    xi = rng.standard_normal((t.size, spec.dimension))
    samples = _ou_from_normals(spec, xi, dt)
    return NoisePath(spec=spec, time_grid=t, samples=samples, seed=seed)


def make_noise_ensemble(
    spec: NoiseSpec,
    duration: float,
    dt: float,
    master_seed: int,
    realizations: int,
) -> np.ndarray:
    """Noise samples for a whole ensemble, shape (realizations, n_times, dim).

    Row i is bit-identical to ``make_noise_path(spec, duration, dt,
    split_seed(master_seed, i))``; the rows are therefore independent of
    generation order and safe to compute in parallel.
    """
    if realizations < 1:
        raise ValueError("realizations must be >= 1")
    _check_resolution(spec, duration, dt)
    t = _grid(duration, dt)
    xi = np.empty((realizations, t.size, spec.dimension))
    for i in range(realizations):
        xi[i] = realization_rng(master_seed, i).standard_normal(
            (t.size, spec.dimension)
        )
    return _ou_from_normals(spec, np.moveaxis(xi, 1, 0), dt).swapaxes(0, 1)


def estimate_autocorrelation(paths, lags):
    """Unbiased autocovariance estimate, averaged over paths and time.

    Returns a list of ``(lag, estimate, standard_error)``.  The estimator at
    each lag is the mean over paths of the per-path time average of
    ``x(t) . x(t + lag)`` (summed over components); the standard error is the
    across-path scatter of those per-path means.  At lag 0 this equals the
    (mean-zero) sample variance by construction.
    """
    if not paths:
        raise ValueError("need at least one path")
    ref = paths[0]
    for p in paths[1:]:
        if p.time_grid.shape != ref.time_grid.shape or not np.array_equal(
            p.time_grid, ref.time_grid
        ):
            raise ValueError("all paths must share the same time grid")
        if p.spec != ref.spec:
            raise ValueError("all paths must share the same spec")
    dt = ref.dt
    n = ref.time_grid.size
    out = []
    for lag in lags:
        m = int(round(lag / dt))
        if abs(m * dt - lag) > 1e-9 * max(dt, abs(lag)):
            raise ValueError(f"lag {lag} is not representable on the grid")
        if not 0 <= m < n:
            raise ValueError(f"lag {lag} outside the path duration")
        per_path = np.array(
            [
                np.mean(np.sum(p.samples[: n - m] * p.samples[m:], axis=1))
                for p in paths
            ]
        )
        est = float(np.mean(per_path))
        if len(paths) > 1:
            se = float(np.std(per_path, ddof=1) / np.sqrt(len(paths)))
        else:
            se = 0.0
        out.append((float(lag), est, se))
    return out
