"""Monte Carlo ensembles over noise realizations and their closed forms.

The noise-averaged density matrix of a driven qubit register is

    rho_kj(t_f) = c_k c_j* exp[-i Gamma_a(k,j)] D(k,j),

with Gamma_a(k,j) = Gamma_a(k) - Gamma_a(j) and decoherence factor
D(k,j) = < exp[-i (Gamma_s(k) - Gamma_s(j))] >.  For Gaussian stationary
noise the accumulated stochastic phase difference is Gaussian with zero
mean and variance

    Var = (eta gamma^2 sigma^2 / 4) I_kj,
    I_kj = int_0^T int_0^T O_kj(t) . O_kj(t') f(t - t') dt dt',

so D(k,j) = exp(-Var / 2).  This module estimates D by brute-force Monte
Carlo (either exact propagation or the analytic adiabatic phases) and
evaluates the closed forms, including the onset-of-decoherence ratio
(phase spread ~ 2 pi) expressed through the absorbed noise power
P/V = sigma^2 * d_omega.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.signal import fftconvolve

from .adiabatic import (
    EigenFrame,
    PhaseRecord,
    QubitHamiltonian,
    eigenframe,
    evolve_exact_batch,
    stochastic_phase_batch,
)
from .errors import ResourceLimitError
from .noise import NoiseSpec, make_noise_ensemble, split_seed

__all__ = [
    "EnsembleConfig",
    "AveragedDensity",
    "DecoherenceReport",
    "run_ensemble",
    "averaged_density_analytic",
    "decoherence_factor_analytic",
    "variance_analytic",
    "overlap_integral",
    "onset_ratio",
    "transverse_magnetization",
    "decoherence_report",
]

ENGINES = ("exact_propagation", "analytic_phase")

#: default cap on realizations x time steps x components
MAX_ELEMENTS = 2**28


@dataclass(frozen=True)
class EnsembleConfig:
    """Everything needed to reproduce one Monte Carlo ensemble bit-exactly.

    initial_amplitudes  complex c_k per level (must be normalized)
    engine              'exact_propagation' multiplies exact per-slice
                        propagators; 'analytic_phase' uses the adiabatic
                        closed-form phases along each noise path
    noise_dt            noise grid step (default tau_c / 10)
    substeps            propagation slices per noise step (exact engine)
    """

    hamiltonian: QubitHamiltonian
    noise: NoiseSpec
    initial_amplitudes: Sequence[complex]
    realizations: int = 4096
    master_seed: int = 0
    engine: str = "exact_propagation"
    noise_dt: Optional[float] = None
    substeps: int = 1
    ratio_max: float = 0.1
    strict_adiabatic: bool = False
    max_elements: int = MAX_ELEMENTS

    def __post_init__(self):
        c = np.asarray(self.initial_amplitudes, dtype=complex)
        if c.shape != (self.hamiltonian.n_levels,):
            raise ValueError(
                f"initial_amplitudes must have {self.hamiltonian.n_levels} entries"
            )
        if abs(np.sum(np.abs(c) ** 2) - 1.0) > 1e-12:
            raise ValueError("initial_amplitudes must satisfy sum |c_k|^2 = 1")
        if self.realizations < 2:
            raise ValueError("realizations must be >= 2")
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")
        object.__setattr__(self, "initial_amplitudes", tuple(c.tolist()))

    @property
    def amplitudes(self) -> np.ndarray:
        return np.asarray(self.initial_amplitudes, dtype=complex)

    @property
    def dt(self) -> float:
        if self.noise_dt is not None:
            return self.noise_dt
        return self.noise.correlation_time / 10.0


@dataclass(frozen=True)
class AveragedDensity:
    """Noise-averaged density matrix in the instantaneous eigenbasis at t_f.

    ``standard_errors[k, j]`` is the Monte Carlo standard error of the
    complex entry (real and imaginary scatter combined in quadrature).
    """

    matrix: np.ndarray
    standard_errors: np.ndarray
    realizations_used: int

    @property
    def n_levels(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class DecoherenceReport:
    """Monte Carlo estimate vs closed form for one level pair."""

    levels: tuple
    mc_factor: complex
    mc_standard_error: float
    analytic_variance: float
    analytic_factor: float
    onset_ratio: float
    overlap: float


def _ensemble_noise(config: EnsembleConfig) -> tuple[np.ndarray, np.ndarray]:
    """Time grid and noise samples (realizations, n_t, dim) for the run."""
    h = config.hamiltonian
    duration = h.schedule.duration
    dt = config.dt
    n_steps = int(round(duration / dt))
    elements = config.realizations * (n_steps + 1) * config.noise.dimension
    if elements > config.max_elements:
        raise ResourceLimitError(
            f"ensemble needs {elements} noise samples, above the bound "
            f"{config.max_elements}; reduce realizations or coarsen noise_dt"
        )
    t = np.arange(n_steps + 1) * dt
    if config.noise.variance == 0.0:
        samples = np.zeros((config.realizations, t.size, config.noise.dimension))
    else:
        samples = make_noise_ensemble(
            config.noise, duration, dt, config.master_seed, config.realizations
        )
    return t, samples


def _complex_mean_se(values: np.ndarray, axis=0):
    """Mean and combined real/imag standard error along ``axis``."""
    n = values.shape[axis]
    mean = np.mean(values, axis=axis)
    if n < 2:
        return mean, np.zeros_like(mean, dtype=float)
    se = np.sqrt(
        np.var(values.real, axis=axis, ddof=1)
        + np.var(values.imag, axis=axis, ddof=1)
    ) / np.sqrt(n)
    return mean, se


def run_ensemble(config: EnsembleConfig):
    """Average rho(t_f; k) over noise realizations.

    Returns ``(AveragedDensity, phase_records)`` where the records hold
    Gamma_a (identical across realizations) and the per-realization
    Gamma_s for every level.  Results depend only on the configuration:
    realization i always uses the i-th child of ``master_seed``, and the
    accumulation is a pairwise-summed mean, so any parallel execution
    schedule would produce the same bits.
    """
    h = config.hamiltonian
    strict = config.strict_adiabatic or config.engine == "analytic_phase"
    h.check_adiabatic(
        correlation_time=config.noise.correlation_time,
        ratio_max=config.ratio_max,
        strict=strict,
    )
    t, samples = _ensemble_noise(config)
    frame = eigenframe(h, t)
    c = config.amplitudes

    gamma_a = np.trapezoid(frame.energies - frame.berry_rates, t, axis=-1)
    gamma_s = np.stack(
        [
            stochastic_phase_batch(h, frame, samples, level)
            for level in range(h.n_levels)
        ]
    )  # (n_levels, n_real)

    if config.engine == "analytic_phase":
        amps = c[None, :] * np.exp(
            -1j * (gamma_a[None, :] + gamma_s.T)
        )  # (n_real, n_levels)
    else:
        psi0 = frame.states[:, 0, :].T @ c  # lab-frame initial state
        slices = (t.size - 1) * config.substeps
        psi_f = evolve_exact_batch(h, t, samples, psi0, slices)
        amps = psi_f @ frame.states[:, -1, :].conj().T

    outer = amps[:, :, None] * amps[:, None, :].conj()
    matrix, se = _complex_mean_se(outer, axis=0)

    records = [
        PhaseRecord(
            gamma_a=float(gamma_a[k]),
            gamma_s=float(gamma_s[k, i]),
            level_index=k,
            realization_seed=split_seed(config.master_seed, i),
        )
        for i in range(config.realizations)
        for k in range(h.n_levels)
    ]
    density = AveragedDensity(
        matrix=matrix, standard_errors=se, realizations_used=config.realizations
    )
    return density, records


def decoherence_factor_analytic(variance: float) -> float:
    """Gaussian decoherence factor exp(-variance / 2)."""
    if variance < 0:
        raise ValueError(f"variance must be >= 0, got {variance}")
    return float(np.exp(-variance / 2.0))


def variance_analytic(
    eta: int, coupling: float, sigma2: float, overlap: float
) -> float:
    """Phase variance after eta control cycles: eta gamma^2 sigma^2 I / 4."""
    if eta < 1:
        raise ValueError(f"eta must be >= 1, got {eta}")
    if coupling < 0 or sigma2 < 0 or overlap < 0:
        raise ValueError("coupling, sigma2 and overlap must be >= 0")
    return eta * coupling**2 * sigma2 * overlap / 4.0


def _double_time_integral(
    o_diff: np.ndarray, times: np.ndarray, kernel: Callable
) -> float:
    """sum_c int int o_c(t) o_c(t') f(t - t') dt dt' by trapezoid + FFT."""
    n = times.size
    dt = times[1] - times[0]
    w = np.full(n, dt)
    w[0] = w[-1] = dt / 2.0
    lags = np.arange(-(n - 1), n) * dt
    kern = np.asarray(kernel(lags), dtype=float)
    total = 0.0
    for comp in o_diff:
        g = fftconvolve(w * comp, kern)[n - 1 : 2 * n - 1]
        total += float(np.sum(w * comp * g))
    return total


def overlap_integral(
    frame: EigenFrame,
    operators: np.ndarray,
    kernel: Callable,
    levels: tuple,
    period: float,
    rtol: float = 1e-3,
) -> float:
    """Numerical I_kj for one control period.

    O_kj(t) = <E_k|O|E_k> - <E_j|O|E_j> is evaluated from the eigenframe
    (component-wise for vector operators), and the double time integral is
    done with trapezoid weights and an FFT convolution against the kernel.
    The result must agree with the half-resolution grid to ``rtol``
    relative, otherwise the frame grid is too coarse and a ValueError is
    raised.
    """
    k, j = levels
    if k == j:
        raise ValueError("levels k and j must differ (I_kk is trivially zero)")
    t = frame.times
    if t[-1] < period * (1 - 1e-9):
        raise ValueError("frame must cover the full period [0, T]")
    n_t = int(round(period / (t[1] - t[0])))
    t = t[: n_t + 1]
    exp = frame.operator_expectations(np.asarray(operators))
    o_diff = exp[k][:, : n_t + 1] - exp[j][:, : n_t + 1]
    # an integrand at the roundoff floor of the operator scale is exactly zero
    ref = float(np.max(np.abs(operators)))
    if float(np.max(np.abs(o_diff))) <= 1e-9 * ref:
        return 0.0

    full = _double_time_integral(o_diff, t, kernel)
    coarse = _double_time_integral(o_diff[:, ::2], t[::2], kernel)
    scale = max(abs(full), abs(coarse), 1e-300)
    if abs(full - coarse) > 10 * rtol * scale:
        raise ValueError(
            f"overlap integral not converged: {full:g} vs {coarse:g} on the "
            "half grid; use a finer eigenframe time grid"
        )
    return full


def onset_ratio(
    power_density: float,
    bandwidth: float,
    coupling: float,
    eta: int,
    overlap: float,
) -> float:
    """Onset-of-decoherence ratio (eta/16 pi^2)(gamma^2/d_omega)(P/V) I_kj.

    Uses P/V = sigma^2 d_omega, so the ratio equals the analytic phase
    variance divided by (2 pi)^2; values >= 1 mean the accumulated phase
    spread reaches ~2 pi and coherence is destroyed.
    """
    if bandwidth <= 0:
        raise ValueError(f"bandwidth must be > 0, got {bandwidth}")
    if power_density < 0 or overlap < 0 or eta < 1:
        raise ValueError("power_density, overlap must be >= 0 and eta >= 1")
    return (
        eta
        / (16.0 * np.pi**2)
        * coupling**2
        / bandwidth
        * power_density
        * overlap
    )


def transverse_magnetization(rho: AveragedDensity):
    """(<sigma_x>, <sigma_y>) of a single qubit in the eigenbasis at t_f.

    The magnitude is 2 |rho_{+-}| = 2 |c_+ c_-| |D| and the polar angle of
    (mx, my) equals -Gamma_a(+,-): this is the NMR observable that carries
    the geometric-phase signal.
    """
    if rho.matrix.shape != (2, 2):
        raise ValueError("transverse magnetization is a single-qubit observable")
    upper = rho.matrix[0, 1]  # rho_{-+} = conj(rho_{+-})
    mx = 2.0 * float(upper.real)
    my = -2.0 * float(upper.imag)
    return mx, my


def averaged_density_analytic(
    config: EnsembleConfig, frame_points: int = 8192
) -> AveragedDensity:
    """Closed-form noise-averaged density matrix (no Monte Carlo).

    Entries follow rho_kj = c_k c_j* exp(-i Gamma_a(k,j)) exp(-Var_kj/2)
    with Var_kj from the numerically evaluated overlap integral for each
    level pair.  Standard errors are zero: this is the analytic limit the
    Monte Carlo estimators converge to.
    """
    h = config.hamiltonian
    sched = h.schedule
    t = np.linspace(0.0, sched.duration, frame_points * sched.cycles + 1)
    frame = eigenframe(h, t)
    gamma_a = np.trapezoid(frame.energies - frame.berry_rates, t, axis=-1)
    ops = h.noise_operators(config.noise.dimension)
    c = config.amplitudes
    n = h.n_levels
    matrix = np.zeros((n, n), dtype=complex)
    one_period = eigenframe(h, np.linspace(0.0, sched.period, frame_points + 1))
    for k in range(n):
        for j in range(n):
            if k == j:
                matrix[k, k] = abs(c[k]) ** 2
                continue
            i_kj = overlap_integral(
                one_period,
                ops,
                config.noise.kernel_profile,
                (k, j),
                sched.period,
            )
            var = variance_analytic(
                sched.cycles, h.coupling, config.noise.variance, i_kj
            )
            matrix[k, j] = (
                c[k]
                * np.conj(c[j])
                * np.exp(-1j * (gamma_a[k] - gamma_a[j]))
                * decoherence_factor_analytic(var)
            )
    return AveragedDensity(
        matrix=matrix,
        standard_errors=np.zeros((n, n)),
        realizations_used=0,
    )


def decoherence_report(
    config: EnsembleConfig,
    levels: tuple = (1, 0),
    bandwidth: float = 1.0,
    frame_points: int = 8192,
) -> DecoherenceReport:
    """Monte Carlo decoherence factor vs the Gaussian closed form.

    Runs the configured ensemble, extracts D(k,j) from the averaged
    off-diagonal, and compares with exp(-Var/2) built from the numerical
    overlap integral.  ``bandwidth`` fixes the power bookkeeping via
    P/V = sigma^2 * bandwidth (it cancels in the onset ratio).
    """
    h = config.hamiltonian
    k, j = levels
    c = config.amplitudes
    if c[k] == 0 or c[j] == 0:
        raise ValueError("levels must have nonzero initial amplitudes")
    density, records = run_ensemble(config)
    gamma_a_kj = records[k].gamma_a - records[j].gamma_a
    reference = c[k] * np.conj(c[j]) * np.exp(-1j * gamma_a_kj)
    mc_factor = complex(density.matrix[k, j] / reference)
    mc_se = float(density.standard_errors[k, j] / abs(reference))

    sched = h.schedule
    one_period = eigenframe(h, np.linspace(0.0, sched.period, frame_points + 1))
    i_kj = overlap_integral(
        one_period,
        h.noise_operators(config.noise.dimension),
        config.noise.kernel_profile,
        (k, j),
        sched.period,
    )
    var = variance_analytic(sched.cycles, h.coupling, config.noise.variance, i_kj)
    ratio = onset_ratio(
        config.noise.variance * bandwidth,
        bandwidth,
        h.coupling,
        sched.cycles,
        i_kj,
    )
    return DecoherenceReport(
        levels=(k, j),
        mc_factor=mc_factor,
        mc_standard_error=mc_se,
        analytic_variance=var,
        analytic_factor=decoherence_factor_analytic(var),
        onset_ratio=ratio,
        overlap=i_kj,
    )
