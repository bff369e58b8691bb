"""Deterministic control schedules, qubit Hamiltonians, and adiabatic phases.

Conventions (used throughout the package):

* hbar = 1; all energies are angular frequencies.
* The deterministic control field precesses about z at cone angle theta_0
  with period T:  B_a(t) = |B| (sin t0 cos phi, sin t0 sin phi, cos t0),
  phi(t) = +/- 2 pi t / T (forward / reversed contour).
* H_a(t) = -(gamma/2) B_a(t) . sigma per qubit; the coupling gamma must be
  positive, so level 0 (the ground state) is the spin state *aligned* with
  the field and level 1 the anti-aligned one.
* Noise couples linearly: H_s(t) = -(gamma/2) B_n(t) . O_hat, where O_hat
  is a Pauli operator along a fixed axis for scalar noise, or the full
  Pauli vector for isotropic 3-component noise.

Instantaneous eigenstates use the explicit spherical gauge

    |0(t)> = (cos(t/2), e^{i phi} sin(t/2)),
    |1(t)> = (-e^{-i phi} sin(t/2), cos(t/2)),

(t = cone angle) whose Berry connections are smooth and analytic:
gamma_dot_0 = -phidot sin^2(theta/2), gamma_dot_1 = +phidot sin^2(theta/2).
Closed-loop geometric phases are therefore -pi(1 - cos theta) for the
aligned level and +pi(1 - cos theta) for the anti-aligned one.

The two-qubit mode tracks the four product levels k = (i1, i2), optionally
with a per-level effective cone angle (mimicking the level-dependent
effective field induced by an Ising z-z coupling); this is what makes a
conditional geometric phase possible.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import AdiabaticityError, DegeneracyError, ResolutionError
from .noise import NoisePath

__all__ = [
    "ControlSchedule",
    "QubitHamiltonian",
    "EigenFrame",
    "PhaseRecord",
    "eigenframe",
    "evolve_exact",
    "evolve_exact_batch",
    "adiabatic_phases",
    "stochastic_phase_batch",
    "PAULI",
]

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])

#: default ceiling for the adiabaticity ratios 1/(T Delta) and 1/(tau_c Delta)
ADIABATIC_RATIO_MAX = 0.1


@dataclass(frozen=True)
class ControlSchedule:
    """Deterministic precessing control field.

    magnitude   |B_a| (constant, field units)
    cone_angle  theta_0 in [0, pi]
    period      precession period T
    cycles      number of periods eta
    direction   'forward' traces the contour C, 'reversed' its time-reverse
    """

    magnitude: float
    cone_angle: float
    period: float
    cycles: int = 1
    direction: str = "forward"

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError(f"period must be > 0, got {self.period}")
        if not 0 <= self.cone_angle <= np.pi:
            raise ValueError(f"cone_angle must lie in [0, pi], got {self.cone_angle}")
        if self.cycles < 1:
            raise ValueError(f"cycles must be >= 1, got {self.cycles}")
        if self.direction not in ("forward", "reversed"):
            raise ValueError(f"direction must be 'forward' or 'reversed'")
        if self.magnitude < 0:
            raise ValueError(f"magnitude must be >= 0, got {self.magnitude}")

    @property
    def duration(self) -> float:
        return self.cycles * self.period

    @property
    def orientation(self) -> float:
        """+1 for the forward contour C, -1 for the reversed contour."""
        return 1.0 if self.direction == "forward" else -1.0

    @property
    def azimuth_rate(self) -> float:
        return self.orientation * 2.0 * np.pi / self.period

    def azimuth(self, t):
        """Continuously unwrapped azimuth phi(t)."""
        return self.azimuth_rate * np.asarray(t, dtype=float)

    def reversed(self) -> "ControlSchedule":
        other = "reversed" if self.direction == "forward" else "forward"
        return ControlSchedule(
            self.magnitude, self.cone_angle, self.period, self.cycles, other
        )

    def field(self, t) -> np.ndarray:
        """B_a(t), shape (..., 3)."""
        phi = self.azimuth(t)
        s, c = np.sin(self.cone_angle), np.cos(self.cone_angle)
        return self.magnitude * np.stack(
            [s * np.cos(phi), s * np.sin(phi), c * np.ones_like(phi)], axis=-1
        )


@dataclass(frozen=True)
class QubitHamiltonian:
    """H(t; k) = H_a(t) + H_s(t; k) for one or two driven qubits.

    coupling            gyromagnetic coupling gamma > 0 (rad / (s field))
    schedule            the deterministic control schedule
    noise_operator_axis unit 3-vector: O_hat = axis . sigma for scalar noise
    qubit_count         1 or 2
    level_cone_angles   optional 4 effective cone angles (two-qubit mode),
                        indexed by level k = 2*i1 + i2; defaults to the
                        schedule's cone angle for every level
    """

    coupling: float
    schedule: ControlSchedule
    noise_operator_axis: tuple = (1.0, 0.0, 0.0)
    qubit_count: int = 1
    level_cone_angles: Optional[tuple] = None

    def __post_init__(self):
        if self.coupling <= 0:
            raise ValueError(f"coupling must be > 0, got {self.coupling}")
        if self.qubit_count not in (1, 2):
            raise ValueError(f"qubit_count must be 1 or 2, got {self.qubit_count}")
        axis = np.asarray(self.noise_operator_axis, dtype=float)
        if axis.shape != (3,) or not np.isclose(np.linalg.norm(axis), 1.0):
            raise ValueError("noise_operator_axis must be a unit 3-vector")
        if self.level_cone_angles is not None:
            if self.qubit_count != 2:
                raise ValueError("level_cone_angles is a two-qubit feature")
            if len(self.level_cone_angles) != 4:
                raise ValueError("level_cone_angles must have 4 entries")
        object.__setattr__(
            self, "noise_operator_axis", tuple(float(a) for a in axis)
        )

    @property
    def n_levels(self) -> int:
        return 2**self.qubit_count

    @property
    def gap(self) -> float:
        """Single-qubit level splitting Delta = gamma |B_a|.

        In two-qubit mode the middle product levels (0,1) and (1,0) are
        degenerate in energy, but they are exact product eigenstates that
        H_a never mixes; the splitting relevant for noise-induced
        transitions remains the per-qubit gap.
        """
        return self.coupling * self.schedule.magnitude

    def cone_angle_of_level(self, level: int) -> float:
        if self.qubit_count == 1 or self.level_cone_angles is None:
            return self.schedule.cone_angle
        return float(self.level_cone_angles[level])

    def uniform_cone_angles(self) -> bool:
        return self.level_cone_angles is None or np.allclose(
            self.level_cone_angles, self.schedule.cone_angle
        )

    def noise_operators(self, dimension: int) -> np.ndarray:
        """Component operators O_c such that H_s = -(gamma/2) sum_c B_n^c O_c.

        Scalar noise (dimension 1) uses the projected operator
        (axis . sigma); isotropic noise (dimension 3) uses the Pauli vector.
        Two-qubit operators act identically on both qubits (shared coil):
        O -> O x 1 + 1 x O.
        """
        if dimension == 1:
            ops = [np.tensordot(self.noise_operator_axis, PAULI, axes=(0, 0))]
        elif dimension == 3:
            ops = list(PAULI)
        else:
            raise ValueError(f"unsupported noise dimension {dimension}")
        if self.qubit_count == 2:
            eye = np.eye(2)
            ops = [np.kron(o, eye) + np.kron(eye, o) for o in ops]
        return np.stack(ops)

    def check_adiabatic(
        self,
        correlation_time: Optional[float] = None,
        ratio_max: float = ADIABATIC_RATIO_MAX,
        strict: bool = False,
    ) -> dict:
        """Verify 1/(T Delta) and 1/(tau_c Delta) against ``ratio_max``.

        Returns the ratios; warns on violation, or raises
        AdiabaticityError when ``strict``.
        """
        gap = self.gap
        if gap <= 0:
            raise DegeneracyError("zero level splitting: gamma |B_a| = 0")
        ratios = {"drive": 1.0 / (self.schedule.period * gap)}
        if correlation_time is not None:
            ratios["noise"] = 1.0 / (correlation_time * gap)
        bad = {k: v for k, v in ratios.items() if v > ratio_max}
        if bad:
            msg = (
                f"adiabaticity violated: ratios {bad} exceed {ratio_max} "
                f"(gap = {gap:g})"
            )
            if strict:
                raise AdiabaticityError(msg)
            warnings.warn(msg, stacklevel=2)
        return ratios


@dataclass(frozen=True)
class PhaseRecord:
    """Accumulated phases for one level along one noise realization.

    gamma_a  deterministic phase: (1/hbar) int [E_k(t) - hbar gamma_dot_k] dt
    gamma_s  stochastic phase:    (1/hbar) int <E_k| H_s |E_k> dt
    """

    gamma_a: float
    gamma_s: float
    level_index: int
    realization_seed: Optional[int] = None


def _aligned_state(theta: float, phi: np.ndarray) -> np.ndarray:
    half = theta / 2.0
    return np.stack(
        [
            np.full_like(phi, np.cos(half), dtype=complex),
            np.exp(1j * phi) * np.sin(half),
        ],
        axis=-1,
    )


def _anti_state(theta: float, phi: np.ndarray) -> np.ndarray:
    half = theta / 2.0
    return np.stack(
        [
            -np.exp(-1j * phi) * np.sin(half),
            np.full_like(phi, np.cos(half), dtype=complex),
        ],
        axis=-1,
    )


_SINGLE_STATES = (_aligned_state, _anti_state)
_LEVEL_SIGN = np.array([-1.0, 1.0])  # energy/geometric sign per 1q level


@dataclass(frozen=True)
class EigenFrame:
    """Gauge-smooth instantaneous spectrum of the noiseless Hamiltonian.

    times        (n_t,) uniform grid
    energies     (n_levels, n_t)
    states       (n_levels, n_t, dim) in the smooth spherical gauge
    berry_rates  (n_levels, n_t)  gamma_dot_l = i <E_l | dE_l/dt>
    gap          recorded minimum relevant level splitting Delta
    """

    times: np.ndarray
    energies: np.ndarray
    states: np.ndarray
    berry_rates: np.ndarray
    gap: float

    @property
    def n_levels(self) -> int:
        return self.energies.shape[0]

    def operator_expectations(self, operators: np.ndarray) -> np.ndarray:
        """<E_k(t)| O_c |E_k(t)>, shape (n_levels, n_components, n_t)."""
        out = np.einsum(
            "kti,cij,ktj->kct", self.states.conj(), operators, self.states
        )
        return np.real(out)

    def to_csv(self, path) -> None:
        """Export (t, E_k, gamma_dot_k) columns for plotting."""
        cols = [self.times]
        names = ["t_s"]
        for k in range(self.n_levels):
            cols += [self.energies[k], self.berry_rates[k]]
            names += [f"E{k}_rad_per_s", f"berry_rate{k}_rad_per_s"]
        np.savetxt(
            path,
            np.column_stack(cols),
            delimiter=",",
            header=",".join(names),
            comments="",
        )


def eigenframe(h: QubitHamiltonian, time_grid) -> EigenFrame:
    """Instantaneous energies, smooth-gauge eigenstates, Berry connections.

    The spherical parameterization keeps the gauge analytic on the grid;
    the azimuth is linear in t (already unwrapped).
    """
    t = np.asarray(time_grid, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise ValueError("time_grid must be a 1-d array with >= 2 points")
    steps = np.diff(t)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
        raise ValueError("time_grid must be uniform")
    gap = h.gap
    if gap < 1e-12:
        raise DegeneracyError(
            f"level crossing: gap {gap:g} at t = {t[0]:g} (field or coupling is zero)"
        )
    sched = h.schedule
    phi = sched.azimuth(t)
    phidot = sched.azimuth_rate
    half_split = gap / 2.0

    if h.qubit_count == 1:
        theta = sched.cone_angle
        states = np.stack([f(theta, phi) for f in _SINGLE_STATES])
        energies = np.outer(_LEVEL_SIGN * half_split, np.ones_like(t))
        rates = np.outer(
            _LEVEL_SIGN * phidot * np.sin(theta / 2.0) ** 2, np.ones_like(t)
        )
        return EigenFrame(t, energies, states, rates, gap)

    # two qubits: product levels k = (i1, i2), per-level effective cone angle
    states, energies, rates = [], [], []
    for level in range(4):
        i1, i2 = level >> 1, level & 1
        theta = h.cone_angle_of_level(level)
        states.append(
            np.einsum(
                "ta,tb->tab",
                _SINGLE_STATES[i1](theta, phi),
                _SINGLE_STATES[i2](theta, phi),
            ).reshape(t.size, 4)
        )
        sign_sum = _LEVEL_SIGN[i1] + _LEVEL_SIGN[i2]
        energies.append(np.full_like(t, sign_sum * half_split))
        rates.append(
            np.full_like(t, sign_sum * phidot * np.sin(theta / 2.0) ** 2)
        )
    return EigenFrame(
        t, np.stack(energies), np.stack(states), np.stack(rates), gap
    )


def _total_field(h: QubitHamiltonian, noise: NoisePath, t: np.ndarray) -> np.ndarray:
    """B_a(t) plus the noise projected onto its coupling axis, shape (n, 3)."""
    b = h.schedule.field(t)
    samples = np.stack(
        [
            np.interp(t, noise.time_grid, noise.samples[:, c])
            for c in range(noise.spec.dimension)
        ],
        axis=-1,
    )
    if noise.spec.dimension == 1:
        b = b + samples * np.asarray(h.noise_operator_axis)
    else:
        b = b + samples
    return b


def _su2_apply(b: np.ndarray, coupling: float, eps: float, psi: np.ndarray):
    """Apply exp(+i (gamma eps / 2) b . sigma) to a batch of spinors.

    ``b`` has shape (..., 3) and ``psi`` (..., 2); this is the exact
    propagator of H = -(gamma/2) b . sigma over a step ``eps``.
    """
    norm = np.linalg.norm(b, axis=-1)
    x = 0.5 * coupling * eps * norm
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(norm[..., None] > 0, b / norm[..., None], 0.0)
    cos_x = np.cos(x)[..., None]
    sin_x = np.sin(x)
    nx, ny, nz = unit[..., 0], unit[..., 1], unit[..., 2]
    # (n . sigma) psi
    rot0 = nz * psi[..., 0] + (nx - 1j * ny) * psi[..., 1]
    rot1 = (nx + 1j * ny) * psi[..., 0] - nz * psi[..., 1]
    out = cos_x * psi + 1j * sin_x[..., None] * np.stack([rot0, rot1], axis=-1)
    return out


def _su2_matrix(b: np.ndarray, coupling: float, eps: float) -> np.ndarray:
    """Slice propagators exp(+i (gamma eps / 2) b . sigma), shape (..., 2, 2)."""
    e0 = _su2_apply(b, coupling, eps, np.broadcast_to([1.0 + 0j, 0.0], b.shape[:-1] + (2,)))
    e1 = _su2_apply(b, coupling, eps, np.broadcast_to([0.0, 1.0 + 0j], b.shape[:-1] + (2,)))
    return np.stack([e0, e1], axis=-1)


def evolve_exact(
    h: QubitHamiltonian, noise: NoisePath, psi0, slices: int
) -> np.ndarray:
    """Propagate |psi0> through the full noisy Hamiltonian, no approximations.

    The interval covered by the noise path is cut into ``slices`` pieces;
    each piece uses the exact matrix exponential of the midpoint-sampled
    Hamiltonian (closed-form SU(2), Kronecker product for two qubits).
    Norm is preserved to 1e-10 by construction; accuracy improves as
    O(slices^-2) and is validated by slice doubling in the tests.
    """
    psi = evolve_exact_batch(h, noise.time_grid, noise.samples[None], psi0, slices)
    return psi[0]


def evolve_exact_batch(
    h: QubitHamiltonian,
    time_grid: np.ndarray,
    noise_samples: np.ndarray,
    psi0,
    slices: int,
) -> np.ndarray:
    """Vectorized ``evolve_exact`` over a batch of noise realizations.

    noise_samples has shape (n_real, n_times, dim); returns final states of
    shape (n_real, hilbert_dim).
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (h.n_levels,):
        raise ValueError(f"psi0 must have shape ({h.n_levels},)")
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-9:
        raise ValueError("psi0 must be normalized")
    if h.qubit_count == 2 and not h.uniform_cone_angles():
        raise ValueError(
            "exact propagation supports two qubits only with uniform "
            "level_cone_angles (no effective coupling); use the analytic "
            "phase engine otherwise"
        )
    t = np.asarray(time_grid, dtype=float)
    n_steps = t.size - 1
    if slices < n_steps:
        raise ResolutionError(
            f"slices = {slices} below the noise grid resolution ({n_steps} steps)"
        )
    n_real = noise_samples.shape[0]
    t0, t1 = t[0], t[-1]
    eps = (t1 - t0) / slices
    mids = t0 + (np.arange(slices) + 0.5) * eps

    b_det = h.schedule.field(mids)  # (slices, 3)
    axis = np.asarray(h.noise_operator_axis)
    dim = noise_samples.shape[-1]
    # midpoint noise by linear interpolation on the path grid
    noise_mid = np.stack(
        [
            np.stack(
                [np.interp(mids, t, noise_samples[i, :, c]) for c in range(dim)],
                axis=-1,
            )
            for i in range(n_real)
        ]
    )  # (n_real, slices, dim)

    if h.qubit_count == 1:
        psi = np.broadcast_to(psi0, (n_real, 2)).copy()
        for j in range(slices):
            b = b_det[j] + (
                noise_mid[:, j] * axis if dim == 1 else noise_mid[:, j]
            )
            psi = _su2_apply(b, h.coupling, eps, psi)
        return psi

    # two uncoupled qubits driven by the same field and the same noise:
    # U_slice = u x u with u the single-qubit slice propagator
    psi = np.broadcast_to(psi0, (n_real, 4)).reshape(n_real, 2, 2).copy()
    for j in range(slices):
        b = b_det[j] + (noise_mid[:, j] * axis if dim == 1 else noise_mid[:, j])
        u = _su2_matrix(b, h.coupling, eps)  # (n_real, 2, 2)
        psi = u @ psi @ u.swapaxes(-1, -2)
    return psi.reshape(n_real, 4)


def stochastic_phase_batch(
    h: QubitHamiltonian,
    frame: EigenFrame,
    noise_samples: np.ndarray,
    level: int,
) -> np.ndarray:
    """Gamma_s for one level across a batch of noise realizations.

    Gamma_s = int <E_k|H_s|E_k> dt = -(gamma/2) int B_n(t) . O_kk(t) dt,
    evaluated by the trapezoid rule on the shared time grid.
    noise_samples has shape (n_real, n_t, dim).
    """
    ops = h.noise_operators(noise_samples.shape[-1])
    okk = frame.operator_expectations(ops)[level]  # (dim, n_t)
    integrand = -0.5 * h.coupling * np.einsum("ntc,ct->nt", noise_samples, okk)
    return np.trapezoid(integrand, frame.times, axis=-1)


def adiabatic_phases(
    h: QubitHamiltonian,
    noise: NoisePath,
    level: int,
    ratio_max: float = ADIABATIC_RATIO_MAX,
    strict: bool = False,
) -> PhaseRecord:
    """Analytic phases of the adiabatic limit for one noise realization.

    Gamma_a = int [E_k(t) - gamma_dot_k(t)] dt over the path's duration
    (the quadrature is exact here: both integrands are constant in t for a
    precessing schedule); Gamma_s integrates the diagonal noise matrix
    element along the supplied path.  Preconditions 1/(T Delta) and
    1/(tau_c Delta) <= ratio_max are checked; violations warn, or raise
    when ``strict``.
    """
    if not 0 <= level < h.n_levels:
        raise ValueError(f"level must be in [0, {h.n_levels}), got {level}")
    h.check_adiabatic(
        correlation_time=noise.spec.correlation_time,
        ratio_max=ratio_max,
        strict=strict,
    )
    frame = eigenframe(h, noise.time_grid)
    gamma_a = float(
        np.trapezoid(frame.energies[level] - frame.berry_rates[level], frame.times)
    )
    if noise.spec.variance == 0:
        gamma_s = 0.0
    else:
        gamma_s = float(
            stochastic_phase_batch(h, frame, noise.samples[None], level)[0]
        )
    return PhaseRecord(
        gamma_a=gamma_a,
        gamma_s=gamma_s,
        level_index=level,
        realization_seed=noise.seed,
    )
