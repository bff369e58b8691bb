"""Monte Carlo ensemble vs Gaussian closed forms."""

import numpy as np
import pytest
from scipy import stats

from gqclab import (
    AdiabaticityError,
    ControlSchedule,
    EnsembleConfig,
    NoiseSpec,
    QubitHamiltonian,
    ResourceLimitError,
    averaged_density_analytic,
    decoherence_factor_analytic,
    decoherence_report,
    eigenframe,
    onset_ratio,
    overlap_integral,
    run_ensemble,
    transverse_magnetization,
    variance_analytic,
)

EQUAL = (1 / np.sqrt(2), 1 / np.sqrt(2))


def _hamiltonian(theta=np.pi / 2, magnitude=200.0, period=1.0, cycles=1):
    sched = ControlSchedule(
        magnitude=magnitude, cone_angle=theta, period=period, cycles=cycles
    )
    return QubitHamiltonian(coupling=1.0, schedule=sched)


def _config(sigma2, tau_c=0.05, realizations=512, engine="analytic_phase", **kw):
    return EnsembleConfig(
        hamiltonian=kw.pop("hamiltonian", _hamiltonian()),
        noise=NoiseSpec(variance=sigma2, correlation_time=tau_c),
        initial_amplitudes=kw.pop("amplitudes", EQUAL),
        realizations=realizations,
        master_seed=kw.pop("master_seed", 0),
        engine=engine,
        **kw,
    )


def _sigma2_for_variance(h, tau_c, v_target):
    """sigma^2 that makes the numerically exact phase variance equal v."""
    frame = eigenframe(h, np.linspace(0.0, h.schedule.period, 8193))
    i_kj = overlap_integral(
        frame,
        h.noise_operators(1),
        NoiseSpec(1.0, tau_c).kernel_profile,
        (1, 0),
        h.schedule.period,
    )
    return 4.0 * v_target / (h.schedule.cycles * h.coupling**2 * i_kj)


def test_config_validation():
    with pytest.raises(ValueError):
        _config(1.0, amplitudes=(1.0, 1.0))  # not normalized
    with pytest.raises(ValueError):
        _config(1.0, realizations=1)
    with pytest.raises(ValueError):
        _config(1.0, engine="magic")


def test_run_ensemble_pure_level_noiseless():
    density, _ = run_ensemble(_config(0.0, amplitudes=(1.0, 0.0), realizations=4))
    assert np.allclose(density.matrix, np.diag([1.0, 0.0]), atol=1e-15, rtol=0)
    assert density.matrix[0, 1] == 0.0 and density.matrix[1, 0] == 0.0


def test_run_ensemble_noiseless_superposition():
    cfg = _config(0.0, realizations=4)
    density, records = run_ensemble(cfg)
    assert abs(abs(density.matrix[0, 1]) - 0.5) < 1e-9
    gamma_a_kj = records[0].gamma_a - records[1].gamma_a
    # rho_01 = c0 c1* exp(-i (gamma_a(0) - gamma_a(1)))
    assert abs(np.angle(density.matrix[0, 1]) + gamma_a_kj) % (2 * np.pi) < 1e-9
    # density invariants
    assert abs(np.trace(density.matrix) - 1.0) < 1e-10
    assert np.max(np.abs(density.matrix - density.matrix.conj().T)) < 1e-12
    assert np.min(np.linalg.eigvalsh(density.matrix)) > -1e-10


def test_engines_agree_at_variance_two():
    h = _hamiltonian()
    sigma2 = _sigma2_for_variance(h, 0.05, 2.0)
    rep_a = decoherence_report(_config(sigma2, realizations=1024))
    rep_e = decoherence_report(
        _config(sigma2, realizations=1024, engine="exact_propagation")
    )
    target = np.exp(-1.0) / 1.0  # e^{-v/2}, v = 2
    assert abs(rep_a.analytic_variance - 2.0) < 1e-6
    assert abs(abs(rep_a.mc_factor) - target) < 3 * rep_a.mc_standard_error
    assert abs(abs(rep_e.mc_factor) - target) < 3 * rep_e.mc_standard_error
    combined = np.hypot(rep_a.mc_standard_error, rep_e.mc_standard_error)
    assert abs(abs(rep_a.mc_factor) - abs(rep_e.mc_factor)) < 3 * combined


def test_rho_offdiagonal_matches_half_decoherence_factor():
    h = _hamiltonian()
    sigma2 = _sigma2_for_variance(h, 0.05, 2.0)
    density, _ = run_ensemble(_config(sigma2, realizations=1024))
    expected = 0.5 * np.exp(-1.0)
    assert (
        abs(abs(density.matrix[0, 1]) - expected)
        < 3 * density.standard_errors[0, 1]
    )
    # populations preserved: diagonal = |c_k|^2 within 3 SE
    for k in range(2):
        se = max(density.standard_errors[k, k], 1e-12)
        assert abs(density.matrix[k, k].real - 0.5) < 3 * se


def test_gamma_s_gaussian_and_mean_zero():
    cfg = _config(
        1.0,
        tau_c=0.002,
        realizations=4096,
        noise_dt=0.0002,
        hamiltonian=_hamiltonian(magnitude=5000.0),
    )
    h = cfg.hamiltonian
    assert h.schedule.duration / cfg.noise.correlation_time >= 100
    _, records = run_ensemble(cfg)
    gs = np.array([r.gamma_s for r in records if r.level_index == 1])
    assert gs.size == 4096
    n = gs.size
    se_mean = gs.std(ddof=1) / np.sqrt(n)
    assert abs(gs.mean()) < 3 * se_mean
    # skewness and excess kurtosis within 4 SE of 0
    se_skew = np.sqrt(6.0 / n)
    se_kurt = np.sqrt(24.0 / n)
    assert abs(stats.skew(gs)) < 4 * se_skew
    assert abs(stats.kurtosis(gs)) < 4 * se_kurt


def test_monotone_decoherence_in_sigma2():
    h = _hamiltonian()
    mags = []
    for sigma2 in (0.0, 5.0, 20.0, 80.0, 320.0):
        density, _ = run_ensemble(
            _config(sigma2, realizations=512, master_seed=42)
        )
        mags.append(abs(density.matrix[0, 1]))
    assert all(a >= b - 1e-12 for a, b in zip(mags, mags[1:]))


def test_determinism_bit_exact():
    cfg = _config(3.0, realizations=128, master_seed=7)
    d1, r1 = run_ensemble(cfg)
    d2, r2 = run_ensemble(cfg)
    assert np.array_equal(d1.matrix, d2.matrix)
    assert [(r.gamma_a, r.gamma_s) for r in r1] == [
        (r.gamma_a, r.gamma_s) for r in r2
    ]


def test_analytic_engine_requires_adiabaticity():
    h = _hamiltonian(magnitude=1.0)  # gap 1: grossly non-adiabatic
    cfg = _config(1.0, hamiltonian=h, realizations=4)
    with pytest.raises(AdiabaticityError):
        run_ensemble(cfg)


def test_resource_bound():
    cfg = _config(1.0, tau_c=0.05, realizations=2048, max_elements=1000)
    with pytest.raises(ResourceLimitError):
        run_ensemble(cfg)


def test_decoherence_factor_analytic_values():
    assert decoherence_factor_analytic(0.0) == 1.0
    assert np.isclose(decoherence_factor_analytic(2.0), np.exp(-1.0))
    val = decoherence_factor_analytic(4 * np.pi**2)
    assert np.isclose(val, np.exp(-2 * np.pi**2))
    assert abs(val - 2.675e-9) < 0.01e-9  # the "~3e-9" closed-form number
    with pytest.raises(ValueError):
        decoherence_factor_analytic(-1.0)


def test_variance_analytic_arithmetic():
    assert variance_analytic(1, 2.0, 1.0, 1.0) == 1.0
    # linearity in eta
    assert variance_analytic(4, 1.3, 0.7, 0.2) == 4 * variance_analytic(
        1, 1.3, 0.7, 0.2
    )
    # NMR closed form: I = 4 tau_c T sin^2 theta
    eta, gamma, sigma2, tau_c, T, theta = 3, 1.5, 0.8, 0.01, 2.0, np.pi / 3
    i_nmr = 4 * tau_c * T * np.sin(theta) ** 2
    assert np.isclose(
        variance_analytic(eta, gamma, sigma2, i_nmr),
        eta * gamma**2 * sigma2 * tau_c * T * np.sin(theta) ** 2,
    )
    with pytest.raises(ValueError):
        variance_analytic(0, 1.0, 1.0, 1.0)


def test_overlap_integral_separable_trivial():
    # theta = 0 with O = sigma_z: O_kj constant = -2, kernel identically 1
    h = _hamiltonian(theta=0.0)
    t = np.linspace(0.0, 1.0, 1025)
    frame = eigenframe(h, t)
    ops = np.array([[[1, 0], [0, -1]]], dtype=complex)
    val = overlap_integral(frame, ops, lambda tau: np.ones_like(tau), (0, 1), 1.0)
    assert abs(val - 4.0) < 1e-9  # c^2 T^2 with c = 2, T = 1


@pytest.mark.parametrize("theta", [np.pi / 6, np.pi / 3, np.pi / 2])
def test_overlap_integral_nmr_closed_form(theta):
    h = _hamiltonian(theta=theta)
    tau_c = 1.0 / 1000.0
    t = np.linspace(0.0, 1.0, 32_769)
    frame = eigenframe(h, t)
    val = overlap_integral(
        frame,
        h.noise_operators(1),
        NoiseSpec(1.0, tau_c).kernel_profile,
        (1, 0),
        1.0,
    )
    expected = 4 * tau_c * 1.0 * np.sin(theta) ** 2
    assert abs(val - expected) < 0.05 * expected


def test_overlap_integral_zero_angle_and_errors():
    h = _hamiltonian(theta=0.0)
    t = np.linspace(0.0, 1.0, 1025)
    frame = eigenframe(h, t)
    kernel = NoiseSpec(1.0, 0.01).kernel_profile
    assert overlap_integral(frame, h.noise_operators(1), kernel, (0, 1), 1.0) == 0.0
    with pytest.raises(ValueError):
        overlap_integral(frame, h.noise_operators(1), kernel, (1, 1), 1.0)
    with pytest.raises(ValueError):
        overlap_integral(frame, h.noise_operators(1), kernel, (0, 1), 2.0)


def test_onset_ratio_identity_and_linearity():
    # ratio = 1 exactly when variance_analytic = 4 pi^2
    eta, gamma, overlap, bandwidth = 3, 1.7, 0.42, 2.5
    sigma2 = 16 * np.pi**2 / (eta * gamma**2 * overlap)
    assert np.isclose(variance_analytic(eta, gamma, sigma2, overlap), 4 * np.pi**2)
    ratio = onset_ratio(sigma2 * bandwidth, bandwidth, gamma, eta, overlap)
    assert abs(ratio - 1.0) < 1e-12
    assert np.isclose(
        onset_ratio(2 * sigma2 * bandwidth, bandwidth, gamma, eta, overlap),
        2 * ratio,
    )
    with pytest.raises(ValueError):
        onset_ratio(1.0, 0.0, gamma, eta, overlap)


def test_transverse_magnetization():
    density, records = run_ensemble(_config(0.0, realizations=4))
    mx, my = transverse_magnetization(density)
    assert abs(np.hypot(mx, my) - 1.0) < 1e-9
    gamma_a_kj = records[1].gamma_a - records[0].gamma_a
    angle_diff = (np.angle(mx + 1j * my) + gamma_a_kj) % (2 * np.pi)
    assert min(angle_diff, 2 * np.pi - angle_diff) < 1e-9
    # fully dephased
    from gqclab import AveragedDensity

    flat = AveragedDensity(
        matrix=np.diag([0.5, 0.5]).astype(complex),
        standard_errors=np.zeros((2, 2)),
        realizations_used=2,
    )
    assert transverse_magnetization(flat) == (0.0, 0.0)
    two_qubit = AveragedDensity(
        matrix=np.eye(4, dtype=complex) / 4,
        standard_errors=np.zeros((4, 4)),
        realizations_used=2,
    )
    with pytest.raises(ValueError):
        transverse_magnetization(two_qubit)


def test_averaged_density_analytic_matches_monte_carlo():
    h = _hamiltonian()
    sigma2 = _sigma2_for_variance(h, 0.05, 2.0)
    cfg = _config(sigma2, realizations=2048)
    analytic = averaged_density_analytic(cfg)
    mc, _ = run_ensemble(cfg)
    assert (
        abs(mc.matrix[0, 1] - analytic.matrix[0, 1])
        < 3 * mc.standard_errors[0, 1]
    )
    assert abs(abs(analytic.matrix[0, 1]) - 0.5 * np.exp(-1.0)) < 1e-6
