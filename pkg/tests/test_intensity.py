import numpy as np
import pytest
import scipy.integrate
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_stable_model
from qlinphoton import fields, golden, intensity, response
from qlinphoton.errors import DimensionError, PreconditionError, ValidationError
from qlinphoton.grid import TimeGrid
from qlinphoton.model import SystemParams, realize

NU = fields.ExponentialPulse(1.0)


@pytest.fixture(scope="module")
def xi(grid):
    return fields.photon_pulses([NU], grid)


# ---------------------------------------------------------------- transient


def test_cavity_sigma_closed_form(xi):
    g = realize(SystemParams.cavity(2.0, 0.0))
    sol = intensity.integrate_transient(g, xi, 0.0, 10.0, 1e-3)
    assert np.max(np.abs(sol.Sigma - golden.cavity_sigma(sol.times, 2.0, 1.0))) < 1e-5


def test_cavity_moments_closed_form(cavity, xi):
    sol = intensity.integrate_transient(cavity, xi, 0.0, 10.0, 1e-3)
    t = sol.times
    assert np.max(np.abs(sol.m_minus[:, 0, 0] - golden.cavity_m_minus(t, 2.0, 1.0, 1.0))) < 1e-8
    assert np.max(np.abs(sol.m_minus[:, 0, 1])) < 1e-14
    assert np.max(np.abs(sol.m_plus[:, 0, 1] - golden.cavity_m_plus(t, 2.0, 1.0, 1.0))) < 1e-8
    assert len(sol) == len(t)
    assert sol[3].t == pytest.approx(t[3])


def test_vacuum_input_has_zero_moments_and_intensity(cavity, grid):
    z = np.zeros((grid.n, 1, 1))
    vac = fields.PulseMatrix(grid, z, z, (0,))
    sol = intensity.integrate_transient(cavity, vac, 0.0, 5.0, 1e-3)
    assert not np.any(sol.m_minus) and not np.any(sol.m_plus)
    assert np.max(np.abs(intensity.transient_intensity(cavity, sol, vac).total)) < 1e-14


def test_dpa_transient_decomposition(dpa, xi):
    """Pipeline trace = displayed formula + the ground-state flux
    kappa e^{-kappa t} sinh^2(eps t / 2) of the initially unsqueezed oscillator."""
    sol = intensity.integrate_transient(dpa, xi, 0.0, 10.0, 1e-3)
    tr = intensity.transient_intensity(dpa, sol, xi).total
    t = sol.times
    ref = golden.dpa_transient_intensity(t, 4.0, 1.0, 1.0) + golden.dpa_initial_state_term(t, 4.0, 1.0)
    assert np.max(np.abs(tr - ref)) < 1e-8
    # the omitted term peaks where tanh(eps t / 2) = eps / kappa; value 0.03456 exactly
    assert np.max(golden.dpa_initial_state_term(t, 4.0, 1.0)) == pytest.approx(0.03456, abs=1e-6)
    assert golden.dpa_initial_state_term(2 * np.arctanh(0.25), 4.0, 1.0) == pytest.approx(0.03456, abs=1e-14)


def test_dpa_noise_integral_closed_form():
    t = np.array([0.3, 1.0, 4.0])
    quad = [scipy.integrate.quad(lambda r: 16 * np.exp(-4 * r) * np.sinh(r / 2) ** 2, 0, s)[0] for s in t]
    assert np.allclose(golden.dpa_noise_integral(t, 4.0, 1.0), quad, atol=1e-12)


def test_transient_validation(cavity, dpa, xi, grid):
    with pytest.raises(ValidationError):
        intensity.integrate_transient(cavity, xi, 1.0, 0.0, 1e-3)
    bad = xi.with_arrays(xi.xi_minus, xi.xi_minus)
    with pytest.raises(ValidationError):
        intensity.integrate_transient(cavity, bad, 0.0, 1.0, 1e-3)
    two = fields.photon_pulses([NU, NU], grid)
    with pytest.raises(DimensionError):
        intensity.integrate_transient(dpa, two, 0.0, 1.0, 1e-3)


def test_cavity_transient_reaches_steady(cavity, xi, grid):
    sol = intensity.integrate_transient(cavity, xi, -2.0, 20.0, 1e-3)
    tr = intensity.transient_intensity(cavity, sol, xi).total
    st_ = intensity.steady_intensity(cavity, intensity.steady_pulses(cavity, xi)).total
    ref = np.abs(golden.cavity_output_pulse(grid.times, 2.0, 1.0, 1.0)) ** 2
    assert np.max(np.abs(tr - ref)) < 1e-6
    assert np.max(np.abs(st_ - ref)) < 1e-6


def _transient_steady_gap(g, t0, dt=1e-2):
    gr = TimeGrid(t0, 20.0, dt)
    x = fields.photon_pulses([NU], gr)
    sol = intensity.integrate_transient(g, x, t0, 5.0, dt)
    tr = intensity.transient_intensity(g, sol, x).total
    st_ = intensity.steady_intensity(g, intensity.steady_pulses(g, x)).total
    i0, i5 = gr.index_of(0.0), gr.index_of(5.0)
    return np.max(np.abs(tr[i0 : i5 + 1] - st_[i0 : i5 + 1]))


def test_transient_gap_independent_of_start_for_cavity(cavity):
    # ground state = stationary vacuum state: earlier starts change nothing
    a, b = _transient_steady_gap(cavity, -20.0), _transient_steady_gap(cavity, -40.0)
    assert a < 1e-2
    assert b == pytest.approx(a, rel=1e-6)


def test_transient_gap_halves_for_slow_amplifier():
    # the DPA ground state is not its squeezed stationary state; it relaxes at rate 0.1
    g = realize(SystemParams.dpa(0.4, 0.2))
    a, b = _transient_steady_gap(g, -20.0), _transient_steady_gap(g, -40.0)
    assert a < 1e-2
    assert b <= 0.5 * a


# ---------------------------------------------------------------- steady state


def test_cavity_output_pulse(cavity, xi, grid):
    out = intensity.steady_pulses(cavity, xi)
    ref = golden.cavity_output_pulse(grid.times, 2.0, 1.0, 1.0)
    assert np.linalg.norm(out.xi_minus[:, 0, 0] - ref) / np.linalg.norm(ref) < 1e-3
    assert not np.any(out.xi_plus)


def test_identity_system_passes_pulses(xi):
    g = realize(SystemParams.static([[1.0]]))
    out = intensity.steady_pulses(g, xi)
    assert np.array_equal(out.xi_minus, xi.xi_minus)


def test_dpa_output_pulses(dpa, xi, grid):
    out = intensity.steady_pulses(dpa, xi)
    xm, xp = golden.dpa_output_pulses(grid.times, 4.0, 1.0, 1.0)
    assert np.linalg.norm(out.xi_minus[:, 0, 0] - xm) / np.linalg.norm(xm) < 1e-3
    assert np.linalg.norm(out.xi_plus[:, 0, 0] - xp) / np.linalg.norm(xp) < 1e-3


def test_steady_pulses_dt_convergence(dpa):
    errs = []
    for dt in (4e-3, 2e-3, 1e-3):
        gr = TimeGrid(-2.0, 20.0, dt)
        out = intensity.steady_pulses(dpa, fields.photon_pulses([NU], gr))
        xm, _ = golden.dpa_output_pulses(gr.times, 4.0, 1.0, 1.0)
        errs.append(np.linalg.norm(out.xi_minus[:, 0, 0] - xm) / np.linalg.norm(xm))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.1)


def test_passive_intensity_is_pulse_modulus(cavity, xi):
    out = intensity.steady_pulses(cavity, xi)
    n = intensity.steady_intensity(cavity, out)
    assert np.allclose(n.total, np.abs(out.xi_minus[:, 0, 0]) ** 2)
    assert n.min_eigenvalue() >= -1e-15


def test_dpa_gramian(dpa):
    W = intensity.gramian_w(dpa)[0, 0]
    assert W.real == pytest.approx(2.0 / 15.0, abs=1e-12)
    assert W.real == pytest.approx(golden.dpa_w(4.0, 1.0), abs=1e-12)
    lag = np.linspace(0, 40, 400001)
    gp = response.impulse(dpa).plus(lag)[:, 0, 0]
    assert W.real == pytest.approx(np.trapezoid(np.abs(gp) ** 2, lag), abs=1e-6)


def test_vacuum_floor_is_w(dpa, grid):
    z = np.zeros((grid.n, 1, 1))
    n = intensity.steady_intensity(dpa, intensity.steady_pulses(dpa, fields.PulseMatrix(grid, z, z, (0,))))
    assert np.allclose(n.total, 2.0 / 15.0)


def test_steady_requires_stability(xi):
    g = realize(SystemParams.cavity(2.0)).perturbed(2.0 * np.eye(2))
    with pytest.raises(PreconditionError):
        intensity.steady_pulses(g, xi)


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1), st.integers(1, 2))
def test_passive_photon_conservation(seed, n):
    g = random_stable_model(np.random.default_rng(seed), n, 1, passive=True, margin=0.5, max_rate=20.0)
    gr = TimeGrid(-2.0, 40.0, 1e-3)
    out = intensity.steady_pulses(g, fields.photon_pulses([NU], gr))
    assert fields.pulse_norm_squared(out.xi_minus[:, 0, 0], out.onset[0], gr.dt) == pytest.approx(1.0, abs=1e-4)
    assert np.max(np.abs(out.xi_plus)) < 1e-14


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1))
def test_intensity_is_positive(seed):
    g = random_stable_model(np.random.default_rng(seed), 1, 1, margin=0.5, max_rate=20.0)
    gr = TimeGrid(-2.0, 20.0, 1e-2)
    out = intensity.steady_pulses(g, fields.photon_pulses([NU], gr))
    assert intensity.steady_intensity(g, out).min_eigenvalue() >= -1e-12


# ---------------------------------------------------------------- covariance


def test_passive_vacuum_stays_vacuum(cavity):
    R = intensity.covariance_transfer(cavity, fields.vacuum_cov(1))
    t = np.linspace(-2, 20, 100)
    assert np.max(np.abs(R.smooth(t[:, None], t[None, :]))) < 1e-8
    assert np.allclose(R.delta_coeff, np.diag([1, 0]))


def test_cavity_photon_kernel(cavity, grid, xi):
    R = intensity.covariance_transfer(cavity, fields.photon_input_cov(xi), grid)
    out = intensity.steady_pulses(cavity, xi)
    idx = np.arange(0, grid.n, 997)
    t = grid.times[idx]
    F = out.full()[idx]
    ref = F[:, None] @ np.conj(np.swapaxes(F[None, :], -1, -2))
    assert np.allclose(R.smooth(t[:, None], t[None, :]), ref, atol=1e-12)


def test_dpa_vacuum_kernel(dpa):
    R = intensity.covariance_transfer(dpa, fields.vacuum_cov(1))
    tau = np.array([-2.0, -0.5, 0.0, 0.3, 1.7])
    ref = golden.dpa_output_kernel(tau, 4.0, 1.0)
    assert np.max(np.abs(R.stationary_part(tau) - ref)) < 1e-6


def test_dpa_kernel_hermitian_grid(dpa):
    R = intensity.covariance_transfer(dpa, fields.vacuum_cov(1))
    t = np.linspace(-2, 20, 60)
    M = R.smooth(t[:, None], t[None, :])
    assert np.allclose(M, np.conj(np.swapaxes(np.swapaxes(M, 0, 1), -1, -2)))


def test_spectral_passive_vacuum(cavity):
    w = np.linspace(-20, 20, 81)
    out = intensity.spectral_transfer(cavity, np.diag([1.0, 0.0]), w)
    assert np.allclose(out, np.diag([1.0, 0.0]), atol=1e-12)


def test_spectral_identity_system():
    g = realize(SystemParams.static([[1.0]]))
    spec = lambda w: np.array([[1.0, 0.1 * w], [0.1 * w, 2.0]])
    w = np.linspace(-5, 5, 11)
    assert np.allclose(intensity.spectral_transfer(g, spec, w), np.stack([spec(x) for x in w]))


def test_dpa_spectrum_matches_fft_of_kernel(dpa):
    w = np.linspace(-20, 20, 41)
    spec = intensity.spectral_transfer(dpa, np.diag([1.0, 0.0]), w)
    dt = 2e-3
    tau = dt * np.arange(-15000, 15001)
    K = golden.dpa_output_kernel(tau[np.abs(tau) < 1e-12], 4.0, 1.0)
    R = intensity.covariance_transfer(dpa, fields.vacuum_cov(1))
    Kt = R.stationary_part(tau)
    fft = np.array([np.trapezoid(Kt * np.exp(-1j * x * tau)[:, None, None], tau, axis=0) for x in w])
    assert np.max(np.abs(spec - (R.delta_coeff + fft))) < 1e-4
    assert K.shape == (1, 2, 2)
    assert np.allclose(intensity.kernel_spectrum(R, w), spec, atol=1e-12)
