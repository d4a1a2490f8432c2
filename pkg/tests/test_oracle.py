import math

import numpy as np
import pytest

from conftest import tight_grid
from wavefront import (
    EmitterParams,
    excited_amplitude,
    lorentzian_density_k,
    negative_frequency_mass,
    photon_amplitude_k,
    photon_amplitude_r,
    photon_density_k,
)
from wavefront import oracle
from wavefront.multilevel import ChannelSpec
from wavefront.oracle import ConfigurationError, DecaySystem, GridSpec

P = EmitterParams(omega0=100.0, gamma=1.0, c=1.0)


def test_zero_time_is_initial_state():
    state = oracle.integrate(P, tight_grid(center=P.k0), 0.0)
    assert state.excited[0] == 1
    assert not np.any(state.c)
    assert state.norm == 1.0
    wf = oracle.to_real_space(state)
    assert not np.any(wf.amplitude)


def test_default_grid_layout():
    grid = oracle.default_grid(P)
    assert grid.n_points == 2**15
    assert grid.k_min == pytest.approx(50.0)
    assert grid.k_max == pytest.approx(150.0)
    assert grid.dt == pytest.approx(1e-3)
    k = grid.wavenumbers
    assert k[0] - grid.k_min == pytest.approx(grid.spacing / 2)
    # all acceptance runs stay below half the recurrence time
    assert 20.0 < grid.recurrence_time(P.c) / 2


def test_unstable_step_rejected_before_stepping():
    grid = GridSpec.around(P.k0, 50.0, 2**10, 3e-3)
    with pytest.raises(ConfigurationError, match="exceeds"):
        oracle.integrate(P, grid, 1.0)


def test_grid_must_bracket_resonance():
    with pytest.raises(ConfigurationError, match="bracket"):
        oracle.integrate(P, GridSpec(0.0, 50.0, 64, 1e-4), 1.0)
    with pytest.raises(ConfigurationError):
        oracle.integrate(P, GridSpec(50.0, 150.0, 1, 1e-3), 1.0)


def test_negative_end_time_rejected():
    with pytest.raises(ValueError):
        oracle.integrate(P, tight_grid(center=P.k0), -1.0)


def test_system_validation():
    with pytest.raises(ConfigurationError):
        DecaySystem(levels=(oracle.Level(1.0),), channels=(oracle.Channel(0, 0.0, 1.0),))
    with pytest.raises(ConfigurationError):
        DecaySystem(levels=(oracle.Level(1.0),), channels=(oracle.Channel(3, 1.0, 1.0),))


def test_decay_at_t5(default_run):
    state = default_run[5]
    assert abs(state.excited[0]) ** 2 == pytest.approx(math.exp(-5), abs=1e-5)


def test_decay_history_tracks_exponential(default_run):
    state = default_run[10]
    exact = np.abs(excited_amplitude(P, state.times)) ** 2
    got = np.abs(state.excited_history[:, 0]) ** 2
    assert state.times[-1] == pytest.approx(10.0)
    assert np.max(np.abs(got / exact - 1)) <= 1e-4


def test_excited_phase_follows_carrier(default_run):
    state = default_run[5]
    assert state.excited[0] == pytest.approx(excited_amplitude(P, 5.0), rel=1e-5)


def test_k_amplitude_near_resonance(default_run):
    state = default_run[20]
    got = state.amplitude_at(99.0)
    assert got == pytest.approx(photon_amplitude_k(P, 99.0, 20.0), rel=1e-6)


def test_lorentzian_agreement_at_20(default_run):
    state = default_run[20]
    k = state.wavenumbers(0)
    window = np.abs(k * P.c - P.omega0) <= 5 * P.gamma
    num = np.abs(state.photon[0, window]) ** 2
    assert np.max(np.abs(num / lorentzian_density_k(P, k[window]) - 1)) <= 1e-3


def test_interpolation_consistency(default_run):
    state = default_run[5]
    dk = state.grid.spacing
    k = P.k0 + np.linspace(-5, 5, 37) + 0.37 * dk
    got = state.amplitude_at(k)
    exact = photon_amplitude_k(P, k, 5.0)
    assert np.max(np.abs(got - exact) / np.abs(exact)) <= 1e-5


def test_norm_drift(default_run):
    for t in (5, 10, 20):
        assert abs(default_run[t].norm - 1) / t <= 1e-9


def test_closed_truncated_system_is_unitary_but_biased():
    grid = tight_grid(span=10.0, n=2**11, dt=1e-3, center=P.k0)
    closed = oracle.integrate(P, grid, 3.0, tail_correction=False)
    corrected = oracle.integrate(P, grid, 3.0)
    assert abs(closed.norm - 1) <= 3e-9
    assert not np.any(closed.leaked)
    exact = math.exp(-3.0)
    err_closed = abs(abs(closed.excited[0]) ** 2 / exact - 1)
    err_corrected = abs(abs(corrected.excited[0]) ** 2 / exact - 1)
    # the missing far-detuned modes bias a +-10 gamma window at the percent level
    assert err_closed > 1e-2
    assert err_corrected < err_closed / 100


def test_resume_matches_single_run():
    grid = tight_grid(span=20.0, n=2**11, dt=2e-3, center=P.k0)
    direct = oracle.integrate(P, grid, 2.0)
    split = oracle.resume(oracle.integrate(P, grid, 0.75), 2.0)
    np.testing.assert_allclose(split.c, direct.c, atol=1e-12)
    assert split.b == pytest.approx(direct.b, abs=1e-12)
    assert len(split.times) == len(direct.times)


def test_real_space_parseval(default_run):
    state = default_run[5]
    wf = oracle.to_real_space(state)
    dx = wf.positions[1] - wf.positions[0]
    grid_norm = state.channel_norms(include_leaked=False)[0]
    assert np.sum(np.abs(wf.amplitude) ** 2) * dx == pytest.approx(grid_norm, abs=1e-9)


def test_real_space_matches_wavefront(default_run):
    state = default_run[5]
    wf = oracle.to_real_space(state, smoothing=True)
    i = np.argmin(np.abs(wf.positions - 2.5))
    exact = photon_amplitude_r(P, wf.positions[i], 5.0)
    assert abs(wf.amplitude[i] - exact) / abs(exact) <= 1e-3
    inner = wf.crop(0.5, 4.5)
    exact = photon_amplitude_r(P, inner.positions, 5.0)
    assert np.max(np.abs(inner.amplitude - exact) / np.abs(exact)) <= 1e-3


def test_real_space_causality_up_to_ringing(default_run):
    state = default_run[5]
    wf = oracle.to_real_space(state, smoothing=True)
    half_width = 50.0
    beyond = wf.positions > 5.0 + 25 / half_width
    assert np.max(np.abs(wf.amplitude[beyond])) <= 1e-3 * math.sqrt(P.gamma / P.c)


def test_unsmoothed_reconstruction_rings():
    # Documents why smoothing exists: the wavefront jump leaves Gibbs ringing.
    state = oracle.integrate(P, tight_grid(span=30.0, n=2**12, dt=2e-3, center=P.k0), 2.0)
    raw = oracle.to_real_space(state).crop(0.3, 1.7)
    exact = photon_amplitude_r(P, raw.positions, 2.0)
    assert np.max(np.abs(raw.amplitude - exact) / np.abs(exact)) > 1e-3


def test_negative_frequency_mass_cross_check(wide_run):
    state = wide_run
    k = state.wavenumbers(0)
    assert k[0] < 0 < k[-1]
    lo = state.grid.k_min
    from scipy import integrate

    segment, _ = integrate.quad(lambda q: photon_density_k(P, q, 5.0), lo, 0.0, limit=2000, epsabs=1e-14)
    assert state.negative_frequency_mass() == pytest.approx(segment, rel=2e-3)
    # the segment below the grid is the tail of the closed-form total
    assert segment < negative_frequency_mass(P, 5.0)


def test_two_channel_lambda_symmetric():
    half = ChannelSpec(1, 100.0, 0.5)
    system = DecaySystem.lambda_system(100.0, half, ChannelSpec(-1, 100.0, 0.5))
    state = oracle.integrate(system, tight_grid(center=100.0), 12.0)
    norms = state.channel_norms()
    np.testing.assert_allclose(norms, [0.5, 0.5], atol=1e-4)
    assert abs(state.norm - 1) <= 12e-9


def test_two_channel_v_symmetric():
    plus, minus = ChannelSpec(1, 105.0, 0.5), ChannelSpec(-1, 95.0, 0.5)
    system = DecaySystem.v_system(plus, minus)
    state = oracle.integrate(system, tight_grid(center=100.0), 24.0)
    np.testing.assert_allclose(state.channel_norms(), [0.5, 0.5], atol=1e-4)


def test_lambda_unequal_rates_follow_couplings():
    plus, minus = ChannelSpec(1, 100.0, 2 / 3), ChannelSpec(-1, 100.0, 1 / 3)
    system = DecaySystem.lambda_system(100.0, plus, minus)
    state = oracle.integrate(system, tight_grid(center=100.0), 12.0)
    fractions = state.channel_norms() / np.sum(state.channel_norms())
    np.testing.assert_allclose(fractions, [2 / 3, 1 / 3], atol=1e-4)


def test_v_k_amplitudes_match_closed_form():
    plus, minus = ChannelSpec(1, 105.0, 1.0), ChannelSpec(-1, 95.0, 1.0)
    system = DecaySystem.v_system(plus, minus)
    t = 4.0
    state = oracle.integrate(system, tight_grid(center=100.0), t)
    for j, ch in enumerate((plus, minus)):
        p = EmitterParams(ch.omega, ch.gamma)
        k = state.wavenumbers(j)
        window = np.abs(k - p.k0) <= 10
        exact = photon_amplitude_k(p, k[window], t) / math.sqrt(2)
        got = state.photon[j, window]
        assert np.max(np.abs(got - exact)) <= 1e-4 * np.max(np.abs(exact))


def test_convergence_monotone_in_range():
    specs = [GridSpec.around(P.k0, w, int(w * 80), 1e-3) for w in (10.0, 25.0, 50.0)]
    rows = oracle.convergence_report(P, 2.0, specs, tail_correction=False)
    errors = [r.survival_error for r in rows]
    assert errors[0] > errors[1] > errors[2]


def test_convergence_in_points_plateaus():
    specs = [GridSpec.around(P.k0, 20.0, n, 2e-3) for n in (2**10, 2**11, 2**12)]
    rows = oracle.convergence_report(P, 3.0, specs)
    errors = [r.density_error for r in rows]
    assert errors[1] <= errors[0] * 1.01
    assert errors[2] <= errors[1] * 1.01 or errors[2] < 1e-6


def test_convergence_smoke_two_points():
    specs = [GridSpec.around(P.k0, 10.0, 2, 1e-3), GridSpec.around(P.k0, 10.0, 64, 1e-3)]
    rows = oracle.convergence_report(P, 1.0, specs)
    assert len(rows) == 2
    assert all(math.isfinite(r.survival_error) and math.isfinite(r.norm_drift) for r in rows)
    assert rows[0].survival_error > rows[1].survival_error


def test_convergence_needs_two_specs():
    with pytest.raises(ValueError):
        oracle.convergence_report(P, 1.0, [oracle.default_grid(P)])


def test_dump_round_trip(tmp_path):
    plus, minus = ChannelSpec(1, 101.0, 0.7), ChannelSpec(-1, 99.0, 0.3)
    system = DecaySystem.v_system(plus, minus, c=1.5)
    state = oracle.integrate(system, tight_grid(span=10.0, n=256, dt=1e-3, center=100.0 / 1.5), 0.5)
    path = tmp_path / "state.wfgs"
    oracle.save_state(path, state)
    back = oracle.load_state(path)
    assert back.t == state.t
    assert back.grid == state.grid
    assert back.system == state.system
    np.testing.assert_array_equal(back.c, state.c)
    np.testing.assert_array_equal(back.b, state.b)
    np.testing.assert_array_equal(back.leaked, state.leaked)
    assert path.read_bytes()[:4] == b"WFGS"
    again = oracle.resume(back, 1.0)
    reference = oracle.resume(state, 1.0)
    np.testing.assert_array_equal(again.c, reference.c)


def test_dump_rejects_garbage(tmp_path):
    path = tmp_path / "bad"
    path.write_bytes(b"nope")
    with pytest.raises(ValueError):
        oracle.load_state(path)
