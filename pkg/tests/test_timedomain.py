import numpy as np
import pytest

from combscatter import (ConfigurationError, InstabilityError, ModelConfig, PumpTone, build_comb, build_m,
                         scattering_matrix)
from combscatter.cmt_matrix import amplitude_labels
from combscatter.timedomain import (SimulationSpec, demodulate, demodulate_samples, integrate,
                                    s_column_timedomain, s_matrix_timedomain, write_trajectory_csv)


def _small(pumps=(), gamma=2.0, center=100.0, half_width=2):
    return ModelConfig(build_comb(center, 1.0, half_width), tuple(pumps), coupling_rate=gamma)


def test_demodulation_is_orthogonal_over_whole_windows():
    n, windows = 64, 3
    t = np.arange(n * windows) * (2 * np.pi / n)
    sig = 0.7 * np.exp(2j * t) - 0.2j * np.exp(-1j * t) + 0.05
    out = demodulate_samples(t, sig, [2.0, -1.0, 0.0, 3.0], n)
    np.testing.assert_allclose(out, [0.7, -0.2j, 0.05, 0.0], atol=1e-13)
    with pytest.raises(ConfigurationError):
        demodulate_samples(t[:-1], sig[:-1], [1.0], n)


@pytest.mark.parametrize("lab_frame, tol", [(False, 1e-6), (True, 1e-5)])
def test_pump_off_reflection_matches_matrix(lab_frame, tol):
    cfg = _small(center=20.0)
    S = scattering_matrix(build_m(cfg))
    for m in (-2, 0, 1):
        # the lab frame resolves omega0 itself and needs a finer step for the same accuracy
        spec = SimulationSpec(cfg, m, lab_frame=lab_frame, windows=2, oversampling=128 if lab_frame else 32)
        col = s_column_timedomain(spec)
        k = 2 * (m + 2)
        assert col[k] == pytest.approx(S.entries[k, k], abs=tol)
        assert np.abs(np.delete(col, k)).max() < tol


def test_single_quadrature_leaves_antimode_rows_unknown():
    cfg = _small([PumpTone("low", 1, 2e-3, 0.3)])
    col = s_column_timedomain(SimulationSpec(cfg, 0, windows=2), quadratures=1)
    assert np.all(np.isnan(col[1::2]))
    assert np.all(np.isfinite(col[0::2]))
    with pytest.raises(ConfigurationError):
        s_column_timedomain(SimulationSpec(cfg, 0), quadratures=3)
    with pytest.raises(ConfigurationError):
        s_column_timedomain(SimulationSpec(cfg, 0, input_amplitude=0))


def _pumped_error(center):
    g = (0.06, 0.04)
    cfg = _small([PumpTone("low", 1, g[0] * 2.0 / center, 0.4), PumpTone("low", 2, g[1] * 2.0 / center, -1.1)],
                 center=center)
    td = s_matrix_timedomain(cfg, windows=2)
    # the oscillator has no comb edge, so compare with a comb wide enough to hide it
    wide = cfg.replace(comb=build_comb(center, 1.0, 14))
    ref = scattering_matrix(build_m(wide)).restrict(amplitude_labels(range(-2, 3))).entries
    mask = np.abs(ref) > 1e-9
    assert np.abs(td.entries[~mask]).max() < 1e-8
    return float(np.max(np.abs(td.entries[mask] - ref[mask]) / np.abs(ref[mask])))


def test_pumped_matrix_matches_guarded_frequency_domain():
    low, high = _pumped_error(100.0), _pumped_error(400.0)
    assert high < 2e-3
    # what remains is the counter-rotating correction, which falls off as 1/omega0
    assert 3.5 < low / high < 4.5


def test_high_pump_above_threshold_diverges():
    cfg = _small([PumpTone("high", 0, 2.0 * 2.0 / 100.0, 0.0)])
    with pytest.raises(InstabilityError):
        integrate(SimulationSpec(cfg, 0, windows=1))


@pytest.mark.parametrize("kwargs", [
    dict(input_mode=7),
    dict(input_mode=0, windows=0),
    dict(input_mode=0, oversampling=4),
    dict(input_mode=0, steps_per_window=10),
    dict(input_mode=0, steps_per_window=2.5),
])
def test_spec_validation(kwargs):
    cfg = _small([PumpTone("low", 1, 1e-3)])
    with pytest.raises(ConfigurationError):
        SimulationSpec(cfg, **kwargs)


def test_incommensurate_windows_are_rejected():
    cfg = ModelConfig(build_comb(100.25, 1.0, 1), (PumpTone("low", 1, 1e-3),), coupling_rate=2.0)
    with pytest.raises(ConfigurationError):
        SimulationSpec(cfg, 0)
    with pytest.raises(ConfigurationError):
        SimulationSpec(cfg.pump_off(), 0, lab_frame=True)
    SimulationSpec(cfg.pump_off(), 0)


def test_timing_properties():
    spec = SimulationSpec(_small([PumpTone("low", 1, 1e-3)]), 0, transient_windows=1)
    assert spec.omega_max() == pytest.approx(201.0)
    assert spec.window_steps % spec.stride == 0
    assert spec.dt * spec.window_steps == pytest.approx(2 * np.pi)
    assert spec.discard_windows == 1
    assert SimulationSpec(_small(), 0).discard_windows == 4


def test_trajectory_and_csv(tmp_path):
    cfg = _small(center=20.0)
    spec = SimulationSpec(cfg, 1, windows=2)
    traj = integrate(spec)
    assert traj.windows == 2 and traj.a.shape == (traj.t.shape[0], 1)
    demod = demodulate(traj, cfg.comb)
    assert abs(demod[1][0]) == pytest.approx(1.0, abs=1e-6)
    text = write_trajectory_csv(traj, tmp_path / "traj.csv", decimate=10)
    lines = text.splitlines()
    assert lines[0] == "t,re_a,im_a,re_out,im_out"
    assert len(lines) == 1 + -(-traj.t.shape[0] // 10)
    with pytest.raises(FileExistsError):
        write_trajectory_csv(traj, tmp_path / "traj.csv")
    with pytest.raises(ValueError):
        write_trajectory_csv(traj, decimate=0)
