import numpy as np
import pytest

from combscatter import (ConfigurationError, ModelConfig, NumericalError, ParseError, PumpTone, SweepSpec,
                         build_comb, fit, full_scan, load_measured, sweep)
from combscatter.interference import isolator_conditions
from combscatter.sweep_fit import (DB_FLOOR, MeasuredScattering, SingularPointWarning, default_free,
                                   gauge_fixed_phases, measured_from_scan, objective, write_measured)


def test_spec_validation(isolator):
    ok = dict(base=isolator, parameter="phase", pump=3, grid=[0.0, 1.0], observables=[("0", "2")])
    SweepSpec(**ok)
    for change in (dict(parameter="width"), dict(pump=4), dict(grid=[0.0, 1.0, 0.5]),
                   dict(grid=[0.0, np.nan]), dict(observables=[("0", "9")]), dict(observables=[])):
        with pytest.raises(ConfigurationError):
            SweepSpec(**{**ok, **change})
    single = isolator.replace(pumps=isolator.pumps[:1])
    with pytest.raises(ConfigurationError):
        SweepSpec(single, "p_rel", 1, [1.0], [("0", "2")])
    with pytest.raises(ConfigurationError):
        SweepSpec(isolator, "p_rel", 3, [1.0], [("0", "2")], reference_pump=3)


def test_phase_sweep_finds_the_null(isolator):
    cond = isolator_conditions(isolator.comb, isolator.gamma, 0.01, {"a": 0, "b": 2, "d": -1})
    grid = np.sort(np.append(np.linspace(-np.pi, np.pi, 41)[1:], cond.loop_phase_target))
    spec = SweepSpec(isolator, "phase", 3, grid, [("0", "2"), ("2", "0")])
    res = sweep(spec)
    assert res.argmin("0", "2") == pytest.approx(cond.loop_phase_target)
    assert res.trace("0", "2").min() < -250
    assert not res.singular.any()
    assert res.extrema()["S_0_2"]["argmin"] == pytest.approx(cond.loop_phase_target)
    threaded = sweep(spec, threads=3)
    np.testing.assert_array_equal(threaded.traces_db, res.traces_db)


def test_p_rel_scales_against_reference(isolator):
    spec = SweepSpec(isolator, "p_rel", 3, [0.5, 2.0], [("2", "0")])
    assert spec.reference_pump == 1
    assert spec.config_at(2.0).pumps[2].amplitude == pytest.approx(2 * isolator.pumps[0].amplitude)
    assert SweepSpec(isolator, "amplitude", 1, [3e-5], [("2", "0")]).config_at(3e-5).pumps[0].amplitude == 3e-5


def test_singular_points_are_recorded_as_nan(tmp_path):
    # one mode, degenerate pump at 2*omega0: det M vanishes at |g| = |Delta_0| = 1/2
    cfg = ModelConfig(build_comb(10.0, 1.0, 0), (PumpTone("high", 0, 0.01),), coupling_rate=1.0)
    spec = SweepSpec(cfg, "amplitude", 1, [0.01, 0.05, 0.06], [("0", "0")])
    with pytest.warns(SingularPointWarning):
        res = sweep(spec)
    assert res.singular.tolist() == [False, True, False]
    assert np.isnan(res.trace("0", "0")[1])
    text = res.to_csv(tmp_path / "sweep.csv")
    assert text.splitlines()[0] == "param_value,S_0_0_db"
    assert text.splitlines()[2].endswith("nan")
    bad = cfg.with_pump(0, amplitude=0.05)
    measured = measured_from_scan(full_scan(cfg), cfg)
    assert objective(bad, measured) == np.inf


def test_full_scan_is_normalized_mode_sector(isolator):
    S = full_scan(isolator)
    assert S.normalized and all(not lab.conjugate for lab in S.labels)
    raw = full_scan(isolator, normalize=False)
    assert not raw.normalized


def test_measured_round_trip(tmp_path, isolator):
    data = measured_from_scan(full_scan(isolator), isolator, with_phase=True)
    assert data.magnitude_db.min() >= DB_FLOOR
    path = write_measured(data, tmp_path / "scan.csv")
    assert (tmp_path / "scan.csv.meta.toml").is_file() and (tmp_path / "scan.csv.phase.csv").is_file()
    back = load_measured(path)
    assert back.modes == data.modes and back.normalized
    np.testing.assert_allclose(back.magnitude_db, data.magnitude_db, rtol=1e-12)
    np.testing.assert_allclose(back.complex(), data.complex(), rtol=1e-10, atol=1e-300)
    assert back.metadata["config"]["gamma_hz"] == pytest.approx(isolator.gamma / (2 * np.pi))
    with pytest.raises(FileExistsError):
        write_measured(data, path)
    write_measured(data, path, force=True)


def test_floor_maps_to_exact_zero():
    data = MeasuredScattering((0, 1), [[0.0, DB_FLOOR], [-20.0, 0.0]])
    assert data.magnitude[0, 1] == 0.0 and data.magnitude[1, 0] == pytest.approx(0.1)
    with pytest.raises(ConfigurationError):
        data.complex()


@pytest.mark.parametrize("modes, values", [
    ((0, 1), [[0.0, 1.0]]),
    ((0,), [[0.0, 1.0], [1.0, 0.0]]),
    ((0, 0), [[0.0, 1.0], [1.0, 0.0]]),
    ((0, 1), [[0.0, np.inf], [1.0, 0.0]]),
])
def test_measured_validation(modes, values):
    with pytest.raises(ParseError):
        MeasuredScattering(modes, values)


@pytest.mark.parametrize("text", [
    "",
    "mode,0,1\n0,1,2\n1,3,4\n",
    "out\\in,0,x\n0,1,2\n1,3,4\n",
    "out\\in,0,1\n0,1,2\n",
    "out\\in,0,1\n0,1,2\n1,3\n",
    "out\\in,0,1\n0,1,2\n1,3,oops\n",
    "out\\in,0,1\n1,1,2\n0,3,4\n",
])
def test_load_measured_rejects_malformed(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(ParseError):
        load_measured(path)


def test_load_measured_missing_and_format(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_measured(tmp_path / "none.csv")
    with pytest.raises(ConfigurationError):
        load_measured(tmp_path / "none.csv", format="hdf5")


def test_gauge_fixing(isolator, circulator):
    assert gauge_fixed_phases(isolator) == (1, 2)
    assert default_free(isolator) == ("gamma", "p1", "p2", "p3", "phi3")
    assert gauge_fixed_phases(circulator) == (1,)
    assert default_free(circulator) == ("gamma", "p1", "p2", "phi2")


def _strong():
    # couplings of order 0.1 so that every parameter visibly shapes the scan
    w0, gamma = 1e4, 2.0
    pumps = (PumpTone("low", 1, 0.2 * gamma / w0, 0.5), PumpTone("high", 1, 0.15 * gamma / w0, -0.4),
             PumpTone("low", 2, 0.1 * gamma / w0, 1.0))
    return ModelConfig(build_comb(w0, 1.0, 2), pumps, coupling_rate=gamma)


def test_fit_recovers_parameters():
    truth = _strong()
    measured = measured_from_scan(full_scan(truth), truth)
    start = truth.replace(coupling_rate=truth.gamma * 1.1).with_pump(2, phase=0.8, amplitude=1.1e-4)
    res = fit(measured, start, restarts=2)
    assert res.objective < 1e-20 < res.initial_objective
    assert res.gamma == pytest.approx(truth.gamma, rel=1e-6)
    assert res.phases[2] == pytest.approx(1.0, rel=1e-6)
    for got, tone in zip(res.amplitudes, truth.pumps):
        assert got == pytest.approx(tone.amplitude, rel=1e-6)
    assert res.history[0] == res.initial_objective and list(res.history) == sorted(res.history, reverse=True)
    assert res.iterations > 0 and res.evaluations > res.iterations
    assert res.as_dict()["free"] == list(default_free(truth))


def test_fit_with_nothing_free(isolator):
    measured = measured_from_scan(full_scan(isolator), isolator)
    res = fit(measured, isolator, free=())
    assert res.objective == res.initial_objective and res.converged and res.evaluations == 1


@pytest.mark.parametrize("free", [["kappa"], ["p9"], ["gamma", "gamma"]])
def test_fit_rejects_bad_free_parameters(isolator, free):
    measured = measured_from_scan(full_scan(isolator), isolator)
    with pytest.raises(ConfigurationError):
        fit(measured, isolator, free=free)


def test_fit_rejects_bad_metric_and_singular_start():
    cfg = ModelConfig(build_comb(10.0, 1.0, 0), (PumpTone("high", 0, 0.01),), coupling_rate=1.0)
    measured = measured_from_scan(full_scan(cfg), cfg)
    with pytest.raises(ConfigurationError):
        fit(measured, cfg, metric="phase")
    with pytest.raises(NumericalError):
        fit(measured, cfg.with_pump(0, amplitude=0.05))


def test_complex_metric_sees_gauge_phases():
    truth = _strong()
    measured = measured_from_scan(full_scan(truth), truth, with_phase=True)
    assert objective(truth, measured, metric="complex") == pytest.approx(0.0, abs=1e-28)
    # shifting both gauge pumps consistently leaves every magnitude but not every phase intact
    theta = 0.3
    shifted = truth.with_pump(0, phase=0.5 + theta).with_pump(1, phase=-0.4 + theta).with_pump(2, phase=1.0 + 2 * theta)
    assert objective(shifted, measured) < 1e-24
    assert objective(shifted, measured, metric="complex") > 1e-3
