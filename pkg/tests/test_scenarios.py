import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rydberg_singlet.control import ControlConfig
from rydberg_singlet.model import TRANSIT, SystemParams, named_state
from rydberg_singlet.scenarios import (
    PRESETS,
    ConfigParseError,
    ConfigValidationError,
    UnknownKeyError,
    angular_mhz,
    load_scenario,
    parse_config,
    read_csv_columns,
    run_noise_ensemble,
    run_scenario,
    run_sweep,
    scenario_from_mapping,
    to_physical_units,
    write_sweep_csv,
)
from rydberg_singlet.scenarios.config import MAX_GRID_POINTS, AxisSpec, InitialSpec, Scenario, SweepSpec, default_dt
from rydberg_singlet.scenarios.runner import CSV_HEADER, fmt


def _scenario(text):
    return scenario_from_mapping(parse_config(text))


def test_presets_contents():
    expected = {"fig2a", "fig2b", "fig3a", "fig3e", "fig3i", "fig4a", "fig4b", "fig5a", "fig5b", "fig5c", "fig6"}
    assert expected <= set(PRESETS)
    assert PRESETS["fig3e"].control == ControlConfig(0.08, 0.08, "both")
    assert PRESETS["fig3e"].initial.label == "10"
    assert PRESETS["fig2b"].sweep.axis1.name == "params.omega_m"
    fig6 = PRESETS["fig6"]
    assert fig6.model == "full" and fig6.control.mode == "only_H1"
    assert fig6.resolved_method == "split"
    for s in PRESETS.values():
        p = s.params
        assert (p.delta_r, p.u_rr, p.omega_m) == (50.0, 100.0, 0.01)
        assert load_scenario(s.name) is s


def test_parse_and_round_trip():
    text = """
    # comment line
    model = effective
    params.gamma = 0.001   # trailing comment
    initial = superposition
    initial.amplitudes = 00:0.6, 11:0.8j
    control.mode = only_H1
    control.lambda1 = 0.08
    time.t_end_2pi = 12.5
    time.record_every_2pi = 0.5
    """
    s = _scenario(text)
    assert s.params.gamma == 0.001
    assert s.control == ControlConfig(0.08, 0.0, "only_H1")
    assert s.t_end == pytest.approx(25 * math.pi)
    rho = s.initial.density_matrix("effective").mat
    ket = 0.6 * named_state("00", TRANSIT) + 0.8j * named_state("11", TRANSIT)
    assert np.allclose(rho, np.outer(ket, ket.conj()), atol=1e-15)
    again = _scenario(s.to_text())
    assert again.with_(name=s.name) == s


def test_parse_errors_carry_locations():
    with pytest.raises(ConfigParseError) as err:
        parse_config("model = full\nthis line has no equals sign\n", "demo.cfg")
    assert err.value.line == 2 and "demo.cfg:2" in str(err.value)
    with pytest.raises(ConfigParseError) as err:
        parse_config("model = full\nmodel = effective\n")
    assert err.value.line == 2


def test_unknown_keys_are_rejected():
    with pytest.raises(UnknownKeyError) as err:
        _scenario("model = full\nparams.omega = 1\n")
    assert err.value.key == "params.omega" and err.value.line == 2


@pytest.mark.parametrize(
    "text, key",
    [
        ("model = tiny", "model"),
        ("params.gamma = -0.1", "params.gamma"),
        ("params.u_rr = abc", "params.u_rr"),
        ("control.mode = sometimes", "control.mode"),
        ("control.lambda1 = -1", "control.lambda1"),
        ("initial = mixture\ninitial.weights = 00:0.5, 11:0.4", "initial.weights"),
        ("initial = superposition\ninitial.amplitudes = 00:1, 11:1", "initial.amplitudes"),
        ("initial = mix_00_10\ninitial.eta = 1.5", "initial.eta"),
        ("initial = zz", "initial"),
        ("time.dt = 0", "time.dt"),
        ("noise.trajectories = 0", "noise.trajectories"),
    ],
)
def test_validation_errors_name_the_key(text, key):
    with pytest.raises(ConfigValidationError) as err:
        _scenario(text)
    assert err.value.key == key
    assert err.value.line is not None


def test_mixture_weights_must_sum_to_one():
    with pytest.raises(ConfigValidationError, match="sum"):
        _scenario("initial = mixture\ninitial.weights = 00:0.5, 11:0.4")
    s = _scenario("initial = mixture\ninitial.weights = 00:0.5, 11:0.5")
    assert np.trace(s.initial.density_matrix("effective").mat).real == pytest.approx(1.0)


def test_sweep_grid_limit():
    with pytest.raises(ConfigValidationError, match="limit"):
        SweepSpec(AxisSpec("params.gamma", 0, 1, 0.001), AxisSpec("params.omega_m", 0, 1, 0.05))
    ok = SweepSpec(AxisSpec("params.gamma", 0, 0.99, 0.01), AxisSpec("params.omega_m", 0, 0.99, 0.01))
    assert ok.size == MAX_GRID_POINTS
    with pytest.raises(ConfigValidationError):
        SweepSpec(AxisSpec("params.eta", 0, 1, 0.1))


def test_default_dt_rule():
    p = SystemParams()
    assert default_dt(p, "full") == pytest.approx(5e-4)
    assert default_dt(p, "effective") == pytest.approx(0.1)
    assert default_dt(p, "full", "split") == pytest.approx(2 * math.pi / 32)


@settings(max_examples=200, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_csv_number_format_round_trips(x):
    assert float(fmt(x)) == x


def _small_run():
    return _scenario("initial = 10\ncontrol.mode = both\ncontrol.lambda1 = 0.08\ncontrol.lambda2 = 0.08\ntime.t_end_2pi = 5\n")


def test_run_csv_round_trip(tmp_path):
    res = run_scenario(_small_run(), tmp_path / "run.csv")
    assert res.healthy
    cols = read_csv_columns(tmp_path / "run.csv")
    assert tuple(cols) == CSV_HEADER
    assert np.array_equal(cols["F"], res.trajectory["F"])
    assert np.array_equal(cols["t_over_2pi"], res.trajectory.t_over_2pi)
    assert np.array_equal(cols["f1"], res.trajectory["f1"])


def test_sweep_is_deterministic_and_ordered(tmp_path):
    s = _small_run().with_(
        sweep=SweepSpec(AxisSpec("control.lambda1", 0.0, 0.2, 0.1), AxisSpec("params.omega_m", 0.01, 0.02, 0.01), at_2pi=3.0)
    )
    a, b = run_sweep(s, jobs=1), run_sweep(s, jobs=1)
    write_sweep_csv(a, tmp_path / "a.csv")
    write_sweep_csv(b, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert a.points[:2] == [(0.0, 0.01), (0.0, 0.02)]
    assert a.grid().shape == (3, 2)
    # each grid point matches an individual run
    single = run_scenario(s.with_(sweep=None, t_end_2pi=3.0).with_key("control.lambda1", 0.1).with_key("params.omega_m", 0.02))
    assert a.grid()[1, 1] == pytest.approx(single.trajectory["F"][-1], abs=1e-13)


def test_time_axis_sweep():
    s = _small_run().with_(sweep=SweepSpec(AxisSpec("control.lambda1", 0.0, 0.1, 0.1), AxisSpec("time", 0.0, 4.0, 2.0)))
    res = run_sweep(s, jobs=1)
    assert res.grid().shape == (2, 3)
    single = run_scenario(s.with_(sweep=None, t_end_2pi=4.0, record_every_2pi=2.0).with_key("control.lambda1", 0.1))
    assert np.allclose(res.grid()[1], single.trajectory["F"], atol=1e-13)


def test_noise_run_writes_ensemble(tmp_path):
    s = _scenario("params.gamma = 0\ninitial = uniform\nnoise.eta2 = 0.5\ntime.t_end_2pi = 2\n")
    res = run_noise_ensemble(s, trajectories=20, seed=3, out=tmp_path / "noise.csv")
    cols = read_csv_columns(tmp_path / "noise.csv")
    assert np.array_equal(cols["F_mean"], res.ensemble.mean())
    assert cols["trajectories"][0] == 20
    with pytest.raises(ValueError):
        run_noise_ensemble(s.with_key("noise.eta3", 0.1), 2, 0)


def test_physical_units():
    p = SystemParams()
    conv = to_physical_units(2 * math.pi * 1600, p, angular_mhz(4.0))
    assert conv.t_ms == pytest.approx(0.4, rel=1e-12)
    assert to_physical_units(2 * math.pi * 600, p, angular_mhz(4.0)).t_ms == pytest.approx(0.15, rel=1e-12)
    assert conv.gamma_ratio == pytest.approx(0.002)
    with pytest.raises(ValueError):
        to_physical_units(1.0, p, 0.0)


def test_initial_families():
    a = InitialSpec("mix_10_01", eta=0.25).density_matrix("effective").mat
    assert np.vdot(named_state("01", TRANSIT), a @ named_state("01", TRANSIT)).real == pytest.approx(0.25)
    u = InitialSpec("uniform").density_matrix("full").mat
    assert np.trace(u).real == pytest.approx(1.0) and np.trace(u @ u).real == pytest.approx(1.0)
