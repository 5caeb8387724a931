import math

import numpy as np
import pytest

from conftest import with_params, without_friction
from oracles import exponential_band_crossing
from tsea.experiments import (
    HANG_CENTER_RAD,
    crossing_times,
    dominant_frequency,
    hysteresis_area,
    linear_fit,
    peak_deflection,
    rms,
    run_disturbance,
    run_dynamic_switching,
    run_static_stiffness,
    run_switch_cycle,
    settling_time,
)
from tsea.plant import Mode
from tsea.selector import COMPLETED, REJECTED


# --- pure metrics ---------------------------------------------------------

def test_linear_fit_exact_line():
    x = np.linspace(-0.2, 0.2, 50)
    slope, intercept, stderr = linear_fit(x, 5.57 * x)
    assert slope == pytest.approx(5.57, abs=1e-12)
    assert intercept == pytest.approx(0.0, abs=1e-12)
    assert stderr == pytest.approx(0.0, abs=1e-9)


def test_linear_fit_constant():
    x = np.linspace(0.0, 1.0, 20)
    slope, intercept, _ = linear_fit(x, np.full_like(x, 2.5))
    assert slope == pytest.approx(0.0, abs=1e-14)
    assert intercept == pytest.approx(2.5)


def test_linear_fit_symmetric_perturbation_keeps_slope():
    rng = np.random.default_rng(3)
    x = np.concatenate([np.linspace(-1, 1, 21)] * 2)
    y = 3.3 * x + 0.7
    slope0, _, _ = linear_fit(x, y)
    y2 = y.copy()
    # equal bumps at abscissae mirrored about the mean leave the slope alone
    y2[np.argmin(np.abs(x - 0.5))] += 0.31
    y2[np.argmin(np.abs(x + 0.5))] += 0.31
    slope1, _, _ = linear_fit(x, y2)
    assert slope1 == pytest.approx(slope0, abs=1e-12)


def test_linear_fit_degenerate_x():
    with pytest.raises(ValueError, match="degenerate"):
        linear_fit([1.0, 1.0, 1.0], [0.0, 1.0, 2.0])
    with pytest.raises(ValueError, match="two"):
        linear_fit([1.0], [1.0])


def test_hysteresis_area_degenerate_line():
    x = np.concatenate([np.linspace(0, 1, 10), np.linspace(1, 0, 10)])
    assert hysteresis_area(x, 2.0 * x) == pytest.approx(0.0, abs=1e-15)


def test_hysteresis_area_unit_square():
    x = [0.0, 1.0, 1.0, 0.0]
    y = [0.0, 0.0, 1.0, 1.0]
    assert hysteresis_area(x, y) == pytest.approx(1.0)


def test_hysteresis_area_needs_points():
    with pytest.raises(ValueError, match="three"):
        hysteresis_area([0.0, 1.0], [0.0, 1.0])


def test_rms_values():
    assert rms([-2.0] * 7) == 2.0
    t = np.linspace(0.0, 1.0, 10000, endpoint=False)
    assert rms(np.sin(2 * np.pi * 3 * t)) == pytest.approx(1 / math.sqrt(2), abs=1e-3)
    assert rms([3.0, 4.0]) == pytest.approx(3.5355, abs=1e-4)
    with pytest.raises(ValueError):
        rms([])


def test_settling_time_in_band_throughout():
    t = np.linspace(0.0, 1.0, 100)
    y = np.full_like(t, 0.001)
    assert settling_time(t, y, reference=0.0) == 0.0


def test_settling_time_exponential_matches_oracle():
    band_rad = math.radians(0.5)
    amp, tau = 0.1, 0.3
    t = np.arange(0.0, 3.0, 1e-4)
    y = amp * np.exp(-t / tau)
    expected_ms = exponential_band_crossing(amp, tau, band_rad) * 1000.0
    measured = settling_time(t, y, reference=0.0)
    assert measured == pytest.approx(expected_ms, abs=0.11)  # within one sample


def test_settling_time_permanent_semantics():
    # re-exits the band once; settles only after the last exit
    t = np.linspace(0.0, 1.0, 1001)
    y = np.zeros_like(t)
    y[100:110] = 0.02   # excursion
    y[500:505] = -0.03  # late re-exit
    out = settling_time(t, y, reference=0.0)
    assert out == pytest.approx(t[505] * 1000.0, abs=1e-6)


def test_settling_time_sentinel():
    t = np.linspace(0.0, 1.0, 100)
    assert settling_time(t, np.full_like(t, 1.0), reference=0.0) is None


def test_peak_deflection():
    t = np.zeros(50) + 0.25
    assert peak_deflection(t, 0.25) == 0.0
    y = np.zeros(50)
    y[13] = 0.1
    assert peak_deflection(y, 0.0) == pytest.approx(5.73, abs=0.01)
    with pytest.raises(ValueError):
        peak_deflection([], 0.0)


def test_crossing_times_hysteresis_filter():
    t = np.linspace(0.0, 10.0, 10001)
    y = np.exp(-t / 2.0) * np.sin(2 * np.pi * 1.0 * t)
    raw = crossing_times(t, y)
    assert len(raw) >= 19
    big = crossing_times(t, y, min_excursion=0.05)
    assert 0 < len(big) < len(raw)
    f = dominant_frequency(t, y)
    assert f == pytest.approx(1.0, rel=1e-3)
    assert dominant_frequency(t, np.ones_like(t)) is None


# --- protocol smoke tests (fast variants) ---------------------------------

def test_static_stiffness_frictionless_quick(full_range):
    # undamped except a sliver of viscous drag: no dissipation mechanism
    # remains, so the loop encloses (almost) nothing
    pre = without_friction(full_range, b_m=0.003)
    trace, rep = run_static_stiffness(Mode.SEA, pre, cycles=1)
    assert rep.K_fit == pytest.approx(5.57, rel=0.01)
    assert rep.loop_area < 1e-4
    assert np.all(np.diff(trace.t) > 0)
    dts = np.diff(trace.t)
    assert np.allclose(dts, dts[0])


def test_static_stiffness_rejects_transition_mode(full_range):
    with pytest.raises(ValueError):
        run_static_stiffness(Mode.TRANS, full_range)


def test_dynamic_switching_short(calibrated):
    trace, rep = run_dynamic_switching(calibrated, duration=6.0, switch_period=2.0)
    assert len(rep.switch_records) == 3  # floor(duration / period)
    for r in rep.switch_records:
        assert r.outcome == COMPLETED
        assert r.engage_time - r.request_time == pytest.approx(
            calibrated.params.t_switch, abs=calibrated.params.dt
        )
        assert abs(r.torque_at_request) < calibrated.params.tau_disengage
    # switches alternate modes
    for a, b in zip(rep.switch_records, rep.switch_records[1:]):
        assert a.to_mode is b.from_mode
    # parallel-mode rows log one coordinate for both angles
    pea = trace.mode == 1
    assert pea.any()
    assert np.array_equal(trace.theta_m[pea], trace.theta_o[pea])
    # saturation bound holds on every logged sample, and command differs from
    # applied torque only at the clamp
    assert np.max(np.abs(trace.tau_applied)) <= calibrated.params.tau_max
    differs = trace.tau_cmd != trace.tau_applied
    assert np.all(np.abs(trace.tau_cmd[differs]) > calibrated.params.tau_max)
    assert rep.per_mode.keys() == {"SEA", "PEA"}


def test_dynamic_switching_retries_until_gate_opens(calibrated):
    # holding around the horizontal keeps the spring loaded near 2.3 Nm, so
    # requests are refused until the stroke unloads the path
    trace, rep = run_dynamic_switching(
        calibrated, duration=4.0, switch_period=1.0, center=0.0
    )
    assert rep.retried_attempts > 0
    for r in rep.switch_records:
        assert abs(r.torque_at_request) < calibrated.params.tau_disengage


def test_disturbance_zero_impulse(calibrated):
    trace, rep = run_disturbance(Mode.SEA, calibrated, n_impacts=1, impact_torque=0.0,
                                 post_window_s=2.0)
    assert rep.peaks_deg[0] < 0.02
    assert rep.settling_ms[0] == 0.0


def test_disturbance_motor_side_measurement_is_smaller(calibrated):
    # the spring filters the impact before it reaches the motor, so the
    # motor-side deviation is a fraction of the output-side one
    _, out = run_disturbance(Mode.SEA, calibrated, n_impacts=1, post_window_s=4.0)
    _, mot = run_disturbance(Mode.SEA, calibrated, n_impacts=1, post_window_s=4.0,
                             measure="motor")
    assert mot.peaks_deg[0] < 0.5 * out.peaks_deg[0]


def test_disturbance_validates_args(calibrated):
    with pytest.raises(ValueError):
        run_disturbance(Mode.SEA, calibrated, n_impacts=0)
    with pytest.raises(ValueError):
        run_disturbance(Mode.TRANS, calibrated)
    with pytest.raises(ValueError):
        run_disturbance(Mode.SEA, calibrated, measure="both")


def test_switch_cycle_small(calibrated):
    trace, rep = run_switch_cycle(calibrated, n=3)
    assert rep.completed == 3
    assert rep.rejected == 0
    assert rep.max_latency_error_s == 0.0
    assert rep.max_ke_loss_j >= 0.0
    assert len(rep.records) == 3


def test_switch_cycle_gate_forced_closed(calibrated):
    # a vanishing disengagement limit with the arm held off the gravity
    # neutral keeps every request loaded: nothing completes
    pre = with_params(calibrated, tau_disengage=1e-12)
    trace, rep = run_switch_cycle(
        pre, n=3, hold=HANG_CENTER_RAD + 0.25, retry_window_s=0.02
    )
    assert rep.completed == 0
    assert rep.rejected == 3
    assert all(r.outcome == REJECTED and r.engage_time is None for r in rep.records)


def test_metrics_are_pure(calibrated):
    trace, _ = run_dynamic_switching(calibrated, duration=1.0, switch_period=0.5)
    a = rms(trace.i_q)
    b = rms(trace.i_q)
    assert a == b
