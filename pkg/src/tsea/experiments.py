"""Scripted experiment protocols and derived metrics.

Four protocols: quasi-static stiffness characterization with the output
locked, dynamic switching during sinusoidal tracking, impulse disturbance
rejection under position hold, and a switching endurance run. Each protocol
owns its simulation instance and returns (Trace, report); all metric
functions are pure.
"""

from __future__ import annotations

import math
from array import array
from dataclasses import dataclass, field

import numpy as np

from . import plant
from .control import p_position
from .params import Preset
from .plant import (
    Mode,
    PeaState,
    PlantState,
    SeaState,
    SimClock,
    SimulationError,
    TransitionState,
    clamp_torque,
    gravity_torque,
    mode_of,
    spring_torque,
)
from .selector import (
    COMPLETED,
    REJECTED,
    SwitchRecord,
    SwitchRequest,
    advance_selector,
    engagement_energy_loss,
    request_switch,
)
from .spring_hub import HubModel, linear_hub

MODE_NAMES = ("SEA", "PEA", "TRANS")
MODE_CODE = {Mode.SEA: 0, Mode.PEA: 1, Mode.TRANS: 2}

# Protocol constants; gains are per-protocol, impact size is calibrated once
# against the series-mode peak-deflection target and reused unchanged.
TRACK_KP = 40.0
DISTURB_KP = 30.0
HOLD_KP = 30.0
IMPACT_TORQUE_NM = 7.0
IMPACT_DURATION_S = 0.010
SETTLE_BAND_DEG = 0.5
HANG_CENTER_RAD = -math.pi / 2.0  # arm hanging straight down: zero gravity torque


class InvariantViolation(RuntimeError):
    """A selector or protocol invariant failed during a run."""


# ---------------------------------------------------------------------------
# Trace
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Trace:
    """Uniformly sampled simulation log."""

    dt: float            # sample spacing [s]
    t: np.ndarray        # [s]
    mode: np.ndarray     # int8 codes into MODE_NAMES
    theta_m: np.ndarray  # [rad]
    omega_m: np.ndarray  # [rad/s]
    theta_o: np.ndarray  # [rad]
    omega_o: np.ndarray  # [rad/s]
    tau_cmd: np.ndarray      # commanded motor torque [Nm]
    tau_applied: np.ndarray  # saturated motor torque [Nm]
    tau_spring: np.ndarray   # hub spring torque [Nm]
    i_q: np.ndarray          # q-axis current [A]

    def __len__(self) -> int:
        return len(self.t)

    def mode_name(self, i: int) -> str:
        return MODE_NAMES[self.mode[i]]


_FLOAT_COLS = ("t", "theta_m", "omega_m", "theta_o", "omega_o",
               "tau_cmd", "tau_applied", "tau_spring", "i_q")


class TraceRecorder:
    """Append-only column store; keeps every stride-th simulation step."""

    def __init__(self, dt: float, stride: int = 1):
        if stride < 1:
            raise ValueError("stride must be >= 1")
        self.dt = dt
        self.stride = stride
        self._step = 0
        self._cols = {name: array("d") for name in _FLOAT_COLS}
        self._mode = array("b")

    @property
    def n_recorded(self) -> int:
        return len(self._mode)

    def record(self, t: float, state: PlantState, tau_cmd: float,
               tau_applied: float, hub: HubModel, K_t: float) -> None:
        keep = self._step % self.stride == 0
        self._step += 1
        if not keep:
            return
        cls = type(state)
        if cls is SeaState:
            code = 0
            qm, wm, qo, wo = state.theta_m, state.omega_m, state.theta_o, state.omega_o
            ts = hub.torque(qm - qo - state.beta_offset)
        elif cls is PeaState:
            code = 1
            qm = qo = state.theta
            wm = wo = state.omega
            ts = hub.torque(state.theta - state.theta_anchor)
        else:
            code = 2
            qm, wm, qo, wo = state.theta_m, state.omega_m, state.theta_o, state.omega_o
            ts = 0.0
        c = self._cols
        c["t"].append(t)
        c["theta_m"].append(qm)
        c["omega_m"].append(wm)
        c["theta_o"].append(qo)
        c["omega_o"].append(wo)
        c["tau_cmd"].append(tau_cmd)
        c["tau_applied"].append(tau_applied)
        c["tau_spring"].append(ts)
        c["i_q"].append(tau_applied / K_t)
        self._mode.append(code)

    def record_raw(self, t: float, code: int, qm: float, wm: float, qo: float,
                   wo: float, tau_cmd: float, tau_applied: float,
                   tau_spring: float, i_q: float) -> None:
        keep = self._step % self.stride == 0
        self._step += 1
        if not keep:
            return
        c = self._cols
        c["t"].append(t)
        c["theta_m"].append(qm)
        c["omega_m"].append(wm)
        c["theta_o"].append(qo)
        c["omega_o"].append(wo)
        c["tau_cmd"].append(tau_cmd)
        c["tau_applied"].append(tau_applied)
        c["tau_spring"].append(tau_spring)
        c["i_q"].append(i_q)
        self._mode.append(code)

    def trace(self) -> Trace:
        cols = {name: np.asarray(col, dtype=np.float64) for name, col in self._cols.items()}
        return Trace(dt=self.dt * self.stride,
                     mode=np.asarray(self._mode, dtype=np.int8), **cols)


def _stride_for(dt: float, record_hz: float | None) -> int:
    if record_hz is None:
        return 1
    return max(1, round(1.0 / (dt * record_hz)))


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def rms(series) -> float:
    """Root mean square of a non-empty series."""
    arr = np.asarray(series, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("rms of empty series")
    return float(np.sqrt(np.mean(arr * arr)))


def linear_fit(x, y) -> tuple[float, float, float]:
    """Ordinary least squares y = slope*x + intercept.

    Returns (slope, intercept, slope standard error). Requires at least two
    distinct x values.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size != y.size or x.size < 2:
        raise ValueError("need at least two paired samples")
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    if sxx <= 0.0:
        raise ValueError("degenerate x spread: all abscissae identical")
    slope = float(dx @ (y - ym)) / sxx
    intercept = ym - slope * xm
    resid = y - (slope * x + intercept)
    n = x.size
    if n > 2:
        stderr = math.sqrt(float(resid @ resid) / (n - 2) / sxx)
    else:
        stderr = 0.0
    return slope, intercept, stderr


def hysteresis_area(theta, tau) -> float:
    """Absolute shoelace area of a closed torque-deflection loop [Nm·rad].

    The polyline is closed by appending the first point if needed.
    """
    x = np.asarray(theta, dtype=np.float64)
    y = np.asarray(tau, dtype=np.float64)
    if x.size != y.size or x.size < 3:
        raise ValueError("need at least three loop points")
    if x[0] != x[-1] or y[0] != y[-1]:
        x = np.append(x, x[0])
        y = np.append(y, y[0])
    return float(0.5 * abs(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1])))


def peak_deflection(angles, reference: float) -> float:
    """Max |angle - reference| over a segment, in degrees."""
    arr = np.asarray(angles, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("empty segment")
    return math.degrees(float(np.max(np.abs(arr - reference))))


def settling_time(t, angles, reference: float, band_deg: float = SETTLE_BAND_DEG) -> float | None:
    """Time [ms] from segment start until the angle permanently stays in
    reference ± band. None if the segment never settles (sentinel).

    The segment is assumed to start at the impact instant.
    """
    t = np.asarray(t, dtype=np.float64)
    err = np.abs(np.asarray(angles, dtype=np.float64) - reference)
    band = math.radians(band_deg)
    outside = np.nonzero(err > band)[0]
    if outside.size == 0:
        return 0.0
    last_out = int(outside[-1])
    if last_out == len(t) - 1:
        return None
    return float((t[last_out + 1] - t[0]) * 1000.0)


def crossing_times(t, y, min_excursion: float = 0.0) -> list[float]:
    """Zero-crossing instants of y(t), linearly interpolated.

    With min_excursion > 0, a crossing only counts when the signal reaches at
    least that magnitude on both sides of it, which suppresses in-band
    micro-oscillation at the tail of a decay.
    """
    t = np.asarray(t, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    idx = np.nonzero(np.sign(y[:-1]) * np.sign(y[1:]) < 0)[0]
    if idx.size == 0:
        return []
    cross_t = t[idx] - y[idx] * (t[idx + 1] - t[idx]) / (y[idx + 1] - y[idx])
    if min_excursion <= 0.0:
        return [float(v) for v in cross_t]
    bounds = [0, *list(idx + 1), len(y)]
    seg_peak = [float(np.max(np.abs(y[bounds[k]:bounds[k + 1]]))) for k in range(len(bounds) - 1)]
    kept = [float(cross_t[k]) for k in range(len(idx))
            if seg_peak[k] >= min_excursion and seg_peak[k + 1] >= min_excursion]
    return kept


def dominant_frequency(t, y, min_excursion: float = 0.0) -> float | None:
    """Oscillation frequency [Hz] estimated from zero-crossing spacing."""
    times = crossing_times(t, y, min_excursion)
    if len(times) < 2:
        return None
    return (len(times) - 1) / (2.0 * (times[-1] - times[0]))


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StiffnessReport:
    mode: str
    K_fit: float                  # mean per-cycle OLS slope [Nm/rad]
    K_stderr: float               # spread of per-cycle slopes [Nm/rad]
    loop_area: float              # mean per-cycle hysteresis area [Nm·rad]
    k_per_cycle: list[float]
    area_per_cycle: list[float]
    samples_per_cycle: list[list[tuple[float, float]]]  # decimated (theta, tau)

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "K_fit_nm_per_rad": self.K_fit,
            "K_stderr_nm_per_rad": self.K_stderr,
            "loop_area_nm_rad": self.loop_area,
            "k_per_cycle": self.k_per_cycle,
            "area_per_cycle": self.area_per_cycle,
        }


@dataclass(frozen=True)
class DisturbanceReport:
    mode: str
    impact_torque_nm: float
    impact_duration_s: float
    peaks_deg: list[float]
    settling_ms: list[float | None]
    zero_crossings: list[int]
    dominant_freq_hz: list[float | None]
    mean_peak_deg: float
    mean_settling_ms: float | None

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "impact_torque_nm": self.impact_torque_nm,
            "impact_duration_s": self.impact_duration_s,
            "peaks_deg": self.peaks_deg,
            "settling_ms": self.settling_ms,
            "zero_crossings": self.zero_crossings,
            "dominant_freq_hz": self.dominant_freq_hz,
            "mean_peak_deg": self.mean_peak_deg,
            "mean_settling_ms": self.mean_settling_ms,
        }


@dataclass(frozen=True)
class SegmentStats:
    mode: str
    t_start: float
    t_end: float
    rms_error_rad: float
    rms_iq: float
    peak_iq: float

    def as_dict(self) -> dict:
        return {
            "mode": self.mode, "t_start": self.t_start, "t_end": self.t_end,
            "rms_error_rad": self.rms_error_rad,
            "rms_iq_a": self.rms_iq, "peak_iq_a": self.peak_iq,
        }


@dataclass(frozen=True)
class TrackingReport:
    segments: list[SegmentStats]
    per_mode: dict[str, dict[str, float]]  # pooled rms/peak per engaged mode
    switch_records: list[SwitchRecord]
    retried_attempts: int

    def as_dict(self) -> dict:
        return {
            "segments": [s.as_dict() for s in self.segments],
            "per_mode": self.per_mode,
            "switches_completed": sum(1 for r in self.switch_records if r.outcome == COMPLETED),
            "retried_attempts": self.retried_attempts,
            "switch_records": [_record_dict(r) for r in self.switch_records],
        }


@dataclass(frozen=True)
class CycleReport:
    completed: int
    rejected: int
    retried_attempts: int
    max_ke_loss_j: float
    max_latency_error_s: float
    records: list[SwitchRecord] = field(repr=False)

    def as_dict(self) -> dict:
        return {
            "completed": self.completed,
            "rejected": self.rejected,
            "retried_attempts": self.retried_attempts,
            "max_ke_loss_j": self.max_ke_loss_j,
            "max_latency_error_s": self.max_latency_error_s,
        }


def _record_dict(r: SwitchRecord) -> dict:
    return {
        "request_time": r.request_time,
        "engage_time": r.engage_time,
        "from_mode": r.from_mode.value,
        "to_mode": r.to_mode.value,
        "torque_at_request": r.torque_at_request,
        "outcome": r.outcome,
    }


# ---------------------------------------------------------------------------
# Shared harness pieces
# ---------------------------------------------------------------------------

def dynamics_hub(preset: Preset) -> HubModel:
    """Linearized hub at the configured (measured) stiffness K_s."""
    return linear_hub(preset.params.K_s, preset.hub)


def _motor_angle(state: PlantState) -> float:
    cls = type(state)
    if cls is PeaState:
        return state.theta
    return state.theta_m


def _measured_angle(state: PlantState, source: str) -> float:
    cls = type(state)
    if cls is PeaState:
        return state.theta
    return state.theta_m if source == "motor" else state.theta_o


def _velocities(state: PlantState) -> tuple[float, float]:
    cls = type(state)
    if cls is PeaState:
        return state.omega, state.omega
    return state.omega_m, state.omega_o


def initial_state(mode: Mode, theta: float = 0.0) -> PlantState:
    """Engaged at rest with the spring unloaded at the given angle."""
    if mode is Mode.SEA:
        return SeaState(theta, 0.0, theta, 0.0, 0.0)
    if mode is Mode.PEA:
        return PeaState(theta, 0.0, theta)
    raise ValueError("initial state must be an engaged mode")


def _hold_loop(
    state: PlantState,
    clock: SimClock,
    preset: Preset,
    hub: HubModel,
    rec: TraceRecorder,
    theta_target: float,
    kp: float,
    omega_tol: float,
    window_s: float,
    timeout_s: float,
    min_hold_s: float = 0.0,
) -> tuple[PlantState, SimClock]:
    """Run the position hold until both velocities stay under omega_tol for
    window_s consecutive seconds (checked after min_hold_s)."""
    p, load = preset.params, preset.load
    window_steps = max(1, round(window_s / p.dt))
    timeout_steps = round(timeout_s / p.dt)
    min_steps = round(min_hold_s / p.dt)
    quiet = 0
    for k in range(timeout_steps):
        tau_cmd = p_position(theta_target, _motor_angle(state), kp)
        tau_applied = clamp_torque(tau_cmd, p)
        rec.record(clock.t, state, tau_cmd, tau_applied, hub, p.K_t)
        state, clock = plant.step(state, clock, tau_cmd, p, hub, load)
        wm, wo = _velocities(state)
        quiet = quiet + 1 if (abs(wm) < omega_tol and abs(wo) < omega_tol) else 0
        if k >= min_steps and quiet >= window_steps:
            return state, clock
    raise SimulationError(
        f"hold did not settle below |omega| < {omega_tol} rad/s within {timeout_s} s"
    )


def run_hold(
    mode: Mode,
    preset: Preset,
    theta_target: float = 0.0,
    kp: float = HOLD_KP,
    omega_tol: float = 1e-6,
    timeout_s: float = 40.0,
    record_hz: float | None = None,
) -> tuple[Trace, PlantState, SimClock]:
    """Hold a position under gravity until the plant is numerically at rest.

    Used for the steady-state torque identities.
    """
    p = preset.params
    hub = dynamics_hub(preset)
    rec = TraceRecorder(p.dt, _stride_for(p.dt, record_hz))
    state = initial_state(mode, theta_target)
    state, clock = _hold_loop(
        state, SimClock(), preset, hub, rec, theta_target, kp,
        omega_tol, window_s=0.05, timeout_s=timeout_s,
    )
    return rec.trace(), state, clock


# ---------------------------------------------------------------------------
# Static stiffness protocol (locked output)
# ---------------------------------------------------------------------------

def run_static_stiffness(
    mode: Mode,
    preset: Preset,
    ramp_rate: float = 0.2,
    cycles: int = 3,
    settle_omega: float = 1e-4,
    settle_window_s: float = 0.05,
    settle_timeout_s: float = 60.0,
    record_hz: float | None = 2000.0,
) -> tuple[Trace, StiffnessReport]:
    """Quasi-static torque cycles against the locked output.

    The output shaft is frozen by the fixture (gravity excluded: the fixture
    carries the load), so the motor works against K_s in series mode and
    against K_s + K_struct through the rigid path in parallel mode. The
    torque command ramps linearly between the cycle vertices 0, +1, 0, -1, 0
    Nm and dwells at each vertex until |omega_m| < settle_omega; the fit and
    loop area use the continuously sampled trace.
    """
    if mode not in (Mode.SEA, Mode.PEA):
        raise ValueError("stiffness protocol characterizes an engaged mode")
    p = preset.params
    K_rig = p.K_s if mode is Mode.SEA else p.K_s + p.K_struct
    tau_c = p.tau_c_sea if mode is Mode.SEA else p.tau_c_pea
    code = MODE_CODE[mode]
    dt = p.dt
    half = 0.5 * dt
    sixth = dt / 6.0
    rec = TraceRecorder(dt, _stride_for(dt, record_hz))
    window_steps = max(1, round(settle_window_s / dt))
    timeout_steps = round(settle_timeout_s / dt)

    J, b, w_eps = p.J_m, p.b_m, p.omega_eps
    tanh = math.tanh

    theta = 0.0
    omega = 0.0
    t = 0.0
    step_i = 0

    def rig_step(tau: float) -> None:
        nonlocal theta, omega, t, step_i
        rec.record_raw(t, code, theta, omega, 0.0, 0.0, tau, tau,
                       K_rig * theta, tau / p.K_t)

        def f(q: float, w: float) -> tuple[float, float]:
            return w, (tau - K_rig * q - b * w - tau_c * tanh(w / w_eps)) / J

        k1 = f(theta, omega)
        k2 = f(theta + half * k1[0], omega + half * k1[1])
        k3 = f(theta + half * k2[0], omega + half * k2[1])
        k4 = f(theta + dt * k3[0], omega + dt * k3[1])
        theta += sixth * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0])
        omega += sixth * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1])
        if not (math.isfinite(theta) and math.isfinite(omega)):
            raise SimulationError(f"stiffness rig blew up at t={t:.6f} s")
        step_i += 1
        t = step_i * dt

    def ramp_to(tau_from: float, tau_to: float) -> None:
        n = max(1, round(abs(tau_to - tau_from) / ramp_rate / dt))
        for k in range(n):
            rig_step(tau_from + (tau_to - tau_from) * (k + 1) / n)

    def dwell(tau: float) -> None:
        quiet = 0
        for _ in range(timeout_steps):
            rig_step(tau)
            quiet = quiet + 1 if abs(omega) < settle_omega else 0
            if quiet >= window_steps:
                return
        raise SimulationError(
            f"rig did not settle below |omega| < {settle_omega} rad/s at tau={tau} Nm"
        )

    cycle_bounds = []
    tau_now = 0.0
    dwell(0.0)
    for _ in range(cycles):
        start = rec.n_recorded
        for vertex in (1.0, 0.0, -1.0, 0.0):
            ramp_to(tau_now, vertex)
            tau_now = vertex
            dwell(tau_now)
        cycle_bounds.append((start, rec.n_recorded))

    trace = rec.trace()
    slopes, areas, samples = [], [], []
    for a, bnd in cycle_bounds:
        th = trace.theta_m[a:bnd]
        ta = trace.tau_applied[a:bnd]
        slope, _, _ = linear_fit(th, ta)
        slopes.append(slope)
        areas.append(hysteresis_area(th, ta))
        keep = max(1, len(th) // 400)
        samples.append([(float(x), float(y)) for x, y in zip(th[::keep], ta[::keep])])
    k_fit = float(np.mean(slopes))
    k_sd = float(np.std(slopes))
    report = StiffnessReport(
        mode=mode.value, K_fit=k_fit, K_stderr=k_sd,
        loop_area=float(np.mean(areas)),
        k_per_cycle=slopes, area_per_cycle=areas, samples_per_cycle=samples,
    )
    return trace, report


# ---------------------------------------------------------------------------
# Dynamic switching protocol
# ---------------------------------------------------------------------------

def run_dynamic_switching(
    preset: Preset,
    duration: float = 30.0,
    switch_period: float = 5.0,
    kp: float = TRACK_KP,
    center: float = HANG_CENTER_RAD,
    amplitude_deg: float = 20.0,
    freq_hz: float = 1.0,
    record_hz: float | None = None,
) -> tuple[Trace, TrackingReport]:
    """Sinusoidal tracking with a topology switch requested every period.

    The motion is centered on the hanging position so the transmitted torque
    crosses below the disengagement gate once per stroke; rejected requests
    are retried every following step until accepted.
    """
    p, load = preset.params, preset.load
    hub = dynamics_hub(preset)
    dt = p.dt
    rec = TraceRecorder(dt, _stride_for(dt, record_hz))
    n_steps = round(duration / dt)
    n_switches = int(duration // switch_period)
    request_steps = [round(k * switch_period / dt) for k in range(n_switches)]
    amp = math.radians(amplitude_deg)
    two_pi_f = 2.0 * math.pi * freq_hz

    state: PlantState = initial_state(Mode.SEA, center)
    clock = SimClock()
    records: list[SwitchRecord] = []
    retried = 0
    pending_target: Mode | None = None
    pending_from: Mode | None = None
    request_t = 0.0
    request_torque = 0.0
    next_req = 0

    # engagement bookkeeping for segment stats: (mode_code, start_index)
    seg_marks: list[tuple[int, int]] = [(MODE_CODE[Mode.SEA], 0)]

    for k in range(n_steps):
        t = clock.t
        target = center + amp * math.sin(two_pi_f * t)
        tau_cmd = p_position(target, _motor_angle(state), kp)
        tau_applied = clamp_torque(tau_cmd, p)

        if next_req < n_switches and k >= request_steps[next_req] and pending_target is None:
            current = mode_of(state)
            if current is not Mode.TRANS:
                want = Mode.PEA if current is Mode.SEA else Mode.SEA
                tau_ext = gravity_torque(
                    state.theta if type(state) is PeaState else state.theta_o, load
                )
                decision = request_switch(
                    SwitchRequest(want, t), state, tau_applied, tau_ext, p, hub
                )
                if decision.accepted:
                    state = decision.transition
                    pending_target, pending_from = want, current
                    request_t, request_torque = t, decision.transmitted
                    next_req += 1
                else:
                    retried += 1  # retry on every following step until the gate opens

        rec.record(t, state, tau_cmd, tau_applied, hub, p.K_t)
        was_trans = type(state) is TransitionState
        state, clock = plant.step(state, clock, tau_cmd, p, hub, load)
        if was_trans:
            advanced = advance_selector(state, dt, p)
            if type(advanced) is not TransitionState:
                records.append(SwitchRecord(
                    request_t, clock.t, pending_from, pending_target,
                    request_torque, COMPLETED,
                ))
                seg_marks.append((MODE_CODE[pending_target], rec.n_recorded))
                pending_target = pending_from = None
            state = advanced

    trace = rec.trace()
    segments: list[SegmentStats] = []
    target_all = center + amp * np.sin(two_pi_f * trace.t)
    err_all = target_all - trace.theta_m
    pooled: dict[str, dict[str, list]] = {
        "SEA": {"err": [], "iq": []}, "PEA": {"err": [], "iq": []}
    }
    for idx, (code, start) in enumerate(seg_marks):
        end = seg_marks[idx + 1][1] if idx + 1 < len(seg_marks) else len(trace)
        sel = slice(start, end)
        engaged = trace.mode[sel] == code  # drop the transition tail inside the span
        if not np.any(engaged):
            continue
        e = err_all[sel][engaged]
        iq = trace.i_q[sel][engaged]
        name = MODE_NAMES[code]
        segments.append(SegmentStats(
            mode=name,
            t_start=float(trace.t[sel][engaged][0]),
            t_end=float(trace.t[sel][engaged][-1]),
            rms_error_rad=rms(e),
            rms_iq=rms(iq),
            peak_iq=float(np.max(np.abs(iq))),
        ))
        pooled[name]["err"].append(e)
        pooled[name]["iq"].append(iq)

    per_mode = {}
    for name, cols in pooled.items():
        if cols["err"]:
            e = np.concatenate(cols["err"])
            iq = np.concatenate(cols["iq"])
            per_mode[name] = {
                "rms_error_rad": rms(e),
                "rms_iq_a": rms(iq),
                "peak_iq_a": float(np.max(np.abs(iq))),
            }
    report = TrackingReport(segments, per_mode, records, retried)
    return trace, report


# ---------------------------------------------------------------------------
# Disturbance rejection protocol
# ---------------------------------------------------------------------------

def run_disturbance(
    mode: Mode,
    preset: Preset,
    n_impacts: int | None = None,
    impact_torque: float = IMPACT_TORQUE_NM,
    impact_duration: float = IMPACT_DURATION_S,
    kp: float = DISTURB_KP,
    hold_target: float = 0.0,
    band_deg: float = SETTLE_BAND_DEG,
    post_window_s: float = 8.0,
    measure: str = "output",
    record_hz: float | None = None,
) -> tuple[Trace, DisturbanceReport]:
    """Impulse response under position hold at the horizontal.

    A rectangular torque pulse strikes the output side; peak deflection and
    settling into the ±band are measured on the impacted (output-side) angle
    relative to its pre-impact rest value. In parallel mode the motor and
    output angles are one coordinate, so the choice of side is moot there.
    """
    if mode not in (Mode.SEA, Mode.PEA):
        raise ValueError("disturbance protocol characterizes an engaged mode")
    if n_impacts is None:
        n_impacts = 6 if mode is Mode.SEA else 5
    if n_impacts < 1:
        raise ValueError("n_impacts must be >= 1")
    if measure not in ("output", "motor"):
        raise ValueError("measure must be 'output' or 'motor'")

    p, load = preset.params, preset.load
    hub = dynamics_hub(preset)
    dt = p.dt
    rec = TraceRecorder(dt, _stride_for(dt, record_hz))
    state: PlantState = initial_state(mode, hold_target)
    clock = SimClock()

    # settle into the pre-impact hold
    state, clock = _hold_loop(
        state, clock, preset, hub, rec, hold_target, kp,
        omega_tol=1e-4, window_s=0.25, timeout_s=40.0, min_hold_s=1.0,
    )

    post_steps = round(post_window_s / dt)
    peaks, settles, crossings, freqs = [], [], [], []

    for _ in range(n_impacts):
        reference = _measured_angle(state, measure)
        seg_t = array("d")
        seg_y = array("d")
        pulse_end = clock.t + impact_duration
        for k in range(post_steps):
            t = clock.t
            tau_cmd = p_position(hold_target, _motor_angle(state), kp)
            tau_applied = clamp_torque(tau_cmd, p)
            extra = impact_torque if t < pulse_end else 0.0
            rec.record(t, state, tau_cmd, tau_applied, hub, p.K_t)
            seg_t.append(t)
            seg_y.append(_measured_angle(state, measure))
            state, clock = plant.step(state, clock, tau_cmd, p, hub, load, extra)

        seg_t_np = np.asarray(seg_t)
        err = np.asarray(seg_y) - reference
        peaks.append(peak_deflection(np.asarray(seg_y), reference))
        settles.append(settling_time(seg_t_np, np.asarray(seg_y), reference, band_deg))
        half_band = math.radians(band_deg) / 2.0
        crossings.append(len(crossing_times(seg_t_np, err, half_band)))
        freqs.append(dominant_frequency(seg_t_np, err, half_band))

        # re-settle before the next strike
        state, clock = _hold_loop(
            state, clock, preset, hub, rec, hold_target, kp,
            omega_tol=1e-4, window_s=0.25, timeout_s=40.0,
        )

    settled = [s for s in settles if s is not None]
    report = DisturbanceReport(
        mode=mode.value,
        impact_torque_nm=impact_torque,
        impact_duration_s=impact_duration,
        peaks_deg=peaks,
        settling_ms=settles,
        zero_crossings=crossings,
        dominant_freq_hz=freqs,
        mean_peak_deg=float(np.mean(peaks)),
        mean_settling_ms=float(np.mean(settled)) if len(settled) == len(settles) else None,
    )
    return rec.trace(), report


# ---------------------------------------------------------------------------
# Switching endurance protocol
# ---------------------------------------------------------------------------

def run_switch_cycle(
    preset: Preset,
    n: int = 324,
    kp: float = HOLD_KP,
    hold: float = HANG_CENTER_RAD,
    retry_window_s: float = 0.25,
    dwell_s: float = 0.12,
    record_hz: float | None = 1000.0,
) -> tuple[Trace, CycleReport]:
    """n alternating topology switches under gravity with a position hold.

    The arm hangs at the gravity-neutral position so the controller keeps the
    transmitted torque near zero. Every selector invariant (gate soundness,
    latency, momentum conservation, unloaded engagement, mode alternation) is
    asserted after each switch; a violation aborts with diagnostics.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    p, load = preset.params, preset.load
    hub = dynamics_hub(preset)
    dt = p.dt
    rec = TraceRecorder(dt, _stride_for(dt, record_hz))
    state: PlantState = initial_state(Mode.SEA, hold)
    clock = SimClock()

    state, clock = _hold_loop(
        state, clock, preset, hub, rec, hold, kp,
        omega_tol=1e-3, window_s=0.05, timeout_s=20.0, min_hold_s=0.5,
    )

    records: list[SwitchRecord] = []
    retried = 0
    max_ke_loss = 0.0
    max_latency_err = 0.0
    retry_steps = max(1, round(retry_window_s / dt))
    dwell_steps = round(dwell_s / dt)
    latency_steps = round(p.t_switch / dt)

    def controller_step(extra_state: PlantState) -> tuple[float, float]:
        tau_cmd = p_position(hold, _motor_angle(extra_state), kp)
        return tau_cmd, clamp_torque(tau_cmd, p)

    for i in range(n):
        current = mode_of(state)
        want = Mode.PEA if current is Mode.SEA else Mode.SEA

        decision = None
        request_t = clock.t
        request_step = clock.step_index
        for attempt in range(retry_steps):
            tau_cmd, tau_applied = controller_step(state)
            tau_ext = gravity_torque(
                state.theta if type(state) is PeaState else state.theta_o, load
            )
            decision = request_switch(
                SwitchRequest(want, clock.t), state, tau_applied, tau_ext, p, hub
            )
            if decision.accepted:
                request_t = clock.t
                request_step = clock.step_index
                state = decision.transition
                rec.record(clock.t, state, tau_cmd, tau_applied, hub, p.K_t)
                state, clock = plant.step(state, clock, tau_cmd, p, hub, load)
                break
            retried += 1 if attempt > 0 else 0
            rec.record(clock.t, state, tau_cmd, tau_applied, hub, p.K_t)
            state, clock = plant.step(state, clock, tau_cmd, p, hub, load)

        if decision is None or not decision.accepted:
            records.append(SwitchRecord(
                request_t, None, current, want, decision.transmitted, REJECTED,
            ))
            continue

        # run out the selector travel
        pre_engage = None
        while type(state) is TransitionState:
            pre_engage = state
            advanced = advance_selector(state, dt, p)
            if type(advanced) is not TransitionState:
                state = advanced
                break
            state = advanced
            tau_cmd, tau_applied = controller_step(state)
            rec.record(clock.t, state, tau_cmd, tau_applied, hub, p.K_t)
            state, clock = plant.step(state, clock, tau_cmd, p, hub, load)

        engage_t = clock.t
        records.append(SwitchRecord(request_t, engage_t, current, want,
                                    decision.transmitted, COMPLETED))

        # --- invariants ---
        if abs(decision.transmitted) >= p.tau_disengage:
            raise InvariantViolation(
                f"cycle {i}: gate unsound, accepted at {decision.transmitted:.4f} Nm"
            )
        latency_err = abs((clock.step_index - request_step) * dt - latency_steps * dt)
        steps_taken = clock.step_index - request_step
        if steps_taken != latency_steps:
            raise InvariantViolation(
                f"cycle {i}: latency {steps_taken} steps != t_switch ({latency_steps} steps)"
            )
        max_latency_err = max(max_latency_err, latency_err)
        if spring_torque(state, hub) != 0.0:
            raise InvariantViolation(
                f"cycle {i}: spring not unloaded after engagement "
                f"(tau={spring_torque(state, hub)!r} Nm)"
            )
        if want is Mode.PEA:
            merged = (p.J_m * pre_engage.omega_m + p.J_o * pre_engage.omega_o) / (p.J_m + p.J_o)
            if state.omega != merged:
                raise InvariantViolation(
                    f"cycle {i}: momentum not conserved ({state.omega!r} != {merged!r})"
                )
            max_ke_loss = max(max_ke_loss, engagement_energy_loss(pre_engage, p))
        if len(records) >= 2 and records[-2].outcome == COMPLETED:
            if records[-1].from_mode is not records[-2].to_mode:
                raise InvariantViolation(f"cycle {i}: switch records do not alternate")

        for _ in range(dwell_steps):
            tau_cmd, tau_applied = controller_step(state)
            rec.record(clock.t, state, tau_cmd, tau_applied, hub, p.K_t)
            state, clock = plant.step(state, clock, tau_cmd, p, hub, load)

    from .selector import cycle_counter

    tally = cycle_counter(records)
    report = CycleReport(
        completed=tally["completed"],
        rejected=tally["rejected"],
        retried_attempts=retried,
        max_ke_loss_j=max_ke_loss,
        max_latency_error_s=max_latency_err,
        records=records,
    )
    return rec.trace(), report
