"""Mode-dependent rigid-body dynamics and fixed-step RK4 integration.

Three engagement states share one integrator entry point:

* series (SEA): two inertias coupled by the hub spring; spring deflection is
  theta_m - theta_o - beta_offset, with beta_offset captured at engagement so
  the spring starts unloaded.
* parallel (PEA): motor and output rigidly coupled into one body at angle
  theta; the hub spring reacts against the housing from the anchor captured
  at engagement.
* transition: freewheel while the selector travels; no coupling torque.

Friction model: the per-mode Coulomb magnitude (tau_c_sea / tau_c_pea) acts
on the motor-side body, where the hub plates and dog interfaces live; the
output bearing gets its own (normally zero) magnitude tau_c_out. All Coulomb
terms are tanh-regularized.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .params import ActuatorParams, LoadModel
from .spring_hub import HubModel


class Mode(enum.Enum):
    SEA = "SEA"
    PEA = "PEA"
    TRANS = "TRANS"


class SimulationError(RuntimeError):
    """Simulation produced a non-finite state (blow-up)."""


@dataclass(frozen=True, slots=True)
class SeaState:
    theta_m: float       # motor angle [rad]
    omega_m: float       # motor velocity [rad/s]
    theta_o: float       # output angle [rad]
    omega_o: float       # output velocity [rad/s]
    beta_offset: float   # relative angle at which the spring is unloaded [rad]


@dataclass(frozen=True, slots=True)
class PeaState:
    theta: float         # common motor/output angle [rad]
    omega: float         # common velocity [rad/s]
    theta_anchor: float  # output angle at which the grounded spring is unloaded [rad]


@dataclass(frozen=True, slots=True)
class TransitionState:
    theta_m: float
    omega_m: float
    theta_o: float
    omega_o: float
    target_mode: Mode
    t_remaining: float   # selector travel time left [s]


PlantState = SeaState | PeaState | TransitionState


@dataclass(frozen=True, slots=True)
class SimClock:
    t: float = 0.0
    step_index: int = 0

    def advanced(self, dt: float) -> "SimClock":
        i = self.step_index + 1
        return SimClock(i * dt, i)  # product, not accumulation: t stays exact


def mode_of(state: PlantState) -> Mode:
    if type(state) is SeaState:
        return Mode.SEA
    if type(state) is PeaState:
        return Mode.PEA
    return Mode.TRANS


def gravity_torque(theta: float, load: LoadModel) -> float:
    """Arm gravity torque mass*g*radius*cos(theta) [Nm]; theta = 0 horizontal."""
    return load.mass * load.g * load.radius * math.cos(theta)


def coulomb_friction(omega: float, tau_c: float, omega_eps: float) -> float:
    """Regularized Coulomb torque tau_c*tanh(omega/omega_eps) [Nm]."""
    return tau_c * math.tanh(omega / omega_eps)


def clamp_torque(tau: float, p: ActuatorParams) -> float:
    if tau > p.tau_max:
        return p.tau_max
    if tau < -p.tau_max:
        return -p.tau_max
    return tau


def _check_finite(tau_m: float, tau_ext: float) -> None:
    if not (math.isfinite(tau_m) and math.isfinite(tau_ext)):
        raise ValueError(f"non-finite input torque: tau_m={tau_m}, tau_ext={tau_ext}")


def sea_accelerations(
    s: SeaState, tau_m: float, tau_ext: float, p: ActuatorParams, hub: HubModel
) -> tuple[float, float]:
    """Motor and output angular accelerations in the series topology [rad/s²]."""
    _check_finite(tau_m, tau_ext)
    tau_s = hub.torque(s.theta_m - s.theta_o - s.beta_offset)
    alpha_m = (
        tau_m - tau_s - p.b_m * s.omega_m
        - coulomb_friction(s.omega_m, p.tau_c_sea, p.omega_eps)
    ) / p.J_m
    alpha_o = (
        tau_s - tau_ext - p.b_o * s.omega_o
        - coulomb_friction(s.omega_o, p.tau_c_out, p.omega_eps)
    ) / p.J_o
    return alpha_m, alpha_o


def pea_acceleration(
    s: PeaState, tau_m: float, tau_ext: float, p: ActuatorParams, hub: HubModel
) -> float:
    """Angular acceleration of the rigidly coupled body in the parallel topology."""
    _check_finite(tau_m, tau_ext)
    return (
        tau_m - hub.torque(s.theta - s.theta_anchor) - tau_ext
        - (p.b_m + p.b_o) * s.omega
        - coulomb_friction(s.omega, p.tau_c_pea + p.tau_c_out, p.omega_eps)
    ) / (p.J_m + p.J_o)


def freewheel_accelerations(
    s: TransitionState, tau_m: float, tau_ext: float, p: ActuatorParams
) -> tuple[float, float]:
    """Decoupled accelerations while the selector travels."""
    _check_finite(tau_m, tau_ext)
    alpha_m = (tau_m - p.b_m * s.omega_m) / p.J_m
    alpha_o = (-tau_ext - p.b_o * s.omega_o) / p.J_o
    return alpha_m, alpha_o


def spring_torque(state: PlantState, hub: HubModel) -> float:
    """Torque currently carried by the hub spring [Nm]; zero while freewheeling."""
    if type(state) is SeaState:
        return hub.torque(state.theta_m - state.theta_o - state.beta_offset)
    if type(state) is PeaState:
        return hub.torque(state.theta - state.theta_anchor)
    return 0.0


def step(
    state: PlantState,
    clock: SimClock,
    tau_m: float,
    p: ActuatorParams,
    hub: HubModel,
    load: LoadModel,
    tau_out_extra: float = 0.0,
) -> tuple[PlantState, SimClock]:
    """Advance one classical RK4 step of length p.dt.

    tau_m is clamped to ±tau_max before use and held over the step. The
    external output torque (gravity plus tau_out_extra, e.g. an impact pulse)
    is re-evaluated inside every RK4 stage. Raises SimulationError if the new
    state is not finite.
    """
    dt = p.dt
    half = 0.5 * dt
    tau = clamp_torque(tau_m, p)
    mgr = load.mass * load.g * load.radius
    cls = type(state)

    if cls is SeaState:
        J_m, J_o = p.J_m, p.J_o
        b_m, b_o = p.b_m, p.b_o
        tc_m, tc_o, w_eps = p.tau_c_sea, p.tau_c_out, p.omega_eps
        torque = hub.torque
        off = state.beta_offset
        tanh = math.tanh
        cos = math.cos

        def f(qm: float, wm: float, qo: float, wo: float):
            tau_s = torque(qm - qo - off)
            am = (tau - tau_s - b_m * wm - tc_m * tanh(wm / w_eps)) / J_m
            ao = (
                tau_s - (mgr * cos(qo) + tau_out_extra) - b_o * wo
                - tc_o * tanh(wo / w_eps)
            ) / J_o
            return wm, am, wo, ao

        qm, wm, qo, wo = state.theta_m, state.omega_m, state.theta_o, state.omega_o
        k1 = f(qm, wm, qo, wo)
        k2 = f(qm + half * k1[0], wm + half * k1[1], qo + half * k1[2], wo + half * k1[3])
        k3 = f(qm + half * k2[0], wm + half * k2[1], qo + half * k2[2], wo + half * k2[3])
        k4 = f(qm + dt * k3[0], wm + dt * k3[1], qo + dt * k3[2], wo + dt * k3[3])
        sixth = dt / 6.0
        new = SeaState(
            qm + sixth * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0]),
            wm + sixth * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1]),
            qo + sixth * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2]),
            wo + sixth * (k1[3] + 2.0 * (k2[3] + k3[3]) + k4[3]),
            off,
        )
        finite = (
            math.isfinite(new.theta_m) and math.isfinite(new.omega_m)
            and math.isfinite(new.theta_o) and math.isfinite(new.omega_o)
        )

    elif cls is PeaState:
        J = p.J_m + p.J_o
        b = p.b_m + p.b_o
        tc, w_eps = p.tau_c_pea + p.tau_c_out, p.omega_eps
        torque = hub.torque
        anchor = state.theta_anchor
        tanh = math.tanh
        cos = math.cos

        def g(q: float, w: float):
            a = (
                tau - torque(q - anchor) - (mgr * cos(q) + tau_out_extra)
                - b * w - tc * tanh(w / w_eps)
            ) / J
            return w, a

        q, w = state.theta, state.omega
        k1 = g(q, w)
        k2 = g(q + half * k1[0], w + half * k1[1])
        k3 = g(q + half * k2[0], w + half * k2[1])
        k4 = g(q + dt * k3[0], w + dt * k3[1])
        sixth = dt / 6.0
        new = PeaState(
            q + sixth * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0]),
            w + sixth * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1]),
            anchor,
        )
        finite = math.isfinite(new.theta) and math.isfinite(new.omega)

    else:
        J_m, J_o = p.J_m, p.J_o
        b_m, b_o = p.b_m, p.b_o
        cos = math.cos

        def h(qm: float, wm: float, qo: float, wo: float):
            am = (tau - b_m * wm) / J_m
            ao = (-(mgr * cos(qo) + tau_out_extra) - b_o * wo) / J_o
            return wm, am, wo, ao

        qm, wm, qo, wo = state.theta_m, state.omega_m, state.theta_o, state.omega_o
        k1 = h(qm, wm, qo, wo)
        k2 = h(qm + half * k1[0], wm + half * k1[1], qo + half * k1[2], wo + half * k1[3])
        k3 = h(qm + half * k2[0], wm + half * k2[1], qo + half * k2[2], wo + half * k2[3])
        k4 = h(qm + dt * k3[0], wm + dt * k3[1], qo + dt * k3[2], wo + dt * k3[3])
        sixth = dt / 6.0
        new = TransitionState(
            qm + sixth * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0]),
            wm + sixth * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1]),
            qo + sixth * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2]),
            wo + sixth * (k1[3] + 2.0 * (k2[3] + k3[3]) + k4[3]),
            state.target_mode,
            state.t_remaining,
        )
        finite = (
            math.isfinite(new.theta_m) and math.isfinite(new.omega_m)
            and math.isfinite(new.theta_o) and math.isfinite(new.omega_o)
        )

    if not finite:
        raise SimulationError(
            f"non-finite state after step {clock.step_index} (t={clock.t:.6f} s)"
        )
    return new, clock.advanced(dt)
