"""Physical and protocol parameters, named presets, validation, JSON config I/O.

All quantities are SI (rad, Nm, kg·m², s) except spring-hub geometry, which
keeps the datasheet units (N/mm, mm).
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

SCHEMA_VERSION = 1

# Names that must resolve via load_named_preset(); one JSON file each under
# tsea/presets/.
NAMED_PRESETS = ("paper-linear-window", "paper-full-range", "calibrated")


@dataclass(frozen=True, slots=True)
class HubGeometry:
    """Radial spring hub: four extension springs between two plates."""

    k: float = 12.701          # spring rate per spring [N/mm]
    l0: float = 12.8           # free length [mm]
    r1: float = 25.32          # inner hook radius [mm]
    r2: float = 37.87          # outer hook radius [mm]
    preload_ext: float = 1.75  # assembly extension beyond free length [mm]


@dataclass(frozen=True, slots=True)
class ActuatorParams:
    J_m: float = 5e-4            # motor-side inertia [kg·m²]
    J_o: float = 0.062192        # output-side inertia [kg·m²] (point-mass arm)
    K_s: float = 5.57            # hub torsional stiffness used by the dynamics [Nm/rad]
    K_struct: float = 2.97       # structural stiffness, locked-output rigid-path test [Nm/rad]
    b_m: float = 0.20            # motor-side viscous damping [Nm·s/rad]
    b_o: float = 0.145           # output-side viscous damping [Nm·s/rad]
    tau_c_sea: float = 0.109     # Coulomb friction magnitude, spring path engaged [Nm]
    tau_c_pea: float = 0.058     # Coulomb friction magnitude, rigid path engaged [Nm]
    tau_c_out: float = 0.0       # output-bearing Coulomb friction, both modes [Nm]
    K_t: float = 0.083           # torque constant [Nm/A]
    tau_max: float = 3.0         # motor torque saturation [Nm]
    tau_disengage: float = 1.0   # max transmitted torque permitting disengagement [Nm]
    t_switch: float = 0.03       # selector travel latency [s]
    dt: float = 1.25e-4          # fixed integration step [s] (8 kHz loop rate)
    # Friction regularization scale. Must keep tau_c/omega_eps*dt/J_m under
    # the explicit-RK4 stability bound (~2.78) or the stick phase chatters
    # instead of settling.
    omega_eps: float = 0.02      # [rad/s]
    # Dog-tooth counts, documentation only: engagement is modeled at arbitrary
    # relative angles (chamfered teeth), so the pitch never enters the dynamics.
    teeth_inner: int = 16
    teeth_outer: int = 32


@dataclass(frozen=True, slots=True)
class LoadModel:
    """Point mass on a rigid arm; theta = 0 means the arm is horizontal."""

    mass: float = 0.920                 # [kg]
    radius: float = 0.26                # [m]
    g: float = 9.81                     # [m/s²]
    theta_zero_horizontal: bool = True  # angle convention flag; only True supported


@dataclass(frozen=True, slots=True)
class Preset:
    name: str
    params: ActuatorParams = field(default_factory=ActuatorParams)
    hub: HubGeometry = field(default_factory=HubGeometry)
    load: LoadModel = field(default_factory=LoadModel)


def default_output_inertia(load: LoadModel) -> float:
    """Point-mass arm inertia mass*radius² [kg·m²]."""
    return load.mass * load.radius * load.radius


def validate(preset: Preset) -> list[str]:
    """Return every violated invariant as a message; empty list means ok."""
    errors: list[str] = []
    h, p, load = preset.hub, preset.params, preset.load

    def positive(name: str, value: float) -> None:
        if not (value > 0.0) or not math.isfinite(value):
            errors.append(f"{name} must be positive (got {value})")

    def non_negative(name: str, value: float) -> None:
        if value < 0.0 or not math.isfinite(value):
            errors.append(f"{name} must be non-negative (got {value})")

    positive("hub.k", h.k)
    positive("hub.l0", h.l0)
    positive("hub.r1", h.r1)
    if not (h.r1 < h.r2):
        errors.append(f"r1 < r2 required (got r1={h.r1}, r2={h.r2})")
    non_negative("hub.preload_ext", h.preload_ext)

    positive("J_m", p.J_m)
    positive("J_o", p.J_o)
    positive("K_s", p.K_s)
    positive("K_struct", p.K_struct)
    positive("K_t", p.K_t)
    positive("dt", p.dt)
    non_negative("b_m", p.b_m)
    non_negative("b_o", p.b_o)
    non_negative("tau_c_sea", p.tau_c_sea)
    non_negative("tau_c_pea", p.tau_c_pea)
    non_negative("tau_c_out", p.tau_c_out)
    positive("tau_max", p.tau_max)
    positive("tau_disengage", p.tau_disengage)
    non_negative("t_switch", p.t_switch)
    positive("omega_eps", p.omega_eps)

    non_negative("load.mass", load.mass)
    non_negative("load.radius", load.radius)
    positive("load.g", load.g)
    if not load.theta_zero_horizontal:
        errors.append("theta_zero_horizontal must be True (only the horizontal-zero convention is modeled)")

    return errors


def validate_or_raise(preset: Preset) -> Preset:
    errors = validate(preset)
    if errors:
        raise ValueError(f"invalid preset {preset.name!r}: " + "; ".join(errors))
    return preset


# ---------------------------------------------------------------------------
# JSON config format
# ---------------------------------------------------------------------------

def preset_to_dict(preset: Preset) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "name": preset.name,
        "params": dataclasses.asdict(preset.params),
        "hub": dataclasses.asdict(preset.hub),
        "load": dataclasses.asdict(preset.load),
    }


def preset_from_dict(data: dict) -> Preset:
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported preset schema_version {version!r}")
    try:
        return Preset(
            name=data["name"],
            params=ActuatorParams(**data["params"]),
            hub=HubGeometry(**data["hub"]),
            load=LoadModel(**data["load"]),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed preset config: {exc}") from exc


def save_preset(preset: Preset, path: str | Path) -> None:
    Path(path).write_text(json.dumps(preset_to_dict(preset), indent=2) + "\n")


def load_preset(path: str | Path) -> Preset:
    data = json.loads(Path(path).read_text())
    return validate_or_raise(preset_from_dict(data))


def load_named_preset(name: str) -> Preset:
    if name not in NAMED_PRESETS:
        raise ValueError(f"unknown preset {name!r}; known: {', '.join(NAMED_PRESETS)}")
    text = resources.files("tsea").joinpath(f"presets/{name}.json").read_text()
    return validate_or_raise(preset_from_dict(json.loads(text)))


def resolve_preset(name_or_path: str) -> Preset:
    """Accept either a named preset or a path to a preset JSON file."""
    if name_or_path in NAMED_PRESETS:
        return load_named_preset(name_or_path)
    path = Path(name_or_path)
    if path.exists():
        return load_preset(path)
    raise ValueError(f"preset {name_or_path!r} is neither a known name nor an existing file")
