"""Radial spring hub torque model, nonlinear and linearized.

Four extension springs at 90° intervals connect an inner plate (hook radius
r1) to an outer plate (hook radius r2). A relative plate rotation beta
stretches all four springs identically; the tangential components of the
spring forces produce the restoring torque.

The raw hook-to-hook chord at beta = 0 is r2 - r1, which is shorter than the
free length for the default geometry. The assembled device is preloaded, so
the model adds a constant assembly offset to the working spring length such
that the length at beta = 0 equals the installed length l_p = l0 +
preload_ext. With that offset the small-angle slope of the nonlinear torque
equals linearized_stiffness() exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .params import HubGeometry

NONLINEAR = "nonlinear"
LINEARIZED = "linearized"

_MM_NM = 1e-3  # N·mm -> Nm


def installed_length(geometry: HubGeometry) -> float:
    """Installed spring length l_p = l0 + preload_ext [mm]."""
    return geometry.l0 + geometry.preload_ext


def preload_offset(geometry: HubGeometry) -> float:
    """Constant assembly offset l_p - l(0) added to the raw chord [mm]."""
    return installed_length(geometry) - spring_length(geometry, 0.0)


def spring_length(geometry: HubGeometry, beta: float) -> float:
    """Hook-to-hook chord sqrt(r1² + r2² - 2 r1 r2 cos beta) [mm]. Even in beta."""
    r1, r2 = geometry.r1, geometry.r2
    return math.sqrt(r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * math.cos(beta))


def effective_length(geometry: HubGeometry, beta: float) -> float:
    """Working spring length: chord plus the constant assembly offset [mm]."""
    return spring_length(geometry, beta) + preload_offset(geometry)


def linearized_stiffness(geometry: HubGeometry) -> float:
    """Small-deflection hub stiffness 4 k r1 r2 (1 - l0/l_p) [Nm/rad]."""
    l_p = installed_length(geometry)
    if l_p <= geometry.l0:
        raise ValueError(
            f"non-positive stiffness: installed length {l_p} mm <= free length "
            f"{geometry.l0} mm (spring slack at equilibrium)"
        )
    return 4.0 * geometry.k * geometry.r1 * geometry.r2 * (1.0 - geometry.l0 / l_p) * _MM_NM


def preload_force(geometry: HubGeometry) -> float:
    """Assembly preload tension per spring k * preload_ext [N]."""
    return geometry.k * geometry.preload_ext


def hub_torque(geometry: HubGeometry, beta: float) -> float:
    """Nonlinear restoring torque of the four-spring hub [Nm]. Odd in beta."""
    l_eff = effective_length(geometry, beta)
    return (
        4.0 * geometry.k * geometry.r1 * geometry.r2
        * (1.0 - geometry.l0 / l_eff) * math.sin(beta) * _MM_NM
    )


@dataclass(frozen=True, slots=True)
class HubModel:
    """Hub torque law handed to the dynamics.

    mode LINEARIZED gives torque(beta) = k_linear * beta exactly; k_linear
    defaults to the geometric linearized stiffness but is normally overridden
    with the measured hub stiffness K_s, which absorbs structural compliance
    the geometry does not capture. Mode NONLINEAR evaluates the full
    four-spring law and ignores k_linear.
    """

    geometry: HubGeometry
    mode: str = LINEARIZED
    k_linear: float | None = None

    def __post_init__(self) -> None:
        if self.mode not in (NONLINEAR, LINEARIZED):
            raise ValueError(f"unknown hub mode {self.mode!r}")
        if self.mode == LINEARIZED and self.k_linear is None:
            object.__setattr__(self, "k_linear", linearized_stiffness(self.geometry))

    @property
    def preload_offset(self) -> float:
        return preload_offset(self.geometry)

    def torque(self, beta: float) -> float:
        if self.mode == LINEARIZED:
            return self.k_linear * beta
        return hub_torque(self.geometry, beta)


def linear_hub(stiffness: float, geometry: HubGeometry | None = None) -> HubModel:
    """Linear spring law with an explicit stiffness [Nm/rad]."""
    return HubModel(geometry if geometry is not None else HubGeometry(),
                    mode=LINEARIZED, k_linear=stiffness)
