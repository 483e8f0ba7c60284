"""Hull resistance and thrust sizing for small displacement craft.

The resistance model splits total drag into a viscous part and a
wave-making part (air drag is carried as an explicit zero term so the
breakdown stays honest about what is modelled):

* viscous: flat-plate friction line ``C_F = 0.075 / (log10(Re) - 2)^2``
  with a slenderness-based form factor ``K = 19 * (V / (L^2 * D))^2``
  acting on a box-approximated wetted surface
  ``S = 2 * (L*B + B*D + L*D)``;
* wave-making: a statistical regression in the hull fullness
  coefficients (prismatic, midship, waterplane) and Froude number.  The
  regression's exponential is evaluated verbatim; its prefactor has
  units of force only after multiplying by the displacement force
  ``rho * g * volume``, and a dimensionless ``wave_scale`` knob is
  exposed so the term can be calibrated against tank or field data
  (see ``solve_wave_scale``).

Every coefficient the chain computes can be pinned via
``CoefficientOverrides``; overridden values are echoed into the
returned ``DragBreakdown`` so downstream consumers see what was
actually used.

Thrust sizing follows the usual drive-train bookkeeping: nominal
required thrust is resistance divided by the moving efficiency of the
thrusters, a safety factor is applied on top, and the unit count is the
ceiling against a single unit's static thrust.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import NamedTuple, Optional

from .errors import DomainError, RangeError

__all__ = [
    "FluidProperties",
    "HullGeometry",
    "CoefficientOverrides",
    "FormCoefficients",
    "ViscousResult",
    "WaveResult",
    "DragBreakdown",
    "ThrustPlan",
    "FRESH_WATER",
    "NO_OVERRIDES",
    "wetted_surface",
    "reynolds_number",
    "friction_coefficient",
    "form_factor",
    "froude_number",
    "form_coefficients",
    "viscous_drag",
    "wave_drag",
    "total_drag",
    "drag_curve",
    "thrust_plan",
    "solve_wave_scale",
    "drag_params",
    "assert_floating",
]

#: Friction line is singular at log10(Re) == 2; refuse anything at or
#: below this Reynolds number.
MIN_REYNOLDS = 100.0

#: Froude number below which the wave term is dropped when the optional
#: low-Froude cutoff is enabled.
LOW_FROUDE_CUTOFF = 0.3


@dataclass(frozen=True)
class FluidProperties:
    """Water properties used throughout the drag chain (SI units)."""

    density: float = 1000.0  # kg/m^3
    kinematic_viscosity: float = 1.002e-6  # m^2/s
    gravity: float = 9.81  # m/s^2

    def __post_init__(self):
        if self.density <= 0 or self.kinematic_viscosity <= 0 or self.gravity <= 0:
            raise RangeError("fluid properties must all be positive")


FRESH_WATER = FluidProperties()


@dataclass(frozen=True)
class HullGeometry:
    """Principal hull particulars (SI units).

    ``displaced_volume`` must fit inside the ``length * beam * draft``
    bounding box.  Mass is carried separately from displacement so
    ballasted/overloaded configurations can be expressed; use
    ``assert_floating`` to check buoyancy consistency when a model is
    supposed to be in hydrostatic equilibrium.
    """

    length: float  # waterline length L, m
    beam: float  # waterline beam B, m
    draft: float  # draft D, m
    displaced_volume: float  # m^3
    midsection_area: float  # immersed midship section area, m^2
    waterplane_area: float  # waterplane area, m^2
    mass: float  # kg

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (isinstance(value, (int, float)) and math.isfinite(value)):
                raise RangeError(f"hull geometry field {f.name} must be finite")
            if value <= 0:
                raise RangeError(f"hull geometry field {f.name} must be positive")
        # tiny relative slack so volumes meant to equal the box bound
        # exactly are not rejected over float rounding
        box = self.length * self.beam * self.draft
        if self.displaced_volume > box * (1.0 + 1e-12):
            raise RangeError(
                f"displaced volume {self.displaced_volume} exceeds the "
                f"L*B*D bounding box {box:.6g}"
            )


def assert_floating(geom: HullGeometry, fluid: FluidProperties = FRESH_WATER,
                    rel_tol: float = 1e-3) -> None:
    """Raise RangeError unless mass matches displaced water mass."""
    displaced_mass = geom.displaced_volume * fluid.density
    if not math.isclose(geom.mass, displaced_mass, rel_tol=rel_tol):
        raise RangeError(
            f"mass {geom.mass} kg is not buoyancy-consistent with "
            f"displaced mass {displaced_mass:.6g} kg"
        )


@dataclass(frozen=True)
class CoefficientOverrides:
    """Pin any intermediate of the drag chain instead of computing it.

    All values are dimensionless except ``wetted_area`` (m^2).  A value
    of ``None`` means "compute from geometry".  Zero is allowed — an
    all-zero override set is the standard way to build a drag-free test
    rig.  ``wave_scale`` multiplies the wave term (1.0 = regression as
    published); ``low_froude_cutoff`` zeroes the wave term below
    Fn = 0.3, which is outside the regression's comfort zone.
    """

    friction_cf: Optional[float] = None
    form_factor_k: Optional[float] = None
    wetted_area: Optional[float] = None
    prismatic_cp: Optional[float] = None
    midship_cm: Optional[float] = None
    waterplane_cwp: Optional[float] = None
    wave_scale: float = 1.0
    low_froude_cutoff: bool = False

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None or isinstance(value, bool):
                continue
            if not math.isfinite(value) or value < 0:
                raise RangeError(f"override {f.name} must be finite and >= 0")


NO_OVERRIDES = CoefficientOverrides()


class FormCoefficients(NamedTuple):
    prismatic_cp: float
    midship_cm: float
    waterplane_cwp: float
    #: names of coefficients outside the physically plausible (0, 1]
    #: band — reported, never raised, since small-craft geometry pushed
    #: through displacement-hull formulas routinely lands there.
    flags: tuple[str, ...]


class ViscousResult(NamedTuple):
    newtons: float
    reynolds: float
    friction_cf: float
    form_factor_k: float
    wetted_area: float


class WaveResult(NamedTuple):
    newtons: float
    froude: float
    c: float
    m1: float
    m2: float
    lam: float
    exponent: float
    #: displacement-force-scaled regression value before wave_scale
    raw: float


@dataclass(frozen=True)
class DragBreakdown:
    """Resistance components and every intermediate used to get them."""

    speed: float
    reynolds: float
    froude: float
    friction_cf: float
    form_factor_k: float
    wetted_area: float
    prismatic_cp: float
    midship_cm: float
    waterplane_cwp: float
    wave_c: float
    wave_m1: float
    wave_m2: float
    wave_lambda: float
    viscous: float
    wave: float
    air: float
    total: float


@dataclass(frozen=True)
class ThrustPlan:
    """Result of sizing the propulsion set against a resistance figure."""

    active_thrust: float  # resistance to overcome, N
    moving_efficiency: float
    nominal_thrust: float  # active / efficiency, N
    safety_factor: float
    final_thrust: float  # nominal * safety factor, N
    unit_static_thrust: float  # one thruster, N
    thruster_count: int


# --- elementary relations ----------------------------------------------------


def wetted_surface(geom: HullGeometry) -> float:
    """Box-hull wetted surface 2*(L*B + B*D + L*D), m^2."""
    return 2.0 * (geom.length * geom.beam
                  + geom.beam * geom.draft
                  + geom.length * geom.draft)


def reynolds_number(length: float, speed: float, viscosity: float) -> float:
    """Re = L * V / nu.  Zero speed gives zero."""
    if length <= 0 or viscosity <= 0:
        raise RangeError("length and viscosity must be positive")
    if speed < 0:
        raise RangeError("speed must be >= 0")
    return length * speed / viscosity


def friction_coefficient(reynolds: float) -> float:
    """Flat-plate friction line 0.075 / (log10(Re) - 2)^2."""
    if reynolds <= MIN_REYNOLDS:
        raise DomainError(
            f"friction line undefined for Re <= {MIN_REYNOLDS:g} (got {reynolds:g})"
        )
    base = math.log10(reynolds) - 2.0
    return 0.075 / (base * base)


def form_factor(geom: HullGeometry) -> float:
    """Slenderness form factor K = 19 * (V / (L^2 * D))^2."""
    slenderness = geom.displaced_volume / (geom.length ** 2 * geom.draft)
    return 19.0 * slenderness ** 2


def froude_number(speed: float, length: float, gravity: float = 9.81) -> float:
    """Fn = V / sqrt(g * L)."""
    if length <= 0 or gravity <= 0:
        raise RangeError("length and gravity must be positive")
    if speed < 0:
        raise RangeError("speed must be >= 0")
    return speed / math.sqrt(gravity * length)


def form_coefficients(geom: HullGeometry) -> FormCoefficients:
    """Prismatic, midship and waterplane coefficients with plausibility flags.

    Cp = V / (A_M * L);  CM = A_M / (B * D);  CWP = A_WP / (L * B).
    """
    cp = geom.displaced_volume / (geom.midsection_area * geom.length)
    cm = geom.midsection_area / (geom.beam * geom.draft)
    cwp = geom.waterplane_area / (geom.length * geom.beam)
    flags = tuple(
        name
        for name, value in (
            ("prismatic_cp", cp),
            ("midship_cm", cm),
            ("waterplane_cwp", cwp),
        )
        if not 0.0 < value <= 1.0
    )
    return FormCoefficients(cp, cm, cwp, flags)


def _effective_coefficients(geom: HullGeometry,
                            overrides: CoefficientOverrides) -> tuple[float, float, float]:
    computed = None
    out = []
    for name in ("prismatic_cp", "midship_cm", "waterplane_cwp"):
        value = getattr(overrides, name)
        if value is None:
            if computed is None:
                computed = form_coefficients(geom)
            value = getattr(computed, name)
        out.append(value)
    return tuple(out)


# --- drag components ---------------------------------------------------------


def viscous_drag(geom: HullGeometry, fluid: FluidProperties, speed: float,
                 overrides: CoefficientOverrides = NO_OVERRIDES) -> ViscousResult:
    """Friction + form drag 0.5 * rho * V^2 * C_F * (1 + K) * S.

    Zero speed short-circuits to zero without touching the friction
    line; any other speed low enough to push Re under the domain floor
    propagates the DomainError from ``friction_coefficient``.
    """
    if speed < 0:
        raise RangeError("speed must be >= 0")
    swet = overrides.wetted_area if overrides.wetted_area is not None else wetted_surface(geom)
    k = overrides.form_factor_k if overrides.form_factor_k is not None else form_factor(geom)
    if speed == 0:
        return ViscousResult(0.0, 0.0, 0.0, k, swet)
    reynolds = reynolds_number(geom.length, speed, fluid.kinematic_viscosity)
    if overrides.friction_cf is not None:
        cf = overrides.friction_cf
    else:
        cf = friction_coefficient(reynolds)
    newtons = 0.5 * fluid.density * speed * speed * cf * (1.0 + k) * swet
    return ViscousResult(newtons, reynolds, cf, k, swet)


def wave_drag(geom: HullGeometry, fluid: FluidProperties, speed: float,
              overrides: CoefficientOverrides = NO_OVERRIDES) -> WaveResult:
    """Wave-making resistance from the fullness-coefficient regression.

    The regression value ``c * exp(m1 * Fn^-0.9 + m2 * cos(lambda * Fn^-2))``
    is dimensionless; it is scaled by the displacement force
    ``rho * g * volume`` (the ``raw`` field) and then by ``wave_scale``.
    """
    if speed <= 0:
        raise DomainError("wave drag requires speed > 0 (Fn^-2 is singular at 0)")
    cp, cm, cwp = _effective_coefficients(geom, overrides)
    if cp <= 0 or cm <= 0 or cwp <= 0:
        raise DomainError("wave regression requires positive form coefficients")
    length = geom.length
    beam = geom.beam
    fn = froude_number(speed, length, fluid.gravity)

    beam_ratio = beam / length
    c = 569.0 * beam_ratio ** 2.984 * cm ** -0.7439 * cwp ** 1.2655
    m1 = (-4.8507 * beam_ratio + 8.1768 * cp
          + 14.034 * cp ** 2 - 7.0682 * cp ** 3)
    inv_fn2 = fn ** -2
    m2 = -0.4468 * math.exp(-0.1 * inv_fn2)
    lam = 1.446 * cp - 0.03 * (length / beam)
    exponent = m1 * fn ** -0.9 + m2 * math.cos(lam * inv_fn2)

    displacement_force = geom.displaced_volume * fluid.density * fluid.gravity
    try:
        raw = displacement_force * c * math.exp(exponent)
    except OverflowError:
        raise DomainError(
            f"wave regression diverges (exponent {exponent:.3g}) for this "
            "geometry/speed combination"
        ) from None
    newtons = overrides.wave_scale * raw
    if overrides.low_froude_cutoff and fn < LOW_FROUDE_CUTOFF:
        newtons = 0.0
    return WaveResult(newtons, fn, c, m1, m2, lam, exponent, raw)


def total_drag(geom: HullGeometry, fluid: FluidProperties, speed: float,
               overrides: CoefficientOverrides = NO_OVERRIDES) -> DragBreakdown:
    """Full resistance breakdown at one speed.

    Air drag is not modelled and is reported as an explicit 0.0 term.
    Zero speed returns an all-zero breakdown.
    """
    if speed < 0:
        raise RangeError("speed must be >= 0")
    if speed == 0:
        return DragBreakdown(*([0.0] * 16), total=0.0)
    visc = viscous_drag(geom, fluid, speed, overrides)
    wave = wave_drag(geom, fluid, speed, overrides)
    cp, cm, cwp = _effective_coefficients(geom, overrides)
    air = 0.0
    return DragBreakdown(
        speed=speed,
        reynolds=visc.reynolds,
        froude=wave.froude,
        friction_cf=visc.friction_cf,
        form_factor_k=visc.form_factor_k,
        wetted_area=visc.wetted_area,
        prismatic_cp=cp,
        midship_cm=cm,
        waterplane_cwp=cwp,
        wave_c=wave.c,
        wave_m1=wave.m1,
        wave_m2=wave.m2,
        wave_lambda=wave.lam,
        viscous=visc.newtons,
        wave=wave.newtons,
        air=air,
        total=visc.newtons + wave.newtons + air,
    )


def drag_curve(geom: HullGeometry, fluid: FluidProperties,
               v_min: float, v_max: float, steps: int,
               overrides: CoefficientOverrides = NO_OVERRIDES) -> list[DragBreakdown]:
    """Breakdowns on an inclusive, evenly spaced speed grid."""
    if not 0 <= v_min < v_max:
        raise RangeError("need 0 <= v_min < v_max")
    if steps < 2:
        raise RangeError("need at least 2 grid points")
    span = v_max - v_min
    speeds = [v_min + span * i / (steps - 1) for i in range(steps - 1)]
    speeds.append(v_max)  # exact endpoint, no accumulated error
    return [total_drag(geom, fluid, v, overrides) for v in speeds]


# --- sizing ------------------------------------------------------------------


def thrust_plan(total_resistance: float, moving_efficiency: float,
                safety_factor: float, unit_static_thrust: float) -> ThrustPlan:
    """Size a thruster set against a resistance figure.

    nominal = resistance / efficiency; final = nominal * safety factor;
    count = ceil(final / unit static thrust), minimum 1.
    """
    if total_resistance < 0:
        raise RangeError("resistance must be >= 0")
    if not 0 < moving_efficiency <= 1:
        raise RangeError("moving efficiency must be in (0, 1]")
    if safety_factor < 1:
        raise RangeError("safety factor must be >= 1")
    if unit_static_thrust <= 0:
        raise RangeError("unit static thrust must be positive")
    nominal = total_resistance / moving_efficiency
    final = nominal * safety_factor
    count = max(1, math.ceil(final / unit_static_thrust))
    # ceil on floats can land one short when final/unit is a hair under
    # an integer it mathematically equals; enforce the sizing guarantee.
    while count * unit_static_thrust < final:
        count += 1
    return ThrustPlan(
        active_thrust=total_resistance,
        moving_efficiency=moving_efficiency,
        nominal_thrust=nominal,
        safety_factor=safety_factor,
        final_thrust=final,
        unit_static_thrust=unit_static_thrust,
        thruster_count=count,
    )


def solve_wave_scale(target_newtons: float, geom: HullGeometry,
                     fluid: FluidProperties, speed: float,
                     overrides: CoefficientOverrides = NO_OVERRIDES) -> float:
    """wave_scale that makes the wave term equal ``target_newtons`` at ``speed``.

    The wave term is linear in the scale, so this is a single division
    against the unscaled regression value.
    """
    if target_newtons < 0:
        raise RangeError("target must be >= 0")
    raw = wave_drag(geom, fluid, speed, replace(overrides, wave_scale=1.0)).raw
    if raw <= 0:
        raise DomainError("unscaled wave term is zero; scale is unconstrained")
    return target_newtons / raw


# --- kernel bridge -----------------------------------------------------------


def drag_params(geom: HullGeometry, fluid: FluidProperties,
                overrides: CoefficientOverrides = NO_OVERRIDES) -> tuple[float, ...]:
    """Precompute the 8 scalars the sim kernels evaluate hull drag from.

    Layout (matches ``kernels._pure`` indices 16..23):
    (l_over_nu, cf_fixed_or_nan, visc_k, inv_sqrt_gl, wave_amp, m1, lam,
    fn_cutoff).  The speed-independent pieces of both drag components
    are folded in so the per-step work is a few transcendental calls.
    """
    swet = overrides.wetted_area if overrides.wetted_area is not None else wetted_surface(geom)
    k = overrides.form_factor_k if overrides.form_factor_k is not None else form_factor(geom)
    cp, cm, cwp = _effective_coefficients(geom, overrides)
    if cp <= 0 or cm <= 0 or cwp <= 0:
        raise DomainError("wave regression requires positive form coefficients")
    beam_ratio = geom.beam / geom.length
    c = 569.0 * beam_ratio ** 2.984 * cm ** -0.7439 * cwp ** 1.2655
    m1 = (-4.8507 * beam_ratio + 8.1768 * cp
          + 14.034 * cp ** 2 - 7.0682 * cp ** 3)
    lam = 1.446 * cp - 0.03 * (geom.length / geom.beam)
    displacement_force = geom.displaced_volume * fluid.density * fluid.gravity
    return (
        geom.length / fluid.kinematic_viscosity,
        overrides.friction_cf if overrides.friction_cf is not None else math.nan,
        0.5 * fluid.density * (1.0 + k) * swet,
        1.0 / math.sqrt(fluid.gravity * geom.length),
        overrides.wave_scale * displacement_force * c,
        m1,
        lam,
        LOW_FROUDE_CUTOFF if overrides.low_froude_cutoff else 0.0,
    )
