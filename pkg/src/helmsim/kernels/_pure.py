"""Pure Python kernels.

Fallback implementations of the two hot loops: the framed-link CRC and
the fixed-step state integrator.  The compiled backend in ``_core.pyx``
mirrors these routines expression for expression so both produce the
same trajectories; keep the two files in sync.

Sim parameter vector layout (24 floats, see ``dynamics.make_sim_params``):

    0  tau          thruster first-order lag time constant, s (<=0: no lag)
    1  m_u          effective surge mass (rigid + added), kg
    2  m_v          effective sway mass, kg
    3  i_r          effective yaw inertia, kg m^2
    4  d_u1         linear surge drag add-on, N per m/s
    5  d_v1         linear sway drag, N per m/s
    6  d_v2         quadratic sway drag, N per (m/s)^2
    7  d_r1         linear yaw drag, N m per rad/s
    8  d_r2         quadratic yaw drag, N m per (rad/s)^2
    9  half_sep     half the thruster separation, m
    10 eta_e        thrust retention factor at rated advance speed
    11 rated        rated advance speed for thrust decay, m/s
    12 cur_e        water current, east component, m/s
    13 cur_n        water current, north component, m/s
    14 wind_e       wind force on the hull, east component, N
    15 wind_n       wind force on the hull, north component, N
    16 l_over_nu    waterline length / kinematic viscosity
    17 cf_fixed     fixed friction coefficient (NaN: compute from Re)
    18 visc_k       0.5 * rho * (1 + K) * S_wet
    19 inv_sqrt_gl  1 / sqrt(g * L)
    20 wave_amp     wave_scale * rho * g * volume * c
    21 wave_m1      wave regression slope m1
    22 wave_lam     wave regression lambda
    23 fn_cutoff    wave term zeroed at or below this Froude number

State vector layout (8 floats):

    x_east, y_north, psi (rad), u, v, r (rad/s), thrust_l, thrust_r

The two thrust entries are first-order lag states holding the static
thrust each unit is currently producing; advance-speed decay is applied
on top of them inside the derivative.  Heading/rate are kept in radians
here; degree conversions happen at the public API boundary.
"""

import math

BACKEND = "pure"

TWO_PI = 2.0 * math.pi

# --- CRC-16/CCITT-FALSE (poly 0x1021, init 0xffff, no reflection) -----------


def _build_crc_table():
    table = []
    for byte in range(256):
        crc = byte << 8
        for _ in range(8):
            if crc & 0x8000:
                crc = ((crc << 1) ^ 0x1021) & 0xFFFF
            else:
                crc = (crc << 1) & 0xFFFF
        table.append(crc)
    return tuple(table)


_CRC_TABLE = _build_crc_table()


def crc16(data, crc=0xFFFF):
    """CRC-16/CCITT-FALSE over ``data`` starting from ``crc``."""
    table = _CRC_TABLE
    for byte in data:
        crc = ((crc << 8) & 0xFFFF) ^ table[((crc >> 8) ^ byte) & 0xFF]
    return crc


# --- hull drag ---------------------------------------------------------------


def hull_drag(speed, p):
    """Total hull resistance (N, >= 0) at water-relative speed >= 0.

    ``p`` is the sim parameter vector; only entries 16..23 are read.
    Below Re = 100 the friction line is singular, so the viscous term is
    dropped there (the speeds involved are below 0.1 mm/s for any real
    hull, and the integrator must stay total).
    """
    if speed <= 0.0:
        return 0.0
    cf_fixed = p[17]
    if cf_fixed == cf_fixed:  # not NaN: override in force
        cf = cf_fixed
    else:
        reynolds = p[16] * speed
        if reynolds <= 100.0:
            cf = 0.0
        else:
            base = math.log10(reynolds) - 2.0
            cf = 0.075 / (base * base)
    visc = p[18] * speed * speed * cf

    wave_amp = p[20]
    froude = speed * p[19]
    # The 1e-9 floor keeps 1/Fn^2 finite; the wave term is already
    # vanishingly small well before that point.
    if wave_amp == 0.0 or froude <= p[23] or froude < 1e-9:
        return visc
    inv_fn2 = 1.0 / (froude * froude)
    m2 = -0.4468 * math.exp(-0.1 * inv_fn2)
    expo = p[21] * froude ** -0.9 + m2 * math.cos(p[22] * inv_fn2)
    if expo > 709.782712893384:  # C exp() saturates to inf; match it
        return visc + wave_amp * math.inf
    return visc + wave_amp * math.exp(expo)


# --- 3-DOF planar dynamics ---------------------------------------------------


def _deriv(s, tl_cmd, tr_cmd, p):
    x, y, psi, u, v, r, tl, tr = s
    sp = math.sin(psi)
    cp = math.cos(psi)

    # Water-relative velocities (current rotated into the body frame).
    cur_e = p[12]
    cur_n = p[13]
    u_rel = u - (cur_e * sp + cur_n * cp)
    v_rel = v - (cur_e * cp - cur_n * sp)

    # Advance-speed thrust decay: linear from static down to eta_e * static
    # at rated speed, flat beyond.
    adv = u_rel if u_rel >= 0.0 else -u_rel
    rated = p[11]
    frac = adv / rated if adv < rated else 1.0
    decay = 1.0 - (1.0 - p[10]) * frac
    tl_eff = tl * decay
    tr_eff = tr * decay

    # Wind force rotated into the body frame.
    wind_e = p[14]
    wind_n = p[15]
    fx_wind = wind_e * sp + wind_n * cp
    fy_wind = wind_e * cp - wind_n * sp

    speed_rel = u_rel if u_rel >= 0.0 else -u_rel
    drag_surge = hull_drag(speed_rel, p) + p[4] * speed_rel
    if u_rel > 0.0:
        surge_force = tl_eff + tr_eff - drag_surge + fx_wind
    elif u_rel < 0.0:
        surge_force = tl_eff + tr_eff + drag_surge + fx_wind
    else:
        surge_force = tl_eff + tr_eff + fx_wind

    v_abs = v_rel if v_rel >= 0.0 else -v_rel
    sway_force = -p[5] * v_rel - p[6] * v_rel * v_abs + fy_wind

    r_abs = r if r >= 0.0 else -r
    yaw_moment = (tr_eff - tl_eff) * p[9] - p[7] * r - p[8] * r * r_abs

    du = surge_force / p[1]
    dv = sway_force / p[2]
    dr = yaw_moment / p[3]
    dx = u * sp + v * cp
    dy = u * cp - v * sp

    tau = p[0]
    if tau > 0.0:
        dtl = (tl_cmd - tl) / tau
        dtr = (tr_cmd - tr) / tau
    else:
        dtl = 0.0
        dtr = 0.0
    return (dx, dy, r, du, dv, dr, dtl, dtr)


def deriv8(s, tl_cmd, tr_cmd, p):
    """State derivative at ``s`` with thrust commands held constant."""
    return _deriv(s, tl_cmd, tr_cmd, p)


def rk4_step(s, tl_cmd, tr_cmd, dt, p):
    """One classic fourth-order Runge-Kutta step of size ``dt``.

    Heading is wrapped into [0, 2*pi) on output so long runs stay
    bounded.  When the lag constant is zero the thrust states are pinned
    to the commands before integrating.
    """
    if p[0] <= 0.0:
        s = (s[0], s[1], s[2], s[3], s[4], s[5], tl_cmd, tr_cmd)

    k1 = _deriv(s, tl_cmd, tr_cmd, p)
    half = 0.5 * dt
    s2 = (
        s[0] + half * k1[0], s[1] + half * k1[1], s[2] + half * k1[2],
        s[3] + half * k1[3], s[4] + half * k1[4], s[5] + half * k1[5],
        s[6] + half * k1[6], s[7] + half * k1[7],
    )
    k2 = _deriv(s2, tl_cmd, tr_cmd, p)
    s3 = (
        s[0] + half * k2[0], s[1] + half * k2[1], s[2] + half * k2[2],
        s[3] + half * k2[3], s[4] + half * k2[4], s[5] + half * k2[5],
        s[6] + half * k2[6], s[7] + half * k2[7],
    )
    k3 = _deriv(s3, tl_cmd, tr_cmd, p)
    s4 = (
        s[0] + dt * k3[0], s[1] + dt * k3[1], s[2] + dt * k3[2],
        s[3] + dt * k3[3], s[4] + dt * k3[4], s[5] + dt * k3[5],
        s[6] + dt * k3[6], s[7] + dt * k3[7],
    )
    k4 = _deriv(s4, tl_cmd, tr_cmd, p)

    sixth = dt / 6.0
    psi = s[2] + sixth * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2])
    psi = math.fmod(psi, TWO_PI)
    if psi < 0.0:
        psi += TWO_PI
    return (
        s[0] + sixth * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0]),
        s[1] + sixth * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1]),
        psi,
        s[3] + sixth * (k1[3] + 2.0 * (k2[3] + k3[3]) + k4[3]),
        s[4] + sixth * (k1[4] + 2.0 * (k2[4] + k3[4]) + k4[4]),
        s[5] + sixth * (k1[5] + 2.0 * (k2[5] + k3[5]) + k4[5]),
        s[6] + sixth * (k1[6] + 2.0 * (k2[6] + k3[6]) + k4[6]),
        s[7] + sixth * (k1[7] + 2.0 * (k2[7] + k3[7]) + k4[7]),
    )
