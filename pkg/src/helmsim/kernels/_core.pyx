# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels.

Mirror of ``_pure`` (see that module for the parameter/state layout and
semantics).  Expressions are kept in the same order so both backends
produce bit-comparable trajectories on the same libm.
"""

from libc.math cimport cos, exp, fmod, log10, pow, sin

BACKEND = "compiled"

cdef double TWO_PI = 6.283185307179586476925287
cdef double EXP_MAX_ARG = 709.782712893384
cdef double INF = float("inf")

# --- CRC-16/CCITT-FALSE ------------------------------------------------------

cdef unsigned short _CRC_TABLE[256]

cdef void _build_crc_table():
    cdef int byte, bit
    cdef unsigned int crc
    for byte in range(256):
        crc = byte << 8
        for bit in range(8):
            if crc & 0x8000:
                crc = ((crc << 1) ^ 0x1021) & 0xFFFF
            else:
                crc = (crc << 1) & 0xFFFF
        _CRC_TABLE[byte] = <unsigned short>crc

_build_crc_table()


def crc16(data, crc=0xFFFF):
    """CRC-16/CCITT-FALSE over ``data`` starting from ``crc``."""
    cdef const unsigned char[::1] view = data
    cdef unsigned int acc = crc
    cdef Py_ssize_t i, n = view.shape[0]
    for i in range(n):
        acc = ((acc << 8) & 0xFFFF) ^ _CRC_TABLE[((acc >> 8) ^ view[i]) & 0xFF]
    return acc


# --- hull drag ---------------------------------------------------------------

cdef double _hull_drag(double speed, double* p) noexcept:
    cdef double cf, cf_fixed, reynolds, base, visc
    cdef double wave_amp, froude, inv_fn2, m2, expo
    if speed <= 0.0:
        return 0.0
    cf_fixed = p[17]
    if cf_fixed == cf_fixed:
        cf = cf_fixed
    else:
        reynolds = p[16] * speed
        if reynolds <= 100.0:
            cf = 0.0
        else:
            base = log10(reynolds) - 2.0
            cf = 0.075 / (base * base)
    visc = p[18] * speed * speed * cf

    wave_amp = p[20]
    froude = speed * p[19]
    if wave_amp == 0.0 or froude <= p[23] or froude < 1e-9:
        return visc
    inv_fn2 = 1.0 / (froude * froude)
    m2 = -0.4468 * exp(-0.1 * inv_fn2)
    expo = p[21] * pow(froude, -0.9) + m2 * cos(p[22] * inv_fn2)
    if expo > EXP_MAX_ARG:
        return visc + wave_amp * INF
    return visc + wave_amp * exp(expo)


cdef void _deriv(double* s, double tl_cmd, double tr_cmd, double* p,
                 double* out) noexcept:
    cdef double x = s[0], y = s[1], psi = s[2]
    cdef double u = s[3], v = s[4], r = s[5], tl = s[6], tr = s[7]
    cdef double sp = sin(psi)
    cdef double cp = cos(psi)

    cdef double cur_e = p[12]
    cdef double cur_n = p[13]
    cdef double u_rel = u - (cur_e * sp + cur_n * cp)
    cdef double v_rel = v - (cur_e * cp - cur_n * sp)

    cdef double adv = u_rel if u_rel >= 0.0 else -u_rel
    cdef double rated = p[11]
    cdef double frac = adv / rated if adv < rated else 1.0
    cdef double decay = 1.0 - (1.0 - p[10]) * frac
    cdef double tl_eff = tl * decay
    cdef double tr_eff = tr * decay

    cdef double wind_e = p[14]
    cdef double wind_n = p[15]
    cdef double fx_wind = wind_e * sp + wind_n * cp
    cdef double fy_wind = wind_e * cp - wind_n * sp

    cdef double speed_rel = u_rel if u_rel >= 0.0 else -u_rel
    cdef double drag_surge = _hull_drag(speed_rel, p) + p[4] * speed_rel
    cdef double surge_force
    if u_rel > 0.0:
        surge_force = tl_eff + tr_eff - drag_surge + fx_wind
    elif u_rel < 0.0:
        surge_force = tl_eff + tr_eff + drag_surge + fx_wind
    else:
        surge_force = tl_eff + tr_eff + fx_wind

    cdef double v_abs = v_rel if v_rel >= 0.0 else -v_rel
    cdef double sway_force = -p[5] * v_rel - p[6] * v_rel * v_abs + fy_wind

    cdef double r_abs = r if r >= 0.0 else -r
    cdef double yaw_moment = (tr_eff - tl_eff) * p[9] - p[7] * r - p[8] * r * r_abs

    out[0] = u * sp + v * cp
    out[1] = u * cp - v * sp
    out[2] = r
    out[3] = surge_force / p[1]
    out[4] = sway_force / p[2]
    out[5] = yaw_moment / p[3]

    cdef double tau = p[0]
    if tau > 0.0:
        out[6] = (tl_cmd - tl) / tau
        out[7] = (tr_cmd - tr) / tau
    else:
        out[6] = 0.0
        out[7] = 0.0


cdef void _load(object seq, double* dst, int n):
    cdef int i
    for i in range(n):
        dst[i] = seq[i]


def hull_drag(speed, p):
    """Total hull resistance (N, >= 0) at water-relative speed >= 0."""
    cdef double buf[24]
    cdef int i
    for i in range(16):
        buf[i] = 0.0
    for i in range(16, 24):
        buf[i] = p[i]
    return _hull_drag(speed, buf)


def deriv8(s, tl_cmd, tr_cmd, p):
    """State derivative at ``s`` with thrust commands held constant."""
    cdef double sv[8]
    cdef double pv[24]
    cdef double out[8]
    _load(s, sv, 8)
    _load(p, pv, 24)
    _deriv(sv, tl_cmd, tr_cmd, pv, out)
    return (out[0], out[1], out[2], out[3], out[4], out[5], out[6], out[7])


def rk4_step(s, tl_cmd, tr_cmd, dt, p):
    """One classic fourth-order Runge-Kutta step of size ``dt``."""
    cdef double sv[8]
    cdef double pv[24]
    cdef double k1[8]
    cdef double k2[8]
    cdef double k3[8]
    cdef double k4[8]
    cdef double stage[8]
    cdef double tlc = tl_cmd, trc = tr_cmd, h = dt
    cdef double half, sixth, psi
    cdef int i
    _load(s, sv, 8)
    _load(p, pv, 24)

    if pv[0] <= 0.0:
        sv[6] = tlc
        sv[7] = trc

    _deriv(sv, tlc, trc, pv, k1)
    half = 0.5 * h
    for i in range(8):
        stage[i] = sv[i] + half * k1[i]
    _deriv(stage, tlc, trc, pv, k2)
    for i in range(8):
        stage[i] = sv[i] + half * k2[i]
    _deriv(stage, tlc, trc, pv, k3)
    for i in range(8):
        stage[i] = sv[i] + h * k3[i]
    _deriv(stage, tlc, trc, pv, k4)

    sixth = h / 6.0
    for i in range(8):
        stage[i] = sv[i] + sixth * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i])
    psi = fmod(stage[2], TWO_PI)
    if psi < 0.0:
        psi += TWO_PI
    return (stage[0], stage[1], psi, stage[3], stage[4], stage[5],
            stage[6], stage[7])
