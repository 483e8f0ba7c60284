"""Backend parity: the compiled kernels must match the pure ones."""

import os
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helmsim import kernels
from helmsim.config import load_config
from helmsim.dynamics import make_sim_params

pure = kernels.load_backend("pure")
try:
    compiled = kernels.load_backend("compiled")
except ImportError:  # pragma: no cover - build always ships it
    compiled = None

needs_compiled = pytest.mark.skipif(
    compiled is None, reason="compiled kernel extension not built")


def bep_params(**env):
    config = load_config({"preset": "bep-echoboat-160",
                          "environment": env} if env
                         else "bep-echoboat-160")
    return make_sim_params(config.body, config.side_thruster(),
                           config.environment, config.geometry,
                           overrides=config.overrides)


class TestBackendSelection:
    def test_package_prefers_compiled_when_available(self):
        if compiled is None:
            assert kernels.BACKEND == "pure"
        else:
            assert kernels.BACKEND == "compiled"

    def test_unknown_backend_name_rejected(self):
        with pytest.raises(ValueError, match="unknown kernel backend"):
            kernels.load_backend("fortran")

    def test_force_pure_env_var(self):
        code = ("import helmsim.kernels as k; print(k.BACKEND)")
        out = subprocess.run(
            [sys.executable, "-c", code],
            env={**os.environ, "HELMSIM_FORCE_PURE": "1"},
            capture_output=True, text=True, check=True)
        assert out.stdout.strip() == "pure"


@needs_compiled
class TestCrcParity:
    @given(st.binary(max_size=2048))
    @settings(max_examples=200, deadline=None)
    def test_crc_matches_on_arbitrary_bytes(self, data):
        assert pure.crc16(data) == compiled.crc16(data)

    def test_crc_check_sequence(self):
        assert pure.crc16(b"123456789") == 0x29B1
        assert compiled.crc16(b"123456789") == 0x29B1

    @given(st.binary(min_size=1, max_size=64),
           st.integers(min_value=0, max_value=0xFFFF))
    @settings(max_examples=100, deadline=None)
    def test_crc_seed_threading(self, data, seed):
        assert pure.crc16(data, seed) == compiled.crc16(data, seed)


@needs_compiled
class TestDragParity:
    def test_drag_grid(self):
        params = bep_params()
        for i in range(0, 400):
            speed = i * 0.01
            a = pure.hull_drag(speed, params)
            b = compiled.hull_drag(speed, params)
            assert b == pytest.approx(a, rel=1e-12, abs=1e-12)

    @given(st.floats(min_value=0.0, max_value=6.0,
                     allow_nan=False, allow_infinity=False))
    @settings(max_examples=200, deadline=None)
    def test_drag_property(self, speed):
        params = bep_params()
        assert compiled.hull_drag(speed, params) == pytest.approx(
            pure.hull_drag(speed, params), rel=1e-12, abs=1e-12)


@needs_compiled
class TestIntegratorParity:
    def test_trajectory_stays_identical(self):
        params = bep_params(current_east=0.2, current_north=-0.1,
                            wind_force_east=3.0)
        state_a = (0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0)
        state_b = state_a
        for step in range(5000):
            tl = 80.0 if step < 2500 else 20.0
            tr = 60.0
            state_a = pure.rk4_step(state_a, tl, tr, 0.02, params)
            state_b = compiled.rk4_step(state_b, tl, tr, 0.02, params)
        assert state_b == pytest.approx(state_a, rel=1e-9, abs=1e-12)
        assert state_a[3] != 0.0  # it actually moved

    @given(st.floats(-2.0, 2.0), st.floats(-2.0, 2.0),
           st.floats(-1.0, 1.0), st.floats(-160.0, 160.0),
           st.floats(-160.0, 160.0))
    @settings(max_examples=150, deadline=None)
    def test_single_step_parity(self, u, v, r, tl, tr):
        params = bep_params()
        state = (1.0, -2.0, 1.2, u, v, r, tl / 2.0, tr / 2.0)
        a = pure.rk4_step(state, tl, tr, 0.02, params)
        b = compiled.rk4_step(state, tl, tr, 0.02, params)
        assert b == pytest.approx(a, rel=1e-12, abs=1e-12)

    def test_derivative_parity(self):
        params = bep_params()
        state = (0.0, 0.0, 0.3, 1.0, 0.1, 0.05, 50.0, 40.0)
        a = pure.deriv8(state, 60.0, 55.0, params)
        b = compiled.deriv8(state, 60.0, 55.0, params)
        assert b == pytest.approx(a, rel=1e-12, abs=1e-12)
