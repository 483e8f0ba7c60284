"""Compare the compiled and pure kernel backends.

Run from the repository root:

    python3 benchmarks/bench_kernels.py

Times the two hot loops (link CRC and the fixed-step integrator) in
both implementations and prints the speedup.  The numbers justify
shipping the extension: the simulator spends nearly all its physics
time inside rk4_step.
"""

import os
import time

from helmsim.config import load_config
from helmsim.dynamics import make_sim_params
from helmsim.kernels import load_backend

CRC_BYTES = 1 << 20  # 1 MiB
RK4_STEPS = 100_000
DT = 0.02


def bench_crc(backend, data):
    start = time.perf_counter()
    backend.crc16(data)
    elapsed = time.perf_counter() - start
    return elapsed, len(data) / elapsed / 1e6


def bench_rk4(backend, params):
    state = (0.0, 0.0, 0.2, 0.0, 0.0, 0.0, 0.0, 0.0)
    start = time.perf_counter()
    for step in range(RK4_STEPS):
        thrust = 90.0 if (step // 2000) % 2 == 0 else 40.0
        state = backend.rk4_step(state, thrust, 75.0, DT, params)
    elapsed = time.perf_counter() - start
    return elapsed, RK4_STEPS / elapsed, state


def main():
    config = load_config("bep-echoboat-160")
    params = make_sim_params(config.body, config.side_thruster(),
                             config.environment, config.geometry,
                             overrides=config.overrides)
    data = os.urandom(CRC_BYTES)

    backends = {}
    for name in ("pure", "compiled"):
        try:
            backends[name] = load_backend(name)
        except ImportError:
            print(f"{name}: not available, skipping")

    results = {}
    for name, backend in backends.items():
        crc_s, crc_mbs = bench_crc(backend, data)
        rk4_s, rk4_hz, state = bench_rk4(backend, params)
        results[name] = (crc_s, crc_mbs, rk4_s, rk4_hz, state)
        print(f"{name:9s} crc16 {CRC_BYTES >> 20} MiB: {crc_s * 1e3:8.2f} ms"
              f" ({crc_mbs:7.1f} MB/s)   rk4 {RK4_STEPS} steps:"
              f" {rk4_s * 1e3:8.2f} ms ({rk4_hz / 1e3:8.1f} ksteps/s)")

    if len(results) == 2:
        pure_result = results["pure"]
        comp_result = results["compiled"]
        print(f"speedup   crc16 x{pure_result[0] / comp_result[0]:6.1f}"
              f"            rk4 x{pure_result[2] / comp_result[2]:6.1f}")
        drift = max(abs(a - b)
                    for a, b in zip(pure_result[4], comp_result[4]))
        print(f"endpoint drift between backends: {drift:.3e}")


if __name__ == "__main__":
    main()
