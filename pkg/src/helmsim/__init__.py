"""helmsim: a desk-scale software twin of a differential-thrust surface vessel.

Subsystems:

* :mod:`helmsim.hydro` — hull resistance chain and thruster sizing
* :mod:`helmsim.dynamics` — 3-DOF planar rigid-body simulation
* :mod:`helmsim.control` — PID cascades, guidance, mode/failsafe logic
* :mod:`helmsim.perception` — rangefinder binning, filtering and fusion
* :mod:`helmsim.protocol` — framed binary telemetry/command link
* :mod:`helmsim.mission` — mission plans, run logs, metrics, battery
* :mod:`helmsim.service` — asyncio TCP/WebSocket vessel service
* :mod:`helmsim.kernels` — compiled/pure hot-loop kernels
"""

__version__ = "0.1.0"
