"""Command-line front end: sizing report, headless runs, service, metrics.

Exit codes: 0 success, 2 configuration problem, 3 mission ended in a
failsafe return.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import hydro
from .config import available_presets, load_config
from .dynamics import equilibrium_speed
from .errors import NoEquilibrium, RangeError, SchemaError
from .mission import (compute_metrics, cruise_endurance_hours, export_csv,
                      export_jsonl, export_plotdata, load_jsonl, run_mission)
from .service import serve

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_FAILSAFE = 3


def _add_config_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config", default="bep-default", metavar="NAME_OR_FILE",
        help="shipped preset name or path to a YAML config "
             f"(presets: {', '.join(available_presets())})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="helmsim",
        description="Twin-thruster survey vessel simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    size = sub.add_parser(
        "size", help="resistance breakdown, thruster sizing, endurance")
    _add_config_flag(size)
    size.add_argument("--speed", type=float, default=None,
                      help="design speed for sizing, m/s "
                           "(default: thruster rated speed)")
    size.add_argument("--safety", type=float, default=1.25,
                      help="sizing safety factor (default 1.25)")
    size.add_argument("--cruise", type=float, default=1.5,
                      help="cruise speed for the endurance line, m/s")
    size.add_argument("--json", action="store_true",
                      help="emit a machine-readable report")
    size.add_argument("--out", type=Path, default=None,
                      help="also write the report to this file")
    size.set_defaults(func=cmd_size)

    sim = sub.add_parser("sim", help="run the configured mission headless")
    _add_config_flag(sim)
    sim.add_argument("--seed", type=int, default=None,
                     help="override the config's random seed")
    sim.add_argument("--out", type=Path, default=None,
                     help="write the full run log (JSON lines)")
    sim.add_argument("--csv", type=Path, default=None,
                     help="write the trajectory table")
    sim.add_argument("--plot", type=Path, default=None,
                     help="write metrics + aligned series (JSON)")
    sim.set_defaults(func=cmd_sim)

    srv = sub.add_parser("serve", help="run the live link service")
    _add_config_flag(srv)
    srv.add_argument("--seed", type=int, default=None)
    srv.add_argument("--timescale", type=float, default=1.0,
                     help="simulated seconds per wall second; "
                          "0 runs unpaced (default 1.0)")
    srv.add_argument("--tcp-port", type=int, default=None)
    srv.add_argument("--ws-port", type=int, default=None)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--ui", type=Path, default=None,
                     help="static browser bundle to serve under /ui")
    srv.set_defaults(func=cmd_serve)

    report = sub.add_parser("report", help="metrics from a recorded log")
    report.add_argument("log", type=Path, help="JSON-lines run log")
    report.add_argument("--settle", type=float, default=20.0,
                        help="seconds discarded from each steady leg")
    report.add_argument("--out", type=Path, default=None,
                        help="write metrics + series (JSON)")
    report.set_defaults(func=cmd_report)
    return parser


# --- size ----------------------------------------------------------------------

def cmd_size(args) -> int:
    config = load_config(args.config)
    geom, overrides = config.geometry, config.overrides
    fluid = hydro.FRESH_WATER
    design = args.speed if args.speed is not None \
        else config.thruster.rated_speed
    if design <= 0:
        raise SchemaError("design speed must be positive")

    curve = hydro.drag_curve(geom, fluid, design / 7.0, design, 7,
                             overrides=overrides)
    design_point = curve[-1]
    plan = hydro.thrust_plan(design_point.total,
                             config.thruster.moving_efficiency,
                             args.safety, config.thruster.max_static_thrust)
    tops = {}
    for count in sorted({2, config.thruster_count, plan.thruster_count * 1}):
        if count < 1:
            continue
        try:
            tops[count] = equilibrium_speed(count, config.thruster, geom,
                                            overrides=overrides,
                                            body=config.body)
        except NoEquilibrium:
            tops[count] = None
    endurance = cruise_endurance_hours(config, args.cruise)

    payload = {
        "name": config.name,
        "hull": dataclasses.asdict(geom),
        "design_speed": design,
        "curve": [dataclasses.asdict(point) for point in curve],
        "sizing": dataclasses.asdict(plan),
        "top_speed": {str(k): v for k, v in tops.items()},
        "endurance_hours": {"speed": args.cruise, "hours": endurance},
    }
    if args.json:
        text = json.dumps(payload, indent=2, sort_keys=True)
    else:
        text = "\n".join(_size_lines(config, curve, plan, tops,
                                     args.cruise, endurance))
    print(text)
    if args.out is not None:
        args.out.write_text(text + "\n")
    return EXIT_OK


def _size_lines(config, curve, plan, tops, cruise, endurance):
    geom = config.geometry
    yield (f"{config.name}: L={geom.length:.2f} m  B={geom.beam:.2f} m  "
           f"T={geom.draft:.2f} m  disp={geom.displaced_volume:.3f} m3  "
           f"mass={geom.mass:.1f} kg")
    point = curve[-1]
    yield (f"coefficients at {point.speed:.2f} m/s: "
           f"S={point.wetted_area:.3f} m2  K={point.form_factor_k:.4f}  "
           f"Cp={point.prismatic_cp:.4f}  Cm={point.midship_cm:.4f}  "
           f"Cwp={point.waterplane_cwp:.4f}")
    yield ""
    yield ("speed m/s        Rn        Fn      1000Cf    "
           "Rv N      Rw N     total N")
    for p in curve:
        yield (f"{p.speed:9.3f} {p.reynolds:11.3e} {p.froude:9.4f} "
               f"{p.friction_cf * 1e3:9.5f} {p.viscous:9.2f} "
               f"{p.wave:9.2f} {p.total:11.2f}")
    yield ""
    yield (f"sizing at {point.speed:.2f} m/s: resistance "
           f"{plan.active_thrust:.2f} N / eff {plan.moving_efficiency:.2f} "
           f"= {plan.nominal_thrust:.2f} N nominal; x{plan.safety_factor:.2f}"
           f" safety = {plan.final_thrust:.2f} N"
           f" -> {plan.thruster_count} x "
           f"{plan.unit_static_thrust:.1f} N thrusters")
    for count, speed in sorted(tops.items()):
        shown = "no equilibrium" if speed is None else f"{speed:.2f} m/s"
        yield f"top speed with {count} thrusters: {shown}"
    yield (f"endurance at {cruise:.2f} m/s cruise: "
           f"{endurance:.2f} h ({endurance * 60:.0f} min)")


# --- sim -----------------------------------------------------------------------

def cmd_sim(args) -> int:
    config = load_config(args.config)
    log = run_mission(config, seed=args.seed)
    metrics = compute_metrics(log)
    if args.out is not None:
        export_jsonl(log, args.out)
    if args.csv is not None:
        export_csv(log, args.csv)
    if args.plot is not None:
        export_plotdata(log, args.plot)
    for line in _metric_lines(log.meta, metrics):
        print(line)
    return EXIT_FAILSAFE if metrics.terminal == "failsafe" else EXIT_OK


def _metric_lines(meta, metrics):
    yield (f"{meta['name']}: {metrics.terminal} after "
           f"{metrics.duration:.1f} s, {metrics.distance:.1f} m sailed, "
           f"{metrics.energy_wh:.2f} Wh used "
           f"(battery {metrics.battery_final * 100:.1f}%)")
    if metrics.speed_rmse is not None:
        yield (f"steady legs: speed RMSE {metrics.speed_rmse:.3f} m/s, "
               f"heading RMSE {metrics.heading_rmse:.2f} deg")
    for leg in metrics.cross_track:
        arrived = (f"arrived in {leg.time_to_arrive:.1f} s"
                   if leg.arrived else "not reached")
        yield (f"leg {leg.index}: cross-track mean {leg.mean:.2f} m "
               f"max {leg.max:.2f} m ({arrived})")
    if metrics.loiter_max_excursion is not None:
        yield (f"loiter: max excursion "
               f"{metrics.loiter_max_excursion:.2f} m")


# --- serve ---------------------------------------------------------------------

def cmd_serve(args) -> int:
    config = load_config(args.config)
    tcp = args.tcp_port if args.tcp_port is not None \
        else config.service.tcp_port
    ws = args.ws_port if args.ws_port is not None else config.service.ws_port
    print(f"{config.name}: frames on tcp://{args.host}:{tcp} and "
          f"ws://{args.host}:{ws}/link  (timescale {args.timescale:g})")
    if args.ui is not None:
        print(f"browser console at http://{args.host}:{ws}/ui/")
    reason = serve(config, tcp_port=tcp, ws_port=ws,
                   timescale=args.timescale, seed=args.seed,
                   ui_root=args.ui, host=args.host)
    if reason is not None:
        print(f"mission terminal: {reason}")
    return EXIT_FAILSAFE if reason == "failsafe" else EXIT_OK


# --- report --------------------------------------------------------------------

def cmd_report(args) -> int:
    log = load_jsonl(args.log)
    metrics = compute_metrics(log, settle=args.settle)
    if args.out is not None:
        export_plotdata(log, args.out)
    for line in _metric_lines(log.meta, metrics):
        print(line)
    events = [e for e in log.events if e.kind in ("mode", "terminal")]
    for event in events:
        print(f"  t={event.t:8.1f}  {event.label}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as error:
        print(f"config error: {error}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except RangeError as error:
        print(f"config error: {error}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except FileNotFoundError as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except KeyboardInterrupt:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
