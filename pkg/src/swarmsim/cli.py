"""Command-line entry points: run, replay, serve, report."""

from __future__ import annotations

import argparse
import sys
import time as wallclock

from .engine import FAULT_KINDS, FaultInjection, OperatorCommand, SimConfig, Simulation
from .events import EventLog
from .gateway import Gateway, ReplayGateway, replay
from .scenario import parse_scenario
from .scoring import score_mission


def _load_scenario(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def _parse_fault(text: str) -> FaultInjection:
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError("fault spec is Kind:drone[:time]")
    kind, target = parts[0], parts[1]
    if kind not in FAULT_KINDS:
        raise argparse.ArgumentTypeError(f"fault kind must be one of {FAULT_KINDS}")
    t = float(parts[2]) if len(parts) == 3 else 0.0
    return FaultInjection(time=t, kind=kind, target=target)


def _parse_cmd(text: str) -> OperatorCommand:
    # t:NAME:target[:x,y,z]
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise argparse.ArgumentTypeError("command spec is t:NAME:target[:x,y,z]")
    point = None
    if len(parts) == 4:
        point = tuple(float(v) for v in parts[3].split(","))
        if len(point) != 3:
            raise argparse.ArgumentTypeError("point must be x,y,z")
    return OperatorCommand(name=parts[1], target=parts[2], point=point, at=float(parts[0]))


def cmd_run(args: argparse.Namespace) -> int:
    spec = _load_scenario(args.scenario)
    config = SimConfig(
        scenario=spec,
        seed=args.seed,
        loss_base=args.loss_base,
        fault_injections=list(args.fault or ()),
        command_script=list(args.inject_cmd or ()),
    )
    sim = Simulation(config)
    started = wallclock.monotonic()
    log, report = sim.run()
    elapsed = wallclock.monotonic() - started
    if args.log:
        log.save(args.log)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(report.to_json() + "\n")
    if not args.quiet:
        print(f"outcome: {report.outcome}  sim_time: {sim.time:.1f}s  wall: {elapsed:.2f}s")
        for t, name in report.timeline:
            print(f"  {t:8.2f}s  {name}")
        for sid, tasks in report.per_swarm.items():
            summary = ", ".join(f"{t.task} {t.actual}/{t.desired}" for t in tasks)
            print(f"  {sid}: {summary}")
    return 0 if report.outcome == "Complete" else 1


def cmd_replay(args: argparse.Namespace) -> int:
    log = EventLog.load(args.evlog)
    if args.serve:
        gw = ReplayGateway(log, args.serve, speed=args.speed)
        print(f"replaying on ws://127.0.0.1:{args.serve} at {args.speed}x")
        gw.run()
        return 0
    count = replay(log, args.speed, sink=lambda frame: print(frame), realtime=args.realtime)
    print(f"# {count} frames", file=sys.stderr)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    spec = _load_scenario(args.scenario)
    config = SimConfig(scenario=spec, seed=args.seed, loss_base=args.loss_base)
    sim = Simulation(config)
    gw = Gateway(sim, args.port, speed=args.speed)
    print(f"serving {args.scenario} on ws://127.0.0.1:{args.port} at {args.speed}x")
    gw.serve_until_done()
    log, report = sim.log, score_mission(sim.log, spec)
    if args.log:
        log.save(args.log)
    print(f"outcome: {report.outcome}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    log = EventLog.load(args.evlog)
    spec = _load_scenario(args.scenario)
    report = score_mission(log, spec)
    print(report.to_json())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swarmsim", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario headless, as fast as possible")
    run.add_argument("scenario")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--loss-base", type=float, default=None)
    run.add_argument("--fault", action="append", type=_parse_fault, metavar="Kind:drone[:t]")
    run.add_argument(
        "--inject-cmd", action="append", type=_parse_cmd, metavar="t:NAME:target[:x,y,z]"
    )
    run.add_argument("--log", help="write the event log here")
    run.add_argument("--report", help="write the mission report JSON here")
    run.add_argument("--quiet", action="store_true")
    run.set_defaults(func=cmd_run)

    rep = sub.add_parser("replay", help="re-emit telemetry frames from an event log")
    rep.add_argument("evlog")
    rep.add_argument("--speed", type=float, default=1.0)
    rep.add_argument("--serve", type=int, metavar="PORT")
    rep.add_argument(
        "--no-realtime",
        dest="realtime",
        action="store_false",
        help="dump frames as fast as possible (stdout mode)",
    )
    rep.set_defaults(func=cmd_replay)

    srv = sub.add_parser("serve", help="run a scenario paced to wall clock with a live gateway")
    srv.add_argument("scenario")
    srv.add_argument("--port", type=int, required=True)
    srv.add_argument("--seed", type=int, default=None)
    srv.add_argument("--speed", type=float, default=1.0)
    srv.add_argument("--loss-base", type=float, default=None)
    srv.add_argument("--log", help="write the event log here when done")
    srv.set_defaults(func=cmd_serve)

    rpt = sub.add_parser("report", help="score a saved event log")
    rpt.add_argument("evlog")
    rpt.add_argument("scenario")
    rpt.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
