"""Command-line front end.

Subcommands: serve (network service plus simulator), simulate (headless
scripted run), replay, train, match (one-shot window against templates),
score (recompute a report from an event log). Exit codes: 0 success,
1 usage error, 2 data error, 3 protocol error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ControlConfig, load_config
from .errors import DataError, ProtocolError, UsageError
from .gesture import canonical_templates, load_templates
from .imu import SignalWindow, read_trace
from .runner import (
    DEFAULT_TICK_HZ,
    DEFAULT_TIMEOUT_S,
    EventLog,
    load_event_log,
    replay,
    report_from_log,
    run_scenario,
    train,
)

DEFAULT_PORT = 7750
PORT_ENV_VAR = "WRISTDRIVE_PORT"


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract wants 1
    def error(self, message):
        raise UsageError(message)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="control config file (JSON)")
    sub.add_argument("--templates", help="template store file (JSON)")


def _load_config(args) -> ControlConfig:
    return load_config(args.config) if args.config else ControlConfig()


def _load_templates(args):
    return load_templates(args.templates) if args.templates else canonical_templates()


def build_parser() -> _Parser:
    parser = _Parser(prog="wristdrive", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = subs.add_parser("simulate", help="run a scenario headless with the scripted pilot")
    p.add_argument("--scenario", default="slalom", help="built-in name or scenario file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tick-hz", type=float, default=DEFAULT_TICK_HZ)
    p.add_argument("--timeout-s", type=float, default=DEFAULT_TIMEOUT_S)
    p.add_argument("--log", help="write the event log here, one record per line")
    _add_common(p)
    p.set_defaults(func=_cmd_simulate)

    p = subs.add_parser("replay", help="run a recorded trace through the pipeline")
    p.add_argument("trace", help="sample trace file, one record per line")
    _add_common(p)
    p.set_defaults(func=_cmd_replay)

    p = subs.add_parser("train", help="build templates from a labeled trace")
    p.add_argument("trace")
    p.add_argument("sidecar", help="epoch boundary file, one interval per line")
    p.add_argument("-o", "--out", required=True, help="template store to write")
    p.add_argument("--rate-hz", type=float, default=DEFAULT_TICK_HZ)
    p.set_defaults(func=_cmd_train)

    p = subs.add_parser("match", help="score a trace's final window against templates")
    p.add_argument("trace")
    _add_common(p)
    p.set_defaults(func=_cmd_match)

    p = subs.add_parser("score", help="recompute a run report from an event log")
    p.add_argument("log")
    p.set_defaults(func=_cmd_score)

    p = subs.add_parser("serve", help="serve the live stack over TCP and HTTP")
    p.add_argument("--scenario", default="slalom")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tick-hz", type=float, default=DEFAULT_TICK_HZ)
    p.add_argument(
        "--port",
        type=int,
        default=None,
        help=f"binary service port (default {DEFAULT_PORT}, or ${PORT_ENV_VAR})",
    )
    p.add_argument("--http-port", type=int, default=None, help="console port (binary port + 1 when omitted)")
    p.add_argument("--latency-ms", type=float, default=0.0, help="injected one-way link delay")
    p.add_argument("--speed", type=float, default=1.0, help="simulation speed multiplier")
    _add_common(p)
    p.set_defaults(func=_cmd_serve)

    return parser


def _cmd_simulate(args) -> int:
    log = EventLog()
    report = run_scenario(
        args.scenario,
        _load_config(args),
        _load_templates(args),
        seed=args.seed,
        tick_hz=args.tick_hz,
        timeout_s=args.timeout_s,
        log=log,
    )
    if args.log:
        log.write(args.log)
    print(report.to_json())
    return 0


def _cmd_replay(args) -> int:
    result = replay(args.trace, _load_templates(args), _load_config(args))
    print(result.to_json())
    return 0


def _cmd_train(args) -> int:
    templates = train(args.trace, args.sidecar, args.out, rate_hz=args.rate_hz)
    doc = {
        "out": args.out,
        "templates": [
            {
                "class": t.gesture.label,
                "training_count": t.training_count,
                "length": len(t),
            }
            for t in templates
        ],
    }
    print(json.dumps(doc, sort_keys=True))
    return 0


def _cmd_match(args) -> int:
    from .gesture import match_window

    config = _load_config(args)
    templates = _load_templates(args)
    samples = read_trace(args.trace)
    shortest = min(len(t) for t in templates)
    if len(samples) < shortest:
        raise DataError(
            f"trace holds {len(samples)} samples; the shortest template needs {shortest}"
        )
    window = SignalWindow(capacity=max(len(t) for t in templates))
    for s in samples:
        window.push(s)
    decision = match_window(
        window,
        templates,
        threshold=config.gesture_threshold,
        refractory_s=config.refractory_s,
        last_fire_us=None,
    )
    doc = {
        "gesture": decision.gesture.label if decision.gesture is not None else None,
        "score": round(decision.score, 9),
        "t_us": decision.t_us,
    }
    print(json.dumps(doc, sort_keys=True))
    return 0


def _cmd_score(args) -> int:
    report = report_from_log(load_event_log(args.log))
    print(report.to_json())
    return 0


def _cmd_serve(args) -> int:
    from .serve import serve

    return serve(args)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            raise UsageError("a subcommand is required")
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ProtocolError as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
