"""Operator entry point: train, simulate, serve, oracle-table, plus thin
HTTP clients (status, override) for a running service.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys

from .controller import ControllerMode, CycleConfig
from .mlp import (
    DEFAULT_RANGES,
    TrainedModel,
    TrainingConfig,
    TrainingDiverged,
    WeightsError,
    generate_dataset,
    oracle_agreement,
    train,
)
from .rulebase import PumpDuty, rule_table
from .simulator import ClimateProfile, PlantParams, SimState, run_closed_loop
from .events import encode_log

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _env_default(flag_env: str, fallback):
    return os.environ.get(flag_env, fallback)


def build_parser() -> _Parser:
    parser = _Parser(prog="irrigation", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train the pump network against the rule base")
    p_train.add_argument("--grid", type=int, default=11, help="training grid points per axis")
    p_train.add_argument("--eval-grid", type=int, default=13, help="held-out grid points per axis")
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--lr", type=float, default=TrainingConfig.learning_rate)
    p_train.add_argument("--epochs", type=int, default=TrainingConfig.epochs)
    p_train.add_argument("--out", required=True, help="weights JSON output path")
    p_train.add_argument("--json", action="store_true", help="machine-parseable report")

    p_sim = sub.add_parser("simulate", help="closed-loop run against the plant simulator")
    p_sim.add_argument("--mode", choices=["auto", "rule"], default="rule")
    p_sim.add_argument("--weights", help="weights JSON (required for auto mode)")
    p_sim.add_argument("--duration", type=float, default=3600.0, help="simulated seconds")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--moisture", type=float, default=5.0, help="initial soil moisture %%")
    p_sim.add_argument("--t-mean", type=float, default=25.0)
    p_sim.add_argument("--t-amp", type=float, default=10.0)
    p_sim.add_argument("--h-mean", type=float, default=60.0)
    p_sim.add_argument("--h-amp", type=float, default=20.0)
    p_sim.add_argument("--out", required=True, help="NDJSON event log output path")
    p_sim.add_argument("--json", action="store_true")

    p_serve = sub.add_parser("serve", help="run the telemetry service")
    p_serve.add_argument("--port", type=int, default=None, help="HTTP/WebSocket port")
    p_serve.add_argument("--sensor-port", type=int, default=None, help="TCP sensor port")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--log", default=None, help="event log path")
    p_serve.add_argument("--mode", choices=["auto", "rule"], default=None)
    p_serve.add_argument("--weights", default=None)

    p_table = sub.add_parser("oracle-table", help="print all 27 band combinations")
    p_table.add_argument("--json", action="store_true")

    p_status = sub.add_parser("status", help="fetch /status from a running service")
    p_status.add_argument("--url", default="http://127.0.0.1:8000")

    p_override = sub.add_parser("override", help="send a manual pump override")
    p_override.add_argument("--url", default="http://127.0.0.1:8000")
    p_override.add_argument("--duty", choices=["full", "half", "off"], required=True)

    return parser


def cmd_train(args) -> int:
    if args.grid < 2:
        raise UsageError("--grid must be at least 2")
    if args.eval_grid < 2:
        raise UsageError("--eval-grid must be at least 2")
    dataset = generate_dataset(args.grid, DEFAULT_RANGES)
    config = TrainingConfig(learning_rate=args.lr, epochs=args.epochs, seed=args.seed)
    weights, history = train(dataset, config)
    agreement = oracle_agreement(weights, args.eval_grid, DEFAULT_RANGES)
    TrainedModel(weights=weights, ranges=DEFAULT_RANGES, seed=args.seed).save(args.out)
    report = {
        "rows": len(dataset),
        "epochs_run": len(history),
        "final_loss": history[-1],
        "oracle_agreement": agreement,
        "weights_path": args.out,
    }
    if args.json:
        print(json.dumps(report))
    else:
        print(f"trained on {report['rows']} rows in {report['epochs_run']} epochs")
        print(f"final loss {report['final_loss']:.6f}")
        print(
            f"oracle agreement on {args.eval_grid}^3 held-out grid: {agreement * 100:.2f}%"
        )
        print(f"weights written to {args.out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.duration <= 0:
        raise UsageError("--duration must be positive")
    weights = None
    if args.mode == "auto":
        if not args.weights:
            raise UsageError("auto mode requires --weights")
        model = TrainedModel.load(args.weights)
        weights, ranges = model.weights, model.ranges
    else:
        ranges = DEFAULT_RANGES
    climate = ClimateProfile(args.t_mean, args.t_amp, args.h_mean, args.h_amp)
    state = SimState.create(args.moisture, climate, seed=args.seed)
    params = PlantParams(seed=args.seed)
    mode = ControllerMode.auto() if args.mode == "auto" else ControllerMode.rule_only()
    events = run_closed_loop(
        state, params, CycleConfig(), mode, args.duration, weights, ranges
    )
    with open(args.out, "w") as fh:
        fh.write(encode_log(events))
    pump_ons = sum(
        1 for e in events if e.__class__.__name__ == "PumpStateChanged" and e.on
    )
    report = {"events": len(events), "pump_activations": pump_ons, "log_path": args.out}
    if args.json:
        print(json.dumps(report))
    else:
        print(f"{report['events']} events, {pump_ons} pump activations -> {args.out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import IrrigationService, create_app, start_sensor_server

    port = args.port if args.port is not None else int(_env_default("IRRIGATION_PORT", 8000))
    sensor_port = (
        args.sensor_port
        if args.sensor_port is not None
        else int(_env_default("IRRIGATION_SENSOR_PORT", 7700))
    )
    log_path = args.log if args.log is not None else _env_default("IRRIGATION_LOG", None)
    mode_name = args.mode if args.mode is not None else _env_default("IRRIGATION_MODE", "rule")
    weights_path = (
        args.weights if args.weights is not None else _env_default("IRRIGATION_WEIGHTS", None)
    )

    weights = None
    ranges = DEFAULT_RANGES
    if mode_name == "auto":
        if not weights_path:
            raise UsageError("auto mode requires --weights or IRRIGATION_WEIGHTS")
        model = TrainedModel.load(weights_path)
        weights, ranges = model.weights, model.ranges
    mode = ControllerMode.auto() if mode_name == "auto" else ControllerMode.rule_only()
    service = IrrigationService(mode=mode, weights=weights, ranges=ranges, log_path=log_path)
    app = create_app(service)

    async def _run() -> None:
        sensor_server = await start_sensor_server(service, args.host, sensor_port)
        config = uvicorn.Config(app, host=args.host, port=port, log_level="info")
        server = uvicorn.Server(config)
        try:
            await server.serve()
        finally:
            sensor_server.close()
            await sensor_server.wait_closed()
            service.close()

    asyncio.run(_run())
    return EXIT_OK


def cmd_oracle_table(args) -> int:
    rows = rule_table()
    if args.json:
        print(
            json.dumps(
                [
                    {"temperature": t.value, "humidity": h.value, "soil": m.value, "duty": d.value}
                    for (t, h, m), d in rows
                ]
            )
        )
    else:
        print(f"{'temperature':<12} {'humidity':<12} {'soil':<12} duty")
        for (t, h, m), duty in rows:
            print(f"{t.value:<12} {h.value:<12} {m.value:<12} {duty.value}")
    counts = {d: sum(1 for _, duty in rows if duty == d) for d in PumpDuty}
    if not args.json:
        print(
            f"-- full: {counts[PumpDuty.FULL]}, half: {counts[PumpDuty.HALF]}, "
            f"off: {counts[PumpDuty.OFF]}"
        )
    return EXIT_OK


def cmd_status(args) -> int:
    import httpx

    try:
        response = httpx.get(f"{args.url}/status", timeout=5.0)
        response.raise_for_status()
    except httpx.HTTPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(json.dumps(response.json(), indent=2))
    return EXIT_OK


def cmd_override(args) -> int:
    import httpx

    try:
        response = httpx.post(
            f"{args.url}/override", json={"duty": args.duty, "source": "cli"}, timeout=5.0
        )
        response.raise_for_status()
    except httpx.HTTPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(json.dumps(response.json()))
    return EXIT_OK


_COMMANDS = {
    "train": cmd_train,
    "simulate": cmd_simulate,
    "serve": cmd_serve,
    "oracle-table": cmd_oracle_table,
    "status": cmd_status,
    "override": cmd_override,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (WeightsError, TrainingDiverged, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
