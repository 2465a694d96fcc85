"""Command line front door.

    patrol serve     run the HTTP API over a shared channel directory
    patrol robot     run the patrol robot against the same directory
    patrol scenario  replay a scripted end-to-end run (see scenario.py)
    patrol advise    print the current advisory for a route

Channel directory and database default to $PATROL_CHANNEL_DIR and
$PATROL_DB; flags override. Map, world and detection model default to
the packaged demo assets.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
import threading
from importlib import resources
from pathlib import Path

from .channel import SyncChannel, Timeout, UPDATE_FILE
from .datastore import Datastore
from .engine import patrol_daemon
from .perception import DetectionModel, WorldState
from .scenario import Scenario, ScriptError
from .semantic_map import SemanticMap, load_map
from .service import PatrolService


def _asset_text(name: str) -> str:
    return resources.files("robot_patrol").joinpath("assets", name).read_text("utf-8")


def _read(path: str | None, default_asset: str) -> str:
    if path is None:
        return _asset_text(default_asset)
    return Path(path).read_text("utf-8")


def _load_model(args) -> DetectionModel:
    if args.model:
        model = DetectionModel.from_config(Path(args.model).read_text("utf-8"))
    else:
        model = DetectionModel.perfect()
    if args.seed is not None:
        model = dataclasses.replace(model, seed=args.seed)
    return model


def _channel(args) -> SyncChannel:
    root = args.channel or os.environ.get("PATROL_CHANNEL_DIR") or "./patrol-channel"
    Path(root).mkdir(parents=True, exist_ok=True)
    return SyncChannel(root)


def _service(args, world_map: SemanticMap) -> PatrolService:
    db = args.db or os.environ.get("PATROL_DB") or ":memory:"
    return PatrolService(Datastore(db), _channel(args), world_map)


def _update_poller(service: PatrolService, stop: threading.Event) -> None:
    seen = 0
    while not stop.is_set():
        try:
            seen = service.channel.await_change(UPDATE_FILE, seen, timeout=0.5)
        except Timeout:
            continue
        service.sync_updates()


def _cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    world_map = load_map(_read(args.map, "demo_map.txt"))
    service = _service(args, world_map)
    stop = threading.Event()
    poller = threading.Thread(
        target=_update_poller, args=(service, stop), name="update-poller", daemon=True
    )
    poller.start()
    try:
        uvicorn.run(create_app(service), host=args.host, port=args.port, log_level="info")
    finally:
        stop.set()
        poller.join(timeout=2.0)
    return 0


def _cmd_robot(args) -> int:
    world_map = load_map(_read(args.map, "demo_map.txt"))
    world = WorldState.parse(_read(args.world, "demo_world.txt"))
    patrol_daemon(
        _channel(args),
        world_map,
        world,
        _load_model(args),
        once=args.once,
        log_fn=lambda text: print(text, end="" if text.endswith("\n") else "\n"),
    )
    return 0


def _cmd_scenario(args) -> int:
    world_map = load_map(_read(args.map, "demo_map.txt"))
    world = WorldState.parse(_read(args.world, "demo_world.txt"))
    script = _read(args.script, "elevator_outage.script") if args.script else _asset_text(
        "elevator_outage.script")
    scenario = Scenario(world_map, world, _load_model(args))
    try:
        result = scenario.run(script)
    except ScriptError as exc:
        print(f"script error: {exc}", file=sys.stderr)
        return 2
    for line in result.transcript:
        print(line)
    return result.exit_code


def _cmd_advise(args) -> int:
    world_map = load_map(_read(args.map, "demo_map.txt"))
    service = _service(args, world_map)
    advisory = service.advisory([t for t in args.route.split(",") if t])
    for sentence in advisory["sentences"]:
        print(sentence)
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="patrol", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model=False):
        p.add_argument("--map", help="map file (default: packaged demo map)")
        p.add_argument("--channel", help="sync channel directory ($PATROL_CHANNEL_DIR)")
        if model:
            p.add_argument("--world", help="world file (default: packaged demo world)")
            p.add_argument("--model", help="detection model config file")
            p.add_argument("--seed", type=int, help="override the model seed")

    serve = sub.add_parser("serve", help="run the HTTP API")
    common(serve)
    serve.add_argument("--db", help="sqlite database path ($PATROL_DB, default in-memory)")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(fn=_cmd_serve)

    robot = sub.add_parser("robot", help="run the patrol robot")
    common(robot, model=True)
    robot.add_argument("--once", action="store_true", help="handle one mission, then exit")
    robot.set_defaults(fn=_cmd_robot)

    scenario = sub.add_parser("scenario", help="replay a scripted run")
    common(scenario, model=True)
    scenario.add_argument("script", nargs="?", help="script file (default: packaged demo)")
    scenario.set_defaults(fn=_cmd_scenario)

    advise = sub.add_parser("advise", help="print the advisory for a route")
    common(advise)
    advise.add_argument("--db", help="sqlite database path ($PATROL_DB)")
    advise.add_argument("route", help="comma-separated areas, e.g. corridor_1,elevator_1")
    advise.set_defaults(fn=_cmd_advise)

    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
