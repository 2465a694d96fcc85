"""The robot's mission loop.

run_mission executes one patrol in simulation: select the checkpoints
the mission needs, order them with the tour planner, observe at each
stop, judge the mission's events, and assemble the outgoing update
(event verdicts keep mission numbers; obstacle rows are renumbered
1..n in visit order). patrol_daemon wraps that in the channel loop:
wait for a new mission file, patrol, publish the update.

A malformed mission file never kills the loop: the robot publishes an
empty update and logs the parse failure, keeping await-based callers
unblocked.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from datetime import datetime, timezone

from .channel import MISSION_FILE, UPDATE_FILE, SyncChannel, Timeout
from .perception import DetectionModel, WorldState, observe, summarize_obstacles, verify_event
from .protocol import (
    DEFAULT_REGISTRY,
    EventResult,
    KeywordRegistry,
    MissionMessage,
    ObstacleEntry,
    ProtocolError,
    UpdateMessage,
    parse_mission,
    serialize_update,
)
from .semantic_map import SemanticMap, mission_checkpoints, plan_patrol, plan_path


@dataclass(frozen=True)
class PatrolLog:
    patrol_id: int
    mission_revision: int
    visits: tuple  # (checkpoint id, arrival step, detections count)
    total_steps: int
    started_at: str
    finished_at: str


def format_patrol_log(log: PatrolLog) -> str:
    lines = [
        f"patrol {log.patrol_id} mission_revision={log.mission_revision}"
        f" total_steps={log.total_steps}"
        f" started={log.started_at} finished={log.finished_at}"
    ]
    for cp_id, step, detections in log.visits:
        lines.append(f"visit {cp_id} step={step} detections={detections}")
    return "\n".join(lines) + "\n"


def run_mission(
    world_map: SemanticMap,
    world: WorldState,
    mission: MissionMessage,
    model: DetectionModel,
    patrol_id: int,
    mission_revision: int | None = None,
    now: datetime | None = None,
    registry: KeywordRegistry = DEFAULT_REGISTRY,
) -> tuple[UpdateMessage, PatrolLog]:
    """One full patrol; deterministic for fixed (inputs, patrol_id)."""
    if now is None:
        now = datetime.now(timezone.utc)
    stops = mission_checkpoints(world_map, mission)
    tour, total_steps = plan_patrol(world_map, stops)

    # Events grouped by the checkpoint that will judge them.
    events_at: dict[str, list] = {}
    for event in mission.events:
        cp = world_map.event_checkpoint_for(event.location)
        events_at.setdefault(cp.id, []).append(event)

    results: list[EventResult] = []
    obstacle_rows: list[ObstacleEntry] = []
    visits = []
    position = world_map.home
    step = 0
    for cp in tour:
        step += plan_path(world_map, position, cp.cell).length
        position = cp.cell
        detections = observe(world, cp, model, patrol=patrol_id)
        visits.append((cp.id, step, len(detections)))
        for event in events_at.get(cp.id, ()):
            results.append(EventResult(event.number, verify_event(detections, event.keyword, registry)))
        if cp.kind == "regular":
            for entry in summarize_obstacles(detections, cp.observes):
                obstacle_rows.append(
                    ObstacleEntry(
                        len(obstacle_rows) + 1,
                        entry.obstacle_type,
                        entry.count,
                        entry.location,
                    )
                )
    results.sort(key=lambda r: r.number)

    update = UpdateMessage(tuple(results), tuple(obstacle_rows))
    log = PatrolLog(
        patrol_id,
        mission_revision if mission_revision is not None else patrol_id,
        tuple(visits),
        total_steps,
        now.isoformat(),
        now.isoformat(),
    )
    return update, log


def patrol_daemon(
    channel: SyncChannel,
    world_map: SemanticMap,
    world: WorldState,
    model: DetectionModel,
    stop: threading.Event | None = None,
    once: bool = False,
    poll_timeout: float = 0.25,
    registry: KeywordRegistry = DEFAULT_REGISTRY,
    log_fn=None,
) -> None:
    """Process missions until stopped (or once). One update per consumed
    mission revision; the revision doubles as the patrol id."""
    seen = 0
    while stop is None or not stop.is_set():
        try:
            revision = channel.await_change(MISSION_FILE, seen, timeout=poll_timeout)
        except Timeout:
            if once:
                continue  # --once still waits for its one mission
            continue
        content, revision, _ = channel.fetch_latest(MISSION_FILE)
        seen = revision
        try:
            mission = parse_mission(content, registry)
        except ProtocolError as exc:
            if log_fn:
                log_fn(f"mission revision {revision} unreadable: {exc}")
            channel.publish(UPDATE_FILE, serialize_update(UpdateMessage()))
            if once:
                return
            continue
        update, log = run_mission(
            world_map, world, mission, model, patrol_id=revision, mission_revision=revision
        )
        channel.publish(UPDATE_FILE, serialize_update(update))
        if log_fn:
            log_fn(format_patrol_log(log))
        if once:
            return
