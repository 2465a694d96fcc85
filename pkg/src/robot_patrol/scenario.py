"""Line-oriented end-to-end scenario scripts.

A script drives one in-process instance of the whole pipeline (service,
store, channel, simulated robot) with a fixed virtual clock, so a run
is reproducible byte for byte. Directives, one per line, '#' comments:

    guest
    login <name> [maintenance]
    begin
    report obstacle <class> <count> <location>
    report event <keyword> <location>
    dispatch
    patrol
    world add <class> <location>
    world remove <class> <location>
    advise <area[,area...]>
    feedback last helpful|unhelpful
    assert update contains "<substring>"
    assert report last <pending|dispatched|verified|refuted>
    assert severity <area> <low|middle|high>
    assert overall <low|middle|high>
    assert event <area> <keyword> <active|inactive>
    assert points <name> <number>

The first failed assert stops the run with a nonzero exit code naming
the script line. Reports are made by the current session (a fresh
guest if none); `begin` opens a draft consumed by the next report.
"""

from __future__ import annotations

import shlex
import tempfile
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

from . import gamification
from .channel import MISSION_FILE, UPDATE_FILE, NotFound, SyncChannel
from .datastore import Datastore
from .engine import run_mission
from .perception import DetectionModel, WorldState
from .protocol import (
    DEFAULT_REGISTRY,
    ObstacleClass,
    SemanticLocation,
    parse_mission,
    serialize_update,
)
from .semantic_map import SemanticMap
from .service import PatrolService


class ScriptError(Exception):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


class SimClock:
    """Virtual UTC clock: starts 2025-01-01T00:00:00Z, +1s per reading."""

    def __init__(self):
        self._now = datetime(2025, 1, 1, tzinfo=timezone.utc)

    def __call__(self) -> datetime:
        current = self._now
        self._now += timedelta(seconds=1)
        return current


_SEVERITIES = ("low", "middle", "high")
_STATUSES = ("pending", "dispatched", "verified", "refuted")


@dataclass
class ScenarioResult:
    exit_code: int
    transcript: list


class Scenario:
    def __init__(
        self,
        world_map: SemanticMap,
        world: WorldState,
        model: DetectionModel,
        channel: SyncChannel | None = None,
        store: Datastore | None = None,
    ):
        self.world_map = world_map
        self.world = world
        self.model = model
        self.channel = channel or SyncChannel(tempfile.mkdtemp(prefix="patrol-channel-"))
        self.store = store or Datastore()
        self.service = PatrolService(self.store, self.channel, world_map, clock=SimClock())
        self.user_id: str | None = None
        self.user_name: str | None = None
        self.draft_id: str | None = None
        self.last_report: int | None = None
        self.last_advisory: dict | None = None

    # -- session helpers -------------------------------------------------

    def _current_user(self) -> str:
        if self.user_id is None:
            session = self.service.guest_session()
            self.user_id = session["user_id"]
            self.user_name = session["display_name"]
        return self.user_id

    def _take_draft(self) -> str | None:
        draft, self.draft_id = self.draft_id, None
        return draft

    # -- directive execution ----------------------------------------------

    def run(self, text: str) -> ScenarioResult:
        transcript: list[str] = []
        for lineno, raw in enumerate(text.split("\n"), start=1):
            try:
                # comments=True drops unquoted '#...' but keeps quoted '#'.
                tokens = shlex.split(raw, comments=True)
            except ValueError as exc:
                raise ScriptError(f"bad quoting: {exc}", lineno) from None
            if not tokens:
                continue
            try:
                outcome = self._execute(tokens, lineno)
            except ScriptError:
                raise
            except AssertionFailure as failure:
                transcript.append(f"assert failed at line {lineno}: {failure}")
                return ScenarioResult(1, transcript)
            except Exception as exc:
                raise ScriptError(f"{type(exc).__name__}: {exc}", lineno) from exc
            if outcome:
                transcript.extend(outcome)
        return ScenarioResult(0, transcript)

    def _execute(self, tokens: list, lineno: int) -> list:
        head = tokens[0]
        if head == "guest":
            session = self.service.guest_session()
            self.user_id = session["user_id"]
            self.user_name = session["display_name"]
            return [f"guest session {session['display_name']}"]
        if head == "login":
            if len(tokens) not in (2, 3) or (len(tokens) == 3 and tokens[2] != "maintenance"):
                raise ScriptError("usage: login <name> [maintenance]", lineno)
            session = self.service.login(tokens[1], maintenance=len(tokens) == 3)
            self.user_id = session["user_id"]
            self.user_name = session["display_name"]
            return [f"login {tokens[1]} ({session['points']} points)"]
        if head == "begin":
            result = self.service.begin_report(self._current_user())
            self.draft_id = result["draft_id"]
            return ["report draft opened"]
        if head == "report":
            return self._report(tokens, lineno)
        if head == "dispatch":
            result = self.service.dispatch()
            return [
                f"dispatch mission revision {result['mission_revision']}"
                f" ({result['events']} events, {result['obstacles']} obstacles)"
            ]
        if head == "patrol":
            return self._patrol()
        if head == "world":
            return self._world(tokens, lineno)
        if head == "advise":
            if len(tokens) != 2:
                raise ScriptError("usage: advise <area[,area...]>", lineno)
            route = [t for t in tokens[1].split(",") if t]
            self.last_advisory = self.service.advisory(route)
            return list(self.last_advisory["sentences"])
        if head == "feedback":
            if tokens[1:] and tokens[1] == "last" and tokens[2] in ("helpful", "unhelpful"):
                if self.last_report is None:
                    raise ScriptError("no report to give feedback on", lineno)
                result = self.service.feedback(self.last_report, tokens[2] == "helpful")
                return [f"feedback recorded, notified {result['notified']}"]
            raise ScriptError("usage: feedback last helpful|unhelpful", lineno)
        if head == "assert":
            self._assert(tokens[1:], lineno)
            return [f"ok: {' '.join(tokens)}"]
        raise ScriptError(f"unknown directive {head!r}", lineno)

    def _report(self, tokens: list, lineno: int) -> list:
        user = self._current_user()
        if len(tokens) == 5 and tokens[1] == "obstacle":
            try:
                count = int(tokens[3])
            except ValueError:
                raise ScriptError(f"bad count {tokens[3]!r}", lineno) from None
            result = self.service.submit_obstacle(
                user, tokens[2], count, tokens[4], draft_id=self._take_draft()
            )
        elif len(tokens) == 4 and tokens[1] == "event":
            result = self.service.submit_event(
                user, tokens[2], tokens[3], draft_id=self._take_draft()
            )
        else:
            raise ScriptError(
                "usage: report obstacle <class> <count> <location>"
                " | report event <keyword> <location>", lineno)
        self.last_report = result["report_id"]
        return [f"report {result['report_id']} submitted"]

    def _patrol(self) -> list:
        try:
            content, mission_revision, _ = self.channel.fetch_latest(MISSION_FILE)
        except NotFound:
            content, mission_revision = b"", 0
        mission = parse_mission(content, self.service.registry)
        update, _ = run_mission(
            self.world_map, self.world, mission, self.model,
            patrol_id=mission_revision, mission_revision=mission_revision,
            now=self.service.now(), registry=self.service.registry,
        )
        revision = self.channel.publish(UPDATE_FILE, serialize_update(update))
        self.service.sync_updates()
        return [
            f"patrol complete, update revision {revision}"
            f" ({len(update.event_results)} events, {len(update.obstacles)} obstacles)"
        ]

    def _world(self, tokens: list, lineno: int) -> list:
        if len(tokens) != 4 or tokens[1] not in ("add", "remove"):
            raise ScriptError("usage: world add|remove <class> <location>", lineno)
        cls = ObstacleClass.from_token(tokens[2])
        location = SemanticLocation.parse(tokens[3])
        if tokens[1] == "add":
            self.world.add(cls, location)
            return [f"world: added {cls.value} at {location}"]
        if not self.world.remove(cls, location):
            raise ScriptError(f"no {cls.value} at {location} to remove", lineno)
        return [f"world: removed {cls.value} at {location}"]

    # -- assertions ------------------------------------------------------

    def _assert(self, args: list, lineno: int) -> None:
        if not args:
            raise ScriptError("empty assert", lineno)
        kind = args[0]
        if kind == "update" and args[1:2] == ["contains"] and len(args) == 3:
            try:
                content, _, _ = self.channel.fetch_latest(UPDATE_FILE)
            except NotFound:
                raise AssertionFailure("no update has been published") from None
            if args[2] not in content.decode("utf-8"):
                raise AssertionFailure(
                    f"update does not contain {args[2]!r}; update is:\n{content.decode()!r}")
            return
        if kind == "report" and args[1:2] == ["last"] and len(args) == 3:
            if args[2] not in _STATUSES:
                raise ScriptError(f"bad status {args[2]!r}", lineno)
            if self.last_report is None:
                raise ScriptError("no report submitted yet", lineno)
            status = self.service.sync_and_get_report(self.last_report).status
            if status != args[2]:
                raise AssertionFailure(
                    f"report {self.last_report} is {status}, expected {args[2]}")
            return
        if kind == "severity" and len(args) == 3:
            if args[2] not in _SEVERITIES:
                raise ScriptError(f"bad severity {args[2]!r}", lineno)
            area = self._area_report(args[1])
            if area["severity"] != args[2]:
                raise AssertionFailure(
                    f"{args[1]} severity is {area['severity']}, expected {args[2]}")
            return
        if kind == "overall" and len(args) == 2:
            if args[1] not in _SEVERITIES:
                raise ScriptError(f"bad severity {args[1]!r}", lineno)
            if self.last_advisory is None:
                raise ScriptError("no advisory requested yet", lineno)
            if self.last_advisory["overall"] != args[1]:
                raise AssertionFailure(
                    f"overall severity is {self.last_advisory['overall']},"
                    f" expected {args[1]}")
            return
        if kind == "event" and len(args) == 4 and args[3] in ("active", "inactive"):
            self.service.sync_updates()
            _, events, _ = self.store.query_verified(SemanticLocation.parse(args[1]))
            active = any(e.keyword == args[2] and e.result == 1 for e in events)
            if active != (args[3] == "active"):
                raise AssertionFailure(
                    f"event {args[2]} at {args[1]} is"
                    f" {'active' if active else 'inactive'}, expected {args[3]}")
            return
        if kind == "points" and len(args) == 3:
            user = self.store.find_user_by_name(args[1])
            if user is None:
                raise AssertionFailure(f"no user named {args[1]!r}")
            total = gamification.total_points(self.store, user.user_id)
            if total != int(args[2]):
                raise AssertionFailure(
                    f"{args[1]} has {total} points, expected {args[2]}")
            return
        raise ScriptError(f"unknown assert form: {' '.join(args)}", lineno)

    def _area_report(self, location: str) -> dict:
        if self.last_advisory is not None:
            for area in self.last_advisory["areas"]:
                if area["location"] == location:
                    return area
        advisory = self.service.advisory([location])
        return advisory["areas"][0]


class AssertionFailure(Exception):
    pass


def run_scenario(
    world_map: SemanticMap,
    world: WorldState,
    script_text: str,
    model: DetectionModel | None = None,
    channel: SyncChannel | None = None,
    store: Datastore | None = None,
) -> ScenarioResult:
    scenario = Scenario(world_map, world, model or DetectionModel.perfect(), channel, store)
    return scenario.run(script_text)
