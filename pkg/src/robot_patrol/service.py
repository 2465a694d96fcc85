"""Application service: one object tying the store, the sync channel
and the map together for the HTTP API, the CLI and the scenario runner.

Reports come in here (validated against the map), missions go out to
the channel, robot updates get folded back in, and advisory /
leaderboard queries read the result. Every method takes its timestamps
from an injectable clock so scripted runs are fully deterministic.
"""

from __future__ import annotations

import secrets
import threading
from datetime import datetime, timedelta, timezone

from . import advisory as advisory_mod
from . import gamification
from .advisory import DEFAULT_TTL, UnknownLocation
from .channel import MISSION_FILE, UPDATE_FILE, NotFound, SyncChannel
from .datastore import Datastore, User
from .gamification import Action, GuestNotEligible
from .protocol import (
    DEFAULT_REGISTRY,
    EventRequest,
    KeywordRegistry,
    ObstacleClass,
    ObstacleEntry,
    SemanticLocation,
    UnknownKeyword,
    parse_update,
    serialize_mission,
)
from .semantic_map import NoEventCheckpoint, SemanticMap


class UnknownToken(Exception):
    pass


def _utc_now() -> datetime:
    return datetime.now(timezone.utc)


class PatrolService:
    def __init__(
        self,
        store: Datastore,
        channel: SyncChannel,
        world_map: SemanticMap,
        clock=None,
        registry: KeywordRegistry = DEFAULT_REGISTRY,
        ttl: timedelta = DEFAULT_TTL,
    ):
        self.store = store
        self.channel = channel
        self.world_map = world_map
        self.registry = registry
        self.ttl = ttl
        self._clock = clock or _utc_now
        self._sessions: dict[str, str] = {}
        self._dispatch_lock = threading.Lock()
        self._sync_lock = threading.Lock()
        self._areas = set(world_map.areas)
        # Obstacle rows refresh for every area a regular checkpoint watches.
        self._covered = {cp.observes for cp in world_map.regular_checkpoints}

    def now(self) -> datetime:
        return self._clock()

    # -- sessions --------------------------------------------------------

    def _issue_token(self, user_id: str) -> str:
        token = secrets.token_hex(16)
        self._sessions[token] = user_id
        return token

    def resolve_token(self, token: str) -> User:
        if token not in self._sessions:
            raise UnknownToken("unknown or expired session token")
        return self.store.get_user(self._sessions[token])

    def login(self, name: str, maintenance: bool = False) -> dict:
        """Name-based login; unknown names become registered users."""
        user = self.store.find_user_by_name(name) if name else None
        if user is None:
            category = "maintenance" if maintenance else "registered"
            user = self.store.create_user(name, category=category, now=self.now())
        points, badges, eligible = 0, [], user.category != "guest"
        if eligible:
            points, badges = gamification.record_action(
                self.store, user.user_id, Action.LOGIN, self.now()
            )
        return {
            "token": self._issue_token(user.user_id),
            "user_id": user.user_id,
            "display_name": user.display_name,
            "category": user.category,
            "points": points,
            "new_badges": badges,
            "eligible": eligible,
        }

    def guest_session(self) -> dict:
        guest = self.store.create_user("", category="guest", now=self.now())
        return {
            "token": self._issue_token(guest.user_id),
            "user_id": guest.user_id,
            "display_name": guest.display_name,
            "category": "guest",
            "points": 0,
            "new_badges": [],
            "eligible": False,
        }

    # -- reporting ---------------------------------------------------------

    def begin_report(self, user_id: str) -> dict:
        """Open a report draft; the start point lands here."""
        self.store.get_user(user_id)
        draft_id = f"d{secrets.token_hex(8)}"
        self.store.create_draft(draft_id, user_id, self.now().isoformat())
        points, badges, eligible = 0, [], True
        try:
            points, badges = gamification.record_action(
                self.store, user_id, Action.REPORT_STARTED, self.now()
            )
        except GuestNotEligible:
            eligible = False
        return {"draft_id": draft_id, "points": points, "new_badges": badges,
                "eligible": eligible}

    def _check_location(self, token: str) -> SemanticLocation:
        location = SemanticLocation.parse(token)
        if location not in self._areas:
            raise UnknownLocation(f"{location} is not an area on this map")
        return location

    def _complete_report(self, user_id: str, kind: str, payload, draft_id: str | None) -> dict:
        if draft_id is not None:
            existing = self.store.draft_report(draft_id)
            if existing is not None:
                # Replay of an already-submitted draft: same report, no
                # second scoring.
                return {
                    "report_id": existing,
                    "points": gamification.total_points(self.store, user_id),
                    "new_badges": [],
                    "eligible": self.store.get_user(user_id).category != "guest",
                    "replayed": True,
                }
        report_id = self.store.insert_report(user_id, kind, payload, self.now())
        if draft_id is not None:
            self.store.bind_draft(draft_id, report_id)
        points, badges, eligible = 0, [], True
        try:
            points, badges = gamification.record_action(
                self.store, user_id, Action.REPORT_COMPLETED, self.now(), ref=report_id
            )
        except GuestNotEligible:
            eligible = False
            points = 0
        return {"report_id": report_id, "points": points, "new_badges": badges,
                "eligible": eligible, "replayed": False}

    def submit_obstacle(self, user_id: str, class_token: str, count: int,
                        location_token: str, draft_id: str | None = None) -> dict:
        payload = ObstacleEntry(
            1, ObstacleClass.from_token(class_token), count,
            self._check_location(location_token),
        )
        return self._complete_report(user_id, "obstacle", payload, draft_id)

    def submit_event(self, user_id: str, keyword: str, location_token: str,
                     draft_id: str | None = None) -> dict:
        if keyword not in self.registry:
            raise UnknownKeyword(f"unknown event keyword {keyword!r}")
        location = self._check_location(location_token)
        if self.world_map.event_checkpoint_for(location) is None:
            raise NoEventCheckpoint(f"no event checkpoint observes {location}")
        payload = EventRequest(1, keyword, location)
        return self._complete_report(user_id, "event", payload, draft_id)

    # -- mission round trip --------------------------------------------------

    def dispatch(self) -> dict:
        """Build a mission from pending reports and publish it."""
        with self._dispatch_lock:
            self.sync_updates()
            mission, mapping = self.store.build_mission(self.now())
            revision = self.channel.publish(MISSION_FILE, serialize_mission(mission))
            return {
                "mission_id": mapping.mission_id,
                "mission_revision": revision,
                "events": len(mission.events),
                "obstacles": len(mission.obstacles),
            }

    def sync_updates(self) -> int:
        """Fold any unseen robot update into the store; returns how many
        update revisions were applied (0 or 1 — the channel keeps only
        the latest)."""
        with self._sync_lock:
            try:
                content, revision, _ = self.channel.fetch_latest(UPDATE_FILE)
            except NotFound:
                return 0
            last_applied, _ = self.store.last_patrol()
            if revision <= last_applied:
                return 0
            update = parse_update(content)
            mapping = self.store.latest_mission()
            if mapping is None:
                return 0
            self.store.apply_update(update, mapping, self.now(), self._covered, revision)
            self._refresh_reporter_badges(mapping)
            return 1

    def _refresh_reporter_badges(self, mapping) -> None:
        reporters = set()
        for slot in mapping.events.values():
            if slot.report_id is not None:
                reporters.add(self.store.get_report(slot.report_id).reporter)
        for report_id in mapping.obstacles.values():
            reporters.add(self.store.get_report(report_id).reporter)
        at = self.now().isoformat()
        for user_id in reporters:
            if self.store.get_user(user_id).category != "guest":
                gamification.evaluate_badges(self.store, user_id, at)

    # -- queries ---------------------------------------------------------------

    def advisory(self, route_tokens: list[str]) -> dict:
        self.sync_updates()
        route = [SemanticLocation.parse(t) for t in route_tokens]
        adv = advisory_mod.route_advisory(
            self.store, route, self.now(), ttl=self.ttl, known_areas=self._areas
        )
        sentences = advisory_mod.render_advisory(adv)
        return {
            "route": [str(l) for l in adv.route],
            "overall": adv.overall.value,
            "generated_at": adv.generated_at,
            "sentences": sentences,
            "areas": [
                {
                    "location": str(a.location),
                    "severity": a.severity.value,
                    "stale": a.stale,
                    "verified_at": a.verified_at,
                    "active_events": [
                        {"keyword": e.keyword, "verified_at": e.verified_at}
                        for e in a.active_events
                    ],
                    "obstacles": [
                        {"class": o.obstacle_class.value, "count": o.count}
                        for o in a.obstacles
                    ],
                }
                for a in adv.per_area
            ],
        }

    def feedback(self, report_id: int, helpful: bool) -> dict:
        self.sync_updates()
        note = gamification.record_feedback(self.store, report_id, helpful, self.now())
        return {"notified": note["reporter"], "report_id": report_id,
                "helpful": helpful}

    def sync_and_get_report(self, report_id: int):
        self.sync_updates()
        return self.store.get_report(report_id)

    def leaderboard(self, top_n: int = 10) -> list[dict]:
        rows = gamification.leaderboard(self.store, top_n)
        return [
            {
                "rank": i + 1,
                "user_id": user.user_id,
                "display_name": user.display_name,
                "points": points,
                "badges": [b for b, _ in self.store.badges_for(user.user_id)],
            }
            for i, (user, points) in enumerate(rows)
        ]

    def user_state(self, user_id: str) -> dict:
        user = self.store.get_user(user_id)
        return {
            "user_id": user.user_id,
            "display_name": user.display_name,
            "category": user.category,
            "points": gamification.total_points(self.store, user_id),
            "badges": [b for b, _ in self.store.badges_for(user_id)],
            "confirmed_count": user.confirmed_count,
            "refuted_count": user.refuted_count,
            "notifications": self.store.notifications_for(user_id),
        }

    def status(self) -> dict:
        self.sync_updates()
        last_patrol_id, last_patrol_at = self.store.last_patrol()
        return {
            "mission_revision": self.channel.revision_of(MISSION_FILE),
            "update_revision": self.channel.revision_of(UPDATE_FILE),
            "last_patrol_id": last_patrol_id,
            "last_patrol_at": last_patrol_at,
            "pending_reports": len(self.store.reports(status="pending")),
            "areas": [str(a) for a in self.world_map.areas],
            "keywords": list(self.registry.keywords()),
        }
