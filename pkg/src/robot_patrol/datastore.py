"""Embedded store for users, reports, verification results and scoring.

Backed by a single sqlite database (file or in-memory) behind a small
repository API. The crowdsourcing data splits into seven logical
tables: users, users_guests, users_maintenance, events, obstacles,
events_verified, obstacles_verified; the first three share one
physical table keyed by category, reports share another keyed by kind.
Support tables (missions, ledger, badges, notifications, drafts) keep
dispatch bookkeeping and gamification state.

Report lifecycle: pending -> dispatched -> verified | refuted. The two
final states are terminal; a later patrol that contradicts an old
verdict only appends a fresh verification record, it never rewrites
report history.

All writes are serialized through one lock; reads see committed state.
Timestamps are ISO-8601 UTC strings throughout.
"""

from __future__ import annotations

import threading
import sqlite3
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .protocol import (
    EventRequest,
    EventResult,
    MissionMessage,
    ObstacleClass,
    ObstacleEntry,
    SemanticLocation,
    UpdateMessage,
)


class DatastoreError(Exception):
    pass


class UnknownUser(DatastoreError):
    pass


class UnknownReport(DatastoreError):
    pass


class InvalidPayload(DatastoreError):
    pass


class UnknownMissionNumber(DatastoreError):
    pass


class StaleUpdate(DatastoreError):
    pass


@dataclass(frozen=True)
class User:
    user_id: str
    display_name: str
    category: str  # registered | guest | maintenance
    created_at: str
    confirmed_count: int = 0
    refuted_count: int = 0


@dataclass(frozen=True)
class Report:
    report_id: int
    reporter: str
    kind: str  # obstacle | event
    payload: object  # ObstacleEntry | EventRequest
    submitted_at: str
    status: str


@dataclass(frozen=True)
class VerifiedEvent:
    record_id: int
    report_id: int | None
    keyword: str
    location: SemanticLocation
    result: int
    verified_at: str
    patrol_id: int


@dataclass(frozen=True)
class VerifiedObstacle:
    record_id: int
    obstacle_class: ObstacleClass
    count: int
    location: SemanticLocation
    verified_at: str
    patrol_id: int


@dataclass(frozen=True)
class MissionEventSlot:
    report_id: int | None  # None for a re-check of an already-active event
    keyword: str
    location: SemanticLocation


@dataclass(frozen=True)
class MissionMapping:
    mission_id: int
    created_at: str
    events: dict  # number -> MissionEventSlot
    obstacles: dict  # number -> report_id


_SCHEMA = """
CREATE TABLE IF NOT EXISTS users (
    user_id TEXT PRIMARY KEY,
    display_name TEXT NOT NULL,
    category TEXT NOT NULL CHECK (category IN ('registered', 'guest', 'maintenance')),
    created_at TEXT NOT NULL,
    confirmed_count INTEGER NOT NULL DEFAULT 0,
    refuted_count INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS reports (
    report_id INTEGER PRIMARY KEY,
    reporter TEXT NOT NULL REFERENCES users(user_id),
    kind TEXT NOT NULL CHECK (kind IN ('event', 'obstacle')),
    keyword TEXT,
    obstacle_class TEXT,
    count INTEGER,
    location TEXT NOT NULL,
    submitted_at TEXT NOT NULL,
    status TEXT NOT NULL DEFAULT 'pending'
        CHECK (status IN ('pending', 'dispatched', 'verified', 'refuted'))
);
CREATE TABLE IF NOT EXISTS events_verified (
    record_id INTEGER PRIMARY KEY,
    report_id INTEGER,
    keyword TEXT NOT NULL,
    location TEXT NOT NULL,
    result INTEGER NOT NULL CHECK (result IN (0, 1)),
    verified_at TEXT NOT NULL,
    patrol_id INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS obstacles_verified (
    record_id INTEGER PRIMARY KEY,
    obstacle_class TEXT NOT NULL,
    count INTEGER NOT NULL,
    location TEXT NOT NULL,
    verified_at TEXT NOT NULL,
    patrol_id INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS missions (
    mission_id INTEGER PRIMARY KEY,
    created_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS mission_entries (
    mission_id INTEGER NOT NULL REFERENCES missions(mission_id),
    kind TEXT NOT NULL CHECK (kind IN ('event', 'event_recheck', 'obstacle')),
    number INTEGER NOT NULL,
    report_id INTEGER,
    keyword TEXT,
    location TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS ledger (
    entry_id INTEGER PRIMARY KEY,
    user_id TEXT NOT NULL,
    action TEXT NOT NULL,
    points INTEGER NOT NULL,
    at TEXT NOT NULL,
    ref INTEGER
);
CREATE TABLE IF NOT EXISTS badges (
    user_id TEXT NOT NULL,
    badge TEXT NOT NULL,
    earned_at TEXT NOT NULL,
    PRIMARY KEY (user_id, badge)
);
CREATE TABLE IF NOT EXISTS notifications (
    note_id INTEGER PRIMARY KEY,
    user_id TEXT NOT NULL,
    report_id INTEGER NOT NULL,
    helpful INTEGER NOT NULL,
    at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS drafts (
    draft_id TEXT PRIMARY KEY,
    user_id TEXT NOT NULL,
    started_at TEXT NOT NULL,
    report_id INTEGER
);
CREATE TABLE IF NOT EXISTS meta (
    key TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
"""


def _iso(now: datetime) -> str:
    return now.isoformat()


def _row_report(row) -> Report:
    if row["kind"] == "event":
        payload = EventRequest(1, row["keyword"], SemanticLocation.parse(row["location"]))
    else:
        payload = ObstacleEntry(
            1,
            ObstacleClass(row["obstacle_class"]),
            row["count"],
            SemanticLocation.parse(row["location"]),
        )
    return Report(
        row["report_id"], row["reporter"], row["kind"], payload,
        row["submitted_at"], row["status"],
    )


class Datastore:
    def __init__(self, path: str | Path = ":memory:"):
        self._lock = threading.RLock()
        self._conn = sqlite3.connect(str(path), check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        with self._conn:
            self._conn.executescript(_SCHEMA)

    def close(self) -> None:
        self._conn.close()

    # -- users ---------------------------------------------------------

    def create_user(self, display_name: str, category: str = "registered",
                    now: datetime | None = None) -> User:
        if category not in ("registered", "guest", "maintenance"):
            raise InvalidPayload(f"bad user category {category!r}")
        created_at = _iso(now if now is not None else datetime.now(timezone.utc))
        with self._lock, self._conn:
            n = int(self._meta_get("user_seq", "0")) + 1
            self._meta_set("user_seq", str(n))
            user_id = f"u{n}"
            if not display_name:
                display_name = f"guest-{n}"
            self._conn.execute(
                "INSERT INTO users (user_id, display_name, category, created_at)"
                " VALUES (?, ?, ?, ?)",
                (user_id, display_name, category, created_at),
            )
        return User(user_id, display_name, category, created_at)

    def get_user(self, user_id: str) -> User:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM users WHERE user_id = ?", (user_id,)
            ).fetchone()
        if row is None:
            raise UnknownUser(f"no user {user_id!r}")
        return User(**dict(row))

    def find_user_by_name(self, display_name: str) -> User | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM users WHERE display_name = ? ORDER BY user_id LIMIT 1",
                (display_name,),
            ).fetchone()
        return User(**dict(row)) if row else None

    def users(self, category: str | None = None) -> list[User]:
        query = "SELECT * FROM users"
        args: tuple = ()
        if category:
            query += " WHERE category = ?"
            args = (category,)
        with self._lock:
            rows = self._conn.execute(query + " ORDER BY user_id", args).fetchall()
        return [User(**dict(r)) for r in rows]

    # -- reports -------------------------------------------------------

    def insert_report(self, reporter: str, kind: str, payload, now: datetime) -> int:
        if kind == "event":
            if not isinstance(payload, EventRequest):
                raise InvalidPayload(f"event report needs an event payload, got {type(payload).__name__}")
        elif kind == "obstacle":
            if not isinstance(payload, ObstacleEntry):
                raise InvalidPayload(f"obstacle report needs an obstacle payload, got {type(payload).__name__}")
        else:
            raise InvalidPayload(f"bad report kind {kind!r}")
        self.get_user(reporter)  # UnknownUser guard
        with self._lock, self._conn:
            cur = self._conn.execute(
                "INSERT INTO reports (reporter, kind, keyword, obstacle_class, count,"
                " location, submitted_at) VALUES (?, ?, ?, ?, ?, ?, ?)",
                (
                    reporter,
                    kind,
                    payload.keyword if kind == "event" else None,
                    payload.obstacle_type.value if kind == "obstacle" else None,
                    payload.count if kind == "obstacle" else None,
                    str(payload.location),
                    _iso(now),
                ),
            )
        return cur.lastrowid

    def get_report(self, report_id: int) -> Report:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM reports WHERE report_id = ?", (report_id,)
            ).fetchone()
        if row is None:
            raise UnknownReport(f"no report {report_id}")
        return _row_report(row)

    def reports(self, status: str | None = None, reporter: str | None = None) -> list[Report]:
        query = "SELECT * FROM reports"
        clauses, args = [], []
        if status:
            clauses.append("status = ?")
            args.append(status)
        if reporter:
            clauses.append("reporter = ?")
            args.append(reporter)
        if clauses:
            query += " WHERE " + " AND ".join(clauses)
        with self._lock:
            rows = self._conn.execute(query + " ORDER BY report_id", args).fetchall()
        return [_row_report(r) for r in rows]

    # -- missions ------------------------------------------------------

    def build_mission(self, now: datetime) -> tuple[MissionMessage, MissionMapping]:
        """Collect pending reports into a numbered mission and mark them
        dispatched.

        Currently-active events (latest verification = 1) with no fresh
        pending report for the same keyword+location are appended as
        re-check entries so a later patrol can refute them; re-checks
        carry no report_id.
        """
        with self._lock, self._conn:
            pending = self._conn.execute(
                "SELECT * FROM reports WHERE status = 'pending'"
                " ORDER BY submitted_at, report_id"
            ).fetchall()
            events = [r for r in pending if r["kind"] == "event"]
            obstacles = [r for r in pending if r["kind"] == "obstacle"]

            event_requests: list[EventRequest] = []
            event_slots: dict[int, MissionEventSlot] = {}
            fresh_pairs = set()
            for number, row in enumerate(events, start=1):
                location = SemanticLocation.parse(row["location"])
                event_requests.append(EventRequest(number, row["keyword"], location))
                event_slots[number] = MissionEventSlot(row["report_id"], row["keyword"], location)
                fresh_pairs.add((row["keyword"], row["location"]))

            rechecks = [
                (keyword, location)
                for keyword, location in self._active_event_pairs()
                if (keyword, location) not in fresh_pairs
            ]
            rechecks.sort(key=lambda pair: (pair[1], pair[0]))
            for offset, (keyword, location_text) in enumerate(rechecks):
                number = len(events) + offset + 1
                location = SemanticLocation.parse(location_text)
                event_requests.append(EventRequest(number, keyword, location))
                event_slots[number] = MissionEventSlot(None, keyword, location)

            obstacle_entries: list[ObstacleEntry] = []
            obstacle_slots: dict[int, int] = {}
            for number, row in enumerate(obstacles, start=1):
                obstacle_entries.append(
                    ObstacleEntry(
                        number,
                        ObstacleClass(row["obstacle_class"]),
                        row["count"],
                        SemanticLocation.parse(row["location"]),
                    )
                )
                obstacle_slots[number] = row["report_id"]

            created_at = _iso(now)
            cur = self._conn.execute(
                "INSERT INTO missions (created_at) VALUES (?)", (created_at,)
            )
            mission_id = cur.lastrowid
            for number, slot in event_slots.items():
                self._conn.execute(
                    "INSERT INTO mission_entries (mission_id, kind, number, report_id,"
                    " keyword, location) VALUES (?, ?, ?, ?, ?, ?)",
                    (
                        mission_id,
                        "event" if slot.report_id is not None else "event_recheck",
                        number,
                        slot.report_id,
                        slot.keyword,
                        str(slot.location),
                    ),
                )
            for number, report_id in obstacle_slots.items():
                entry = obstacle_entries[number - 1]
                self._conn.execute(
                    "INSERT INTO mission_entries (mission_id, kind, number, report_id,"
                    " keyword, location) VALUES (?, 'obstacle', ?, ?, NULL, ?)",
                    (mission_id, number, report_id, str(entry.location)),
                )
            for row in pending:
                self._conn.execute(
                    "UPDATE reports SET status = 'dispatched' WHERE report_id = ?",
                    (row["report_id"],),
                )
        mission = MissionMessage(tuple(event_requests), tuple(obstacle_entries))
        return mission, MissionMapping(mission_id, created_at, event_slots, obstacle_slots)

    def _active_event_pairs(self) -> list[tuple[str, str]]:
        """(keyword, location) pairs whose latest verification says 1."""
        rows = self._conn.execute(
            "SELECT keyword, location, result FROM events_verified"
            " WHERE record_id IN (SELECT MAX(record_id) FROM events_verified"
            " GROUP BY keyword, location)"
        ).fetchall()
        return [(r["keyword"], r["location"]) for r in rows if r["result"] == 1]

    def mission_mapping(self, mission_id: int) -> MissionMapping:
        with self._lock:
            mission = self._conn.execute(
                "SELECT * FROM missions WHERE mission_id = ?", (mission_id,)
            ).fetchone()
            if mission is None:
                raise UnknownMissionNumber(f"no mission {mission_id}")
            rows = self._conn.execute(
                "SELECT * FROM mission_entries WHERE mission_id = ? ORDER BY number",
                (mission_id,),
            ).fetchall()
        events, obstacles = {}, {}
        for row in rows:
            if row["kind"] == "obstacle":
                obstacles[row["number"]] = row["report_id"]
            else:
                events[row["number"]] = MissionEventSlot(
                    row["report_id"], row["keyword"], SemanticLocation.parse(row["location"])
                )
        return MissionMapping(mission_id, mission["created_at"], events, obstacles)

    def latest_mission(self) -> MissionMapping | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT mission_id FROM missions ORDER BY mission_id DESC LIMIT 1"
            ).fetchone()
        return self.mission_mapping(row["mission_id"]) if row else None

    # -- verification --------------------------------------------------

    def apply_update(
        self,
        update: UpdateMessage,
        mapping: MissionMapping,
        now: datetime,
        covered: set[SemanticLocation],
        patrol_id: int,
    ) -> dict:
        """Fold one patrol's update into verified state.

        Event results resolve their mission slots (verdict + terminal
        report status + reporter counters); the obstacle list replaces
        obstacles_verified for every covered area. patrol_id must be
        strictly newer than the last applied one.
        """
        at = _iso(now)
        with self._lock, self._conn:
            last = int(self._meta_get("last_patrol_id", "0"))
            if patrol_id <= last:
                raise StaleUpdate(f"patrol {patrol_id} already applied (latest {last})")
            for res in update.event_results:
                if res.number not in mapping.events:
                    raise UnknownMissionNumber(
                        f"update event {res.number} not in mission {mapping.mission_id}"
                    )

            reports_verified = reports_refuted = 0
            for res in update.event_results:
                slot = mapping.events[res.number]
                self._conn.execute(
                    "INSERT INTO events_verified (report_id, keyword, location, result,"
                    " verified_at, patrol_id) VALUES (?, ?, ?, ?, ?, ?)",
                    (slot.report_id, slot.keyword, str(slot.location), res.result, at, patrol_id),
                )
                if slot.report_id is not None:
                    status = "verified" if res.result == 1 else "refuted"
                    self._set_terminal_status(slot.report_id, status)
                    if status == "verified":
                        reports_verified += 1
                    else:
                        reports_refuted += 1

            refresh_areas = {str(a) for a in covered}
            refresh_areas |= {str(o.location) for o in update.obstacles}
            for area in sorted(refresh_areas):
                self._conn.execute("DELETE FROM obstacles_verified WHERE location = ?", (area,))
            for entry in update.obstacles:
                self._conn.execute(
                    "INSERT INTO obstacles_verified (obstacle_class, count, location,"
                    " verified_at, patrol_id) VALUES (?, ?, ?, ?, ?)",
                    (entry.obstacle_type.value, entry.count, str(entry.location), at, patrol_id),
                )

            observed = {(o.obstacle_type.value, str(o.location)) for o in update.obstacles}
            for number, report_id in mapping.obstacles.items():
                row = self._conn.execute(
                    "SELECT * FROM reports WHERE report_id = ?", (report_id,)
                ).fetchone()
                if row is None or row["status"] != "dispatched":
                    continue
                matched = (row["obstacle_class"], row["location"]) in observed
                self._set_terminal_status(report_id, "verified" if matched else "refuted")
                if matched:
                    reports_verified += 1
                else:
                    reports_refuted += 1

            self._meta_set("last_patrol_id", str(patrol_id))
            self._meta_set("last_patrol_at", at)
        return {
            "events_applied": len(update.event_results),
            "obstacles_refreshed": len(update.obstacles),
            "reports_verified": reports_verified,
            "reports_refuted": reports_refuted,
        }

    def _set_terminal_status(self, report_id: int, status: str) -> None:
        row = self._conn.execute(
            "SELECT reporter, status FROM reports WHERE report_id = ?", (report_id,)
        ).fetchone()
        if row is None or row["status"] in ("verified", "refuted"):
            return  # terminal states never change
        self._conn.execute(
            "UPDATE reports SET status = ? WHERE report_id = ?", (status, report_id)
        )
        self._conn.execute(
            "UPDATE users SET {0} = {0} + 1 WHERE user_id = ?".format(
                "confirmed_count" if status == "verified" else "refuted_count"
            ),
            (row["reporter"],),
        )

    def query_verified(
        self, location: SemanticLocation
    ) -> tuple[list[VerifiedObstacle], list[VerifiedEvent], str | None]:
        """Current verified rows for one area.

        Events come as the latest record per keyword (result 0 rows
        included so callers can see refutations); the timestamp is the
        newest verified_at across the returned rows, None when empty.
        """
        with self._lock:
            obstacle_rows = self._conn.execute(
                "SELECT * FROM obstacles_verified WHERE location = ? ORDER BY record_id",
                (str(location),),
            ).fetchall()
            event_rows = self._conn.execute(
                "SELECT * FROM events_verified WHERE location = ? AND record_id IN"
                " (SELECT MAX(record_id) FROM events_verified WHERE location = ?"
                "  GROUP BY keyword) ORDER BY record_id",
                (str(location), str(location)),
            ).fetchall()
        obstacles = [
            VerifiedObstacle(
                r["record_id"], ObstacleClass(r["obstacle_class"]), r["count"],
                SemanticLocation.parse(r["location"]), r["verified_at"], r["patrol_id"],
            )
            for r in obstacle_rows
        ]
        events = [
            VerifiedEvent(
                r["record_id"], r["report_id"], r["keyword"],
                SemanticLocation.parse(r["location"]), r["result"],
                r["verified_at"], r["patrol_id"],
            )
            for r in event_rows
        ]
        stamps = [r.verified_at for r in obstacles] + [r.verified_at for r in events]
        return obstacles, events, max(stamps) if stamps else None

    def last_patrol(self) -> tuple[int, str | None]:
        with self._lock:
            return (
                int(self._meta_get("last_patrol_id", "0")),
                self._meta_get("last_patrol_at", None),
            )

    # -- gamification primitives ----------------------------------------

    def ledger_append(self, user_id: str, action: str, points: int, at: str,
                      ref: int | None = None) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO ledger (user_id, action, points, at, ref) VALUES (?, ?, ?, ?, ?)",
                (user_id, action, points, at, ref),
            )

    def ledger_rows(self, user_id: str | None = None, start: str | None = None,
                    end: str | None = None) -> list[sqlite3.Row]:
        query = "SELECT * FROM ledger"
        clauses, args = [], []
        if user_id:
            clauses.append("user_id = ?")
            args.append(user_id)
        if start:
            clauses.append("at >= ?")
            args.append(start)
        if end:
            clauses.append("at < ?")
            args.append(end)
        if clauses:
            query += " WHERE " + " AND ".join(clauses)
        with self._lock:
            return self._conn.execute(query + " ORDER BY entry_id", args).fetchall()

    def award_badge(self, user_id: str, badge: str, at: str) -> bool:
        """True if newly earned, False if already held."""
        with self._lock, self._conn:
            cur = self._conn.execute(
                "INSERT OR IGNORE INTO badges (user_id, badge, earned_at) VALUES (?, ?, ?)",
                (user_id, badge, at),
            )
        return cur.rowcount == 1

    def badges_for(self, user_id: str) -> list[tuple[str, str]]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT badge, earned_at FROM badges WHERE user_id = ? ORDER BY earned_at, badge",
                (user_id,),
            ).fetchall()
        return [(r["badge"], r["earned_at"]) for r in rows]

    def add_notification(self, user_id: str, report_id: int, helpful: bool, at: str) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO notifications (user_id, report_id, helpful, at) VALUES (?, ?, ?, ?)",
                (user_id, report_id, int(helpful), at),
            )

    def notifications_for(self, user_id: str) -> list[dict]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT * FROM notifications WHERE user_id = ? ORDER BY note_id",
                (user_id,),
            ).fetchall()
        return [dict(r) for r in rows]

    # -- report drafts (idempotent submission) ---------------------------

    def create_draft(self, draft_id: str, user_id: str, at: str) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT OR IGNORE INTO drafts (draft_id, user_id, started_at) VALUES (?, ?, ?)",
                (draft_id, user_id, at),
            )

    def draft_report(self, draft_id: str) -> int | None:
        """Report already submitted for this draft, if any."""
        with self._lock:
            row = self._conn.execute(
                "SELECT report_id FROM drafts WHERE draft_id = ?", (draft_id,)
            ).fetchone()
        return row["report_id"] if row else None

    def bind_draft(self, draft_id: str, report_id: int) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "UPDATE drafts SET report_id = ? WHERE draft_id = ?", (report_id, draft_id)
            )

    # -- meta ------------------------------------------------------------

    def _meta_get(self, key: str, default):
        row = self._conn.execute("SELECT value FROM meta WHERE key = ?", (key,)).fetchone()
        return row["value"] if row else default

    def _meta_set(self, key: str, value: str) -> None:
        self._conn.execute(
            "INSERT INTO meta (key, value) VALUES (?, ?)"
            " ON CONFLICT(key) DO UPDATE SET value = excluded.value",
            (key, value),
        )

    # -- text export / import --------------------------------------------

    def export_text(self) -> str:
        """The seven logical tables as pipe-separated sections."""
        out: list[str] = []

        def section(title: str, rows: list[str]):
            out.append(f"[{title}]")
            out.extend(rows)

        for category, title in (
            ("registered", "users"),
            ("guest", "users_guests"),
            ("maintenance", "users_maintenance"),
        ):
            section(title, [
                f"{u.user_id}|{u.display_name}|{u.created_at}|{u.confirmed_count}|{u.refuted_count}"
                for u in self.users(category)
            ])
        with self._lock:
            event_reports = self._conn.execute(
                "SELECT * FROM reports WHERE kind = 'event' ORDER BY report_id"
            ).fetchall()
            obstacle_reports = self._conn.execute(
                "SELECT * FROM reports WHERE kind = 'obstacle' ORDER BY report_id"
            ).fetchall()
            ev = self._conn.execute(
                "SELECT * FROM events_verified ORDER BY record_id"
            ).fetchall()
            ov = self._conn.execute(
                "SELECT * FROM obstacles_verified ORDER BY record_id"
            ).fetchall()
        section("events", [
            f"{r['report_id']}|{r['reporter']}|{r['keyword']}|{r['location']}"
            f"|{r['submitted_at']}|{r['status']}"
            for r in event_reports
        ])
        section("obstacles", [
            f"{r['report_id']}|{r['reporter']}|{r['obstacle_class']}|{r['count']}"
            f"|{r['location']}|{r['submitted_at']}|{r['status']}"
            for r in obstacle_reports
        ])
        section("events_verified", [
            f"{r['record_id']}|{r['report_id'] if r['report_id'] is not None else ''}"
            f"|{r['keyword']}|{r['location']}|{r['result']}|{r['verified_at']}|{r['patrol_id']}"
            for r in ev
        ])
        section("obstacles_verified", [
            f"{r['record_id']}|{r['obstacle_class']}|{r['count']}|{r['location']}"
            f"|{r['verified_at']}|{r['patrol_id']}"
            for r in ov
        ])
        return "\n".join(out) + "\n"

    def import_text(self, text: str) -> None:
        """Load an export into this (empty) store, preserving ids."""
        section = None
        max_user = 0
        with self._lock, self._conn:
            for raw in text.split("\n"):
                line = raw.strip()
                if not line:
                    continue
                if line.startswith("[") and line.endswith("]"):
                    section = line[1:-1]
                    continue
                fields = line.split("|")
                if section in ("users", "users_guests", "users_maintenance"):
                    category = {
                        "users": "registered",
                        "users_guests": "guest",
                        "users_maintenance": "maintenance",
                    }[section]
                    self._conn.execute(
                        "INSERT INTO users (user_id, display_name, category, created_at,"
                        " confirmed_count, refuted_count) VALUES (?, ?, ?, ?, ?, ?)",
                        (fields[0], fields[1], category, fields[2], int(fields[3]), int(fields[4])),
                    )
                    if fields[0].startswith("u") and fields[0][1:].isdigit():
                        max_user = max(max_user, int(fields[0][1:]))
                elif section == "events":
                    self._conn.execute(
                        "INSERT INTO reports (report_id, reporter, kind, keyword, location,"
                        " submitted_at, status) VALUES (?, ?, 'event', ?, ?, ?, ?)",
                        (int(fields[0]), fields[1], fields[2], fields[3], fields[4], fields[5]),
                    )
                elif section == "obstacles":
                    self._conn.execute(
                        "INSERT INTO reports (report_id, reporter, kind, obstacle_class, count,"
                        " location, submitted_at, status) VALUES (?, ?, 'obstacle', ?, ?, ?, ?, ?)",
                        (int(fields[0]), fields[1], fields[2], int(fields[3]), fields[4],
                         fields[5], fields[6]),
                    )
                elif section == "events_verified":
                    self._conn.execute(
                        "INSERT INTO events_verified (record_id, report_id, keyword, location,"
                        " result, verified_at, patrol_id) VALUES (?, ?, ?, ?, ?, ?, ?)",
                        (int(fields[0]), int(fields[1]) if fields[1] else None, fields[2],
                         fields[3], int(fields[4]), fields[5], int(fields[6])),
                    )
                elif section == "obstacles_verified":
                    self._conn.execute(
                        "INSERT INTO obstacles_verified (record_id, obstacle_class, count,"
                        " location, verified_at, patrol_id) VALUES (?, ?, ?, ?, ?, ?)",
                        (int(fields[0]), fields[1], int(fields[2]), fields[3], fields[4],
                         int(fields[5])),
                    )
                else:
                    raise InvalidPayload(f"unknown import section {section!r}")
            if max_user:
                self._meta_set("user_seq", str(max_user))
