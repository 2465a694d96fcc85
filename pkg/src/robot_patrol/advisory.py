"""Route safety advisories for visually impaired users.

Each queried area gets a severity grade from its verified state:
high when an event is in progress there (or 4+ verified obstacles),
middle for 1 to 3 obstacles, low when clear. Information older than
the TTL (or never patrolled at all) is additionally flagged stale. The
renderer speaks in short screen-reader-friendly sentences, severity
word first, counts as digits, never tables.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta
from enum import Enum

from .datastore import Datastore, VerifiedEvent, VerifiedObstacle
from .protocol import SemanticLocation

DEFAULT_TTL = timedelta(minutes=30)


class AdvisoryError(Exception):
    pass


class UnknownLocation(AdvisoryError):
    pass


class Severity(str, Enum):
    LOW = "low"
    MIDDLE = "middle"
    HIGH = "high"

    @property
    def rank(self) -> int:
        return ("low", "middle", "high").index(self.value)


def area_severity(obstacle_total: int, has_active_event: bool) -> Severity:
    """Grade one area: events dominate, then the obstacle load."""
    if obstacle_total < 0:
        raise ValueError("obstacle_total must be >= 0")
    if has_active_event or obstacle_total >= 4:
        return Severity.HIGH
    if obstacle_total >= 1:
        return Severity.MIDDLE
    return Severity.LOW


@dataclass(frozen=True)
class AreaReport:
    location: SemanticLocation
    obstacles: tuple  # VerifiedObstacle rows
    active_events: tuple  # VerifiedEvent rows with result = 1
    severity: Severity
    verified_at: str | None
    stale: bool


@dataclass(frozen=True)
class Advisory:
    route: tuple
    per_area: tuple
    overall: Severity
    generated_at: str


def route_advisory(
    store: Datastore,
    route: list[SemanticLocation],
    now: datetime,
    ttl: timedelta = DEFAULT_TTL,
    known_areas=None,
) -> Advisory:
    """Verified state, severity and staleness for each area of a route.

    known_areas, when given, is the set of map areas; anything else in
    the route raises UnknownLocation.
    """
    if not route:
        raise ValueError("route must name at least one area")
    per_area: list[AreaReport] = []
    for location in route:
        if known_areas is not None and location not in known_areas:
            raise UnknownLocation(f"{location} is not an area on the map")
        obstacles, events, verified_at = store.query_verified(location)
        active = tuple(e for e in events if e.result == 1)
        total = sum(o.count for o in obstacles)
        stale = verified_at is None or (
            now - datetime.fromisoformat(verified_at) > ttl
        )
        per_area.append(
            AreaReport(
                location,
                tuple(obstacles),
                active,
                area_severity(total, bool(active)),
                verified_at,
                stale,
            )
        )
    overall = max((a.severity for a in per_area), key=lambda s: s.rank)
    return Advisory(tuple(route), tuple(per_area), overall, now.isoformat())


def _area_sentence(area: AreaReport) -> str:
    clauses = []
    for event in area.active_events:
        clauses.append(f"{event.keyword} in progress")
    if area.obstacles:
        listing = ", ".join(
            f"{o.obstacle_class.value} x{o.count}" for o in area.obstacles
        )
        clauses.append(f"obstacles {listing}")
    if not clauses:
        clauses.append("clear")
    if area.stale:
        if area.verified_at is None:
            clauses.append("stale, never verified")
        else:
            clauses.append(f"stale, last verified at {area.verified_at}")
    else:
        clauses.append(f"verified at {area.verified_at}")
    head = area.severity.value.capitalize()
    return f"{head} severity at {area.location}: " + "; ".join(clauses) + "."


def render_advisory(advisory: Advisory) -> list[str]:
    """One sentence per area in route order, then the overall grade."""
    sentences = [_area_sentence(area) for area in advisory.per_area]
    sentences.append(f"Overall severity: {advisory.overall.value}.")
    return sentences
