"""Mission Message / Update TXT protocol.

The crowdsourcing side and the patrol robot exchange two plain-text files:

* ``MissionMessage.txt`` -- system -> robot, the reports to verify.
* ``Update.txt``         -- robot -> system, verification results plus a
  full obstacle refresh for the patrolled areas.

One record per line, fields joined by a comma. Canonical output uses
", " (comma + single space), LF line endings and a trailing LF; parsers
additionally accept CRLF and arbitrary spaces around commas. Blank lines
are ignored. Record shapes:

    #Event, <number>, <event keyword>, <semantic location>     (mission)
    #Obstacle, <number>, <obstacle type>, <count>, <location>  (both)
    #Event, <number>, <result 0|1>                             (update)

Mission event/obstacle numbers are independent per-type sequences.
Update obstacle numbers must be consecutive 1..n in listing order.

All parse failures raise exactly one :class:`ProtocolError` subclass
carrying the 1-based line number; parsers never raise anything else.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

MISSION_FILE = "MissionMessage.txt"
UPDATE_FILE = "Update.txt"

_EVENT_PREFIX = "#Event"
_OBSTACLE_PREFIX = "#Obstacle"

_LOCATION_RE = re.compile(r"^[a-z]+_[1-9][0-9]*$")
_TOKEN_RE = re.compile(r"^[a-z][a-z0-9_]*$")


class ProtocolError(Exception):
    """Base for every structured protocol failure."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MalformedLine(ProtocolError):
    pass


class UnknownKeyword(ProtocolError):
    pass


class UnknownObstacleClass(ProtocolError):
    pass


class BadLocation(ProtocolError):
    pass


class DuplicateNumber(ProtocolError):
    pass


class BadResult(ProtocolError):
    pass


class EmptyToken(ProtocolError):
    pass


class InvalidCharacters(ProtocolError):
    pass


class ObstacleClass(str, Enum):
    """The eleven recognizable obstacle classes, in canonical order."""

    TABLE = "table"
    SOFA = "sofa"
    CHAIR = "chair"
    TELEPHONE_BOOTH = "telephone_booth"
    TRASH_CAN = "trash_can"
    HAND_WASHER_ROD = "hand_washer_rod"
    WARNING_SIGNAL = "warning_signal"
    SHELF = "shelf"
    CHAIR_WITH_DESK = "chair_with_desk"
    PEOPLE = "people"
    DOOR = "door"

    @classmethod
    def from_token(cls, token: str, line: int | None = None) -> "ObstacleClass":
        try:
            return cls(token)
        except ValueError:
            raise UnknownObstacleClass(f"unknown obstacle class {token!r}", line) from None


CLASS_ORDER = {c: i for i, c in enumerate(ObstacleClass)}


@dataclass(frozen=True, order=True)
class SemanticLocation:
    """A named map region such as corridor_5 or corner_2."""

    kind: str
    index: int

    def __post_init__(self):
        if not _LOCATION_RE.match(str(self)):
            raise BadLocation(f"bad location {self.kind}_{self.index}")

    def __str__(self) -> str:
        return f"{self.kind}_{self.index}"

    @classmethod
    def parse(cls, text: str, line: int | None = None) -> "SemanticLocation":
        if not _LOCATION_RE.match(text):
            raise BadLocation(f"bad location {text!r}", line)
        kind, index = text.rsplit("_", 1)
        return cls(kind, int(index))


@dataclass(frozen=True)
class VerificationRule:
    """Event keyword rule: the event is ongoing iff at least min_count
    detections of the target class are present."""

    target: ObstacleClass
    min_count: int


class KeywordRegistry:
    """Registered event keywords and their verification rules.

    class_waiting and elevator_repair are always present; more keywords
    may be added at configuration time.
    """

    def __init__(self):
        self._rules: dict[str, VerificationRule] = {
            "class_waiting": VerificationRule(ObstacleClass.PEOPLE, 3),
            "elevator_repair": VerificationRule(ObstacleClass.WARNING_SIGNAL, 1),
        }

    def register(self, keyword: str, rule: VerificationRule) -> None:
        if not _TOKEN_RE.match(keyword):
            raise InvalidCharacters(f"bad keyword token {keyword!r}")
        self._rules[keyword] = rule

    def __contains__(self, keyword: str) -> bool:
        return keyword in self._rules

    def rule_for(self, keyword: str) -> VerificationRule:
        return self._rules[keyword]

    def keywords(self) -> tuple[str, ...]:
        return tuple(self._rules)


DEFAULT_REGISTRY = KeywordRegistry()


@dataclass(frozen=True)
class EventRequest:
    """One reported event the robot should check: (#Event, number,
    Event keyword, Semantic Location)."""

    number: int
    keyword: str
    location: SemanticLocation

    def __post_init__(self):
        if self.number < 1:
            raise MalformedLine(f"event number must be >= 1, got {self.number}")
        if not _TOKEN_RE.match(self.keyword):
            raise UnknownKeyword(f"bad keyword token {self.keyword!r}")


@dataclass(frozen=True)
class ObstacleEntry:
    """One obstacle record: (#Obstacle, number, Obstacle type,
    Obstacle number, Semantic Location)."""

    number: int
    obstacle_type: ObstacleClass
    count: int
    location: SemanticLocation

    def __post_init__(self):
        if self.number < 1:
            raise MalformedLine(f"obstacle number must be >= 1, got {self.number}")
        if self.count < 1:
            raise MalformedLine(f"obstacle count must be >= 1, got {self.count}")


@dataclass(frozen=True)
class EventResult:
    """Robot verdict for one mission event: 1 = still ongoing, 0 = not."""

    number: int
    result: int

    def __post_init__(self):
        if self.number < 1:
            raise MalformedLine(f"event number must be >= 1, got {self.number}")
        if self.result not in (0, 1):
            raise BadResult(f"result must be 0 or 1, got {self.result}")


def _check_unique(numbers: list[int], what: str) -> None:
    seen = set()
    for n in numbers:
        if n in seen:
            raise DuplicateNumber(f"duplicate {what} number {n}")
        seen.add(n)


@dataclass(frozen=True)
class MissionMessage:
    """Events and obstacles the system asks the robot to verify."""

    events: tuple[EventRequest, ...] = field(default=())
    obstacles: tuple[ObstacleEntry, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        _check_unique([e.number for e in self.events], "event")
        _check_unique([o.number for o in self.obstacles], "obstacle")


@dataclass(frozen=True)
class UpdateMessage:
    """Per-event results plus the full obstacle refresh from one patrol."""

    event_results: tuple[EventResult, ...] = field(default=())
    obstacles: tuple[ObstacleEntry, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "event_results", tuple(self.event_results))
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        _check_unique([e.number for e in self.event_results], "event")
        for i, o in enumerate(self.obstacles, start=1):
            if o.number != i:
                raise MalformedLine(
                    f"update obstacle numbers must be consecutive 1..n; "
                    f"position {i} has number {o.number}"
                )


def _decode(text: bytes | str) -> str:
    if isinstance(text, bytes):
        try:
            return text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedLine(f"not valid UTF-8: {exc}") from None
    return text


def _split_records(text: bytes | str):
    """Yield (1-based line number, stripped fields) for non-blank lines."""
    for lineno, raw in enumerate(_decode(text).split("\n"), start=1):
        line = raw.rstrip("\r").strip()
        if not line:
            continue
        yield lineno, [f.strip() for f in line.split(",")]


def _parse_int(value: str, what: str, lineno: int) -> int:
    try:
        n = int(value)
    except ValueError:
        raise MalformedLine(f"non-numeric {what} {value!r}", lineno) from None
    if n < 1:
        raise MalformedLine(f"{what} must be >= 1, got {n}", lineno)
    return n


def _parse_obstacle_fields(fields: list[str], lineno: int) -> ObstacleEntry:
    if len(fields) != 5:
        raise MalformedLine(
            f"obstacle record needs 5 fields, got {len(fields)}", lineno
        )
    number = _parse_int(fields[1], "obstacle number", lineno)
    obstacle_type = ObstacleClass.from_token(fields[2], lineno)
    count = _parse_int(fields[3], "obstacle count", lineno)
    location = SemanticLocation.parse(fields[4], lineno)
    return ObstacleEntry(number, obstacle_type, count, location)


def parse_mission(text: bytes | str, registry: KeywordRegistry = DEFAULT_REGISTRY) -> MissionMessage:
    """Parse Mission Message text into a validated MissionMessage.

    Raises a ProtocolError subclass (with line number) on the first
    malformed record; never anything else.
    """
    events: list[EventRequest] = []
    obstacles: list[ObstacleEntry] = []
    seen_events: set[int] = set()
    seen_obstacles: set[int] = set()
    for lineno, fields in _split_records(text):
        prefix = fields[0]
        if prefix == _EVENT_PREFIX:
            if len(fields) != 4:
                raise MalformedLine(
                    f"event record needs 4 fields, got {len(fields)}", lineno
                )
            number = _parse_int(fields[1], "event number", lineno)
            keyword = fields[2]
            if keyword not in registry:
                raise UnknownKeyword(f"unknown event keyword {keyword!r}", lineno)
            location = SemanticLocation.parse(fields[3], lineno)
            if number in seen_events:
                raise DuplicateNumber(f"duplicate event number {number}", lineno)
            seen_events.add(number)
            events.append(EventRequest(number, keyword, location))
        elif prefix == _OBSTACLE_PREFIX:
            entry = _parse_obstacle_fields(fields, lineno)
            if entry.number in seen_obstacles:
                raise DuplicateNumber(f"duplicate obstacle number {entry.number}", lineno)
            seen_obstacles.add(entry.number)
            obstacles.append(entry)
        else:
            raise MalformedLine(f"bad record prefix {prefix!r}", lineno)
    return MissionMessage(tuple(events), tuple(obstacles))


def parse_update(text: bytes | str) -> UpdateMessage:
    """Parse Update text into a validated UpdateMessage."""
    results: list[EventResult] = []
    obstacles: list[ObstacleEntry] = []
    seen_events: set[int] = set()
    for lineno, fields in _split_records(text):
        prefix = fields[0]
        if prefix == _EVENT_PREFIX:
            if len(fields) != 3:
                raise MalformedLine(
                    f"event result record needs 3 fields, got {len(fields)}", lineno
                )
            number = _parse_int(fields[1], "event number", lineno)
            if fields[2] not in ("0", "1"):
                raise BadResult(f"result must be 0 or 1, got {fields[2]!r}", lineno)
            if number in seen_events:
                raise DuplicateNumber(f"duplicate event number {number}", lineno)
            seen_events.add(number)
            results.append(EventResult(number, int(fields[2])))
        elif prefix == _OBSTACLE_PREFIX:
            entry = _parse_obstacle_fields(fields, lineno)
            if entry.number != len(obstacles) + 1:
                raise MalformedLine(
                    f"update obstacle numbers must be consecutive 1..n; "
                    f"expected {len(obstacles) + 1}, got {entry.number}",
                    lineno,
                )
            obstacles.append(entry)
        else:
            raise MalformedLine(f"bad record prefix {prefix!r}", lineno)
    return UpdateMessage(tuple(results), tuple(obstacles))


def _obstacle_line(o: ObstacleEntry) -> str:
    return f"{_OBSTACLE_PREFIX}, {o.number}, {o.obstacle_type.value}, {o.count}, {o.location}"


def serialize_mission(m: MissionMessage) -> bytes:
    """Render canonical Mission Message bytes (events first, LF endings)."""
    lines = [f"{_EVENT_PREFIX}, {e.number}, {e.keyword}, {e.location}" for e in m.events]
    lines += [_obstacle_line(o) for o in m.obstacles]
    return "".join(line + "\n" for line in lines).encode("utf-8")


def serialize_update(u: UpdateMessage) -> bytes:
    """Render canonical Update bytes (event results first, LF endings)."""
    lines = [f"{_EVENT_PREFIX}, {e.number}, {e.result}" for e in u.event_results]
    lines += [_obstacle_line(o) for o in u.obstacles]
    return "".join(line + "\n" for line in lines).encode("utf-8")


def normalize_token(raw: str) -> str:
    """Canonicalize free text to a token: lowercase, whitespace runs
    collapsed to single underscores ("Trash Can" -> trash_can)."""
    if not raw or not raw.strip():
        raise EmptyToken("empty token")
    token = "_".join(raw.strip().lower().split())
    if not _TOKEN_RE.match(token):
        raise InvalidCharacters(f"token {token!r} has characters outside [a-z0-9_]")
    return token
