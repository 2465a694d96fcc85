"""Grid world with named semantic areas, checkpoints and path planning.

Map file format (line-oriented, '#' starts a comment):

    map <width> <height>
    wall <x1> <y1> <x2> <y2>
    area <kind>_<index> <x1> <y1> <x2> <y2>
    checkpoint <id> regular|event <x> <y> <kind>_<index>
    home <x> <y>

Rectangles are inclusive. x grows rightward, y downward, origin (0,0)
at the top-left. `map` must come first; `home` is required. Regular
checkpoints observe the area containing their cell (one per area at
most); event checkpoints may face an area other than the one they
stand in.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .protocol import BadLocation, MissionMessage, SemanticLocation

Cell = tuple[int, int]


class MapError(Exception):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MapSyntaxError(MapError):
    pass


class OverlappingAreas(MapError):
    pass


class CheckpointOffMap(MapError):
    pass


class CheckpointOnWall(MapError):
    pass


class DuplicateRegularCheckpoint(MapError):
    pass


class Unreachable(MapError):
    pass


class UnreachableCheckpoint(MapError):
    pass


class NoEventCheckpoint(MapError):
    pass


@dataclass(frozen=True)
class Checkpoint:
    id: str
    kind: str  # "regular" | "event"
    cell: Cell
    observes: SemanticLocation


@dataclass(frozen=True)
class Path:
    cells: tuple[Cell, ...]

    @property
    def length(self) -> int:
        return len(self.cells) - 1


@dataclass(frozen=True)
class SemanticMap:
    width: int
    height: int
    walls: frozenset[Cell]
    area_cells: dict  # SemanticLocation -> frozenset[Cell], declaration order
    checkpoints: tuple[Checkpoint, ...]
    home: Cell

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def walkable(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and cell not in self.walls

    def area_of(self, cell: Cell) -> SemanticLocation | None:
        """Area containing the cell, None for walls and unassigned cells."""
        if not self.walkable(cell):
            return None
        for location, cells in self.area_cells.items():
            if cell in cells:
                return location
        return None

    @property
    def areas(self) -> tuple[SemanticLocation, ...]:
        return tuple(self.area_cells)

    @property
    def regular_checkpoints(self) -> tuple[Checkpoint, ...]:
        return tuple(c for c in self.checkpoints if c.kind == "regular")

    def event_checkpoint_for(self, location: SemanticLocation) -> Checkpoint | None:
        """First-declared event checkpoint observing the location."""
        for c in self.checkpoints:
            if c.kind == "event" and c.observes == location:
                return c
        return None


def _parse_rect(args: list[str], lineno: int, width: int, height: int) -> tuple[int, int, int, int]:
    try:
        x1, y1, x2, y2 = (int(a) for a in args)
    except ValueError:
        raise MapSyntaxError(f"rectangle needs 4 integers, got {args!r}", lineno) from None
    if not (x1 <= x2 and y1 <= y2):
        raise MapSyntaxError(f"rectangle corners out of order: {x1},{y1}..{x2},{y2}", lineno)
    if not (0 <= x1 and x2 < width and 0 <= y1 and y2 < height):
        raise MapSyntaxError(f"rectangle {x1},{y1}..{x2},{y2} exceeds the map", lineno)
    return x1, y1, x2, y2


def _rect_cells(x1: int, y1: int, x2: int, y2: int) -> frozenset[Cell]:
    return frozenset((x, y) for x in range(x1, x2 + 1) for y in range(y1, y2 + 1))


def _parse_location(token: str, lineno: int) -> SemanticLocation:
    try:
        return SemanticLocation.parse(token)
    except BadLocation:
        raise MapSyntaxError(f"bad area name {token!r}", lineno) from None


def load_map(text: str) -> SemanticMap:
    """Parse and validate a map file; every failure is line-anchored."""
    width = height = None
    walls: set[Cell] = set()
    area_cells: dict[SemanticLocation, frozenset[Cell]] = {}
    checkpoints: list[tuple[int, Checkpoint]] = []
    home: Cell | None = None

    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        directive, *args = line.split()
        if width is None and directive != "map":
            raise MapSyntaxError("first directive must be 'map <width> <height>'", lineno)
        if directive == "map":
            if width is not None:
                raise MapSyntaxError("duplicate 'map' directive", lineno)
            try:
                width, height = int(args[0]), int(args[1])
            except (IndexError, ValueError):
                raise MapSyntaxError(f"bad map size {args!r}", lineno) from None
            if len(args) != 2 or width < 1 or height < 1:
                raise MapSyntaxError(f"bad map size {args!r}", lineno)
        elif directive == "wall":
            if len(args) != 4:
                raise MapSyntaxError("wall needs 4 coordinates", lineno)
            walls |= _rect_cells(*_parse_rect(args, lineno, width, height))
        elif directive == "area":
            if len(args) != 5:
                raise MapSyntaxError("area needs a name and 4 coordinates", lineno)
            location = _parse_location(args[0], lineno)
            if location in area_cells:
                raise MapSyntaxError(f"area {location} declared twice", lineno)
            cells = _rect_cells(*_parse_rect(args[1:], lineno, width, height))
            for earlier, earlier_cells in area_cells.items():
                if cells & earlier_cells:
                    raise OverlappingAreas(f"area {location} overlaps {earlier}", lineno)
            area_cells[location] = cells
        elif directive == "checkpoint":
            if len(args) != 5:
                raise MapSyntaxError("checkpoint needs id, kind, x, y, area", lineno)
            cp_id, kind = args[0], args[1]
            if kind not in ("regular", "event"):
                raise MapSyntaxError(f"checkpoint kind must be regular|event, got {kind!r}", lineno)
            try:
                cell = (int(args[2]), int(args[3]))
            except ValueError:
                raise MapSyntaxError(f"bad checkpoint coordinates {args[2:4]!r}", lineno) from None
            observes = _parse_location(args[4], lineno)
            checkpoints.append((lineno, Checkpoint(cp_id, kind, cell, observes)))
        elif directive == "home":
            if home is not None:
                raise MapSyntaxError("duplicate 'home' directive", lineno)
            try:
                home = (int(args[0]), int(args[1]))
            except (IndexError, ValueError):
                raise MapSyntaxError(f"bad home coordinates {args!r}", lineno) from None
            if len(args) != 2:
                raise MapSyntaxError(f"bad home coordinates {args!r}", lineno)
        else:
            raise MapSyntaxError(f"unknown directive {directive!r}", lineno)

    if width is None:
        raise MapSyntaxError("missing 'map' directive", 1)
    if home is None:
        raise MapSyntaxError("missing 'home' directive", 1)

    world = SemanticMap(width, height, frozenset(walls), area_cells,
                        tuple(c for _, c in checkpoints), home)

    if not world.in_bounds(home):
        raise MapSyntaxError(f"home {home} exceeds the map", 1)
    if not world.walkable(home):
        raise MapSyntaxError(f"home {home} is on a wall", 1)

    seen_ids: set[str] = set()
    regular_areas: set[SemanticLocation] = set()
    for lineno, cp in checkpoints:
        if cp.id in seen_ids:
            raise MapSyntaxError(f"duplicate checkpoint id {cp.id!r}", lineno)
        seen_ids.add(cp.id)
        if not world.in_bounds(cp.cell):
            raise CheckpointOffMap(f"checkpoint {cp.id} at {cp.cell} exceeds the map", lineno)
        if not world.walkable(cp.cell):
            raise CheckpointOnWall(f"checkpoint {cp.id} at {cp.cell} is on a wall", lineno)
        if cp.observes not in area_cells:
            raise MapSyntaxError(f"checkpoint {cp.id} names unknown area {cp.observes}", lineno)
        if cp.kind == "regular":
            containing = world.area_of(cp.cell)
            if containing != cp.observes:
                raise MapSyntaxError(
                    f"regular checkpoint {cp.id} stands in {containing} "
                    f"but is declared for {cp.observes}", lineno)
            if cp.observes in regular_areas:
                raise DuplicateRegularCheckpoint(
                    f"area {cp.observes} already has a regular checkpoint", lineno)
            regular_areas.add(cp.observes)
    return world


# Expansion order fixed for deterministic tie-breaking: up, right, down, left.
_NEIGHBOR_STEPS = ((0, -1), (1, 0), (0, 1), (-1, 0))


def plan_path(world: SemanticMap, start: Cell, goal: Cell) -> Path:
    """Shortest 4-connected path by breadth-first search."""
    if not world.walkable(start):
        raise ValueError(f"start {start} is not walkable")
    if not world.walkable(goal):
        raise ValueError(f"goal {goal} is not walkable")
    if start == goal:
        return Path((start,))
    parent: dict[Cell, Cell] = {start: start}
    queue = deque([start])
    while queue:
        x, y = queue.popleft()
        for dx, dy in _NEIGHBOR_STEPS:
            nxt = (x + dx, y + dy)
            if nxt in parent or not world.walkable(nxt):
                continue
            parent[nxt] = (x, y)
            if nxt == goal:
                cells = [nxt]
                while cells[-1] != start:
                    cells.append(parent[cells[-1]])
                return Path(tuple(reversed(cells)))
            queue.append(nxt)
    raise Unreachable(f"no path from {start} to {goal}")


def _distances_from(world: SemanticMap, start: Cell) -> dict[Cell, int]:
    dist = {start: 0}
    queue = deque([start])
    while queue:
        cell = queue.popleft()
        x, y = cell
        for dx, dy in _NEIGHBOR_STEPS:
            nxt = (x + dx, y + dy)
            if nxt not in dist and world.walkable(nxt):
                dist[nxt] = dist[cell] + 1
                queue.append(nxt)
    return dist


def plan_patrol(
    world: SemanticMap, targets: list[Checkpoint]
) -> tuple[tuple[Checkpoint, ...], int]:
    """Greedy nearest-neighbor visit order from home; ties by id."""
    remaining = list(targets)
    position = world.home
    tour: list[Checkpoint] = []
    total = 0
    while remaining:
        dist = _distances_from(world, position)
        best = None
        for cp in remaining:
            if cp.cell not in dist:
                raise UnreachableCheckpoint(f"checkpoint {cp.id} unreachable from {position}")
            key = (dist[cp.cell], cp.id)
            if best is None or key < best[0]:
                best = (key, cp)
        tour.append(best[1])
        total += best[0][0]
        position = best[1].cell
        remaining.remove(best[1])
    return tuple(tour), total


def mission_checkpoints(world: SemanticMap, mission: MissionMessage) -> list[Checkpoint]:
    """Checkpoints a mission requires: one event checkpoint per event,
    then every regular checkpoint (full obstacle refresh), deduped."""
    stops: list[Checkpoint] = []
    for event in mission.events:
        cp = world.event_checkpoint_for(event.location)
        if cp is None:
            raise NoEventCheckpoint(
                f"no event checkpoint observes {event.location} "
                f"(event {event.number}, {event.keyword})")
        stops.append(cp)
    stops.extend(world.regular_checkpoints)
    seen: set[str] = set()
    unique = []
    for cp in stops:
        if cp.id not in seen:
            seen.add(cp.id)
            unique.append(cp)
    return unique
