"""Simulated robot vision over a ground-truth world.

The world is a bag of classed objects placed in semantic areas
(file format: one ``object <class> <location>`` per line, '#'
comments). The detection model replaces a real vision stack with two
knobs per class: a true-positive probability p_tp (chance a present
object is seen) and a Poisson false-positive rate lambda_fp (expected
spurious sightings per observation). Identical (seed, checkpoint,
patrol counter) always reproduce identical detections.

Event verdicts follow fixed counting rules: a waiting crowd is
confirmed at three or more people, an elevator repair by at least one
warning signal; further keywords carry their own (class, threshold)
rule in the registry.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from .protocol import (
    DEFAULT_REGISTRY,
    BadLocation,
    KeywordRegistry,
    MalformedLine,
    ObstacleClass,
    ObstacleEntry,
    SemanticLocation,
)
from .semantic_map import Checkpoint

SPURIOUS = "spurious"


class PerceptionError(Exception):
    pass


class UnregisteredKeyword(PerceptionError):
    pass


class MixedLocations(PerceptionError):
    pass


@dataclass(frozen=True)
class WorldObject:
    object_id: str
    object_class: ObstacleClass
    location: SemanticLocation


class WorldState:
    """Mutable ground truth: which objects currently sit where."""

    def __init__(self, objects=()):
        self._objects: list[WorldObject] = list(objects)
        self._next_id = len(self._objects) + 1

    @classmethod
    def parse(cls, text: str) -> "WorldState":
        world = cls()
        for lineno, raw in enumerate(text.split("\n"), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 3 or fields[0] != "object":
                raise MalformedLine(f"expected 'object <class> <location>', got {line!r}", lineno)
            world.add(ObstacleClass.from_token(fields[1], lineno),
                      SemanticLocation.parse(fields[2], lineno))
        return world

    @property
    def objects(self) -> tuple[WorldObject, ...]:
        return tuple(self._objects)

    def add(self, object_class: ObstacleClass, location: SemanticLocation) -> str:
        object_id = f"o{self._next_id}"
        self._next_id += 1
        self._objects.append(WorldObject(object_id, object_class, location))
        return object_id

    def remove(self, object_class: ObstacleClass, location: SemanticLocation) -> bool:
        """Remove one matching object; False if none present."""
        for i, obj in enumerate(self._objects):
            if obj.object_class == object_class and obj.location == location:
                del self._objects[i]
                return True
        return False

    def in_area(self, location: SemanticLocation) -> tuple[WorldObject, ...]:
        return tuple(o for o in self._objects if o.location == location)

    def counts_in(self, location: SemanticLocation) -> dict[ObstacleClass, int]:
        counts: dict[ObstacleClass, int] = {}
        for obj in self.in_area(location):
            counts[obj.object_class] = counts.get(obj.object_class, 0) + 1
        return counts


@dataclass(frozen=True)
class Detection:
    object_class: ObstacleClass
    location: SemanticLocation
    truth_ref: str  # source object_id, or "spurious"


@dataclass(frozen=True)
class DetectionModel:
    """Per-class detection rates; unlisted classes default to a perfect
    detector (p_tp=1.0, lambda_fp=0.0)."""

    p_tp: dict = field(default_factory=dict)
    lambda_fp: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        for cls, p in self.p_tp.items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"p_tp.{cls.value} must be in [0,1], got {p}")
        for cls, lam in self.lambda_fp.items():
            if lam < 0.0:
                raise ValueError(f"lambda_fp.{cls.value} must be >= 0, got {lam}")

    def tp(self, object_class: ObstacleClass) -> float:
        return self.p_tp.get(object_class, 1.0)

    def fp(self, object_class: ObstacleClass) -> float:
        return self.lambda_fp.get(object_class, 0.0)

    @classmethod
    def perfect(cls, seed: int = 0) -> "DetectionModel":
        return cls(seed=seed)

    @classmethod
    def from_config(cls, text: str) -> "DetectionModel":
        """Parse "key = value" lines: p_tp.<class>, lambda_fp.<class>, seed."""
        p_tp: dict[ObstacleClass, float] = {}
        lambda_fp: dict[ObstacleClass, float] = {}
        seed = 0
        for lineno, raw in enumerate(text.split("\n"), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise MalformedLine(f"expected 'key = value', got {line!r}", lineno)
            key, value = key.strip(), value.strip()
            try:
                if key == "seed":
                    seed = int(value)
                elif key.startswith("p_tp."):
                    p_tp[ObstacleClass.from_token(key[5:], lineno)] = float(value)
                elif key.startswith("lambda_fp."):
                    lambda_fp[ObstacleClass.from_token(key[10:], lineno)] = float(value)
                else:
                    raise MalformedLine(f"unknown config key {key!r}", lineno)
            except ValueError:
                raise MalformedLine(f"bad numeric value for {key}: {value!r}", lineno) from None
        return cls(p_tp, lambda_fp, seed)


def _stream(model: DetectionModel, checkpoint_id: str, patrol: int) -> np.random.Generator:
    # One independent, replayable stream per (seed, patrol, checkpoint).
    return np.random.default_rng(
        [model.seed & 0xFFFFFFFF, patrol & 0xFFFFFFFF, zlib.crc32(checkpoint_id.encode())]
    )


def observe(
    world: WorldState,
    checkpoint: Checkpoint,
    model: DetectionModel,
    patrol: int = 0,
) -> list[Detection]:
    """One observation of checkpoint.observes under the detection model."""
    rng = _stream(model, checkpoint.id, patrol)
    location = checkpoint.observes
    detections: list[Detection] = []
    for obj in world.in_area(location):
        if rng.random() < model.tp(obj.object_class):
            detections.append(Detection(obj.object_class, location, obj.object_id))
    for object_class in ObstacleClass:
        lam = model.fp(object_class)
        if lam > 0.0:
            for _ in range(int(rng.poisson(lam))):
                detections.append(Detection(object_class, location, SPURIOUS))
    return detections


def verify_event(
    detections: list[Detection],
    keyword: str,
    registry: KeywordRegistry = DEFAULT_REGISTRY,
) -> int:
    """1 if the keyword's rule is met by the detections, else 0."""
    if keyword not in registry:
        raise UnregisteredKeyword(f"keyword {keyword!r} has no verification rule")
    rule = registry.rule_for(keyword)
    count = sum(1 for d in detections if d.object_class == rule.target)
    return 1 if count >= rule.min_count else 0


def summarize_obstacles(
    detections: list[Detection], location: SemanticLocation
) -> list[ObstacleEntry]:
    """Group detections into per-class counts, canonical class order.

    Numbers here are provisional 1..k; the patrol engine renumbers
    across the whole patrol before an update goes out.
    """
    counts: dict[ObstacleClass, int] = {}
    for d in detections:
        if d.location != location:
            raise MixedLocations(f"detection at {d.location} summarized for {location}")
        counts[d.object_class] = counts.get(d.object_class, 0) + 1
    entries = []
    for object_class in ObstacleClass:
        if object_class in counts:
            entries.append(
                ObstacleEntry(len(entries) + 1, object_class, counts[object_class], location)
            )
    return entries
