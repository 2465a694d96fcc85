"""Acceptance gate: one test per shipping criterion, each printing a
single [PASS]/[FAIL] line (run with -s to see them on success).

Expected values come from independent in-test oracles (ground-truth
counts, a second BFS, exhaustive permutation search, checksums), never
from the code under test.
"""

import hashlib
import math
import random
import threading
import time
from collections import deque
from contextlib import contextmanager
from datetime import datetime, timezone
from importlib import resources

import pytest

from robot_patrol.channel import NotFound, SyncChannel, UPDATE_FILE
from robot_patrol.datastore import Datastore
from robot_patrol.engine import patrol_daemon, run_mission
from robot_patrol.gamification import (
    Action,
    evaluate_badges,
    record_action,
    total_points,
)
from robot_patrol.perception import Detection, DetectionModel, WorldState
from robot_patrol.protocol import (
    DEFAULT_REGISTRY,
    EventRequest,
    EventResult,
    MissionMessage,
    ObstacleClass,
    ObstacleEntry,
    ProtocolError,
    SemanticLocation,
    UpdateMessage,
    parse_mission,
    parse_update,
    serialize_mission,
    serialize_update,
)
from robot_patrol.perception import verify_event
from robot_patrol.scenario import Scenario
from robot_patrol.semantic_map import load_map, plan_path
from robot_patrol.service import PatrolService

T0 = datetime(2025, 1, 1, tzinfo=timezone.utc)


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name}")
        raise
    print(f"[PASS] {name}")


def _asset(name):
    return resources.files("robot_patrol").joinpath("assets", name).read_text("utf-8")


def _demo_map():
    return load_map(_asset("demo_map.txt"))


_KINDS = ("corridor", "corner", "hall", "lobby", "atrium", "wing")


def _location(rng):
    return SemanticLocation(rng.choice(_KINDS), rng.randint(1, 99))


def _random_mission(rng):
    keywords = ("class_waiting", "elevator_repair")
    ev_numbers = rng.sample(range(1, 500), rng.randint(0, 6))
    ob_numbers = rng.sample(range(1, 500), rng.randint(0, 8))
    return MissionMessage(
        events=tuple(
            EventRequest(n, rng.choice(keywords), _location(rng)) for n in ev_numbers
        ),
        obstacles=tuple(
            ObstacleEntry(n, rng.choice(list(ObstacleClass)), rng.randint(1, 9),
                          _location(rng))
            for n in ob_numbers
        ),
    )


def _random_update(rng):
    ev_numbers = rng.sample(range(1, 500), rng.randint(0, 6))
    n_obstacles = rng.randint(0, 8)
    return UpdateMessage(
        event_results=tuple(EventResult(n, rng.randint(0, 1)) for n in ev_numbers),
        obstacles=tuple(
            ObstacleEntry(i + 1, rng.choice(list(ObstacleClass)), rng.randint(1, 9),
                          _location(rng))
            for i in range(n_obstacles)
        ),
    )


def test_protocol_round_trip_and_fuzz():
    """1,000 random values per message type survive a byte round-trip;
    10,000 fuzz inputs produce structured errors only."""
    with criterion("protocol round-trip (2,000 messages) and fuzz (10,000 inputs)"):
        started = time.monotonic()
        rng = random.Random(0xACCE97)

        for _ in range(1000):
            mission = _random_mission(rng)
            assert parse_mission(serialize_mission(mission)) == mission
            update = _random_update(rng)
            assert parse_update(serialize_update(update)) == update

        soup_tokens = [
            "#Event", "#Obstacle", "#Nothing", "0", "1", "2", "-3", "99999",
            "chair", "people", "zeppelin", "corridor_1", "corridor_", "_1",
            "elevator_repair", "class_waiting", "", " ", "\t", "x" * 300,
        ]
        crashes = []
        for case in range(10000):
            pick = case % 3
            if pick == 0:
                data = rng.randbytes(rng.randint(0, 150))
            elif pick == 1:
                blob = bytearray(serialize_mission(_random_mission(rng)) if case % 2
                                 else serialize_update(_random_update(rng)))
                for _ in range(rng.randint(1, 5)):
                    if blob:
                        blob[rng.randrange(len(blob))] = rng.randint(0, 255)
                data = bytes(blob)
            else:
                lines = [
                    ", ".join(rng.choice(soup_tokens)
                              for _ in range(rng.randint(1, 6)))
                    for _ in range(rng.randint(1, 5))
                ]
                data = "\n".join(lines).encode()
            for parser in (parse_mission, parse_update):
                try:
                    parser(data)
                except ProtocolError:
                    pass
                except Exception as exc:  # anything else is a crash
                    crashes.append((data[:60], repr(exc)))
        assert crashes == [], crashes[:5]
        elapsed = time.monotonic() - started
        assert elapsed < 30.0, f"took {elapsed:.1f}s"


def test_event_rules_exact_thresholds():
    """class_waiting fires at 3+ people, elevator_repair at 1+ signs,
    checked exhaustively."""
    with criterion("event rules exact (people 0..10, signs 0..3)"):
        where = SemanticLocation("corridor", 1)
        for people in range(0, 11):
            detections = [Detection(ObstacleClass.PEOPLE, where, f"o{i}")
                          for i in range(people)]
            expected = 1 if people >= 3 else 0
            assert verify_event(detections, "class_waiting") == expected, people
        for signs in range(0, 4):
            detections = [Detection(ObstacleClass.WARNING_SIGNAL, where, f"o{i}")
                          for i in range(signs)]
            expected = 1 if signs >= 1 else 0
            assert verify_event(detections, "elevator_repair") == expected, signs


def test_perception_matches_ground_truth_counts():
    """With a perfect detector, 100 random worlds yield updates equal to
    per-area ground truth exactly."""
    with criterion("oracle equivalence on 100 random worlds"):
        started = time.monotonic()
        world_map = _demo_map()
        areas = sorted(world_map.areas, key=str)
        model = DetectionModel.perfect(seed=7)
        rng = random.Random(2024)

        for trial in range(100):
            world = WorldState()
            truth = {}  # (location, class) -> count, built during placement
            for area in areas:
                for cls in ObstacleClass:
                    count = rng.randint(1, 3) if rng.random() < 0.25 else 0
                    for _ in range(count):
                        world.add(cls, area)
                    if count:
                        truth[(area, cls)] = count
            update, _ = run_mission(
                world_map, world, MissionMessage(), model,
                patrol_id=trial, now=T0,
            )
            got = {(o.location, o.obstacle_type): o.count for o in update.obstacles}
            assert got == truth, f"trial {trial}"
            numbers = [o.number for o in update.obstacles]
            assert numbers == list(range(1, len(numbers) + 1))
        elapsed = time.monotonic() - started
        assert elapsed < 10.0, f"took {elapsed:.1f}s"


def _oracle_distances(walls, width, height, start):
    """Independent flood fill, deliberately not sharing planner code."""
    dist = {start: 0}
    frontier = deque([start])
    while frontier:
        x, y = frontier.popleft()
        for nxt in ((x, y - 1), (x + 1, y), (x, y + 1), (x - 1, y)):
            nx, ny = nxt
            if not (0 <= nx < width and 0 <= ny < height):
                continue
            if nxt in walls or nxt in dist:
                continue
            dist[nxt] = dist[(x, y)] + 1
            frontier.append(nxt)
    return dist


def test_path_planner_matches_bfs_oracle():
    """plan_path length equals an independent BFS on 50 random maps
    with 20 start/goal pairs each."""
    with criterion("planner optimality: 50 maps x 20 pairs, zero mismatches"):
        started = time.monotonic()
        rng = random.Random(31337)
        width = height = 20
        for round_no in range(50):
            walls = {(x, 0) for x in range(width)} | {(x, height - 1) for x in range(width)}
            walls |= {(0, y) for y in range(height)} | {(width - 1, y) for y in range(height)}
            for x in range(1, width - 1):
                for y in range(1, height - 1):
                    if rng.random() < 0.25:
                        walls.add((x, y))
            free = [(x, y) for x in range(width) for y in range(height)
                    if (x, y) not in walls]
            home = rng.choice(free)
            lines = [f"map {width} {height}"]
            lines += [f"wall {x} {y} {x} {y}" for (x, y) in sorted(walls)]
            lines.append(f"home {home[0]} {home[1]}")
            world_map = load_map("\n".join(lines) + "\n")

            component = _oracle_distances(walls, width, height, home)
            reachable = sorted(component)
            if len(reachable) < 2:
                continue
            for _ in range(20):
                start, goal = rng.choice(reachable), rng.choice(reachable)
                oracle = _oracle_distances(walls, width, height, start)[goal]
                got = plan_path(world_map, start, goal).length
                assert got == oracle, (round_no, start, goal, got, oracle)
        elapsed = time.monotonic() - started
        assert elapsed < 10.0, f"took {elapsed:.1f}s"


def test_greedy_tour_within_twice_optimal():
    """Greedy tour over the demo map's nine regular checkpoints stays
    within 2x the optimum found by exhaustive permutation search."""
    with criterion("greedy tour <= 2x exhaustive-search optimum"):
        from robot_patrol.semantic_map import plan_patrol

        world_map = _demo_map()
        stops = list(world_map.regular_checkpoints)
        assert len(stops) <= 10
        _, greedy_total = plan_patrol(world_map, stops)

        walls = set(world_map.walls)
        cells = [cp.cell for cp in stops]
        from_home = _oracle_distances(walls, world_map.width, world_map.height,
                                      world_map.home)
        pairwise = [
            _oracle_distances(walls, world_map.width, world_map.height, cell)
            for cell in cells
        ]

        best = math.inf

        def search(current, remaining, acc):
            nonlocal best
            if acc >= best:
                return  # prunes provably worse branches only
            if not remaining:
                best = acc
                return
            for nxt in list(remaining):
                leg = (from_home[cells[nxt]] if current is None
                       else pairwise[current][cells[nxt]])
                search(nxt, remaining - {nxt}, acc + leg)

        search(None, frozenset(range(len(cells))), 0)
        assert best < math.inf
        assert best <= greedy_total <= 2 * best, (greedy_total, best)


def test_ledger_totals_and_badges():
    """login -> begin -> complete yields running totals 1, 2, 7; replay
    reproduces totals; each badge fires exactly once."""
    with criterion("ledger totals 1/2/7, replay match, badges fire once"):
        store = Datastore()
        user = store.create_user("ana", "registered", now=T0)
        totals = []
        for action in (Action.LOGIN, Action.REPORT_STARTED, Action.REPORT_COMPLETED):
            total, _ = record_action(store, user.user_id, action, T0)
            totals.append(total)
        assert totals == [1, 2, 7]

        # Replay: independent sum over raw ledger rows.
        rows = store.ledger_rows(user.user_id)
        assert sum(row["points"] for row in rows) == total_points(store, user.user_id)

        # Crossing 10 and 50 awards bronze then silver, each exactly once.
        awarded = []
        for _ in range(10):
            _, fresh = record_action(store, user.user_id, Action.REPORT_COMPLETED, T0)
            awarded.extend(fresh)
        assert total_points(store, user.user_id) == 57
        assert awarded.count("helper_bronze") == 1
        assert awarded.count("helper_silver") == 1
        assert evaluate_badges(store, user.user_id, T0.isoformat()) == []
        names = [name for name, _ in store.badges_for(user.user_id)]
        assert sorted(names) == ["helper_bronze", "helper_silver"]


def _outage_harness(tmp_path, sub):
    world_map = _demo_map()
    world = WorldState.parse(_asset("demo_world.txt"))
    root = tmp_path / sub
    root.mkdir()
    channel = SyncChannel(root)
    scenario = Scenario(world_map, world, DetectionModel.perfect(seed=11),
                        channel=channel)
    return scenario, channel, world


def test_elevator_outage_end_to_end(tmp_path):
    """Guest report -> dispatch -> patrol verifies the sign -> advisory
    high; removing the sign flips the event off and severity to low."""
    with criterion("end-to-end elevator outage with refutation flip"):
        started = time.monotonic()
        scenario, channel, world = _outage_harness(tmp_path, "outage")
        service = scenario.service
        store = service.store

        guest = service.guest_session()
        report = service.submit_event(guest["user_id"], "elevator_repair",
                                      "elevator_1")["report_id"]
        service.dispatch()
        patrol_daemon(channel, scenario.world_map, world,
                      scenario.model, once=True)

        update_bytes, _, _ = channel.fetch_latest(UPDATE_FILE)
        assert b"#Event, 1, 1" in update_bytes

        assert service.sync_and_get_report(report).status == "verified"
        advisory = service.advisory(["elevator_1"])
        assert advisory["overall"] == "high"
        area = advisory["areas"][0]
        assert area["stale"] is False
        _, patrol_at = store.last_patrol()
        assert area["verified_at"] == patrol_at

        # Repair done: the sign disappears before the next patrol.
        assert world.remove(ObstacleClass.WARNING_SIGNAL,
                            SemanticLocation.parse("elevator_1"))
        service.dispatch()  # carries a recheck for the active event
        patrol_daemon(channel, scenario.world_map, world,
                      scenario.model, once=True)

        flipped = service.advisory(["elevator_1"])
        assert flipped["overall"] == "low"
        assert flipped["areas"][0]["active_events"] == []
        _, events, _ = store.query_verified(SemanticLocation.parse("elevator_1"))
        latest = {e.keyword: e.result for e in events}
        assert latest["elevator_repair"] == 0

        elapsed = time.monotonic() - started
        assert elapsed < 5.0, f"took {elapsed:.1f}s"


def test_channel_concurrent_writers(tmp_path):
    """Two writers x 100 publishes each: every observed payload intact,
    final revision is the highest."""
    with criterion("channel safety under 2x100 concurrent writers"):
        channel = SyncChannel(tmp_path)
        name = "Stress.txt"
        damage = []
        done = threading.Event()

        def payload(writer, seq):
            body = f"{writer}:{seq}"
            return f"{body}:{hashlib.sha256(body.encode()).hexdigest()}".encode()

        def writer(writer_id):
            for seq in range(100):
                channel.publish(name, payload(writer_id, seq))

        def reader():
            last_revision = 0
            while not done.is_set():
                try:
                    content, revision, _ = channel.fetch_latest(name)
                except NotFound:
                    continue
                writer_id, seq, digest = content.decode().split(":")
                body = f"{writer_id}:{seq}"
                if hashlib.sha256(body.encode()).hexdigest() != digest:
                    damage.append(content)
                if revision < last_revision:
                    damage.append(f"revision went backwards: {revision}")
                last_revision = revision

        threads = [threading.Thread(target=writer, args=(w,)) for w in ("a", "b")]
        watchers = [threading.Thread(target=reader) for _ in range(2)]
        for t in watchers + threads:
            t.start()
        for t in threads:
            t.join()
        done.set()
        for t in watchers:
            t.join()

        assert damage == [], damage[:3]
        content, revision, _ = channel.fetch_latest(name)
        assert revision == 200
        writer_id, seq, digest = content.decode().split(":")
        assert hashlib.sha256(f"{writer_id}:{seq}".encode()).hexdigest() == digest


def test_identical_seeds_identical_outputs(tmp_path):
    """Two scripted runs with the same seed: byte-identical update files
    and identical rendered advisories."""
    with criterion("determinism: byte-identical updates and advisories"):
        script = _asset("elevator_outage.script")
        first, chan_a, _ = _outage_harness(tmp_path, "a")
        second, chan_b, _ = _outage_harness(tmp_path, "b")
        out_a = first.run(script)
        out_b = second.run(script)
        assert out_a.exit_code == out_b.exit_code == 0
        assert out_a.transcript == out_b.transcript  # advisories included
        bytes_a, rev_a, _ = chan_a.fetch_latest(UPDATE_FILE)
        bytes_b, rev_b, _ = chan_b.fetch_latest(UPDATE_FILE)
        assert (bytes_a, rev_a) == (bytes_b, rev_b)
        adv_a = first.service.advisory(["elevator_1", "corridor_1"])
        adv_b = second.service.advisory(["elevator_1", "corridor_1"])
        assert adv_a["sentences"] == adv_b["sentences"]
        assert adv_a["overall"] == adv_b["overall"]


if __name__ == "__main__":
    pytest.main([__file__, "-q", "-s"])
