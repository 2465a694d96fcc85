"""Channel semantics: atomic overwrite, revision monotonicity, signalling."""

import hashlib
import threading
import time

import pytest

from robot_patrol.channel import (
    ChannelUnavailable,
    NotFound,
    SyncChannel,
    Timeout,
)


@pytest.fixture
def channel(tmp_path):
    return SyncChannel(tmp_path)


def test_publish_then_fetch(channel):
    rev = channel.publish("MissionMessage.txt", b"hello\n")
    assert rev == 1
    content, revision, written_at = channel.fetch_latest("MissionMessage.txt")
    assert content == b"hello\n"
    assert revision == 1
    assert "T" in written_at  # ISO-8601 timestamp

def test_last_write_wins(channel):
    channel.publish("Update.txt", b"first\n")
    rev = channel.publish("Update.txt", b"second\n")
    assert rev == 2
    content, revision, _ = channel.fetch_latest("Update.txt")
    assert (content, revision) == (b"second\n", 2)


def test_fetch_before_publish(channel):
    with pytest.raises(NotFound):
        channel.fetch_latest("MissionMessage.txt")


def test_fetch_repeatable(channel):
    channel.publish("a.txt", b"x")
    first = channel.fetch_latest("a.txt")
    second = channel.fetch_latest("a.txt")
    assert first[:2] == second[:2]


def test_names_have_independent_revisions(channel):
    assert channel.publish("a.txt", b"1") == 1
    assert channel.publish("b.txt", b"1") == 1
    assert channel.publish("a.txt", b"2") == 2
    assert channel.revision_of("b.txt") == 1
    assert channel.revision_of("missing.txt") == 0


def test_publish_without_root(tmp_path):
    ch = SyncChannel(tmp_path / "nonexistent")
    with pytest.raises(ChannelUnavailable):
        ch.publish("a.txt", b"x")


def test_sidecar_meta_format(channel, tmp_path):
    channel.publish("Update.txt", b"payload")
    meta = (tmp_path / "Update.txt.meta").read_text()
    lines = meta.splitlines()
    assert lines[0] == "revision=1"
    assert lines[1].startswith("written_at=")


def test_await_change_sees_publish(channel):
    channel.publish("a.txt", b"1")
    assert channel.await_change("a.txt", 0, timeout=1.0) == 1


def test_await_change_times_out(channel):
    channel.publish("a.txt", b"1")
    started = time.monotonic()
    with pytest.raises(Timeout):
        channel.await_change("a.txt", 1, timeout=0.1)
    assert time.monotonic() - started < 2.0


def test_await_change_rejects_bad_timeout(channel):
    with pytest.raises(ValueError):
        channel.await_change("a.txt", 0, timeout=0)


def test_publish_during_await(channel):
    result = {}

    def waiter():
        result["rev"] = channel.await_change("a.txt", 0, timeout=5.0)

    t = threading.Thread(target=waiter)
    t.start()
    time.sleep(0.05)
    channel.publish("a.txt", b"late")
    t.join(timeout=5.0)
    assert not t.is_alive()
    assert result["rev"] == 1


def _checksummed(tag: str, i: int) -> bytes:
    body = f"{tag}:{i}:".encode() + b"x" * 4096
    return hashlib.sha256(body).hexdigest().encode() + b"|" + body


def _intact(payload: bytes) -> bool:
    digest, _, body = payload.partition(b"|")
    return hashlib.sha256(body).hexdigest().encode() == digest


def test_concurrent_writers_never_tear(channel):
    """Two writers, 100 publishes each; every fetch must be intact."""
    published = set()
    errors = []

    def writer(tag):
        try:
            for i in range(100):
                payload = _checksummed(tag, i)
                published.add(payload)
                channel.publish("stress.txt", payload)
        except Exception as exc:  # pragma: no cover
            errors.append(exc)

    def reader():
        try:
            for _ in range(200):
                try:
                    content, revision, _ = channel.fetch_latest("stress.txt")
                except NotFound:
                    continue
                assert _intact(content), "torn payload observed"
        except Exception as exc:  # pragma: no cover
            errors.append(exc)

    threads = [threading.Thread(target=writer, args=(t,)) for t in ("a", "b")]
    threads += [threading.Thread(target=reader) for _ in range(2)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    content, revision, _ = channel.fetch_latest("stress.txt")
    assert revision == 200
    assert content in published


if __name__ == "__main__":
    pytest.main([__file__, "-q"])
