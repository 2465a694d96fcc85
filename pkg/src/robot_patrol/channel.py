"""Shared-directory sync channel.

Models a cloud-drive sync folder as a local directory: whole-file
atomic overwrite, last-write-wins, per-name monotonically increasing
revision. Each payload file ``<name>`` has a plain-text sidecar
``<name>.meta``::

    revision=<n>
    written_at=<ISO-8601>

Writers hold an exclusive lock on ``<name>.lock`` across the
content+meta replacement; readers hold a shared lock, so a fetch never
observes a torn payload or a mislabelled revision.
"""

from __future__ import annotations

import fcntl
import os
import tempfile
import time
from datetime import datetime, timezone
from pathlib import Path

MISSION_FILE = "MissionMessage.txt"
UPDATE_FILE = "Update.txt"

_POLL_INTERVAL = 0.015


class ChannelError(Exception):
    pass


class ChannelUnavailable(ChannelError):
    """Channel root directory missing or unwritable."""


class NotFound(ChannelError):
    """No revision of the named file has ever been published."""


class Timeout(ChannelError):
    """await_change saw no new revision in time; a signal, not a failure."""


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _parse_meta(raw: str) -> tuple[int, str]:
    fields = {}
    for line in raw.splitlines():
        if "=" in line:
            key, _, value = line.partition("=")
            fields[key.strip()] = value.strip()
    return int(fields["revision"]), fields["written_at"]


class SyncChannel:
    """A named-file channel rooted at a shared directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def _paths(self, name: str) -> tuple[Path, Path, Path]:
        return (
            self.root / name,
            self.root / (name + ".meta"),
            self.root / (name + ".lock"),
        )

    def publish(self, name: str, content: bytes) -> int:
        """Atomically replace the file, bump its revision, return it."""
        path, meta, lock = self._paths(name)
        if not self.root.is_dir():
            raise ChannelUnavailable(f"channel root {self.root} is not a directory")
        try:
            with open(lock, "a+b") as lk:
                fcntl.flock(lk.fileno(), fcntl.LOCK_EX)
                revision = 0
                if meta.exists():
                    revision = _parse_meta(meta.read_text())[0]
                revision += 1
                written_at = datetime.now(timezone.utc).isoformat()
                _atomic_write(path, content)
                _atomic_write(meta, f"revision={revision}\nwritten_at={written_at}\n".encode())
        except OSError as exc:
            raise ChannelUnavailable(f"cannot publish {name} under {self.root}: {exc}") from exc
        return revision

    def fetch_latest(self, name: str) -> tuple[bytes, int, str]:
        """Return (content, revision, written_at) of the latest publish."""
        path, meta, lock = self._paths(name)
        if not meta.exists():
            raise NotFound(f"{name} has never been published to {self.root}")
        try:
            with open(lock, "a+b") as lk:
                fcntl.flock(lk.fileno(), fcntl.LOCK_SH)
                revision, written_at = _parse_meta(meta.read_text())
                content = path.read_bytes()
        except FileNotFoundError:
            raise NotFound(f"{name} has never been published to {self.root}") from None
        return content, revision, written_at

    def revision_of(self, name: str) -> int:
        """Current revision, 0 if never published."""
        meta = self.root / (name + ".meta")
        try:
            return _parse_meta(meta.read_text())[0]
        except (FileNotFoundError, KeyError, ValueError):
            return 0

    def await_change(self, name: str, since_revision: int, timeout: float) -> int:
        """Block until the revision exceeds since_revision; raise Timeout."""
        if timeout <= 0:
            raise ValueError("timeout must be > 0")
        deadline = time.monotonic() + timeout
        while True:
            current = self.revision_of(name)
            if current > since_revision:
                return current
            if time.monotonic() >= deadline:
                raise Timeout(
                    f"no revision of {name} above {since_revision} within {timeout}s"
                )
            time.sleep(min(_POLL_INTERVAL, max(deadline - time.monotonic(), 0.001)))
