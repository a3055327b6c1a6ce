"""Name-to-port registries for the rendezvous step.

The in-memory registry backs single-process tests. The file registry backs
the two-process demo: publishing drops a file with the port into a shared
directory, the same way a DPM directory is shared between separately
launched programs. Lookups of unpublished names are retryable failures.
"""

from __future__ import annotations

import os
import threading
from pathlib import Path


class NameAlreadyPublishedError(ValueError):
    pass


class NameNotFoundError(KeyError):
    """The name is not (yet) published; callers may retry."""


class InMemoryNameRegistry:
    def __init__(self) -> None:
        self._bindings: dict[str, str] = {}
        self._lock = threading.Lock()

    def publish(self, name: str, port: str) -> None:
        with self._lock:
            if name in self._bindings:
                raise NameAlreadyPublishedError(
                    f"name '{name}' is already published"
                )
            self._bindings[name] = port

    def lookup(self, name: str) -> str:
        with self._lock:
            try:
                return self._bindings[name]
            except KeyError:
                raise NameNotFoundError(name) from None

    def unpublish(self, name: str) -> None:
        with self._lock:
            self._bindings.pop(name, None)


class FileNameRegistry:
    """Directory-backed registry shared between processes."""

    def __init__(self, directory: str | os.PathLike) -> None:
        self._dir = Path(directory)
        self._dir.mkdir(parents=True, exist_ok=True)

    def _path(self, name: str) -> Path:
        safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in name)
        return self._dir / f"{safe}.port"

    def publish(self, name: str, port: str) -> None:
        path = self._path(name)
        try:
            # O_EXCL makes concurrent double-publish lose cleanly.
            fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_EXCL)
        except FileExistsError:
            raise NameAlreadyPublishedError(
                f"name '{name}' is already published"
            ) from None
        with os.fdopen(fd, "w") as handle:
            handle.write(port)

    def lookup(self, name: str) -> str:
        path = self._path(name)
        try:
            text = path.read_text()
        except FileNotFoundError:
            raise NameNotFoundError(name) from None
        if not text:
            # Published but not yet flushed; treat as not found (retryable).
            raise NameNotFoundError(name)
        return text

    def unpublish(self, name: str) -> None:
        try:
            self._path(name).unlink()
        except FileNotFoundError:
            pass
