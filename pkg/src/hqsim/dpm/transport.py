"""Byte-stream transports carrying protocol frames.

Two transports implement the same interface: an in-process pair of byte
queues for single-process tests, and a TCP socket for the two-process
demo. Both move raw bytes; framing happens in FrameChannel, so the wire
format is identical everywhere.
"""

from __future__ import annotations

import queue
import socket
import time

from hqsim.dpm.framing import Frame, StreamDecoder, encode_frame

_CLOSE = object()


class ChannelClosedError(ConnectionError):
    """The peer endpoint is gone."""


class QueueEndpoint:
    """One end of an in-process byte pipe."""

    def __init__(self, inbox: queue.Queue, outbox: queue.Queue) -> None:
        self._inbox = inbox
        self._outbox = outbox
        self._closed = False

    def send(self, data: bytes) -> None:
        if self._closed:
            raise ChannelClosedError("endpoint is closed")
        self._outbox.put(data)

    def recv(self, timeout: float | None = None) -> bytes:
        """Return the next chunk; raises TimeoutError / ChannelClosedError."""
        try:
            item = self._inbox.get(timeout=timeout)
        except queue.Empty:
            raise TimeoutError("no data within timeout") from None
        if item is _CLOSE:
            self._inbox.put(_CLOSE)  # keep the EOF visible to later reads
            raise ChannelClosedError("peer closed the channel")
        return item

    def close(self) -> None:
        self._closed = True
        self._outbox.put(_CLOSE)


def inprocess_pair() -> tuple[QueueEndpoint, QueueEndpoint]:
    a_to_b: queue.Queue = queue.Queue()
    b_to_a: queue.Queue = queue.Queue()
    return (
        QueueEndpoint(inbox=b_to_a, outbox=a_to_b),
        QueueEndpoint(inbox=a_to_b, outbox=b_to_a),
    )


class SocketEndpoint:
    """Adapter giving a connected TCP socket the endpoint interface."""

    def __init__(self, sock: socket.socket) -> None:
        self._sock = sock

    def send(self, data: bytes) -> None:
        try:
            self._sock.sendall(data)
        except OSError as exc:
            raise ChannelClosedError(str(exc)) from exc

    def recv(self, timeout: float | None = None) -> bytes:
        self._sock.settimeout(timeout)
        try:
            data = self._sock.recv(65536)
        except socket.timeout:
            raise TimeoutError("no data within timeout") from None
        except OSError as exc:
            raise ChannelClosedError(str(exc)) from exc
        if not data:
            raise ChannelClosedError("peer closed the connection")
        return data

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


class FrameChannel:
    """Frame-level view of an endpoint: encode on send, reassemble on recv."""

    def __init__(self, endpoint) -> None:
        self._endpoint = endpoint
        self._decoder = StreamDecoder()
        self._ready: list[Frame] = []

    def send_frame(self, frame: Frame) -> None:
        self._endpoint.send(encode_frame(frame))

    def recv_frame(self, timeout: float | None = None) -> Frame:
        """Next whole frame; TimeoutError / ChannelClosedError propagate.

        The timeout is a deadline for the whole frame, not per chunk.
        """
        deadline = None if timeout is None else time.monotonic() + timeout
        while not self._ready:
            remaining: float | None = None
            if deadline is not None:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise TimeoutError("frame not complete within timeout")
            self._ready.extend(
                self._decoder.feed(self._endpoint.recv(remaining))
            )
        return self._ready.pop(0)

    def close(self) -> None:
        self._endpoint.close()
