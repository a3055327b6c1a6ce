"""Session state machines for the client/server early-release protocol.

Server lifecycle: Init -> Published -> Connected -> Draining -> Disconnected.
Client lifecycle: Init -> LookedUp -> Connected -> Disconnected.

Work items and results are legal only while Connected, and every result
must match the oldest outstanding work item (FIFO sequence numbers). The
server may only disconnect once no receives are outstanding. Any frame or
operation outside these rules raises ProtocolStateError and leaves the
session state untouched.

Instead of a fixed startup sleep between launching server and client, the
client retries its name lookup a bounded number of times; this makes the
rendezvous race testable and removes the timing guess.
"""

from __future__ import annotations

import logging
import struct
import time
from collections import deque
from enum import Enum
from typing import Callable

from hqsim.dpm.framing import MAX_PAYLOAD, Frame, FrameType
from hqsim.dpm.registry import NameNotFoundError
from hqsim.dpm.transport import ChannelClosedError, FrameChannel

logger = logging.getLogger(__name__)

_SEQ_LEN = 4
MAX_WORK_PAYLOAD = MAX_PAYLOAD - _SEQ_LEN

DEFAULT_LOOKUP_RETRIES = 50
DEFAULT_LOOKUP_INTERVAL = 0.1


class ProtocolStateError(RuntimeError):
    """An operation or frame arrived in a state where it is illegal."""


class UsageError(RuntimeError):
    """The caller misused the API (double wait, disconnect with pending)."""


class BrokenSessionError(ConnectionError):
    """The peer vanished while the session still needed it."""


class UnknownUnitError(KeyError):
    """cancel was asked for a unit id that was never registered."""


class SessionState(Enum):
    INIT = "init"
    PUBLISHED = "published"
    LOOKED_UP = "looked_up"
    CONNECTED = "connected"
    DRAINING = "draining"
    DISCONNECTED = "disconnected"


class ReceiveHandle:
    """A non-blocking receive posted for one work item's result."""

    __slots__ = ("seq", "result", "consumed")

    def __init__(self, seq: int) -> None:
        self.seq = seq
        self.result: bytes | None = None
        self.consumed = False

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        status = (
            "consumed"
            if self.consumed
            else ("ready" if self.result is not None else "pending")
        )
        return f"ReceiveHandle(seq={self.seq}, {status})"


def _pack_seq(seq: int, payload: bytes) -> bytes:
    return struct.pack(">I", seq) + payload


def _unpack_seq(payload: bytes) -> tuple[int, bytes]:
    if len(payload) < _SEQ_LEN:
        raise ProtocolStateError("work/result payload too short for sequence")
    return struct.unpack(">I", payload[:_SEQ_LEN])[0], payload[_SEQ_LEN:]


class ServerSession:
    """The classical component: owns the port and drives the lifecycle.

    The channel may be attached after construction (and after publish),
    since a real transport only exists once the client has dialed in.
    """

    def __init__(self, channel: FrameChannel | None = None) -> None:
        self.channel = channel
        self.state = SessionState.INIT
        self._registry = None
        self._name: str | None = None
        self._next_seq = 1
        self._pending: deque[ReceiveHandle] = deque()
        self._issued: list[ReceiveHandle] = []

    @property
    def pending_receives(self) -> tuple[ReceiveHandle, ...]:
        return tuple(self._pending)

    def publish(self, registry, name: str, port: str) -> None:
        """Init -> Published: bind the service name to the port."""
        if self.state is not SessionState.INIT:
            raise ProtocolStateError(f"publish while {self.state.name}")
        registry.publish(name, port)
        self._registry = registry
        self._name = name
        self.state = SessionState.PUBLISHED

    def deliver(self, frame: Frame) -> None:
        """Apply one incoming frame; the only state-transition entry point."""
        if self.state is SessionState.PUBLISHED:
            if frame.type is FrameType.CONNECT:
                self.channel.send_frame(Frame(FrameType.ACCEPT))
                self.state = SessionState.CONNECTED
                return
        elif self.state is SessionState.CONNECTED:
            if frame.type is FrameType.RESULT:
                seq, payload = _unpack_seq(frame.payload)
                if not self._pending:
                    raise ProtocolStateError(
                        f"result seq={seq} with no outstanding work item"
                    )
                head = self._pending[0]
                if head.seq != seq:
                    raise ProtocolStateError(
                        f"result seq={seq} does not match oldest outstanding "
                        f"seq={head.seq}"
                    )
                self._pending.popleft()
                head.result = payload
                return
        elif self.state is SessionState.DRAINING:
            if frame.type is FrameType.DISCONNECT:
                self.state = SessionState.DISCONNECTED
                if self._registry is not None and self._name is not None:
                    self._registry.unpublish(self._name)
                return
        raise ProtocolStateError(
            f"server in {self.state.name} cannot handle {frame.type.name}"
        )

    def accept(self, timeout: float | None = None) -> None:
        """Published -> Connected: wait for the client's connect frame.

        On timeout the session stays Published and may accept again.
        """
        if self.state is not SessionState.PUBLISHED:
            raise ProtocolStateError(f"accept while {self.state.name}")
        while self.state is not SessionState.CONNECTED:
            self.deliver(self.channel.recv_frame(timeout))

    def send_work(self, payload: bytes) -> ReceiveHandle:
        """Ship one opaque work item; returns the posted receive handle.

        The caller may do unrelated work before wait()ing on the handle.
        """
        if self.state is not SessionState.CONNECTED:
            raise ProtocolStateError(
                f"send_work while {self.state.name}: not connected"
            )
        if len(payload) > MAX_WORK_PAYLOAD:
            raise UsageError(
                f"work payload of {len(payload)} bytes exceeds "
                f"{MAX_WORK_PAYLOAD}"
            )
        seq = self._next_seq
        self._next_seq += 1
        handle = ReceiveHandle(seq)
        self._pending.append(handle)
        self._issued.append(handle)
        self.channel.send_frame(
            Frame(FrameType.WORK_ITEM, _pack_seq(seq, payload))
        )
        return handle

    def wait(self, handle: ReceiveHandle, timeout: float | None = None) -> bytes:
        """Block until the handle's result frame arrives and return it."""
        if handle not in self._issued:
            raise UsageError("handle does not belong to this session")
        if handle.consumed:
            raise UsageError(f"handle seq={handle.seq} was already waited on")
        while handle.result is None:
            if self.state is not SessionState.CONNECTED:
                raise BrokenSessionError(
                    f"waiting in {self.state.name}: session torn down"
                )
            try:
                self.deliver(self.channel.recv_frame(timeout))
            except ChannelClosedError as exc:
                raise BrokenSessionError(
                    f"peer gone while waiting for seq={handle.seq}"
                ) from exc
        handle.consumed = True
        return handle.result

    def shutdown_and_disconnect(self, timeout: float | None = None) -> None:
        """Stop the client's listener loop and tear the session down.

        Idempotent once disconnected. Usage error while receives are
        outstanding.
        """
        if self.state is SessionState.DISCONNECTED:
            logger.debug("shutdown_and_disconnect: already disconnected")
            return
        if self.state is SessionState.CONNECTED:
            if self._pending:
                raise UsageError(
                    f"cannot disconnect with {len(self._pending)} pending "
                    "receive(s)"
                )
            self.channel.send_frame(Frame(FrameType.SHUTDOWN))
            self.state = SessionState.DRAINING
        if self.state is not SessionState.DRAINING:
            raise ProtocolStateError(f"shutdown while {self.state.name}")
        while self.state is not SessionState.DISCONNECTED:
            try:
                self.deliver(self.channel.recv_frame(timeout))
            except ChannelClosedError as exc:
                raise BrokenSessionError(
                    "client vanished before acknowledging disconnect"
                ) from exc


class ClientSession:
    """The quantum component: resolves the name, serves work, exits on
    shutdown."""

    def __init__(
        self,
        channel: FrameChannel | None = None,
        work_handler: Callable[[bytes], bytes] | None = None,
    ) -> None:
        self.channel = channel
        self.state = SessionState.INIT
        self.work_handler = work_handler or (lambda payload: payload)
        self._connect_sent = False
        self.rounds_served = 0

    def lookup(
        self,
        registry,
        name: str,
        retries: int = DEFAULT_LOOKUP_RETRIES,
        interval: float = DEFAULT_LOOKUP_INTERVAL,
    ) -> str:
        """Init -> LookedUp: resolve the published port, retrying while the
        server has not published yet."""
        if self.state is not SessionState.INIT:
            raise ProtocolStateError(f"lookup while {self.state.name}")
        attempts = 0
        while True:
            try:
                port = registry.lookup(name)
                break
            except NameNotFoundError:
                attempts += 1
                if attempts > retries:
                    raise
                time.sleep(interval)
        self.state = SessionState.LOOKED_UP
        return port

    def deliver(self, frame: Frame) -> None:
        """Apply one incoming frame; the only state-transition entry point."""
        if self.state is SessionState.LOOKED_UP:
            if frame.type is FrameType.ACCEPT and self._connect_sent:
                self.state = SessionState.CONNECTED
                return
        elif self.state is SessionState.CONNECTED:
            if frame.type is FrameType.WORK_ITEM:
                seq, payload = _unpack_seq(frame.payload)
                result = self.work_handler(payload)
                self.channel.send_frame(
                    Frame(FrameType.RESULT, _pack_seq(seq, result))
                )
                self.rounds_served += 1
                return
            if frame.type is FrameType.SHUTDOWN:
                self.channel.send_frame(Frame(FrameType.DISCONNECT))
                self.state = SessionState.DISCONNECTED
                return
        raise ProtocolStateError(
            f"client in {self.state.name} cannot handle {frame.type.name}"
        )

    def start_connect(self) -> None:
        """Send the connect request without waiting for the accept."""
        if self.state is not SessionState.LOOKED_UP:
            raise ProtocolStateError(f"connect while {self.state.name}")
        if not self._connect_sent:
            self.channel.send_frame(Frame(FrameType.CONNECT))
            self._connect_sent = True

    def finish_connect(self, timeout: float | None = None) -> None:
        if self.state is SessionState.CONNECTED:
            return
        if not self._connect_sent:
            raise ProtocolStateError("finish_connect before start_connect")
        while self.state is not SessionState.CONNECTED:
            self.deliver(self.channel.recv_frame(timeout))

    def connect(self, timeout: float | None = None) -> None:
        """LookedUp -> Connected (blocking form)."""
        self.start_connect()
        self.finish_connect(timeout)

    def run_listener(self, timeout: float | None = None) -> int:
        """Serve work items until the server shuts the loop down.

        Returns the number of rounds served.
        """
        if self.state is not SessionState.CONNECTED:
            raise ProtocolStateError(f"run_listener while {self.state.name}")
        while self.state is not SessionState.DISCONNECTED:
            self.deliver(self.channel.recv_frame(timeout))
        return self.rounds_served


def connect_accept(
    server: ServerSession,
    client: ClientSession,
    timeout: float | None = None,
) -> tuple[ServerSession, ClientSession]:
    """Rendezvous a published server with a looked-up client.

    Drives both ends, so it works over single-threaded in-process channels
    as well as real sockets.
    """
    client.start_connect()
    server.accept(timeout)
    client.finish_connect(timeout)
    return server, client


class CancelRegistry:
    """Stand-in for the workload manager's cancel interface.

    The server registers the client unit it may cancel; cancelling records
    the (unit, timestamp) release and fires an optional side effect — the
    simulator records a device release, the demo terminates the client
    process. A repeated cancel warns and does nothing; an unknown unit is
    an error.
    """

    def __init__(self, clock: Callable[[], float] = time.time) -> None:
        self._clock = clock
        self._targets: dict[str, Callable[[], None] | None] = {}
        self._cancelled: dict[str, float] = {}

    def register(
        self, unit_id: str, on_cancel: Callable[[], None] | None = None
    ) -> None:
        self._targets[unit_id] = on_cancel

    def cancel(self, unit_id: str) -> float | None:
        if unit_id not in self._targets:
            raise UnknownUnitError(unit_id)
        if unit_id in self._cancelled:
            logger.warning("unit '%s' already cancelled; ignoring", unit_id)
            return None
        stamp = self._clock()
        self._cancelled[unit_id] = stamp
        callback = self._targets[unit_id]
        if callback is not None:
            callback()
        return stamp

    @property
    def releases(self) -> tuple[tuple[str, float], ...]:
        return tuple(sorted(self._cancelled.items(), key=lambda kv: kv[1]))


def cancel_client(scheduler_hook: CancelRegistry, client_unit_id: str):
    """Have the workload manager terminate the client's allocation."""
    return scheduler_hook.cancel(client_unit_id)
