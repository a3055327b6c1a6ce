"""Mock quantum device backend executing opaque program payloads.

The default backend echoes the payload back with a CRC32 tag appended:
deterministic, cheap, and enough to verify transport integrity end to end.
Execution is strictly one program at a time; a second caller gets a busy
error, surfacing any exclusivity violation upstream.

Service time runs against a pluggable clock: TickClock for deterministic
virtual time in tests, WallClock (milliseconds, real sleep) in the demo.
"""

from __future__ import annotations

import struct
import threading
import time
import zlib
from dataclasses import dataclass

from hqsim.model import SimTime


class DeviceBusyError(RuntimeError):
    """Two executions overlapped on the exclusive device."""


@dataclass(frozen=True)
class QuantumProgram:
    program_id: str
    payload: bytes
    service_time: SimTime = 0


@dataclass(frozen=True)
class QuantumResult:
    program_id: str
    result_payload: bytes
    started: float
    finished: float


class TickClock:
    """Deterministic virtual clock counting abstract ticks."""

    def __init__(self, start: SimTime = 0) -> None:
        self._now = start

    def now(self) -> SimTime:
        return self._now

    def advance(self, amount: SimTime) -> None:
        self._now += amount


class WallClock:
    """Real clock in milliseconds; advancing sleeps."""

    def now(self) -> float:
        return time.perf_counter() * 1000.0

    def advance(self, amount: float) -> None:
        if amount > 0:
            time.sleep(amount / 1000.0)


def echo_with_checksum(payload: bytes) -> bytes:
    """Default device output: the input followed by its 4-byte CRC32."""
    return payload + struct.pack(">I", zlib.crc32(payload) & 0xFFFFFFFF)


class EchoQuantumDevice:
    """Echo-with-checksum backend with exclusive, serialized execution."""

    def __init__(self, clock=None) -> None:
        self.clock = clock if clock is not None else TickClock()
        self._busy = threading.Lock()
        self.executions: list[QuantumResult] = []

    def execute(self, program: QuantumProgram) -> QuantumResult:
        if program.service_time < 0:
            raise ValueError("service_time must be >= 0")
        if not self._busy.acquire(blocking=False):
            raise DeviceBusyError(
                f"device busy: cannot execute '{program.program_id}'"
            )
        try:
            started = self.clock.now()
            self.clock.advance(program.service_time)
            finished = self.clock.now()
            result = QuantumResult(
                program_id=program.program_id,
                result_payload=echo_with_checksum(program.payload),
                started=started,
                finished=finished,
            )
            self.executions.append(result)
            return result
        finally:
            self._busy.release()


BACKENDS = {
    "echo": EchoQuantumDevice,
}


def make_backend(name: str, clock=None) -> EchoQuantumDevice:
    """Instantiate a backend by name; the boundary where a real
    device-dispatching backend would plug in."""
    try:
        factory = BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown backend '{name}' (available: {sorted(BACKENDS)})"
        ) from None
    return factory(clock=clock)
