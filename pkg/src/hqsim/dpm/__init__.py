"""Client/server rendezvous and early-release protocol emulation.

The protocol mirrors a dynamic-process-management lifecycle: the server
publishes a named port, the client looks it up and connects, work items
flow server -> client and results flow back, then the server shuts the
client's listener loop down, disconnects, and has the client's allocation
cancelled so the quantum resource is freed before the server's remaining
classical work finishes.
"""

from hqsim.dpm.framing import (
    Frame,
    FrameType,
    FramingError,
    MAX_PAYLOAD,
    StreamDecoder,
    decode_frame,
    encode_frame,
)
from hqsim.dpm.registry import (
    FileNameRegistry,
    InMemoryNameRegistry,
    NameAlreadyPublishedError,
    NameNotFoundError,
)
from hqsim.dpm.session import (
    BrokenSessionError,
    CancelRegistry,
    ClientSession,
    ProtocolStateError,
    ReceiveHandle,
    ServerSession,
    SessionState,
    UnknownUnitError,
    UsageError,
    cancel_client,
    connect_accept,
)
from hqsim.dpm.transport import ChannelClosedError, FrameChannel, inprocess_pair

__all__ = [
    "BrokenSessionError",
    "CancelRegistry",
    "ChannelClosedError",
    "ClientSession",
    "FileNameRegistry",
    "Frame",
    "FrameChannel",
    "FrameType",
    "FramingError",
    "InMemoryNameRegistry",
    "MAX_PAYLOAD",
    "NameAlreadyPublishedError",
    "NameNotFoundError",
    "ProtocolStateError",
    "ReceiveHandle",
    "ServerSession",
    "SessionState",
    "StreamDecoder",
    "UnknownUnitError",
    "UsageError",
    "cancel_client",
    "connect_accept",
    "decode_frame",
    "encode_frame",
    "inprocess_pair",
]
