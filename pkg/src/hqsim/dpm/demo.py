"""Two-process demo of the early-release protocol over a loopback socket.

The orchestrator (the ``demo-dpm`` CLI subcommand) launches a server and a
client as separate OS processes sharing a registry directory. The server
opens an ephemeral port, publishes it, accepts the client, runs N work
rounds, shuts the client's listener down, has the client's process
cancelled, and only then performs its remaining classical work. The client
resolves the port with bounded lookup retries instead of a fixed sleep.

The interesting output is the pair of timestamps: the client (the quantum
side) terminates strictly before the server finishes its remaining
classical work — the device is free while classical work is still running.
"""

from __future__ import annotations

import argparse
import os
import signal
import socket
import subprocess
import sys
import time

from hqsim.dpm.registry import FileNameRegistry
from hqsim.dpm.session import (
    CancelRegistry,
    ClientSession,
    ServerSession,
    cancel_client,
)
from hqsim.dpm.transport import FrameChannel, SocketEndpoint
from hqsim.qdevice import (
    QuantumProgram,
    WallClock,
    echo_with_checksum,
    make_backend,
)

DEFAULT_NAME = "hqsim-qpu"
CLIENT_UNIT_ID = "demo-client"
_PID_FILE = "client.pid"


def _ts() -> str:
    return f"{time.time():.6f}"


def _work_payload(size: int, round_no: int) -> bytes:
    # Deterministic filler so the echo check is reproducible.
    pattern = bytes((round_no * 31 + i) % 256 for i in range(min(size, 256)))
    reps = size // len(pattern) + 1 if pattern else 0
    return (pattern * reps)[:size] if size else b""


def run_server(args: argparse.Namespace) -> int:
    registry = FileNameRegistry(args.registry)
    listener = socket.create_server(("127.0.0.1", 0))
    listener.settimeout(args.timeout)
    port = listener.getsockname()[1]

    session = ServerSession()
    session.publish(registry, args.name, f"127.0.0.1:{port}")
    print(f"server_published port={port} ts={_ts()}", flush=True)

    try:
        conn, _ = listener.accept()
    except socket.timeout:
        print("server error: no client connected", file=sys.stderr)
        return 2
    finally:
        listener.close()
    session.channel = FrameChannel(SocketEndpoint(conn))
    session.accept(timeout=args.timeout)
    print(f"server_connected ts={_ts()}", flush=True)

    for round_no in range(1, args.rounds + 1):
        payload = _work_payload(args.payload_bytes, round_no)
        t0 = time.perf_counter()
        handle = session.send_work(payload)
        # Overlapping classical work happens here; the receive is already
        # posted, so nothing below delays the client.
        if args.overlap_ms > 0:
            time.sleep(args.overlap_ms / 1000.0)
        result = session.wait(handle, timeout=args.timeout)
        latency_ms = (time.perf_counter() - t0) * 1000.0
        if result != echo_with_checksum(payload):
            print(f"server error: round {round_no} result mismatch",
                  file=sys.stderr)
            return 2
        print(f"round={round_no} latency_ms={latency_ms:.3f}", flush=True)

    session.shutdown_and_disconnect(timeout=args.timeout)
    print(f"server_disconnected ts={_ts()}", flush=True)

    # scancel stand-in: terminate the client's process by pid.
    pid_path = os.path.join(args.registry, _PID_FILE)
    hook = CancelRegistry()
    hook.register(CLIENT_UNIT_ID, on_cancel=lambda: _kill_pid_file(pid_path))
    stamp = cancel_client(hook, CLIENT_UNIT_ID)
    print(f"scancel unit={CLIENT_UNIT_ID} ts={stamp:.6f}", flush=True)

    # Remaining classical work continues with the quantum side released.
    if args.final_work_ms > 0:
        time.sleep(args.final_work_ms / 1000.0)
    print(f"server_final_work_done ts={_ts()}", flush=True)
    return 0


def _kill_pid_file(pid_path: str) -> None:
    try:
        pid = int(open(pid_path).read().strip())
        os.kill(pid, signal.SIGTERM)
    except (OSError, ValueError):
        pass  # client usually exited on its own right after disconnecting


def run_client(args: argparse.Namespace) -> int:
    registry = FileNameRegistry(args.registry)
    device = make_backend(args.backend, clock=WallClock())

    def handler(payload: bytes) -> bytes:
        program = QuantumProgram(
            program_id="demo", payload=payload, service_time=args.service_ms
        )
        return device.execute(program).result_payload

    session = ClientSession(work_handler=handler)
    port = session.lookup(
        registry, args.name, retries=args.lookup_retries,
        interval=args.lookup_interval,
    )
    host, _, port_no = port.partition(":")
    sock = socket.create_connection((host, int(port_no)), timeout=args.timeout)
    session.channel = FrameChannel(SocketEndpoint(sock))
    session.connect(timeout=args.timeout)
    print(f"client_connected ts={_ts()}", flush=True)

    rounds = session.run_listener(timeout=args.timeout)
    print(f"client_served rounds={rounds}", flush=True)
    print(f"client_exit ts={_ts()}", flush=True)
    return 0


def _parse_marker(text: str, marker: str) -> float | None:
    for line in text.splitlines():
        if line.startswith(marker):
            for token in line.split():
                if token.startswith("ts="):
                    return float(token[3:])
    return None


def run_demo(
    rounds: int,
    payload_bytes: int,
    service_ms: float = 2.0,
    final_work_ms: float = 200.0,
    backend: str = "echo",
    registry_dir: str | None = None,
    timeout: float = 30.0,
) -> int:
    """Launch server and client processes and check the full lifecycle.

    Returns 0 iff both processes completed every lifecycle step and the
    client terminated before the server's final work finished.
    """
    import tempfile

    if rounds < 1:
        print("demo-dpm: --rounds must be >= 1", file=sys.stderr)
        return 1
    if payload_bytes < 0:
        print("demo-dpm: --payload-bytes must be >= 0", file=sys.stderr)
        return 1

    with tempfile.TemporaryDirectory() as tmp:
        reg_dir = registry_dir or tmp
        base = [
            sys.executable, "-m", "hqsim.dpm.demo",
        ]
        server = subprocess.Popen(
            base + [
                "server", "--registry", reg_dir, "--rounds", str(rounds),
                "--payload-bytes", str(payload_bytes),
                "--final-work-ms", str(final_work_ms),
                "--timeout", str(timeout),
            ],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True,
        )
        client = subprocess.Popen(
            base + [
                "client", "--registry", reg_dir,
                "--service-ms", str(service_ms), "--backend", backend,
                "--timeout", str(timeout),
            ],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True,
        )
        with open(os.path.join(reg_dir, _PID_FILE), "w") as fh:
            fh.write(str(client.pid))

        try:
            client_out, client_err = client.communicate(timeout=timeout)
            server_out, server_err = server.communicate(timeout=timeout)
        except subprocess.TimeoutExpired:
            for proc in (client, server):
                proc.kill()
            print("demo-dpm: timed out waiting for processes",
                  file=sys.stderr)
            return 2

    for line in server_out.splitlines():
        print(line)
    for line in client_out.splitlines():
        print(line)

    problems = []
    if server.returncode != 0:
        problems.append(f"server exited {server.returncode}: {server_err.strip()}")
    if client.returncode not in (0, -signal.SIGTERM):
        problems.append(f"client exited {client.returncode}: {client_err.strip()}")
    if f"round={rounds} " not in server_out + " ":
        problems.append(f"server did not complete {rounds} rounds")
    if f"client_served rounds={rounds}" not in client_out:
        problems.append(f"client did not serve {rounds} rounds")

    client_exit = _parse_marker(client_out, "client_exit")
    final_done = _parse_marker(server_out, "server_final_work_done")
    if client_exit is None or final_done is None:
        problems.append("missing lifecycle timestamps")
    elif not client_exit < final_done:
        problems.append(
            f"client exit {client_exit:.6f} not before final work "
            f"{final_done:.6f}"
        )
    else:
        margin_ms = (final_done - client_exit) * 1000.0
        print(f"client_terminated ts={client_exit:.6f}")
        print(f"early_release_margin_ms={margin_ms:.1f}")

    if problems:
        for problem in problems:
            print(f"demo-dpm: {problem}", file=sys.stderr)
        return 2
    print(f"demo-dpm: ok rounds={rounds}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="hqsim.dpm.demo")
    sub = parser.add_subparsers(dest="role", required=True)

    server = sub.add_parser("server")
    server.add_argument("--registry", required=True)
    server.add_argument("--name", default=DEFAULT_NAME)
    server.add_argument("--rounds", type=int, default=5)
    server.add_argument("--payload-bytes", type=int, default=1024)
    server.add_argument("--overlap-ms", type=float, default=0.0)
    server.add_argument("--final-work-ms", type=float, default=200.0)
    server.add_argument("--timeout", type=float, default=30.0)
    server.set_defaults(func=run_server)

    client = sub.add_parser("client")
    client.add_argument("--registry", required=True)
    client.add_argument("--name", default=DEFAULT_NAME)
    client.add_argument("--service-ms", type=float, default=2.0)
    client.add_argument("--backend", default="echo")
    client.add_argument("--lookup-retries", type=int, default=50)
    client.add_argument("--lookup-interval", type=float, default=0.1)
    client.add_argument("--timeout", type=float, default=30.0)
    client.set_defaults(func=run_client)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
