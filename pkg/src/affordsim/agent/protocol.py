"""Newline-delimited JSON protocol for out-of-process affordance reasoners."""

from __future__ import annotations

import json
import os
import selectors
import shlex
import socket
import socketserver
import subprocess
import sys
import time
from typing import IO, Callable, Mapping

from ..sim import Observation
from ..world import CLASSES, AffordanceCategory
from .reasoners import (
    AVAILABLE,
    NOT_VISIBLE,
    Probe,
    QueryContext,
    ReasonerVerdict,
    VerdictState,
    verdict_from_latent,
)

VERSION = 1
DEFAULT_TIMEOUT = 5.0
CANDIDATES = ["available", "unavailable"]
STUB_MODES = ("oracle", "always-available", "malformed", "silent")


class ReasonerError(RuntimeError):
    code = "reasoner"


class Timeout(ReasonerError):
    code = "timeout"


class MalformedResponse(ReasonerError):
    code = "malformed"


def references(cls: str) -> dict[str, str]:
    label = CLASSES[cls].label if cls in CLASSES else cls
    cats = CLASSES[cls].applicable_categories if cls in CLASSES else frozenset()
    if AffordanceCategory.OCCUPIED in cats:
        bad = f"a {label} that is already running for someone else"
    elif cats:
        bad = f"a {label} that is dirty or has already been used"
    else:
        bad = f"a {label} that cannot be used right now"
    return {"available": f"a {label} that is ready to use", "unavailable": bad}


def build_request(target: str, cls: str, observation: Observation, ctx: QueryContext,
                  latent: Mapping | None = None) -> dict:
    req = {
        "v": VERSION,
        "episode": ctx.episode,
        "step": ctx.step,
        "target": {"id": target, "class": cls},
        "candidates": list(CANDIDATES),
        "observation": observation.to_dict(),
        "references": references(cls),
    }
    if latent is not None:
        req["oracle"] = dict(latent)
    return req


def encode(record: Mapping) -> bytes:
    return (json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n").encode()


def parse_response(line: bytes | str) -> ReasonerVerdict:
    try:
        rec = json.loads(line)
    except (ValueError, UnicodeDecodeError) as e:
        raise MalformedResponse(f"not JSON: {e}") from None
    if not isinstance(rec, dict) or rec.get("v") != VERSION:
        raise MalformedResponse("missing or wrong version tag")
    state = rec.get("state")
    if state not in CANDIDATES:
        raise MalformedResponse(f"bad state {state!r}")
    cat = rec.get("category")
    if cat is not None:
        try:
            cat = AffordanceCategory(cat)
        except ValueError:
            raise MalformedResponse(f"bad category {cat!r}") from None
    conf = rec.get("confidence")
    if isinstance(conf, bool) or not isinstance(conf, (int, float)) or not 0.0 <= conf <= 1.0:
        raise MalformedResponse(f"bad confidence {conf!r}")
    if state == "unavailable":
        if cat is None:
            raise MalformedResponse("unavailable verdict without category")
        return ReasonerVerdict(VerdictState.UNAVAILABLE, cat, float(conf))
    return ReasonerVerdict(VerdictState.AVAILABLE, None, float(conf))


def response_for(verdict: ReasonerVerdict) -> dict:
    return {
        "v": VERSION,
        "state": "available" if verdict.available else "unavailable",
        "category": verdict.category.value if verdict.category else None,
        "confidence": verdict.confidence,
    }


# -- client -------------------------------------------------------------------

class _StdioChannel:
    def __init__(self, command: str):
        self.proc = subprocess.Popen(shlex.split(command), stdin=subprocess.PIPE, stdout=subprocess.PIPE)
        self.sel = selectors.DefaultSelector()
        self.sel.register(self.proc.stdout, selectors.EVENT_READ)
        self.buf = b""

    def send(self, data: bytes) -> None:
        try:
            self.proc.stdin.write(data)
            self.proc.stdin.flush()
        except BrokenPipeError:
            raise MalformedResponse("reasoner process closed its input") from None

    def readline(self, timeout: float) -> bytes:
        deadline = time.monotonic() + timeout
        fd = self.proc.stdout.fileno()
        while b"\n" not in self.buf:
            left = deadline - time.monotonic()
            if left <= 0 or not self.sel.select(left):
                raise Timeout(f"no answer within {timeout:g}s")
            chunk = os.read(fd, 65536)
            if not chunk:
                raise MalformedResponse("reasoner process exited")
            self.buf += chunk
        line, _, self.buf = self.buf.partition(b"\n")
        return line

    def close(self) -> None:
        self.sel.close()
        if self.proc.poll() is None:
            self.proc.stdin.close()
            try:
                self.proc.wait(timeout=2)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()
        self.proc.stdout.close()


class _TcpChannel:
    def __init__(self, host: str, port: int, timeout: float):
        try:
            self.sock = socket.create_connection((host, port), timeout=timeout)
        except socket.timeout:
            raise Timeout(f"cannot connect to {host}:{port}") from None
        self.buf = b""

    def send(self, data: bytes) -> None:
        self.sock.sendall(data)

    def readline(self, timeout: float) -> bytes:
        self.sock.settimeout(timeout)
        while b"\n" not in self.buf:
            try:
                chunk = self.sock.recv(65536)
            except socket.timeout:
                raise Timeout(f"no answer within {timeout:g}s") from None
            if not chunk:
                raise MalformedResponse("connection closed")
            self.buf += chunk
        line, _, self.buf = self.buf.partition(b"\n")
        return line

    def close(self) -> None:
        self.sock.close()


def parse_endpoint(endpoint: str) -> tuple[str, str | tuple[str, int]]:
    if endpoint.startswith("stdio:"):
        return "stdio", endpoint[len("stdio:"):]
    if endpoint.startswith("tcp://"):
        host, _, port = endpoint[len("tcp://"):].rpartition(":")
        return "tcp", (host or "127.0.0.1", int(port))
    raise ValueError(f"endpoint must be stdio:<command> or tcp://host:port, got {endpoint!r}")


class ExternalReasoner:
    """Forwards Stage-I queries to a separate process over the wire protocol.

    With ``share_latent`` the request also carries the target's latent
    state under an extra ``oracle`` key; only loopback test stubs use it.
    """

    label = "external"

    def __init__(self, endpoint: str, timeout: float = DEFAULT_TIMEOUT, share_latent: bool = False):
        self.endpoint = endpoint
        self.timeout = timeout
        self.share_latent = share_latent
        self._channel = None

    def _connect(self):
        if self._channel is None:
            kind, where = parse_endpoint(self.endpoint)
            if kind == "stdio":
                self._channel = _StdioChannel(where)
            else:
                self._channel = _TcpChannel(where[0], where[1], self.timeout)
        return self._channel

    def reason(self, target, observation, ctx, probe: Probe | None = None) -> ReasonerVerdict:
        entry = observation.get(target)
        if entry is None:
            return NOT_VISIBLE
        latent = None
        if self.share_latent and probe is not None:
            latent = probe().get(target)
        ch = self._connect()
        ch.send(encode(build_request(target, entry["class"], observation, ctx, latent)))
        return parse_response(ch.readline(self.timeout))

    def close(self) -> None:
        if self._channel is not None:
            self._channel.close()
            self._channel = None


# -- stub server --------------------------------------------------------------

def stub_answer(mode: str, request_line: bytes) -> bytes | None:
    """The stub's reply to one request line (None means stay silent)."""
    if mode == "silent":
        return None
    if mode == "malformed":
        return b'{"v":1,"state":"maybe"}\n'
    try:
        req = json.loads(request_line)
    except ValueError:
        return b'{"v":1,"error":"bad request"}\n'
    if mode == "always-available":
        return encode(response_for(AVAILABLE))
    latent = req.get("oracle")
    verdict = verdict_from_latent(latent) if latent else AVAILABLE
    return encode(response_for(verdict))


def serve_stream(mode: str, rfile: IO[bytes], wfile: IO[bytes]) -> None:
    for line in rfile:
        if not line.strip():
            continue
        out = stub_answer(mode, line)
        if out is not None:
            wfile.write(out)
            wfile.flush()


def serve_stub(mode: str, listen: str = "stdio", ready: Callable[[str], None] | None = None) -> None:
    """Run the loopback stub on stdin/stdout or a TCP address until EOF/interrupt."""
    if mode not in STUB_MODES:
        raise ValueError(f"unknown stub mode {mode!r}")
    if listen in ("stdio", "-"):
        serve_stream(mode, sys.stdin.buffer, sys.stdout.buffer)
        return
    _, (host, port) = parse_endpoint(listen if listen.startswith("tcp://") else f"tcp://{listen}")

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            serve_stream(mode, self.rfile, self.wfile)

    socketserver.ThreadingTCPServer.allow_reuse_address = True
    with socketserver.ThreadingTCPServer((host, port), Handler) as server:
        server.daemon_threads = True
        if ready:
            h, p = server.server_address[:2]
            ready(f"tcp://{h}:{p}")
        server.serve_forever()
