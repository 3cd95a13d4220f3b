"""Coordinator wire protocol.

A frame is the body length in ASCII decimal, a newline, then the body: one
JSON object, UTF-8, keys sorted. Every body has a ``type``; the other
required fields per type are::

    REGISTER  agent_id: str, ip: str, capabilities: [str]
    POLL      agent_id: str, token: str, budget: int, ip: str, now: int
    ASSIGN    assignments: [{experiment_id: str, script: str, tier: str}]
    REPORT    agent_id: str, token: str, lines: [str]
    ACK       (REGISTER reply: agent_id, token, rank; REPORT reply: accepted)
    ERROR     reason: str

Only agents send REGISTER, POLL and REPORT; the coordinator only ever
answers with ASSIGN, ACK or ERROR.
"""

from __future__ import annotations

import json
from typing import BinaryIO

MAX_FRAME = 64 * 1024 * 1024

REQUIRED: dict[str, dict[str, type]] = {
    "REGISTER": {"agent_id": str, "ip": str, "capabilities": list},
    "POLL": {"agent_id": str, "token": str, "budget": int, "ip": str, "now": int},
    "ASSIGN": {"assignments": list},
    "REPORT": {"agent_id": str, "token": str, "lines": list},
    "ACK": {},
    "ERROR": {"reason": str},
}
AGENT_MESSAGES = {"REGISTER", "POLL", "REPORT"}
COORDINATOR_MESSAGES = {"ASSIGN", "ACK", "ERROR"}


class WireError(ValueError):
    pass


def validate(msg: dict) -> dict:
    if not isinstance(msg, dict):
        raise WireError("message body must be an object")
    kind = msg.get("type")
    if kind not in REQUIRED:
        raise WireError(f"unknown message type {kind!r}")
    for name, typ in REQUIRED[kind].items():
        if name not in msg:
            raise WireError(f"{kind} lacks field {name!r}")
        value = msg[name]
        if not isinstance(value, typ) or (typ is int and isinstance(value, bool)):
            raise WireError(f"{kind}.{name} must be {typ.__name__}")
    return msg


def encode(msg: dict) -> bytes:
    validate(msg)
    body = json.dumps(msg, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return str(len(body)).encode("ascii") + b"\n" + body


def decode(frame: bytes) -> dict:
    head, sep, body = frame.partition(b"\n")
    if not sep or not head.isdigit():
        raise WireError("frame must start with a decimal length and a newline")
    n = int(head)
    if n != len(body):
        raise WireError(f"frame length says {n} bytes, body has {len(body)}")
    return _body(body)


def _body(body: bytes) -> dict:
    try:
        msg = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise WireError(f"bad body: {exc}") from None
    return validate(msg)


def read_message(stream: BinaryIO) -> dict | None:
    """Next message from a byte stream; None on a clean end of stream."""
    head = bytearray()
    while True:
        c = stream.read(1)
        if not c:
            if head:
                raise WireError("stream ended inside a frame header")
            return None
        if c == b"\n":
            break
        if not c.isdigit() or len(head) > 12:
            raise WireError("bad frame header")
        head += c
    n = int(head)
    if n > MAX_FRAME:
        raise WireError("frame too large")
    body = b""
    while len(body) < n:
        part = stream.read(n - len(body))
        if not part:
            raise WireError("stream ended inside a frame body")
        body += part
    return _body(body)


def error(reason: str) -> dict:
    return {"type": "ERROR", "reason": reason}
