"""Measurement records and their one-line JSON encoding.

Store line schema (keys sorted on output)::

    {"id": str, "agent": str, "rank": int, "src": "a.b.c.d", "ts": int,
     "exp": str, "type": "trace" | "ping", "probe": "icmp" | "udp",
     # trace
     "dst": "a.b.c.d", "hops": ["a.b.c.d" | null, ...], "reached": bool,
     # ping
     "target": "a.b.c.d", "responder": "a.b.c.d" | null, "rtt": float | null,
     # optional, filled at ingest
     "src_as": int | null}
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass, replace
from typing import Union

from .model import AsId, Ip
from .netsim.probes import PROBE_KINDS, PingResult, TraceResult

Payload = Union[TraceResult, PingResult]

# store replays parse the same few thousand addresses over and over
_ip = functools.lru_cache(maxsize=1 << 16)(Ip)


class RecordFormatError(ValueError):
    pass


@dataclass(frozen=True)
class MeasurementRecord:
    measurement_id: str
    agent_id: str
    agent_rank: int
    source_ip: Ip
    timestamp: int
    payload: Payload
    experiment_id: str = ""
    source_as: AsId | None = None

    @property
    def is_trace(self) -> bool:
        return isinstance(self.payload, TraceResult)

    def with_source_as(self, asn: AsId | None) -> MeasurementRecord:
        return replace(self, source_as=asn)

    def to_json(self) -> dict:
        p = self.payload
        out = {
            "id": self.measurement_id,
            "agent": self.agent_id,
            "rank": self.agent_rank,
            "src": str(self.source_ip),
            "ts": self.timestamp,
            "exp": self.experiment_id,
            "probe": p.probe_kind,
        }
        if isinstance(p, TraceResult):
            out.update(
                type="trace",
                dst=str(p.dst),
                hops=[None if h is None else str(h) for h in p.hops],
                reached=p.reached,
            )
        else:
            out.update(
                type="ping",
                target=str(p.target),
                responder=None if p.responder is None else str(p.responder),
                rtt=p.rtt_ms,
            )
        if self.source_as is not None:
            out["src_as"] = self.source_as
        return out

    def to_line(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, d: dict) -> MeasurementRecord:
        try:
            src = _ip(d["src"])
            kind = d["probe"]
            if kind not in PROBE_KINDS:
                raise RecordFormatError(f"bad probe kind {kind!r}")
            if d["type"] == "trace":
                payload: Payload = TraceResult(
                    src,
                    _ip(d["dst"]),
                    tuple(None if h is None else _ip(h) for h in d["hops"]),
                    kind,
                    bool(d["reached"]),
                )
            elif d["type"] == "ping":
                payload = PingResult(
                    src,
                    _ip(d["target"]),
                    None if d["responder"] is None else _ip(d["responder"]),
                    kind,
                    d.get("rtt"),
                )
            else:
                raise RecordFormatError(f"unknown record type {d['type']!r}")
            ts = d["ts"]
            rank = d["rank"]
            if not isinstance(ts, int) or not isinstance(rank, int):
                raise RecordFormatError("ts and rank must be integers")
            mid = d["id"]
            if not isinstance(mid, str) or not mid:
                raise RecordFormatError("missing measurement id")
            return cls(mid, str(d["agent"]), rank, src, ts, payload, str(d.get("exp", "")), d.get("src_as"))
        except RecordFormatError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise RecordFormatError(f"{type(exc).__name__}: {exc}") from exc

    @classmethod
    def from_line(cls, line: str) -> MeasurementRecord:
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RecordFormatError(f"invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise RecordFormatError("record must be a JSON object")
        return cls.from_json(data)
