"""Two-stage ingest into the append-only measurement store.

Stage one appends the raw lines of a report under a lock and acknowledges
at once. Stage two, on a background thread, reads the store file from its
watermark, parses each complete line, fills in the source AS and hands the
record on; anything unparseable goes to the quarantine file with a reason.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

from ..model import AsId, Ip
from ..records import MeasurementRecord, RecordFormatError


class StoreError(ValueError):
    pass


def scan_store(path) -> tuple[list[str], str | None]:
    """Complete lines of a store file plus its unterminated tail, if any."""
    with open(path, "rb") as fh:
        data = fh.read()
    text = data.decode("utf-8", errors="replace")
    if not text:
        return [], None
    parts = text.split("\n")
    tail = parts.pop()
    return parts, (tail or None)


class StoreFile:
    """Append-only, one record per line. Appends are atomic with respect to
    each other: a batch is written and flushed under one lock."""

    def __init__(self, path) -> None:
        self.path = os.fspath(path)
        self._lock = threading.Lock()
        self._fh = open(self.path, "ab")
        self.lines = 0

    def append(self, lines: list[str]) -> int:
        for ln in lines:
            if "\n" in ln or "\r" in ln:
                raise StoreError("store lines must not contain line breaks")
        if not lines:
            return 0
        payload = ("\n".join(lines) + "\n").encode("utf-8")
        with self._lock:
            self._fh.write(payload)
            self._fh.flush()
            self.lines += len(lines)
        return len(lines)

    def close(self) -> None:
        with self._lock:
            if not self._fh.closed:
                self._fh.close()


@dataclass
class IngestCounters:
    acked: int = 0
    stored: int = 0
    parsed: int = 0
    quarantined: int = 0

    def conserved(self) -> bool:
        return self.acked == self.stored == self.parsed + self.quarantined

    def to_json(self) -> dict:
        return {"acked": self.acked, "stored": self.stored, "parsed": self.parsed, "quarantined": self.quarantined}


class Ingest:
    def __init__(
        self,
        store_path,
        quarantine_path=None,
        resolver: Callable[[Ip], AsId | None] | None = None,
        on_record: Callable[[MeasurementRecord], None] | None = None,
        epoch: tuple[int, int] | None = None,
        background: bool = True,
    ) -> None:
        self.store = StoreFile(store_path)
        self.quarantine_path = os.fspath(quarantine_path or f"{self.store.path}.quarantine")
        self._qfh = open(self.quarantine_path, "a", encoding="utf-8")
        self.resolver = resolver
        self.on_record = on_record
        self.epoch = epoch
        self.counters = IngestCounters(stored=self.store.lines)
        self.records: list[MeasurementRecord] = []
        self._seen_ids: set[str] = set()
        self._offset = os.path.getsize(self.store.path)
        self._carry = b""
        self._cond = threading.Condition()
        self._parse_lock = threading.Lock()
        self._stop = False
        self._thread: threading.Thread | None = None
        if background:
            self._thread = threading.Thread(target=self._run, name="ingest-parse", daemon=True)
            self._thread.start()

    # -- stage one
    def submit(self, lines: list[str]) -> int:
        n = self.store.append(lines)
        with self._cond:
            self.counters.acked += n
            self.counters.stored += n
            self._cond.notify_all()
        if self._thread is None:
            self.process_pending()
        return n

    # -- stage two
    def _run(self) -> None:
        while True:
            with self._cond:
                while not self._stop and self.counters.parsed + self.counters.quarantined >= self.counters.stored:
                    self._cond.wait()
                if self._stop and self.counters.parsed + self.counters.quarantined >= self.counters.stored:
                    return
            self.process_pending()

    def process_pending(self) -> int:
        """Parse every complete line past the watermark; returns how many."""
        with self._parse_lock:
            return self._process_pending()

    def _process_pending(self) -> int:
        with open(self.store.path, "rb") as fh:
            fh.seek(self._offset)
            chunk = fh.read()
        self._offset += len(chunk)
        data = self._carry + chunk
        cut = data.rfind(b"\n")
        if cut < 0:
            self._carry = data
            return 0
        self._carry = data[cut + 1 :]
        lines = data[:cut].decode("utf-8", errors="replace").split("\n")
        for ln in lines:
            self._parse_line(ln)
        with self._cond:
            self._cond.notify_all()
        return len(lines)

    def _quarantine(self, reason: str, line: str) -> None:
        self._qfh.write(f"{reason}\t{line}\n")
        self._qfh.flush()
        with self._cond:
            self.counters.quarantined += 1

    def _parse_line(self, line: str) -> None:
        try:
            rec = MeasurementRecord.from_line(line)
        except RecordFormatError as exc:
            self._quarantine(f"malformed: {exc}", line)
            return
        if rec.measurement_id in self._seen_ids:
            self._quarantine("duplicate measurement id", line)
            return
        if self.epoch is not None and not self.epoch[0] <= rec.timestamp < self.epoch[1]:
            self._quarantine("timestamp outside run epoch", line)
            return
        if self.resolver is not None and rec.source_as is None:
            rec = rec.with_source_as(self.resolver(rec.source_ip))
        self._seen_ids.add(rec.measurement_id)
        self.records.append(rec)
        if self.on_record is not None:
            self.on_record(rec)
        with self._cond:
            self.counters.parsed += 1

    def drain(self, timeout: float | None = 30.0) -> None:
        """Block until every stored line has been parsed or quarantined."""
        if self._thread is None:
            self.process_pending()
            return
        with self._cond:
            ok = self._cond.wait_for(
                lambda: self.counters.parsed + self.counters.quarantined >= self.counters.stored, timeout
            )
        if not ok:
            raise TimeoutError("ingest did not drain in time")

    @property
    def watermark(self) -> int:
        """Number of parsed records; readers use ``records[:watermark]``."""
        return len(self.records)

    def snapshot(self) -> list[MeasurementRecord]:
        return self.records[: self.watermark]

    def close(self) -> None:
        self.drain()
        if self._thread is not None:
            with self._cond:
                self._stop = True
                self._cond.notify_all()
            self._thread.join()
        if self._carry:
            # a write was cut short: keep it, tagged, rather than dropping it
            self._quarantine("truncated final line", self._carry.decode("utf-8", errors="replace"))
            self._carry = b""
        self.store.close()
        self._qfh.close()


def replay_store(
    path,
    resolver: Callable[[Ip], AsId | None] | None = None,
    epoch: tuple[int, int] | None = None,
) -> tuple[list[MeasurementRecord], list[tuple[str, str]]]:
    """Parse a store file from scratch: (records, [(reason, line), ...])."""
    lines, tail = scan_store(path)
    records: list[MeasurementRecord] = []
    rejected: list[tuple[str, str]] = []
    seen: set[str] = set()
    for ln in lines:
        try:
            rec = MeasurementRecord.from_line(ln)
        except RecordFormatError as exc:
            rejected.append((f"malformed: {exc}", ln))
            continue
        if rec.measurement_id in seen:
            rejected.append(("duplicate measurement id", ln))
            continue
        if epoch is not None and not epoch[0] <= rec.timestamp < epoch[1]:
            rejected.append(("timestamp outside run epoch", ln))
            continue
        if resolver is not None and rec.source_as is None:
            rec = rec.with_source_as(resolver(rec.source_ip))
        seen.add(rec.measurement_id)
        records.append(rec)
    if tail is not None:
        rejected.append(("truncated final line", tail))
    return records, rejected


def read_records(path) -> Iterator[MeasurementRecord]:
    """Well-formed records of a store, in file order."""
    records, _ = replay_store(path)
    yield from records


def write_records(path, records: Iterable[MeasurementRecord]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(r.to_line() + "\n")
            n += 1
    return n
