"""Virtual time: a monotone clock plus conversions between the three bases.

Instants are integer seconds since the Unix epoch, GMT. A local time is
GMT plus a fixed signed offset.
"""

from __future__ import annotations

import calendar
import re
import time
from dataclasses import dataclass

from .errors import ClockError

DAY = 86400


@dataclass(frozen=True, order=True)
class Instant:
    seconds: int

    def __str__(self) -> str:
        return format_gmt(self.seconds)


class VirtualClock:
    def __init__(self, now: int = 0, local_offset: int = 0) -> None:
        self._now = int(now)
        self.local_offset = int(local_offset)

    @property
    def now(self) -> int:
        return self._now

    def advance_to(self, t: int) -> None:
        if t < self._now:
            raise ClockError(f"clock cannot move back from {self._now} to {t}")
        self._now = int(t)

    def advance(self, dt: int) -> None:
        if dt < 0:
            raise ClockError("negative advance")
        self._now += int(dt)

    def local(self) -> int:
        return self._now + self.local_offset


def _year(yy: int) -> int:
    return 2000 + yy if yy < 70 else 1900 + yy


def wall_seconds(date: tuple[int, int, int], hour: int, minute: int) -> int:
    """Seconds since epoch of a calendar date and time read as GMT."""
    month, day, yy = date
    try:
        return calendar.timegm((_year(yy), month, day, hour, minute, 0, 0, 0, 0))
    except ValueError as exc:
        raise ClockError(str(exc)) from None


def resolve_time(base: str, date, hour: int, minute: int, anchor: int, local_offset: int) -> int:
    """GMT instant named by a time literal, relative to ``anchor``."""
    tod = hour * 3600 + minute * 60
    if base == "relative":
        return anchor + tod
    offset = local_offset if base == "local" else 0
    if date is not None:
        return wall_seconds(date, hour, minute) - offset
    anchor_wall = anchor + offset
    cand = anchor_wall - anchor_wall % DAY + tod
    if cand < anchor_wall:
        cand += DAY
    return cand - offset


def format_gmt(t: int) -> str:
    y, mo, d, h, mi, s = time.gmtime(t)[:6]
    return f"{mo:02d}/{d:02d}/{y % 100:02d} {h:02d}:{mi:02d}:{s:02d}"


_OFFSET_RE = re.compile(r"^([+-])(\d{1,2}):?(\d{2})$")
_START_RE = re.compile(r"^\s*(gmt|local)\s+(\d{2})/(\d{2})/(\d{2})\s+(\d{1,2}):(\d{2})\s*$", re.I)


def parse_offset(text: str) -> int:
    """``+02:00`` -> 7200."""
    m = _OFFSET_RE.match(text.strip())
    if not m:
        raise ClockError(f"bad offset {text!r}; expected +HH:MM")
    sign = -1 if m.group(1) == "-" else 1
    return sign * (int(m.group(2)) * 3600 + int(m.group(3)) * 60)


def parse_clock_start(text: str, local_offset: int = 0) -> int:
    """``GMT 06/05/04 00:00`` or ``local ...`` -> GMT seconds."""
    m = _START_RE.match(text)
    if not m:
        raise ClockError(f"bad clock start {text!r}; expected 'GMT MM/DD/YY HH:MM'")
    base = m.group(1).lower()
    mo, d, y, h, mi = (int(m.group(i)) for i in range(2, 7))
    return resolve_time(base, (mo, d, y), h, mi, 0, local_offset)
