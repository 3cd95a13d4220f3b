from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction


@dataclass
class TokenBucket:
    """Probe pacing with exact rational refill.

    ``acquire`` reserves the next token and returns the whole second at
    which the probe may go out. With capacity 1 and a rate of ``R`` per
    minute, consecutive reservations are at least ``60/R`` seconds apart, so
    no half-open 60-second window ever holds more than ``R`` probes. The
    bucket starts empty.
    """

    capacity: Fraction
    rate: Fraction  # tokens per second
    tokens: Fraction = Fraction(0)
    updated: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        self.capacity = Fraction(self.capacity)
        self.rate = Fraction(self.rate)
        self.tokens = Fraction(self.tokens)
        self.updated = Fraction(self.updated)
        if self.capacity < 1 or self.rate <= 0:
            raise ValueError("bucket needs capacity >= 1 and a positive rate")
        if not 0 <= self.tokens <= self.capacity:
            raise ValueError("tokens must lie within [0, capacity]")

    @classmethod
    def per_minute(cls, limit: int, start: int = 0, capacity: int = 1) -> TokenBucket:
        if limit < 1:
            raise ValueError("rate limit must be >= 1 probe per minute")
        return cls(Fraction(capacity), Fraction(limit, 60), Fraction(0), Fraction(start))

    def _refill_to(self, t: Fraction) -> None:
        if t > self.updated:
            self.tokens = min(self.capacity, self.tokens + (t - self.updated) * self.rate)
            self.updated = t

    def available_at(self, now: int) -> Fraction:
        t = max(Fraction(now), self.updated)
        tokens = min(self.capacity, self.tokens + (t - self.updated) * self.rate)
        if tokens >= 1:
            return t
        return t + (1 - tokens) / self.rate

    def acquire(self, now: int) -> int:
        t = self.available_at(now)
        self._refill_to(t)
        self.tokens -= 1
        return math.ceil(t)
