"""Dotted version values, ranges, and constraint algebra.

A version is a dot-separated list of segments; numeric segments compare
numerically and order before alphabetic ones at the same position, and
missing trailing segments count as zero (so 1.0 equals 1.0.0).

A constraint is a comma-separated union of ranges:

    1.2.11        a point; matches 1.2.11 and prefix extensions (1.2.11.1)
    1.0.7:        at least 1.0.7
    :1.9          at most 1.9
    1.2:1.4       closed interval
    :             anything

Intersection of a point with an interval keeps the point when its base
version lies inside the interval; extensions of a point that escape the
interval are deliberately not modelled.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import total_ordering


_SEGMENT_RE = re.compile(r"[A-Za-z0-9_]+")


@total_ordering
class Version:
    """An immutable dotted version with a total order."""

    __slots__ = ("segments", "_text")

    def __init__(self, text: str):
        text = text.strip()
        if not text or not re.fullmatch(r"[A-Za-z0-9_.]+", text):
            raise ValueError(f"invalid version {text!r}")
        self._text = text
        self.segments = tuple(
            int(seg) if seg.isdigit() else seg for seg in text.split(".")
        )

    def __str__(self):
        return self._text

    def __repr__(self):
        return f"Version({self._text!r})"

    def __hash__(self):
        key = list(self._padded_key(len(self.segments)))
        while key and key[-1] == (0, 0, ""):
            key.pop()
        return hash(tuple(key))

    def _padded_key(self, length: int):
        key = []
        for i in range(length):
            seg = self.segments[i] if i < len(self.segments) else 0
            key.append((0, seg, "") if isinstance(seg, int) else (1, 0, seg))
        return tuple(key)

    def __eq__(self, other):
        if not isinstance(other, Version):
            return NotImplemented
        n = max(len(self.segments), len(other.segments))
        return self._padded_key(n) == other._padded_key(n)

    def __lt__(self, other):
        n = max(len(self.segments), len(other.segments))
        return self._padded_key(n) < other._padded_key(n)

    def is_prefix_of(self, other: "Version") -> bool:
        if len(self.segments) > len(other.segments):
            return False
        return self.segments == other.segments[: len(self.segments)]


def version_compare(a: Version, b: Version) -> int:
    if a == b:
        return 0
    return -1 if a < b else 1


@dataclass(frozen=True)
class VersionRange:
    """One range: a prefix-matching point, or a closed interval."""

    low: Version | None = None
    high: Version | None = None
    point: Version | None = None

    def contains(self, v: Version) -> bool:
        if self.point is not None:
            return v == self.point or self.point.is_prefix_of(v)
        if self.low is not None and v < self.low:
            return False
        if self.high is not None and v > self.high:
            return False
        return True

    def render(self) -> str:
        if self.point is not None:
            return str(self.point)
        if self.low is None and self.high is None:
            return ":"
        if self.high is None:
            return f"{self.low}:"
        if self.low is None:
            return f":{self.high}"
        return f"{self.low}:{self.high}"

    def intersect(self, other: "VersionRange"):
        a, b = self, other
        if a.point is not None and b.point is not None:
            if a.point == b.point:
                return a if len(a.point.segments) >= len(b.point.segments) else b
            if a.point.is_prefix_of(b.point):
                return b
            if b.point.is_prefix_of(a.point):
                return a
            return None
        if a.point is not None or b.point is not None:
            point_range = a if a.point is not None else b
            interval = b if a.point is not None else a
            if interval.contains(point_range.point):
                return point_range
            if interval.low is not None and point_range.point.is_prefix_of(interval.low):
                return VersionRange(point=interval.low)
            return None
        low = a.low if b.low is None else (b.low if a.low is None else max(a.low, b.low))
        high = a.high if b.high is None else (b.high if a.high is None else min(a.high, b.high))
        if low is not None and high is not None and low > high:
            return None
        return VersionRange(low=low, high=high)

    def _sort_key(self):
        anchor = self.point if self.point is not None else self.low
        if anchor is None:
            return (0, (), 0)
        return (1, anchor._padded_key(len(anchor.segments)), 0 if self.point is None else 1)


class VersionConstraint:
    """A normalized union of version ranges; empty means unconstrained."""

    __slots__ = ("ranges",)

    def __init__(self, ranges=()):
        self.ranges = self._normalize(tuple(ranges))

    @staticmethod
    def _normalize(ranges):
        uniq = list(dict.fromkeys(ranges))
        uniq.sort(key=lambda r: r._sort_key())
        merged = []
        for r in uniq:
            if merged and r.point is None and merged[-1].point is None:
                prev = merged[-1]
                prev_high = prev.high
                if prev_high is None or (r.low is not None and r.low <= prev_high) or r.low is None:
                    high = None
                    if prev.high is not None and r.high is not None:
                        high = max(prev.high, r.high)
                    merged[-1] = VersionRange(low=prev.low, high=high)
                    continue
            merged.append(r)
        return tuple(merged)

    @classmethod
    def any(cls) -> "VersionConstraint":
        return cls(())

    @classmethod
    def parse(cls, text: str) -> "VersionConstraint":
        text = text.strip()
        if not text:
            return cls.any()
        ranges = []
        for part in text.split(","):
            part = part.strip()
            if not part:
                raise ValueError(f"empty range in version constraint {text!r}")
            if ":" in part:
                lo_text, hi_text = part.split(":", 1)
                low = Version(lo_text) if lo_text else None
                high = Version(hi_text) if hi_text else None
                if low is not None and high is not None and low > high:
                    raise ValueError(f"inverted range {part!r}")
                ranges.append(VersionRange(low=low, high=high))
            else:
                ranges.append(VersionRange(point=Version(part)))
        return cls(tuple(ranges))

    def is_any(self) -> bool:
        return not self.ranges or (
            len(self.ranges) == 1
            and self.ranges[0].point is None
            and self.ranges[0].low is None
            and self.ranges[0].high is None
        )

    def satisfies(self, v: Version) -> bool:
        if not self.ranges:
            return True
        return any(r.contains(v) for r in self.ranges)

    def intersect(self, other: "VersionConstraint"):
        """Intersection, or None when provably empty."""
        if self.is_any():
            return other
        if other.is_any():
            return self
        out = []
        for a in self.ranges:
            for b in other.ranges:
                r = a.intersect(b)
                if r is not None:
                    out.append(r)
        if not out:
            return None
        return VersionConstraint(tuple(out))

    def render(self) -> str:
        if self.is_any():
            return ""
        return ",".join(r.render() for r in self.ranges)

    def __eq__(self, other):
        return isinstance(other, VersionConstraint) and self.ranges == other.ranges

    def __hash__(self):
        return hash(self.ranges)

    def __repr__(self):
        return f"VersionConstraint({self.render()!r})"


def version_satisfies(v: Version | str, constraint: VersionConstraint | str) -> bool:
    if isinstance(v, str):
        v = Version(v)
    if isinstance(constraint, str):
        constraint = VersionConstraint.parse(constraint)
    return constraint.satisfies(v)
