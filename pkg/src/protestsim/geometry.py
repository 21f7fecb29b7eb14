"""Planar vector and segment helpers shared by the simulation modules."""

from __future__ import annotations

import math
from typing import NamedTuple, Optional


class Vector2(NamedTuple):
    x: float
    y: float

    def __add__(self, other: "Vector2") -> "Vector2":  # type: ignore[override]
        return Vector2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vector2") -> "Vector2":
        return Vector2(self.x - other.x, self.y - other.y)

    def __mul__(self, k: float) -> "Vector2":  # type: ignore[override]
        return Vector2(self.x * k, self.y * k)

    __rmul__ = __mul__  # type: ignore[assignment]

    def __neg__(self) -> "Vector2":
        return Vector2(-self.x, -self.y)

    def dot(self, other: "Vector2") -> float:
        return self.x * other.x + self.y * other.y

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y)

    def unit(self) -> "Vector2":
        n = self.norm()
        if n == 0.0:
            return ZERO
        return Vector2(self.x / n, self.y / n)


ZERO = Vector2(0.0, 0.0)


def distance(a: Vector2, b: Vector2) -> float:
    dx = a[0] - b[0]
    dy = a[1] - b[1]
    return math.sqrt(dx * dx + dy * dy)


def direction(frm: Vector2, to: Vector2) -> Vector2:
    """Unit vector from ``frm`` to ``to``; zero when the points coincide."""
    dx = to[0] - frm[0]
    dy = to[1] - frm[1]
    n = math.sqrt(dx * dx + dy * dy)
    if n == 0.0:
        return ZERO
    return Vector2(dx / n, dy / n)


class Rect(NamedTuple):
    """Axis-aligned rectangle, closed on all sides."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def contains(self, p: Vector2) -> bool:
        return self.xmin <= p[0] <= self.xmax and self.ymin <= p[1] <= self.ymax

    def contains_rect(self, other: "Rect") -> bool:
        return (
            self.xmin <= other.xmin
            and self.ymin <= other.ymin
            and other.xmax <= self.xmax
            and other.ymax <= self.ymax
        )

    def clamp(self, p: Vector2) -> Vector2:
        return Vector2(
            min(max(p[0], self.xmin), self.xmax),
            min(max(p[1], self.ymin), self.ymax),
        )

    def nearest_point(self, p: Vector2) -> Vector2:
        return self.clamp(p)

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin


def segment_crossing(
    p0: Vector2, p1: Vector2, q0: Vector2, q1: Vector2
) -> Optional[float]:
    """Parameter ``t`` in [0, 1] where segment p0->p1 meets q0-q1, else None.

    Parallel (including collinear) segments never cross.
    """
    rx = p1[0] - p0[0]
    ry = p1[1] - p0[1]
    sx = q1[0] - q0[0]
    sy = q1[1] - q0[1]
    denom = rx * sy - ry * sx
    if denom == 0.0:
        return None
    qpx = q0[0] - p0[0]
    qpy = q0[1] - p0[1]
    t = (qpx * sy - qpy * sx) / denom
    u = (qpx * ry - qpy * rx) / denom
    if 0.0 <= t <= 1.0 and 0.0 <= u <= 1.0:
        return t
    return None
