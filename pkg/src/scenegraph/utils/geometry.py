"""Planar geometry helpers on top of shapely/numpy (scenario-local metric frame)."""

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import shapely
from shapely.geometry import LineString


def normalize_angle(h: float) -> float:
    """Map an angle to (-pi, pi]; values already in range are returned unchanged."""
    if -math.pi < h <= math.pi:
        return h
    h = math.remainder(h, 2.0 * math.pi)
    if h <= -math.pi:
        h = math.pi
    return h


def rotate_into_frame(dx: np.ndarray, dy: np.ndarray, heading: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Express world-frame vectors in a frame whose x axis points along ``heading``."""
    c, s = np.cos(heading), np.sin(heading)
    return c * dx + s * dy, -s * dx + c * dy


def cumulative_length(points: np.ndarray) -> np.ndarray:
    steps = np.linalg.norm(np.diff(points, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(steps)])


def resample_polyline(points: np.ndarray, widths: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """``n`` arclength-uniform samples of a polyline and its per-point widths."""
    cum = cumulative_length(points)
    total = cum[-1]
    if total <= 0.0:
        return np.repeat(points[:1], n, axis=0), np.full(n, widths[0])
    s = np.linspace(0.0, total, n)
    xs = np.interp(s, cum, points[:, 0])
    ys = np.interp(s, cum, points[:, 1])
    ws = np.interp(s, cum, widths)
    return np.stack([xs, ys], axis=1), ws


def polyline_midpoint(points: np.ndarray) -> np.ndarray:
    cum = cumulative_length(points)
    half = cum[-1] / 2.0
    return np.array([np.interp(half, cum, points[:, 0]), np.interp(half, cum, points[:, 1])])


@dataclass(frozen=True)
class Projection:
    distance: np.ndarray
    signed_offset: np.ndarray
    fraction: np.ndarray
    local_width: np.ndarray


class Polyline:
    """A road centerline with widths, ready for vectorised point projection."""

    def __init__(self, points: Sequence[Sequence[float]], widths: Sequence[float]):
        self.points = np.asarray(points, dtype=np.float64)
        self.widths = np.asarray(widths, dtype=np.float64)
        self.cum = cumulative_length(self.points)
        self.length = float(self.cum[-1])
        self.line = LineString(self.points)

    def intersects_box(self, min_xy: np.ndarray, max_xy: np.ndarray) -> bool:
        return bool(self.line.intersects(shapely.box(min_xy[0], min_xy[1], max_xy[0], max_xy[1])))

    def crosses(self, other: "Polyline") -> bool:
        return bool(self.line.crosses(other.line))

    def project(self, xy: np.ndarray) -> Projection:
        pts = shapely.points(xy)
        s = shapely.line_locate_point(self.line, pts)
        dist = shapely.distance(self.line, pts)
        closest = shapely.get_coordinates(shapely.line_interpolate_point(self.line, s))

        seg = np.clip(np.searchsorted(self.cum, s, side="right") - 1, 0, len(self.points) - 2)
        tangent = self.points[seg + 1] - self.points[seg]
        rel = xy - closest
        cross = tangent[:, 0] * rel[:, 1] - tangent[:, 1] * rel[:, 0]
        sign = np.where(cross < 0.0, -1.0, 1.0)

        fraction = s / self.length if self.length > 0 else np.zeros_like(s)
        return Projection(
            distance=dist,
            signed_offset=sign * dist,
            fraction=np.clip(fraction, 0.0, 1.0),
            local_width=np.interp(s, self.cum, self.widths),
        )
