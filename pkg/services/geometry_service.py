"""
Room geometry: arcs of circles centered at the typical UE
"""
import math
import logging
from typing import Dict, List, Tuple, Union

import numpy as np

from models.coverage_models import IntersectionCounts, RoomGeometry, SegmentSet
from models.exceptions import DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# segment angles at or below this are treated as the empty arc
ZERO_ANGLE = 1e-12


def _out(value: np.ndarray, like: ArrayLike) -> ArrayLike:
    return float(value) if np.ndim(like) == 0 else value


def psi(a: ArrayLike, b: ArrayLike) -> ArrayLike:
    """arccos(a / b) when b > a, otherwise 0"""
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    inside = b_arr > a_arr
    ratio = np.divide(a_arr, b_arr, out=np.ones(np.broadcast(a_arr, b_arr).shape), where=inside)
    value = np.where(inside, np.arccos(np.clip(ratio, -1.0, 1.0)), 0.0)
    return value if np.ndim(a) or np.ndim(b) else float(value)


def _wall(room: RoomGeometry, axis: str, index: int) -> float:
    if index not in (1, 2):
        raise DomainError(f"wall index must be 1 or 2, got {index}")
    if axis == 'x':
        return room.r_x1 if index == 1 else room.r_x2
    return room.r_y1 if index == 1 else room.r_y2


def quadrant_angle(room: RoomGeometry, i: int, j: int, d: ArrayLike) -> ArrayLike:
    """Angle of the radius-d arc inside the (i, j) quadrant rectangle"""
    d_arr = np.asarray(d, dtype=float)
    angle = np.maximum(
        math.pi / 2 - psi(_wall(room, 'x', i), d_arr) - psi(_wall(room, 'y', j), d_arr),
        0.0,
    )
    return _out(angle, d)


def quadrant_angles(room: RoomGeometry, d: float) -> Dict[Tuple[int, int], float]:
    return {(i, j): quadrant_angle(room, i, j, d) for i in (1, 2) for j in (1, 2)}


def arc_angle(room: RoomGeometry, d: ArrayLike) -> ArrayLike:
    """theta(d): total angle of the in-room arc"""
    d_arr = np.asarray(d, dtype=float)
    total = sum(quadrant_angle(room, i, j, d_arr) for i in (1, 2) for j in (1, 2))
    return _out(np.asarray(total), d)


def arc_angle_and_length(room: RoomGeometry, d: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    theta = arc_angle(room, d)
    return theta, theta * (np.asarray(d, dtype=float) if np.ndim(d) else float(d))


def corner_distance(room: RoomGeometry, i: int, j: int) -> float:
    return math.hypot(_wall(room, 'x', i), _wall(room, 'y', j))


def max_corner_distance(room: RoomGeometry) -> float:
    return max(corner_distance(room, i, j) for i in (1, 2) for j in (1, 2))


def geometric_breakpoints(room: RoomGeometry) -> List[float]:
    """Wall and corner distances, where theta(d) has kinks"""
    corners = [corner_distance(room, i, j) for i in (1, 2) for j in (1, 2)]
    return sorted(set(room.wall_distances) | set(corners))


def intersection_counts(room: RoomGeometry, d0: float) -> IntersectionCounts:
    """Crossings of the full radius-d0 circle with each wall"""
    rx = (room.r_x1, room.r_x2)
    ry = (room.r_y1, room.r_y2)

    def count(own: float, others: Tuple[float, float]) -> int:
        return 2 * int(d0 > own) - sum(int(d0 >= math.hypot(own, o)) for o in others)

    xi = (count(rx[0], ry), count(rx[1], ry), count(ry[0], rx), count(ry[1], rx))
    return IntersectionCounts(*xi, total=sum(xi))


def arc_segment_count(room: RoomGeometry, d0: float) -> int:
    """Number of in-room arc segments from the indicator formula"""
    walls = room.wall_distances
    crossings = sum(int(d0 > r) for r in walls)
    corners = sum(int(d0 >= corner_distance(room, i, j)) for i in (1, 2) for j in (1, 2))
    full_circle = int(all(d0 < r for r in walls))
    return crossings - corners + full_circle


def _indicators(room: RoomGeometry, d0: float) -> Tuple[int, int, int, int]:
    return tuple(int(d0 > r) for r in room.wall_distances)


def segment_angles(room: RoomGeometry, d0: float) -> SegmentSet:
    """In-room arc segment angles, selected by the wall indicators"""
    q = quadrant_angles(room, d0)
    t11, t12, t21, t22 = q[(1, 1)], q[(1, 2)], q[(2, 1)], q[(2, 2)]
    theta = t11 + t12 + t21 + t22
    bits = _indicators(room, d0)

    if sum(bits) <= 1:
        candidates = [theta]
    else:
        # keyed by (1(d0>R_X1), 1(d0>R_X2), 1(d0>R_Y1), 1(d0>R_Y2))
        table = {
            (1, 1, 0, 0): [t11 + t21, t12 + t22],
            (1, 0, 1, 0): [t11, theta - t11],
            (1, 0, 0, 1): [t12, theta - t12],
            (0, 1, 1, 0): [t21, theta - t21],
            (0, 1, 0, 1): [t22, theta - t22],
            (0, 0, 1, 1): [t11 + t12, t21 + t22],
            (1, 1, 1, 0): [t11, t21, t12 + t22],
            (1, 1, 0, 1): [t11 + t21, t12, t22],
            (1, 0, 1, 1): [t11, t12, t21 + t22],
            (0, 1, 1, 1): [t11 + t12, t21, t22],
            (1, 1, 1, 1): [t11, t12, t21, t22],
        }
        candidates = table[bits]

    return SegmentSet(angles=tuple(float(a) for a in candidates if a > ZERO_ANGLE))


def in_room_mask(room: RoomGeometry, angles: np.ndarray, radius: float) -> np.ndarray:
    """Whether points on the circle around the UE fall inside the room"""
    x0, y0 = room.ue_position
    x = x0 + radius * np.cos(angles)
    y = y0 + radius * np.sin(angles)
    return (x >= 0.0) & (x <= room.r_x) & (y >= 0.0) & (y <= room.r_y)


def arc_intervals(room: RoomGeometry, d: float) -> List[Tuple[float, float]]:
    """Angular intervals of the in-room arc, found from the wall crossings.

    Intervals are in [0, 2 pi) except that a segment running through
    angle 0 is returned as one interval whose start is negative.
    """
    if d <= 0.0:
        return [(0.0, 2 * math.pi)]
    cuts = {0.0}
    for r, center in ((room.r_x2, 0.0), (room.r_y2, math.pi / 2),
                      (room.r_x1, math.pi), (room.r_y1, 3 * math.pi / 2)):
        if d > r:
            half = math.acos(r / d)
            cuts.add((center - half) % (2 * math.pi))
            cuts.add((center + half) % (2 * math.pi))
    edges = sorted(cuts) + [2 * math.pi]
    spans = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo <= ZERO_ANGLE:
            continue
        if in_room_mask(room, np.array([0.5 * (lo + hi)]), d)[0]:
            if spans and abs(spans[-1][1] - lo) <= ZERO_ANGLE:
                spans[-1] = (spans[-1][0], hi)
            else:
                spans.append((lo, hi))
    # join the pieces split at angle 0
    if len(spans) > 1 and spans[0][0] <= ZERO_ANGLE and spans[-1][1] >= 2 * math.pi - ZERO_ANGLE:
        first = spans.pop(0)
        last = spans.pop()
        spans.append((last[0] - 2 * math.pi, first[1]))
    return spans
