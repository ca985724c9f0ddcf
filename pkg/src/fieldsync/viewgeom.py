"""Planar geometry for off-screen data indication.

Two channels point at data the analyst cannot currently see. A wedge is an
isoceles triangle whose apex sits exactly at an off-screen target and whose
base intrudes into the viewport, aimed at the nearest boundary point.
Peripheral HUD marks indicate sensors outside the viewer's field of view:
side by bearing sign, vertical position by how far the viewer must turn,
opacity by distance, color by the temperature colormap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .color import RGB, temp_color
from .errors import Degenerate, MissingValue, NonNumericField
from .geo import GridSpec, local_project
from .model import Record, RecordId

INTRUSION_FACTOR = 0.1      # wedge base depth as a fraction of min(w, h)
APERTURE_FACTOR = 1.5       # half-aperture = atan(factor * intrusion / leg)
ROTATE_STEP_RAD = math.radians(1.0)
MAX_ROTATE_STEPS = 90
DEGENERATE_DISTANCE_FACTOR = 10.0
DEFAULT_ALPHA_RANGE_M = 500.0

Point = tuple[float, float]


@dataclass(frozen=True)
class Viewport:
    """Axis-aligned screen rectangle [0, width] x [0, height]."""

    width: float
    height: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("viewport dimensions must be positive")

    def contains(self, point: Point) -> bool:
        return 0 <= point[0] <= self.width and 0 <= point[1] <= self.height

    def strictly_contains(self, point: Point) -> bool:
        return 0 < point[0] < self.width and 0 < point[1] < self.height


@dataclass(frozen=True)
class WedgeGeom:
    """Off-screen pointer: apex at the target, base inside the viewport."""

    apex: Point
    base_left: Point
    base_right: Point
    leg_length: float
    half_aperture: float
    color: RGB | None = None

    def to_doc(self) -> dict:
        return {
            "apex": list(self.apex),
            "base_left": list(self.base_left),
            "base_right": list(self.base_right),
            "leg_length": self.leg_length,
            "half_aperture": self.half_aperture,
            "color": list(self.color) if self.color else None,
        }


@dataclass(frozen=True)
class HudMark:
    """Peripheral indicator for a sensor outside the field of view."""

    side: str  # LEFT or RIGHT
    vertical_pos: float  # 0 just off-view (top) .. 1 directly behind (bottom)
    alpha: float
    color: RGB
    source_id: RecordId

    def __post_init__(self):
        if self.side not in ("LEFT", "RIGHT"):
            raise ValueError(f"bad side {self.side!r}")
        if not 0.0 <= self.vertical_pos <= 1.0:
            raise ValueError(f"vertical_pos {self.vertical_pos} outside [0, 1]")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha {self.alpha} outside (0, 1]")

    def to_doc(self) -> dict:
        return {
            "side": self.side,
            "vertical_pos": self.vertical_pos,
            "alpha": self.alpha,
            "color": list(self.color),
            "source_id": str(self.source_id),
        }


def normalize_angle(angle: float) -> float:
    """Wrap into (-pi, pi]."""
    wrapped = math.remainder(angle, math.tau)
    if wrapped <= -math.pi:
        wrapped += math.tau
    return wrapped


@dataclass(frozen=True)
class ViewerPose:
    """Viewer in grid-local meters; heading 0 = +y, clockwise positive."""

    position: Point
    heading: float
    fov: float

    def __post_init__(self):
        if not 0.0 < self.fov < math.pi:
            raise ValueError(f"fov {self.fov} outside (0, pi)")
        object.__setattr__(self, "heading", normalize_angle(self.heading))


def _rotated(direction: float, by: float) -> Point:
    return (math.cos(direction + by), math.sin(direction + by))


def wedge(target: Point, viewport: Viewport, color: RGB | None = None) -> WedgeGeom | None:
    """Wedge geometry for an off-screen target, or None when it is on screen.

    The apex is the target itself. The leg length is the distance to the
    nearest viewport boundary point plus a fixed intrusion depth, and the
    aperture shrinks with distance so far targets get slim wedges. When the
    base vertices fall outside the viewport the axis rotates toward the
    viewport center in 1 degree steps (at most 90); if no rotation fits,
    near-corner targets only, the aperture narrows until the base fits.

    Raises Degenerate for targets farther than 10x the larger viewport
    dimension; callers fall back to HUD marks for those.
    """
    tx, ty = target
    w, h = viewport.width, viewport.height
    if viewport.contains(target):
        return None

    nearest = (min(max(tx, 0.0), w), min(max(ty, 0.0), h))
    distance = math.dist(target, nearest)
    if distance > DEGENERATE_DISTANCE_FACTOR * max(w, h):
        raise Degenerate(f"target {target} too far from viewport for a wedge")

    intrusion = INTRUSION_FACTOR * min(w, h)
    leg = distance + intrusion
    aperture = math.atan(APERTURE_FACTOR * intrusion / leg)

    axis_angle = math.atan2(nearest[1] - ty, nearest[0] - tx)
    center_angle = math.atan2(h / 2.0 - ty, w / 2.0 - tx)
    toward_center = normalize_angle(center_angle - axis_angle)
    steps = min(MAX_ROTATE_STEPS, int(abs(toward_center) / ROTATE_STEP_RAD))
    direction = math.copysign(1.0, toward_center)
    candidates = [axis_angle + k * direction * ROTATE_STEP_RAD for k in range(steps + 1)]
    if steps < MAX_ROTATE_STEPS:
        candidates.append(center_angle)

    half = aperture
    while half > 1e-4:
        for theta in candidates:
            left = (tx + leg * _rotated(theta, half)[0], ty + leg * _rotated(theta, half)[1])
            right = (tx + leg * _rotated(theta, -half)[0], ty + leg * _rotated(theta, -half)[1])
            if viewport.strictly_contains(left) and viewport.strictly_contains(right):
                return WedgeGeom(
                    apex=target,
                    base_left=left,
                    base_right=right,
                    leg_length=leg,
                    half_aperture=half,
                    color=color,
                )
        half *= 0.9  # near-corner targets cannot fit the full aperture
    raise Degenerate(f"no wedge fits the viewport for target {target}")


def hud_project(
    sensor: Record,
    viewer: ViewerPose,
    grid: GridSpec,
    value_range: tuple[float, float],
    field: str,
    alpha_range_m: float = DEFAULT_ALPHA_RANGE_M,
) -> HudMark | None:
    """Peripheral HUD mark for a sensor, or None when it is within the fov.

    The bearing is the signed angle the viewer must turn toward the sensor,
    normalized to (-pi, pi]. Marks sit on the side of the bearing sign;
    vertical position grows from just-off-view (0) to directly-behind (1);
    opacity falls off with distance down to 0.1.
    """
    lo, hi = value_range
    if not lo < hi:
        raise ValueError(f"bad value range [{lo}, {hi}]")
    if field not in sensor.values:
        raise MissingValue(field)
    value = sensor.values[field]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise NonNumericField(field)

    sx, sy = local_project(sensor.lat, sensor.lon, grid)
    dx = sx - viewer.position[0]
    dy = sy - viewer.position[1]
    # heading convention: 0 = +y, clockwise; atan2(x, y) measures exactly that
    bearing = normalize_angle(math.atan2(dx, dy) - viewer.heading)
    if abs(bearing) <= viewer.fov / 2.0:
        return None

    distance = math.hypot(dx, dy)
    vertical = (abs(bearing) - viewer.fov / 2.0) / (math.pi - viewer.fov / 2.0)
    alpha = min(1.0, max(0.1, 1.0 - distance / alpha_range_m))
    return HudMark(
        side="LEFT" if bearing < 0 else "RIGHT",
        vertical_pos=min(1.0, vertical),
        alpha=alpha,
        color=temp_color(float(value), value_range),
        source_id=sensor.id,
    )


def build_render_plan(
    records: Iterable[Record],
    grid: GridSpec,
    viewport: Viewport,
    viewer: ViewerPose,
    field: str,
    value_range: tuple[float, float],
    freshness: dict[RecordId, str] | None = None,
) -> dict:
    """Render plan: on-screen points, wedges for off-screen targets, HUD marks.

    Screen space is the overhead map: grid-local meters with the viewport
    anchored at the grid origin. Every record appears as a point (on screen)
    or a wedge (off screen, unless degenerate); records outside the viewer's
    field of view additionally get a HUD mark. Entries are ordered by
    canonical record id.
    """
    neutral = (0.5, 0.5, 0.5)
    points, wedges, hud_marks = [], [], []
    for record in sorted(records, key=lambda r: str(r.id)):
        value = record.values.get(field)
        colored = isinstance(value, (int, float)) and not isinstance(value, bool)
        color = temp_color(float(value), value_range) if colored else neutral
        screen = local_project(record.lat, record.lon, grid)

        geom = None
        try:
            geom = wedge(screen, viewport, color=color)
        except Degenerate:
            pass  # too far off the map; the HUD channel covers it
        if geom is None and viewport.contains(screen):
            entry = {
                "id": str(record.id),
                "x": screen[0],
                "y": screen[1],
                "color": list(color),
            }
            if freshness is not None:
                entry["freshness"] = freshness.get(record.id)
            points.append(entry)
        elif geom is not None:
            doc = geom.to_doc()
            doc["source_id"] = str(record.id)
            wedges.append(doc)

        if colored:
            mark = hud_project(record, viewer, grid, value_range, field)
            if mark is not None:
                hud_marks.append(mark.to_doc())

    return {
        "viewport": {"width": viewport.width, "height": viewport.height},
        "viewer": {
            "position": list(viewer.position),
            "heading": viewer.heading,
            "fov": viewer.fov,
        },
        "field": field,
        "value_range": list(value_range),
        "points": points,
        "wedges": wedges,
        "hud_marks": hud_marks,
    }
