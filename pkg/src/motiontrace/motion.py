"""Discrete motion descriptors from bounding-box tracks.

A track is a time-ordered sequence of (timestamp, Box). It is summarized by
three discrete attributes:

* direction — net centroid displacement quantized to eight compass bins,
  or STAT when the track is stationary. Image coordinates are y-down, so
  N means decreasing y and E means increasing x.
* speed — centroid path length per second, normalized by the mean box
  diagonal over the track, binned into ordinal ranks.
* scale — log-ratio of the last to first box area, binned into
  approaching / stable / receding (area growth is a depth-approach proxy).

All functions are pure; bin thresholds live in MotionConfig.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .trace import Box, Direction, Scale, Speed


class MotionComputeError(ValueError):
    """Base for track geometry failures."""


class TrackTooShortError(MotionComputeError):
    pass


class ZeroDurationError(MotionComputeError):
    pass


class ZeroVectorError(MotionComputeError):
    pass


@dataclass(frozen=True)
class MotionConfig:
    """Bin cutoffs. Speeds are in box-diagonals per second, scale in nats.

    Bins are half-open with the upper bin winning at a speed boundary;
    the scale boundary itself belongs to 'stable' (|r| <= threshold).
    """

    stationary_speed_threshold: float = 0.05
    slow_moderate_threshold: float = 0.5
    moderate_fast_threshold: float = 1.5
    scale_stable_log_threshold: float = math.log(1.2)

    def __post_init__(self):
        if not (0.0 < self.stationary_speed_threshold
                < self.slow_moderate_threshold
                < self.moderate_fast_threshold):
            raise ValueError(
                "speed thresholds must satisfy 0 < stationary < slow_moderate < moderate_fast"
            )
        if self.scale_stable_log_threshold <= 0:
            raise ValueError("scale_stable_log_threshold must be > 0")

    @property
    def speed_thresholds(self) -> tuple[float, float, float]:
        return (self.stationary_speed_threshold,
                self.slow_moderate_threshold,
                self.moderate_fast_threshold)


@dataclass(frozen=True)
class Track:
    """Per-object time-ordered box samples; timestamps strictly increasing."""

    object_name: str
    samples: tuple[tuple[float, Box], ...]

    def __post_init__(self):
        if len(self.samples) < 1:
            raise ValueError("a track needs at least one sample")
        object.__setattr__(
            self, "samples", tuple((float(t), b) for t, b in self.samples)
        )
        prev = None
        for t, b in self.samples:
            if not math.isfinite(t):
                raise ValueError(f"timestamp must be finite: {t}")
            if prev is not None and t <= prev:
                raise ValueError(f"timestamps must be strictly increasing: {prev} -> {t}")
            if not isinstance(b, Box):
                raise TypeError("track samples must carry Box instances")
            prev = t

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class MotionDescriptor:
    """Ground-truth discrete motion triple; STAT pairs exactly with stationary."""

    direction: Direction
    speed: Speed
    scale: Scale

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        object.__setattr__(self, "speed", Speed(self.speed))
        object.__setattr__(self, "scale", Scale(self.scale))
        if (self.direction is Direction.STAT) != (self.speed is Speed.STATIONARY):
            raise ValueError(
                f"direction {self.direction.value} is inconsistent with speed {self.speed.value}"
            )


def centroid(box: Box) -> tuple[float, float]:
    return ((box.x1 + box.x2) / 2.0, (box.y1 + box.y2) / 2.0)


def box_area(box: Box) -> float:
    return (box.x2 - box.x1) * (box.y2 - box.y1)


def box_diagonal(box: Box) -> float:
    return math.hypot(box.x2 - box.x1, box.y2 - box.y1)


def net_displacement(track: Track) -> tuple[float, float]:
    """Vector sum of per-step centroid displacements (telescopes to last-first)."""
    if len(track) < 2:
        raise TrackTooShortError("net displacement needs at least 2 samples")
    cx0, cy0 = centroid(track.samples[0][1])
    cx1, cy1 = centroid(track.samples[-1][1])
    return (cx1 - cx0, cy1 - cy0)


# Octant lookup for floor((theta + 22.5) / 45) mod 8, theta in degrees.
_COMPASS_BY_OCTANT = (
    Direction.E,
    Direction.NE,
    Direction.N,
    Direction.NW,
    Direction.W,
    Direction.SW,
    Direction.S,
    Direction.SE,
)


def quantize_direction(displacement: tuple[float, float], is_stationary: bool) -> Direction:
    """Map a displacement vector to a compass bin (half-open 45-degree sectors).

    Angles use theta = atan2(-dy, dx) so that upward motion in the image
    (decreasing y) maps to N. A bin covers [center - 22.5, center + 22.5).
    """
    if is_stationary:
        return Direction.STAT
    dx, dy = displacement
    if dx == 0.0 and dy == 0.0:
        raise ZeroVectorError("cannot quantize a zero displacement of a moving object")
    theta = math.degrees(math.atan2(-dy, dx))
    octant = int(math.floor((theta + 22.5) / 45.0)) % 8
    return _COMPASS_BY_OCTANT[octant]


def normalized_speed(track: Track) -> float:
    """Centroid path length per second, in units of the mean box diagonal.

    Path length (not net displacement) keeps back-and-forth motion fast and
    makes the measure invariant under time reversal, as does normalizing by
    the mean diagonal over all samples.
    """
    if len(track) < 2:
        raise TrackTooShortError("speed needs at least 2 samples")
    t0 = track.samples[0][0]
    t1 = track.samples[-1][0]
    duration = t1 - t0
    if duration <= 0.0:
        raise ZeroDurationError(f"track duration must be positive, got {duration}")
    path = 0.0
    prev = centroid(track.samples[0][1])
    for _, box in track.samples[1:]:
        cur = centroid(box)
        path += math.hypot(cur[0] - prev[0], cur[1] - prev[1])
        prev = cur
    mean_diag = sum(box_diagonal(b) for _, b in track.samples) / len(track)
    return path / duration / mean_diag


def bin_speed(v: float, cfg: MotionConfig) -> Speed:
    if v < cfg.stationary_speed_threshold:
        return Speed.STATIONARY
    if v < cfg.slow_moderate_threshold:
        return Speed.SLOW
    if v < cfg.moderate_fast_threshold:
        return Speed.MODERATE
    return Speed.FAST


def scale_log_ratio(track: Track) -> float:
    """ln(area of last box / area of first box)."""
    if len(track) < 2:
        raise TrackTooShortError("scale ratio needs at least 2 samples")
    return math.log(box_area(track.samples[-1][1]) / box_area(track.samples[0][1]))


def bin_scale(r: float, cfg: MotionConfig) -> Scale:
    if r > cfg.scale_stable_log_threshold:
        return Scale.APPROACHING
    if r < -cfg.scale_stable_log_threshold:
        return Scale.RECEDING
    return Scale.STABLE


def motion_descriptor(track: Track, cfg: MotionConfig = MotionConfig()) -> MotionDescriptor:
    """Full direction/speed/scale summary of a track.

    The speed bin decides stationarity; a moving track whose net displacement
    is exactly zero (pure back-and-forth) has no compass bin and raises
    ZeroVectorError.
    """
    if len(track) < 2:
        raise TrackTooShortError("motion descriptor needs at least 2 samples")
    speed = bin_speed(normalized_speed(track), cfg)
    stationary = speed is Speed.STATIONARY
    if stationary:
        direction = Direction.STAT
    else:
        direction = quantize_direction(net_displacement(track), False)
    scale = bin_scale(scale_log_ratio(track), cfg)
    return MotionDescriptor(direction, speed, scale)
