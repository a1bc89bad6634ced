"""Seeded synthetic tracks with known motion bins, plus a reference classifier.

The reference classifier here is written independently of motion.py on
purpose: direction comes from an explicit angle table over the first-to-last
centroid vector, speed and scale from direct threshold comparisons. It is
the ground truth that motion.motion_descriptor is tested against.

generate_synthetic builds a track whose reference classification equals the
requested bins, with the measured speed and area log-ratio keeping a relative
margin from every configured threshold (|value - t| >= margin * t).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .motion import MotionConfig, MotionDescriptor, Track
from .trace import Box, Direction, Scale, Speed


class InfeasibleSpecError(ValueError):
    """The requested bin combination or margin cannot be realized."""


MOTION_KINDS = ("linear", "stationary", "approach", "recede", "arc")


@dataclass(frozen=True)
class SyntheticSpec:
    motion_kind: str
    target_direction: Direction
    target_speed: Speed
    target_scale: Scale
    sample_count: int = 6
    margin: float = 0.1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "target_direction", Direction(self.target_direction))
        object.__setattr__(self, "target_speed", Speed(self.target_speed))
        object.__setattr__(self, "target_scale", Scale(self.target_scale))
        if self.motion_kind not in MOTION_KINDS:
            raise ValueError(f"unknown motion kind {self.motion_kind!r}")
        if self.sample_count < 2:
            raise ValueError("sample_count must be >= 2")
        if not (0.0 <= self.margin < 1.0):
            raise ValueError("margin must lie in [0, 1)")


# --- reference classifier (independent of motion.py) ---------------------

_ANGLE_TABLE = (
    (-157.5, -112.5, Direction.SW),
    (-112.5, -67.5, Direction.S),
    (-67.5, -22.5, Direction.SE),
    (-22.5, 22.5, Direction.E),
    (22.5, 67.5, Direction.NE),
    (67.5, 112.5, Direction.N),
    (112.5, 157.5, Direction.NW),
)


def _reference_direction(angle_deg: float) -> Direction:
    if angle_deg >= 157.5 or angle_deg < -157.5:
        return Direction.W
    for lo, hi, bin_ in _ANGLE_TABLE:
        if lo <= angle_deg < hi:
            return bin_
    raise AssertionError(f"angle out of range: {angle_deg}")


def reference_measurements(track: Track) -> tuple[float, float, float | None]:
    """(normalized speed, area log-ratio, net angle in degrees or None)."""
    samples = track.samples
    centroids = [((b.x1 + b.x2) / 2.0, (b.y1 + b.y2) / 2.0) for _, b in samples]
    diagonals = [math.hypot(b.x2 - b.x1, b.y2 - b.y1) for _, b in samples]
    path = 0.0
    for (ax, ay), (bx, by) in zip(centroids, centroids[1:]):
        path += math.hypot(bx - ax, by - ay)
    duration = samples[-1][0] - samples[0][0]
    speed = path / duration / (sum(diagonals) / len(diagonals))
    area_first = (samples[0][1].x2 - samples[0][1].x1) * (samples[0][1].y2 - samples[0][1].y1)
    area_last = (samples[-1][1].x2 - samples[-1][1].x1) * (samples[-1][1].y2 - samples[-1][1].y1)
    log_ratio = math.log(area_last / area_first)
    dx = centroids[-1][0] - centroids[0][0]
    dy = centroids[-1][1] - centroids[0][1]
    angle = None
    if dx != 0.0 or dy != 0.0:
        angle = math.degrees(math.atan2(-dy, dx))
    return speed, log_ratio, angle


def reference_descriptor(track: Track, cfg: MotionConfig = MotionConfig()) -> MotionDescriptor:
    """Brute-force classification via explicit tables and comparisons."""
    if len(track) < 2:
        raise ValueError("reference classification needs at least 2 samples")
    speed_value, log_ratio, angle = reference_measurements(track)

    if speed_value < cfg.stationary_speed_threshold:
        speed = Speed.STATIONARY
    elif speed_value < cfg.slow_moderate_threshold:
        speed = Speed.SLOW
    elif speed_value < cfg.moderate_fast_threshold:
        speed = Speed.MODERATE
    else:
        speed = Speed.FAST

    if speed is Speed.STATIONARY:
        direction = Direction.STAT
    else:
        if angle is None:
            raise ValueError("moving track has zero net displacement")
        direction = _reference_direction(angle)

    if log_ratio > cfg.scale_stable_log_threshold:
        scale = Scale.APPROACHING
    elif log_ratio < -cfg.scale_stable_log_threshold:
        scale = Scale.RECEDING
    else:
        scale = Scale.STABLE

    return MotionDescriptor(direction, speed, scale)


# --- generator ------------------------------------------------------------

_DIRECTION_CENTER_DEG = {
    Direction.E: 0.0,
    Direction.NE: 45.0,
    Direction.N: 90.0,
    Direction.NW: 135.0,
    Direction.W: 180.0,
    Direction.SW: -135.0,
    Direction.S: -90.0,
    Direction.SE: -45.0,
}


def _check_consistency(spec: SyntheticSpec) -> None:
    stat_dir = spec.target_direction is Direction.STAT
    stat_speed = spec.target_speed is Speed.STATIONARY
    if stat_dir != stat_speed:
        raise InfeasibleSpecError("direction STAT requires speed stationary and vice versa")
    if (spec.motion_kind == "stationary") != stat_speed:
        raise InfeasibleSpecError("'stationary' kind requires (and is required by) stationary targets")
    if spec.motion_kind == "approach" and spec.target_scale is not Scale.APPROACHING:
        raise InfeasibleSpecError("'approach' kind requires scale=approaching")
    if spec.motion_kind == "recede" and spec.target_scale is not Scale.RECEDING:
        raise InfeasibleSpecError("'recede' kind requires scale=receding")


def _margin_band(lo: float, hi: float, thresholds: tuple[float, ...], m: float
                 ) -> tuple[float, float]:
    """Shrink [lo, hi] until every threshold is at relative distance >= m."""
    a, b = lo, hi
    for t in thresholds:
        half = m * abs(t)
        keep_out_lo, keep_out_hi = t - half, t + half
        if keep_out_hi <= a or keep_out_lo >= b:
            continue
        if t >= b:
            b = min(b, keep_out_lo)
        elif t <= a:
            a = max(a, keep_out_hi)
        else:
            raise InfeasibleSpecError(f"threshold {t} falls inside the target band [{a}, {b}]")
    if a >= b:
        raise InfeasibleSpecError(f"margin {m} leaves no room inside band [{lo}, {hi}]")
    # Stay strictly inside so float noise in measurements cannot cross over.
    pad = 0.02 * (b - a)
    return a + pad, b - pad


def _speed_band(speed: Speed, cfg: MotionConfig, m: float) -> tuple[float, float]:
    stat, slow_mod, mod_fast = cfg.speed_thresholds
    bounds = {
        Speed.STATIONARY: (0.0, stat),
        Speed.SLOW: (stat, slow_mod),
        Speed.MODERATE: (slow_mod, mod_fast),
        Speed.FAST: (mod_fast, 2.0 * mod_fast),
    }[speed]
    return _margin_band(*bounds, cfg.speed_thresholds, m)


def _scale_band(scale: Scale, cfg: MotionConfig, m: float) -> tuple[float, float]:
    t = cfg.scale_stable_log_threshold
    bounds = {
        Scale.STABLE: (-t, t),
        Scale.APPROACHING: (t, t + 0.7),
        Scale.RECEDING: (-t - 0.7, -t),
    }[scale]
    return _margin_band(*bounds, (-t, t), m)


def _arc_offsets(rng: random.Random, fracs: list[float], path: float, theta_deg: float
                 ) -> list[tuple[float, float]]:
    """Points on a circular arc whose chord points along theta (image coords)."""
    phi = rng.uniform(0.15, 0.35)
    pts = [(math.sin(-phi + 2.0 * phi * f), math.cos(-phi + 2.0 * phi * f)) for f in fracs]
    pts = [(x - pts[0][0], y - pts[0][1]) for x, y in pts]
    raw_path = sum(
        math.hypot(bx - ax, by - ay) for (ax, ay), (bx, by) in zip(pts, pts[1:])
    )
    k = path / raw_path
    theta = math.radians(theta_deg)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    out = []
    for x, y in pts:
        mx, my = k * x, k * y
        rx = mx * cos_t - my * sin_t
        ry = mx * sin_t + my * cos_t
        out.append((rx, -ry))  # math y-up -> image y-down
    return out


def generate_synthetic(spec: SyntheticSpec, cfg: MotionConfig = MotionConfig()
                       ) -> tuple[Track, MotionDescriptor]:
    """Deterministic track whose reference classification equals the targets."""
    _check_consistency(spec)
    rng = random.Random(spec.seed)
    m = spec.margin
    n = spec.sample_count
    fracs = [i / (n - 1) for i in range(n)]

    stationary = spec.target_speed is Speed.STATIONARY
    if stationary:
        speed_value = 0.0
        if cfg.stationary_speed_threshold * (1.0 - m) <= 0:
            raise InfeasibleSpecError("margin leaves no stationary band")
    else:
        speed_value = rng.uniform(*_speed_band(spec.target_speed, cfg, m))
    log_ratio = rng.uniform(*_scale_band(spec.target_scale, cfg, m))

    base = rng.uniform(0.04, 0.07)  # square box side at the first sample
    size_ratio = math.exp(log_ratio / 2.0)
    sides = [base * (1.0 + (size_ratio - 1.0) * f) for f in fracs]
    mean_diag = sum(s * math.sqrt(2.0) for s in sides) / n

    if stationary:
        duration = rng.uniform(1.5, 4.0)
        offsets = [(0.0, 0.0)] * n
    else:
        duration = min(3.0, max(0.6, 0.7 / (speed_value * mean_diag)))
        path = speed_value * duration * mean_diag
        theta = _DIRECTION_CENTER_DEG[spec.target_direction] + rng.uniform(-18.0, 18.0)
        if spec.motion_kind == "arc":
            offsets = _arc_offsets(rng, fracs, path, theta)
        else:
            rad = math.radians(theta)
            ux, uy = math.cos(rad), -math.sin(rad)
            offsets = [(path * f * ux, path * f * uy) for f in fracs]

    t0 = rng.uniform(0.0, 20.0)
    times = [t0 + duration * f for f in fracs]

    # Place so every corner stays well inside the unit square.
    half = [s / 2.0 for s in sides]
    lo_x = min(ox - h for (ox, _), h in zip(offsets, half))
    hi_x = max(ox + h for (ox, _), h in zip(offsets, half))
    lo_y = min(oy - h for (_, oy), h in zip(offsets, half))
    hi_y = max(oy + h for (_, oy), h in zip(offsets, half))
    margin_px = 0.01
    if hi_x - lo_x > 1.0 - 2 * margin_px or hi_y - lo_y > 1.0 - 2 * margin_px:
        raise InfeasibleSpecError("generated geometry does not fit the unit square")
    cx = rng.uniform(margin_px - lo_x, 1.0 - margin_px - hi_x)
    cy = rng.uniform(margin_px - lo_y, 1.0 - margin_px - hi_y)

    samples = tuple(
        (t, Box(cx + ox - h, cy + oy - h, cx + ox + h, cy + oy + h))
        for t, (ox, oy), h in zip(times, offsets, half)
    )
    track = Track(f"synthetic-{spec.seed}", samples)

    expected = MotionDescriptor(spec.target_direction, spec.target_speed, spec.target_scale)
    got = reference_descriptor(track, cfg)
    if got != expected:
        raise AssertionError(f"generator missed its targets: wanted {expected}, got {got}")
    measured_speed, measured_ratio, _ = reference_measurements(track)
    for t in cfg.speed_thresholds:
        if abs(measured_speed - t) < m * t:
            raise AssertionError(f"speed {measured_speed} violates margin at threshold {t}")
    for t in (cfg.scale_stable_log_threshold, -cfg.scale_stable_log_threshold):
        if abs(measured_ratio - t) < m * abs(t):
            raise AssertionError(f"log-ratio {measured_ratio} violates margin at threshold {t}")
    return track, expected
