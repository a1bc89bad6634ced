"""Densify sparse keyframe tracks and inject motion tags into traces.

Sparse annotations carry boxes at a handful of timestamps; motion attributes
are defined over continuous time. densify_track inserts corner-interpolated
boxes on a fixed-stride grid inside each gap (originals are always kept),
compute_descriptors summarizes each densified track, and inject_motion_tags
appends the canonical tag right after the object's final grounded mention.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from itertools import pairwise

from .motion import (
    MotionComputeError,
    MotionConfig,
    MotionDescriptor,
    Track,
    TrackTooShortError,
    motion_descriptor,
)
from .records import AnnotationRecord
from .rewards import ObjectKeyframes
from .trace import (
    Box,
    EvidenceItem,
    MotionTag,
    Trace,
    normalize_name,
    parse_trace,
    serialize_trace,
)

logger = logging.getLogger(__name__)

_INTERPOLATORS = ("linear",)


@dataclass(frozen=True)
class DensifyConfig:
    stride: float = 0.5
    interpolator: str = "linear"

    def __post_init__(self):
        if self.stride <= 0:
            raise ValueError(f"stride must be positive: {self.stride}")
        if self.interpolator not in _INTERPOLATORS:
            raise ValueError(
                f"unknown interpolator {self.interpolator!r}; available: {_INTERPOLATORS}"
            )


def lerp_box(a: Box, b: Box, alpha: float) -> Box:
    """Corner-wise linear interpolation; valid for alpha in [0,1]."""
    return Box(
        a.x1 + alpha * (b.x1 - a.x1),
        a.y1 + alpha * (b.y1 - a.y1),
        a.x2 + alpha * (b.x2 - a.x2),
        a.y2 + alpha * (b.y2 - a.y2),
    )


def densify_track(sparse: Track, cfg: DensifyConfig = DensifyConfig()) -> Track:
    """Insert interpolated samples at t_a + k*stride strictly inside each gap.

    The grid is anchored at the left keyframe of the gap; all original
    samples are preserved and the output stays strictly time-ordered.
    """
    if len(sparse) < 2:
        raise TrackTooShortError("densification needs at least 2 keyframes")
    out: list[tuple[float, Box]] = []
    for (t_a, b_a), (t_b, b_b) in pairwise(sparse.samples):
        out.append((t_a, b_a))
        k = 1
        while True:
            t = t_a + k * cfg.stride
            if t >= t_b:
                break
            if t <= out[-1][0]:  # stride below float resolution of this gap
                break
            out.append((t, lerp_box(b_a, b_b, (t - t_a) / (t_b - t_a))))
            k += 1
    out.append(sparse.samples[-1])
    return Track(sparse.object_name, tuple(out))


def compute_descriptors(record: AnnotationRecord,
                        dcfg: DensifyConfig = DensifyConfig(),
                        mcfg: MotionConfig = MotionConfig(),
                        ) -> dict[str, MotionDescriptor]:
    """Whole-track descriptor per object, keyed by the record's object name.

    Objects with fewer than two keyframes, or with dynamics that cannot be
    summarized, are skipped rather than raising.
    """
    out: dict[str, MotionDescriptor] = {}
    for obj in record.objects:
        if len(obj.keyframes) < 2:
            logger.debug("skipping %r: fewer than 2 keyframes", obj.name)
            continue
        dense = densify_track(Track(obj.name, obj.keyframes), dcfg)
        try:
            out[obj.name] = motion_descriptor(dense, mcfg)
        except MotionComputeError as exc:
            logger.warning("skipping %r: %s", obj.name, exc)
    return out


def _final_evidence_index(segments: list, key: str) -> int | None:
    last = None
    for i, seg in enumerate(segments):
        if isinstance(seg, EvidenceItem) and normalize_name(seg.object_name) == key:
            last = i
    return last


def inject_motion_tags(trace_text: str, descriptors: dict[str, MotionDescriptor]) -> str:
    """Insert one canonical motion tag per object after its final evidence item.

    Objects without a grounded mention are left untouched. Re-running on
    already-injected output replaces the previous tag in that slot instead
    of duplicating it.
    """
    trace = parse_trace(trace_text)
    segments = list(trace.think_segments)
    by_key = {normalize_name(name): desc for name, desc in descriptors.items()}

    # Deterministic order: objects by position of their final grounded mention.
    order = []
    for key in by_key:
        idx = _final_evidence_index(segments, key)
        if idx is not None:
            order.append((idx, key))
    for _, key in sorted(order):
        idx = _final_evidence_index(segments, key)  # recompute: earlier inserts shift
        desc = by_key[key]
        anchor = segments[idx]
        tag = MotionTag(anchor.object_name, desc.direction, desc.speed, desc.scale)
        nxt = segments[idx + 1] if idx + 1 < len(segments) else None
        if isinstance(nxt, MotionTag) and normalize_name(nxt.object_name) == key:
            segments[idx + 1] = tag
        else:
            segments.insert(idx + 1, tag)
    return serialize_trace(Trace(tuple(segments), trace.answer))


def augment_record(record: AnnotationRecord,
                   dcfg: DensifyConfig = DensifyConfig(),
                   mcfg: MotionConfig = MotionConfig()) -> AnnotationRecord:
    """Densified keyframes + descriptors + tagged trace, in one pass.

    Per-object problems are logged and skipped; this function never raises
    on content (only on genuinely broken inputs like unreadable records).
    """
    new_objects: list[ObjectKeyframes] = []
    descriptors: dict[str, MotionDescriptor] = {}
    for obj in record.objects:
        if len(obj.keyframes) < 2:
            logger.debug("not densifying %r: fewer than 2 keyframes", obj.name)
            new_objects.append(obj)
            continue
        dense = densify_track(Track(obj.name, obj.keyframes), dcfg)
        new_objects.append(ObjectKeyframes(obj.name, dense.samples))
        try:
            descriptors[obj.name] = motion_descriptor(dense, mcfg)
        except MotionComputeError as exc:
            logger.warning("no descriptor for %r: %s", obj.name, exc)

    think_trace = record.think_trace
    if think_trace is not None and descriptors:
        try:
            think_trace = inject_motion_tags(think_trace, descriptors)
        except Exception as exc:  # malformed source traces are kept as-is
            logger.warning("could not inject tags for %s: %s", record.video_id, exc)
            think_trace = record.think_trace

    gt_descriptors = (
        {name: (desc,) for name, desc in descriptors.items()}
        if descriptors else record.gt_descriptors
    )
    return replace(
        record,
        objects=tuple(new_objects),
        gt_descriptors=gt_descriptors,
        think_trace=think_trace,
    )
