"""Line-delimited record schema and streaming IO.

One JSON object per line:

    {"video_id": str, "duration": s, "question": str,
     "answer_kind": "mcq"|"freeform", "gt_answer": str,
     "objects": [{"name": str, "keyframes": [{"t": s, "box": [x1,y1,x2,y2]}]}],
     "descriptors": {name: [{"dir": .., "speed": .., "scale": ..}]},   # optional
     "think_trace": str}                                               # optional

Coordinates are normalized to [0,1]; timestamps are seconds. Schema errors
carry the offending field path and, when streaming, the 1-based line number.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass
from typing import Iterable, Iterator

from .motion import MotionDescriptor
from .rewards import GroundTruthRecord, ObjectKeyframes
from .trace import Box, Direction, Scale, Speed

logger = logging.getLogger(__name__)


class SchemaError(ValueError):
    """A JSON object does not match the record schema."""

    def __init__(self, field: str, message: str, line: int | None = None):
        where = f"line {line}: " if line is not None else ""
        target = f"{field}: " if field else ""
        super().__init__(f"{where}{target}{message}")
        self.field = field
        self.message = message
        self.line = line


@dataclass(frozen=True)
class AnnotationRecord(GroundTruthRecord):
    """Ground-truth record plus an optional reasoning trace to augment."""

    think_trace: str | None = None


def _want(obj, field, kind, path, required=True, default=None):
    if field not in obj:
        if required:
            raise SchemaError(_join(path, field), "missing required field")
        return default
    value = obj[field]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(_join(path, field), f"expected a number, got {type(value).__name__}")
        return float(value)
    if not isinstance(value, kind):
        raise SchemaError(_join(path, field), f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def _join(path: str, leaf: str) -> str:
    return f"{path}.{leaf}" if path else leaf


def _box_from_obj(raw, path: str) -> Box:
    if not isinstance(raw, list) or len(raw) != 4:
        raise SchemaError(path, "box must be a list of 4 numbers")
    vals = []
    for i, v in enumerate(raw):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(float(v)):
            raise SchemaError(f"{path}[{i}]", "box coordinate must be a finite number")
        vals.append(float(v))
    try:
        return Box(*vals)
    except ValueError as exc:
        raise SchemaError(path, str(exc)) from None


def keyframes_from_obj(raw, path: str) -> tuple[tuple[float, Box], ...]:
    if not isinstance(raw, list):
        raise SchemaError(path, "keyframes must be a list")
    out = []
    prev = None
    for i, kf in enumerate(raw):
        kf_path = f"{path}[{i}]"
        if not isinstance(kf, dict):
            raise SchemaError(kf_path, "keyframe must be an object")
        t = _want(kf, "t", float, kf_path)
        if not math.isfinite(t) or t < 0:
            raise SchemaError(_join(kf_path, "t"), f"timestamp must be finite and >= 0: {t}")
        if prev is not None and t <= prev:
            raise SchemaError(_join(kf_path, "t"),
                              f"timestamps must be strictly increasing: {prev} -> {t}")
        prev = t
        if "box" not in kf:
            raise SchemaError(_join(kf_path, "box"), "missing required field")
        out.append((t, _box_from_obj(kf["box"], _join(kf_path, "box"))))
    return tuple(out)


def _descriptor_from_obj(raw, path: str) -> MotionDescriptor:
    if not isinstance(raw, dict):
        raise SchemaError(path, "descriptor must be an object")
    d = _want(raw, "dir", str, path)
    s = _want(raw, "speed", str, path)
    c = _want(raw, "scale", str, path)
    try:
        return MotionDescriptor(Direction(d), Speed(s), Scale(c))
    except ValueError as exc:
        raise SchemaError(path, str(exc)) from None


def record_from_obj(obj, path: str = "") -> AnnotationRecord:
    """Validate one decoded JSON object into an AnnotationRecord."""
    if not isinstance(obj, dict):
        raise SchemaError(path, f"record must be an object, got {type(obj).__name__}")
    video_id = _want(obj, "video_id", str, path)
    duration = _want(obj, "duration", float, path)
    if not math.isfinite(duration) or duration <= 0:
        raise SchemaError(_join(path, "duration"), f"duration must be positive: {duration}")
    question = _want(obj, "question", str, path)
    answer_kind = _want(obj, "answer_kind", str, path)
    if answer_kind not in ("mcq", "freeform"):
        raise SchemaError(_join(path, "answer_kind"),
                          f"must be 'mcq' or 'freeform', got {answer_kind!r}")
    gt_answer = _want(obj, "gt_answer", str, path)

    objects_raw = _want(obj, "objects", list, path, required=False, default=[])
    objects = []
    for i, entry in enumerate(objects_raw):
        obj_path = f"{_join(path, 'objects')}[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError(obj_path, "object entry must be an object")
        name = _want(entry, "name", str, obj_path)
        if not name.strip():
            raise SchemaError(_join(obj_path, "name"), "object name must be nonempty")
        kfs = keyframes_from_obj(entry.get("keyframes", []), _join(obj_path, "keyframes"))
        objects.append(ObjectKeyframes(name, kfs))

    descriptors = None
    if obj.get("descriptors") is not None:
        raw = obj["descriptors"]
        if not isinstance(raw, dict):
            raise SchemaError(_join(path, "descriptors"), "descriptors must be an object")
        descriptors = {}
        for name, lst in raw.items():
            d_path = f"{_join(path, 'descriptors')}.{name}"
            if not isinstance(lst, list):
                raise SchemaError(d_path, "descriptor value must be a list")
            descriptors[name] = tuple(
                _descriptor_from_obj(d, f"{d_path}[{i}]") for i, d in enumerate(lst)
            )

    think_trace = obj.get("think_trace")
    if think_trace is not None and not isinstance(think_trace, str):
        raise SchemaError(_join(path, "think_trace"), "think_trace must be a string")

    return AnnotationRecord(
        video_id=video_id,
        duration=duration,
        question=question,
        answer_kind=answer_kind,
        gt_answer=gt_answer,
        objects=tuple(objects),
        gt_descriptors=descriptors,
        think_trace=think_trace,
    )


def record_to_obj(record: GroundTruthRecord) -> dict:
    """Inverse of record_from_obj; drops absent optional fields."""
    out = {
        "video_id": record.video_id,
        "duration": record.duration,
        "question": record.question,
        "answer_kind": record.answer_kind,
        "gt_answer": record.gt_answer,
        "objects": [
            {
                "name": obj.name,
                "keyframes": [{"t": t, "box": box.as_list()} for t, box in obj.keyframes],
            }
            for obj in record.objects
        ],
    }
    if record.gt_descriptors is not None:
        out["descriptors"] = {
            name: [
                {"dir": d.direction.value, "speed": d.speed.value, "scale": d.scale.value}
                for d in descs
            ]
            for name, descs in record.gt_descriptors.items()
        }
    think_trace = getattr(record, "think_trace", None)
    if think_trace is not None:
        out["think_trace"] = think_trace
    return out


def read_records(path: str | os.PathLike, permissive: bool = False
                 ) -> Iterator[AnnotationRecord]:
    """Stream records from a JSONL file.

    Malformed lines raise SchemaError with the line number, or are logged
    and skipped when permissive.
    """
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise SchemaError("", f"invalid JSON: {exc}", line=lineno) from None
                try:
                    yield record_from_obj(obj)
                except SchemaError as exc:
                    raise SchemaError(exc.field, exc.message, line=lineno) from None
            except SchemaError as exc:
                if not permissive:
                    raise
                logger.warning("skipping %s:%s (%s)", path, lineno, exc)


def write_records(path: str | os.PathLike, records: Iterable[GroundTruthRecord]) -> int:
    """Write records as JSONL; returns the number of lines written."""
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record_to_obj(record), ensure_ascii=False))
            handle.write("\n")
            count += 1
    return count
