"""Reward stack for scoring predicted traces against ground-truth records.

Six atomic components, each in [0,1]:

* r_fmt    — 1.0 iff the prediction passes strict format validation
* r_acc    — answer accuracy: exact match for MCQ, ROUGE-L F1 for free-form
* r_t      — temporal proximity of predicted evidence to GT keyframes
* r_s      — box IoU at GT keyframes, gated on temporal proximity
* r_traj   — motion-tag agreement with GT descriptors (adjacency-aware)
* r_ground — dual-chain check: tags must change when motion cues are masked

The composite total is their plain sum (range [0,6]). Scoring is a total
function: malformed predictions degrade to zeros, never raise.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .motion import MotionConfig, MotionDescriptor, MotionComputeError, Track, motion_descriptor
from .trace import (
    Box,
    Direction,
    MotionTag,
    ParseError,
    Scale,
    Speed,
    COMPASS_RING,
    SCALE_ORDER,
    SPEED_ORDER,
    FormatReport,
    extract_motion_tags,
    extract_tracks,
    normalize_name,
    parse_trace,
    scan_motion_tags,
    validate_format,
)


class VocabularyMismatchError(ValueError):
    """A bin value does not belong to the requested vocabulary."""


@dataclass(frozen=True)
class ObjectKeyframes:
    """Ground-truth keyframes for one object, strictly time-ordered."""

    name: str
    keyframes: tuple[tuple[float, Box], ...] = ()

    def __post_init__(self):
        if not self.name.strip():
            raise ValueError("object name must be nonempty")
        object.__setattr__(
            self, "keyframes", tuple((float(t), b) for t, b in self.keyframes)
        )
        prev = None
        for t, _ in self.keyframes:
            if prev is not None and t <= prev:
                raise ValueError(f"keyframes must be strictly time-ordered: {prev} -> {t}")
            prev = t


@dataclass(frozen=True)
class GroundTruthRecord:
    """One scoring target: question, reference answer and per-object keyframes."""

    video_id: str
    duration: float
    question: str
    answer_kind: str  # "mcq" | "freeform"
    gt_answer: str
    objects: tuple[ObjectKeyframes, ...] = ()
    gt_descriptors: Mapping[str, tuple[MotionDescriptor, ...]] | None = None

    def __post_init__(self):
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ValueError(f"duration must be positive and finite: {self.duration}")
        if self.answer_kind not in ("mcq", "freeform"):
            raise ValueError(f"answer_kind must be 'mcq' or 'freeform': {self.answer_kind!r}")
        object.__setattr__(self, "objects", tuple(self.objects))


@dataclass(frozen=True)
class RewardConfig:
    temporal_sigma_floor: float = 1.0
    temporal_sigma_fraction: float = 0.1
    spatial_gate: float = 1.0
    motion: MotionConfig = field(default_factory=MotionConfig)

    def __post_init__(self):
        for name in ("temporal_sigma_floor", "temporal_sigma_fraction", "spatial_gate"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class RewardBreakdown:
    r_fmt: float
    r_acc: float
    r_t: float
    r_s: float
    r_traj: float
    r_ground: float

    @property
    def r_motion(self) -> float:
        return self.r_traj + self.r_ground

    @property
    def r_thk(self) -> float:
        return self.r_t + self.r_s + self.r_motion

    @property
    def total(self) -> float:
        # Flat left-to-right sum so the six-component identity is bit-exact.
        return self.r_acc + self.r_t + self.r_s + self.r_traj + self.r_ground + self.r_fmt

    def as_dict(self) -> dict[str, float]:
        return {
            "r_fmt": self.r_fmt,
            "r_acc": self.r_acc,
            "r_t": self.r_t,
            "r_s": self.r_s,
            "r_traj": self.r_traj,
            "r_ground": self.r_ground,
            "r_motion": self.r_motion,
            "r_thk": self.r_thk,
            "total": self.total,
        }


ZERO_BREAKDOWN = RewardBreakdown(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


def reward_format(source: str) -> float:
    return 1.0 if validate_format(source).valid else 0.0


_TOKEN_RE = re.compile(r"[a-z0-9]+")
_MCQ_STRIP = " \t\r\n.()[]{}:;,'\""


def _tokens(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.casefold())


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l_f1(pred: str, ref: str) -> float:
    """LCS-based F1 over lowercase alphanumeric tokens."""
    pt = _tokens(pred)
    rt = _tokens(ref)
    if not pt or not rt:
        return 0.0
    lcs = _lcs_length(pt, rt)
    if lcs == 0:
        return 0.0
    precision = lcs / len(pt)
    recall = lcs / len(rt)
    return 2.0 * precision * recall / (precision + recall)


def reward_accuracy(pred_answer: str, record: GroundTruthRecord) -> float:
    if record.answer_kind == "mcq":
        norm = lambda s: s.strip(_MCQ_STRIP).casefold()  # noqa: E731
        return 1.0 if norm(pred_answer) == norm(record.gt_answer) else 0.0
    return rouge_l_f1(pred_answer, record.gt_answer)


PredTracks = Mapping[str, Sequence[tuple[float, Box]]]
TagMap = Mapping[str, Sequence[MotionTag]]


def reward_temporal(pred_tracks: PredTracks, record: GroundTruthRecord,
                    cfg: RewardConfig = RewardConfig()) -> float:
    """Mean over GT keyframes of max(0, 1 - |dt|/sigma) to the nearest
    same-object predicted timestamp; sigma adapts to video duration."""
    sigma = max(cfg.temporal_sigma_floor, cfg.temporal_sigma_fraction * record.duration)
    scores: list[float] = []
    for obj in record.objects:
        pred = pred_tracks.get(normalize_name(obj.name))
        for t_g, _ in obj.keyframes:
            if not pred:
                scores.append(0.0)
                continue
            delta = min(abs(t_g - t_p) for t_p, _ in pred)
            scores.append(max(0.0, 1.0 - delta / sigma))
    return sum(scores) / len(scores) if scores else 0.0


def iou(a: Box, b: Box) -> float:
    ix1 = max(a.x1, b.x1)
    iy1 = max(a.y1, b.y1)
    ix2 = min(a.x2, b.x2)
    iy2 = min(a.y2, b.y2)
    if ix2 <= ix1 or iy2 <= iy1:
        return 0.0
    inter = (ix2 - ix1) * (iy2 - iy1)
    union = (a.x2 - a.x1) * (a.y2 - a.y1) + (b.x2 - b.x1) * (b.y2 - b.y1) - inter
    return inter / union


def reward_spatial(pred_tracks: PredTracks, record: GroundTruthRecord,
                   cfg: RewardConfig = RewardConfig()) -> float:
    """Mean over GT keyframes of IoU with the temporally nearest predicted box,
    zero unless that box lies within the temporal gate. Nearest-timestamp ties
    prefer the earlier prediction."""
    scores: list[float] = []
    for obj in record.objects:
        pred = pred_tracks.get(normalize_name(obj.name))
        for t_g, b_g in obj.keyframes:
            if not pred:
                scores.append(0.0)
                continue
            t_p, b_p = min(pred, key=lambda s: (abs(s[0] - t_g), s[0]))
            if abs(t_p - t_g) <= cfg.spatial_gate:
                scores.append(iou(b_p, b_g))
            else:
                scores.append(0.0)
    return sum(scores) / len(scores) if scores else 0.0


def _coerce(enum_cls, value):
    try:
        return enum_cls(value)
    except ValueError:
        raise VocabularyMismatchError(
            f"{value!r} is not a valid {enum_cls.__name__} bin"
        ) from None


def bin_match_score(pred, gt, kind: str) -> float:
    """1.0 exact, 0.5 adjacent, 0.0 otherwise.

    Direction adjacency is one step on the 8-point compass ring (STAT is
    adjacent to nothing); speed/scale adjacency is one ordinal rank.
    """
    return _match_half_steps(pred, gt, kind) / 2.0


def _match_half_steps(pred, gt, kind: str) -> int:
    """bin_match_score doubled (0, 1 or 2) for exact integer arithmetic."""
    if kind == "direction":
        p = _coerce(Direction, pred)
        g = _coerce(Direction, gt)
        if p is g:
            return 2
        if p is Direction.STAT or g is Direction.STAT:
            return 0
        d = abs(COMPASS_RING.index(p) - COMPASS_RING.index(g))
        return 1 if min(d, 8 - d) == 1 else 0
    if kind == "speed":
        p = _coerce(Speed, pred)
        g = _coerce(Speed, gt)
        d = abs(SPEED_ORDER.index(p) - SPEED_ORDER.index(g))
    elif kind == "scale":
        p = _coerce(Scale, pred)
        g = _coerce(Scale, gt)
        d = abs(SCALE_ORDER.index(p) - SCALE_ORDER.index(g))
    else:
        raise VocabularyMismatchError(f"unknown bin kind {kind!r}")
    if d == 0:
        return 2
    return 1 if d == 1 else 0


def _pair_trajectory_score(tag: MotionTag, desc: MotionDescriptor) -> float:
    # 0.4*dir + 0.3*speed + 0.3*scale, in twentieths so 0.85/0.65 are exact.
    num = (4 * _match_half_steps(tag.direction, desc.direction, "direction")
           + 3 * _match_half_steps(tag.speed, desc.speed, "speed")
           + 3 * _match_half_steps(tag.scale, desc.scale, "scale"))
    return num / 20.0


def gt_descriptor_lists(record: GroundTruthRecord,
                        cfg: RewardConfig = RewardConfig()
                        ) -> dict[str, list[MotionDescriptor]]:
    """Ground-truth descriptors per normalized object name.

    Provided descriptors win; otherwise they are computed from objects with
    at least two keyframes. Objects whose dynamics cannot be summarized
    (zero net displacement while moving) are skipped.
    """
    out: dict[str, list[MotionDescriptor]] = {}
    if record.gt_descriptors is not None:
        for name, descs in record.gt_descriptors.items():
            if descs:
                out[normalize_name(name)] = list(descs)
        return out
    for obj in record.objects:
        if len(obj.keyframes) < 2:
            continue
        try:
            desc = motion_descriptor(Track(obj.name, obj.keyframes), cfg.motion)
        except MotionComputeError:
            continue
        out[normalize_name(obj.name)] = [desc]
    return out


def trajectory_scores(pred_tags: TagMap, record: GroundTruthRecord,
                      cfg: RewardConfig = RewardConfig()
                      ) -> tuple[float, dict[str, float]]:
    """Per-object and mean trajectory agreement.

    Tags pair with descriptors in order of appearance; unpaired slots on
    either side score zero, and the per-object mean divides by the larger
    of the two counts.
    """
    gt_lists = gt_descriptor_lists(record, cfg)
    if not gt_lists:
        return 0.0, {}
    per_object: dict[str, float] = {}
    for name, descs in gt_lists.items():
        preds = list(pred_tags.get(name, ()))
        paired = sum(_pair_trajectory_score(p, g) for p, g in zip(preds, descs))
        per_object[name] = paired / max(len(preds), len(descs))
    overall = sum(per_object.values()) / len(per_object)
    return overall, per_object


def reward_trajectory(pred_tags: TagMap, record: GroundTruthRecord,
                      cfg: RewardConfig = RewardConfig()) -> float:
    return trajectory_scores(pred_tags, record, cfg)[0]


def _pair_grounding_score(original: MotionTag, masked: MotionTag) -> float:
    # 0.5/0.3/0.2 credits in tenths so the all-differ case is exactly 1.0.
    num = (5 * (original.direction is not masked.direction)
           + 3 * (original.speed is not masked.speed)
           + 2 * (original.scale is not masked.scale))
    return num / 10.0


def grounding_scores(tags_original: TagMap, tags_masked: TagMap
                     ) -> tuple[float, dict[str, float]]:
    """Dual-chain grounding: credit for tags that change under motion masking.

    Tags pair by object and ordinal slot; a slot absent from the masked
    chain counts as fully grounded (1.0).
    """
    per_object: dict[str, float] = {}
    for name, originals in tags_original.items():
        if not originals:
            continue
        masked = tags_masked.get(name, ())
        scores = []
        for i, tag in enumerate(originals):
            if i < len(masked):
                scores.append(_pair_grounding_score(tag, masked[i]))
            else:
                scores.append(1.0)
        per_object[name] = sum(scores) / len(scores)
    if not per_object:
        return 0.0, {}
    return sum(per_object.values()) / len(per_object), per_object


def reward_grounding(tags_original: TagMap, tags_masked: TagMap) -> float:
    return grounding_scores(tags_original, tags_masked)[0]


_ANSWER_TAIL_RE = re.compile(r"<answer>(.*?)(?:</answer>|\Z)", re.DOTALL)


def _answer_from_tail(text: str) -> str | None:
    matches = _ANSWER_TAIL_RE.findall(text)
    return matches[-1] if matches else None


def _tags_from_text(text: str) -> TagMap:
    try:
        return extract_motion_tags(parse_trace(text))
    except ParseError:
        return scan_motion_tags(text)


def score_detailed(prediction: str, record: GroundTruthRecord,
                   masked_prediction: str | None = None,
                   cfg: RewardConfig = RewardConfig()
                   ) -> tuple[RewardBreakdown, dict[str, dict[str, float | None]], FormatReport]:
    """Breakdown plus per-object {traj, ground} diagnostics and the lint report.

    Total by construction: an unparseable prediction zeroes every evidence
    component and salvages r_acc from the raw text tail when an answer block
    is recoverable.
    """
    report = validate_format(prediction)
    r_fmt = 1.0 if report.valid else 0.0
    try:
        trace = parse_trace(prediction)
    except (ParseError, TypeError):
        trace = None

    if trace is None:
        tail = _answer_from_tail(prediction) if isinstance(prediction, str) else None
        r_acc = reward_accuracy(tail, record) if tail is not None else 0.0
        return (RewardBreakdown(r_fmt=0.0, r_acc=r_acc, r_t=0.0, r_s=0.0,
                                r_traj=0.0, r_ground=0.0), {}, report)

    tracks = extract_tracks(trace)
    tags = extract_motion_tags(trace)
    r_acc = reward_accuracy(trace.answer, record)
    r_t = reward_temporal(tracks, record, cfg)
    r_s = reward_spatial(tracks, record, cfg)
    r_traj, per_traj = trajectory_scores(tags, record, cfg)
    if masked_prediction is None:
        r_ground, per_ground = 0.0, {}
    else:
        r_ground, per_ground = grounding_scores(tags, _tags_from_text(masked_prediction))

    per_object: dict[str, dict[str, float | None]] = {}
    for name in sorted(set(per_traj) | set(per_ground)):
        per_object[name] = {"traj": per_traj.get(name), "ground": per_ground.get(name)}
    breakdown = RewardBreakdown(r_fmt=r_fmt, r_acc=r_acc, r_t=r_t, r_s=r_s,
                                r_traj=r_traj, r_ground=r_ground)
    return breakdown, per_object, report


def score(prediction: str, record: GroundTruthRecord,
          masked_prediction: str | None = None,
          cfg: RewardConfig = RewardConfig()) -> RewardBreakdown:
    """Composite reward; pure and infallible (defects degrade to zeros)."""
    return score_detailed(prediction, record, masked_prediction, cfg)[0]
