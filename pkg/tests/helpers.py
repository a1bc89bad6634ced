"""Seeded random generators shared by the unit and acceptance suites.

All numeric trace content is drawn from a 0.001 grid so that canonical
serialization (three decimal places) round-trips exactly.
"""

from __future__ import annotations

import random

from motiontrace import (
    Box,
    Direction,
    EvidenceItem,
    FreeText,
    GroundTruthRecord,
    MotionDescriptor,
    MotionTag,
    ObjectKeyframes,
    Scale,
    Speed,
    SyntheticSpec,
    Trace,
    Track,
    generate_synthetic,
    serialize_trace,
)

WORDS = (
    "duck", "person", "red car", "ball", "dog", "waiter", "glass", "Sheldon",
    "baby", "bicycle", "kite", "the tall man", "white van", "skater", "drone",
)

FILLER = (
    "appears near the table", "keeps moving", "then later", "is visible",
    "holding a glass", "turns around", "slows down briefly", "and afterwards",
    "crosses the room", "stays in frame",
)

COMPASS = tuple(d for d in Direction if d is not Direction.STAT)
MOVING_SPEEDS = (Speed.SLOW, Speed.MODERATE, Speed.FAST)


def grid(rng: random.Random, lo_k: int, hi_k: int) -> float:
    return rng.randint(lo_k, hi_k) / 1000


def random_box(rng: random.Random, max_side_k: int = 400) -> Box:
    w = rng.randint(5, max_side_k)
    h = rng.randint(5, max_side_k)
    x1 = rng.randint(0, 1000 - w)
    y1 = rng.randint(0, 1000 - h)
    return Box(x1 / 1000, y1 / 1000, (x1 + w) / 1000, (y1 + h) / 1000)


def random_name(rng: random.Random) -> str:
    name = rng.choice(WORDS)
    if rng.random() < 0.3:
        name = name.capitalize()
    return name


def random_free_text(rng: random.Random) -> str:
    n = rng.randint(1, 3)
    text = " ".join(rng.choice(FILLER) for _ in range(n))
    pad_left = " " * rng.randint(0, 2)
    pad_right = " " * rng.randint(0, 2)
    out = f"{pad_left}{text}{pad_right}"
    return out if out.strip() or out else " "


def random_evidence(rng: random.Random, name: str | None = None) -> EvidenceItem:
    return EvidenceItem(
        object_name=name or random_name(rng),
        box=random_box(rng),
        timestamp=grid(rng, 0, 600_000),
    )


def random_motion_tag(rng: random.Random, name: str | None = None,
                      consistent: bool = True) -> MotionTag:
    stationary = rng.random() < 0.25
    if stationary:
        direction, speed = Direction.STAT, Speed.STATIONARY
    else:
        direction = rng.choice(COMPASS)
        speed = rng.choice(MOVING_SPEEDS)
    if not consistent and rng.random() < 0.5:
        direction, speed = Direction.STAT, rng.choice(MOVING_SPEEDS)
    return MotionTag(
        object_name=name or random_name(rng),
        direction=direction,
        speed=speed,
        scale=rng.choice(tuple(Scale)),
    )


def random_descriptor(rng: random.Random) -> MotionDescriptor:
    if rng.random() < 0.25:
        return MotionDescriptor(Direction.STAT, Speed.STATIONARY, rng.choice(tuple(Scale)))
    return MotionDescriptor(rng.choice(COMPASS), rng.choice(MOVING_SPEEDS),
                            rng.choice(tuple(Scale)))


def random_trace(rng: random.Random, max_segments: int = 8) -> Trace:
    segments = []
    last_was_text = False  # adjacent free-text merges on re-parse
    for _ in range(rng.randint(0, max_segments)):
        kind = rng.random()
        if kind < 0.4 and not last_was_text:
            segments.append(FreeText(random_free_text(rng)))
            last_was_text = True
        elif kind < 0.75:
            segments.append(random_evidence(rng))
            last_was_text = False
        else:
            segments.append(random_motion_tag(rng))
            last_was_text = False
    answer = rng.choice(("", "B", "left", "the duck moves east", "42"))
    return Trace(tuple(segments), answer)


def random_tag_map(rng: random.Random, max_objects: int = 4,
                   max_tags: int = 3) -> dict[str, list[MotionTag]]:
    names = rng.sample(WORDS, rng.randint(1, max_objects))
    return {
        name.casefold(): [
            random_motion_tag(rng, name=name.casefold())
            for _ in range(rng.randint(1, max_tags))
        ]
        for name in names
    }


def feasible_combos() -> list[tuple[Direction, Speed, Scale]]:
    combos = [(Direction.STAT, Speed.STATIONARY, sc) for sc in Scale]
    combos += [
        (d, sp, sc) for d in COMPASS for sp in MOVING_SPEEDS for sc in Scale
    ]
    return combos


def kinds_for(combo: tuple[Direction, Speed, Scale]) -> tuple[str, ...]:
    direction, speed, scale = combo
    if speed is Speed.STATIONARY:
        return ("stationary",)
    kinds = ["linear", "arc"]
    if scale is Scale.APPROACHING:
        kinds.append("approach")
    if scale is Scale.RECEDING:
        kinds.append("recede")
    return tuple(kinds)


def random_spec(rng: random.Random,
                combo: tuple[Direction, Speed, Scale] | None = None,
                margin: float = 0.1) -> SyntheticSpec:
    combo = combo or rng.choice(feasible_combos())
    return SyntheticSpec(
        motion_kind=rng.choice(kinds_for(combo)),
        target_direction=combo[0],
        target_speed=combo[1],
        target_scale=combo[2],
        sample_count=rng.randint(2, 8),
        margin=margin,
        seed=rng.randrange(2**32),
    )


def random_margin_track(rng: random.Random) -> tuple[Track, MotionDescriptor]:
    """Track whose measured speed/log-ratio sit >=10% away from every threshold."""
    return generate_synthetic(random_spec(rng))


def reversed_track(track: Track) -> Track:
    t0 = track.samples[0][0]
    t_end = track.samples[-1][0]
    samples = tuple(
        (t0 + (t_end - t), box) for t, box in reversed(track.samples)
    )
    return Track(track.object_name, samples)


def random_record(rng: random.Random, max_objects: int = 3,
                  with_descriptors: bool = False) -> GroundTruthRecord:
    names = rng.sample(WORDS, rng.randint(0, max_objects))
    objects = []
    duration = 30.0
    for name in names:
        track, _ = random_margin_track(rng)
        keyframes = track.samples[: rng.randint(2, len(track.samples))]
        objects.append(ObjectKeyframes(name, keyframes))
        duration = max(duration, keyframes[-1][0] + 5.0)
    descriptors = None
    if with_descriptors and objects:
        descriptors = {
            obj.name: tuple(random_descriptor(rng) for _ in range(rng.randint(1, 2)))
            for obj in objects
        }
    return GroundTruthRecord(
        video_id=f"vid-{rng.randrange(10**6)}",
        duration=duration,
        question="Which way does it move?",
        answer_kind=rng.choice(("mcq", "freeform")),
        gt_answer=rng.choice(("B", "east", "the duck moves east")),
        objects=tuple(objects),
        gt_descriptors=descriptors,
    )


def random_prediction(rng: random.Random, record: GroundTruthRecord) -> str:
    """Trace text that references the record's objects with noisy evidence."""
    segments = []
    for obj in record.objects:
        if rng.random() < 0.15:
            continue  # sometimes omit an object entirely
        for t, box in obj.keyframes:
            if rng.random() < 0.2:
                continue
            t_k = max(0, round(t * 1000) + rng.randint(-1500, 1500))
            segments.append(EvidenceItem(obj.name, random_box(rng)
                                         if rng.random() < 0.3 else box_on_grid(box),
                                         timestamp=t_k / 1000))
        if rng.random() < 0.8:
            segments.append(random_motion_tag(rng, name=obj.name.casefold()))
        if rng.random() < 0.5:
            segments.append(FreeText(random_free_text(rng)))
    answer = record.gt_answer if rng.random() < 0.5 else "something else"
    return serialize_trace(Trace(_no_adjacent_text(segments), answer))


def box_on_grid(box: Box) -> Box:
    vals = [round(v * 1000) / 1000 for v in box.as_list()]
    return Box(*vals)


def _no_adjacent_text(segments) -> tuple:
    out = []
    for seg in segments:
        if isinstance(seg, FreeText) and out and isinstance(out[-1], FreeText):
            continue
        out.append(seg)
    return tuple(out)
