"""Grammar for motion-grounded reasoning traces.

A trace is exactly one ``<think>...</think><answer>...</answer>`` pair.
Inside the think block two structured constructs are recognized:

* evidence items: ``<obj>duck</obj><box>[0.1,0.2,0.3,0.6]</box> at <t>4.5</t>s``
* motion tags:    ``<motion obj="duck" dir="E" speed="moderate" scale="stable"/>``

Everything between constructs is free text and survives re-serialization
verbatim. Parsing is strict and never repairs input; ``validate_format``
reports every violation instead of raising. Numbers are emitted with at
most three decimal places, so canonical traces round-trip exactly.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum


class Direction(str, Enum):
    N = "N"
    NE = "NE"
    E = "E"
    SE = "SE"
    S = "S"
    SW = "SW"
    W = "W"
    NW = "NW"
    STAT = "STAT"


class Speed(str, Enum):
    STATIONARY = "stationary"
    SLOW = "slow"
    MODERATE = "moderate"
    FAST = "fast"


class Scale(str, Enum):
    APPROACHING = "approaching"
    STABLE = "stable"
    RECEDING = "receding"


#: Compass ring in geographic order; neighbors on this cycle are "adjacent".
COMPASS_RING = (
    Direction.N,
    Direction.NE,
    Direction.E,
    Direction.SE,
    Direction.S,
    Direction.SW,
    Direction.W,
    Direction.NW,
)

#: Ordinal speed ranks, slowest first.
SPEED_ORDER = (Speed.STATIONARY, Speed.SLOW, Speed.MODERATE, Speed.FAST)

#: Ordinal scale ranks (approaching < stable < receding).
SCALE_ORDER = (Scale.APPROACHING, Scale.STABLE, Scale.RECEDING)


class ParseError(ValueError):
    """Raised when source text is not a well-formed trace."""

    def __init__(self, rule_id: str, span: tuple[int, int], message: str):
        super().__init__(f"{message} [rule {rule_id}, chars {span[0]}..{span[1]}]")
        self.rule_id = rule_id
        self.span = span


_WS_RUN = re.compile(r"\s+")


def canonical_name(raw: str) -> str:
    """Strip outer whitespace and collapse internal runs to single spaces."""
    return _WS_RUN.sub(" ", raw.strip())


def normalize_name(raw: str) -> str:
    """Canonical name, case-insensitive. Used as the grouping key everywhere."""
    return canonical_name(raw).casefold()


def _check_name(name: str, what: str) -> None:
    if not name:
        raise ValueError(f"{what} must be nonempty after whitespace normalization")
    if any(ch in name for ch in '<>"'):
        raise ValueError(f"{what} must not contain '<', '>' or double quotes: {name!r}")


@dataclass(frozen=True)
class Box:
    """Normalized axis-aligned rectangle; x grows rightward, y grows downward."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"box coordinates must be finite: {coords}")
        if not (0.0 <= self.x1 < self.x2 <= 1.0 and 0.0 <= self.y1 < self.y2 <= 1.0):
            raise ValueError(
                f"box must satisfy 0 <= x1 < x2 <= 1 and 0 <= y1 < y2 <= 1: {coords}"
            )

    def as_list(self) -> list[float]:
        return [self.x1, self.y1, self.x2, self.y2]


@dataclass(frozen=True)
class FreeText:
    """Verbatim prose between structured constructs."""

    text: str

    def __post_init__(self):
        if not self.text:
            raise ValueError("free text segments must be nonempty")
        hit = _RESERVED_RE.search(self.text)
        if hit:
            raise ValueError(f"free text must not contain reserved token {hit.group(0)!r}")


@dataclass(frozen=True)
class EvidenceItem:
    """One grounded observation: object name, box and timestamp in seconds."""

    object_name: str
    box: Box
    timestamp: float

    def __post_init__(self):
        _check_name(self.object_name, "object name")
        if self.object_name != canonical_name(self.object_name):
            raise ValueError(f"object name is not in canonical form: {self.object_name!r}")
        if not math.isfinite(self.timestamp) or self.timestamp < 0:
            raise ValueError(f"timestamp must be finite and >= 0: {self.timestamp}")


@dataclass(frozen=True)
class MotionTag:
    """Discrete motion summary for one object.

    The direction=STAT <=> speed=stationary coupling is deliberately NOT
    enforced here: it is a validation-level rule (``stat-coupling``), and
    model outputs that break it must still be parseable and scoreable.
    """

    object_name: str
    direction: Direction
    speed: Speed
    scale: Scale

    def __post_init__(self):
        _check_name(self.object_name, "object name")
        if self.object_name != canonical_name(self.object_name):
            raise ValueError(f"object name is not in canonical form: {self.object_name!r}")
        object.__setattr__(self, "direction", Direction(self.direction))
        object.__setattr__(self, "speed", Speed(self.speed))
        object.__setattr__(self, "scale", Scale(self.scale))


Segment = FreeText | EvidenceItem | MotionTag


@dataclass(frozen=True)
class Trace:
    """Parsed trace: ordered think segments plus the final answer text."""

    think_segments: tuple[Segment, ...]
    answer: str

    def __post_init__(self):
        for seg in self.think_segments:
            if not isinstance(seg, (FreeText, EvidenceItem, MotionTag)):
                raise TypeError(f"unsupported segment type: {type(seg).__name__}")
        hit = _RESERVED_RE.search(self.answer)
        if hit:
            raise ValueError(f"answer must not contain reserved token {hit.group(0)!r}")


@dataclass(frozen=True)
class Violation:
    rule_id: str
    span: tuple[int, int]
    message: str


@dataclass(frozen=True)
class FormatReport:
    valid: bool
    violations: tuple[Violation, ...]


# Surface syntax. Alternation order matters: longer tokens first so that
# e.g. "<think>" is never consumed as "<t...".
_RESERVED_TOKENS = (
    "<think>",
    "</think>",
    "<answer>",
    "</answer>",
    "<obj>",
    "</obj>",
    "<box>",
    "</box>",
    "<motion",
    "<t>",
    "</t>",
)
_RESERVED_RE = re.compile("|".join(re.escape(t) for t in _RESERVED_TOKENS))

_EVIDENCE_RE = re.compile(
    r"<obj>(?P<name>[^<>]*)</obj>\s*"
    r"<box>\s*\[(?P<nums>[^\]<>]*)\]\s*</box>\s*"
    r"at\s*<t>(?P<t>[^<>]*)</t>\s*s"
)
_MOTION_RE = re.compile(r"<motion(?P<attrs>\s[^<>]*?|)/>")
_ATTR_RE = re.compile(r'\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*"([^"<>]*)"')
_NUM_RE = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")

_MOTION_ATTRS = ("obj", "dir", "speed", "scale")


def _parse_number(text: str) -> float | None:
    s = text.strip()
    if not _NUM_RE.fullmatch(s):
        return None
    return float(s) + 0.0  # +0.0 folds -0.0 into 0.0


def format_number(x: float) -> str:
    """Canonical number form: at most 3 decimal places, no trailing zeros."""
    s = f"{x:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("", "-0") else s


class _Sink:
    """Routes grammar failures: strict mode raises, lenient mode collects.

    ``fail`` is a hard rule (parse error and violation); ``lint`` is a
    validation-only rule. Once a lenient scan has failed, segment building
    is abandoned (``dirty``) — only the violation list matters then.
    """

    __slots__ = ("strict", "issues", "dirty")

    def __init__(self, strict: bool):
        self.strict = strict
        self.issues: list[Violation] = []
        self.dirty = False

    def fail(self, rule_id: str, start: int, end: int, message: str) -> None:
        if self.strict:
            raise ParseError(rule_id, (start, end), message)
        self.dirty = True
        self.issues.append(Violation(rule_id, (start, end), message))

    def lint(self, rule_id: str, start: int, end: int, message: str) -> None:
        if not self.strict:
            self.issues.append(Violation(rule_id, (start, end), message))


def _build_evidence(m: re.Match, sink: _Sink) -> EvidenceItem | None:
    ok = True
    name = canonical_name(m.group("name"))
    if not name:
        sink.fail("empty-object-name", m.start("name"), m.end("name") + 1,
                  "object name is empty after whitespace normalization")
        ok = False
    elif '"' in name:
        sink.fail("bad-object-name", m.start("name"), m.end("name"),
                  "object name must not contain double quotes")
        ok = False

    coords: list[float] = []
    pieces = m.group("nums").split(",")
    if len(pieces) != 4:
        sink.fail("malformed-box", m.start("nums"), m.end("nums") + 1,
                  f"box needs exactly 4 comma-separated numbers, got {len(pieces)}")
        ok = False
    else:
        for piece in pieces:
            v = _parse_number(piece)
            if v is None:
                sink.fail("malformed-box", m.start("nums"), m.end("nums"),
                          f"box coordinate is not a number: {piece.strip()!r}")
                ok = False
                break
            coords.append(v)
    if ok and len(coords) == 4:
        x1, y1, x2, y2 = coords
        if not all(0.0 <= c <= 1.0 for c in coords):
            sink.fail("box-out-of-range", m.start("nums"), m.end("nums"),
                      f"box coordinates must lie in [0,1]: {coords}")
            ok = False
        elif x1 >= x2 or y1 >= y2:
            sink.fail("degenerate-box", m.start("nums"), m.end("nums"),
                      f"box must have positive width and height: {coords}")
            ok = False

    t = _parse_number(m.group("t"))
    if t is None or not math.isfinite(t):
        sink.fail("bad-timestamp", m.start("t"), m.end("t") + 1,
                  f"timestamp is not a finite number: {m.group('t').strip()!r}")
        ok = False
    elif t < 0:
        sink.fail("bad-timestamp", m.start("t"), m.end("t"),
                  f"timestamp must be >= 0: {t}")
        ok = False

    if not ok:
        return None
    return EvidenceItem(name, Box(*coords), t)


def _build_motion(m: re.Match, sink: _Sink) -> MotionTag | None:
    attrs_text = m.group("attrs") or ""
    base = m.start("attrs") if attrs_text else m.start()
    ok = True
    found: dict[str, str] = {}
    pos = 0
    while pos < len(attrs_text):
        am = _ATTR_RE.match(attrs_text, pos)
        if am is None:
            if attrs_text[pos:].strip() == "":
                break
            sink.fail("malformed-motion", base + pos, m.end(),
                      'motion attributes must be key="value" pairs with double quotes')
            return None
        key, value = am.group(1), am.group(2)
        if key not in _MOTION_ATTRS:
            sink.fail("unknown-motion-attr", base + am.start(1), base + am.end(1),
                      f"unknown motion attribute {key!r}")
            ok = False
        elif key in found:
            sink.fail("duplicate-motion-attr", base + am.start(1), base + am.end(1),
                      f"duplicate motion attribute {key!r}")
            ok = False
        else:
            found[key] = value
        pos = am.end()

    for key in _MOTION_ATTRS:
        if key not in found:
            sink.fail("missing-motion-attr", m.start(), m.end(),
                      f"motion tag is missing attribute {key!r}")
            ok = False
    if not ok:
        return None

    name = canonical_name(found["obj"])
    if not name:
        sink.fail("empty-object-name", m.start(), m.end(),
                  "motion obj is empty after whitespace normalization")
        ok = False
    if found["dir"] not in Direction._value2member_map_:
        sink.fail("bad-direction-vocab", m.start(), m.end(),
                  f"dir={found['dir']!r} is not one of N,NE,E,SE,S,SW,W,NW,STAT")
        ok = False
    if found["speed"] not in Speed._value2member_map_:
        sink.fail("bad-speed-vocab", m.start(), m.end(),
                  f"speed={found['speed']!r} is not one of stationary,slow,moderate,fast")
        ok = False
    if found["scale"] not in Scale._value2member_map_:
        sink.fail("bad-scale-vocab", m.start(), m.end(),
                  f"scale={found['scale']!r} is not one of approaching,stable,receding")
        ok = False
    if not ok:
        return None

    direction = Direction(found["dir"])
    speed = Speed(found["speed"])
    if (direction is Direction.STAT) != (speed is Speed.STATIONARY):
        sink.lint("stat-coupling", m.start(), m.end(),
                  "dir=STAT must pair with speed=stationary (and vice versa)")
    return MotionTag(name, direction, speed, Scale(found["scale"]))


def _scan_think(source: str, start: int, end: int, sink: _Sink) -> list[Segment]:
    segments: list[Segment] = []
    text_from = start

    def flush(upto: int) -> None:
        if upto > text_from and not sink.dirty:
            segments.append(FreeText(source[text_from:upto]))

    i = start
    while i < end:
        m = _RESERVED_RE.search(source, i, end)
        if m is None:
            break
        tok = m.group(0)
        s = m.start()
        if tok == "<obj>":
            em = _EVIDENCE_RE.match(source, s, end)
            if em is None:
                sink.fail("incomplete-evidence", s, s + len(tok),
                          "expected '<obj>name</obj><box>[x1,y1,x2,y2]</box> at <t>T</t>s'")
                i = s + len(tok)
                continue
            flush(s)
            item = _build_evidence(em, sink)
            if item is not None and not sink.dirty:
                segments.append(item)
            i = em.end()
            text_from = i
        elif tok == "<motion":
            mm = _MOTION_RE.match(source, s, end)
            if mm is None:
                sink.fail("malformed-motion", s, s + len(tok),
                          "motion tag is not a well-formed self-closing tag")
                i = s + len(tok)
                continue
            flush(s)
            tag = _build_motion(mm, sink)
            if tag is not None and not sink.dirty:
                segments.append(tag)
            i = mm.end()
            text_from = i
        elif tok == "<think>":
            sink.fail("nested-think", s, s + len(tok), "nested <think> block")
            i = s + len(tok)
        else:
            sink.fail("orphan-tag", s, s + len(tok),
                      f"{tok!r} appears outside its construct")
            i = s + len(tok)
    flush(end)
    return segments


def _skip_ws(source: str, i: int) -> int:
    n = len(source)
    while i < n and source[i].isspace():
        i += 1
    return i


def _scan_source(source: str, sink: _Sink) -> tuple[list[Segment], str] | None:
    n = len(source)
    i = _skip_ws(source, 0)
    if not source.startswith("<think>", i):
        ti = source.find("<think>")
        ai = source.find("<answer>")
        if 0 <= ai and 0 <= ti and ai < ti:
            sink.fail("misordered-blocks", ai, ai + len("<answer>"),
                      "<answer> block appears before <think>")
        else:
            sink.fail("unbalanced-think", i, min(i + 7, n),
                      "trace must begin with a <think> block")
        return None
    body_start = i + len("<think>")
    close = source.find("</think>", body_start)
    if close < 0:
        sink.fail("unbalanced-think", i, n, "missing </think>")
        return None

    segments = _scan_think(source, body_start, close, sink)

    j = _skip_ws(source, close + len("</think>"))
    if not source.startswith("<answer>", j):
        nxt = source.find("<answer>", close)
        if nxt < 0:
            sink.fail("unbalanced-answer", j, min(j + 8, n), "missing <answer> block")
            return None
        sink.fail("stray-text", j, nxt, "unexpected text between </think> and <answer>")
        j = nxt
    a_start = j + len("<answer>")
    a_close = source.find("</answer>", a_start)
    if a_close < 0:
        sink.fail("unbalanced-answer", j, n, "missing </answer>")
        return None
    answer = source[a_start:a_close]
    rm = _RESERVED_RE.search(answer)
    if rm:
        sink.fail("orphan-tag", a_start + rm.start(), a_start + rm.end(),
                  f"{rm.group(0)!r} inside the answer block")
    k = _skip_ws(source, a_close + len("</answer>"))
    if k < n:
        sink.fail("stray-text", k, n, "unexpected text after </answer>")
    if sink.dirty:
        return None
    return segments, answer


def parse_trace(source: str) -> Trace:
    """Parse model output into a Trace, raising ParseError on the first defect.

    Whitespace inside evidence triples is tolerated and motion attributes may
    come in any order; re-serialization produces the canonical surface form.
    """
    if not isinstance(source, str):
        raise TypeError(f"source must be str, got {type(source).__name__}")
    sink = _Sink(strict=True)
    parsed = _scan_source(source, sink)
    assert parsed is not None  # strict sink raised on any failure path
    segments, answer = parsed
    return Trace(tuple(segments), answer)


def validate_format(source: str) -> FormatReport:
    """Lint source against the full grammar; reports instead of raising."""
    if not isinstance(source, str):
        return FormatReport(False, (Violation("not-text", (0, 0), "input is not text"),))
    sink = _Sink(strict=False)
    _scan_source(source, sink)
    violations = tuple(sink.issues)
    return FormatReport(valid=not violations, violations=violations)


def serialize_trace(trace: Trace) -> str:
    """Emit the canonical surface form; inverse of parse_trace on its output."""
    parts = ["<think>"]
    for seg in trace.think_segments:
        if isinstance(seg, FreeText):
            parts.append(seg.text)
        elif isinstance(seg, EvidenceItem):
            b = seg.box
            parts.append(
                f"<obj>{seg.object_name}</obj>"
                f"<box>[{format_number(b.x1)},{format_number(b.y1)},"
                f"{format_number(b.x2)},{format_number(b.y2)}]</box>"
                f" at <t>{format_number(seg.timestamp)}</t>s"
            )
        else:
            parts.append(
                f'<motion obj="{seg.object_name}" dir="{seg.direction.value}"'
                f' speed="{seg.speed.value}" scale="{seg.scale.value}"/>'
            )
    parts.append("</think><answer>")
    parts.append(trace.answer)
    parts.append("</answer>")
    return "".join(parts)


def extract_tracks(trace: Trace) -> dict[str, list[tuple[float, Box]]]:
    """Group evidence items into per-object tracks.

    Keys are normalized names (case-insensitive, whitespace-collapsed);
    samples are sorted by timestamp and a duplicate timestamp keeps the
    later occurrence in the trace.
    """
    per: dict[str, dict[float, Box]] = {}
    for seg in trace.think_segments:
        if isinstance(seg, EvidenceItem):
            per.setdefault(normalize_name(seg.object_name), {})[seg.timestamp] = seg.box
    return {name: sorted(samples.items()) for name, samples in per.items()}


def extract_motion_tags(trace: Trace) -> dict[str, list[MotionTag]]:
    """Group motion tags by normalized object name, in order of appearance."""
    per: dict[str, list[MotionTag]] = {}
    for seg in trace.think_segments:
        if isinstance(seg, MotionTag):
            per.setdefault(normalize_name(seg.object_name), []).append(seg)
    return per


def scan_motion_tags(text: str) -> dict[str, list[MotionTag]]:
    """Best-effort salvage of well-formed motion tags from arbitrary text.

    Used for the motion-masked chain when it does not parse as a full trace;
    malformed tags are silently skipped.
    """
    per: dict[str, list[MotionTag]] = {}
    for mm in _MOTION_RE.finditer(text):
        sink = _Sink(strict=False)
        tag = _build_motion(mm, sink)
        if tag is not None:
            per.setdefault(normalize_name(tag.object_name), []).append(tag)
    return per
