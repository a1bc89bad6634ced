import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from motiontrace import (
    Box,
    Direction,
    EvidenceItem,
    FreeText,
    MotionTag,
    ParseError,
    Scale,
    Speed,
    Trace,
    extract_motion_tags,
    extract_tracks,
    parse_trace,
    serialize_trace,
    validate_format,
)
from motiontrace.trace import format_number, scan_motion_tags

from helpers import random_trace

GOOD = ("<think>The <obj>person</obj><box>[0.1,0.2,0.3,0.6]</box> at <t>47.5</t>s"
        " is holding a glass</think><answer>B</answer>")


class TestParse:
    def test_evidence_item(self):
        trace = parse_trace(GOOD)
        items = [s for s in trace.think_segments if isinstance(s, EvidenceItem)]
        assert items == [EvidenceItem("person", Box(0.1, 0.2, 0.3, 0.6), 47.5)]
        assert trace.answer == "B"

    def test_empty_think(self):
        trace = parse_trace("<think></think><answer>x</answer>")
        assert trace.think_segments == ()
        assert trace.answer == "x"

    def test_motion_tag(self):
        src = ('<think><motion obj="person" dir="W" speed="slow" scale="stable"/>'
               "</think><answer>left</answer>")
        trace = parse_trace(src)
        assert trace.think_segments == (
            MotionTag("person", Direction.W, Speed.SLOW, Scale.STABLE),
        )

    def test_attribute_order_free(self):
        src = ('<think><motion scale="stable" speed="slow" obj="a" dir="W"/>'
               "</think><answer>x</answer>")
        tag = parse_trace(src).think_segments[0]
        assert tag == MotionTag("a", Direction.W, Speed.SLOW, Scale.STABLE)

    def test_tolerant_whitespace(self):
        src = ("<think><obj> red  car </obj>  <box> [ 0.1 , 0.2 , 0.3 , 0.6 ] </box>"
               "  at  <t> 4.5 </t> s</think><answer>x</answer>")
        item = parse_trace(src).think_segments[0]
        assert item == EvidenceItem("red car", Box(0.1, 0.2, 0.3, 0.6), 4.5)

    def test_whitespace_around_blocks(self):
        trace = parse_trace("  <think></think>\n<answer>y</answer>\n")
        assert trace.answer == "y"

    @pytest.mark.parametrize("source,rule", [
        ("<think><answer>x</answer>", "unbalanced-think"),
        ("no tags at all", "unbalanced-think"),
        ("<answer>x</answer><think></think>", "misordered-blocks"),
        ("<think></think>", "unbalanced-answer"),
        ("<think></think><answer>x", "unbalanced-answer"),
        ("<think></think>junk<answer>x</answer>", "stray-text"),
        ("<think></think><answer>x</answer>junk", "stray-text"),
        ("<think><think></think></think><answer>x</answer>", "nested-think"),
        ("<think><obj>a</obj> lonely</think><answer>x</answer>", "incomplete-evidence"),
        ("<think></box></think><answer>x</answer>", "orphan-tag"),
        ("<think><obj>a</obj><box>[0.1,0.2,0.3]</box> at <t>1</t>s</think><answer>x</answer>",
         "malformed-box"),
        ("<think><obj>a</obj><box>[0.1,0.2,0.3,1.6]</box> at <t>1</t>s</think><answer>x</answer>",
         "box-out-of-range"),
        ("<think><obj>a</obj><box>[0.3,0.2,0.3,0.6]</box> at <t>1</t>s</think><answer>x</answer>",
         "degenerate-box"),
        ("<think><obj>a</obj><box>[0.1,0.2,0.3,0.6]</box> at <t>-1</t>s</think><answer>x</answer>",
         "bad-timestamp"),
        ("<think><obj> </obj><box>[0.1,0.2,0.3,0.6]</box> at <t>1</t>s</think><answer>x</answer>",
         "empty-object-name"),
        ('<think><motion obj="a" dir="UP" speed="slow" scale="stable"/></think><answer>x</answer>',
         "bad-direction-vocab"),
        ('<think><motion obj="a" dir="W" speed="warp" scale="stable"/></think><answer>x</answer>',
         "bad-speed-vocab"),
        ('<think><motion obj="a" dir="W" speed="slow" scale="huge"/></think><answer>x</answer>',
         "bad-scale-vocab"),
        ('<think><motion obj="a" dir="W" speed="slow"/></think><answer>x</answer>',
         "missing-motion-attr"),
        ('<think><motion obj="a" dir="W" dir="E" speed="slow" scale="stable"/></think><answer>x</answer>',
         "duplicate-motion-attr"),
        ('<think><motion obj="a" dir="W" speed="slow" scale="stable" x="y"/></think><answer>x</answer>',
         "unknown-motion-attr"),
        ("<think><motion></think><answer>x</answer>", "malformed-motion"),
    ])
    def test_rejects(self, source, rule):
        with pytest.raises(ParseError) as err:
            parse_trace(source)
        assert err.value.rule_id == rule
        report = validate_format(source)
        assert not report.valid
        assert rule in {v.rule_id for v in report.violations}

    def test_stat_coupling_is_validation_only(self):
        src = ('<think><motion obj="a" dir="STAT" speed="fast" scale="stable"/>'
               "</think><answer>x</answer>")
        tag = parse_trace(src).think_segments[0]  # parse accepts
        assert tag.direction is Direction.STAT and tag.speed is Speed.FAST
        report = validate_format(src)
        assert [v.rule_id for v in report.violations] == ["stat-coupling"]

    def test_multiple_violations_reported(self):
        src = ('<think><obj>a</obj><box>[2,0.2,0.3,0.6]</box> at <t>-1</t>s'
               '<motion obj="b" dir="UP" speed="slow" scale="stable"/></think>'
               "<answer>x</answer>")
        rules = {v.rule_id for v in validate_format(src).violations}
        assert {"box-out-of-range", "bad-timestamp", "bad-direction-vocab"} <= rules


class TestSerialize:
    def test_canonical_motion_tag(self):
        trace = Trace((MotionTag("duck", Direction.E, Speed.MODERATE, Scale.STABLE),), "x")
        assert ('<motion obj="duck" dir="E" speed="moderate" scale="stable"/>'
                in serialize_trace(trace))

    def test_fixed_point_of_canonical_text(self):
        assert serialize_trace(parse_trace(GOOD)) == GOOD

    def test_empty(self):
        assert serialize_trace(Trace((), "x")) == "<think></think><answer>x</answer>"

    def test_noncanonical_input_canonicalizes_once(self):
        messy = ("<think><obj> a </obj> <box>[ 0.1,0.2 ,0.3,0.6]</box> at <t>1.0</t> s"
                 '<motion speed="slow" obj="a" scale="stable" dir="W"/></think>'
                 "<answer> B </answer>")
        once = serialize_trace(parse_trace(messy))
        twice = serialize_trace(parse_trace(once))
        assert once == twice
        assert once != messy

    def test_number_formatting(self):
        assert format_number(0.5) == "0.5"
        assert format_number(1.0) == "1"
        assert format_number(0.0) == "0"
        assert format_number(47.5) == "47.5"
        assert format_number(0.125) == "0.125"

    def test_grid_floats_round_trip_through_format(self):
        rng = random.Random(5)
        for _ in range(2000):
            v = rng.randint(0, 600_000) / 1000
            assert float(format_number(v)) == v


class TestRoundTrip:
    def test_seeded_traces(self):
        rng = random.Random(11)
        for _ in range(300)            :
            trace = random_trace(rng)
            text = serialize_trace(trace)
            assert parse_trace(text) == trace
            assert validate_format(text).valid

    @settings(max_examples=200, deadline=None)
    @given(st.integers(min_value=0, max_value=2**48))
    def test_hypothesis_seeded_traces(self, seed):
        trace = random_trace(random.Random(seed))
        assert parse_trace(serialize_trace(trace)) == trace


class TestValidateImpliesParse:
    @settings(max_examples=300, deadline=None)
    @given(st.text(alphabet=st.sampled_from('<>/"abctx oi.,[]=1250-'), max_size=120))
    def test_fuzzed(self, text):
        report = validate_format(text)
        if report.valid:
            parse_trace(text)  # must not raise
        else:
            with pytest.raises(ParseError):
                parse_trace(text)

    def test_valid_report_has_no_violations(self):
        report = validate_format(GOOD)
        assert report.valid and report.violations == ()


class TestFuzz:
    @settings(max_examples=500, deadline=None)
    @given(st.binary(max_size=300))
    def test_never_panics_on_bytes(self, data):
        text = data.decode("latin-1")
        try:
            parse_trace(text)
        except ParseError:
            pass
        validate_format(text)


class TestExtraction:
    def test_tracks_sorted_and_merged(self):
        src = ("<think><obj>duck</obj><box>[0.5,0.5,0.6,0.6]</box> at <t>3</t>s"
               "<obj>Duck</obj><box>[0.1,0.1,0.2,0.2]</box> at <t>1</t>s"
               "</think><answer>x</answer>")
        tracks = extract_tracks(parse_trace(src))
        assert list(tracks) == ["duck"]
        assert [t for t, _ in tracks["duck"]] == [1.0, 3.0]

    def test_duplicate_timestamp_keeps_later(self):
        src = ("<think><obj>a</obj><box>[0.1,0.1,0.2,0.2]</box> at <t>1</t>s"
               "<obj>a</obj><box>[0.6,0.6,0.7,0.7]</box> at <t>1</t>s"
               "</think><answer>x</answer>")
        tracks = extract_tracks(parse_trace(src))
        assert tracks["a"] == [(1.0, Box(0.6, 0.6, 0.7, 0.7))]

    def test_name_normalization_merges(self):
        src = ("<think><obj>Person</obj><box>[0.1,0.1,0.2,0.2]</box> at <t>1</t>s"
               "<obj>person</obj><box>[0.3,0.3,0.4,0.4]</box> at <t>2</t>s"
               "</think><answer>x</answer>")
        assert len(extract_tracks(parse_trace(src))) == 1

    def test_empty_trace_empty_maps(self):
        trace = parse_trace("<think></think><answer>x</answer>")
        assert extract_tracks(trace) == {}
        assert extract_motion_tags(trace) == {}

    def test_tags_grouped_in_order(self):
        src = ('<think><motion obj="Sheldon" dir="STAT" speed="stationary" scale="stable"/>'
               '<motion obj="sheldon" dir="E" speed="slow" scale="stable"/>'
               '<motion obj="door" dir="W" speed="slow" scale="stable"/>'
               "</think><answer>x</answer>")
        tags = extract_motion_tags(parse_trace(src))
        assert len(tags) == 2
        assert [t.direction for t in tags["sheldon"]] == [Direction.STAT, Direction.E]

    def test_scan_motion_tags_salvages(self):
        broken = 'no think block <motion obj="a" dir="W" speed="slow" scale="stable"/> tail'
        tags = scan_motion_tags(broken)
        assert list(tags) == ["a"]
