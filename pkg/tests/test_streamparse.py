"""Stream parser: chunking invariance against the whole-string oracle."""

from __future__ import annotations

import random

import pytest

from generators import random_plan
from airsteward.planner import plan as run_planner
from airsteward.scenarios import builtin_scenario
from airsteward.schema import ReasoningChain, encode_plan
from airsteward.streamparse import (
    CommandReady,
    DEFAULT_CONFIG,
    ParseError,
    ReasoningDelta,
    ReasoningDone,
    SegmentationConfig,
    StreamCollector,
    StreamParser,
    chain_from_text,
    chain_to_text,
    parse_semi_stream,
    parse_stream,
    render,
)


def summarize(events):
    """Chunking-invariant view: concatenated delta text, terminal events, payload."""
    text = "".join(e.text for e in events if isinstance(e, ReasoningDelta))
    terminals = []
    plan_payload = None
    for e in events:
        if isinstance(e, ReasoningDone):
            terminals.append("done")
        elif isinstance(e, CommandReady):
            terminals.append("command")
            plan_payload = encode_plan(e.plan)
        elif isinstance(e, ParseError):
            terminals.append(("error", e.byte_offset))
    return text, terminals, plan_payload


def feed_in_chunks(data, cuts, strict=True, config=DEFAULT_CONFIG):
    parser = StreamParser(config, strict=strict)
    events = []
    last = 0
    for cut in sorted(cuts):
        events.extend(parser.feed(data[last:cut]))
        last = cut
    events.extend(parser.feed(data[last:]))
    events.extend(parser.finish())
    return events


def sample_chain():
    return ReasoningChain(
        perception="indoor 26C, air a bit stale",
        goals="keep it cool and fresh é気分",  # multi-byte on purpose
        quantitative_targets="co2 < 800 ppm",
        strategy="mode cool, fresh air on",
        scheduling="air_fresh every 120 min for 30 min",
    )


@pytest.fixture(scope="module")
def rendered():
    rng = random.Random(8)
    return render(sample_chain(), random_plan(rng))


class TestWholeStringParse:
    def test_single_chunk_event_order(self, rendered):
        events = parse_stream(rendered)
        kinds = [type(e).__name__ for e in events]
        assert kinds[-2:] == ["ReasoningDone", "CommandReady"]
        assert all(k == "ReasoningDelta" for k in kinds[:-2])

    def test_spec_shaped_stream(self):
        rng = random.Random(1)
        plan_bytes = encode_plan(random_plan(rng)).decode()
        data = f"<REASONING>hot</REASONING><COMMAND>{plan_bytes}</COMMAND>".encode()
        text, terminals, payload = summarize(parse_stream(data))
        assert text == "hot"
        assert terminals == ["done", "command"]

    def test_malformed_command_byte_offset(self):
        data = b"<REASONING>x</REASONING><COMMAND>{]</COMMAND>"
        events = parse_stream(data)
        errors = [e for e in events if isinstance(e, ParseError)]
        assert len(errors) == 1
        # Offset points inside the command region, at the bad token.
        assert errors[0].byte_offset == data.index(b"{]") + 1


class TestChunkingInvariance:
    def test_all_two_chunk_partitions(self, rendered):
        reference = summarize(parse_stream(rendered))
        for cut in range(len(rendered) + 1):
            assert summarize(feed_in_chunks(rendered, [cut])) == reference

    def test_one_byte_chunks(self, rendered):
        reference = summarize(parse_stream(rendered))
        assert summarize(feed_in_chunks(rendered, range(len(rendered)))) == reference

    def test_random_multi_chunk_partitions(self, rendered):
        rng = random.Random(1234)
        reference = summarize(parse_stream(rendered))
        for _ in range(300):
            cuts = sorted(rng.sample(range(1, len(rendered)),
                                     k=rng.randint(1, min(24, len(rendered) - 1))))
            assert summarize(feed_in_chunks(rendered, cuts)) == reference

    def test_split_inside_multibyte_character(self):
        chain = sample_chain()
        rng = random.Random(3)
        data = render(chain, random_plan(rng))
        idx = data.index("気".encode("utf-8")) + 1  # mid-character cut
        reference = summarize(parse_stream(data))
        assert summarize(feed_in_chunks(data, [idx])) == reference

    def test_invariance_on_planner_streams(self, kb):
        scenario = builtin_scenario("demo")
        scenario_kb = scenario.knowledge_base(kb)
        p, chain = run_planner(scenario.env, scenario.household, scenario.device, scenario_kb)
        data = render(chain, p)
        rng = random.Random(55)
        reference = summarize(parse_stream(data))
        for _ in range(100):
            cuts = sorted(rng.sample(range(1, len(data)), k=rng.randint(1, 16)))
            assert summarize(feed_in_chunks(data, cuts)) == reference


class TestFinish:
    def test_finish_after_complete_stream_is_empty(self, rendered):
        parser = StreamParser()
        parser.feed(rendered)
        assert parser.finish() == []

    def test_finish_mid_command_reports_unterminated(self, rendered):
        idx = rendered.index(b"<COMMAND>") + len(b"<COMMAND>") + 3
        parser = StreamParser()
        parser.feed(rendered[:idx])
        events = parser.finish()
        assert any(isinstance(e, ParseError) and "command" in e.message for e in events)

    def test_finish_flushes_pending_sentinel_prefix(self):
        data = b"<REASONING>warm</REAS"
        parser = StreamParser(strict=False)
        events = parser.feed(data)
        finish_events = parser.finish()
        deltas = "".join(e.text for e in events + finish_events
                         if isinstance(e, ReasoningDelta))
        # Oracle: lenient whole-string parse of the truncated input.
        oracle_text = "".join(e.text for e in parse_stream(data, strict=False)
                              if isinstance(e, ReasoningDelta))
        assert deltas == oracle_text == "warm</REAS"
        # The held sentinel prefix itself arrives at finish.
        assert any(isinstance(e, ReasoningDelta) and e.text == "</REAS"
                   for e in finish_events)
        assert any(isinstance(e, ParseError) and "reasoning" in e.message
                   for e in finish_events)


class TestModes:
    def test_strict_rejects_interregion_text(self):
        rng = random.Random(6)
        plan_bytes = encode_plan(random_plan(rng)).decode()
        data = f"<REASONING>a</REASONING>junk<COMMAND>{plan_bytes}</COMMAND>".encode()
        events = parse_stream(data, strict=True)
        assert any(isinstance(e, ParseError) for e in events)

    def test_lenient_discards_interregion_text_with_diagnostic(self):
        rng = random.Random(6)
        plan_obj = random_plan(rng)
        data = (b"noise<REASONING>a</REASONING> \n" +
                b"<COMMAND>" + encode_plan(plan_obj) + b"</COMMAND>trailing")
        parser = StreamParser(strict=False)
        events = parser.feed(data) + parser.finish()
        collector = StreamCollector()
        collector.add(events)
        assert not collector.errors
        assert collector.plan == plan_obj
        assert parser.diagnostics

    def test_at_most_one_command_ready(self):
        rng = random.Random(9)
        plan_bytes = encode_plan(random_plan(rng))
        data = (b"<REASONING>a</REASONING><COMMAND>" + plan_bytes + b"</COMMAND>"
                b"<COMMAND>" + plan_bytes + b"</COMMAND>")
        for strict in (True, False):
            events = parse_stream(data, strict=strict)
            assert sum(isinstance(e, CommandReady) for e in events) == 1


class TestBoundedMemory:
    def test_reasoning_buffer_stays_bounded(self):
        parser = StreamParser()
        parser.feed(b"<REASONING>")
        bound = max(len(s) for s in ("</REASONING>", "<REASONING>", "<COMMAND>", "</COMMAND>")) + 4
        rng = random.Random(44)
        for _ in range(2000):
            parser.feed(bytes([rng.randrange(97, 122)]) * rng.randint(1, 3))
            assert len(parser._buf) <= bound


class TestRenderRoundTrip:
    def test_round_trip_randomized(self):
        rng = random.Random(2000)
        words = ("warm", "cool", "fresh", "dry", "stable", "温暖", "crisp")
        for _ in range(150):
            chain = ReasoningChain(*(
                " ".join(rng.choice(words) for _ in range(rng.randint(0, 5)))
                for _ in range(5)))
            plan_obj = random_plan(rng)
            chain_back, plan_back = parse_semi_stream(render(chain, plan_obj))
            assert chain_back == chain
            assert plan_back == plan_obj

    def test_empty_segments_round_trip(self):
        rng = random.Random(77)
        chain = ReasoningChain("", "", "", "", "")
        chain_back, _ = parse_semi_stream(render(chain, random_plan(rng)))
        assert chain_back == chain

    def test_chain_text_round_trip(self):
        chain = sample_chain()
        assert chain_from_text(chain_to_text(chain)) == chain


class TestSegmentationConfig:
    def test_sentinels_must_be_distinct(self):
        with pytest.raises(ValueError):
            SegmentationConfig("<A>", "<A>", "<C>", "</C>")

    def test_sentinels_must_be_non_empty(self):
        with pytest.raises(ValueError):
            SegmentationConfig("", "</R>", "<C>", "</C>")

    def test_no_sentinel_substring_of_another(self):
        with pytest.raises(ValueError):
            SegmentationConfig("<R>", "<R>x", "<C>", "</C>")

    def test_custom_sentinels_work(self):
        cfg = SegmentationConfig("<think>", "</think>", "<act>", "</act>")
        rng = random.Random(21)
        plan_obj = random_plan(rng)
        chain = sample_chain()
        chain_back, plan_back = parse_semi_stream(render(chain, plan_obj, cfg), cfg)
        assert (chain_back, plan_back) == (chain, plan_obj)
