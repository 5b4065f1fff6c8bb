"""Incremental segmentation of a semi-stream into reasoning text and a command.

The parser consumes raw bytes in arbitrary chunkings: a chunk may split a
sentinel or a multi-byte character anywhere, and the concatenated event
semantics are identical to parsing the whole string at once. Reasoning
text streams out as soon as it is unambiguous; the command region is
buffered and decoded as a whole.
"""

from __future__ import annotations

import codecs
from dataclasses import dataclass, field as dataclass_field
from typing import Optional, Union

from .schema import ControlPlan, DecodeError, ReasoningChain, SchemaError, decode_plan, encode_plan


@dataclass(frozen=True)
class SegmentationConfig:
    reasoning_open: str = "<REASONING>"
    reasoning_close: str = "</REASONING>"
    command_open: str = "<COMMAND>"
    command_close: str = "</COMMAND>"

    def __post_init__(self):
        sentinels = [self.reasoning_open, self.reasoning_close,
                     self.command_open, self.command_close]
        if len(set(sentinels)) != 4:
            raise ValueError("sentinels must be distinct")
        for s in sentinels:
            if not s:
                raise ValueError("sentinels must be non-empty")
        for a in sentinels:
            for b in sentinels:
                if a != b and a in b:
                    raise ValueError(f"sentinel {a!r} is a substring of {b!r}")


DEFAULT_CONFIG = SegmentationConfig()


@dataclass(frozen=True)
class ReasoningDelta:
    text: str


@dataclass(frozen=True)
class ReasoningDone:
    pass


@dataclass(frozen=True)
class CommandReady:
    plan: ControlPlan


@dataclass(frozen=True)
class ParseError:
    message: str
    byte_offset: int


StreamEvent = Union[ReasoningDelta, ReasoningDone, CommandReady, ParseError]


def _pending_prefix_len(buf: bytes, sentinel: bytes) -> int:
    """Length of the longest suffix of buf that is a proper prefix of sentinel."""
    limit = min(len(buf), len(sentinel) - 1)
    for length in range(limit, 0, -1):
        if buf[-length:] == sentinel[:length]:
            return length
    return 0


class StreamParser:
    """One parser per stream; feed() chunks in order, then finish()."""

    def __init__(self, config: SegmentationConfig = DEFAULT_CONFIG, strict: bool = True):
        self.config = config
        self.strict = strict
        self.diagnostics: list[str] = []
        self._buf = b""
        self._consumed = 0  # absolute byte offset of _buf[0]
        self._state = "await_reasoning"
        self._decoder = codecs.getincrementaldecoder("utf-8")()
        self._command_content_start = 0
        self._failed = False
        self._open_r = config.reasoning_open.encode("utf-8")
        self._close_r = config.reasoning_close.encode("utf-8")
        self._open_c = config.command_open.encode("utf-8")
        self._close_c = config.command_close.encode("utf-8")

    # -- helpers ---------------------------------------------------------

    def _advance(self, n: int) -> None:
        self._consumed += n
        self._buf = self._buf[n:]

    def _stray(self, data: bytes, offset: int, events: list[StreamEvent]) -> None:
        if not data:
            return
        if self.strict:
            events.append(ParseError(
                f"unexpected text outside sentinel regions: {data[:24]!r}", offset))
            self._failed = True
        else:
            self.diagnostics.append(
                f"discarded {len(data)} stray byte(s) at offset {offset}")

    # -- public API ------------------------------------------------------

    def feed(self, chunk: bytes) -> list[StreamEvent]:
        events: list[StreamEvent] = []
        if self._failed:
            self._consumed += len(chunk)
            return events
        self._buf += chunk
        progress = True
        while progress and not self._failed:
            progress = False
            if self._state == "await_reasoning":
                progress = self._await_open(events, first_region=True)
            elif self._state == "in_reasoning":
                progress = self._in_reasoning(events)
            elif self._state == "await_command":
                progress = self._await_open(events, first_region=False)
            elif self._state == "in_command":
                progress = self._in_command(events)
            elif self._state == "done":
                progress = self._after_done(events)
        return events

    def finish(self) -> list[StreamEvent]:
        events: list[StreamEvent] = []
        if self._failed:
            return events
        if self._state == "in_reasoning":
            # Pending sentinel-prefix bytes turn out to be plain text; flush them.
            try:
                text = self._decoder.decode(self._buf, True)
            except UnicodeDecodeError:
                events.append(ParseError("invalid utf-8 in reasoning region", self._consumed))
                return events
            if text:
                events.append(ReasoningDelta(text))
            self._advance(len(self._buf))
            events.append(ParseError("unterminated reasoning region", self._consumed))
        elif self._state == "in_command":
            events.append(ParseError("unterminated command region",
                                     self._consumed + len(self._buf)))
        elif self._buf:
            self._stray(self._buf, self._consumed, events)
            self._advance(len(self._buf))
        return events

    # -- state handlers ----------------------------------------------------

    def _await_open(self, events: list[StreamEvent], first_region: bool) -> bool:
        # The very first region may be reasoning or command; after reasoning
        # closes only the command region may open.
        openers = [(self._open_r, "in_reasoning"), (self._open_c, "in_command")] \
            if first_region else [(self._open_c, "in_command")]
        best: Optional[tuple[int, bytes, str]] = None
        for sentinel, next_state in openers:
            idx = self._buf.find(sentinel)
            if idx >= 0 and (best is None or idx < best[0]):
                best = (idx, sentinel, next_state)
        if best is not None:
            idx, sentinel, next_state = best
            self._stray(self._buf[:idx], self._consumed, events)
            if self._failed:
                return False
            self._advance(idx + len(sentinel))
            self._state = next_state
            if next_state == "in_command":
                self._command_content_start = self._consumed
            return True
        hold = max(_pending_prefix_len(self._buf, s) for s, _ in openers)
        stray_len = len(self._buf) - hold
        if stray_len > 0:
            self._stray(self._buf[:stray_len], self._consumed, events)
            if not self._failed:
                self._advance(stray_len)
        return False

    def _in_reasoning(self, events: list[StreamEvent]) -> bool:
        idx = self._buf.find(self._close_r)
        if idx >= 0:
            try:
                text = self._decoder.decode(self._buf[:idx], True)
            except UnicodeDecodeError:
                events.append(ParseError("invalid utf-8 in reasoning region", self._consumed))
                self._failed = True
                return False
            if text:
                events.append(ReasoningDelta(text))
            self._advance(idx + len(self._close_r))
            events.append(ReasoningDone())
            self._state = "await_command"
            return True
        hold = _pending_prefix_len(self._buf, self._close_r)
        safe = len(self._buf) - hold
        if safe > 0:
            text = self._decoder.decode(self._buf[:safe], False)
            self._advance(safe)
            if text:
                events.append(ReasoningDelta(text))
        return False

    def _in_command(self, events: list[StreamEvent]) -> bool:
        idx = self._buf.find(self._close_c)
        if idx < 0:
            return False
        payload = self._buf[:idx]
        self._advance(idx + len(self._close_c))
        self._state = "done"
        try:
            plan = decode_plan(payload)
        except DecodeError as exc:
            events.append(ParseError(str(exc), self._command_content_start + exc.byte_offset))
            self._failed = True
            return False
        except SchemaError as exc:
            events.append(ParseError(f"command failed schema validation: {exc}",
                                     self._command_content_start))
            self._failed = True
            return False
        events.append(CommandReady(plan))
        return True

    def _after_done(self, events: list[StreamEvent]) -> bool:
        if not self._buf:
            return False
        if self.strict:
            self._stray(self._buf, self._consumed, events)
            return False
        # Lenient trailing text is dropped as it arrives.
        self.diagnostics.append(
            f"discarded {len(self._buf)} trailing byte(s) at offset {self._consumed}")
        self._advance(len(self._buf))
        return False


# ---------------------------------------------------------------------------
# Whole-string conveniences and rendering

def parse_stream(data: bytes, config: SegmentationConfig = DEFAULT_CONFIG,
                 strict: bool = True) -> list[StreamEvent]:
    parser = StreamParser(config, strict=strict)
    events = parser.feed(data)
    events.extend(parser.finish())
    return events


@dataclass
class StreamCollector:
    """Accumulates events into (reasoning text, plan, errors)."""

    reasoning_parts: list[str] = dataclass_field(default_factory=list)
    done: bool = False
    plan: Optional[ControlPlan] = None
    errors: list[ParseError] = dataclass_field(default_factory=list)

    def add(self, events: list[StreamEvent]) -> None:
        for event in events:
            if isinstance(event, ReasoningDelta):
                self.reasoning_parts.append(event.text)
            elif isinstance(event, ReasoningDone):
                self.done = True
            elif isinstance(event, CommandReady):
                self.plan = event.plan
            elif isinstance(event, ParseError):
                self.errors.append(event)

    @property
    def reasoning_text(self) -> str:
        return "".join(self.reasoning_parts)


_CHAIN_HEADERS = (
    "[1/5 PERCEPTION] ",
    "[2/5 GOALS] ",
    "[3/5 TARGETS] ",
    "[4/5 STRATEGY] ",
    "[5/5 SCHEDULING] ",
)


def chain_to_text(chain: ReasoningChain) -> str:
    """Join the five segments under fixed headers; segments must not contain them."""
    segments = [getattr(chain, name) for name in ReasoningChain.SEGMENTS]
    return "\n".join(header + segment for header, segment in zip(_CHAIN_HEADERS, segments))


def chain_from_text(text: str) -> ReasoningChain:
    values = []
    rest = text
    if not rest.startswith(_CHAIN_HEADERS[0]):
        raise ValueError("reasoning text does not start with the perception header")
    rest = rest[len(_CHAIN_HEADERS[0]):]
    for next_header in _CHAIN_HEADERS[1:]:
        segment, sep, rest = rest.partition("\n" + next_header)
        if not sep:
            raise ValueError(f"reasoning text is missing header {next_header.strip()!r}")
        values.append(segment)
    values.append(rest)
    return ReasoningChain(*values)


def render(chain: ReasoningChain, plan: ControlPlan,
           config: SegmentationConfig = DEFAULT_CONFIG) -> bytes:
    """Inverse of parsing: parse(render(chain, plan)) reproduces both exactly."""
    return (
        config.reasoning_open.encode("utf-8")
        + chain_to_text(chain).encode("utf-8")
        + config.reasoning_close.encode("utf-8")
        + config.command_open.encode("utf-8")
        + encode_plan(plan)
        + config.command_close.encode("utf-8")
    )


def parse_semi_stream(data: bytes, config: SegmentationConfig = DEFAULT_CONFIG,
                      strict: bool = True) -> tuple[ReasoningChain, ControlPlan]:
    """Parse a complete rendered stream; raises on any parse error."""
    collector = StreamCollector()
    collector.add(parse_stream(data, config, strict=strict))
    if collector.errors:
        first = collector.errors[0]
        raise ValueError(f"{first.message} (byte offset {first.byte_offset})")
    if collector.plan is None:
        raise ValueError("stream carried no command region")
    return chain_from_text(collector.reasoning_text), collector.plan
