"""Pluggable remote-model backend for tag extraction, with lexicon fallback.

The adapter contract is deliberately thin: submit a prompt, get a token
stream back. Whatever arrives is schema-validated before acceptance; any
transport, timeout, or validation failure falls back to the deterministic
lexicon engine and the result records which path produced it.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional, Protocol

import httpx

from .extraction import Lexicon, SessionContext, extract
from .schema import MemoryTagRecord, SchemaError

BACKEND_URL_ENV = "AIRSTEWARD_BACKEND_URL"

PROVENANCE_BACKEND = "backend"
PROVENANCE_FALLBACK = "lexicon_fallback"
PROVENANCE_LEXICON = "lexicon"


class BackendAdapter(Protocol):
    def submit(self, prompt: str) -> Iterator[str]:
        """Yield response text chunks for the prompt."""
        ...


@dataclass
class HttpBackendAdapter:
    """POSTs {"prompt": ...} and streams the response body as text."""

    url: str
    timeout_s: float = 10.0
    retries: int = 1

    def submit(self, prompt: str) -> Iterator[str]:
        last_error: Optional[Exception] = None
        for _ in range(max(1, self.retries)):
            try:
                with httpx.Client(timeout=self.timeout_s) as client:
                    with client.stream("POST", self.url, json={"prompt": prompt}) as response:
                        response.raise_for_status()
                        yield from response.iter_text()
                return
            except httpx.HTTPError as exc:
                last_error = exc
        raise ConnectionError(f"backend unreachable: {last_error}")


@dataclass
class CallableAdapter:
    """Wraps a plain function returning chunks; used in tests and the REPL."""

    fn: Callable[[str], Iterable[str]]

    def submit(self, prompt: str) -> Iterator[str]:
        yield from iter(self.fn(prompt))


def adapter_from_env() -> Optional[HttpBackendAdapter]:
    url = os.environ.get(BACKEND_URL_ENV, "").strip()
    return HttpBackendAdapter(url) if url else None


@dataclass(frozen=True)
class ExtractionResult:
    records: tuple[MemoryTagRecord, ...]
    provenance: str
    diagnostic: str = ""


def build_prompt(utterance: str, ctx: SessionContext) -> str:
    return json.dumps(
        {
            "task": "memory_tag_extraction",
            "utterance": utterance,
            "last_mentioned_group": ctx.last_mentioned_group.value if ctx.last_mentioned_group else None,
            "speaker_default_group": ctx.speaker_default_group.value if ctx.speaker_default_group else None,
        },
        sort_keys=True,
    )


def _parse_backend_payload(text: str, utterance_id: str) -> list[MemoryTagRecord]:
    payload = json.loads(text)
    if not isinstance(payload, list):
        raise SchemaError("backend payload must be a list of records")
    records = []
    for item in payload:
        if not isinstance(item, dict):
            raise SchemaError("backend record must be an object")
        item = dict(item)
        item.setdefault("source_utterance_id", utterance_id)
        records.append(MemoryTagRecord.from_payload(item))
    return records


def extract_via_backend(utterance: str, ctx: SessionContext,
                        adapter: Optional[BackendAdapter],
                        lexicon: Optional[Lexicon] = None) -> ExtractionResult:
    """Backend extraction with schema gate; falls back to the lexicon engine.

    Fallback triggers are all non-fatal: transport errors, timeouts, and
    schema-invalid payloads. The returned provenance says which path won.
    """
    utterance_id = f"u{len(ctx.utterance_history)}"
    if adapter is None:
        return ExtractionResult(
            records=tuple(extract(utterance, ctx, lexicon, utterance_id=utterance_id)),
            provenance=PROVENANCE_LEXICON,
        )
    try:
        text = "".join(adapter.submit(build_prompt(utterance, ctx)))
        records = _parse_backend_payload(text, utterance_id)
    except (ConnectionError, TimeoutError, OSError, ValueError, httpx.HTTPError) as exc:
        fallback = extract(utterance, ctx, lexicon, utterance_id=utterance_id)
        return ExtractionResult(
            records=tuple(fallback),
            provenance=PROVENANCE_FALLBACK,
            diagnostic=f"{type(exc).__name__}: {exc}",
        )
    # Accepting the backend result still advances the session context.
    ctx.remember(utterance)
    return ExtractionResult(records=tuple(records), provenance=PROVENANCE_BACKEND)
