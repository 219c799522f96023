"""Generator backends: the seq2seq abstraction every pipeline step runs through.

A backend turns a GenerationRequest into a ranked list of Beams. The toy
backends (echo, template, corpus-lookup) are deterministic stand-ins for real
seq2seq services so pipelines can be exercised and tested at desk scale; the
http backend speaks a small JSON wire protocol to anything that can serve it.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import requests

from .metrics import normalize, unigram_f1

DEFAULT_KNOWLEDGE_OPEN = "__knowledge__"
DEFAULT_KNOWLEDGE_CLOSE = "__endknowledge__"

BACKEND_KINDS = ("echo", "template", "corpus-lookup", "http")

DEFAULT_HTTP_TIMEOUT = 30.0
DEFAULT_MAX_IN_FLIGHT = 8


class BackendError(Exception):
    """A backend could not produce beams (transport, status, or schema failure)."""

    def __init__(self, message: str, *, endpoint: str | None = None, cause: Exception | None = None):
        detail = message if endpoint is None else f"{message} (endpoint: {endpoint})"
        super().__init__(detail)
        self.endpoint = endpoint
        self.cause = cause


@dataclass(frozen=True)
class Beam:
    """One ranked generation hypothesis: text plus a model score (higher is better)."""

    text: str
    score: float


@dataclass(frozen=True)
class GenerationRequest:
    input_text: str
    beam_size: int = 3
    n_best: int = 1
    max_tokens: int = 128
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.input_text:
            raise ValueError("input_text must be non-empty")
        if self.beam_size < 1:
            raise ValueError(f"beam_size must be >= 1, got {self.beam_size}")
        if not 1 <= self.n_best <= self.beam_size:
            raise ValueError(f"n_best must be in [1, beam_size], got {self.n_best}")
        if self.max_tokens < 1:
            raise ValueError(f"max_tokens must be >= 1, got {self.max_tokens}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def knowledge_span(
    text: str,
    open_token: str = DEFAULT_KNOWLEDGE_OPEN,
    close_token: str = DEFAULT_KNOWLEDGE_CLOSE,
) -> str | None:
    """Extract the text inside the knowledge tokens, or None if no span exists."""
    start = text.find(open_token)
    if start == -1:
        return None
    end = text.find(close_token, start + len(open_token))
    if end == -1:
        return None
    return text[start + len(open_token) : end].strip()


def _truncate(text: str, max_tokens: int) -> str:
    # Toy backends honor max_tokens only by truncating; within the limit the
    # text is returned untouched (original spacing preserved).
    words = text.split()
    if len(words) <= max_tokens:
        return text
    return " ".join(words[:max_tokens])


def _first_line_payload(text: str) -> str:
    # Fallback binding for templates when no knowledge span exists: the value
    # part of the first "key: value" line, or the whole first line.
    first = text.splitlines()[0] if text else ""
    _, sep, value = first.partition(": ")
    return value if sep else first


class Backend:
    """Interface: anything with a generate(request) -> list[Beam] method."""

    def generate(self, request: GenerationRequest) -> list[Beam]:
        raise NotImplementedError


class EchoBackend(Backend):
    """Returns the input unchanged; the identity stand-in."""

    def generate(self, request: GenerationRequest) -> list[Beam]:
        return [Beam(_truncate(request.input_text, request.max_tokens), 0.0)]


class TemplateBackend(Backend):
    """Substitutes {k} in a fixed template with the input's knowledge span.

    When the input has no knowledge span, {k} binds to the value of the first
    "key: value" line (covers prompt formats like "answer: ...\\ncontext: ...").
    """

    def __init__(
        self,
        template: str,
        open_token: str = DEFAULT_KNOWLEDGE_OPEN,
        close_token: str = DEFAULT_KNOWLEDGE_CLOSE,
    ):
        self.template = template
        self.open_token = open_token
        self.close_token = close_token

    def generate(self, request: GenerationRequest) -> list[Beam]:
        bound = knowledge_span(request.input_text, self.open_token, self.close_token)
        if bound is None:
            bound = _first_line_payload(request.input_text)
        text = self.template.replace("{k}", bound)
        return [Beam(_truncate(text, request.max_tokens), 0.0)]


class CorpusLookupBackend(Backend):
    """Retrieves the corpus sentence with maximal unigram F1 against the input's last line.

    A desk-scale stand-in for a retrieval-augmented knowledge model: ranking is
    exhaustive lexical overlap, ties broken by the lexicographically smaller
    sentence, so results are fully deterministic.
    """

    def __init__(self, sentences: Sequence[str]):
        cleaned = [s for s in (line.strip() for line in sentences) if s]
        if not cleaned:
            raise ValueError("corpus must contain at least one sentence")
        self.sentences = list(cleaned)

    @classmethod
    def from_file(cls, path: str | Path) -> "CorpusLookupBackend":
        return cls(Path(path).read_text(encoding="utf-8").splitlines())

    def generate(self, request: GenerationRequest) -> list[Beam]:
        query = normalize(request.input_text.splitlines()[-1])
        scored = sorted(
            ((unigram_f1(normalize(s), query), s) for s in self.sentences),
            key=lambda pair: (-pair[0], pair[1]),
        )
        return [
            Beam(_truncate(sentence, request.max_tokens), score)
            for score, sentence in scored[: request.n_best]
        ]


class HttpBackend(Backend):
    """Client for the JSON generation protocol.

    POSTs {"input", "beam_size", "n_best", "max_tokens", "seed"} and expects
    {"beams": [{"text", "score"}, ...]}; beams are re-sorted locally by score
    descending. Concurrent in-flight requests are bounded by a semaphore.
    """

    def __init__(
        self,
        endpoint: str,
        timeout: float = DEFAULT_HTTP_TIMEOUT,
        max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
    ):
        if not endpoint:
            raise ValueError("endpoint must be non-empty")
        if timeout <= 0:
            raise ValueError("timeout must be positive")
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        self.endpoint = endpoint
        self.timeout = timeout
        self._slots = threading.BoundedSemaphore(max_in_flight)

    def generate(self, request: GenerationRequest) -> list[Beam]:
        payload = {
            "input": request.input_text,
            "beam_size": request.beam_size,
            "n_best": request.n_best,
            "max_tokens": request.max_tokens,
            "seed": request.seed,
        }
        with self._slots:
            try:
                response = requests.post(self.endpoint, json=payload, timeout=self.timeout)
            except requests.RequestException as exc:
                raise BackendError(f"transport failure: {exc}", endpoint=self.endpoint, cause=exc) from exc
        if not 200 <= response.status_code < 300:
            raise BackendError(f"HTTP status {response.status_code}", endpoint=self.endpoint)
        try:
            body = response.json()
        except ValueError as exc:
            raise BackendError("malformed body: not JSON", endpoint=self.endpoint, cause=exc) from exc
        return self._parse_beams(body, request.n_best)

    def _parse_beams(self, body: Any, n_best: int) -> list[Beam]:
        if not isinstance(body, dict) or "beams" not in body:
            raise BackendError("schema violation: missing field 'beams'", endpoint=self.endpoint)
        raw = body["beams"]
        if not isinstance(raw, list):
            raise BackendError("schema violation: field 'beams' is not a list", endpoint=self.endpoint)
        beams = []
        for i, item in enumerate(raw):
            for name in ("text", "score"):
                if not isinstance(item, dict) or name not in item:
                    raise BackendError(
                        f"schema violation: missing field 'beams[{i}].{name}'", endpoint=self.endpoint
                    )
            if not isinstance(item["text"], str) or not isinstance(item["score"], (int, float)):
                raise BackendError(f"schema violation: bad types in 'beams[{i}]'", endpoint=self.endpoint)
            beams.append(Beam(item["text"], float(item["score"])))
        beams.sort(key=lambda b: -b.score)
        return beams[:n_best]


_REQUIRED_PARAMS: dict[str, set[str]] = {
    "echo": set(),
    "template": {"template"},
    "corpus-lookup": set(),  # needs exactly one of path / sentences, checked below
    "http": {"endpoint"},
}
_OPTIONAL_PARAMS: dict[str, set[str]] = {
    "echo": set(),
    "template": {"knowledge_open", "knowledge_close"},
    "corpus-lookup": {"path", "sentences"},
    "http": {"timeout", "max_in_flight"},
}


@dataclass(frozen=True)
class BackendDescriptor:
    """Declarative backend binding: a kind plus kind-specific parameters."""

    kind: str
    parameters: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in BACKEND_KINDS:
            raise ValueError(f"unknown backend kind {self.kind!r}; expected one of {BACKEND_KINDS}")
        allowed = _REQUIRED_PARAMS[self.kind] | _OPTIONAL_PARAMS[self.kind]
        unknown = set(self.parameters) - allowed
        if unknown:
            raise ValueError(f"unknown parameters for {self.kind} backend: {sorted(unknown)}")
        missing = _REQUIRED_PARAMS[self.kind] - set(self.parameters)
        if missing:
            raise ValueError(f"missing parameters for {self.kind} backend: {sorted(missing)}")
        if self.kind == "corpus-lookup":
            has_path = "path" in self.parameters
            has_sentences = "sentences" in self.parameters
            if has_path == has_sentences:
                raise ValueError("corpus-lookup backend needs exactly one of 'path' or 'sentences'")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "parameters": dict(self.parameters)}


def build_backend(descriptor: BackendDescriptor | Backend) -> Backend:
    """Instantiate a backend from its descriptor; pass built backends through."""
    if isinstance(descriptor, Backend):
        return descriptor
    params = descriptor.parameters
    if descriptor.kind == "echo":
        return EchoBackend()
    if descriptor.kind == "template":
        return TemplateBackend(
            params["template"],
            open_token=params.get("knowledge_open", DEFAULT_KNOWLEDGE_OPEN),
            close_token=params.get("knowledge_close", DEFAULT_KNOWLEDGE_CLOSE),
        )
    if descriptor.kind == "corpus-lookup":
        if "path" in params:
            return CorpusLookupBackend.from_file(params["path"])
        return CorpusLookupBackend(params["sentences"])
    return HttpBackend(
        params["endpoint"],
        timeout=float(params.get("timeout", DEFAULT_HTTP_TIMEOUT)),
        max_in_flight=int(params.get("max_in_flight", DEFAULT_MAX_IN_FLIGHT)),
    )


def generate(backend: BackendDescriptor | Backend, request: GenerationRequest) -> list[Beam]:
    """One-shot convenience: build (if needed) and invoke a backend."""
    return build_backend(backend).generate(request)
