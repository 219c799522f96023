"""The two-step knowledge-to-response composition.

A pipeline first asks a knowledge backend for an intermediate knowledge
sequence given the serialized dialogue context, then asks a response backend
for the final utterance given the context plus that knowledge wrapped in
special tokens. Everything the pipeline did is captured in a PipelineTrace,
which is also where human knowledge injection and beam filtering surface.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .backends import (
    Backend,
    BackendDescriptor,
    BackendError,
    Beam,
    DEFAULT_KNOWLEDGE_CLOSE,
    DEFAULT_KNOWLEDGE_OPEN,
    GenerationRequest,
    build_backend,
)
from .metrics import (
    RarityTable,
    answer_present,
    bleu4,
    contains_tokens,
    knowledge_f1,
    normalize,
    rare_f1,
    rouge_l,
    unigram_f1,
)

logger = logging.getLogger(__name__)

CONFIDENCE_MIN = 0
CONFIDENCE_MAX = 10


class PipelineStepError(Exception):
    """A backend failed during a named pipeline step ("knowledge" or "response")."""

    def __init__(self, step: str, cause: Exception):
        super().__init__(f"{step} step failed: {cause}")
        self.step = step
        self.cause = cause


def derive_seed(seed: int, key: str) -> int:
    """Stable 64-bit sub-seed for (run seed, string key); independent of process state."""
    digest = hashlib.blake2b(f"{seed}:{key}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


@dataclass(frozen=True)
class Turn:
    speaker: str
    text: str


@dataclass(frozen=True)
class DialogueEpisode:
    """One dialogue example: ordered context turns plus optional gold fields."""

    example_id: str
    turns: tuple[Turn, ...]
    topic: str | None = None
    personas: Mapping[str, str] | None = None
    gold_knowledge: str | None = None
    gold_response: str | None = None
    gold_answers: tuple[str, ...] | None = None

    @classmethod
    def from_dict(cls, data: Mapping) -> "DialogueEpisode":
        try:
            example_id = data["example_id"]
            turns = tuple(Turn(t["speaker"], t["text"]) for t in data["turns"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"invalid episode: missing field {exc}") from exc
        answers = data.get("gold_answers")
        return cls(
            example_id=example_id,
            turns=turns,
            topic=data.get("topic"),
            personas=dict(data["personas"]) if data.get("personas") else None,
            gold_knowledge=data.get("gold_knowledge"),
            gold_response=data.get("gold_response"),
            gold_answers=tuple(answers) if answers else None,
        )

    def to_dict(self) -> dict:
        out: dict = {
            "example_id": self.example_id,
            "turns": [{"speaker": t.speaker, "text": t.text} for t in self.turns],
        }
        if self.topic is not None:
            out["topic"] = self.topic
        if self.personas is not None:
            out["personas"] = dict(self.personas)
        if self.gold_knowledge is not None:
            out["gold_knowledge"] = self.gold_knowledge
        if self.gold_response is not None:
            out["gold_response"] = self.gold_response
        if self.gold_answers is not None:
            out["gold_answers"] = list(self.gold_answers)
        return out


def load_episodes(path: str | Path) -> list[DialogueEpisode]:
    """Read a JSONL file of episodes; raises ValueError on the first bad line."""
    episodes = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                episodes.append(DialogueEpisode.from_dict(json.loads(line)))
            except (json.JSONDecodeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return episodes


def write_episodes(path: str | Path, episodes: Iterable[DialogueEpisode]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for ep in episodes:
            handle.write(json.dumps(ep.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")


def serialize_context(
    episode: DialogueEpisode,
    reserved: Sequence[str] = (DEFAULT_KNOWLEDGE_OPEN, DEFAULT_KNOWLEDGE_CLOSE),
) -> str:
    """Render the episode as the knowledge-task input: topic, personas, then turns.

    The output deliberately contains no knowledge tokens; in shared-parameter
    mode their absence is what selects the knowledge task. Any reserved token
    already present in the episode text is a hard error, not an escape.
    """
    if not episode.turns:
        raise ValueError("episode has no turns")
    lines = []
    if episode.topic is not None:
        lines.append(f"topic: {episode.topic}")
    if episode.personas:
        for speaker, text in episode.personas.items():
            lines.append(f"persona {speaker}: {text}")
    for turn in episode.turns:
        lines.append(f"{turn.speaker}: {turn.text}")
    serialized = "\n".join(lines)
    for token in reserved:
        if token in serialized:
            raise ValueError(f"reserved token in input: {token!r}")
    return serialized


def render_knowledge_line(
    knowledge: str,
    open_token: str = DEFAULT_KNOWLEDGE_OPEN,
    close_token: str = DEFAULT_KNOWLEDGE_CLOSE,
    confidence: int | None = None,
) -> str:
    """Wrap knowledge in the special tokens, optionally suffixed with a confidence token."""
    if not knowledge:
        raise ValueError("knowledge must be non-empty")
    if open_token in knowledge or close_token in knowledge:
        raise ValueError("reserved token in knowledge")
    line = f"{open_token} {knowledge} {close_token}"
    if confidence is not None:
        if not CONFIDENCE_MIN <= confidence <= CONFIDENCE_MAX:
            raise ValueError(f"confidence must be in [0, 10], got {confidence}")
        line += f" __conf-{confidence}__"
    return line


@dataclass(frozen=True)
class K2RConfig:
    """Binding of the two pipeline steps plus serialization and decoding knobs.

    In shared mode a single backend instance serves both steps; the task is
    then selected purely by the input format (a knowledge span present means
    "respond", absent means "predict knowledge").
    """

    knowledge_backend: Backend | BackendDescriptor
    response_backend: Backend | BackendDescriptor | None = None
    shared: bool = False
    knowledge_open_token: str = DEFAULT_KNOWLEDGE_OPEN
    knowledge_close_token: str = DEFAULT_KNOWLEDGE_CLOSE
    confidence: int | None = None
    response_beam_size: int = 3
    filter_beams: bool = False
    filtered_beam_size: int = 30

    def __post_init__(self) -> None:
        if not self.knowledge_open_token or not self.knowledge_close_token:
            raise ValueError("knowledge tokens must be non-empty")
        if self.knowledge_open_token == self.knowledge_close_token:
            raise ValueError("knowledge tokens must be distinct")
        if self.confidence is not None and not CONFIDENCE_MIN <= self.confidence <= CONFIDENCE_MAX:
            raise ValueError(f"confidence must be in [0, 10], got {self.confidence}")
        if self.response_beam_size < 1:
            raise ValueError("response_beam_size must be >= 1")
        if self.filtered_beam_size < self.response_beam_size:
            raise ValueError("filtered_beam_size must be >= response_beam_size")
        knowledge = build_backend(self.knowledge_backend)
        object.__setattr__(self, "knowledge_backend", knowledge)
        if self.shared:
            if self.response_backend is not None and self.response_backend is not knowledge:
                raise ValueError("shared mode binds one backend to both steps; do not pass a second")
            object.__setattr__(self, "response_backend", knowledge)
        else:
            if self.response_backend is None:
                raise ValueError("response_backend is required unless shared=True")
            object.__setattr__(self, "response_backend", build_backend(self.response_backend))

    @property
    def reserved_tokens(self) -> tuple[str, str]:
        return (self.knowledge_open_token, self.knowledge_close_token)


@dataclass(frozen=True)
class PipelineTrace:
    """Full record of one pipeline run; the interpretability artifact.

    knowledge_used is the injected knowledge when present, otherwise the
    prediction; response is always beams[selected_index].text, and
    selected_index is 0 unless the beam filter was applied and hit.
    """

    serialized_knowledge_input: str
    predicted_knowledge: str
    injected_knowledge: str | None
    knowledge_used: str
    serialized_response_input: str
    knowledge_beams: tuple[Beam, ...]
    beams: tuple[Beam, ...]
    selected_index: int
    response: str
    filter_applied: bool
    filter_hit: bool

    def to_dict(self) -> dict:
        return {
            "serialized_knowledge_input": self.serialized_knowledge_input,
            "predicted_knowledge": self.predicted_knowledge,
            "injected_knowledge": self.injected_knowledge,
            "knowledge_used": self.knowledge_used,
            "serialized_response_input": self.serialized_response_input,
            "knowledge_beams": [{"text": b.text, "score": b.score} for b in self.knowledge_beams],
            "beams": [{"text": b.text, "score": b.score} for b in self.beams],
            "selected_index": self.selected_index,
            "response": self.response,
            "filter_applied": self.filter_applied,
            "filter_hit": self.filter_hit,
        }


def predict_knowledge(
    config: K2RConfig, episode: DialogueEpisode, seed: int
) -> tuple[str, list[Beam]]:
    """Run the knowledge step: top beam text of the knowledge backend on the context."""
    context = serialize_context(episode, reserved=config.reserved_tokens)
    request = GenerationRequest(
        input_text=context,
        beam_size=config.response_beam_size,
        n_best=1,
        seed=derive_seed(seed, "knowledge"),
    )
    try:
        beams = config.knowledge_backend.generate(request)
    except BackendError as exc:
        raise PipelineStepError("knowledge", exc) from exc
    if not beams:
        raise PipelineStepError("knowledge", BackendError("backend returned no beams"))
    return beams[0].text, beams


def serialize_response_input(config: K2RConfig, episode: DialogueEpisode, knowledge: str) -> str:
    """Render the response-task input: context, newline, knowledge line (bit-exact)."""
    context = serialize_context(episode, reserved=config.reserved_tokens)
    line = render_knowledge_line(
        knowledge,
        open_token=config.knowledge_open_token,
        close_token=config.knowledge_close_token,
        confidence=config.confidence,
    )
    return context + "\n" + line


def filter_select(beams: Sequence[Beam], knowledge: str) -> tuple[int, bool]:
    """Pick the first beam containing the knowledge as a contiguous token run.

    Falls back to index 0 (and filter_hit False) when no beam contains it, or
    when the knowledge normalizes to no tokens at all. Never raises.
    """
    needle = normalize(knowledge)
    if not needle:
        logger.warning("knowledge %r normalizes to no tokens; beam filter cannot match", knowledge)
        return 0, False
    for index, beam in enumerate(beams):
        if contains_tokens(normalize(beam.text), needle):
            return index, True
    return 0, False


def respond(
    config: K2RConfig,
    episode: DialogueEpisode,
    seed: int,
    injected_knowledge: str | None = None,
) -> PipelineTrace:
    """Run the full pipeline for one episode and return its trace.

    When injected_knowledge is given the knowledge backend is never invoked;
    the injected string goes between the special tokens verbatim.
    """
    context = serialize_context(episode, reserved=config.reserved_tokens)
    if injected_knowledge is not None:
        predicted, knowledge_beams = "", []
        knowledge_used = injected_knowledge
    else:
        predicted, knowledge_beams = predict_knowledge(config, episode, seed)
        knowledge_used = predicted

    response_input = serialize_response_input(config, episode, knowledge_used)
    beam_size = config.filtered_beam_size if config.filter_beams else config.response_beam_size
    request = GenerationRequest(
        input_text=response_input,
        beam_size=beam_size,
        n_best=beam_size,
        seed=derive_seed(seed, "response"),
    )
    try:
        beams = config.response_backend.generate(request)
    except BackendError as exc:
        raise PipelineStepError("response", exc) from exc
    if not beams:
        raise PipelineStepError("response", BackendError("backend returned no beams"))

    if config.filter_beams:
        selected, hit = filter_select(beams, knowledge_used)
        applied = True
    else:
        selected, hit, applied = 0, False, False

    return PipelineTrace(
        serialized_knowledge_input=context,
        predicted_knowledge=predicted,
        injected_knowledge=injected_knowledge,
        knowledge_used=knowledge_used,
        serialized_response_input=response_input,
        knowledge_beams=tuple(knowledge_beams),
        beams=tuple(beams),
        selected_index=selected,
        response=beams[selected].text,
        filter_applied=applied,
        filter_hit=hit,
    )


def run_episode(
    config: K2RConfig,
    episode: DialogueEpisode,
    seed: int,
    rarity: RarityTable | None = None,
) -> tuple[PipelineTrace, dict]:
    """Respond to one episode and score it against whatever references it carries.

    seed is the run-level seed; the per-example seed is derived from it and the
    example_id, so parallel evaluation order never changes results. The metric
    row is empty (id only) when the episode has no reference fields at all.
    """
    trace = respond(config, episode, derive_seed(seed, episode.example_id))
    row: dict = {"example_id": episode.example_id}
    has_reference = (
        episode.gold_response is not None
        or episode.gold_knowledge is not None
        or bool(episode.gold_answers)
    )
    if not has_reference:
        return trace, row

    response_tokens = normalize(trace.response)
    if episode.gold_response is not None:
        gold_tokens = normalize(episode.gold_response)
        row["f1"] = unigram_f1(response_tokens, gold_tokens)
        row["bleu4"] = bleu4(response_tokens, gold_tokens)
        row["rougeL"] = rouge_l(response_tokens, gold_tokens)
        if rarity is not None:
            row["rf1"] = rare_f1(response_tokens, gold_tokens, rarity)
    if episode.gold_knowledge is not None:
        row["kf1"] = knowledge_f1(response_tokens, normalize(episode.gold_knowledge))
    row["pkf1"] = knowledge_f1(response_tokens, normalize(trace.knowledge_used))
    if episode.gold_answers:
        try:
            row["ap"] = answer_present(trace.response, episode.gold_answers)
        except ValueError:
            pass  # no usable answer tokens; metric skipped for this example
    try:
        row["gap"] = answer_present(trace.response, [trace.knowledge_used])
    except ValueError:
        pass
    return trace, row


def config_with_confidence(config: K2RConfig, confidence: int | None) -> K2RConfig:
    """Copy of config with a different confidence token (None clears it)."""
    return dataclasses.replace(config, confidence=confidence)
