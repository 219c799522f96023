"""QA dataset forging: episode -> summary -> candidates -> questions -> QA filter.

Each source episode is summarized, answer candidates are pulled from the
summary (phrase chunks plus capitalized runs), a question is generated per
candidate, and a QA backend keeps only questions it can answer with that
candidate. Kept records become QA episodes: the source turns truncated at a
seeded point with the generated question appended as the last utterance.
"""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .backends import Backend, BackendDescriptor, BackendError, GenerationRequest, build_backend
from .databuild import DEFAULT_MAX_PHRASE_LEN, STOPWORDS, _phrase_spans_with_offsets, word_tokens
from .metrics import normalize
from .pipeline import DialogueEpisode, Turn, derive_seed, serialize_context

DROP_QA_MISMATCH = "qa-mismatch"
DROP_EMPTY_CANDIDATE = "empty-candidate"
DROP_GENERATION_FAILURE = "generation-failure"
DROP_REASONS = (DROP_QA_MISMATCH, DROP_EMPTY_CANDIDATE, DROP_GENERATION_FAILURE)


@dataclass(frozen=True)
class ForgeRecord:
    """Audit row for one (episode, candidate) attempt."""

    source_example_id: str
    summary: str
    candidate: str
    question: str
    qa_answer: str
    kept: bool
    drop_reason: str | None = None

    def __post_init__(self) -> None:
        if self.kept and self.drop_reason is not None:
            raise ValueError("kept records carry no drop reason")
        if not self.kept and self.drop_reason not in DROP_REASONS:
            raise ValueError(f"dropped records need a drop reason, got {self.drop_reason!r}")
        if self.kept and normalize(self.qa_answer) != normalize(self.candidate):
            raise ValueError("kept records require qa_answer to match the candidate")

    def to_dict(self) -> dict:
        return {
            "source_example_id": self.source_example_id,
            "summary": self.summary,
            "candidate": self.candidate,
            "question": self.question,
            "qa_answer": self.qa_answer,
            "kept": self.kept,
            "drop_reason": self.drop_reason,
        }


def _top_beam(backend: Backend, input_text: str, seed: int) -> str:
    beams = backend.generate(GenerationRequest(input_text=input_text, beam_size=3, n_best=1, seed=seed))
    if not beams:
        raise BackendError("backend returned no beams")
    return beams[0].text


def summarize(episode: DialogueEpisode, summarizer: Backend | BackendDescriptor, seed: int = 0) -> str:
    """Top beam of the summarizer on the serialized episode context."""
    backend = build_backend(summarizer)
    return _top_beam(backend, serialize_context(episode), derive_seed(seed, f"{episode.example_id}/summary"))


def _capitalized_runs(text: str) -> list[tuple[str, int]]:
    # Proper-noun heuristic: maximal runs of capitalized, non-stopword tokens.
    runs: list[tuple[str, int]] = []
    current: list = []
    for tok in word_tokens(text):
        if tok.raw[:1].isupper() and tok.lower not in STOPWORDS:
            current.append(tok)
        else:
            if current:
                runs.append((text[current[0].start : current[-1].end], current[0].start))
                current = []
    if current:
        runs.append((text[current[0].start : current[-1].end], current[0].start))
    return runs


def extract_candidates(summary: str, max_phrase_len: int = DEFAULT_MAX_PHRASE_LEN) -> list[str]:
    """Answer candidates: phrase chunks plus capitalized runs, deduplicated.

    Duplicates are collapsed by normalized form, keeping the first occurrence;
    order follows position in the summary.
    """
    items: list[tuple[int, int, str]] = []
    for span, char_start in _phrase_spans_with_offsets(summary, max_phrase_len):
        items.append((char_start, 0, span.surface))
    for surface, char_start in _capitalized_runs(summary):
        items.append((char_start, 1, surface))
    items.sort()
    candidates: list[str] = []
    seen: set[tuple[str, ...]] = set()
    for _, _, surface in items:
        key = tuple(normalize(surface))
        if key in seen:
            continue
        seen.add(key)
        candidates.append(surface)
    return candidates


def generate_question(
    summary: str, candidate: str, qgen: Backend | BackendDescriptor, seed: int = 0
) -> str:
    """Ask the question-generation backend for a question answered by the candidate."""
    if not candidate:
        raise ValueError("candidate must be non-empty")
    backend = build_backend(qgen)
    return _top_beam(backend, f"answer: {candidate}\ncontext: {summary}", seed)


def _qa_answer(summary: str, question: str, qa: Backend | BackendDescriptor, seed: int = 0) -> str:
    backend = build_backend(qa)
    return _top_beam(backend, f"question: {question}\ncontext: {summary}", seed)


def qa_filter(
    summary: str, question: str, candidate: str, qa: Backend | BackendDescriptor, seed: int = 0
) -> bool:
    """Keep the question iff the QA backend's answer matches the candidate (normalized)."""
    return normalize(_qa_answer(summary, question, qa, seed)) == normalize(candidate)


@dataclass
class ForgeResult:
    """Everything a forge run produced: QA episodes, audit records, failure counts."""

    episodes: list[DialogueEpisode] = field(default_factory=list)
    records: list[ForgeRecord] = field(default_factory=list)
    failures: Counter = field(default_factory=Counter)


def _question_speaker(episode: DialogueEpisode, cut: int) -> str:
    # Prefer the speaker who actually spoke next; otherwise the first other
    # speaker in the episode; degenerate single-speaker episodes reuse it.
    if cut < len(episode.turns):
        return episode.turns[cut].speaker
    last = episode.turns[cut - 1].speaker
    for turn in episode.turns:
        if turn.speaker != last:
            return turn.speaker
    return last


def forge_dataset(
    episodes: Sequence[DialogueEpisode],
    summarizer: Backend | BackendDescriptor,
    qgen: Backend | BackendDescriptor,
    qa: Backend | BackendDescriptor,
    seed: int = 0,
    max_phrase_len: int = DEFAULT_MAX_PHRASE_LEN,
) -> ForgeResult:
    """Run the full forging pipeline over the episodes.

    Every candidate yields exactly one audit record (kept or dropped), so kept
    plus per-reason drop counts always partition the candidate total. Episodes
    whose summarization fails are counted and skipped. Each kept record emits
    a QA episode: source turns truncated at a point drawn uniformly from
    [1, len(turns)] by an RNG keyed on (seed, example_id, candidate index),
    with the generated question appended and gold_answers = [candidate].
    """
    summarizer = build_backend(summarizer)
    qgen = build_backend(qgen)
    qa = build_backend(qa)
    result = ForgeResult()
    for episode in sorted(episodes, key=lambda e: e.example_id):
        try:
            summary = summarize(episode, summarizer, seed)
        except BackendError:
            result.failures["summary-failure"] += 1
            continue
        for index, candidate in enumerate(extract_candidates(summary, max_phrase_len)):
            record = _forge_candidate(episode, summary, candidate, index, qgen, qa, seed)
            result.records.append(record)
            if record.kept:
                result.episodes.append(_qa_episode(episode, record, index, seed))
    return result


def _forge_candidate(
    episode: DialogueEpisode,
    summary: str,
    candidate: str,
    index: int,
    qgen: Backend,
    qa: Backend,
    seed: int,
) -> ForgeRecord:
    base = dict(source_example_id=episode.example_id, summary=summary, candidate=candidate)
    if not normalize(candidate):
        return ForgeRecord(**base, question="", qa_answer="", kept=False, drop_reason=DROP_EMPTY_CANDIDATE)
    step_seed = derive_seed(seed, f"{episode.example_id}/candidate/{index}")
    try:
        question = generate_question(summary, candidate, qgen, step_seed)
    except BackendError:
        return ForgeRecord(**base, question="", qa_answer="", kept=False, drop_reason=DROP_GENERATION_FAILURE)
    try:
        answer = _qa_answer(summary, question, qa, step_seed)
    except BackendError:
        return ForgeRecord(
            **base, question=question, qa_answer="", kept=False, drop_reason=DROP_GENERATION_FAILURE
        )
    kept = normalize(answer) == normalize(candidate)
    return ForgeRecord(
        **base,
        question=question,
        qa_answer=answer,
        kept=kept,
        drop_reason=None if kept else DROP_QA_MISMATCH,
    )


def _qa_episode(
    episode: DialogueEpisode, record: ForgeRecord, index: int, seed: int
) -> DialogueEpisode:
    rng = random.Random(derive_seed(seed, f"{episode.example_id}/truncate/{index}"))
    cut = rng.randint(1, len(episode.turns))
    question_turn = Turn(speaker=_question_speaker(episode, cut), text=record.question)
    return DialogueEpisode(
        example_id=f"{episode.example_id}-q{index}",
        turns=episode.turns[:cut] + (question_turn,),
        topic=episode.topic,
        personas=episode.personas,
        gold_answers=(record.candidate,),
    )


def write_audit(path: str | Path, records: Iterable[ForgeRecord]) -> None:
    """Write the audit log as JSONL, one ForgeRecord per line."""
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
