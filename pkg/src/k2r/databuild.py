"""Builders that emit training files for external seq2seq trainers.

Three flavors: supervised pairs from gold knowledge annotations, unsupervised
pairs whose knowledge targets are noun-phrase-like chunks sampled from the
response, and confidence-conditioned examples where the gold knowledge is
probabilistically replaced by wrong knowledge and the input carries an integer
confidence token describing how trustworthy the knowledge is.
"""

from __future__ import annotations

import json
import math
import random
import string
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .backends import DEFAULT_KNOWLEDGE_CLOSE, DEFAULT_KNOWLEDGE_OPEN
from .metrics import ARTICLES, PUNCTUATION
from .pipeline import (
    DialogueEpisode,
    derive_seed,
    render_knowledge_line,
    serialize_context,
)

TASK_KNOWLEDGE = "knowledge"
TASK_RESPONSE = "response"

DEFAULT_MAX_PHRASE_LEN = 4

# Function words that never belong inside a phrase chunk. Contraction
# fragments (s, t, m, ...) appear because normalization splits on apostrophes.
STOPWORDS = frozenset(
    """
    a an the this that these those some any each every all both few many much
    more most other another such own same so too very just only quite rather
    i you he she it we they me him her us them my your his its our their mine
    yours hers ours theirs myself yourself himself herself itself ourselves
    themselves yourselves who whom whose which what
    of in on at by for with about against between among into through during
    before after above below to from up down out off over under again further
    once and but or nor if because as until while than then
    am is are was were be been being do does did doing have has had having
    will would shall should can could may might must
    not now here there when where why how also ever never always yes no yeah
    oh okay ok please hi hello hey huh um uh
    s t m re ve ll d don doesn didn isn aren wasn weren hasn haven hadn
    wouldn shouldn couldn won mustn needn ain
    """.split()
)

# Common verbs (closed list, inflections spelled out) used as chunk delimiters.
CLOSED_VERBS = frozenset(
    """
    go goes went gone going get gets got gotten getting make makes made making
    know knows knew known knowing think thinks thought thinking see sees saw
    seen seeing take takes took taken taking come comes came coming want wants
    wanted wanting use uses used using find finds found finding give gives
    gave given giving tell tells told telling say says said saying work works
    worked working seem seems seemed seeming feel feels felt feeling try tries
    tried trying leave leaves left leaving call calls called calling love
    loves loved loving like likes liked liking need needs needed needing look
    looks looked looking admire admires admired admiring wish wishes wished
    hope hopes hoped guess guesses guessed sound sounds sounded mean means
    meant thank thanks thanked ask asks asked asking
    """.split()
)

_SEPARATORS = frozenset(string.whitespace) | PUNCTUATION


class SkipExample(Exception):
    """An episode cannot yield this kind of training example; carries the reason."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class WordToken(NamedTuple):
    start: int  # char offset into the raw text
    end: int
    raw: str
    lower: str


def word_tokens(text: str) -> list[WordToken]:
    """Split raw text into word tokens, keeping character offsets and case."""
    tokens = []
    i, n = 0, len(text)
    while i < n:
        if text[i] in _SEPARATORS:
            i += 1
            continue
        j = i
        while j < n and text[j] not in _SEPARATORS:
            j += 1
        raw = text[i:j]
        tokens.append(WordToken(i, j, raw, raw.lower()))
        i = j
    return tokens


@dataclass(frozen=True)
class PhraseSpan:
    """A chunked phrase: token offsets into the normalized text plus the raw surface."""

    start: int
    end: int
    surface: str

    def __post_init__(self) -> None:
        if not 0 <= self.start < self.end:
            raise ValueError(f"bad span offsets [{self.start}, {self.end})")
        if not self.surface:
            raise ValueError("span surface must be non-empty")

    def __len__(self) -> int:
        return self.end - self.start


def _phrase_spans_with_offsets(
    text: str, max_phrase_len: int = DEFAULT_MAX_PHRASE_LEN
) -> list[tuple[PhraseSpan, int]]:
    """Chunk spans paired with their raw character start, in text order.

    Candidate spans are maximal runs of non-stopword tokens, split at
    closed-list verbs and truncated to max_phrase_len tokens. Offsets index
    the normalized token list (articles removed), where chunk tokens always
    survive because stopwords cover the articles.
    """
    tokens = word_tokens(text)
    norm_index: list[int | None] = []
    n = 0
    for tok in tokens:
        if tok.lower in ARTICLES:
            norm_index.append(None)
        else:
            norm_index.append(n)
            n += 1

    spans: list[tuple[PhraseSpan, int]] = []
    run: list[int] = []

    def flush() -> None:
        if not run:
            return
        kept = run[: max_phrase_len]
        first, last = tokens[kept[0]], tokens[kept[-1]]
        span = PhraseSpan(
            start=norm_index[kept[0]],
            end=norm_index[kept[-1]] + 1,
            surface=text[first.start : last.end],
        )
        spans.append((span, first.start))
        run.clear()

    for i, tok in enumerate(tokens):
        if tok.lower in STOPWORDS or tok.lower in CLOSED_VERBS:
            flush()
        else:
            run.append(i)
    flush()
    return spans


def extract_phrases(response: str, max_phrase_len: int = DEFAULT_MAX_PHRASE_LEN) -> list[PhraseSpan]:
    """Heuristic noun-phrase chunker; deterministic, ordered by start offset."""
    return [span for span, _ in _phrase_spans_with_offsets(response, max_phrase_len)]


@dataclass(frozen=True)
class TrainingExample:
    """One serialized training pair for an external trainer."""

    input: str
    target: str
    task: str
    confidence_token: int | None = None
    corrupted: bool = False

    def __post_init__(self) -> None:
        if self.task not in (TASK_KNOWLEDGE, TASK_RESPONSE):
            raise ValueError(f"unknown task {self.task!r}")
        if self.confidence_token is not None and not 0 <= self.confidence_token <= 10:
            raise ValueError(f"confidence_token must be in [0, 10], got {self.confidence_token}")
        if self.corrupted and (self.task != TASK_RESPONSE or self.confidence_token is None):
            raise ValueError("corrupted examples must be response-task with a confidence token")

    def to_dict(self) -> dict:
        return {
            "input": self.input,
            "target": self.target,
            "task": self.task,
            "confidence_token": self.confidence_token,
            "corrupted": self.corrupted,
        }


def make_supervised_pair(
    episode: DialogueEpisode,
    open_token: str = DEFAULT_KNOWLEDGE_OPEN,
    close_token: str = DEFAULT_KNOWLEDGE_CLOSE,
) -> tuple[TrainingExample, TrainingExample]:
    """Supervised pair: context -> gold knowledge, context+knowledge -> gold response."""
    if episode.gold_knowledge is None:
        raise SkipExample("missing-gold-knowledge")
    if episode.gold_response is None:
        raise SkipExample("missing-gold-response")
    context = serialize_context(episode, reserved=(open_token, close_token))
    knowledge_example = TrainingExample(context, episode.gold_knowledge, TASK_KNOWLEDGE)
    response_input = context + "\n" + render_knowledge_line(
        episode.gold_knowledge, open_token, close_token
    )
    response_example = TrainingExample(response_input, episode.gold_response, TASK_RESPONSE)
    return knowledge_example, response_example


def make_unsupervised_pair(
    episode: DialogueEpisode,
    seed: int,
    max_phrase_len: int = DEFAULT_MAX_PHRASE_LEN,
    open_token: str = DEFAULT_KNOWLEDGE_OPEN,
    close_token: str = DEFAULT_KNOWLEDGE_CLOSE,
) -> tuple[TrainingExample, TrainingExample]:
    """Unsupervised pair: the knowledge target is one chunk sampled from the response.

    The chunk is chosen uniformly by an RNG keyed on (seed, example_id), so the
    same episode always draws the same chunk for a given seed.
    """
    if episode.gold_response is None:
        raise SkipExample("missing-gold-response")
    spans = extract_phrases(episode.gold_response, max_phrase_len)
    if not spans:
        raise SkipExample("no-phrases")
    rng = random.Random(derive_seed(seed, episode.example_id))
    span = spans[rng.randrange(len(spans))]
    context = serialize_context(episode, reserved=(open_token, close_token))
    knowledge_example = TrainingExample(context, span.surface, TASK_KNOWLEDGE)
    response_input = context + "\n" + render_knowledge_line(span.surface, open_token, close_token)
    response_example = TrainingExample(response_input, episode.gold_response, TASK_RESPONSE)
    return knowledge_example, response_example


def _round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def _corrupt_given_p(
    episode: DialogueEpisode,
    wrong_pool: Sequence[str],
    p: float,
    rng: random.Random,
    open_token: str = DEFAULT_KNOWLEDGE_OPEN,
    close_token: str = DEFAULT_KNOWLEDGE_CLOSE,
) -> TrainingExample:
    # Corrupt with probability 1-p; the confidence token is round(10p), half-up.
    corrupted = rng.random() < 1.0 - p
    knowledge = rng.choice(list(wrong_pool)) if corrupted else episode.gold_knowledge
    token = _round_half_up(10.0 * p)
    context = serialize_context(episode, reserved=(open_token, close_token))
    response_input = context + "\n" + render_knowledge_line(
        knowledge, open_token, close_token, confidence=token
    )
    return TrainingExample(
        response_input,
        episode.gold_response,
        TASK_RESPONSE,
        confidence_token=token,
        corrupted=corrupted,
    )


def corrupt_with_confidence(
    episode: DialogueEpisode,
    wrong_pool: Sequence[str],
    seed: int,
    open_token: str = DEFAULT_KNOWLEDGE_OPEN,
    close_token: str = DEFAULT_KNOWLEDGE_CLOSE,
) -> TrainingExample:
    """Confidence-conditioned response example with probabilistic knowledge corruption.

    Draws p uniformly from [0, 1) per (seed, example_id); with probability 1-p
    the gold knowledge is replaced by a uniform draw from wrong_pool, and the
    input's knowledge line carries the integer confidence token round(10p).
    """
    if not wrong_pool:
        raise ValueError("empty wrong pool")
    if episode.gold_knowledge is None:
        raise SkipExample("missing-gold-knowledge")
    if episode.gold_response is None:
        raise SkipExample("missing-gold-response")
    if episode.gold_knowledge in wrong_pool:
        raise ValueError("wrong_pool must exclude the episode's own gold knowledge")
    rng = random.Random(derive_seed(seed, episode.example_id))
    p = rng.random()
    return _corrupt_given_p(episode, wrong_pool, p, rng, open_token, close_token)


@dataclass
class BuildStats:
    """Outcome of a whole-file build: emitted example count plus skip reasons."""

    written: int = 0
    skipped: Counter = field(default_factory=Counter)


def _write_jsonl(path: str | Path, examples: Iterable[TrainingExample]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for example in examples:
            handle.write(json.dumps(example.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
            count += 1
    return count


def build_supervised_file(
    episodes: Sequence[DialogueEpisode],
    out_path: str | Path,
    open_token: str = DEFAULT_KNOWLEDGE_OPEN,
    close_token: str = DEFAULT_KNOWLEDGE_CLOSE,
) -> BuildStats:
    """Emit supervised pairs as JSONL, ordered by example_id; skips are counted.

    Episodes whose text collides with the reserved tokens are skipped with
    reason "reserved-token" rather than aborting the build.
    """
    stats = BuildStats()
    examples: list[TrainingExample] = []
    for episode in sorted(episodes, key=lambda e: e.example_id):
        try:
            pair = make_supervised_pair(episode, open_token, close_token)
        except SkipExample as skip:
            stats.skipped[skip.reason] += 1
            continue
        except ValueError:
            stats.skipped["reserved-token"] += 1
            continue
        examples.extend(pair)
    stats.written = _write_jsonl(out_path, examples)
    return stats


def build_unsupervised_file(
    episodes: Sequence[DialogueEpisode],
    out_path: str | Path,
    seed: int,
    max_phrase_len: int = DEFAULT_MAX_PHRASE_LEN,
    open_token: str = DEFAULT_KNOWLEDGE_OPEN,
    close_token: str = DEFAULT_KNOWLEDGE_CLOSE,
) -> BuildStats:
    """Emit unsupervised pairs as JSONL; deterministic for a fixed (dataset, seed)."""
    stats = BuildStats()
    examples: list[TrainingExample] = []
    for episode in sorted(episodes, key=lambda e: e.example_id):
        try:
            pair = make_unsupervised_pair(episode, seed, max_phrase_len, open_token, close_token)
        except SkipExample as skip:
            stats.skipped[skip.reason] += 1
            continue
        except ValueError:
            stats.skipped["reserved-token"] += 1
            continue
        examples.extend(pair)
    stats.written = _write_jsonl(out_path, examples)
    return stats


def build_confidence_file(
    episodes: Sequence[DialogueEpisode],
    out_path: str | Path,
    seed: int,
    open_token: str = DEFAULT_KNOWLEDGE_OPEN,
    close_token: str = DEFAULT_KNOWLEDGE_CLOSE,
) -> BuildStats:
    """Emit confidence-corruption examples; the wrong pool for each episode is
    every distinct gold knowledge string in the dataset except its own."""
    stats = BuildStats()
    pool = sorted({ep.gold_knowledge for ep in episodes if ep.gold_knowledge is not None})
    examples: list[TrainingExample] = []
    for episode in sorted(episodes, key=lambda e: e.example_id):
        wrong_pool = [k for k in pool if k != episode.gold_knowledge]
        if episode.gold_knowledge is not None and not wrong_pool:
            stats.skipped["empty-wrong-pool"] += 1
            continue
        try:
            examples.append(
                corrupt_with_confidence(episode, wrong_pool, seed, open_token, close_token)
            )
        except SkipExample as skip:
            stats.skipped[skip.reason] += 1
        except ValueError:
            stats.skipped["reserved-token"] += 1
    stats.written = _write_jsonl(out_path, examples)
    return stats
