from __future__ import annotations

import pytest

from k2r.backends import Backend, BackendError, Beam
from k2r.pipeline import DialogueEpisode, Turn


class SpyBackend(Backend):
    """Wraps another backend, counting calls and recording requests."""

    def __init__(self, inner: Backend):
        self.inner = inner
        self.calls = 0
        self.requests = []

    def generate(self, request):
        self.calls += 1
        self.requests.append(request)
        return self.inner.generate(request)


class ScriptedBackend(Backend):
    """Maps exact input text to a fixed beam list; optional fallback text."""

    def __init__(self, script: dict[str, list[Beam]], default: str | None = None):
        self.script = script
        self.default = default

    def generate(self, request):
        if request.input_text in self.script:
            beams = self.script[request.input_text]
        elif self.default is not None:
            beams = [Beam(self.default, 0.0)]
        else:
            raise BackendError(f"no scripted output for input {request.input_text!r}")
        return beams[: request.n_best]


class RaisingBackend(Backend):
    """Always fails; for exercising error propagation."""

    def __init__(self, message: str = "boom"):
        self.message = message

    def generate(self, request):
        raise BackendError(self.message)


@pytest.fixture
def husky_episode() -> DialogueEpisode:
    return DialogueEpisode(
        example_id="wow-husky",
        topic="Husky",
        turns=(
            Turn("Apprentice", "I just got a husky puppy"),
            Turn(
                "Wizard",
                "It sounds cute! Huskies are known amongst sled-dogs for their fast pulling style.",
            ),
            Turn("Apprentice", "I guess in the north they are working dogs huh?"),
        ),
        gold_knowledge=(
            "Sled dogs were important for transportation in arctic areas, hauling supplies in "
            "areas that were inaccessible by other methods."
        ),
        gold_response="Sled dogs, including Huskies, are used for transportation in arctic areas.",
    )


@pytest.fixture
def cowboys_episode() -> DialogueEpisode:
    return DialogueEpisode(
        example_id="nq-cowboys",
        turns=(Turn("user", "When did the dallas cowboys win their last playoff game?"),),
        gold_answers=("2014",),
    )
