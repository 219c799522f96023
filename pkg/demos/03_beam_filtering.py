"""Beam filtering: push the predicted knowledge into the actual response.

A response model often "knows" the right answer somewhere in its beam list but
ranks a generic reply first. Widening the beam and selecting the first beam
that contains the predicted knowledge string lifts the generated-answer-
presence (GAP) rate dramatically without touching the model.

    python3 demos/03_beam_filtering.py
"""

from k2r import Beam, DialogueEpisode, K2RConfig, Turn, run_episode
from k2r.backends import Backend, knowledge_span


class AnswerStub(Backend):
    """Knowledge stub: always proposes 'fact <n>' for 'question <n>'."""

    def generate(self, request):
        index = request.input_text.rsplit(" ", 1)[-1].rstrip("?")
        return [Beam(f"fact {index}", 0.0)][: request.n_best]


class BuriedAnswerStub(Backend):
    """Response stub that buries the knowledge-bearing beam below the top ranks."""

    def generate(self, request):
        knowledge = knowledge_span(request.input_text) or "fact 0"
        index = int(knowledge.split()[-1])
        buried_rank = (index * 7) % 30
        beams = []
        for position in range(request.beam_size):
            if position == buried_rank:
                beams.append(Beam(f"I believe it is {knowledge}.", float(-position)))
            else:
                beams.append(Beam(f"That is a great question ({position}).", float(-position)))
        return beams[: request.n_best]


episodes = [
    DialogueEpisode(f"q{i}", (Turn("user", f"what is question {i}?"),), gold_answers=(f"fact {i}",))
    for i in range(50)
]


def gap_rate(filter_beams: bool) -> float:
    config = K2RConfig(
        knowledge_backend=AnswerStub(),
        response_backend=BuriedAnswerStub(),
        response_beam_size=3,
        filter_beams=filter_beams,
        filtered_beam_size=30,
    )
    rows = [run_episode(config, ep, seed=0)[1] for ep in episodes]
    return sum(row["gap"] for row in rows) / len(rows)


print("GAP, top-3 beam, no filter :", gap_rate(False))
print("GAP, 30 beams + filtering  :", gap_rate(True))
