"""Forging a QA dataset out of plain dialogue episodes.

Pipeline per episode: summarize -> pull answer candidates from the summary ->
generate a question per candidate -> keep only questions a QA backend answers
with that candidate. Kept records become QA episodes (truncated source turns
plus the question), and every attempt is logged in an audit record.

    python3 demos/05_forge_qa.py
"""

from collections import Counter

from k2r import Beam, DialogueEpisode, Turn, forge_dataset
from k2r.backends import Backend, BackendDescriptor


class LenientQA(Backend):
    """Stub QA model: answers 'What about X?' with X unless X is capitalized."""

    def generate(self, request):
        question = request.input_text.splitlines()[0].partition(": ")[2]
        candidate = question.removeprefix("What about ").removesuffix("?")
        if candidate[:1].isupper():
            return [Beam("no idea", 0.0)]
        return [Beam(candidate, 0.0)]


episodes = [
    DialogueEpisode(
        example_id=f"light-{i}",
        turns=(
            Turn("Farmer", "The view is as mesmerizing as it always was"),
            Turn("Chameleon", "How are you today, farmer?"),
            Turn("Farmer", "I'm fine, how about yourself?"),
        ),
    )
    for i in range(3)
]

result = forge_dataset(
    episodes,
    summarizer=BackendDescriptor("template", {"template": "Farmer admires the view from a tall tree"}),
    qgen=BackendDescriptor("template", {"template": "What about {k}?"}),
    qa=LenientQA(),
    seed=0,
)

print(f"{len(result.records)} candidates audited, {len(result.episodes)} QA episodes kept")
print("drop reasons:", dict(Counter(r.drop_reason for r in result.records if not r.kept)))
print()
for record in result.records[:4]:
    status = "kept" if record.kept else f"dropped ({record.drop_reason})"
    print(f"  candidate {record.candidate!r}: {record.question!r} -> {record.qa_answer!r} [{status}]")
print()
for episode in result.episodes[:2]:
    print(f"QA episode {episode.example_id}: answer={episode.gold_answers}")
    for turn in episode.turns:
        print(f"  {turn.speaker}: {turn.text}")
