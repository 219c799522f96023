"""Building training JSONL files: supervised, unsupervised, confidence-corrupted.

    python3 demos/04_training_data.py

Files land in demos/output/.
"""

import json
from pathlib import Path

from k2r import DialogueEpisode, Turn, build_confidence_file, build_supervised_file, build_unsupervised_file
from k2r.databuild import extract_phrases

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

episodes = [
    DialogueEpisode(
        example_id="wow-husky",
        topic="Husky",
        turns=(
            Turn("Apprentice", "I just got a husky puppy"),
            Turn("Apprentice", "I guess in the north they are working dogs huh?"),
        ),
        gold_knowledge="Sled dogs were important for transportation in arctic areas.",
        gold_response="Sled dogs, including Huskies, are used for transportation in arctic areas.",
    ),
    DialogueEpisode(
        example_id="light-farmer",
        turns=(Turn("Chameleon", "What does Farmer love about the top of a tall tree?"),),
        gold_knowledge="the view",
        gold_response="I love the view, it's so peaceful here",
    ),
]


def show(path):
    print(f"--- {path.name}")
    for line in path.read_text(encoding="utf-8").splitlines():
        row = json.loads(line)
        print(f"  [{row['task']}] target={row['target']!r}")
        print(f"    input: {row['input'].splitlines()[-1]}")


# Supervised: gold knowledge annotations exist, so the knowledge model learns
# context -> knowledge and the response model learns context+knowledge -> reply.
supervised = OUT / "supervised.jsonl"
build_supervised_file(episodes, supervised)
show(supervised)

# Unsupervised: no knowledge labels. A chunk of the response itself becomes
# the knowledge target, sampled deterministically per (seed, example).
print("\nchunks of the farmer reply:", [s.surface for s in extract_phrases(episodes[1].gold_response)])
unsupervised = OUT / "unsupervised.jsonl"
build_unsupervised_file(episodes, unsupervised, seed=0)
show(unsupervised)

# Confidence corruption: each example's knowledge is replaced by a wrong one
# with probability 1-p, and the input carries the token __conf-round(10p)__.
# A model trained this way can later be steered: __conf-0__ means "ignore the
# knowledge", __conf-10__ means "trust it absolutely".
confidence = OUT / "confidence.jsonl"
build_confidence_file(episodes, confidence, seed=0)
show(confidence)
