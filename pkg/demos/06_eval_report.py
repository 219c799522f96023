"""Whole-dataset evaluation and a confidence sweep through the harness API.

Equivalent CLI invocations:

    k2r eval  --dataset demos/output/eval-dataset.jsonl --report demos/output/report.json \
              --knowledge-backend corpus:demos/output/eval-corpus.txt \
              --response-backend 'template:I think: {k}' --seed 42
    k2r sweep --levels 0,2,6,10 ... (same flags)

    python3 demos/06_eval_report.py
"""

import json
from pathlib import Path

from k2r import DialogueEpisode, EvalRunConfig, Turn, confidence_sweep, eval_task, write_episodes

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

SENTENCES = [
    "Sled dogs were important for transportation in arctic areas.",
    "Huskies are used in sled dog racing.",
    "The last time the Dallas Cowboys won a playoff game was in 2014.",
    "Blue is one of the three primary colours.",
]

corpus = OUT / "eval-corpus.txt"
corpus.write_text("\n".join(SENTENCES) + "\n", encoding="utf-8")

episodes = []
for i in range(40):
    sentence = SENTENCES[i % len(SENTENCES)]
    episodes.append(
        DialogueEpisode(
            example_id=f"eval-{i:03d}",
            turns=(Turn("user", f"tell me about this: {sentence}"),),
            gold_response=f"I think: {sentence}",
            gold_answers=(sentence.split()[0],),
        )
    )
dataset = OUT / "eval-dataset.jsonl"
write_episodes(dataset, episodes)

run = EvalRunConfig(
    dataset=str(dataset),
    report=str(OUT / "report.json"),
    knowledge_backend=f"corpus:{corpus}",
    response_backend="template:I think: {k}",
    seed=42,
)

report = eval_task(run)
print("aggregate metrics:")
for name, value in sorted(report.aggregate.items()):
    print(f"  {name:7s} {value:.4f}")

# The sweep re-runs the evaluation at fixed confidence tokens 0/2/6/10. With a
# trained backend the PKF1 column climbs with the level; the toy template
# backend ignores the token, so here the levels only differ in their config.
sweep_run = EvalRunConfig(**{**run.echo(), "report": str(OUT / "sweep.json")})
confidence_sweep(sweep_run, [0, 2, 6, 10])
combined = json.loads((OUT / "sweep.json").read_text(encoding="utf-8"))
print("\nsweep levels written:", sorted(combined["levels"]))
print("see", OUT / "sweep-conf6.json", "for one full per-level report")
