"""The two-step pipeline and human knowledge injection.

A knowledge backend proposes an intermediate knowledge string for the dialogue
context; a response backend then answers conditioned on context + knowledge.
Because the knowledge is an explicit string, a human can overwrite it and
watch the response change — the what-if loop.

    python3 demos/02_pipeline_injection.py
"""

from k2r import BackendDescriptor, DialogueEpisode, K2RConfig, Turn, respond

episode = DialogueEpisode(
    example_id="husky-demo",
    topic="Husky",
    turns=(
        Turn("Apprentice", "I just got a husky puppy"),
        Turn("Wizard", "It sounds cute! Huskies are known for their fast pulling style."),
        Turn("Apprentice", "I guess in the north they are working dogs huh?"),
    ),
)

# Desk-scale stand-ins: the knowledge step retrieves the best-overlapping
# sentence from a tiny corpus, the response step wraps it in a template.
config = K2RConfig(
    knowledge_backend=BackendDescriptor(
        "corpus-lookup",
        {
            "sentences": [
                "Sled dogs were important for transportation in arctic areas.",
                "Huskies are used in sled dog racing.",
                "Blue is one of the three primary colours.",
            ]
        },
    ),
    response_backend=BackendDescriptor("template", {"template": "Well, {k}"}),
)

trace = respond(config, episode, seed=0)
print("knowledge input :", trace.serialized_knowledge_input.replace("\n", " | "))
print("predicted       :", trace.predicted_knowledge)
print("response input  :", trace.serialized_response_input.splitlines()[-1])
print("response        :", trace.response)
print()

# Injection: supply the knowledge yourself. The knowledge backend is skipped
# entirely and the injected string lands between the special tokens verbatim.
for injected in ("in arctic regions huskies deliver hot beverages", "not so great"):
    trace = respond(config, episode, seed=0, injected_knowledge=injected)
    print(f"injected {injected!r}")
    print("  response:", trace.response)
    print("  knowledge backend consulted:", trace.predicted_knowledge != "")
