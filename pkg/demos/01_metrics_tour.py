"""Tour of the metric suite: normalization, F1 variants, BLEU-4, ROUGE-L, AP.

Run from the repo root after `pip install -e .`:

    python3 demos/01_metrics_tour.py
"""

from k2r import (
    answer_present,
    bleu4,
    build_rarity_table,
    knowledge_f1,
    normalize,
    rare_f1,
    rouge_l,
    unigram_f1,
)

# Normalization lowercases, strips punctuation, and drops articles. All the
# metrics below operate on these token lists, so one convention rules them all.
sentence = "The last time the Dallas Cowboys won a playoff game was in 2014."
print("raw:   ", sentence)
print("tokens:", normalize(sentence))
print()

# Unigram F1 is the workhorse: bag-of-words overlap between two token lists.
prediction = normalize("Yes, they are used for sled racing.")
gold = normalize("Sled dogs, including Huskies, are used for transportation in arctic areas.")
print("F1(prediction, gold response)  =", round(unigram_f1(prediction, gold), 4))

# Knowledge F1 is the same function pointed at a knowledge sentence instead of
# the gold response; it measures how much of the knowledge made it into the
# reply (hallucinated replies score low).
knowledge = normalize("Huskies are used in sled dog racing.")
print("KF1(prediction, knowledge)     =", round(knowledge_f1(prediction, knowledge), 4))

# Rare F1 only counts infrequent words. Build the rarity table from the
# evaluation set's references; everything inside the cutoff mass is "frequent"
# and gets deleted before scoring.
references = [
    "Sled dogs, including Huskies, are used for transportation in arctic areas.",
    "Yes, they are used for sled dog racing.",
    "They are working dogs in the north.",
]
table = build_rarity_table(references, cutoff_mass=0.5)
print("frequent words:", sorted(table.frequent_set))
print("RF1(prediction, gold response) =", round(rare_f1(prediction, gold, table), 4))
print()

# BLEU-4 and ROUGE-L round out the reference-based suite.
print("BLEU-4  =", round(bleu4(prediction, gold), 6))
print("ROUGE-L =", round(rouge_l(prediction, gold), 4))
print()

# Answer presence (AP) is the QA-style check: does the gold answer occur in
# the response as a contiguous token run? Token matching means "2014" does not
# accidentally match "20145".
response = "The last time the Dallas Cowboys won a playoff game was in 2014."
print("AP('...was in 2014.', ['2014'])    =", answer_present(response, ["2014"]))
print("AP('year 20145',      ['2014'])    =", answer_present("year 20145", ["2014"]))
