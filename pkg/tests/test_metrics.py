from __future__ import annotations

import json
import random

import pytest

from oracles import bleu4_oracle, f1_oracle, random_tokens, rouge_l_oracle
from k2r.metrics import (
    METRIC_COLUMNS,
    RarityTable,
    answer_present,
    bleu4,
    build_rarity_table,
    build_report,
    contains_tokens,
    knowledge_f1,
    normalize,
    rare_f1,
    rouge_l,
    unigram_f1,
)


class TestNormalize:
    def test_empty(self):
        assert normalize("") == []

    def test_articles_and_punctuation(self):
        assert normalize("The cat, the HAT!") == ["cat", "hat"]

    def test_full_sentence(self):
        assert normalize("The last time the Dallas Cowboys won a playoff game was in 2014.") == [
            "last", "time", "dallas", "cowboys", "won", "playoff", "game", "was", "in", "2014",
        ]

    def test_idempotent(self):
        rng = random.Random(7)
        raw_vocab = ["The", "cat's", "RAN!", "(fast)", "a", "2014", "so-so", "an", "it;"]
        for _ in range(200):
            text = " ".join(rng.choice(raw_vocab) for _ in range(rng.randint(0, 10)))
            tokens = normalize(text)
            assert normalize(" ".join(tokens)) == tokens


class TestUnigramF1:
    def test_identity(self):
        assert unigram_f1(["sled", "dog"], ["sled", "dog"]) == 1.0

    def test_disjoint(self):
        assert unigram_f1(["sled"], ["husky"]) == 0.0

    def test_empty_sides(self):
        assert unigram_f1([], ["x"]) == 0.0
        assert unigram_f1(["x"], []) == 0.0
        assert unigram_f1([], []) == 0.0

    def test_half_overlap(self):
        assert unigram_f1(normalize("the cat sat"), normalize("the cat ran")) == 0.5

    def test_symmetric(self):
        rng = random.Random(11)
        for _ in range(300):
            a, b = random_tokens(rng), random_tokens(rng)
            assert unigram_f1(a, b) == unigram_f1(b, a)

    def test_bounds_and_identity_property(self):
        rng = random.Random(13)
        for _ in range(300):
            a, b = random_tokens(rng), random_tokens(rng)
            assert 0.0 <= unigram_f1(a, b) <= 1.0
            if a:
                assert unigram_f1(a, a) == 1.0

    def test_matches_oracle(self):
        rng = random.Random(17)
        for _ in range(300):
            a, b = random_tokens(rng), random_tokens(rng)
            assert unigram_f1(a, b) == pytest.approx(f1_oracle(a, b), abs=1e-12)


class TestKnowledgeF1:
    def test_same_function(self):
        assert knowledge_f1 is unigram_f1

    def test_identical_behavior(self):
        rng = random.Random(19)
        for _ in range(1000):
            a, b = random_tokens(rng), random_tokens(rng)
            assert knowledge_f1(a, b) == unigram_f1(a, b)

    def test_verbatim_response(self):
        k = normalize("Huskies are used in sled dog racing.")
        assert knowledge_f1(k, k) == 1.0

    def test_empty_knowledge(self):
        assert knowledge_f1(normalize("some response"), []) == 0.0

    def test_husky_response(self):
        response = normalize("yes, they are used for sled racing.")
        knowledge = normalize("huskies are used in sled dog racing.")
        # overlap {are, used, sled, racing} over 7 tokens each side
        assert knowledge_f1(response, knowledge) == pytest.approx(4 / 7)
        assert knowledge_f1(response, knowledge) == f1_oracle(response, knowledge)


class TestRarityTable:
    def test_cutoff_half(self):
        refs = ["dog"] * 5 + ["cat"] * 3 + ["emu", "fox"]
        table = build_rarity_table(refs, 0.5)
        assert table.frequent_set == {"dog"}
        assert table.corpus_size == 10

    def test_cutoff_079(self):
        refs = ["dog"] * 5 + ["cat"] * 3 + ["emu", "fox"]
        assert build_rarity_table(refs, 0.79).frequent_set == {"dog", "cat"}

    def test_single_word_corpus(self):
        assert build_rarity_table(["husky"], 0.01).frequent_set == {"husky"}
        assert build_rarity_table(["husky"], 0.99).frequent_set == {"husky"}

    def test_tie_broken_lexicographically(self):
        refs = ["boat boat apple apple zebra"]
        assert build_rarity_table(refs, 0.5).frequent_set == {"apple", "boat"}

    def test_empty_corpus(self):
        with pytest.raises(ValueError, match="empty reference corpus"):
            build_rarity_table([], 0.5)
        with pytest.raises(ValueError, match="empty reference corpus"):
            build_rarity_table(["the a an", "..."], 0.5)

    def test_cutoff_bounds(self):
        for bad in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ValueError):
                build_rarity_table(["x"], bad)

    def test_minimality(self):
        rng = random.Random(23)
        vocab = ["w%d" % i for i in range(12)]
        for _ in range(100):
            refs = [" ".join(rng.choice(vocab) for _ in range(rng.randint(1, 30)))]
            cutoff = rng.uniform(0.05, 0.95)
            table = build_rarity_table(refs, cutoff)
            counts = {}
            for tok in normalize(refs[0]):
                counts[tok] = counts.get(tok, 0) + 1
            ordered = sorted(table.frequent_set, key=lambda w: (-counts[w], w))
            without_last = sum(counts[w] for w in ordered[:-1])
            assert without_last / table.corpus_size < cutoff

    def test_json_roundtrip(self, tmp_path):
        table = build_rarity_table(["dog dog cat"], 0.5)
        data = json.loads(table.to_json())
        assert set(data) == {"cutoff_mass", "frequent"}
        path = tmp_path / "rarity.json"
        table.save(path)
        loaded = RarityTable.load(path)
        assert loaded.frequent_set == table.frequent_set
        assert loaded.cutoff_mass == table.cutoff_mass


class TestRareF1:
    def test_all_frequent(self):
        table = RarityTable(frozenset({"a", "b"}), 0.5, 10)
        assert rare_f1(["a", "b"], ["b", "a"], table) == 0.0

    def test_identity_with_rare_word(self):
        table = RarityTable(frozenset({"a"}), 0.5, 10)
        assert rare_f1(["a", "rare"], ["a", "rare"], table) == 1.0

    def test_hand_built_table(self):
        # corpus counts {a:5, b:3, c:1, d:1}, cutoff 0.5 -> frequent {a}
        table = RarityTable(frozenset({"a"}), 0.5, 10)
        assert rare_f1(["a", "b", "c"], ["a", "b", "d"], table) == 0.5

    def test_equals_filtered_f1(self):
        rng = random.Random(29)
        vocab = ("a", "b", "c", "d", "e", "f")
        for _ in range(200):
            table = RarityTable(
                frozenset(w for w in vocab if rng.random() < 0.5), 0.5, 1
            )
            pred, ref = random_tokens(rng, vocab=vocab), random_tokens(rng, vocab=vocab)
            expected = unigram_f1(table.filter_rare(pred), table.filter_rare(ref))
            assert rare_f1(pred, ref, table) == expected


class TestBleu4:
    def test_identity(self):
        assert bleu4(list("abcd"), list("abcd")) == 1.0
        assert bleu4(list("abcdefg"), list("abcdefg")) == 1.0

    def test_empty_pred(self):
        assert bleu4([], list("abc")) == 0.0

    def test_one_token_differs(self):
        # p1=3/4, p2=2/3, p3=1/2, p4=eps; BP=1 -> (0.25e-9)**0.25
        expected = (0.75 * (2 / 3) * 0.5 * 1e-9) ** 0.25
        assert bleu4(list("abcd"), list("abce")) == pytest.approx(expected, abs=1e-12)
        assert bleu4(list("abcd"), list("abce")) == pytest.approx(
            bleu4_oracle(list("abcd"), list("abce")), abs=1e-12
        )

    def test_brevity_penalty(self):
        short, long = list("ab"), list("abcd")
        assert bleu4(short, long) < bleu4(list("abcd"), list("abcd"))
        assert bleu4(short, long) == pytest.approx(bleu4_oracle(short, long), abs=1e-12)


class TestRougeL:
    def test_identity(self):
        assert rouge_l(list("abc"), list("abc")) == 1.0

    def test_no_common_token(self):
        assert rouge_l(list("abc"), list("xyz")) == 0.0

    def test_swapped_pair(self):
        assert rouge_l(list("acb"), list("abc")) == pytest.approx(2 / 3)

    def test_empty(self):
        assert rouge_l([], list("abc")) == 0.0
        assert rouge_l(list("abc"), []) == 0.0


def test_oracle_equivalence_sample():
    rng = random.Random(31)
    for _ in range(100):
        pred, ref = random_tokens(rng), random_tokens(rng)
        assert abs(unigram_f1(pred, ref) - f1_oracle(pred, ref)) <= 1e-9
        assert abs(bleu4(pred, ref) - bleu4_oracle(pred, ref)) <= 1e-9
        assert abs(rouge_l(pred, ref) - rouge_l_oracle(pred, ref)) <= 1e-9


class TestAnswerPresent:
    def test_present(self):
        response = "The last time the Dallas Cowboys won a playoff game was in 2014."
        assert answer_present(response, ["2014"]) == 1

    def test_absent(self):
        response = (
            "I'm not sure, but I do know that the Dallas Cowboys are a professional "
            "football team based in Dallas, Texas."
        )
        assert answer_present(response, ["2014"]) == 0

    def test_no_numeric_substring_match(self):
        assert answer_present("year 20145", ["2014"]) == 0

    def test_multi_token_answer(self):
        assert answer_present("I think there is a good chance next week.", ["good chance next week"]) == 1
        assert answer_present("a good next chance week", ["good chance next week"]) == 0

    def test_empty_answers_rejected(self):
        with pytest.raises(ValueError, match="unanswerable"):
            answer_present("anything", ["the", "a"])
        with pytest.raises(ValueError, match="unanswerable"):
            answer_present("anything", [])

    def test_monotone_in_answers(self):
        rng = random.Random(37)
        for _ in range(200):
            response = " ".join(random_tokens(rng, max_len=8))
            answers = [" ".join(random_tokens(rng, max_len=2) or ["z"]) for _ in range(2)]
            try:
                before = answer_present(response, answers)
            except ValueError:
                continue
            extended = answers + ["extra answer"]
            assert answer_present(response, extended) >= before

    def test_contains_tokens(self):
        assert contains_tokens(["a", "b", "c"], ["b", "c"])
        assert not contains_tokens(["a", "b", "c"], ["c", "b"])
        assert not contains_tokens(["a"], [])


class TestMetricReport:
    def test_aggregate_is_mean(self):
        rows = [
            {"example_id": "b", "f1": 0.5, "ap": 1},
            {"example_id": "a", "f1": 0.25},
            {"example_id": "c", "f1": 1.0, "ap": 0},
        ]
        report = build_report(rows)
        assert abs(report.aggregate["f1"] - (0.5 + 0.25 + 1.0) / 3) <= 1e-12
        assert abs(report.aggregate["ap"] - 0.5) <= 1e-12
        assert report.counts["f1"] == {"evaluated": 3, "skipped": 0}
        assert report.counts["ap"] == {"evaluated": 2, "skipped": 1}
        assert report.counts["kf1"] == {"evaluated": 0, "skipped": 3}
        assert "kf1" not in report.aggregate

    def test_rows_sorted_by_example_id(self):
        report = build_report([{"example_id": "b"}, {"example_id": "a"}])
        assert [r["example_id"] for r in report.per_example] == ["a", "b"]

    def test_binary_columns_in_unit_interval(self):
        rng = random.Random(41)
        rows = [
            {"example_id": str(i), "ap": rng.randint(0, 1), "gap": rng.randint(0, 1)}
            for i in range(50)
        ]
        report = build_report(rows)
        assert 0.0 <= report.aggregate["ap"] <= 1.0
        assert 0.0 <= report.aggregate["gap"] <= 1.0
        assert set(report.counts) == set(METRIC_COLUMNS)
