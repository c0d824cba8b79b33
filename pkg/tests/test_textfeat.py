"""Commit-message text features: normalization, n-grams, readability."""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from refscan.textfeat import (
    DEFAULT_NGRAM_MAX,
    SCALAR_COLUMNS,
    extract_ngrams,
    flesch_reading_ease,
    normalize_message,
    readability,
    scalar_values,
    syllable_count,
    text_features,
    text_stats,
)


class TestNormalizeMessage:
    def test_lowercase_stopword_removal_and_stemming(self):
        tokens = normalize_message("Updated the readme, it is cleaner today!")
        assert tokens == ["updat", "readm", "cleaner", "today"]

    def test_urls_and_html_tags_stripped(self):
        msg = "See https://example.com/path?q=1 and <a href='x'>link</a>"
        assert normalize_message(msg) == ["see", "link"]

    def test_www_urls_stripped(self):
        assert normalize_message("docs at www.example.org/page today") == ["doc", "today"]

    def test_digits_and_punctuation_removed(self):
        assert normalize_message("v2 port 8080!") == ["v", "port"]

    def test_non_ascii_symbols_removed(self):
        assert normalize_message("fix \N{PARTY POPPER} done") == ["fix", "done"]

    def test_stopwords_filtered_before_stemming(self):
        # "this"/"was" are dropped as written, not after stemming.
        assert normalize_message("this was refactored") == ["refactor"]

    def test_empty_and_stopword_only_messages(self):
        assert normalize_message("") == []
        assert normalize_message("it was the") == []


class TestExtractNgrams:
    def test_three_distinct_tokens(self):
        grams = extract_ngrams(["a", "b", "c"])
        assert grams == {"a", "b", "c", "a b", "b c", "a b c"}

    def test_counts_for_distinct_tokens(self):
        for k, expected in [(3, 6), (4, 10), (5, 15)]:
            tokens = [f"w{i}" for i in range(k)]
            assert len(extract_ngrams(tokens)) == expected

    def test_repeated_tokens_deduplicate(self):
        assert extract_ngrams(["x", "x"]) == {"x", "x x"}

    def test_n_max_honoured(self):
        assert extract_ngrams(["a", "b", "c"], n_max=2) == {"a", "b", "c", "a b", "b c"}
        assert extract_ngrams(["a", "b"], n_max=1) == {"a", "b"}

    def test_empty_tokens(self):
        assert extract_ngrams([]) == set()

    @given(st.lists(st.sampled_from(["u", "v", "w"]), min_size=1, max_size=8))
    def test_every_window_present(self, tokens):
        grams = extract_ngrams(tokens)
        n_max = min(DEFAULT_NGRAM_MAX, len(tokens))
        for n in range(1, n_max + 1):
            for i in range(len(tokens) - n + 1):
                assert " ".join(tokens[i : i + n]) in grams


class TestTextStats:
    def test_word_and_sentence_counts(self):
        assert text_stats("Remove the unused helper.") == (4, 1)
        assert text_stats("One. Two!\nThree?") == (3, 3)
        assert text_stats("no terminator") == (2, 1)

    def test_empty_text(self):
        assert text_stats("") == (0, 0)
        assert text_stats("...!!!") == (0, 0)

    def test_segments_without_words_not_counted(self):
        # The trailing "..." closes no extra sentence.
        assert text_stats("Done...") == (1, 1)


class TestSyllables:
    @pytest.mark.parametrize(
        ("word", "expected"),
        [
            ("refactor", 3),
            ("code", 1),
            ("the", 1),
            ("beautiful", 3),
            ("bcd", 1),  # no vowels still counts one
            ("create", 1),  # vowel-run heuristic with silent-e discount
            ("moved", 2),
            ("idea", 2),  # adjacent vowels merge into one run
        ],
    )
    def test_vowel_run_heuristic(self, word, expected):
        assert syllable_count(word) == expected

    @given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=12))
    def test_at_least_one_syllable(self, word):
        assert syllable_count(word) >= 1


class TestReadability:
    def test_flesch_formula(self):
        assert flesch_reading_ease(10, 2, 14) == pytest.approx(83.32, abs=1e-2)
        assert flesch_reading_ease(2, 1, 3) == pytest.approx(77.905, abs=1e-9)

    def test_readability_of_plain_sentence(self):
        assert readability("Hello world.") == pytest.approx(77.905, abs=1e-9)

    def test_no_words_scores_zero(self):
        assert readability("") == 0.0
        assert readability("!!!") == 0.0

    def test_sentence_floor_of_one(self):
        # A fragment without terminators still counts one sentence.
        assert readability("hello world") == pytest.approx(77.905, abs=1e-9)


class TestTextFeatures:
    def test_terms_sorted_and_counts_from_raw_text(self):
        feats = text_features("Remove the unused helper.")
        assert feats.word_count == 4
        assert feats.sentence_count == 1
        assert feats.terms == tuple(sorted(feats.terms))
        expected = {
            "remov",
            "unus",
            "helper",
            "remov unus",
            "unus helper",
            "remov unus helper",
        }
        assert set(feats.terms) == expected

    def test_ngram_max_limits_terms(self):
        feats = text_features("alpha beta gamma delta", ngram_max=1)
        assert all(" " not in term for term in feats.terms)

    def test_scalar_values_align_with_columns(self):
        feats = text_features("Hello world.")
        values = scalar_values(feats)
        assert SCALAR_COLUMNS == ("word_count", "sentence_count", "readability")
        assert values["word_count"] == 2.0
        assert values["sentence_count"] == 1.0
        assert values["readability"] == pytest.approx(77.905, abs=1e-9)

    def test_empty_message(self):
        feats = text_features("")
        assert feats.terms == ()
        assert feats.word_count == 0
        assert feats.sentence_count == 0
        assert feats.readability == 0.0

    @given(st.text(max_size=120))
    def test_total_function_on_arbitrary_text(self, message):
        feats = text_features(message)
        assert feats.word_count >= 0
        assert feats.sentence_count >= 0
        assert math.isfinite(feats.readability)
