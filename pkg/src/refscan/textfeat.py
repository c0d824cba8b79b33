"""Textual features of commit messages.

A message contributes two kinds of features: binary presence of word n-grams
over normalized token stems, and three message-level scalars (word count,
sentence count, Flesch reading ease).  Word and sentence counts are taken on
the raw text, before stop-word removal.
"""

import re
from dataclasses import dataclass

from . import stemmer
from .stopwords import STOPWORDS_V1

_URL_RE = re.compile(r"(?:https?://|www\.)\S+")
_TAG_RE = re.compile(r"<[^>]*>")
_NON_ALPHA_RE = re.compile(r"[^a-z\s]+")
_WORD_RE = re.compile(r"[a-z0-9]+")
_VOWEL_RUN_RE = re.compile(r"[aeiouy]+")

DEFAULT_NGRAM_MAX = 6


def normalize_message(raw: str) -> list[str]:
    """Lowercase, strip urls/html/digits/punctuation/emoji, drop stop words,
    Porter-stem the rest.  Returns the stem sequence in message order."""
    text = raw.lower()
    text = _URL_RE.sub(" ", text)
    text = _TAG_RE.sub(" ", text)
    text = _NON_ALPHA_RE.sub(" ", text)
    return [stemmer.stem(tok) for tok in text.split() if tok not in STOPWORDS_V1]


def extract_ngrams(tokens: list[str], n_max: int = DEFAULT_NGRAM_MAX) -> set[str]:
    """All contiguous space-joined n-grams for n = 1..min(n_max, len(tokens))."""
    out = set()
    for n in range(1, min(n_max, len(tokens)) + 1):
        for i in range(len(tokens) - n + 1):
            out.add(" ".join(tokens[i : i + n]))
    return out


def text_stats(raw: str) -> tuple[int, int]:
    """(word_count, sentence_count) on the raw text.

    Words are maximal alphanumeric runs; sentences are segments between
    '.', '!', '?' or newlines, counting only segments that contain a word.
    """
    lowered = raw.lower()
    words = len(_WORD_RE.findall(lowered))
    sentences = sum(1 for seg in re.split(r"[.!?\n]", lowered) if _WORD_RE.search(seg))
    return words, sentences


def syllable_count(word: str) -> int:
    """Vowel-group heuristic: count [aeiouy] runs, discount one trailing
    silent 'e' unless that would reach zero; at least one per word."""
    groups = len(_VOWEL_RUN_RE.findall(word.lower()))
    if word.lower().endswith("e") and groups > 1:
        groups -= 1
    return max(groups, 1)


def flesch_reading_ease(words: int, sentences: int, syllables: int) -> float:
    return 206.835 - 1.015 * (words / sentences) - 84.6 * (syllables / words)


def readability(raw: str) -> float:
    """Flesch reading ease of the raw text; 0.0 when there are no words."""
    lowered = raw.lower()
    word_list = _WORD_RE.findall(lowered)
    if not word_list:
        return 0.0
    sentences = sum(1 for seg in re.split(r"[.!?\n]", lowered) if _WORD_RE.search(seg))
    syllables = sum(syllable_count(w) for w in word_list)
    return flesch_reading_ease(len(word_list), sentences, syllables)


@dataclass(frozen=True)
class TextFeatures:
    terms: tuple[str, ...]  # sorted n-gram presence set
    word_count: int
    sentence_count: int
    readability: float


def text_features(raw: str, n_max: int = DEFAULT_NGRAM_MAX) -> TextFeatures:
    tokens = normalize_message(raw)
    words, sentences = text_stats(raw)
    return TextFeatures(
        terms=tuple(sorted(extract_ngrams(tokens, n_max))),
        word_count=words,
        sentence_count=sentences,
        readability=readability(raw),
    )


#: Names of the scalar columns this module contributes to the numeric block.
SCALAR_COLUMNS = ("word_count", "sentence_count", "readability")


def scalar_values(feats: TextFeatures) -> dict[str, float]:
    return {
        "word_count": float(feats.word_count),
        "sentence_count": float(feats.sentence_count),
        "readability": feats.readability,
    }
