"""Commit labeling: keyword heuristic, external rule labels, combined label.

A commit counts as refactoring when its message matches a keyword stem OR an
external rule-based detector flagged it, AND it touches at least one
executable (source-code) file.  Keyword matching is prefix matching between
keyword stems and stemmed message tokens, so "restructured" (stem
"restructur") matches the keyword stem "restruct".
"""

from dataclasses import dataclass, field

from . import stemmer, textfeat
from ._util import read_json
from .errors import MissingFile, ParseError

# Raw keyword list (v1); stored stemmed so matching is stem-vs-stem.
_RAW_KEYWORDS_V1 = (
    "move", "refactor", "remove", "rename", "split", "clean", "improve",
    "unused", "cleanup", "simplify", "restruct", "inline", "parameterize",
    "consolidate", "encapsulate", "update",
)


@dataclass(frozen=True)
class KeywordSet:
    """Ordered collection of lowercase keyword stems."""

    stems: tuple[str, ...]

    def __post_init__(self):
        if not self.stems:
            raise ValueError("keyword set is empty")
        for s in self.stems:
            if not s or s != s.lower().strip():
                raise ValueError(f"keyword stem must be lowercase and trimmed: {s!r}")


def default_keywords() -> KeywordSet:
    return KeywordSet(stems=tuple(stemmer.stem(w) for w in _RAW_KEYWORDS_V1))


def load_keywords(path) -> KeywordSet:
    """Read a one-stem-per-line text file (blank lines and # comments skipped).

    Entries are used verbatim; they are expected to be stems already.
    """
    import os

    if not os.path.exists(path):
        raise MissingFile(f"keyword file not found: {path}")
    stems = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            entry = line.strip().lower()
            if not entry or entry.startswith("#"):
                continue
            if " " in entry:
                raise ParseError(f"keyword file {path}: one stem per line", line=lineno)
            stems.append(entry)
    if not stems:
        raise ParseError(f"keyword file {path}: no entries")
    return KeywordSet(stems=tuple(stems))


def keyword_label(message: str, keywords: KeywordSet) -> tuple[bool, list[str]]:
    """(matched?, matched stems in keyword order)."""
    tokens = textfeat.normalize_message(message)
    matched = [k for k in keywords.stems if any(t.startswith(k) for t in tokens)]
    return bool(matched), matched


def ingest_rule_labels(path) -> dict[str, bool]:
    """Load an external detector's output: JSON object mapping sha to a list
    of detected operations ({"type": ..., "detail": ...}).  A commit is
    rule-labeled iff its operation list is non-empty."""
    data = read_json(path, what="rule labels")
    if not isinstance(data, dict):
        raise ParseError(f"rule labels {path}: expected a JSON object keyed by sha")
    out = {}
    for sha, ops in data.items():
        if not isinstance(ops, list):
            raise ParseError(f"rule labels {path}: value for {sha} must be a list")
        for op in ops:
            if not isinstance(op, dict) or "type" not in op:
                raise ParseError(
                    f"rule labels {path}: operations need a 'type' field ({sha})"
                )
        out[sha] = bool(ops)
    return out


def combine_labels(keyword: bool, rule: bool, has_executable: bool) -> bool:
    return (keyword or rule) and has_executable


@dataclass(frozen=True)
class LabelRecord:
    sha: str
    keyword_label: bool
    matched: tuple[str, ...]
    rule_label: bool
    has_executable: bool
    combined: bool = field(default=False)

    @staticmethod
    def build(sha, message, has_executable, keywords, rule_map):
        kw, matched = keyword_label(message, keywords)
        rule = bool(rule_map.get(sha, False)) if rule_map else False
        return LabelRecord(
            sha=sha,
            keyword_label=kw,
            matched=tuple(matched),
            rule_label=rule,
            has_executable=bool(has_executable),
            combined=combine_labels(kw, rule, has_executable),
        )

    def to_json(self) -> dict:
        return {
            "sha": self.sha,
            "keyword_label": self.keyword_label,
            "matched": list(self.matched),
            "rule_label": self.rule_label,
            "has_executable": self.has_executable,
            "combined": self.combined,
        }

    @staticmethod
    def from_json(obj) -> "LabelRecord":
        return LabelRecord(
            sha=obj["sha"],
            keyword_label=bool(obj["keyword_label"]),
            matched=tuple(obj.get("matched", ())),
            rule_label=bool(obj["rule_label"]),
            has_executable=bool(obj["has_executable"]),
            combined=bool(obj["combined"]),
        )
