"""Process features of a commit: churn totals, file counts, churn entropy and
the author's refactoring contribution ratio (RCR).

Entropy is Shannon entropy (base 2) over the churn distribution of the
commit's executable files; RCR is the fraction of an author's earlier commits
in the same project that were labeled refactoring.  Both are 0 for the
degenerate cases (no churn / first commit).
"""

import math
from collections import defaultdict
from dataclasses import dataclass

from .corpus import CommitRecord


def code_entropy(churns) -> float:
    """Base-2 Shannon entropy of a churn distribution.

    Zero-churn entries are dropped first; fewer than two contributing files
    yield 0.0 by convention.
    """
    values = [c for c in churns if c > 0]
    if len(values) < 2:
        return 0.0
    total = float(sum(values))
    return -sum((c / total) * math.log2(c / total) for c in values)


def refactoring_contribution(prior_refactorings: int, prior_commits: int) -> float:
    """prior_refactorings / prior_commits, 0.0 when there is no history."""
    if prior_commits <= 0:
        return 0.0
    if prior_refactorings < 0 or prior_refactorings > prior_commits:
        raise ValueError("prior_refactorings must lie in [0, prior_commits]")
    return prior_refactorings / prior_commits


@dataclass(frozen=True)
class ProcessFeatures:
    lines_added: int
    lines_deleted: int
    lines_changed: int  # signed: added - deleted
    num_files: int
    has_executable: bool
    entropy: float
    rcr: float


#: Column order of this module's contribution to the numeric block.
COLUMNS = (
    "lines_added",
    "lines_deleted",
    "lines_changed",
    "num_files",
    "has_executable",
    "entropy",
    "rcr",
)


def process_features(commit: CommitRecord, rcr: float = 0.0) -> ProcessFeatures:
    """Features derived from one commit's file changes.

    Churn totals run over all files (docs included); entropy runs over
    executable files only.  Binary files carry zero churn by construction.
    """
    added = sum(f.added for f in commit.files)
    deleted = sum(f.deleted for f in commit.files)
    exec_churns = [f.added + f.deleted for f in commit.files if f.is_executable]
    return ProcessFeatures(
        lines_added=added,
        lines_deleted=deleted,
        lines_changed=added - deleted,
        num_files=len(commit.files),
        has_executable=any(f.is_executable for f in commit.files),
        entropy=code_entropy(exec_churns),
        rcr=rcr,
    )


def scalar_values(feats: ProcessFeatures) -> dict[str, float]:
    return {
        "lines_added": float(feats.lines_added),
        "lines_deleted": float(feats.lines_deleted),
        "lines_changed": float(feats.lines_changed),
        "num_files": float(feats.num_files),
        "has_executable": float(feats.has_executable),
        "entropy": feats.entropy,
        "rcr": feats.rcr,
    }


class AuthorHistory:
    """Per-(project, author) running history used to compute RCR.

    Feed commits in corpus order (non-decreasing timestamp, sha tiebreak);
    ``rcr_before`` reports the ratio over commits seen so far, then
    ``record`` appends the current commit's combined label.
    """

    def __init__(self):
        self._seen = defaultdict(lambda: [0, 0])  # (project, author) -> [refactorings, commits]

    def rcr_before(self, commit: CommitRecord) -> float:
        ref, tot = self._seen[(commit.project, commit.author)]
        return refactoring_contribution(ref, tot)

    def record(self, commit: CommitRecord, combined_label: bool):
        slot = self._seen[(commit.project, commit.author)]
        slot[0] += int(bool(combined_label))
        slot[1] += 1


def rcr_by_sha(commits, combined_by_sha) -> dict[str, float]:
    """RCR for every commit, walking each project's history in (ts, sha) order.

    ``combined_by_sha`` maps sha to the combined refactoring label; commits
    missing from the map count as non-refactoring history.
    """
    history = AuthorHistory()
    out = {}
    for commit in sorted(commits, key=lambda c: (c.project, c.ts, c.sha)):
        out[commit.sha] = history.rcr_before(commit)
        history.record(commit, combined_by_sha.get(commit.sha, False))
    return out
