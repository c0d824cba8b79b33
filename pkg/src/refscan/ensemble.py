"""Combine the classifier's verdict with a rule-based detector's verdict.

Two voting schemes over the two boolean voters:

* ``unanimous`` — refactoring only when both voters say so (AND).
* ``majority`` — refactoring when at least one voter says so (OR).

So by construction the majority scheme can only gain recall and the
unanimous scheme can only gain precision relative to either voter alone.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

SCHEMES = ("unanimous", "majority")


@dataclass(frozen=True)
class EnsembleVerdict:
    sha: str
    model_vote: bool
    rule_vote: bool
    scheme: str
    final: bool

    def to_json(self) -> dict:
        return {
            "sha": self.sha,
            "model": self.model_vote,
            "rule": self.rule_vote,
            "scheme": self.scheme,
            "final": self.final,
        }


def ensemble_vote(model_vote: bool, rule_vote: bool, scheme: str) -> bool:
    if scheme == "unanimous":
        return bool(model_vote and rule_vote)
    if scheme == "majority":
        return bool(model_vote or rule_vote)
    raise ValueError(f"unknown ensemble scheme {scheme!r}; expected one of {SCHEMES}")


def combine(model_votes: dict, rule_votes: dict, scheme: str) -> list:
    """One EnsembleVerdict per sha in ``model_votes``, in its iteration order.

    A sha missing from ``rule_votes`` counts as a rule vote of False; the
    number of such misses is reported once on stderr.
    """
    missing = 0
    verdicts = []
    for sha, model_vote in model_votes.items():
        if sha in rule_votes:
            rule_vote = bool(rule_votes[sha])
        else:
            rule_vote = False
            missing += 1
        verdicts.append(
            EnsembleVerdict(
                sha=sha,
                model_vote=bool(model_vote),
                rule_vote=rule_vote,
                scheme=scheme,
                final=ensemble_vote(model_vote, rule_vote, scheme),
            )
        )
    if missing:
        print(
            f"warning: {missing} of {len(model_votes)} commits had no rule verdict; "
            "counted as non-refactoring",
            file=sys.stderr,
        )
    return verdicts
