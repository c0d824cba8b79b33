"""Per-commit raw feature assembly.

Joins the three feature families for every mined commit: textual (n-gram
terms plus message scalars), process (churn/entropy/RCR) and code-metric
deltas.  RCR depends on the combined labels of earlier commits, which is why
labeling must run before featurization.

The result is a list of FeatureRow (also serializable as a JSONL "features
file"), still on raw scales; fitting and applying a FeatureSchema is the
pipeline module's job.
"""

from dataclasses import dataclass

from . import codefeat, procfeat, textfeat
from ._util import read_jsonl, write_jsonl
from .corpus import BlobReader, CommitRecord
from .errors import ParseError

#: Declared numeric column order: message scalars, process, code deltas.
NUMERIC_COLUMNS = tuple(textfeat.SCALAR_COLUMNS) + tuple(procfeat.COLUMNS) + tuple(codefeat.COLUMNS)

#: Numeric columns exempt from correlation/redundancy pruning (they belong to
#: the textual family; only process+code columns are pruned).
UNPRUNED_COLUMNS = tuple(textfeat.SCALAR_COLUMNS)


@dataclass(frozen=True)
class FeatureRow:
    sha: str
    project: str
    label: bool
    terms: tuple[str, ...]
    numeric: dict[str, float]

    def to_json(self) -> dict:
        return {
            "sha": self.sha,
            "project": self.project,
            "label": int(self.label),
            "terms": list(self.terms),
            "numeric": {k: self.numeric[k] for k in NUMERIC_COLUMNS},
        }

    @staticmethod
    def from_json(obj) -> "FeatureRow":
        return FeatureRow(
            sha=obj["sha"],
            project=obj["project"],
            label=bool(obj["label"]),
            terms=tuple(obj["terms"]),
            numeric={k: float(v) for k, v in obj["numeric"].items()},
        )


def extract_features(
    commits: list[CommitRecord],
    labels_by_sha: dict,
    repo_paths: dict[str, str],
    n_max: int = textfeat.DEFAULT_NGRAM_MAX,
) -> list[FeatureRow]:
    """Assemble raw features for every commit, in corpus order.

    labels_by_sha maps sha to a LabelRecord (combined labels feed RCR);
    repo_paths maps project id to the clone used for code-metric deltas.
    """
    for commit in commits:
        if commit.sha not in labels_by_sha:
            raise ParseError(
                f"no label record for commit {commit.sha}; run the label step first"
            )
    combined = {sha: rec.combined for sha, rec in labels_by_sha.items()}
    rcr_map = procfeat.rcr_by_sha(commits, combined)

    readers: dict[str, BlobReader] = {}
    rows = []
    try:
        for commit in commits:
            if commit.project not in readers:
                if commit.project not in repo_paths:
                    raise ParseError(f"no repository path for project {commit.project!r}")
                readers[commit.project] = BlobReader(repo_paths[commit.project])
            tf = textfeat.text_features(commit.message, n_max)
            pf = procfeat.process_features(commit, rcr=rcr_map[commit.sha])
            delta = codefeat.commit_delta(commit, readers[commit.project])
            numeric = {}
            numeric.update(textfeat.scalar_values(tf))
            numeric.update(procfeat.scalar_values(pf))
            numeric.update(delta)
            rows.append(
                FeatureRow(
                    sha=commit.sha,
                    project=commit.project,
                    label=labels_by_sha[commit.sha].combined,
                    terms=tf.terms,
                    numeric=numeric,
                )
            )
    finally:
        for reader in readers.values():
            reader.close()
    return rows


def write_features(path, rows):
    write_jsonl(path, (r.to_json() for r in rows))


def read_features(path) -> list[FeatureRow]:
    return [FeatureRow.from_json(obj) for obj in read_jsonl(path, what="features")]
