"""Process features: churn entropy, author refactoring contribution, totals."""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from refscan.corpus import CommitRecord, FileChange
from refscan.procfeat import (
    COLUMNS,
    AuthorHistory,
    code_entropy,
    process_features,
    rcr_by_sha,
    refactoring_contribution,
    scalar_values,
)


def _commit(sha, files, *, project="p", author="a<a@b>", ts=1, message="msg"):
    return CommitRecord(
        sha=sha,
        project=project,
        author=author,
        ts=ts,
        parent=None,
        message=message,
        files=tuple(files),
    )


def _change(path, added, deleted, is_exec=True, binary=False):
    return FileChange(
        path=path,
        added=added,
        deleted=deleted,
        is_executable=is_exec,
        is_binary=binary,
    )


class TestCodeEntropy:
    def test_known_values(self):
        assert code_entropy([3, 1]) == pytest.approx(0.8112781244591328, abs=1e-12)
        assert code_entropy([1, 1]) == pytest.approx(1.0, abs=0)
        assert code_entropy([2, 2, 2, 2]) == pytest.approx(2.0, abs=0)

    def test_degenerate_distributions(self):
        assert code_entropy([]) == 0.0
        assert code_entropy([5]) == 0.0
        assert code_entropy([0, 7]) == 0.0  # zero entries dropped first
        assert code_entropy([0, 0]) == 0.0

    @given(st.lists(st.integers(min_value=1, max_value=10_000), min_size=1, max_size=32))
    def test_bounded_by_log2_of_file_count(self, churns):
        h = code_entropy(churns)
        assert 0.0 <= h <= math.log2(max(len(churns), 2)) + 1e-9

    @given(st.lists(st.integers(min_value=1, max_value=1000), min_size=2, max_size=16))
    def test_invariant_under_permutation_and_scaling(self, churns):
        h = code_entropy(churns)
        assert code_entropy(list(reversed(churns))) == pytest.approx(h, abs=1e-12)
        assert code_entropy([c * 7 for c in churns]) == pytest.approx(h, abs=1e-9)


class TestRefactoringContribution:
    def test_known_values(self):
        assert refactoring_contribution(3, 10) == 0.3
        assert refactoring_contribution(0, 4) == 0.0
        assert refactoring_contribution(4, 4) == 1.0

    def test_no_history_is_zero(self):
        assert refactoring_contribution(0, 0) == 0.0

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            refactoring_contribution(-1, 5)
        with pytest.raises(ValueError):
            refactoring_contribution(6, 5)


class TestProcessFeatures:
    def test_totals_over_all_files_entropy_over_executables(self):
        commit = _commit(
            "s1",
            [
                _change("a.py", 3, 1),
                _change("b.py", 1, 0),
                _change("README.md", 10, 2, is_exec=False),
            ],
        )
        feats = process_features(commit, rcr=0.25)
        assert feats.lines_added == 14
        assert feats.lines_deleted == 3
        assert feats.lines_changed == 11
        assert feats.num_files == 3
        assert feats.has_executable is True
        # entropy over executable churn only: (3+1)=4 vs 1
        expected = code_entropy([4, 1])
        assert feats.entropy == pytest.approx(expected, abs=0)
        assert feats.rcr == 0.25

    def test_signed_lines_changed(self):
        commit = _commit("s2", [_change("a.py", 1, 5)])
        assert process_features(commit).lines_changed == -4

    def test_doc_only_commit(self):
        commit = _commit("s3", [_change("README.md", 2, 0, is_exec=False)])
        feats = process_features(commit)
        assert feats.has_executable is False
        assert feats.entropy == 0.0

    def test_single_executable_file_has_zero_entropy(self):
        commit = _commit("s4", [_change("a.py", 9, 0)])
        assert process_features(commit).entropy == 0.0

    def test_empty_commit(self):
        feats = process_features(_commit("s5", []))
        assert feats.lines_added == 0
        assert feats.num_files == 0
        assert feats.has_executable is False

    def test_scalar_values_cover_declared_columns(self):
        feats = process_features(_commit("s6", [_change("a.py", 1, 0)]), rcr=0.5)
        values = scalar_values(feats)
        assert set(values) == set(COLUMNS)
        assert values["has_executable"] == 1.0
        assert values["rcr"] == 0.5


class TestAuthorHistory:
    def test_rcr_walk_per_project_and_author(self):
        commits = [
            _commit("a1", [], ts=1, author="x<x@x>"),
            _commit("a2", [], ts=2, author="x<x@x>"),
            _commit("a3", [], ts=3, author="x<x@x>"),
            _commit("b1", [], ts=2, author="y<y@y>"),
        ]
        combined = {"a1": True, "a2": False, "a3": True, "b1": True}
        rcr = rcr_by_sha(commits, combined)
        assert rcr["a1"] == 0.0  # no history yet
        assert rcr["a2"] == 1.0  # one commit seen, it was a refactoring
        assert rcr["a3"] == 0.5
        assert rcr["b1"] == 0.0  # separate author starts fresh

    def test_projects_are_isolated(self):
        commits = [
            _commit("p1", [], ts=1, project="alpha"),
            _commit("p2", [], ts=2, project="beta"),
        ]
        rcr = rcr_by_sha(commits, {"p1": True, "p2": False})
        assert rcr["p2"] == 0.0  # alpha history does not leak into beta

    def test_missing_shas_count_as_non_refactoring(self):
        commits = [_commit("m1", [], ts=1), _commit("m2", [], ts=2)]
        rcr = rcr_by_sha(commits, {})
        assert rcr == {"m1": 0.0, "m2": 0.0}

    def test_walk_order_is_timestamp_then_sha(self):
        # same timestamp: "a" sorts before "b", so "b" sees "a" as history
        commits = [
            _commit("b", [], ts=5),
            _commit("a", [], ts=5),
        ]
        rcr = rcr_by_sha(commits, {"a": True, "b": True})
        assert rcr["a"] == 0.0
        assert rcr["b"] == 1.0

    def test_incremental_interface(self):
        history = AuthorHistory()
        first = _commit("h1", [], ts=1)
        assert history.rcr_before(first) == 0.0
        history.record(first, True)
        second = _commit("h2", [], ts=2)
        assert history.rcr_before(second) == 1.0
