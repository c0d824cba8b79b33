"""Repository mining: manifest, numstat parsing, git walking, blob access."""

import pytest

from refscan.corpus import (
    BlobReader,
    CommitRecord,
    FileChange,
    ManifestEntry,
    author_id,
    classify_file,
    load_manifest,
    mine_commits,
    mine_corpus,
    parse_numstat_path,
    read_commits,
    write_commits,
)
from refscan.errors import (
    BranchNotFound,
    DuplicateProject,
    GitInvocationFailure,
    MissingFile,
    NotARepository,
    ParseError,
)


class TestClassifyFile:
    def test_known_source_extensions(self):
        for path in ["a.py", "lib/b.pyx", "x.c", "y.cpp", "z.rs", "m.go", "s.sh"]:
            assert classify_file(path), path

    def test_non_source_paths(self):
        for path in ["README.md", "data.csv", "img.png", "Makefile", "notes"]:
            assert not classify_file(path), path

    def test_case_insensitive_extension(self):
        assert classify_file("MODULE.PY")

    def test_custom_extension_set(self):
        assert classify_file("q.zig", exec_extensions=frozenset({"zig"}))
        assert not classify_file("q.py", exec_extensions=frozenset({"zig"}))


class TestManifest:
    def test_parse_entries_and_comments(self, tmp_path):
        text = (
            "# corpus manifest\n"
            '[[repo]] id = "alpha" path = "/tmp/alpha"\n'
            'branch = "main"\n'
            "\n"
            "[[repo]]\n"
            'id = "beta"\n'
            'path = "/tmp/beta"  # clone location\n'
            'branch = "dev"\n'
        )
        path = tmp_path / "manifest.toml"
        path.write_text(text, encoding="utf-8")
        entries = load_manifest(path)
        assert entries == [
            ManifestEntry(id="alpha", path="/tmp/alpha", branch="main"),
            ManifestEntry(id="beta", path="/tmp/beta", branch="dev"),
        ]

    def _load(self, tmp_path, text):
        path = tmp_path / "m.toml"
        path.write_text(text, encoding="utf-8")
        return load_manifest(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingFile):
            load_manifest(tmp_path / "none.toml")

    def test_no_entries(self, tmp_path):
        with pytest.raises(ParseError):
            self._load(tmp_path, "# empty\n")

    def test_unknown_key(self, tmp_path):
        with pytest.raises(ParseError, match="unknown key"):
            self._load(tmp_path, '[[repo]]\nid = "a"\npath = "p"\nurl = "x"\n')

    def test_duplicate_key(self, tmp_path):
        with pytest.raises(ParseError, match="duplicate key"):
            self._load(tmp_path, '[[repo]]\nid = "a"\nid = "b"\n')

    def test_missing_required_key(self, tmp_path):
        with pytest.raises(ParseError, match="missing"):
            self._load(tmp_path, '[[repo]]\nid = "a"\npath = "p"\n')

    def test_key_outside_entry(self, tmp_path):
        with pytest.raises(ParseError, match="outside"):
            self._load(tmp_path, 'id = "a"\n')

    def test_garbage_line(self, tmp_path):
        with pytest.raises(ParseError, match="cannot parse"):
            self._load(tmp_path, '[[repo]]\nid is "a"\n')

    def test_duplicate_project_id(self, tmp_path):
        text = (
            '[[repo]] id = "a" path = "p1" branch = "main"\n'
            '[[repo]] id = "a" path = "p2" branch = "main"\n'
        )
        with pytest.raises(DuplicateProject):
            self._load(tmp_path, text)

    def test_parse_error_carries_line_number(self, tmp_path):
        with pytest.raises(ParseError) as err:
            self._load(tmp_path, '[[repo]]\nid = "a"\n???\n')
        assert err.value.line == 3


class TestNumstatPath:
    @pytest.mark.parametrize(
        ("raw", "expected"),
        [
            ("src/app.py", ("src/app.py", None)),
            ("src/{old.py => new.py}", ("src/new.py", "src/old.py")),
            ("{a => b}/f.py", ("b/f.py", "a/f.py")),
            ("src/{ => sub}/f.py", ("src/sub/f.py", "src/f.py")),
            ("old.py => new.py", ("new.py", "old.py")),
            ('"caf\\303\\251.py"', ("café.py", None)),
        ],
    )
    def test_cases(self, raw, expected):
        assert parse_numstat_path(raw) == expected


def test_author_id_normalizes():
    assert author_id("  Dana Developer ", " DANA@Example.COM") == (
        "dana developer<dana@example.com>"
    )


class TestMining:
    def _entry(self, mini_repo, branch="main"):
        return ManifestEntry(id="mini", path=str(mini_repo["path"]), branch=branch)

    def test_first_parent_walk_in_timestamp_order(self, mini_repo):
        records = mine_commits(self._entry(mini_repo))
        shas = [r.sha for r in records]
        assert shas == [
            mini_repo["initial"],
            mini_repo["rename"],
            mini_repo["binary"],
            mini_repo["unicode"],
            mini_repo["mainline"],
            mini_repo["merge"],
        ]
        assert mini_repo["side"] not in shas
        assert [r.ts for r in records] == sorted(r.ts for r in records)
        assert all(r.project == "mini" for r in records)
        assert records[0].parent is None
        assert records[1].parent == mini_repo["initial"]
        assert records[0].author == "dana developer<dana@example.com>"

    def test_numstat_churn_and_rename(self, mini_repo):
        records = {r.sha: r for r in mine_commits(self._entry(mini_repo))}
        rename = {f.path: f for f in records[mini_repo["rename"]].files}
        assert rename["a.py"].added == 5
        assert rename["a.py"].deleted == 1
        assert rename["a.py"].rename_from is None
        moved = rename["sub/modern.py"]
        assert moved.rename_from == "sub/mod.py"
        assert (moved.added, moved.deleted) == (0, 0)
        assert moved.is_executable

    def test_binary_file_flagged_with_zero_churn(self, mini_repo):
        records = {r.sha: r for r in mine_commits(self._entry(mini_repo))}
        (blob,) = records[mini_repo["binary"]].files
        assert blob.path == "blob.bin"
        assert blob.is_binary
        assert not blob.is_executable
        assert (blob.added, blob.deleted) == (0, 0)

    def test_quoted_unicode_path_decoded(self, mini_repo):
        records = {r.sha: r for r in mine_commits(self._entry(mini_repo))}
        (change,) = records[mini_repo["unicode"]].files
        assert change.path == "café.py"
        assert (change.added, change.deleted) == (2, 1)

    def test_merge_diffed_against_first_parent(self, mini_repo):
        records = {r.sha: r for r in mine_commits(self._entry(mini_repo))}
        merge = records[mini_repo["merge"]]
        assert merge.parent == mini_repo["mainline"]
        assert [f.path for f in merge.files] == ["b.py"]
        assert merge.files[0].added == 2

    def test_mining_is_deterministic(self, mini_repo):
        entry = self._entry(mini_repo)
        assert mine_commits(entry) == mine_commits(entry)

    def test_mine_corpus_preserves_manifest_order(self, mini_repo):
        import dataclasses

        entry = self._entry(mini_repo)
        entry2 = dataclasses.replace(entry, id="mini2")  # same clone, second id
        one = mine_commits(entry)
        serial = mine_corpus([entry, entry2])
        threaded = mine_corpus([entry, entry2], jobs=4)
        assert serial == threaded
        assert [r.project for r in serial] == ["mini"] * len(one) + ["mini2"] * len(one)

    def test_missing_directory(self, tmp_path):
        entry = ManifestEntry(id="x", path=str(tmp_path / "nope"), branch="main")
        with pytest.raises(NotARepository):
            mine_commits(entry)

    def test_plain_directory_is_not_a_repository(self, tmp_path):
        plain = tmp_path / "plain"
        plain.mkdir()
        entry = ManifestEntry(id="x", path=str(plain), branch="main")
        with pytest.raises(NotARepository):
            mine_commits(entry)

    def test_unknown_branch(self, mini_repo):
        with pytest.raises(BranchNotFound):
            mine_commits(self._entry(mini_repo, branch="no-such-branch"))


class TestBlobReader:
    def test_reads_content_at_commit(self, mini_repo):
        with BlobReader(str(mini_repo["path"])) as reader:
            initial = reader.read(mini_repo["initial"], "a.py")
            assert initial == "def alpha():\n    return 1\n"
            after = reader.read(mini_repo["rename"], "a.py")
            assert after is not None and "def beta():" in after

    def test_missing_path_returns_none(self, mini_repo):
        with BlobReader(str(mini_repo["path"])) as reader:
            assert reader.read(mini_repo["initial"], "nope.py") is None

    def test_non_blob_object_does_not_desync_stream(self, mini_repo):
        with BlobReader(str(mini_repo["path"])) as reader:
            assert reader.read(mini_repo["initial"], "sub") is None
            # the next read must still return clean content
            assert reader.read(mini_repo["initial"], "sub/mod.py") == (
                "def nested():\n    return 2\n"
            )

    def test_renamed_file_readable_at_parent(self, mini_repo):
        with BlobReader(str(mini_repo["path"])) as reader:
            old = reader.read(mini_repo["initial"], "sub/mod.py")
            new = reader.read(mini_repo["rename"], "sub/modern.py")
            assert old == new == "def nested():\n    return 2\n"


class TestWireFormat:
    def test_round_trip(self, tmp_path, mini_repo):
        entry = ManifestEntry(id="mini", path=str(mini_repo["path"]), branch="main")
        records = mine_commits(entry)
        out = tmp_path / "commits.jsonl"
        write_commits(out, records)
        assert read_commits(out) == records

    def test_round_trip_handcrafted(self, tmp_path):
        record = CommitRecord(
            sha="e" * 40,
            project="p",
            author="a<a@b>",
            ts=123,
            parent=None,
            message="multi\nline",
            files=(
                FileChange(
                    path="x.py",
                    added=1,
                    deleted=2,
                    is_executable=True,
                    rename_from="y.py",
                    is_binary=False,
                ),
            ),
        )
        out = tmp_path / "one.jsonl"
        write_commits(out, [record])
        assert read_commits(out) == [record]

    def test_corrupt_line_raises(self, tmp_path):
        out = tmp_path / "bad.jsonl"
        out.write_text('{"sha": "x"}\nnot json\n', encoding="utf-8")
        with pytest.raises(ParseError) as err:
            read_commits(out)
        assert err.value.line == 2
