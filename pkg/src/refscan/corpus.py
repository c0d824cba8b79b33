"""Corpus construction: manifest parsing and first-parent git history mining.

Mining shells out to the git CLI.  Each repository contributes one record per
first-parent commit on the configured branch, ordered oldest to newest by
(committer timestamp, sha).  Merge commits are diffed against their first
parent; binary files keep zero churn and never count as executable; renames
keep the old path alongside the new one.
"""

import codecs
import os
import re
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ._util import read_jsonl, write_jsonl
from .errors import (
    BranchNotFound,
    DuplicateProject,
    GitInvocationFailure,
    MissingFile,
    NotARepository,
    ParseError,
)

#: Extensions (lowercased, no dot) that mark a file as executable source code.
DEFAULT_EXEC_EXTENSIONS = frozenset(
    {"py", "pyx", "pyi", "c", "cc", "cpp", "h", "hpp", "java", "js", "ts", "go", "rs", "sh"}
)


def classify_file(path: str, exec_extensions=DEFAULT_EXEC_EXTENSIONS) -> bool:
    """True when the path's extension (case-insensitive) is executable code."""
    ext = os.path.splitext(path)[1].lstrip(".").lower()
    return ext in exec_extensions


@dataclass(frozen=True)
class FileChange:
    path: str
    added: int
    deleted: int
    is_executable: bool
    rename_from: str | None = None
    is_binary: bool = False


@dataclass(frozen=True)
class CommitRecord:
    sha: str
    project: str
    author: str
    ts: int
    parent: str | None
    message: str
    files: tuple[FileChange, ...]

    def to_json(self) -> dict:
        return {
            "sha": self.sha,
            "project": self.project,
            "author": self.author,
            "ts": self.ts,
            "parent": self.parent,
            "message": self.message,
            "files": [
                {
                    "path": f.path,
                    "add": f.added,
                    "del": f.deleted,
                    "exec": f.is_executable,
                    "rename": f.rename_from,
                    "binary": f.is_binary,
                }
                for f in self.files
            ],
        }

    @staticmethod
    def from_json(obj) -> "CommitRecord":
        return CommitRecord(
            sha=obj["sha"],
            project=obj["project"],
            author=obj["author"],
            ts=int(obj["ts"]),
            parent=obj["parent"],
            message=obj["message"],
            files=tuple(
                FileChange(
                    path=f["path"],
                    added=int(f["add"]),
                    deleted=int(f["del"]),
                    is_executable=bool(f["exec"]),
                    rename_from=f.get("rename"),
                    is_binary=bool(f.get("binary", False)),
                )
                for f in obj.get("files", [])
            ),
        )


# --- manifest ---------------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    path: str
    branch: str


_HEADER_RE = re.compile(r"\[\[repo\]\]")
_PAIR_RE = re.compile(r'(\w+)\s*=\s*"([^"]*)"')


def load_manifest(path) -> list[ManifestEntry]:
    """Parse the repo manifest.

    Grammar (one entry per ``[[repo]]`` header; pairs may share its line)::

        [[repo]]
        id = "project-id"
        path = "/path/to/clone"
        branch = "main"

    ``#`` starts a comment.  All three keys are required.
    """
    if not os.path.exists(path):
        raise MissingFile(f"manifest not found: {path}")
    with open(path, encoding="utf-8") as fh:
        lines = fh.readlines()

    entries: list[dict] = []
    current: dict | None = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        pos = 0
        if _HEADER_RE.match(line):
            current = {"_line": lineno}
            entries.append(current)
            pos = len("[[repo]]")
        while pos < len(line):
            rest = line[pos:].strip()
            if not rest:
                break
            m = _PAIR_RE.match(rest)
            if m is None:
                raise ParseError(f"manifest {path}: cannot parse {rest!r}", line=lineno)
            key, value = m.group(1), m.group(2)
            if current is None:
                raise ParseError(f"manifest {path}: key outside [[repo]] entry", line=lineno)
            if key not in ("id", "path", "branch"):
                raise ParseError(f"manifest {path}: unknown key {key!r}", line=lineno)
            if key in current:
                raise ParseError(f"manifest {path}: duplicate key {key!r}", line=lineno)
            current[key] = value
            pos += line[pos:].index(m.group(0)) + len(m.group(0))

    if not entries:
        raise ParseError(f"manifest {path}: no [[repo]] entries")

    seen = set()
    out = []
    for ent in entries:
        for key in ("id", "path", "branch"):
            if key not in ent:
                raise ParseError(
                    f"manifest {path}: entry missing {key!r}", line=ent["_line"]
                )
        if ent["id"] in seen:
            raise DuplicateProject(f"manifest {path}: duplicate project id {ent['id']!r}")
        seen.add(ent["id"])
        out.append(ManifestEntry(id=ent["id"], path=ent["path"], branch=ent["branch"]))
    return out


# --- git plumbing -----------------------------------------------------------


def _git(repo_path, *args, check=True) -> subprocess.CompletedProcess:
    cmd = ["git", "-C", repo_path, *args]
    try:
        proc = subprocess.run(cmd, capture_output=True, text=True, errors="replace")
    except OSError as exc:
        raise GitInvocationFailure(f"cannot run git: {exc}") from exc
    if check and proc.returncode != 0:
        raise GitInvocationFailure(
            f"git {' '.join(args[:2])} failed in {repo_path}: {proc.stderr.strip()}"
        )
    return proc


@dataclass
class MineOptions:
    exec_extensions: frozenset = field(default_factory=lambda: DEFAULT_EXEC_EXTENSIONS)


def _unquote_path(path: str) -> str:
    # git quotes paths with special characters as C strings
    if path.startswith('"') and path.endswith('"'):
        return codecs.escape_decode(path[1:-1].encode())[0].decode("utf-8", "replace")
    return path


_BRACE_RE = re.compile(r"\{(.*?) => (.*?)\}")


def parse_numstat_path(raw: str) -> tuple[str, str | None]:
    """Resolve a numstat path cell to (new_path, old_path_or_None)."""
    raw = _unquote_path(raw.strip())
    if "=>" not in raw:
        return raw, None
    if _BRACE_RE.search(raw):
        old = _BRACE_RE.sub(lambda m: m.group(1), raw).replace("//", "/")
        new = _BRACE_RE.sub(lambda m: m.group(2), raw).replace("//", "/")
        return new, old
    old, _, new = raw.partition(" => ")
    return new.strip(), old.strip()


def author_id(name: str, email: str) -> str:
    return f"{name.strip().lower()}<{email.strip().lower()}>"


_RECORD_SEP = "\x1e"
_FIELD_SEP = "\x1f"


def mine_commits(entry: ManifestEntry, options: MineOptions | None = None) -> list[CommitRecord]:
    """Mine one repository into CommitRecords (see module docstring)."""
    options = options or MineOptions()
    repo = entry.path
    if not os.path.isdir(repo):
        raise NotARepository(f"{entry.id}: no such directory: {repo}")
    if _git(repo, "rev-parse", "--git-dir", check=False).returncode != 0:
        raise NotARepository(f"{entry.id}: not a git repository: {repo}")
    shallow = _git(repo, "rev-parse", "--is-shallow-repository")
    if shallow.stdout.strip() == "true":
        raise GitInvocationFailure(
            f"{entry.id}: shallow clone at {repo}; full history required"
        )
    verify = _git(repo, "rev-parse", "--verify", "--quiet", f"{entry.branch}^{{commit}}", check=False)
    if verify.returncode != 0:
        raise BranchNotFound(f"{entry.id}: branch {entry.branch!r} not found in {repo}")

    fmt = (
        f"{_RECORD_SEP}%H{_FIELD_SEP}%P{_FIELD_SEP}%an{_FIELD_SEP}%ae"
        f"{_FIELD_SEP}%ct{_FIELD_SEP}%B{_FIELD_SEP}"
    )
    log = _git(
        repo,
        "log",
        entry.branch,
        "--first-parent",
        "--reverse",
        "--diff-merges=first-parent",
        "--numstat",
        f"--format={fmt}",
    )

    records = []
    for chunk in log.stdout.split(_RECORD_SEP):
        if not chunk.strip():
            continue
        parts = chunk.split(_FIELD_SEP)
        if len(parts) != 7:
            raise GitInvocationFailure(
                f"{entry.id}: unexpected git log record shape ({len(parts)} fields)"
            )
        sha, parents, name, email, ts, body, numstat = parts
        files = []
        for line in numstat.splitlines():
            line = line.strip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise GitInvocationFailure(f"{entry.id}: bad numstat line {line!r}")
            add_s, del_s, path_raw = cols
            binary = add_s == "-" or del_s == "-"
            new_path, old_path = parse_numstat_path(path_raw)
            files.append(
                FileChange(
                    path=new_path,
                    added=0 if binary else int(add_s),
                    deleted=0 if binary else int(del_s),
                    is_executable=(not binary)
                    and classify_file(new_path, options.exec_extensions),
                    rename_from=old_path,
                    is_binary=binary,
                )
            )
        first_parent = parents.split()[0] if parents.split() else None
        records.append(
            CommitRecord(
                sha=sha.strip(),
                project=entry.id,
                author=author_id(name, email),
                ts=int(ts),
                parent=first_parent,
                message=body.rstrip("\n"),
                files=tuple(files),
            )
        )

    records.sort(key=lambda r: (r.ts, r.sha))
    return records


def mine_corpus(entries, options: MineOptions | None = None, jobs: int = 1) -> list[CommitRecord]:
    """Mine every manifest entry; per-repo blocks appear in manifest order."""
    if jobs > 1 and len(entries) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            blocks = list(pool.map(lambda e: mine_commits(e, options), entries))
    else:
        blocks = [mine_commits(e, options) for e in entries]
    out = []
    for block in blocks:
        out.extend(block)
    return out


# --- blob access (for code metrics) ----------------------------------------


class BlobReader:
    """Reads file contents at specific commits via one ``git cat-file --batch``
    process per repository (much cheaper than a subprocess per file)."""

    def __init__(self, repo_path):
        self.repo_path = repo_path
        self._proc = subprocess.Popen(
            ["git", "-C", repo_path, "cat-file", "--batch"],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
        )

    def read(self, sha: str, path: str) -> str | None:
        """Decoded file text at the commit, or None when absent."""
        if self._proc.poll() is not None:
            raise GitInvocationFailure(f"cat-file process died for {self.repo_path}")
        query = f"{sha}:{path}\n".encode()
        self._proc.stdin.write(query)
        self._proc.stdin.flush()
        header = self._proc.stdout.readline().decode("utf-8", "replace").strip()
        if header.endswith(("missing", "ambiguous")):
            return None
        fields = header.split()
        if len(fields) != 3:
            return None
        size = int(fields[2])
        blob = self._proc.stdout.read(size)
        self._proc.stdout.read(1)  # trailing newline
        if fields[1] != "blob":
            return None  # trees etc. still carry a payload that must be drained
        return blob.decode("utf-8", "replace")

    def close(self):
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
                self._proc.wait(timeout=5)
            except Exception:
                self._proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


# --- wire format ------------------------------------------------------------


def write_commits(path, records):
    write_jsonl(path, (r.to_json() for r in records))


def read_commits(path) -> list[CommitRecord]:
    return [CommitRecord.from_json(obj) for obj in read_jsonl(path, what="commits")]
