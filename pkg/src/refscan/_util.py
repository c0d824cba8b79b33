"""Small shared helpers: atomic file writes, JSON/JSONL io, hashing."""

import hashlib
import json
import os
import tempfile

from .errors import MissingFile, ParseError


def atomic_write_text(path, text):
    """Write text to path via a temp file + rename so readers never see
    a half-written file."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def dump_json(obj):
    """Canonical JSON text: fixed separators, keys kept in insertion order
    (all writers build dicts in a fixed order), trailing newline."""
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":")) + "\n"


def write_json(path, obj):
    atomic_write_text(path, dump_json(obj))


def write_jsonl(path, rows):
    atomic_write_text(path, "".join(dump_json(r) for r in rows))


def read_json(path, what="file"):
    if not os.path.exists(path):
        raise MissingFile(f"{what} not found: {path}")
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{what} {path}: {exc.msg}", line=exc.lineno) from exc


def read_jsonl(path, what="file"):
    if not os.path.exists(path):
        raise MissingFile(f"{what} not found: {path}")
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ParseError(f"{what} {path}: {exc.msg}", line=lineno) from exc
    return rows


def sha256_of(obj):
    """Stable content hash of a JSON-serializable object."""
    blob = json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
