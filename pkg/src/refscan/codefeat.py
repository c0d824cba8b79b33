"""Static code metrics of changed files, and commit-level metric deltas.

The analyzer is a line scanner, not a parser: it never rejects input, tracks
string/comment state across lines, and derives structure from indentation
(tabs expand to 4 columns).  Frozen conventions:

* a line is blank, comment-only, or code; code lines may additionally carry a
  trailing comment, so ``count_line == blank + code + comment_only`` while
  ``count_line_comment`` counts comment-only plus trailing-comment lines;
* triple-quoted strings opening at statement position are docstrings and all
  their lines count as comment; other multi-line strings count as code;
* declarative code lines start with def/class/import/from/global/nonlocal or
  a decorator;
* every ``def`` is a function; defs directly inside a class block also count
  as methods;
* cyclomatic complexity of a function is 1 + occurrences of
  if/elif/for/while/except/and/or among its body's code tokens (string and
  comment content excluded; ternary and comprehension forms count through
  their ``if``/``for`` tokens); each token belongs to the innermost def;
* nesting depth of a block opener is 1 + the number of enclosing open blocks;
* non-Python files get the line metrics only (structural fields stay 0).
"""

import re
import statistics
from dataclasses import dataclass

from .corpus import BlobReader, CommitRecord

#: Metric column order used everywhere downstream.
COLUMNS = (
    "count_line",
    "count_line_blank",
    "count_line_code",
    "count_line_comment",
    "count_line_code_decl",
    "count_decl_function",
    "count_decl_class",
    "count_decl_method",
    "cyclomatic_sum",
    "cyclomatic_max",
    "cyclomatic_avg",
    "max_nesting",
    "ratio_comment_to_code",
    "avg_count_line_code",
)

PYTHON_EXTENSIONS = frozenset({"py", "pyi", "pyx"})

_BRANCH_TOKENS = frozenset({"if", "elif", "for", "while", "except", "and", "or"})
_BLOCK_KEYWORDS = frozenset(
    {"if", "elif", "else", "for", "while", "try", "except", "finally",
     "with", "def", "class", "async", "match", "case"}
)
_DECL_KEYWORDS = frozenset({"def", "class", "import", "from", "global", "nonlocal"})
_TOKEN_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_STRING_PREFIX = frozenset("rbfu")


@dataclass(frozen=True)
class CodeMetrics:
    count_line: int = 0
    count_line_blank: int = 0
    count_line_code: int = 0
    count_line_comment: int = 0
    count_line_code_decl: int = 0
    count_decl_function: int = 0
    count_decl_class: int = 0
    count_decl_method: int = 0
    cyclomatic_sum: int = 0
    cyclomatic_max: int = 0
    cyclomatic_avg: float = 0.0
    max_nesting: int = 0
    ratio_comment_to_code: float = 0.0
    avg_count_line_code: float = 0.0

    def as_dict(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in COLUMNS}


def _is_prefix_only(before_quote: str) -> bool:
    text = before_quote.strip().lower()
    return len(text) <= 2 and all(ch in _STRING_PREFIX for ch in text)


class _Line:
    __slots__ = ("blank", "comment_only", "code", "trailing_comment", "indent", "tokens", "decl")

    def __init__(self):
        self.blank = False
        self.comment_only = False
        self.code = False
        self.trailing_comment = False
        self.indent = 0
        self.tokens: list[str] = []
        self.decl = False


def _scan(text: str) -> list[_Line]:
    """Classify each physical line and extract its code-only tokens."""
    lines = []
    in_triple: tuple[str, bool] | None = None  # (delimiter, is_docstring)
    for raw in text.splitlines():
        expanded = raw.expandtabs(4)
        line = _Line()
        line.indent = len(expanded) - len(expanded.lstrip(" "))
        pos = 0
        code_chars: list[str] = []
        saw_string = False
        saw_doc = False

        if in_triple is not None:
            delim, is_doc = in_triple
            idx = expanded.find(delim)
            if idx < 0:
                if is_doc:
                    line.comment_only = True
                else:
                    line.code = True
                lines.append(line)
                continue
            pos = idx + len(delim)
            saw_doc = saw_doc or is_doc
            saw_string = saw_string or not is_doc
            in_triple = None

        has_comment = False
        while pos < len(expanded):
            ch = expanded[pos]
            if ch == "#":
                has_comment = True
                break
            if ch in "\"'":
                delim3 = ch * 3
                if expanded.startswith(delim3, pos):
                    is_doc = _is_prefix_only(expanded[:pos]) and not code_chars_meaningful(code_chars)
                    end = expanded.find(delim3, pos + 3)
                    if end < 0:
                        in_triple = (delim3, is_doc)
                        pos = len(expanded)
                    else:
                        pos = end + 3
                    saw_doc = saw_doc or is_doc
                    saw_string = saw_string or not is_doc
                    continue
                # single-quoted string: skip to unescaped closing quote
                pos += 1
                while pos < len(expanded):
                    if expanded[pos] == "\\":
                        pos += 2
                        continue
                    if expanded[pos] == ch:
                        pos += 1
                        break
                    pos += 1
                saw_string = True
                continue
            code_chars.append(ch)
            pos += 1

        code_text = "".join(code_chars)
        meaningful = bool(code_text.strip()) or saw_string
        if meaningful:
            line.code = True
            line.trailing_comment = has_comment
            line.tokens = _TOKEN_RE.findall(code_text)
            first = line.tokens[0] if line.tokens else ""
            second = line.tokens[1] if len(line.tokens) > 1 else ""
            line.decl = (
                first in _DECL_KEYWORDS
                or (first == "async" and second == "def")
                or code_text.strip().startswith("@")
            )
        elif saw_doc or has_comment:
            line.comment_only = True
        else:
            line.blank = True
        lines.append(line)
    return lines


def code_chars_meaningful(code_chars: list[str]) -> bool:
    return bool("".join(code_chars).strip())


def _structure(lines: list[_Line]):
    """Walk code lines with an indentation stack to find functions, classes,
    methods, per-function branch tokens and code-line counts, and nesting."""
    stack: list[dict] = []  # {"kind": str, "indent": int, "fn": dict | None}
    functions: list[dict] = []  # {"branches": int, "code_lines": int, "method": bool}
    n_classes = 0
    max_nesting = 0

    for line in lines:
        if not line.code:
            continue
        while stack and line.indent <= stack[-1]["indent"]:
            stack.pop()

        toks = line.tokens
        first = toks[0] if toks else ""
        second = toks[1] if len(toks) > 1 else ""
        is_def = first == "def" or (first == "async" and second == "def")
        is_class = first == "class"
        opens_block = first in _BLOCK_KEYWORDS and line.tokens

        enclosing_fn = None
        for entry in reversed(stack):
            if entry["fn"] is not None:
                enclosing_fn = entry["fn"]
                break

        fn_record = None
        if is_def:
            parent_kind = stack[-1]["kind"] if stack else None
            fn_record = {"branches": 0, "code_lines": 0, "method": parent_kind == "class"}
            functions.append(fn_record)
        elif is_class:
            n_classes += 1

        # attribute this line's code and branch tokens to the innermost def
        owner = fn_record if fn_record is not None else enclosing_fn
        if owner is not None:
            owner["code_lines"] += 1
            owner["branches"] += sum(1 for t in toks if t in _BRANCH_TOKENS)

        if opens_block:
            depth = len(stack) + 1
            max_nesting = max(max_nesting, depth)
            kind = "def" if is_def else ("class" if is_class else "other")
            stack.append({"kind": kind, "indent": line.indent, "fn": fn_record if is_def else None})

    return functions, n_classes, max_nesting


def measure_source(text: str) -> CodeMetrics:
    """Metrics of one Python source text.  Total: any input yields a result."""
    lines = _scan(text)
    count_line = len(lines)
    blank = sum(1 for l in lines if l.blank)
    comment_only = sum(1 for l in lines if l.comment_only)
    code = sum(1 for l in lines if l.code)
    trailing = sum(1 for l in lines if l.trailing_comment)

    decl = sum(1 for l in lines if l.decl)

    functions, n_classes, max_nesting = _structure(lines)
    cyclomatic = [1 + fn["branches"] for fn in functions]
    fn_code_lines = [fn["code_lines"] for fn in functions]

    return CodeMetrics(
        count_line=count_line,
        count_line_blank=blank,
        count_line_code=code,
        count_line_comment=comment_only + trailing,
        count_line_code_decl=decl,
        count_decl_function=len(functions),
        count_decl_class=n_classes,
        count_decl_method=sum(1 for fn in functions if fn["method"]),
        cyclomatic_sum=sum(cyclomatic),
        cyclomatic_max=max(cyclomatic, default=0),
        cyclomatic_avg=statistics.fmean(cyclomatic) if cyclomatic else 0.0,
        max_nesting=max_nesting,
        ratio_comment_to_code=(comment_only + trailing) / code if code else 0.0,
        avg_count_line_code=statistics.fmean(fn_code_lines) if fn_code_lines else 0.0,
    )


def measure_file(path: str, text: str) -> CodeMetrics:
    """Full metrics for Python files; line metrics only otherwise."""
    ext = path.rsplit(".", 1)[-1].lower() if "." in path else ""
    metrics = measure_source(text)
    if ext in PYTHON_EXTENSIONS:
        return metrics
    return CodeMetrics(
        count_line=metrics.count_line,
        count_line_blank=metrics.count_line_blank,
        count_line_code=metrics.count_line_code,
        count_line_comment=metrics.count_line_comment,
        ratio_comment_to_code=metrics.ratio_comment_to_code,
    )


_ZERO = CodeMetrics()


def metrics_delta(before: CodeMetrics | None, after: CodeMetrics | None) -> dict[str, float]:
    """after - before per column, a missing side contributing zeros."""
    b = (before or _ZERO).as_dict()
    a = (after or _ZERO).as_dict()
    return {name: a[name] - b[name] for name in COLUMNS}


def commit_delta(commit: CommitRecord, reader: BlobReader) -> dict[str, float]:
    """Sum of per-file metric deltas over the commit's executable files.

    File content comes from the repository: the after side at the commit, the
    before side at its first parent (the old path for renames).
    """
    total = {name: 0.0 for name in COLUMNS}
    for change in commit.files:
        if not change.is_executable:
            continue
        after_text = reader.read(commit.sha, change.path)
        after = measure_file(change.path, after_text) if after_text is not None else None
        before = None
        if commit.parent is not None:
            before_path = change.rename_from or change.path
            before_text = reader.read(commit.parent, before_path)
            if before_text is not None:
                before = measure_file(before_path, before_text)
        delta = metrics_delta(before, after)
        for name in COLUMNS:
            total[name] += delta[name]
    return total
