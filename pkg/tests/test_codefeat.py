"""Static code metrics: line classification, structure, commit deltas."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from refscan.codefeat import (
    COLUMNS,
    CodeMetrics,
    commit_delta,
    measure_file,
    measure_source,
    metrics_delta,
)
from refscan.corpus import BlobReader, ManifestEntry, mine_commits

# Hand-traced sample: docstrings, a template string, a class with a method,
# a module-level function, trailing comments, ternary-free branch tokens.
SAMPLE = (
    '"""Module docstring.\n'
    "\n"
    "Two lines of prose.\n"
    '"""\n'
    "import os  # stdlib\n"
    "\n"
    "# standalone comment\n"
    'TEMPLATE = """raw\n'
    "text block\n"
    '"""\n'
    "\n"
    "\n"
    "class Thing:\n"
    '    """Doc line."""\n'
    "\n"
    "    def ready(self):\n"
    "        if self.a and self.b:\n"
    "            return 1\n"
    "        return 0\n"
    "\n"
    "\n"
    "def helper(values):\n"
    "    total = 0\n"
    "    for v in values:\n"
    "        if v:  # truthy\n"
    "            total += v\n"
    "    return total\n"
)


class TestMeasureSource:
    def test_hand_traced_sample(self):
        m = measure_source(SAMPLE)
        assert m.count_line == 27
        assert m.count_line_blank == 6
        assert m.count_line_code == 15
        # 6 comment-only (4 docstring lines, 1 class doc, 1 standalone)
        # plus 2 trailing comments
        assert m.count_line_comment == 8
        assert m.count_line_code_decl == 4  # import, class, two defs
        assert m.count_decl_function == 2
        assert m.count_decl_class == 1
        assert m.count_decl_method == 1
        assert m.cyclomatic_sum == 6  # each function: 1 + (if, and) / 1 + (for, if)
        assert m.cyclomatic_max == 3
        assert m.cyclomatic_avg == 3.0
        assert m.max_nesting == 3
        assert m.ratio_comment_to_code == pytest.approx(8 / 15)
        assert m.avg_count_line_code == pytest.approx(5.0)

    def test_line_partition(self):
        m = measure_source(SAMPLE)
        assert m.count_line == (
            m.count_line_blank + m.count_line_code
            # comment_only = count_line_comment - trailing(2)
            + (m.count_line_comment - 2)
        )

    def test_empty_source(self):
        assert measure_source("") == CodeMetrics()

    def test_multiline_assigned_string_is_code(self):
        m = measure_source("x = '''abc\nmore\n'''\n")
        assert m.count_line == 3
        assert m.count_line_code == 3
        assert m.count_line_comment == 0

    def test_prefixed_triple_quote_is_code_not_docstring(self):
        m = measure_source('r"""raw pattern"""\n')
        assert m.count_line_code == 1
        assert m.count_line_comment == 0

    def test_plain_module_docstring_is_comment(self):
        m = measure_source('"""one-liner"""\n')
        assert m.count_line_code == 0
        assert m.count_line_comment == 1

    def test_escaped_quotes_and_hash_in_string(self):
        m = measure_source("s = 'it\\'s'  # note\nx = \"#not a comment\"\n")
        assert m.count_line_code == 2
        assert m.count_line_comment == 1  # only the trailing comment

    def test_unterminated_string_does_not_crash(self):
        m = measure_source("x = 'abc\n")
        assert m.count_line_code == 1

    def test_blank_lines_with_spaces(self):
        m = measure_source("   \n\t\n")
        assert m.count_line_blank == 2

    def test_async_def_counts_as_function(self):
        m = measure_source("async def go():\n    await x\n")
        assert m.count_decl_function == 1
        assert m.count_line_code_decl == 1

    def test_decorator_is_declarative(self):
        m = measure_source("@wraps\ndef g():\n    pass\n")
        assert m.count_line_code_decl == 2

    def test_ternary_and_comprehension_branches(self):
        src = (
            "def pick(xs):\n"
            "    best = [x for x in xs if x > 0]\n"
            "    return 1 if best else 0\n"
        )
        m = measure_source(src)
        assert m.cyclomatic_sum == 4  # 1 + for + two ifs

    def test_branch_tokens_inside_strings_ignored(self):
        m = measure_source("def f():\n    return 'if and or while'\n")
        assert m.cyclomatic_sum == 1

    def test_nested_functions_attribute_to_innermost(self):
        src = (
            "def outer():\n"
            "    def inner():\n"
            "        if x:\n"
            "            return 1\n"
            "    return inner\n"
        )
        m = measure_source(src)
        assert m.count_decl_function == 2
        # inner: 1 + if = 2; outer: 1 + 0 = 1
        assert m.cyclomatic_sum == 3
        assert m.cyclomatic_max == 2
        # outer owns its def line and the final return; inner owns three lines
        assert m.avg_count_line_code == pytest.approx((2 + 3) / 2)

    def test_method_requires_enclosing_class_block(self):
        m = measure_source("class C:\n    def m(self):\n        pass\n")
        assert m.count_decl_method == 1
        n = measure_source("def f():\n    pass\n")
        assert n.count_decl_method == 0

    def test_tabs_expand_for_indentation(self):
        src = "def f():\n\tif x:\n\t\treturn 1\n"
        m = measure_source(src)
        assert m.max_nesting == 2
        assert m.cyclomatic_sum == 2

    @given(st.text(max_size=300))
    def test_total_function_invariants(self, text):
        m = measure_source(text)
        assert m.count_line == len(text.splitlines())
        assert m.count_line_blank + m.count_line_code <= m.count_line
        # comment lines = comment-only + trailing, and trailing lines are code
        assert m.count_line_comment <= m.count_line - m.count_line_blank
        assert m.count_decl_method <= m.count_decl_function
        assert m.count_decl_function <= m.count_line_code
        assert m.cyclomatic_sum >= m.count_decl_function
        assert m.cyclomatic_max <= m.cyclomatic_sum
        assert 0 <= m.cyclomatic_avg <= m.cyclomatic_max


class TestMeasureFile:
    def test_python_extensions_case_insensitive(self):
        m = measure_file("MOD.PYX", "def f():\n    return 1\n")
        assert m.count_decl_function == 1

    def test_non_python_keeps_line_metrics_only(self):
        text = "def f():\n    return 1\n# comment\n"
        m = measure_file("notes.txt", text)
        assert m.count_line == 3
        assert m.count_line_code == 2
        assert m.count_line_comment == 1
        assert m.count_decl_function == 0
        assert m.cyclomatic_sum == 0
        assert m.max_nesting == 0

    def test_extensionless_path_is_non_python(self):
        assert measure_file("Makefile", "def f():\n    pass\n").count_decl_function == 0


class TestMetricsDelta:
    def test_after_minus_before(self):
        before = measure_source("x = 1\n")
        after = measure_source("x = 1\ny = 2\n")
        delta = metrics_delta(before, after)
        assert delta["count_line"] == 1.0
        assert delta["count_line_code"] == 1.0

    def test_missing_sides(self):
        m = measure_source("def f():\n    pass\n")
        grown = metrics_delta(None, m)
        assert grown["count_decl_function"] == 1.0
        shrunk = metrics_delta(m, None)
        assert shrunk["count_decl_function"] == -1.0
        assert set(metrics_delta(None, None)) == set(COLUMNS)
        assert all(v == 0.0 for v in metrics_delta(None, None).values())


class TestCommitDelta:
    @pytest.fixture()
    def mined(self, mini_repo):
        entry = ManifestEntry(id="mini", path=str(mini_repo["path"]), branch="main")
        return {r.sha: r for r in mine_commits(entry)}

    def test_rename_commit_reads_before_side_at_old_path(self, mini_repo, mined):
        commit = mined[mini_repo["rename"]]
        with BlobReader(str(mini_repo["path"])) as reader:
            delta = commit_delta(commit, reader)
        # a.py grew by one function; the renamed file is content-identical
        assert delta["count_line"] == 4.0
        assert delta["count_line_blank"] == 2.0
        assert delta["count_line_code"] == 2.0
        assert delta["count_decl_function"] == 1.0
        assert delta["count_line_code_decl"] == 1.0
        assert delta["cyclomatic_sum"] == 1.0
        assert delta["cyclomatic_max"] == 0.0
        assert delta["cyclomatic_avg"] == 0.0
        assert delta["avg_count_line_code"] == 0.0

    def test_initial_commit_has_no_before_side(self, mini_repo, mined):
        commit = mined[mini_repo["initial"]]
        with BlobReader(str(mini_repo["path"])) as reader:
            delta = commit_delta(commit, reader)
        # a.py + sub/mod.py + café.py, all newly added
        assert delta["count_line"] == 5.0
        assert delta["count_line_code"] == 5.0
        assert delta["count_decl_function"] == 2.0
        assert delta["cyclomatic_sum"] == 2.0

    def test_merge_commit_diffs_against_first_parent(self, mini_repo, mined):
        commit = mined[mini_repo["merge"]]
        with BlobReader(str(mini_repo["path"])) as reader:
            delta = commit_delta(commit, reader)
        assert delta["count_line"] == 2.0
        assert delta["count_decl_function"] == 1.0

    def test_binary_commit_contributes_nothing(self, mini_repo, mined):
        commit = mined[mini_repo["binary"]]
        with BlobReader(str(mini_repo["path"])) as reader:
            delta = commit_delta(commit, reader)
        assert all(v == 0.0 for v in delta.values())
