"""refscan: detects refactoring commits in the git history of Python projects.

The library mines first-parent commit histories, labels commits with a
keyword/rule heuristic, extracts textual, process and code-metric features,
trains a gradient-boosted decision tree (plus reference baselines) and can
explain and ensemble the resulting predictions.  The ``refscan`` command line
tool exposes each stage as a subcommand.
"""

__version__ = "0.1.0"
