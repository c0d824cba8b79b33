"""Exception hierarchy shared by all refscan modules.

Every error that maps to a data/contract problem derives from RefscanError so
the command line layer can translate it into exit code 2 with a one-line
diagnostic.
"""


class RefscanError(Exception):
    """Base class for all refscan domain errors."""


# --- corpus / manifest ---------------------------------------------------


class MissingFile(RefscanError):
    pass


class ParseError(RefscanError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateProject(RefscanError):
    pass


class NotARepository(RefscanError):
    pass


class BranchNotFound(RefscanError):
    pass


class GitInvocationFailure(RefscanError):
    pass


# --- features / pipeline -------------------------------------------------


class EmptyInput(RefscanError):
    pass


class EmptyTraining(RefscanError):
    pass


class DegenerateInput(RefscanError):
    pass


class SchemaMismatch(RefscanError):
    pass


# --- sampling / model ----------------------------------------------------


class SingleClassInput(RefscanError):
    pass


class EmptyDataset(RefscanError):
    pass


class WidthMismatch(RefscanError):
    pass


class LengthMismatch(RefscanError):
    pass


class UnknownModelKind(RefscanError):
    pass


# --- explain ---------------------------------------------------------------


class DegenerateInstance(RefscanError):
    pass
