"""Exception hierarchy shared across the toolkit.

Every domain failure derives from SimgradeError so the CLI can map it to a
stable exit code: 3 for domain errors, 4 for I/O problems.
"""


class SimgradeError(Exception):
    exit_code = 3


class SimgradeIOError(SimgradeError):
    exit_code = 4


# --- corpus ---

class MissingFile(SimgradeIOError):
    pass


class MalformedRecord(SimgradeError):
    def __init__(self, path, line_no, reason):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.line_no = line_no


class DuplicateId(SimgradeError):
    pass


class MixedProblemIds(SimgradeError):
    pass


class ScoreOutOfRange(SimgradeError):
    pass


class ValidationWithoutTrueScore(SimgradeError):
    pass


# --- codeprep ---

class IndentationInconsistent(SimgradeError):
    pass


class EmptyVocabulary(SimgradeError):
    pass


# --- embed ---

class EmptyCorpusAfterFilter(SimgradeError):
    pass


class NoKnownTokens(SimgradeError):
    pass


class ZeroVector(SimgradeError):
    pass


class DimensionMismatch(SimgradeError):
    pass


# --- synth ---

class UndefinedNonterminal(SimgradeError):
    pass


class NonPositiveWeight(SimgradeError):
    pass


class MissingStart(SimgradeError):
    pass


class DepthExceeded(SimgradeError):
    pass


class TooFewPrograms(SimgradeError):
    pass


# --- assign ---

class NTooLarge(SimgradeError):
    pass


class TooFewSubmissions(SimgradeError):
    pass


class KExceedsN(SimgradeError):
    pass


class StartNotInSet(SimgradeError):
    pass


# --- simulate ---

class UnknownSubmissionInQueue(SimgradeError):
    pass


class GraderHasNoRegularSubmissions(SimgradeError):
    pass


# --- stats ---

class ConstantX(SimgradeError):
    pass


class EmptySample(SimgradeError):
    pass


class NoValidationEntries(SimgradeError):
    pass


class MissingEmbedding(SimgradeError):
    pass
