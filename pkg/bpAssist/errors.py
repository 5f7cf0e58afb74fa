"""
Exception hierarchy for bpAssist.

Every error carries a stable ``prefix`` so the CLI can print a single
diagnostic line (``E-PARSE: ...``) without inspecting the exception type.
"""
from __future__ import annotations

from typing import Optional


class BpAssistError(Exception):
    prefix = "E-INTERNAL"


# ---------------------------------------------------------------------------
# frontend
# ---------------------------------------------------------------------------
class FrontendError(BpAssistError):
    prefix = "E-PARSE"


class LexError(FrontendError):
    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class ParseError(FrontendError):
    def __init__(self, line: int, expected: str, found: str) -> None:
        super().__init__(f"line {line}: expected {expected}, found {found}")
        self.line = line
        self.expected = expected
        self.found = found


class DuplicateFunction(FrontendError):
    def __init__(self, name: str) -> None:
        super().__init__(f"function '{name}' defined more than once")
        self.name = name


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------
class ExecutionError(BpAssistError):
    prefix = "E-TEST"


class MiniLangRuntimeError(ExecutionError):
    def __init__(self, line: Optional[int], reason: str) -> None:
        where = f"line {line}" if line is not None else "call"
        super().__init__(f"{where}: {reason}")
        self.line = line
        self.reason = reason


class StepLimitExceeded(ExecutionError):
    def __init__(self, limit: int) -> None:
        super().__init__(f"step limit of {limit} statements exceeded")
        self.limit = limit


class SuiteFormatError(ExecutionError):
    pass


class FixDoesNotPass(ExecutionError):
    pass


# ---------------------------------------------------------------------------
# analysis
# ---------------------------------------------------------------------------
class UnknownLine(BpAssistError):
    prefix = "E-SLICE"

    def __init__(self, line: int) -> None:
        super().__init__(f"line {line} is not a dependence-graph node")
        self.line = line


class EmptyDiff(BpAssistError):
    prefix = "E-DIFF"

    def __init__(self) -> None:
        super().__init__("no differences between student and fixed program")


# ---------------------------------------------------------------------------
# retrieval store
# ---------------------------------------------------------------------------
class StoreError(BpAssistError):
    prefix = "E-STORE"


class DuplicateId(StoreError):
    pass


class NotNormalized(StoreError):
    pass


class DimensionMismatch(StoreError):
    pass


class EmptyText(StoreError):
    pass


class StoreNotFound(StoreError):
    pass


class CorruptStore(StoreError):
    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"record {line}: {message}")
        self.line = line


# ---------------------------------------------------------------------------
# repair
# ---------------------------------------------------------------------------
class RepairError(BpAssistError):
    prefix = "E-REPAIR"


class StudentAlreadyPasses(RepairError):
    pass


class AllCandidatesRejected(RepairError):
    pass


class ProviderError(RepairError):
    pass


# ---------------------------------------------------------------------------
# evaluation / configuration
# ---------------------------------------------------------------------------
class CorpusError(BpAssistError):
    prefix = "E-CORPUS"


class ConfigError(BpAssistError):
    prefix = "E-CONFIG"
