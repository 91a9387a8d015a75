"""Exception hierarchy shared by every part of the simulator."""


class ProvetError(Exception):
    """Base class for all errors raised by this package."""


# ---------------------------------------------------------------- config


class ConfigError(ProvetError, ValueError):
    """An architecture description violates one or more invariants.

    ``violations`` lists every problem found, not only the first one; the
    concrete exception class is the class of the first violation.
    """

    code = "ConfigError"

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations) if violations else [self]

    @property
    def codes(self):
        return [v.code for v in self.violations]


class NonIntegerPortRatio(ConfigError):
    code = "NonIntegerPortRatio"


class NonIntegerLaneCount(ConfigError):
    code = "NonIntegerLaneCount"


class ZeroDimension(ConfigError):
    code = "ZeroDimension"


class ShuffleRangeExceedsVfu(ConfigError):
    code = "ShuffleRangeExceedsVfu"


class VfuGroupingError(ConfigError):
    code = "VfuGroupingError"


class UnknownConfigKey(ConfigError):
    code = "UnknownConfigKey"


class InvalidConfigValue(ConfigError):
    code = "InvalidConfigValue"


# -------------------------------------------------------------- datapath


class DatapathError(ProvetError):
    pass


class AddressOutOfRange(DatapathError, IndexError):
    pass


class SliceOutOfRange(DatapathError, IndexError):
    pass


class WidthMismatch(DatapathError, ValueError):
    pass


class LaneCountMismatch(DatapathError, ValueError):
    pass


class LaneValueOutOfRange(DatapathError, ValueError):
    pass


# -------------------------------------------------------------- shuffles


class ShuffleError(ProvetError):
    pass


class StepExceedsRange(ShuffleError, ValueError):
    pass


class BlockSizeMismatch(ShuffleError, ValueError):
    pass


class DuplicateDestination(ShuffleError, ValueError):
    pass


class IndexOutOfRange(ShuffleError, IndexError):
    pass


# ------------------------------------------------------------- assembler


class AsmError(ProvetError):
    """Assembly source problem, tagged with a 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ParseError(AsmError):
    pass


class UnknownMnemonic(ParseError):
    pass


class UnresolvedLabel(ParseError):
    pass


class OperandRangeError(ParseError):
    pass


# ------------------------------------------------------------- execution


class SimulationFault(ProvetError):
    """A component error raised while executing an instruction.

    The machine state is left exactly as it was before the faulting
    instruction started.
    """

    def __init__(self, pc, instruction, cause, context=None):
        self.pc = pc
        self.instruction = instruction
        self.cause = cause
        self.context = context or {}
        super().__init__(f"fault at pc={pc} ({instruction}): {type(cause).__name__}: {cause}")


class CycleLimitExceeded(ProvetError):
    def __init__(self, limit, report):
        self.limit = limit
        self.report = report
        super().__init__(f"cycle limit {limit} exceeded (pc={report.final_pc})")


# --------------------------------------------------------------- mapping


class MappingError(ProvetError, ValueError):
    pass


class DoesNotFitWithoutFolding(MappingError):
    pass


class KernelTooWide(MappingError):
    pass


class SramCapacityExceeded(MappingError):
    pass


class Unfoldable(MappingError):
    pass


class FoldNotRequired(MappingError):
    pass


class UnknownTemplate(MappingError):
    pass


class ParamValidation(MappingError):
    pass


# ---------------------------------------------------------------- oracle


class OracleError(ProvetError, ValueError):
    pass


class KernelLargerThanImage(OracleError):
    pass


class DimMismatch(OracleError):
    pass


# -------------------------------------------------------------- analysis


class ZeroMemoryAccesses(RuntimeWarning):
    """A run made no SRAM accesses, so its compute-to-memory ratio is infinite."""
