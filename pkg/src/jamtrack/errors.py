class JamtrackError(Exception):
    """Base class for all jamtrack errors."""


class EmptyInputError(JamtrackError):
    """No usable records in the input."""


class DegenerateFreeFlowError(JamtrackError):
    """Free-flow speed estimate is not positive."""


class FormatError(JamtrackError):
    """Malformed input file or inconsistent shapes."""
