"""Exception hierarchy shared by the loader, solver and engine."""


class AnalyzerError(Exception):
    """Base class for every error raised by this package."""


class DecodeError(AnalyzerError):
    pass


class MalformedVarint(DecodeError):
    pass


class BadMagic(DecodeError):
    pass


class BadVersion(DecodeError):
    pass


class MalformedSection(DecodeError):
    pass


class WidthMismatch(AnalyzerError):
    pass


class SolverUnavailable(AnalyzerError):
    """The SMT solver could not be launched or broke protocol."""


class InstantiationError(AnalyzerError):
    pass


class OffsetOutOfBounds(InstantiationError):
    pass


class NonConstInitializer(InstantiationError):
    pass


class InvalidName(AnalyzerError):
    pass


class InvalidNameChar(InvalidName):
    pass


class NameTooLong(InvalidName):
    pass


class PlatformError(AnalyzerError):
    """Platform auto-detection found both or neither import namespace."""


class AnalysisTimeout(AnalyzerError):
    pass
