class DemoSynthError(Exception):
    """Base class for all package errors."""


class ValidationError(DemoSynthError, ValueError):
    pass


class ParseError(DemoSynthError, ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{message} (line {line}, col {col})" if line else message)
        self.line = line
        self.col = col


class ActionPrecondition(DemoSynthError):
    def __init__(self, action: str, atom: str):
        super().__init__(f"precondition of {action} failed: {atom}")
        self.action = action
        self.atom = atom


class HoleEncountered(DemoSynthError):
    pass


class IndexOutOfRange(DemoSynthError):
    pass


class UnboundVariable(DemoSynthError):
    pass


class EmptyCandidateSet(DemoSynthError):
    pass


class AltPresent(DemoSynthError):
    pass


class UnsupportedHoleKind(DemoSynthError):
    pass
