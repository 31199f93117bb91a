class OkamotoError(Exception):
    """Base class for failures raised by the okamoto package."""


class ValidationError(OkamotoError, ValueError):
    """A precondition was violated. `code` is machine readable."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message

    def to_dict(self) -> dict:
        return {"error": self.code, "message": self.message}


class ToleranceError(OkamotoError):
    """The requested tolerance could not be met within the term cap."""

    def __init__(self, best_bound: float, terms: int, tol: float):
        super().__init__(f"tolerance {tol:g} not reached after {terms} terms (best bound {best_bound:g})")
        self.best_bound = best_bound
        self.terms = terms
        self.tol = tol


class RootBracketError(OkamotoError):
    """A sign-change bracket was lost while isolating polynomial roots."""


def require(condition: bool, code: str, message: str):
    if not condition:
        raise ValidationError(code, message)
