"""Exception hierarchy shared by all reeblab modules."""


class ReeblabError(ValueError):
    """Base class for every error raised by the library."""


class DomainError(ReeblabError):
    pass


class DegenerateFormError(ReeblabError):
    pass


class IncompatibleGermsError(ReeblabError):
    pass


class SewingError(ReeblabError):
    pass


class NotEllipticError(ReeblabError):
    pass


class InvalidSiteError(ReeblabError):
    pass


class AreaFormObstructionError(ReeblabError):
    pass


class EdgeError(ReeblabError):
    pass


class AssemblyError(ReeblabError):
    pass


class DegeneracyError(ReeblabError):
    """A transverse Hessian is rank deficient, so the critical set is not Morse-Bott."""


class PreconditionError(ReeblabError):
    pass


class ResolutionError(ReeblabError):
    pass


class InconsistentRecordError(ReeblabError):
    pass


class GcdError(ReeblabError):
    def __init__(self, gcd: int):
        super().__init__(f"vector is not primitive: gcd = {gcd}")
        self.gcd = gcd


class ParityError(ReeblabError):
    pass


class ModelInvalidError(ReeblabError):
    pass


class ConfigError(ReeblabError):
    """Malformed input document (CLI exit code 2)."""
