"""Exception hierarchy for the curved chip force model."""


class CurvedChipError(Exception):
    """Base class for all errors raised by this package."""


class FeedTooLarge(CurvedChipError):
    """Subsequent cuts no longer overlap (feed above the geometric maximum)."""


class DegenerateRegion(CurvedChipError):
    """The uncut chip region has vanishing depth or area."""


class MeshFailure(CurvedChipError):
    pass


class SingularJacobian(CurvedChipError):
    pass


class SingularSystem(CurvedChipError):
    """The reduced plate stiffness matrix cannot be factorized."""


class ZeroGradient(CurvedChipError):
    pass


class GimbalSingularity(CurvedChipError):
    """cos(alpha_n) vanishes, local angles are undefined."""


class TraceStalled(CurvedChipError):
    pass


class InvalidChipThickness(CurvedChipError):
    pass


class NoConvergence(CurvedChipError):
    pass


class ConfigError(CurvedChipError):
    pass
