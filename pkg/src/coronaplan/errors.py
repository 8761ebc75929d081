"""Exception types shared across the package."""


class CoronaPlanError(Exception):
    """Base class for all package-specific errors."""


class LayoutError(CoronaPlanError, ValueError):
    """A corona layout violates a structural invariant (widths, radii, monotonicity)."""


class ModelInfeasible(CoronaPlanError):
    """The covering cluster count exceeds the corona population (head fraction > 1)."""


class Infeasible(CoronaPlanError):
    """No corona count or width vector satisfies the transmission-distance bounds."""


class GridTooLarge(CoronaPlanError):
    """Exhaustive grid enumeration would exceed the evaluation budget."""


class InfeasibleProvision(CoronaPlanError):
    """Integerized node counts cannot support the required cluster counts."""


class SchemaMismatch(CoronaPlanError):
    """A plan file declares an unsupported schema version."""


class ParseError(CoronaPlanError, ValueError):
    """A plan file is malformed; the message names the offending location."""

    def __init__(self, location: str, message: str):
        self.location = location
        super().__init__(f"{location}: {message}")


class ConfigError(CoronaPlanError):
    """A run configuration file is missing, malformed, or violates an invariant."""
