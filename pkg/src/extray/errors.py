"""Error types shared across the toolkit.

Every failure mode carries a stable machine-readable code so the CLI and
the HTTP service can report it uniformly.
"""


class ExtrayError(Exception):
    """Base class; ``code`` is the stable identifier, args carry details."""

    code = "ERROR"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        detail = super().__str__()
        return f"{self.code}: {detail}" if detail else self.code


class RootFindingFailed(ExtrayError):
    code = "ROOT_FINDING_FAILED"


class PeriodTooLarge(ExtrayError):
    code = "PERIOD_TOO_LARGE"


class DuplicateSourceAngle(ExtrayError):
    code = "DUPLICATE_SOURCE_ANGLE"


class NotInvariant(ExtrayError):
    code = "NOT_INVARIANT"


class TooCloseToJulia(ExtrayError):
    code = "TOO_CLOSE_TO_JULIA"


class NotRegularValue(ExtrayError):
    code = "NOT_REGULAR_VALUE"


class SeedOutside(ExtrayError):
    code = "SEED_OUTSIDE"


class ResolutionTooCoarse(ExtrayError):
    code = "RESOLUTION_TOO_COARSE"


class AngleOrbitTooLarge(ExtrayError):
    code = "ANGLE_ORBIT_TOO_LARGE"


class LevelMismatch(ExtrayError):
    code = "LEVEL_MISMATCH"


class LandingUndecided(ExtrayError):
    code = "LANDING_UNDECIDED"


class DegenerateEmbedding(ExtrayError):
    code = "DEGENERATE_EMBEDDING"


class CensusEmpty(ExtrayError):
    code = "CENSUS_EMPTY"


class NoAdmissibleValue(ExtrayError):
    code = "NO_ADMISSIBLE_VALUE"


class ContainmentFailed(ExtrayError):
    code = "CONTAINMENT_FAILED"


class DegreeOne(ExtrayError):
    code = "DEGREE_ONE"


class QuadratureUnstable(ExtrayError):
    code = "QUADRATURE_UNSTABLE"


class WTooCloseToImageBoundary(ExtrayError):
    code = "W_TOO_CLOSE_TO_IMAGE_BOUNDARY"


class NotPeriodic(ExtrayError):
    code = "NOT_PERIODIC"


class ParseError(ExtrayError):
    code = "PARSE_ERROR"


class NotMonic(ExtrayError):
    code = "NOT_MONIC"
