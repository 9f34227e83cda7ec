"""Exception types shared across the package.

Everything derives from QnetrlError so callers (notably the CLI) can map
failures onto exit codes without enumerating modules.
"""


class QnetrlError(Exception):
    """Base class for all package errors."""


# topology construction / validation
class DuplicateNodeId(QnetrlError):
    pass


class MissingCloud(QnetrlError):
    """Raised when the topology does not contain exactly one cloud node."""


class DanglingLinkEndpoint(QnetrlError):
    pass


class NoRoute(QnetrlError):
    pass


# quantum resource model
class InvalidCompression(QnetrlError):
    """Autoencoder shape outside the supported (n, k) ranges."""


class InfeasibleTarget(QnetrlError):
    pass


# split execution
class MissingRemote(QnetrlError):
    """Nonzero offload fraction but no remote node given."""


class KeyStarvation(QnetrlError):
    """Key material is required but the route can never supply it."""


# environment
class InvalidConfig(QnetrlError):
    pass


class UnknownAgent(QnetrlError):
    pass


class MalformedAction(QnetrlError):
    pass


# learning engine
class ShapeMismatch(QnetrlError):
    pass


class InsufficientExperience(QnetrlError):
    """Replay buffer holds fewer records than the requested batch."""


class NonFiniteLoss(QnetrlError):
    pass


class UnknownPolicy(QnetrlError):
    pass


# stochastic evaluation
class SearchSpaceTooLarge(QnetrlError):
    pass


# config / io
class ParseError(QnetrlError):
    """Structural config problem: bad syntax, unknown key, wrong type."""


class IoError(QnetrlError):
    """Filesystem failure while reading or writing an artifact."""


class ValidationError(QnetrlError):
    """Config value violates a constraint.

    Carries (field, constraint) pairs; str() renders them one per line so
    the CLI can surface every violation at once.
    """

    def __init__(self, violations):
        # violations: list of (field_path, constraint_text)
        self.violations = list(violations)
        msg = "; ".join(f"{field}: {constraint}" for field, constraint in self.violations)
        super().__init__(msg)
