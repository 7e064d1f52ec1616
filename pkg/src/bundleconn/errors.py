"""Exception types shared across the package.

Every failure the engine can produce is an EngineError subclass, so callers
(and the CLI) can separate configuration mistakes from numerical failures.
"""


class EngineError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(EngineError):
    """Expression source failed to parse.

    Carries the byte offset into the source where the problem starts and a
    one-line reason.
    """

    def __init__(self, reason, offset):
        super().__init__(f"{reason} at byte {offset}")
        self.reason = reason
        self.offset = offset


class UnboundVariable(EngineError):
    """An expression referenced a variable missing from the scope."""

    def __init__(self, name):
        super().__init__(f"unbound variable {name!r}")
        self.name = name


class NonFinite(EngineError):
    """Evaluation produced NaN or an infinity at some node.

    Evaluation is strict: non-finite intermediates raise instead of
    propagating.
    """


class DomainExit(EngineError):
    """A point or finite-difference stencil left the declared region."""


class SingularFrame(EngineError):
    """A frame or frame-change matrix was singular (|det| < 1e-12)."""


class SingularJacobian(EngineError):
    """A coordinate-change Jacobian was singular (|det| < 1e-12)."""


class NotFlat(EngineError):
    """Flatness certification failed: the staircase residual was too large."""


class StepCountTooSmall(EngineError):
    """An integration was requested with fewer than 8 RK4 steps."""


class ConfigError(EngineError):
    """A problem configuration was malformed or inconsistent."""
