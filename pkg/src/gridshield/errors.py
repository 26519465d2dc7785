"""Exception hierarchy shared across the package."""

from __future__ import annotations


class GridShieldError(Exception):
    """Base class for all package-specific errors."""


class CaseFormatError(GridShieldError):
    """A grid case file is malformed or violates a case invariant.

    Carries optional origin/line/column context, rendered into the message.
    """

    def __init__(
        self,
        message: str,
        *,
        origin: str | None = None,
        line: int | None = None,
        column: int | None = None,
    ) -> None:
        self.origin = origin
        self.line = line
        self.column = column
        prefix = ""
        if origin is not None:
            prefix = origin
            if line is not None:
                prefix += f":{line}"
                if column is not None:
                    prefix += f":{column}"
            prefix += ": "
        elif line is not None:
            prefix = f"line {line}: "
        super().__init__(prefix + message)


class UnobservableModelError(GridShieldError):
    """A meter configuration does not determine the state up to the reference."""


class SolverError(GridShieldError):
    """A numerical solver failed (non-convergence, singularity, bad input)."""


class SingularKKTError(SolverError):
    """The KKT system of an equality-constrained problem is singular."""


class InfeasibleAttackError(GridShieldError):
    """No attack vector satisfies the requested constraints."""


class CalibrationError(GridShieldError):
    """Detector threshold calibration failed (e.g. degenerate null sample)."""


class ConfigError(GridShieldError):
    """Invalid experiment or command-line configuration."""
