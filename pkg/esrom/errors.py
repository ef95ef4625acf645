"""
Exception hierarchy for esrom.

Every error raised on purpose by the pipeline derives from EsromError and
carries an ``exit_code`` the CLI maps to the process status.
"""

from typing import Optional

import numpy as np


class EsromError(Exception):
    """Base class for all pipeline errors"""

    exit_code = 1


class ConfigError(EsromError):
    """Invalid run configuration (unknown keys, out-of-range values, bad preset)"""

    exit_code = 2


class NumericalError(EsromError):
    """Numerical abort: positivity loss, singular systems, failed solves"""

    exit_code = 3


class NumericsError(NumericalError, ValueError):
    """Non-finite or malformed matrix input to a linear-algebra routine"""


class PositivityError(NumericalError):
    """Inadmissible state (nonpositive density or pressure, or v_last >= 0)

    Attributes:
        index: Grid point (or evaluation point) index of the first offender
        quantity: Name of the offending quantity ("density", "pressure", ...)
        value: Offending value
        step: Time step number, filled in by the integrator
        time: Simulation time, filled in by the integrator
    """

    def __init__(
        self,
        index: int,
        quantity: str,
        value: float,
        step: Optional[int] = None,
        time: Optional[float] = None,
    ):
        self.index = int(index)
        self.quantity = quantity
        self.value = float(value)
        self.step = step
        self.time = time
        super().__init__(self._message())

    def _message(self) -> str:
        msg = f"nonpositive {self.quantity} {self.value:.6g} at point {self.index}"
        if self.step is not None:
            msg += f" (step {self.step}, t = {self.time:.6g})"
        return msg

    def at_step(self, step: int, time: float) -> "PositivityError":
        """Return a copy annotated with the time step where it occurred"""
        return PositivityError(self.index, self.quantity, self.value, step, time)


class NotPositiveDefiniteError(NumericalError):
    """Cholesky factorization hit a nonpositive pivot

    Raised for singular hyper-reduced test mass matrices; the fix is to add
    stabilizing points.
    """

    def __init__(self, pivot: int, context: str = ""):
        self.pivot = int(pivot)
        msg = f"matrix is not positive definite (nonpositive pivot at index {self.pivot})"
        if context:
            msg = f"{context}: {msg}"
        super().__init__(msg)


class ConvergenceError(NumericalError):
    """Iterative routine hit its cap; carries the best iterate seen"""

    def __init__(self, message: str, best: np.ndarray, residual: float):
        self.best = best
        self.residual = float(residual)
        super().__init__(f"{message} (best residual {self.residual:.3e})")


class CubatureError(NumericalError):
    """Greedy cubature exhausted candidates or boundary constraints infeasible"""

    def __init__(self, message: str, residual: float = float("nan")):
        self.residual = float(residual)
        super().__init__(message)


class ArtifactError(EsromError):
    """Unreadable, truncated or malformed artifact file"""

    exit_code = 4


class FingerprintError(ArtifactError):
    """Artifact was derived from different inputs than the ones supplied"""
