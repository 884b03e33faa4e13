"""
Exception hierarchy for the parametric LANDO library.

Input contract violations (bad shapes, non-finite entries, invalid settings)
raise ``ValueError``; numerical failures raise a ``LandoError`` subclass.
"""
from typing import Optional, Sequence


def _rebuild(cls, state, args):
    # subclasses take custom __init__ arguments; rebuild from args and attributes
    error = cls.__new__(cls)
    error.args = args
    error.__dict__.update(state)
    return error


class LandoError(RuntimeError):
    """Base class for numerical failures inside the library."""

    def __reduce__(self):
        return _rebuild, (type(self), self.__dict__, self.args)


class IllConditionedDictionaryError(LandoError):
    """Dictionary kernel matrix cannot be factored reliably."""

    def __init__(self, message: str, condition_estimate: float):
        super().__init__(f"{message} (condition estimate {condition_estimate:.3e})")
        self.condition_estimate = condition_estimate


class DegenerateKernelMatrixError(LandoError):
    """Every singular value of k(X~, X) falls below the pseudoinverse cutoff."""

    def __init__(self, message: str = "degenerate kernel matrix"):
        super().__init__(message)


class IntegrationBlowUpError(LandoError):
    """Surrogate trajectory produced a non-finite state."""

    def __init__(self, message: str, time: Optional[float] = None, step: Optional[int] = None):
        where = []
        if time is not None:
            where.append(f"t={time:.6g}")
        if step is not None:
            where.append(f"step={step}")
        suffix = f" at {', '.join(where)}" if where else ""
        super().__init__(f"{message}{suffix}")
        self.time = time
        self.step = step


class TrainingDivergenceError(LandoError):
    """Neural map loss became non-finite."""

    def __init__(self, epoch: int):
        super().__init__(f"non-finite loss at epoch {epoch}")
        self.epoch = epoch


class SolverError(LandoError):
    """Reference solver failed."""


class ZeroReferenceError(LandoError):
    """Relative error requested against a zero-norm reference state."""


class InstanceError(LandoError):
    """Failure attributed to a single parameter instance."""

    def __init__(self, mu: Sequence[float], cause: BaseException):
        mu_text = ", ".join(f"{value:.6g}" for value in mu)
        super().__init__(f"instance mu=({mu_text}) failed: {cause}")
        self.mu = tuple(float(value) for value in mu)
        self.cause = cause
