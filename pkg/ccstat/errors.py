# -*- coding: utf-8 -*-

"""Exception hierarchy shared by the library and the CLI

The CLI maps the classes below to stable exit codes (see ``constants.ExitCode``).
"""


class CcstatError(Exception):
    pass


class StructuralError(CcstatError, ValueError):
    """Shape or dimension mismatch
    """


class DomainError(CcstatError, ValueError):
    """An argument is outside the domain of an operation
    """


class NumericalError(CcstatError):
    pass


class ModelError(CcstatError):
    """Disturbance model cannot be used (e.g. covariance is not factorizable)
    """


class ArtifactError(CcstatError):
    """An artifact file cannot be read, written or validated
    """


class GateError(CcstatError):
    """A precondition of the sample-based method is violated
    """


class InsufficientSamplesError(GateError):
    """Too few samples for a gate

    Parameters
    ----------
    gate : str
        The name of the binding gate.
    required : int
        The smallest sample count passing the gate.
    actual : int
        The sample count that was given.
    """

    def __init__(self, gate: str, required: int, actual: int):
        self.gate = gate
        self.required = required
        self.actual = actual
        super().__init__(f"{gate}: need at least {required} samples, got {actual}")


class DegenerateSamplesError(GateError):
    """All disturbance samples are equal
    """


class InfeasibleTargetError(GateError):
    """Target probability is at or below the bound's asymptote
    """


class LambdaBoundaryError(GateError):
    """Target probability is at or above the bound at its validity threshold
    """


class InfeasibleProblemError(CcstatError):
    """A target half-space cannot be met anywhere in the input set
    """

    def __init__(self, message: str, step: int, index: int):
        self.step = step
        self.index = index
        super().__init__(message)
