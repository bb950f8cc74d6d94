"""Exception hierarchy shared by the numerical core, the CLI and the HTTP service.

Preconditions raise; inequality checks return reports and never raise on a failed bound.
"""


class MarginalFlowError(Exception):
    """Base class for every error raised by marginalflow"""


# INPUT ERRORS (exit code 3, HTTP 400)

class InputError(MarginalFlowError, ValueError):
    """Malformed or out-of-range input"""


class InvalidSettingError(InputError):
    pass


class NotHermitianError(InputError):
    pass


class NotUnitaryError(InputError):
    pass


class NotNormalizedError(InputError):
    pass


class OrderingError(InputError):
    """Occupation vector is not in decreasing order"""


class LengthMismatchError(InputError):
    pass


class BasisTooLargeError(InputError):
    pass


class OutputWriteError(InputError):
    """Requested output file could not be written"""


class ConstraintFileError(InputError):
    """Constraint file could not be turned into a ConstraintSet"""


class ConstraintSchemaError(ConstraintFileError):
    pass


class ConstraintIntegerError(ConstraintFileError):
    pass


class ConstraintLengthError(ConstraintFileError):
    pass


# CONTRACT ERRORS (exit code 2, HTTP 422)

class ContractError(MarginalFlowError):
    """Input is well-formed but outside the regime where the theory applies"""


class DegenerateSpectrumError(ContractError):
    def __init__(self, message: str, gap: float = 0.0):
        super().__init__(message)
        self.gap = gap


class DegenerateGroundStateError(ContractError):
    pass


class ExpansionResidualError(ContractError):
    pass


class QuasipinningRangeError(ContractError):
    pass


# BOUND VIOLATIONS (exit code 1)

class BoundViolation(MarginalFlowError):
    """A checked inequality failed beyond tolerance"""
