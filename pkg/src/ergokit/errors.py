"""Exception types raised across ergokit."""


class ErgokitError(Exception):
    """Base class for all library errors."""


class ValidationError(ErgokitError, ValueError):
    """Input failed a structural or physical validity check."""


class NotHermitian(ValidationError):
    def __init__(self, deviation: float, tol: float):
        super().__init__(f"matrix is not Hermitian: max |m - m^H| = {deviation:.3e} > {tol:.1e}")
        self.deviation = deviation


class NotUnitary(ValidationError):
    def __init__(self, deviation: float, tol: float):
        super().__init__(f"matrix is not unitary: max |u^H u - 1| = {deviation:.3e} > {tol:.1e}")
        self.deviation = deviation


class DimensionMismatch(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class PositivityViolation(ValidationError):
    pass


class NotDiagonal(ValidationError):
    pass


class DegenerateHamiltonian(ValidationError):
    pass


class EntropyMismatch(ValidationError):
    pass


class SupportViolation(ValidationError):
    pass


class NotApplicable(ErgokitError):
    """The requested quantity is undefined or vacuous for this input."""


class BetaZero(NotApplicable):
    pass


class PassiveInput(NotApplicable):
    pass


class ZeroVariance(NotApplicable):
    pass


class NotZeroErgotropy(ValidationError):
    pass


class NegativeSpectrum(ValidationError):
    pass


class StepTooLarge(ErgokitError):
    def __init__(self, msg: str, suggested_dt: float):
        super().__init__(f"{msg}; try dt <= {suggested_dt:.3e}")
        self.suggested_dt = suggested_dt


class UnitarityLoss(ErgokitError):
    pass
