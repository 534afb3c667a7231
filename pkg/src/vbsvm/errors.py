class DataError(ValueError):
    """Input data violates a precondition (labels, shapes, missing cells)."""


class NumericalError(ArithmeticError):
    """A factorization failed or a lower bound stopped being finite."""


class ConvergenceWarning(UserWarning):
    pass
