"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A model, grid, or configuration parameter is outside its admissible range."""


class CapabilityError(NotImplementedError):
    """The requested operation is not defined for this model or expansion order."""


class OverflowGuardError(ValueError):
    """A complex-frequency exponent would exceed the double-precision range."""


class NumericFailure(RuntimeError):
    """A computation produced non-finite values or violated a realness check."""


class QuiescenceError(ValueError):
    """Recording time too short: traces have not settled at the final time."""
