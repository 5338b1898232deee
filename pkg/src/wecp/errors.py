"""Exception types raised by the simulator."""


class NormalizationError(ValueError):
    """A state or coefficient set is not unit-norm."""


class EmptyBranchError(ValueError):
    """A projection selected a branch with zero probability."""


class DegenerateInputError(ValueError):
    """Coefficients make a closed form or an ancilla preparation undefined."""
