"""Exception types shared across the solver."""


class NumericalBreakdownError(RuntimeError):
    """An element-local solve produced a singular or non-finite result.

    Carries the offending element id and the simulation time at which the
    breakdown occurred (when known).
    """

    def __init__(self, message: str, element: int = -1, t: float = float("nan")):
        super().__init__(message)
        self.element = element
        self.t = t
