"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """An experiment, design, or dataset configuration is unusable."""


class ConstructionError(ValueError):
    """A candidate set cannot be built for the requested parameters."""


class ConvergenceError(RuntimeError):
    """An iterative solver ran out of iterations."""

    def __init__(self, message, last):
        super().__init__(message)
        self.last = last


class SignalOverflowError(FloatingPointError):
    """A propagated variance left the finite floating-point range."""

    def __init__(self, message, layer, trajectory):
        super().__init__(message)
        self.layer = layer
        self.trajectory = trajectory


class ParseError(ValueError):
    """A dataset file is malformed; ``offset`` is the byte position of the fault."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class IncompleteBlockError(ValueError):
    """A results table is missing (design, group) cells."""

    def __init__(self, missing):
        shown = ", ".join(f"({d}, {g})" for d, g in missing[:20])
        more = "" if len(missing) <= 20 else f" ... and {len(missing) - 20} more"
        super().__init__(f"missing {len(missing)} (design, group) pairs: {shown}{more}")
        self.missing = missing
