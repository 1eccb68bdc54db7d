"""Exception types shared across the package.

Plain argument mistakes (bad flags, negative counts, out-of-range
probabilities) raise the builtin ValueError / IndexError; the classes below
mark conditions callers are expected to branch on.
"""


class CycleError(ValueError):
    """The edge set contains a directed cycle."""


class DegenerateError(ValueError):
    """Input has no spread (constant sample, zero variance, zero bandwidth)."""


class DimensionError(ValueError):
    """Vector or matrix dimensions do not match the expected shape."""


class LengthError(ValueError):
    """Paired sequences differ in length."""


class EmptyError(ValueError):
    """An operation that needs a non-empty sample received an empty one."""


class CapacityError(RuntimeError):
    """The augmentation frontier exceeded the configured point budget."""

    def __init__(self, frontier_size: int, depth: int, max_points: int):
        self.frontier_size = frontier_size
        self.depth = depth
        self.max_points = max_points
        super().__init__(
            f"frontier holds at least {frontier_size} points after "
            f"{depth + 1} of the variables, budget is {max_points}"
        )


class EmptyResultError(RuntimeError):
    """Every candidate point was pruned by the weight threshold."""

    def __init__(self, depth: int, theta: float):
        self.depth = depth
        self.theta = theta
        super().__init__(
            f"all candidate points pruned at variable {depth} "
            f"with threshold {theta}"
        )


class ConfigError(ValueError):
    """A sweep configuration is malformed."""
