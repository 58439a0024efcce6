"""Exception types shared across the package."""


class ModelError(ValueError):
    """Invalid model specification or vertex data."""


class BudgetError(RuntimeError):
    """A computation exceeded its configured resource budget."""


class SolverError(RuntimeError):
    """Numerical solve failed in a way that indicates a modeling bug."""


class ClassificationError(RuntimeError):
    """A crossing pair could not be classified within budget."""
