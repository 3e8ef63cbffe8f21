"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operands have incompatible shapes."""


class DomainError(ValueError):
    """A value is outside the domain an operation is defined on."""


class DegenerateRowError(ValueError):
    """A row that must have positive mass is all zero."""

    def __init__(self, row: int):
        self.row = row
        super().__init__(f"row {row} has zero absolute sum")


class BudgetError(ValueError):
    """The pruning budget cannot accommodate a single complete chain."""


class SaturationError(RuntimeError):
    """Chain selection can make no further progress below the budget."""

    def __init__(self, kept: int, max_kept: int):
        self.kept = kept
        self.max_kept = max_kept
        super().__init__(
            f"chain selection saturated at {kept} kept connections "
            f"(budget {max_kept})"
        )


class DegenerateDistributionError(ValueError):
    """All sampling weights are zero."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"non-finite loss at epoch {epoch}")


class EmptyTrajectoryError(ValueError):
    """A joint trajectory contains no samples."""
