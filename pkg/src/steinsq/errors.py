"""Exception types shared across the package."""


class SteinError(Exception):
    pass


class PlanOverflow(SteinError):
    """Row blocks of the sequence plan do not fit inside n rows."""

    def __init__(self, total, n, detail=""):
        self.total = total
        self.n = n
        super().__init__(f"blocks need {total} rows but n = {n}" + (f" ({detail})" if detail else ""))


class GridFormatError(SteinError, ValueError):
    pass


class ForbiddenCellsPresent(SteinError):
    pass


class InvalidTransversal(SteinError):
    pass


class DimensionMismatch(SteinError):
    pass


class InfeasibleParams(SteinError):
    """A feasibility condition of the layout failed.

    ``condition`` is one of ``F1``..``F4`` (``F2-adjusted``/``F3-adjusted`` for
    the deleted-diagonal variant); ``lhs`` and ``rhs`` are the two sides of
    the violated inequality ``lhs <= rhs``.
    """

    def __init__(self, condition, lhs, rhs, detail=""):
        self.condition = condition
        self.lhs = lhs
        self.rhs = rhs
        self.detail = detail
        msg = f"{condition} violated: {lhs} > {rhs}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class FillExhausted(SteinError):
    """Internal: a region ran out of cells although the plan was feasible."""


class SymmetricInfeasible(SteinError):
    def __init__(self, constraint, detail=""):
        self.constraint = constraint
        super().__init__(f"{constraint}: {detail}" if detail else constraint)


class HardCapExceeded(SteinError):
    pass


class TimeLimitExceeded(SteinError):
    """Search stopped early; ``result`` holds the best transversal found."""

    def __init__(self, result):
        self.result = result
        super().__init__(f"time limit reached with best size {result.size}")


class StructureNotVerified(SteinError):
    pass
