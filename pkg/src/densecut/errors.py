"""Exception types shared across the package."""


class DensecutError(Exception):
    """Base class for all library errors."""


class DegenerateCut(DensecutError):
    """A ratio objective was evaluated on a cut with a zero denominator."""


class TooLarge(DensecutError):
    """Input exceeds a configured exhaustive-enumeration or memory cap."""


class WidthExceeded(DensecutError):
    """Cut decomposition hit its width cap before meeting the error target."""


class Unsatisfiable(DensecutError):
    """Greedy rebalancing cannot land inside the cost interval."""


class NoFeasibleProfile(DensecutError):
    """Every enumerated cut profile produced an infeasible LP."""

    def __init__(self, reason: str, truncated: bool = False):
        super().__init__(reason)
        self.reason = reason
        self.truncated = truncated


class DpInfeasible(DensecutError):
    """The adjustment DP has an empty feasible set."""


class NoFeasibleCut(DensecutError):
    """No sampled partition led to a cut satisfying the cost constraint."""


class Infeasible(DensecutError):
    """The instance admits no cut satisfying the cost constraint."""


class WalkBudgetExceeded(DensecutError):
    """Exhaustive walk enumeration refused: too many walks at this length."""


class InfeasiblePlant(DensecutError):
    """Planted-instance density repair would exceed the crossing budget."""

    def __init__(self, msg: str, forced: int = 0, budget: int = 0):
        super().__init__(msg)
        self.forced = forced
        self.budget = budget


class InfeasibleInput(DensecutError):
    """An input cut violates the preconditions of a transform."""


class EmptySchedule(DensecutError):
    """The unbalanced regime already covers every candidate cost."""
