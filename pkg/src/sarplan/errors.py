"""Exception types raised across the planning pipeline."""


class InvalidArgument(ValueError):
    """An argument violates a documented precondition."""


class NumericalFailure(RuntimeError):
    """A covariance matrix stayed indefinite after jitter escalation."""

    def __init__(self, message, jitters=()):
        super().__init__(f"{message} (tried jitter levels: {list(jitters)})")
        self.jitters = tuple(jitters)


class PlanningFailure(RuntimeError):
    """A sampling planner exhausted its node budget without reaching the goal."""

    def __init__(self, message, tree_size):
        super().__init__(f"{message} (tree size {tree_size})")
        self.tree_size = tree_size


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name and the original cause."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
