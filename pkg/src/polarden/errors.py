"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Input violates a documented precondition."""


class DegenerateTrajectoryError(ValueError):
    """Every sample of a Stokes trajectory is below the intensity floor."""


class DivergenceError(RuntimeError):
    """The optimizer met a non-finite objective or gradient."""

    def __init__(self, message, iteration, objective_trace=(), grad_norm_trace=()):
        super().__init__(f"{message} (iteration {iteration})")
        self.iteration = iteration
        self.objective_trace = list(objective_trace)
        self.grad_norm_trace = list(grad_norm_trace)
