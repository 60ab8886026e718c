"""Exception types raised by the solvers and predictors."""


class PicardError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(PicardError, ValueError):
    """Invalid input configuration. ``field`` names the offending key."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class TemperatureExcursionError(PicardError):
    """A cross section became non-positive under the linear temperature law."""

    def __init__(self, cell, temperature, name):
        self.cell = cell
        self.temperature = temperature
        super().__init__(
            f"{name} <= 0 in cell {cell} at T = {temperature:.6g} K"
        )


class ConvergenceError(PicardError):
    """An iterative solve ran out of iterations."""

    def __init__(self, message, residual=None, iterations=None):
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)


class InvalidOrderError(PicardError, ValueError):
    pass


class IntegrationError(PicardError):
    pass


class NoValidRelaxationError(PicardError):
    pass


class NotMeasurableError(PicardError):
    pass


class NonAsymptoticError(PicardError):
    """Growth ratios did not settle inside the measurement window."""

    def __init__(self, message, ratios=None):
        self.ratios = ratios
        super().__init__(message)
