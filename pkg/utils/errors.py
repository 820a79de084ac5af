"""
Exception hierarchy for the simulator.

Services raise these; the command layer translates them into exit codes.
"""


class SimulationError(Exception):
    """Base class for every error raised by the simulator."""

    exit_code = 3

    def __init__(self, message, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self):
        """Convert error to dictionary."""
        payload = {'error': type(self).__name__, 'message': self.message}
        payload.update({k: v for k, v in self.details.items() if v is not None})
        return payload


class UsageError(SimulationError):
    """Raised for kind or dimension mismatches and invalid arguments."""


class ConfigurationError(SimulationError):
    """Raised for invalid physical configuration or unreadable config files."""

    exit_code = 2

    def __init__(self, message, line_number=None, key=None):
        super().__init__(message, line_number=line_number, key=key)
        self.line_number = line_number
        self.key = key

    def __str__(self):
        if self.line_number is not None:
            return f"line {self.line_number}: {self.message}"
        return self.message


class MaskRangeError(SimulationError):
    """Raised when an angle maps outside the modulator."""

    def __init__(self, arm, angle, pixel=None):
        message = f"{arm} angle {angle:.6g} rad maps outside the mask"
        if pixel is not None:
            message += f" (pixel {pixel})"
        super().__init__(message, arm=arm, angle=angle, pixel=pixel)
        self.arm = arm
        self.angle = angle
        self.pixel = pixel


class ConvergenceError(SimulationError):
    """Raised when an iterative search stops without converging."""

    exit_code = 4

    def __init__(self, message, best=None, iterations=None):
        super().__init__(message, iterations=iterations)
        self.best = best
        self.iterations = iterations
