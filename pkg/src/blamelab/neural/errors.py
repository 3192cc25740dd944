"""Exceptions raised by the neural encoders and trainers."""


class ShapeMismatch(ValueError):
    pass


class DivergenceError(RuntimeError):
    pass


class GradCheckFailure(AssertionError):
    pass


class CheckpointMismatch(ValueError):
    pass
