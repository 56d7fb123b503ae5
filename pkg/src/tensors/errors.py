class TensorError(ValueError):
    """Base class for invalid tensor arguments."""


class InvalidModeError(TensorError):
    """A mode index outside ``1..N`` was requested."""

    def __init__(self, mode: int, order: int) -> None:
        super().__init__(f"mode {mode} is out of range for a tensor of order {order}")
        self.mode = mode
        self.order = order


class ShapeMismatchError(TensorError):
    """Operand shapes do not agree."""
