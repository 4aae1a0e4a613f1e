from .checks import GradientCheckReport, finite_difference_check, numeric_gradient
from .tape import OpKind, Tape, TensorNode, backward

__all__ = [
    "GradientCheckReport",
    "OpKind",
    "Tape",
    "TensorNode",
    "backward",
    "finite_difference_check",
    "numeric_gradient",
]
