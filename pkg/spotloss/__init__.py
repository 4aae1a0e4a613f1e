from .hungarian_loss import LossBreakdown, LossGradients, LossWeights, hungarian_loss, loss_gradients

__all__ = [
    "LossBreakdown",
    "LossGradients",
    "LossWeights",
    "hungarian_loss",
    "loss_gradients",
]
