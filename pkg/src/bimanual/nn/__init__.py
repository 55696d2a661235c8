from .layers import Conv2d, Dense, Flatten, Net, ReLU, Sigmoid, ShapeError
from .losses import MixtureHead, bc_loss, bce_loss, mdn_loss
from .optim import AdamState, NonFiniteGradient, adam_step

__all__ = [
    "Conv2d", "Dense", "Flatten", "Net", "ReLU", "Sigmoid", "ShapeError",
    "MixtureHead", "bc_loss", "bce_loss", "mdn_loss",
    "AdamState", "NonFiniteGradient", "adam_step",
]
