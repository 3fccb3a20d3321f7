"""Transform-domain perceptron layers and CIFAR ResNet-20 revisions."""

from .layers import TransformPerceptron2d, soft_threshold
from .models import VariantSpec, build_resnet20
from .transforms import TransformKind

__all__ = [
    "TransformKind",
    "TransformPerceptron2d",
    "VariantSpec",
    "build_resnet20",
    "soft_threshold",
]
