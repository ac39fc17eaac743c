"""U-Net colorization with a global-feature fusion decoder.

Predicts CIE La*b* chrominance for a grayscale input: a ResNet34-shaped
encoder feeds a two-conv bridge; a global path summarizes the whole image and
is fused into the first decoder stage; skip connections stack encoder features
into the remaining decoder stages; a sigmoid head emits normalized a*b*.
"""

__version__ = "0.1.0"

from .colorspace import (  # noqa: F401
    LabImage,
    NormalizedPair,
    assemble_output,
    denormalize_ab,
    lab_to_rgb,
    normalize,
    replicate_l,
    rgb_to_lab,
)
from .losses import LossBreakdown, cross_entropy, joint_loss, mse_loss  # noqa: F401
from .model import ColorUNet, FusionParams, ModelConfig, build_model, fuse  # noqa: F401
from .train import PRESETS, TrainConfig, gradient_check, train  # noqa: F401
