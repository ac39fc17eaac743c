"""sRGB <-> CIE La*b* conversion and the [0, 1] normalization the network trains on.

RGB images are plain ``uint8`` arrays of shape (H, W, 3), row-major. Lab images
carry float64 planes with L in [0, 100] and a*, b* in [-128, 127] (clamped on
construction). All conversions use the D65 white point and standard sRGB
companding; arithmetic is float64 throughout so that the 8-bit round trip
stays within one count per channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Linear sRGB -> XYZ for D65, 2 degree observer. The inverse is computed
# numerically so forward and backward are exact inverses of each other.
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ],
    dtype=np.float64,
)
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)

_WHITE_D65 = np.array([0.95047, 1.0, 1.08883], dtype=np.float64)

# CIE constants, exact rational forms.
_EPS = 216.0 / 24389.0
_KAPPA = 24389.0 / 27.0


class ShapeMismatchError(ValueError):
    """Raised when image planes that must share H, W do not."""


@dataclass
class LabImage:
    """Per-pixel CIE La*b* planes; ranges enforced by clamping on construction."""

    l: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        self.l = np.asarray(self.l, dtype=np.float64)
        self.a = np.asarray(self.a, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if not (self.l.shape == self.a.shape == self.b.shape):
            raise ShapeMismatchError(
                f"Lab planes disagree: L{self.l.shape} a{self.a.shape} b{self.b.shape}"
            )
        np.clip(self.l, 0.0, 100.0, out=self.l)
        np.clip(self.a, -128.0, 127.0, out=self.a)
        np.clip(self.b, -128.0, 127.0, out=self.b)

    @property
    def height(self) -> int:
        return self.l.shape[0]

    @property
    def width(self) -> int:
        return self.l.shape[1]


@dataclass
class NormalizedPair:
    """Network-facing tensors: l_norm (1, H, W) and ab_norm (2, H, W), both in [0, 1]."""

    l_norm: np.ndarray
    ab_norm: np.ndarray

    def __post_init__(self) -> None:
        if self.l_norm.shape[0] != 1 or self.ab_norm.shape[0] != 2:
            raise ShapeMismatchError(
                f"expected (1, H, W) and (2, H, W), got {self.l_norm.shape} and {self.ab_norm.shape}"
            )
        if self.l_norm.shape[1:] != self.ab_norm.shape[1:]:
            raise ShapeMismatchError(
                f"l_norm {self.l_norm.shape} and ab_norm {self.ab_norm.shape} disagree on H, W"
            )


def _srgb_decode(u: np.ndarray) -> np.ndarray:
    """8-bit companded sRGB in [0, 1] -> linear light."""
    return np.where(u <= 0.04045, u / 12.92, ((u + 0.055) / 1.055) ** 2.4)


def _srgb_encode(u: np.ndarray) -> np.ndarray:
    """Linear light -> companded sRGB in [0, 1]."""
    u = np.clip(u, 0.0, None)
    return np.where(u <= 0.0031308, u * 12.92, 1.055 * u ** (1.0 / 2.4) - 0.055)


def rgb_to_lab(rgb: np.ndarray) -> LabImage:
    """Convert an (H, W, 3) uint8 sRGB image to La*b* planes.

    White (255, 255, 255) maps to L=100 with |a*|, |b*| below 0.01; black maps
    to the Lab origin. Chroma is clamped to [-128, 127] per the LabImage
    invariant (no 8-bit sRGB color actually exceeds it).
    """
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ShapeMismatchError(f"expected (H, W, 3) image, got {rgb.shape}")
    lin = _srgb_decode(rgb.astype(np.float64) / 255.0)
    xyz = lin @ _RGB_TO_XYZ.T
    t = xyz / _WHITE_D65
    f = np.where(t > _EPS, np.cbrt(t), (_KAPPA * t + 16.0) / 116.0)
    l = 116.0 * f[..., 1] - 16.0
    a = 500.0 * (f[..., 0] - f[..., 1])
    b = 200.0 * (f[..., 1] - f[..., 2])
    return LabImage(l=l, a=a, b=b)


def lab_to_rgb(lab: LabImage) -> np.ndarray:
    """Convert La*b* planes back to an (H, W, 3) uint8 sRGB image.

    Out-of-gamut values are clamped in RGB before 8-bit quantization.
    """
    fy = (lab.l + 16.0) / 116.0
    fx = fy + lab.a / 500.0
    fz = fy - lab.b / 200.0

    def f_inv(ft: np.ndarray) -> np.ndarray:
        ft3 = ft ** 3
        return np.where(ft3 > _EPS, ft3, (116.0 * ft - 16.0) / _KAPPA)

    xyz = np.stack([f_inv(fx), f_inv(fy), f_inv(fz)], axis=-1) * _WHITE_D65
    lin = xyz @ _XYZ_TO_RGB.T
    srgb = _srgb_encode(lin)
    return np.clip(np.rint(srgb * 255.0), 0, 255).astype(np.uint8)


def normalize(lab: LabImage) -> NormalizedPair:
    """Map L/100 and (c + 128)/255 onto [0, 1] network ranges."""
    l_norm = (lab.l / 100.0)[None, :, :]
    ab_norm = np.stack([(lab.a + 128.0) / 255.0, (lab.b + 128.0) / 255.0], axis=0)
    return NormalizedPair(l_norm=l_norm, ab_norm=ab_norm)


def denormalize_ab(ab_norm: np.ndarray) -> np.ndarray:
    """Invert the chroma normalization: y in [0, 1] -> c = y*255 - 128."""
    ab_norm = np.asarray(ab_norm, dtype=np.float64)
    if ab_norm.ndim != 3 or ab_norm.shape[0] != 2:
        raise ShapeMismatchError(f"expected (2, H, W), got {ab_norm.shape}")
    return ab_norm * 255.0 - 128.0


def assemble_output(l: np.ndarray, ab_norm: np.ndarray) -> np.ndarray:
    """Build the final RGB image from the input L plane and predicted chroma.

    ``l`` is the original (H, W) lightness plane in [0, 100]; ``ab_norm`` the
    (2, H, W) network output in [0, 1]. Shapes must agree.
    """
    l = np.asarray(l, dtype=np.float64)
    if l.ndim != 2:
        raise ShapeMismatchError(f"expected (H, W) L plane, got {l.shape}")
    ab = denormalize_ab(ab_norm)
    if ab.shape[1:] != l.shape:
        raise ShapeMismatchError(
            f"L plane {l.shape} does not match predicted chroma {ab_norm.shape}"
        )
    return lab_to_rgb(LabImage(l=l, a=ab[0], b=ab[1]))


def replicate_l(l_norm: np.ndarray) -> np.ndarray:
    """Copy the (1, H, W) lightness plane into the 3 input channels the encoder expects."""
    l_norm = np.asarray(l_norm)
    if l_norm.ndim != 3 or l_norm.shape[0] != 1:
        raise ShapeMismatchError(f"expected (1, H, W), got {l_norm.shape}")
    return np.repeat(l_norm, 3, axis=0)
