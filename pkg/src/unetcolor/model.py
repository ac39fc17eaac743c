"""The colorization network: ResNet34-shaped encoder, bridge, global and
classification branches, and a fusion decoder with skip connections.

The graph is built so that at the default configuration (137 classes, 256
input, scale 1) every block reproduces its published parameter budget; the
arithmetic is asserted in the test suite row by row. ``channel_scale`` shrinks
all internal channel widths proportionally for desk-scale runs (input and
chroma-output channels stay fixed at 3 and 2).

Layer naming follows torch conventions so encoder tensors line up one-to-one
with ResNet34 checkpoints (``encoder.layer2.0.downsample.0.weight`` etc.); see
:mod:`unetcolor.weights` for the import map.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .layers import (
    BatchNorm,
    Conv2d,
    ConvTranspose2d,
    Linear,
    MaxPool2d,
    NumericalError,
    ReLU,
    Sigmoid,
    Upsample2x,
)

# Base (scale-1) channel widths, keyed by the role they play.
_BASE_WIDTHS = (16, 32, 64, 128, 256, 512, 1024)
_STAGE_BLOCKS = (3, 4, 6, 3)
_STAGE_CHANNELS = (64, 128, 256, 512)


class ConfigError(ValueError):
    """Invalid model configuration."""


@dataclass(frozen=True)
class ModelConfig:
    num_classes: int = 137
    input_size: int = 256
    fusion_enabled: bool = True
    channel_scale: float = 1.0
    dtype: str = "float32"

    def validate(self) -> None:
        if self.input_size < 32 or self.input_size % 32 != 0:
            raise ConfigError(f"input_size must be a positive multiple of 32, got {self.input_size}")
        if self.num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.dtype not in ("float32", "float64"):
            raise ConfigError(f"dtype must be float32 or float64, got {self.dtype!r}")
        for base in _BASE_WIDTHS:
            v = base * self.channel_scale
            if abs(v - round(v)) > 1e-9 or round(v) < 1:
                raise ConfigError(
                    f"channel_scale {self.channel_scale} maps width {base} to non-integral {v}"
                )

    def ch(self, base: int) -> int:
        """Scaled channel width."""
        return int(round(base * self.channel_scale))

    @property
    def np_dtype(self):
        return np.float32 if self.dtype == "float32" else np.float64


@dataclass
class ForwardResult:
    ab_norm: np.ndarray                 # (N, 2, S, S) in (0, 1)
    class_probs: Optional[np.ndarray]   # (N, K), rows sum to 1; None without fusion
    class_logits: Optional[np.ndarray]  # pre-softmax (post-BN) activations


@dataclass
class FusionParams:
    """The per-position affine merge: out = ReLU(b + W [global; local])."""

    W: np.ndarray  # (F, G + C)
    b: np.ndarray  # (F,)


def fuse(g: np.ndarray, local: np.ndarray, params: FusionParams) -> np.ndarray:
    """Apply the fusion map at every spatial position of ``local``.

    ``g`` is the broadcast global feature (G,), ``local`` a (C, H, W) map.
    The same g enters the affine map at all positions, so the output has no
    cross-position coupling.
    """
    g = np.asarray(g, dtype=np.float64)
    local = np.asarray(local, dtype=np.float64)
    if g.ndim != 1 or local.ndim != 3:
        raise ValueError(f"expected (G,) and (C, H, W), got {g.shape} and {local.shape}")
    gdim, cdim = g.shape[0], local.shape[0]
    if params.W.ndim != 2 or params.W.shape[1] != gdim + cdim:
        raise ValueError(
            f"fusion weight expects {params.W.shape[1]} input features, got {gdim} + {cdim}"
        )
    if params.b.shape != (params.W.shape[0],):
        raise ValueError(f"fusion bias shape {params.b.shape} does not match W rows {params.W.shape[0]}")
    pre = (
        params.b[:, None, None]
        + (params.W[:, :gdim] @ g)[:, None, None]
        + np.tensordot(params.W[:, gdim:], local, axes=([1], [0]))
    )
    return np.maximum(pre, 0.0)


class BasicBlock:
    """Two 3x3 convolutions with batch norm and an identity or projected shortcut."""

    def __init__(self, cin, cout, stride, rng, dtype):
        self.conv1 = Conv2d(cin, cout, 3, stride, 1, bias=False, rng=rng, dtype=dtype)
        self.bn1 = BatchNorm(cout, dtype=dtype)
        self.relu1 = ReLU()
        self.conv2 = Conv2d(cout, cout, 3, 1, 1, bias=False, rng=rng, dtype=dtype)
        self.bn2 = BatchNorm(cout, dtype=dtype)
        self.relu2 = ReLU()
        if stride != 1 or cin != cout:
            self.ds_conv = Conv2d(cin, cout, 1, stride, 0, bias=False, rng=rng, dtype=dtype)
            self.ds_bn = BatchNorm(cout, dtype=dtype)
        else:
            self.ds_conv = None
            self.ds_bn = None

    def forward(self, x, train):
        y = self.relu1.forward(self.bn1.forward(self.conv1.forward(x, train), train), train)
        y = self.bn2.forward(self.conv2.forward(y, train), train)
        s = x if self.ds_conv is None else self.ds_bn.forward(self.ds_conv.forward(x, train), train)
        return self.relu2.forward(y + s, train)

    def backward(self, dy):
        da = self.relu2.backward(dy)
        d = self.bn2.backward(da)
        d = self.conv2.backward(d)
        d = self.relu1.backward(d)
        d = self.bn1.backward(d)
        dmain = self.conv1.backward(d)
        if self.ds_conv is None:
            dshort = da
        else:
            dshort = self.ds_conv.backward(self.ds_bn.backward(da))
        return dmain + dshort

    def named_layers(self):
        items = [("conv1", self.conv1), ("bn1", self.bn1), ("conv2", self.conv2), ("bn2", self.bn2)]
        if self.ds_conv is not None:
            items += [("downsample.0", self.ds_conv), ("downsample.1", self.ds_bn)]
        return items


class UpBlock:
    """Decoder stage: learnable 2x upsampling, skip concat, two 3x3 convolutions."""

    def __init__(self, cin, cout, skip_ch, rng, dtype):
        self.tconv = ConvTranspose2d(cin, cout, rng=rng, dtype=dtype)
        self.bn0 = BatchNorm(cout, dtype=dtype)
        self.relu0 = ReLU()
        self.conv1 = Conv2d(cout + skip_ch, cout, 3, 1, 1, bias=True, rng=rng, dtype=dtype)
        self.bn1 = BatchNorm(cout, dtype=dtype)
        self.relu1 = ReLU()
        self.conv2 = Conv2d(cout, cout, 3, 1, 1, bias=False, rng=rng, dtype=dtype)
        self.bn2 = BatchNorm(cout, dtype=dtype)
        self.relu2 = ReLU()
        self._up_ch = cout

    def forward(self, x, skip, train):
        u = self.relu0.forward(self.bn0.forward(self.tconv.forward(x, train), train), train)
        cat = np.concatenate([u, skip], axis=1)
        y = self.relu1.forward(self.bn1.forward(self.conv1.forward(cat, train), train), train)
        return self.relu2.forward(self.bn2.forward(self.conv2.forward(y, train), train), train)

    def backward(self, dy):
        d = self.bn2.backward(self.relu2.backward(dy))
        d = self.conv2.backward(d)
        d = self.bn1.backward(self.relu1.backward(d))
        dcat = self.conv1.backward(d)
        du, dskip = dcat[:, : self._up_ch], dcat[:, self._up_ch :]
        d = self.bn0.backward(self.relu0.backward(du))
        return self.tconv.backward(d), dskip

    def named_layers(self):
        return [("tconv", self.tconv), ("bn0", self.bn0), ("conv1", self.conv1),
                ("bn1", self.bn1), ("conv2", self.conv2), ("bn2", self.bn2)]


class FusionEntry:
    """First decoder stage: upsample the bridge, concat the broadcast global
    feature (or the deepest skip when fusion is off), then BN + 3x3 conv.

    In the fusion variant the conv weight plays the role of the affine fusion
    map W (a 3x3 neighborhood generalization of it) and the concat BN shift
    the role of its bias; the gradient checker tags them fusion_w / fusion_b.
    """

    def __init__(self, local_ch, extra_ch, cout, rng, dtype, fusion):
        self.upsample = Upsample2x()
        self.bn_cat = BatchNorm(local_ch + extra_ch, dtype=dtype,
                                shift_kind="fusion_b" if fusion else "bn_shift")
        self.conv = Conv2d(local_ch + extra_ch, cout, 3, 1, 1, bias=False, rng=rng,
                           dtype=dtype, kind="fusion_w" if fusion else "conv")
        self.relu = ReLU()
        self._extra_ch = extra_ch

    def forward(self, bridge_out, extra, train):
        u = self.upsample.forward(bridge_out, train)
        cat = np.concatenate([extra, u], axis=1)
        y = self.relu.forward(self.conv.forward(self.bn_cat.forward(cat, train), train), train)
        return y

    def backward(self, dy):
        d = self.conv.backward(self.relu.backward(dy))
        dcat = self.bn_cat.backward(d)
        dextra, du = dcat[:, : self._extra_ch], dcat[:, self._extra_ch :]
        return self.upsample.backward(du), dextra

    def named_layers(self):
        return [("bn_cat", self.bn_cat), ("conv", self.conv)]


@dataclass
class ReportRow:
    path: str
    name: str
    kernel: str
    output: str
    batch_norm: bool
    activation: str
    params: int


@dataclass
class ParameterReport:
    rows: list
    total: int = field(init=False)

    def __post_init__(self):
        self.total = sum(r.params for r in self.rows)

    def row(self, name: str) -> ReportRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def render(self) -> str:
        headers = ("Network Path", "Layer", "Size of K x K x O x I",
                   "Output Size (O x W x H)", "Batch Norm.", "Activation", "Parameters")
        table = [headers]
        for r in self.rows:
            table.append((r.path, r.name, r.kernel, r.output,
                          str(r.batch_norm), r.activation, f"{r.params:,}" if r.params else "-"))
        table.append(("", "", "", "", "", "Total Parameters", f"{self.total:,}"))
        widths = [max(len(row[i]) for row in table) for i in range(len(headers))]
        lines = []
        for i, row in enumerate(table):
            lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
            if i == 0:
                lines.append("-" * (sum(widths) + 2 * (len(widths) - 1)))
        return "\n".join(lines)


class ColorUNet:
    """Built graph with deterministic forward and explicit reverse-mode backward.

    Inference-mode forwards are read-only and may run concurrently; train-mode
    forwards mutate batch-norm running statistics and layer caches, so a graph
    being trained must not be shared.
    """

    def __init__(self, cfg: ModelConfig, init: str = "he", seed: int = 0):
        cfg.validate()
        if init not in ("he", "zeros"):
            raise ConfigError(f"init must be 'he' or 'zeros', got {init!r}")
        self.cfg = cfg
        dtype = cfg.np_dtype
        rng = np.random.default_rng(seed) if init == "he" else None
        ch = cfg.ch
        s = cfg.input_size

        self.enc_conv1 = Conv2d(3, ch(64), 7, 2, 3, bias=False, rng=rng, dtype=dtype)
        self.enc_bn1 = BatchNorm(ch(64), dtype=dtype)
        self.enc_relu = ReLU()
        self.pool = MaxPool2d()

        self.stages = []
        cin = ch(64)
        for si, (blocks, cbase) in enumerate(zip(_STAGE_BLOCKS, _STAGE_CHANNELS)):
            cout = ch(cbase)
            stage = []
            for bi in range(blocks):
                stride = 2 if (bi == 0 and si > 0) else 1
                stage.append(BasicBlock(cin if bi == 0 else cout, cout, stride, rng, dtype))
            self.stages.append(stage)
            cin = cout

        c512 = ch(512)
        self.bridge_conv1 = Conv2d(c512, c512, 3, 1, 1, bias=True, rng=rng, dtype=dtype)
        self.bridge_bn1 = BatchNorm(c512, dtype=dtype)
        self.bridge_relu1 = ReLU()
        self.bridge_conv2 = Conv2d(c512, c512, 3, 1, 1, bias=True, rng=rng, dtype=dtype)
        self.bridge_bn2 = BatchNorm(c512, dtype=dtype)
        self.bridge_relu2 = ReLU()

        bottleneck = s // 32
        if cfg.fusion_enabled:
            flat = c512 * bottleneck * bottleneck
            self.g_fc1 = Linear(flat, ch(1024), rng=rng, dtype=dtype)
            self.g_bn1 = BatchNorm(ch(1024), dtype=dtype)
            self.g_relu1 = ReLU()
            self.g_fc2 = Linear(ch(1024), c512, rng=rng, dtype=dtype)
            self.g_bn2 = BatchNorm(c512, dtype=dtype)
            self.g_relu2 = ReLU()
            self.g_fc3 = Linear(c512, ch(256), rng=rng, dtype=dtype)
            self.g_bn3 = BatchNorm(ch(256), dtype=dtype)
            self.g_relu3 = ReLU()
            self.cls_fc1 = Linear(c512, ch(256), rng=rng, dtype=dtype)
            self.cls_bn1 = BatchNorm(ch(256), dtype=dtype)
            self.cls_relu1 = ReLU()
            self.cls_fc2 = Linear(ch(256), cfg.num_classes, rng=rng, dtype=dtype)
            self.cls_bn2 = BatchNorm(cfg.num_classes, dtype=dtype)

        # entry decoder: fused global broadcast (256 ch) or the stage-3 skip (256 ch)
        self.up1 = FusionEntry(c512, ch(256), ch(256), rng, dtype, cfg.fusion_enabled)
        self.up2 = UpBlock(ch(256), ch(128), ch(128), rng, dtype)
        self.up3 = UpBlock(ch(128), ch(64), ch(64), rng, dtype)
        self.up4 = UpBlock(ch(64), ch(32), ch(64), rng, dtype)
        self.up5 = UpBlock(ch(32), ch(16), 3, rng, dtype)
        self.head_conv = Conv2d(ch(16), 2, 1, 1, 0, bias=True, rng=rng, dtype=dtype)
        self.head_bn = BatchNorm(2, dtype=dtype)
        self.head_sigmoid = Sigmoid()

        self._layers = self._build_registry()
        self._cache = {}
        self.shape_trace = {}

    # ------------------------------------------------------------------ wiring

    def _build_registry(self):
        reg = OrderedDict()
        reg["encoder.conv1"] = self.enc_conv1
        reg["encoder.bn1"] = self.enc_bn1
        for si, stage in enumerate(self.stages, start=1):
            for bi, block in enumerate(stage):
                for lname, layer in block.named_layers():
                    reg[f"encoder.layer{si}.{bi}.{lname}"] = layer
        reg["bridge.conv1"] = self.bridge_conv1
        reg["bridge.bn1"] = self.bridge_bn1
        reg["bridge.conv2"] = self.bridge_conv2
        reg["bridge.bn2"] = self.bridge_bn2
        if self.cfg.fusion_enabled:
            for i, (fc, bn) in enumerate(
                [(self.g_fc1, self.g_bn1), (self.g_fc2, self.g_bn2), (self.g_fc3, self.g_bn3)],
                start=1,
            ):
                reg[f"global.fc{i}"] = fc
                reg[f"global.bn{i}"] = bn
            reg["classifier.fc1"] = self.cls_fc1
            reg["classifier.bn1"] = self.cls_bn1
            reg["classifier.fc2"] = self.cls_fc2
            reg["classifier.bn2"] = self.cls_bn2
        for lname, layer in self.up1.named_layers():
            reg[f"up1.{lname}"] = layer
        for i, up in enumerate([self.up2, self.up3, self.up4, self.up5], start=2):
            for lname, layer in up.named_layers():
                reg[f"up{i}.{lname}"] = layer
        reg["head.conv"] = self.head_conv
        reg["head.bn"] = self.head_bn
        return reg

    # ------------------------------------------------------------------ forward

    def forward(self, x: np.ndarray, mode: str = "inference") -> ForwardResult:
        if mode not in ("train", "inference"):
            raise ValueError(f"mode must be 'train' or 'inference', got {mode!r}")
        train = mode == "train"
        s = self.cfg.input_size
        x = np.asarray(x)
        if x.ndim != 4 or x.shape[1:] != (3, s, s):
            raise ValueError(f"expected input (N, 3, {s}, {s}), got {x.shape}")
        x = x.astype(self.cfg.np_dtype, copy=False)
        tr = self.shape_trace = {}

        x0 = self.enc_relu.forward(self.enc_bn1.forward(self.enc_conv1.forward(x, train), train), train)
        tr["Input Block"] = x0.shape[1:]
        p = self.pool.forward(x0, train)
        tr["Input Pool"] = p.shape[1:]
        feats = [p]
        for si, stage in enumerate(self.stages, start=1):
            h = feats[-1]
            for block in stage:
                h = block.forward(h, train)
            feats.append(h)
            tr[f"Down Block Layer {si}"] = h.shape[1:]
        e1, e2, e3, e4 = feats[1], feats[2], feats[3], feats[4]

        br = self.bridge_relu1.forward(
            self.bridge_bn1.forward(self.bridge_conv1.forward(e4, train), train), train)
        br = self.bridge_relu2.forward(
            self.bridge_bn2.forward(self.bridge_conv2.forward(br, train), train), train)
        tr["Bridge Layer"] = br.shape[1:]

        probs = logits = None
        if self.cfg.fusion_enabled:
            flat = br.reshape(br.shape[0], -1)
            g1 = self.g_relu1.forward(self.g_bn1.forward(self.g_fc1.forward(flat, train), train), train)
            g512 = self.g_relu2.forward(self.g_bn2.forward(self.g_fc2.forward(g1, train), train), train)
            g256 = self.g_relu3.forward(self.g_bn3.forward(self.g_fc3.forward(g512, train), train), train)
            tr["Global Layer"] = (g512.shape[1], g256.shape[1])

            c1 = self.cls_relu1.forward(
                self.cls_bn1.forward(self.cls_fc1.forward(g512, train), train), train)
            logits = self.cls_bn2.forward(self.cls_fc2.forward(c1, train), train)
            shifted = logits - logits.max(axis=1, keepdims=True)
            ex = np.exp(shifted)
            probs = ex / ex.sum(axis=1, keepdims=True)
            tr["Classification Layer"] = (logits.shape[1],)

            hw = br.shape[2] * 2
            extra = np.broadcast_to(g256[:, :, None, None],
                                    (g256.shape[0], g256.shape[1], hw, hw)).astype(br.dtype)
            self._cache["br_shape"] = br.shape
        else:
            extra = e3

        d1 = self.up1.forward(br, extra, train)
        tr["Up Block Layer 1"] = d1.shape[1:]
        d2 = self.up2.forward(d1, e2, train)
        tr["Up Block Layer 2"] = d2.shape[1:]
        d3 = self.up3.forward(d2, e1, train)
        tr["Up Block Layer 3"] = d3.shape[1:]
        d4 = self.up4.forward(d3, x0, train)
        tr["Up Block Layer 4"] = d4.shape[1:]
        d5 = self.up5.forward(d4, x, train)
        tr["Up Block Layer 5"] = d5.shape[1:]

        ab = self.head_sigmoid.forward(
            self.head_bn.forward(self.head_conv.forward(d5, train), train), train)
        tr["Conv Out Layer"] = ab.shape[1:]
        return ForwardResult(ab_norm=ab, class_probs=probs, class_logits=logits)

    # ------------------------------------------------------------------ backward

    @staticmethod
    def _finite(name, arr):
        if not np.all(np.isfinite(arr)):
            raise NumericalError(f"non-finite gradient flowing out of {name}")
        return arr

    def backward(self, d_ab: np.ndarray, d_logits: Optional[np.ndarray] = None) -> None:
        """Accumulate gradients for every trainable tensor.

        ``d_ab`` is the loss gradient w.r.t. the sigmoid output; ``d_logits``
        w.r.t. the classification layer's (post-BN) logits. Requires a prior
        train-mode forward on the same batch.
        """
        if not self.cfg.fusion_enabled and d_logits is not None:
            raise ValueError("classification gradient supplied, but the graph has no classifier")
        d = self.head_sigmoid.backward(d_ab)
        d = self.head_conv.backward(self.head_bn.backward(d))
        self._finite("head", d)
        d, _dskip_input = self.up5.backward(d)
        d, dskip_x0 = self.up4.backward(d)
        d, dskip_e1 = self.up3.backward(d)
        d, dskip_e2 = self.up2.backward(d)
        d_br, d_extra = self.up1.backward(d)
        self._finite("decoder", d_br)

        dskip_e3 = None
        if self.cfg.fusion_enabled:
            d_g256 = d_extra.sum(axis=(2, 3))
            d = self.g_bn3.backward(self.g_relu3.backward(d_g256))
            d_g512 = self.g_fc3.backward(d)
            if d_logits is not None:
                dc = self.cls_fc2.backward(self.cls_bn2.backward(d_logits))
                dc = self.cls_fc1.backward(self.cls_bn1.backward(self.cls_relu1.backward(dc)))
                d_g512 = d_g512 + dc
            d = self.g_bn2.backward(self.g_relu2.backward(d_g512))
            d_g1 = self.g_fc2.backward(d)
            d = self.g_bn1.backward(self.g_relu1.backward(d_g1))
            d_flat = self.g_fc1.backward(d)
            d_br = d_br + d_flat.reshape(self._cache["br_shape"])
            self._finite("global path", d_br)
        else:
            dskip_e3 = d_extra

        d = self.bridge_bn2.backward(self.bridge_relu2.backward(d_br))
        d = self.bridge_conv2.backward(d)
        d = self.bridge_bn1.backward(self.bridge_relu1.backward(d))
        d_e4 = self.bridge_conv1.backward(d)
        self._finite("bridge", d_e4)

        skip_grads = [None, dskip_e1, dskip_e2, dskip_e3, None]
        d = d_e4
        for si in (4, 3, 2, 1):
            for block in reversed(self.stages[si - 1]):
                d = block.backward(d)
            if skip_grads[si - 1] is not None:
                d = d + skip_grads[si - 1]
        d = self.pool.backward(d)
        if dskip_x0 is not None:
            d = d + dskip_x0
        d = self.enc_bn1.backward(self.enc_relu.backward(d))
        self.enc_conv1.backward(d)
        self._finite("encoder", self.enc_conv1.grads()["weight"])

    # ------------------------------------------------------------------ tensors

    def named_parameters(self) -> "OrderedDict[str, np.ndarray]":
        out = OrderedDict()
        for lname, layer in self._layers.items():
            for pname, arr in layer.params().items():
                out[f"{lname}.{pname}"] = arr
        return out

    def named_buffers(self) -> "OrderedDict[str, np.ndarray]":
        out = OrderedDict()
        for lname, layer in self._layers.items():
            for pname, arr in layer.buffers().items():
                out[f"{lname}.{pname}"] = arr
        return out

    def named_grads(self) -> "OrderedDict[str, np.ndarray]":
        out = OrderedDict()
        for lname, layer in self._layers.items():
            g = layer.grads()
            for pname in layer.params():
                if pname in g:
                    out[f"{lname}.{pname}"] = g[pname]
        return out

    def parameter_kinds(self) -> "OrderedDict[str, str]":
        out = OrderedDict()
        for lname, layer in self._layers.items():
            for pname, kind in layer.kinds().items():
                out[f"{lname}.{pname}"] = kind
        return out

    def state_dict(self) -> "OrderedDict[str, np.ndarray]":
        out = self.named_parameters()
        out.update(self.named_buffers())
        return out

    def load_state_dict(self, tensors: dict) -> None:
        own = self.state_dict()
        missing = [k for k in own if k not in tensors]
        extra = [k for k in tensors if k not in own]
        if missing or extra:
            raise KeyError(f"state mismatch: missing {missing[:3]}..., unexpected {extra[:3]}...")
        for name, arr in own.items():
            src = tensors[name]
            if tuple(src.shape) != tuple(arr.shape):
                raise ValueError(f"shape mismatch for {name}: {src.shape} vs {arr.shape}")
            arr[...] = src.astype(arr.dtype, copy=False)

    def num_parameters(self) -> int:
        return sum(int(a.size) for a in self.named_parameters().values())

    # ------------------------------------------------------------------ report

    def parameter_report(self) -> ParameterReport:
        cfg = self.cfg
        ch, s = cfg.ch, cfg.input_size

        def count(prefixes):
            total = 0
            for lname, layer in self._layers.items():
                if any(lname == p or lname.startswith(p + ".") for p in prefixes):
                    total += sum(int(a.size) for a in layer.params().values())
            return total

        def osz(c, hw):
            return f"{c} x {hw} x {hw}"

        rows = [
            ReportRow("Encoder", "Input Block", f"7 x 7 x {ch(64)} x 3",
                      osz(ch(64), s // 2), True, "ReLU", count(["encoder.conv1", "encoder.bn1"])),
            ReportRow("Encoder", "Input Pool", f"3 x 3 x {ch(64)} x {ch(64)}",
                      osz(ch(64), s // 4), False, "-", 0),
        ]
        stage_hw = (s // 4, s // 8, s // 16, s // 32)
        for si, cbase in enumerate(_STAGE_CHANNELS, start=1):
            cin = ch(_STAGE_CHANNELS[si - 2]) if si > 1 else ch(64)
            rows.append(ReportRow(
                "Encoder", f"Down Block Layer {si}", f"3 x 3 x {ch(cbase)} x {cin}",
                osz(ch(cbase), stage_hw[si - 1]), True, "ReLU", count([f"encoder.layer{si}"])))
        rows.append(ReportRow("Middle Part", "Bridge Layer", f"3 x 3 x {ch(512)} x {ch(512)}",
                              osz(ch(512), s // 32), True, "ReLU", count(["bridge"])))
        if cfg.fusion_enabled:
            rows.append(ReportRow(
                "Middle Part", "Global Layer",
                f"1 x 1 x {ch(512)} x {ch(512)}, 1 x 1 x {ch(256)} x {ch(512)}",
                f"{ch(512)} x 1, {ch(256)} x 1", True, "ReLU", count(["global"])))
            rows.append(ReportRow(
                "Middle Part", "Classification Layer", f"1 x 1 x {cfg.num_classes} x {ch(512)}",
                f"{cfg.num_classes} x 1", True, "Softmax", count(["classifier"])))
        up1_kernel = "- (Fusion Layer)" if cfg.fusion_enabled else "- (Down 3 Skip)"
        rows.append(ReportRow("Decoder", "Up Block Layer 1", up1_kernel,
                              osz(ch(256), s // 16), True, "ReLU", count(["up1"])))
        up_specs = [(128, 256), (64, 128), (32, 64), (16, 32)]
        up_hw = (s // 8, s // 4, s // 2, s)
        for i, (cout, cin) in enumerate(up_specs, start=2):
            rows.append(ReportRow("Decoder", f"Up Block Layer {i}",
                                  f"2 x 2 x {ch(cout)} x {ch(cin)}",
                                  osz(ch(cout), up_hw[i - 2]), True, "ReLU", count([f"up{i}"])))
        rows.append(ReportRow("Decoder", "Conv Out Layer", f"1 x 1 x 2 x {ch(16)}",
                              osz(2, s), True, "Sigmoid", count(["head"])))
        return ParameterReport(rows=rows)


def build_model(cfg: ModelConfig, init: str = "he", seed: int = 0) -> ColorUNet:
    """Construct the graph; ``init='zeros'`` gives the all-zero-weight network
    (BN scale 1, shift 0) whose outputs are exactly 0.5 chroma and uniform
    class probabilities."""
    return ColorUNet(cfg, init=init, seed=seed)
