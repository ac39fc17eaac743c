"""Training loop, the published configuration presets, and gradient verification.

Presets (optimizer, lr, batch, class-loss weight):

    proposed1           adadelta 0.03, batch 64, weight 1
    proposed2           adam 0.01, batch 16, weight 1
    proposed3           adam 0.01, batch 16, weight 0.01 (classification loss / 100)
    proposed4           adam 0.01, batch 64, weight 1
    proposed2_nofusion  adam 0.01, batch 16, MSE only (no fusion graph)

The run is deterministic given the seed: weight init, data order, and the
fixed-order reductions inside every kernel all derive from it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import data as datamod
from .losses import LossBreakdown, cross_entropy_from_logits, mse_loss_grad
from .model import ColorUNet, ConfigError, ModelConfig, build_model
from .optim import make_optimizer
from .weights import save_weights


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "adam"
    lr: float = 0.01
    batch_size: int = 16
    epochs: int = 10
    class_loss_weight: float = 1.0
    fusion_enabled: bool = True
    seed: int = 0

    def validate(self) -> None:
        if self.optimizer not in ("adam", "adadelta"):
            raise ConfigError(f"optimizer must be adam or adadelta, got {self.optimizer!r}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if (self.class_loss_weight == 0.0) != (not self.fusion_enabled):
            raise ConfigError(
                "class_loss_weight must be 0 exactly when fusion is disabled "
                f"(got weight={self.class_loss_weight}, fusion={self.fusion_enabled})"
            )


PRESETS = {
    "proposed1": TrainConfig(optimizer="adadelta", lr=0.03, batch_size=64,
                             class_loss_weight=1.0, fusion_enabled=True),
    "proposed2": TrainConfig(optimizer="adam", lr=0.01, batch_size=16,
                             class_loss_weight=1.0, fusion_enabled=True),
    "proposed3": TrainConfig(optimizer="adam", lr=0.01, batch_size=16,
                             class_loss_weight=0.01, fusion_enabled=True),
    "proposed4": TrainConfig(optimizer="adam", lr=0.01, batch_size=64,
                             class_loss_weight=1.0, fusion_enabled=True),
    "proposed2_nofusion": TrainConfig(optimizer="adam", lr=0.01, batch_size=16,
                                      class_loss_weight=0.0, fusion_enabled=False),
}

_TRAIN_KEYS = {
    "optimizer": str,
    "lr": float,
    "batch_size": int,
    "epochs": int,
    "class_loss_weight": float,
    "fusion_enabled": None,  # bool, parsed below
    "seed": int,
}
_MODEL_KEYS = {"num_classes": int, "input_size": int, "channel_scale": float}


def _parse_bool(v: str) -> bool:
    if v.lower() in ("1", "true", "yes", "on"):
        return True
    if v.lower() in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {v!r}")


def parse_config_text(text: str):
    """key=value config: training keys, optional model keys, optional preset."""
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        k, v = (part.strip() for part in line.split("=", 1))
        pairs[k] = v

    train_kwargs = {}
    if "preset" in pairs:
        name = pairs.pop("preset")
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
        preset = PRESETS[name]
        train_kwargs = {k: getattr(preset, k) for k in _TRAIN_KEYS}
    model_kwargs = {}
    for k, v in pairs.items():
        if k in _TRAIN_KEYS:
            conv = _TRAIN_KEYS[k]
            train_kwargs[k] = _parse_bool(v) if conv is None else conv(v)
        elif k in _MODEL_KEYS:
            model_kwargs[k] = _MODEL_KEYS[k](v)
        else:
            raise ConfigError(f"unknown config key {k!r}")
    cfg = TrainConfig(**train_kwargs)
    cfg.validate()
    return cfg, model_kwargs


def parse_config_file(path) -> tuple:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def compute_losses_and_grads(result, ab_target, labels, class_weight):
    """Joint loss plus the gradients that seed the model backward pass."""
    mse, d_ab = mse_loss_grad(result.ab_norm, ab_target)
    if class_weight == 0.0:
        return LossBreakdown(mse=mse, ce=0.0, total=mse), d_ab, None
    ce, d_logits = cross_entropy_from_logits(result.class_logits, labels)
    return (LossBreakdown(mse=mse, ce=ce, total=mse + class_weight * ce),
            d_ab, class_weight * d_logits)


def train_step(graph: ColorUNet, optimizer, l_batch, ab_batch, labels, class_weight):
    result = graph.forward(l_batch, mode="train")
    breakdown, d_ab, d_logits = compute_losses_and_grads(result, ab_batch, labels, class_weight)
    graph.backward(d_ab.astype(graph.cfg.np_dtype), d_logits)
    optimizer.step(graph.named_grads())
    return breakdown


def train(graph: ColorUNet, manifest, cfg: TrainConfig, out_dir=None, progress=None):
    """Run the full loop: epochs x ceil(N/batch) steps, checkpoint per epoch.

    Returns the per-epoch mean LossBreakdown history; the trained weights live
    in the graph (and in ``out_dir/checkpoint.unfw`` when out_dir is given).
    """
    cfg.validate()
    if cfg.fusion_enabled != graph.cfg.fusion_enabled:
        raise ConfigError("train config and graph disagree on fusion_enabled")
    optimizer = make_optimizer(cfg.optimizer, graph.named_parameters(), cfg.lr)
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    history = []
    size = graph.cfg.input_size
    for epoch in range(cfg.epochs):
        sums = np.zeros(3)
        nb = 0
        for step, batch_idx in enumerate(
                datamod.batches(manifest, "train", cfg.batch_size, cfg.seed, epoch)):
            l_batch, ab_batch, labels = datamod.load_batch(manifest, batch_idx, size=size)
            breakdown = train_step(graph, optimizer, l_batch, ab_batch, labels,
                                   cfg.class_loss_weight)
            sums += (breakdown.mse, breakdown.ce, breakdown.total)
            nb += 1
            if progress is not None:
                progress(epoch, step, breakdown)
        history.append(LossBreakdown(mse=sums[0] / nb, ce=sums[1] / nb, total=sums[2] / nb))
        if out_dir is not None:
            save_weights(graph, out_dir / "checkpoint.unfw")
    return history


# --------------------------------------------------------------------- gradcheck

REDUCED_PROFILE = ModelConfig(num_classes=11, input_size=64, fusion_enabled=True,
                              channel_scale=0.125, dtype="float64")

# Parameter kinds the report must cover (fusion_w/b are the entry-decoder conv
# weight and concat-BN shift, the tensors realizing the global-local merge).
REQUIRED_KINDS = ("conv", "tconv", "fc", "bn_scale", "bn_shift", "fusion_w", "fusion_b")


@dataclass
class GradCheckEntry:
    name: str
    kind: str
    flat_index: int
    analytic: float
    numeric: float
    rel_error: float


@dataclass
class GradCheckReport:
    seed: int
    threshold: float
    entries: list
    max_rel_error: float
    passed: bool
    unresolvable: int = 0  # coordinates where the FD oracle disagreed with itself

    def kind_counts(self) -> dict:
        counts = {}
        for e in self.entries:
            counts[e.kind] = counts.get(e.kind, 0) + 1
        return counts

    def render(self) -> str:
        lines = [
            f"gradient check: seed={self.seed} samples={len(self.entries)} "
            f"max_rel_error={self.max_rel_error:.3e} threshold={self.threshold:.1e} "
            f"{'PASS' if self.passed else 'FAIL'}",
            "kind counts: " + ", ".join(f"{k}={v}" for k, v in sorted(self.kind_counts().items()))
            + f"; unresolvable skipped: {self.unresolvable}",
        ]
        worst = sorted(self.entries, key=lambda e: -e.rel_error)[:10]
        lines.append("worst entries:")
        for e in worst:
            lines.append(f"  {e.rel_error:.3e}  {e.kind:9s} {e.name}[{e.flat_index}] "
                         f"analytic={e.analytic:+.6e} numeric={e.numeric:+.6e}")
        return "\n".join(lines)


def gradient_check(seed: int = 0, samples_per_kind: int = 30, threshold: float = 1e-4,
                   model_cfg: ModelConfig = REDUCED_PROFILE, batch: int = 4,
                   class_weight: float = 1.0, step: float = 1e-6,
                   min_samples: int = 200) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    Runs the reduced float64 profile. For every parameter kind, samples
    coordinates whose analytic gradient is above the finite-difference noise
    floor (smaller gradients cannot be resolved by central differences) and
    reports |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).

    Central differences only measure the derivative where the loss is smooth
    over the whole +/-h interval. A random batch occasionally parks some ReLU
    pre-activation (or pool tie) almost exactly on its kink, which contaminates
    the difference for every upstream parameter; the checker detects this by
    re-evaluating each difference at h/8 and, if several coordinates disagree
    with themselves, re-draws the batch deterministically and starts over.
    A wrong analytic gradient produces self-consistent differences that
    disagree with it, so it is still caught.
    """
    if model_cfg.dtype != "float64":
        model_cfg = replace(model_cfg, dtype="float64")
    graph = build_model(model_cfg, init="he", seed=seed)
    for attempt in range(8):
        report = _gradient_check_once(graph, seed, attempt, samples_per_kind,
                                      threshold, batch, class_weight, step, min_samples)
        if report is not None:
            return report
    raise RuntimeError("gradient check could not find a kink-free evaluation batch")


def _gradient_check_once(graph, seed, attempt, samples_per_kind, threshold,
                         batch, class_weight, step, min_samples):
    """One sampling pass; None means the batch was poisoned and must be redrawn."""
    model_cfg = graph.cfg
    rng = np.random.default_rng([seed + 1, attempt])
    s = model_cfg.input_size
    l_batch = rng.random((batch, 3, s, s))
    l_batch[:, 1] = l_batch[:, 0]
    l_batch[:, 2] = l_batch[:, 0]
    ab_batch = rng.random((batch, 2, s, s))
    labels = rng.integers(0, model_cfg.num_classes, size=batch)

    def loss() -> float:
        result = graph.forward(l_batch, mode="train")
        breakdown, _, _ = compute_losses_and_grads(result, ab_batch, labels, class_weight)
        return breakdown.total

    result = graph.forward(l_batch, mode="train")
    _, d_ab, d_logits = compute_losses_and_grads(result, ab_batch, labels, class_weight)
    graph.backward(d_ab, d_logits)
    params = graph.named_parameters()
    grads = {k: v.copy() for k, v in graph.named_grads().items()}
    kinds = graph.parameter_kinds()

    by_kind = {}
    for name in params:
        by_kind.setdefault(kinds[name], []).append(name)

    def central_diff(p, flat, orig, h):
        p[flat] = orig + h
        lp = loss()
        p[flat] = orig - h
        lm = loss()
        p[flat] = orig
        return (lp - lm) / (2.0 * h)

    pools = {}
    for kind in REQUIRED_KINDS:
        candidates = []
        for name in by_kind.get(kind, []):
            g = grads[name].ravel()
            (idx,) = np.nonzero(np.abs(g) >= 5e-5)
            if len(idx) > 512:  # keep the pool small; evenly spaced stays deterministic
                idx = idx[:: len(idx) // 512 + 1]
            candidates.extend((name, int(i)) for i in idx)
        if not candidates:
            raise RuntimeError(f"gradient check found no usable parameters of kind {kind}")
        order = rng.permutation(len(candidates))
        pools[kind] = [candidates[int(i)] for i in order]

    entries = []
    state = {"unresolvable": 0}

    def try_next(kind):
        """Evaluate the pool's next candidate; False aborts (poisoned batch)."""
        name, flat = pools[kind].pop(0)
        p = params[name].ravel()
        orig = p[flat]
        h = step * max(1.0, abs(orig))
        fd = central_diff(p, flat, orig, h)
        probe = central_diff(p, flat, orig, h / 8.0)
        # allowance: ~1e-14 loss roundoff puts ~2e-8 of noise on the probe
        if abs(fd - probe) > 1e-4 * max(abs(fd), abs(probe)) + 6e-8:
            state["unresolvable"] += 1
            return state["unresolvable"] < 3  # kink near the operating point: redraw
        analytic = float(grads[name].ravel()[flat])
        rel = abs(analytic - fd) / max(abs(analytic), abs(fd), 1e-8)
        entries.append(GradCheckEntry(name=name, kind=kind, flat_index=flat,
                                      analytic=analytic, numeric=fd, rel_error=rel))
        return True

    for kind in REQUIRED_KINDS:
        accepted_before = len(entries)
        while pools[kind] and len(entries) - accepted_before < samples_per_kind:
            if not try_next(kind):
                return None
    # top up from whatever pools remain so the report always covers min_samples
    while len(entries) < min_samples and any(pools.values()):
        for kind in REQUIRED_KINDS:
            if pools[kind] and len(entries) < min_samples:
                if not try_next(kind):
                    return None
    if len(entries) < min_samples:
        raise RuntimeError(
            f"gradient check ran out of resolvable candidates ({len(entries)} < {min_samples})")

    max_rel = max(e.rel_error for e in entries)
    return GradCheckReport(seed=seed, threshold=threshold, entries=entries,
                           max_rel_error=max_rel, passed=max_rel <= threshold,
                           unresolvable=state["unresolvable"])
