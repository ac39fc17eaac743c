"""Architecture contracts: published parameter budget, shape trace, forward
semantics, the fusion map, skip wiring, and the fusion-free variant."""

import numpy as np
import pytest

from unetcolor.model import (
    ColorUNet,
    ConfigError,
    FusionParams,
    ModelConfig,
    build_model,
    fuse,
)

# Published per-row parameter budget at the default configuration.
EXPECTED_ROWS = {
    "Input Block": 9_536,
    "Input Pool": 0,
    "Down Block Layer 1": 221_952,
    "Down Block Layer 2": 1_116_416,
    "Down Block Layer 3": 6_822_400,
    "Down Block Layer 4": 13_114_368,
    "Bridge Layer": 4_721_664,
    "Global Layer": 34_215_168,
    "Classification Layer": 167_323,
    "Up Block Layer 1": 1_771_008,
    "Up Block Layer 2": 574_336,
    "Up Block Layer 3": 143_808,
    "Up Block Layer 4": 45_280,
    "Up Block Layer 5": 7_200,
    "Conv Out Layer": 38,
}
EXPECTED_TOTAL = 62_930_497

EXPECTED_SHAPES = {
    "Input Block": (64, 128, 128),
    "Input Pool": (64, 64, 64),
    "Down Block Layer 1": (64, 64, 64),
    "Down Block Layer 2": (128, 32, 32),
    "Down Block Layer 3": (256, 16, 16),
    "Down Block Layer 4": (512, 8, 8),
    "Bridge Layer": (512, 8, 8),
    "Global Layer": (512, 256),
    "Classification Layer": (137,),
    "Up Block Layer 1": (256, 16, 16),
    "Up Block Layer 2": (128, 32, 32),
    "Up Block Layer 3": (64, 64, 64),
    "Up Block Layer 4": (32, 128, 128),
    "Up Block Layer 5": (16, 256, 256),
    "Conv Out Layer": (2, 256, 256),
}

REDUCED = ModelConfig(num_classes=5, input_size=64, channel_scale=0.125)


@pytest.fixture(scope="module")
def default_graph():
    return build_model(ModelConfig(), init="zeros")


def test_every_row_matches_published_budget(default_graph):
    report = default_graph.parameter_report()
    got = {r.name: r.params for r in report.rows}
    assert got == EXPECTED_ROWS
    assert report.total == EXPECTED_TOTAL
    assert default_graph.num_parameters() == EXPECTED_TOTAL


def test_shape_trace_matches_published_output_sizes(default_graph):
    x = np.zeros((1, 3, 256, 256), dtype=np.float32)
    default_graph.forward(x, mode="inference")
    assert default_graph.shape_trace == EXPECTED_SHAPES


def test_zero_weight_network_emits_exact_midpoint(default_graph):
    x = np.random.default_rng(0).random((1, 3, 256, 256), dtype=np.float32)
    result = default_graph.forward(x, mode="inference")
    assert np.all(result.ab_norm == 0.5)
    assert np.all(result.class_probs == np.float32(1.0) / 137)
    assert result.class_probs.sum(axis=1) == pytest.approx(1.0, abs=1e-6)


def test_forward_is_deterministic():
    graph = build_model(REDUCED, init="he", seed=3)
    x = np.random.default_rng(1).random((2, 3, 64, 64), dtype=np.float32)
    a = graph.forward(x, mode="inference")
    b = graph.forward(x, mode="inference")
    assert np.array_equal(a.ab_norm, b.ab_norm)
    assert np.array_equal(a.class_probs, b.class_probs)


def test_forward_output_ranges():
    graph = build_model(REDUCED, init="he", seed=4)
    x = np.random.default_rng(2).random((2, 3, 64, 64), dtype=np.float32)
    r = graph.forward(x, mode="train")
    assert np.all(r.ab_norm > 0.0) and np.all(r.ab_norm < 1.0)
    assert np.all(r.class_probs >= 0.0)
    np.testing.assert_allclose(r.class_probs.sum(axis=1), 1.0, atol=1e-6)


def test_forward_rejects_wrong_shape():
    graph = build_model(REDUCED, init="zeros")
    with pytest.raises(ValueError):
        graph.forward(np.zeros((1, 3, 32, 32), dtype=np.float32))


# ------------------------------------------------------------------- fusion op


def test_fuse_zero_weights_replicate_bias():
    params = FusionParams(W=np.zeros((3, 6)), b=np.array([1.0, -2.0, 0.5]))
    out = fuse(np.ones(2), np.random.default_rng(0).random((4, 5, 5)), params)
    assert out.shape == (3, 5, 5)
    assert np.all(out[0] == 1.0)
    assert np.all(out[1] == 0.0)  # ReLU clips the negative bias
    assert np.all(out[2] == 0.5)


def test_fuse_constant_local_gives_constant_output():
    rng = np.random.default_rng(1)
    params = FusionParams(W=rng.standard_normal((4, 7)), b=rng.standard_normal(4))
    g = rng.standard_normal(3)
    local = np.broadcast_to(rng.standard_normal((4, 1, 1)), (4, 6, 6)).copy()
    out = fuse(g, local, params)
    for f in range(4):
        assert np.all(out[f] == out[f, 0, 0])


def test_fuse_hand_computed_scalar_case():
    # 2-dim global, 2-dim local, single spatial position
    g = np.array([1.0, 2.0])
    local = np.array([[[3.0]], [[4.0]]])
    params = FusionParams(W=np.array([[0.5, -1.0, 2.0, 0.25]]), b=np.array([0.125]))
    # pre = 0.125 + 0.5*1 - 1*2 + 2*3 + 0.25*4 = 5.625
    out = fuse(g, local, params)
    assert out.shape == (1, 1, 1)
    assert out[0, 0, 0] == pytest.approx(5.625, abs=1e-15)


def test_fuse_same_global_everywhere():
    # replacing g shifts all positions identically when local is constant
    rng = np.random.default_rng(2)
    params = FusionParams(W=rng.standard_normal((2, 5)), b=np.zeros(2))
    local = np.broadcast_to(rng.standard_normal((2, 1, 1)), (2, 3, 3)).copy()
    a = fuse(np.array([1.0, 0.0, 2.0]), local, params)
    b = fuse(np.array([0.0, 1.0, -1.0]), local, params)
    delta = a - b
    for f in range(2):
        assert np.allclose(delta[f], delta[f, 0, 0])


def test_fuse_dimension_mismatch():
    params = FusionParams(W=np.zeros((3, 5)), b=np.zeros(3))
    with pytest.raises(ValueError):
        fuse(np.zeros(2), np.zeros((4, 2, 2)), params)


# ------------------------------------------------------------------- variants


def test_no_fusion_variant_drops_global_and_classifier():
    cfg = ModelConfig(fusion_enabled=False)
    graph = build_model(cfg, init="zeros")
    report = graph.parameter_report()
    names = [r.name for r in report.rows]
    assert "Global Layer" not in names
    assert "Classification Layer" not in names
    assert report.total == EXPECTED_TOTAL - EXPECTED_ROWS["Global Layer"] - EXPECTED_ROWS["Classification Layer"]
    # channel arithmetic identical: up blocks keep their published budgets
    got = {r.name: r.params for r in report.rows}
    for row in ("Up Block Layer 1", "Up Block Layer 2", "Conv Out Layer"):
        assert got[row] == EXPECTED_ROWS[row]


def test_no_fusion_forward_returns_no_classification():
    cfg = ModelConfig(num_classes=5, input_size=64, channel_scale=0.125, fusion_enabled=False)
    graph = build_model(cfg, init="zeros")
    r = graph.forward(np.random.default_rng(0).random((1, 3, 64, 64), dtype=np.float32))
    assert np.all(r.ab_norm == 0.5)
    assert r.class_probs is None and r.class_logits is None


def test_classification_budget_recomputes_with_classes():
    graph = build_model(ModelConfig(num_classes=10), init="zeros")
    row = graph.parameter_report().row("Classification Layer")
    # fc 512->256 (+bias) + bn(256) + fc 256->10 (+bias) + bn(10)
    assert row.params == (512 * 256 + 256) + 512 + (256 * 10 + 10) + 20


def test_non_integral_channel_scale_rejected():
    with pytest.raises(ConfigError):
        build_model(ModelConfig(channel_scale=0.3))
    with pytest.raises(ConfigError):
        build_model(ModelConfig(input_size=100))
    with pytest.raises(ConfigError):
        build_model(ModelConfig(num_classes=1))


def test_channel_scaled_profile_keeps_halving_points():
    graph = build_model(REDUCED, init="zeros")
    graph.forward(np.zeros((1, 3, 64, 64), dtype=np.float32))
    tr = graph.shape_trace
    assert tr["Input Block"] == (8, 32, 32)
    assert tr["Down Block Layer 4"] == (64, 2, 2)
    assert tr["Up Block Layer 5"] == (2, 64, 64)
    assert tr["Conv Out Layer"] == (2, 64, 64)


# ------------------------------------------------------------------- skips


def test_ablating_skips_changes_decoder_output():
    """Zeroing each skip's contribution must change the output: the decoder
    consumes the concatenated skip channels through up-block convolutions."""
    cfg = ModelConfig(num_classes=5, input_size=64, channel_scale=0.25)
    graph = build_model(cfg, init="he", seed=11)
    x = np.random.default_rng(3).random((1, 3, 64, 64), dtype=np.float32)
    base = graph.forward(x, mode="inference").ab_norm

    # each up block's conv1 splits [upsampled | skip]; zero the skip half
    for block, up_ch in ((graph.up2, graph.up2._up_ch), (graph.up3, graph.up3._up_ch),
                         (graph.up4, graph.up4._up_ch), (graph.up5, graph.up5._up_ch)):
        saved = block.conv1.weight.copy()
        block.conv1.weight[:, up_ch:] = 0.0
        ablated = graph.forward(x, mode="inference").ab_norm
        assert not np.array_equal(base, ablated)
        block.conv1.weight[...] = saved
    np.testing.assert_array_equal(graph.forward(x, mode="inference").ab_norm, base)
