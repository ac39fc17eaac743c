"""CLI surface: flags, exit codes, output files."""

import json
import subprocess
import sys

import numpy as np
import pytest
from PIL import Image

from unetcolor.cli import build_parser, main
from conftest import write_image


def run_cli(argv):
    return main(argv)


def test_inspect_prints_published_total(capsys):
    assert run_cli(["inspect"]) == 0
    out = capsys.readouterr().out
    assert "62,930,497" in out
    assert "Up Block Layer 5" in out and "7,200" in out


def test_inspect_no_fusion_drops_rows(capsys):
    assert run_cli(["inspect", "--no-fusion"]) == 0
    out = capsys.readouterr().out
    assert "Global Layer" not in out
    assert "Classification Layer" not in out


def test_inspect_classes_recomputes(capsys):
    assert run_cli(["inspect", "--classes", "10"]) == 0
    out = capsys.readouterr().out
    assert "167,323" not in out
    assert f"{(512 * 256 + 256) + 512 + (256 * 10 + 10) + 20:,}" in out


def test_inspect_bad_config_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("unknown_key = 1")
    assert run_cli(["inspect", "--config", str(cfg)]) == 2


def test_unknown_flag_rejected():
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(["inspect", "--bogus"])
    assert exc.value.code == 2


def test_every_command_documents_its_flags(capsys):
    expected = {
        "inspect": ["--config", "--no-fusion", "--classes", "--scale", "--input-size"],
        "train": ["--data", "--config", "--out", "--classes", "--verbose"],
        "colorize": ["--weights", "--input", "--output", "--input-size"],
        "evaluate": ["--weights", "--data", "--split", "--report", "--csv", "--name"],
        "gradcheck": ["--seed", "--samples-per-kind", "--min-samples"],
        "study-serve": ["--log", "--host", "--port", "--ui", "--source", "--trials"],
        "study-report": ["--log", "--study", "--json"],
    }
    for command, flags in expected.items():
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args([command, "--help"])
        assert exc.value.code == 0
        text = capsys.readouterr().out
        for flag in flags:
            assert flag in text, f"{command} --help missing {flag}"


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    """A tiny end-to-end training run shared by colorize/evaluate tests."""
    from conftest import make_toy_dataset

    base = tmp_path_factory.mktemp("cliwork")
    data = make_toy_dataset(base / "data", n_classes=2, per_class=2, size=64)
    cfg = base / "train.cfg"
    cfg.write_text(
        "preset = proposed3\nepochs = 1\nbatch_size = 4\n"
        "input_size = 64\nchannel_scale = 0.125\nseed = 1\n"
    )
    out = base / "run"
    assert main(["train", "--data", str(data), "--config", str(cfg), "--out", str(out)]) == 0
    return {"data": data, "out": out, "base": base}


def test_train_writes_outputs(trained):
    weights = trained["out"] / "weights.unfw"
    history = trained["out"] / "history.json"
    assert weights.exists() and history.exists()
    hist = json.loads(history.read_text())
    assert len(hist) == 1 and {"epoch", "mse", "ce", "total"} <= set(hist[0])


def test_colorize_writes_pngs(trained, tmp_path, capsys):
    out_dir = tmp_path / "colorized"
    src = trained["data"] / "test" / "class0"
    code = main(["colorize", "--weights", str(trained["out"] / "weights.unfw"),
                 "--input", str(src), "--output", str(out_dir)])
    assert code == 0
    outs = sorted(out_dir.glob("*.png"))
    assert len(outs) == len(list(src.iterdir()))
    assert {p.stem for p in outs} == {p.stem for p in src.iterdir()}


def test_colorize_zero_weights_is_near_grayscale(tmp_path):
    from unetcolor.model import ModelConfig, build_model
    from unetcolor.weights import save_weights
    from unetcolor.colorspace import rgb_to_lab

    graph = build_model(ModelConfig(num_classes=2, input_size=64, channel_scale=0.125),
                        init="zeros")
    wfile = tmp_path / "zero.unfw"
    save_weights(graph, wfile)
    gray = np.repeat(np.random.default_rng(0).integers(40, 220, (64, 64, 1)), 3, axis=2)
    src = tmp_path / "in" / "gray.png"
    write_image(src, gray)
    out_dir = tmp_path / "out"
    assert main(["colorize", "--weights", str(wfile), "--input", str(src),
                 "--output", str(out_dir)]) == 0
    produced = np.asarray(Image.open(out_dir / "gray.png").convert("RGB"))
    lab = rgb_to_lab(produced)
    # sigmoid(0) chroma denormalizes to -0.5; quantization adds at most ~1
    assert np.abs(lab.a).max() <= 1.5
    assert np.abs(lab.b).max() <= 1.5


def test_evaluate_writes_json_with_schema_keys(trained, tmp_path):
    report = tmp_path / "report.json"
    csv_out = tmp_path / "report.csv"
    code = main(["evaluate", "--weights", str(trained["out"] / "weights.unfw"),
                 "--data", str(trained["data"]), "--split", "test",
                 "--report", str(report), "--csv", str(csv_out), "--name", "tiny"])
    assert code == 0
    payload = json.loads(report.read_text())
    assert {"avg_mae", "avg_mse_ab", "avg_mse_lab"} <= set(payload)
    assert payload["model"] == "tiny" and payload["images"] == 4
    assert csv_out.read_text().startswith("Config. Name,")


def test_missing_paths_exit_2(tmp_path, capsys):
    assert main(["colorize", "--weights", str(tmp_path / "none.unfw"),
                 "--input", str(tmp_path), "--output", str(tmp_path / "o")]) == 2
    assert main(["evaluate", "--weights", str(tmp_path / "none.unfw"),
                 "--data", str(tmp_path), "--report", str(tmp_path / "r.json")]) == 2
    assert main(["train", "--data", str(tmp_path / "missing"),
                 "--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path)]) == 2


def test_gradcheck_cli_deterministic(capsys):
    args = ["gradcheck", "--seed", "7", "--samples-per-kind", "2", "--min-samples", "14"]
    code_a = main(args)
    out_a = capsys.readouterr().out
    code_b = main(args)
    out_b = capsys.readouterr().out
    assert code_a == code_b == 0
    assert out_a == out_b
    assert "PASS" in out_a


def test_study_report_command(tmp_path, capsys):
    from unetcolor.study.store import StudyStore

    rng = np.random.default_rng(1)
    for label in ("a", "b"):
        for i in range(3):
            write_image(tmp_path / label / f"{i}.png", rng.integers(0, 255, (8, 8, 3)))
    store = StudyStore(tmp_path / "log.jsonl")
    study = store.create_study("s", {"a": tmp_path / "a", "b": tmp_path / "b"}, 4)
    session = store.open_session(study.study_id, "r1", 0)
    nxt = store.next_trial(session.session_id)
    store.submit_judgment(session.session_id, nxt[2], "real")
    json_out = tmp_path / "report.json"
    assert main(["study-report", "--log", str(tmp_path / "log.jsonl"),
                 "--json", str(json_out)]) == 0
    out = capsys.readouterr().out
    assert "respondent r1: 1/4 judged" in out
    assert json.loads(json_out.read_text())[0]["study_id"] == study.study_id


def test_console_entry_point_installed():
    proc = subprocess.run([sys.executable, "-m", "unetcolor.cli", "inspect"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert "62,930,497" in proc.stdout
