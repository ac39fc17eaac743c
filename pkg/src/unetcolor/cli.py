"""Command-line entry point.

Subcommands: inspect, train, colorize, evaluate, gradcheck, study-serve,
study-report. Exit codes: 0 success, 1 runtime failure, 2 bad usage, bad
config, or missing paths. Heavy imports happen inside handlers so that a
``--threads`` cap (or the UNETCOLOR_THREADS environment variable) can pin the
BLAS/numba pools before numpy loads, and so ``inspect`` stays fast.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path


def _set_threads(n: int | None) -> None:
    if n is None:
        env = os.environ.get("UNETCOLOR_THREADS")
        n = int(env) if env else None
    if n is None:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS", "NUMBA_NUM_THREADS"):
        os.environ[var] = str(n)


def _model_config(args, extra: dict | None = None, num_classes: int | None = None):
    from .model import ModelConfig

    kwargs = dict(extra or {})
    if getattr(args, "classes", None) is not None:
        kwargs["num_classes"] = args.classes
    if getattr(args, "scale", None) is not None:
        kwargs["channel_scale"] = args.scale
    if getattr(args, "input_size", None) is not None:
        kwargs["input_size"] = args.input_size
    if getattr(args, "no_fusion", False):
        kwargs["fusion_enabled"] = False
    if num_classes is not None and "num_classes" not in kwargs:
        kwargs["num_classes"] = num_classes
    return ModelConfig(**kwargs)


def cmd_inspect(args) -> int:
    from .model import build_model

    extra = {}
    if args.config:
        from .train import parse_config_file

        train_cfg, model_kwargs = parse_config_file(_require(args.config))
        extra.update(model_kwargs)
        if not train_cfg.fusion_enabled:
            extra["fusion_enabled"] = False
    cfg = _model_config(args, extra)
    graph = build_model(cfg, init="zeros")
    report = graph.parameter_report()
    print(report.render())
    return 0


def _require(path) -> Path:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"path does not exist: {p}")
    return p


def cmd_train(args) -> int:
    from . import data as datamod
    from .model import build_model
    from .train import parse_config_file, train
    from .weights import save_weights

    train_cfg, model_kwargs = parse_config_file(_require(args.config))
    manifest = datamod.scan(_require(args.data),
                            datamod.read_class_list(_require(args.classes)) if args.classes else None)
    model_kwargs.setdefault("num_classes", max(2, len(manifest.classes)))
    model_kwargs["fusion_enabled"] = train_cfg.fusion_enabled
    cfg = _model_config(argparse.Namespace(), model_kwargs)
    graph = build_model(cfg, init="he", seed=train_cfg.seed)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def progress(epoch, step, breakdown):
        if args.verbose:
            print(f"epoch {epoch} step {step}: mse={breakdown.mse:.6f} "
                  f"ce={breakdown.ce:.6f} total={breakdown.total:.6f}")

    history = train(graph, manifest, train_cfg, out_dir=out, progress=progress)
    save_weights(graph, out / "weights.unfw")
    (out / "history.json").write_text(json.dumps(
        [{"epoch": i, "mse": h.mse, "ce": h.ce, "total": h.total}
         for i, h in enumerate(history)], indent=2))
    print(f"trained {train_cfg.epochs} epochs; final total loss {history[-1].total:.6f}")
    print(f"weights: {out / 'weights.unfw'}")
    return 0


def _config_from_store(store, default_input_size: int):
    """Reconstruct the build configuration from saved tensor shapes."""
    from .model import ModelConfig

    fusion = any(k.startswith("global.") for k in store)
    scale = store["encoder.conv1.weight"].shape[0] / 64.0
    kwargs = {"channel_scale": scale, "fusion_enabled": fusion}
    if fusion:
        kwargs["num_classes"] = int(store["classifier.fc2.weight"].shape[0])
        flat = store["global.fc1.weight"].shape[1]
        c512 = int(round(512 * scale))
        bottleneck = int(round((flat / c512) ** 0.5))
        kwargs["input_size"] = bottleneck * 32
    else:
        kwargs["input_size"] = default_input_size
    return ModelConfig(**kwargs)


def _load_graph(weights_path, default_input_size: int):
    from .model import build_model
    from .weights import load_store

    store = load_store(_require(weights_path))
    cfg = _config_from_store(store, default_input_size)
    graph = build_model(cfg, init="zeros")
    graph.load_state_dict(store)
    return graph


def cmd_colorize(args) -> int:
    import numpy as np
    from PIL import Image

    from .colorspace import assemble_output, normalize, replicate_l, rgb_to_lab

    graph = _load_graph(args.weights, args.input_size or 256)
    src = _require(args.input)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = sorted(p for p in src.iterdir()
                   if p.suffix.lower() in (".png", ".jpg", ".jpeg")) if src.is_dir() else [src]
    if not paths:
        raise FileNotFoundError(f"no images found under {src}")
    size = graph.cfg.input_size
    for p in paths:
        with Image.open(p) as im:
            rgb = np.asarray(im.convert("RGB").resize((size, size), Image.BILINEAR))
        lab = rgb_to_lab(rgb)
        pair = normalize(lab)
        x = replicate_l(pair.l_norm)[None]
        result = graph.forward(x, mode="inference")
        out_rgb = assemble_output(lab.l, result.ab_norm[0])
        dest = out_dir / (p.stem + ".png")
        Image.fromarray(out_rgb).save(dest)
        print(f"colorized {p.name} -> {dest}")
    return 0


def cmd_evaluate(args) -> int:
    from . import data as datamod
    from .evaluate import evaluate_split, report_to_csv

    graph = _load_graph(args.weights, args.input_size or 256)
    manifest = datamod.scan(_require(args.data))
    report = evaluate_split(graph, manifest, args.split, model_name=args.name,
                            keep_per_image=args.per_image)
    Path(args.report).write_text(report.to_json())
    if args.csv:
        Path(args.csv).write_text(report_to_csv([report]))
    print(f"{args.name}: images={report.image_count} avg_mae={report.avg_mae:.6f} "
          f"avg_mse_ab={report.avg_mse_ab:.6f} avg_mse_lab={report.avg_mse_lab:.6f}")
    print(f"report: {args.report}")
    return 0


def cmd_gradcheck(args) -> int:
    from .train import gradient_check

    report = gradient_check(seed=args.seed, samples_per_kind=args.samples_per_kind,
                            min_samples=args.min_samples)
    print(report.render())
    return 0 if report.passed else 1


def cmd_study_serve(args) -> int:
    import uvicorn

    from .study.service import create_app
    from .study.store import StudyStore

    store = StudyStore(args.log)
    if args.source:
        sources = {}
        for item in args.source:
            if "=" not in item:
                raise ValueError(f"--source expects label=directory, got {item!r}")
            label, directory = item.split("=", 1)
            sources[label] = directory
        study = store.create_study(args.study_name, sources, args.trials)
        print(f"created study {study.study_id} ({study.name}) with sources "
              f"{sorted(study.sources)}")
        print(f"respondent link: http://{args.host}:{args.port}/?study={study.study_id}")
    app = create_app(store, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_study_report(args) -> int:
    from .study.store import StudyStore

    store = StudyStore(_require(args.log))
    study_ids = [args.study] if args.study else sorted(store.studies)
    if not study_ids:
        print("no studies in log")
        return 0
    reports = [store.report(sid) for sid in study_ids]
    for rep in reports:
        print(f"study {rep['study_id']} ({rep['name']}):")
        for label in sorted(rep["sources"]):
            s = rep["sources"][label]
            rate = "n/a" if s["judged_real_rate"] is None else f"{s['judged_real_rate']:.2f}%"
            print(f"  {label}: judged={s['shown']} judged-real={s['judged_real']} rate={rate}")
        for r in rep["respondents"]:
            rate = "n/a" if r["judged_real_rate"] is None else f"{r['judged_real_rate']:.2f}%"
            print(f"  respondent {r['alias']}: {r['judged']}/{r['total']} judged, rate={rate}")
    if args.json:
        Path(args.json).write_text(json.dumps(reports if args.study is None else reports[0],
                                              indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unetcolor",
        description="U-Net + fusion-layer colorization: inspect, train, colorize, "
                    "evaluate, verify gradients, and run the perception study.")
    parser.add_argument("--threads", type=int, default=None,
                        help="cap BLAS/numba thread pools (default: UNETCOLOR_THREADS)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", help="print the architecture table and parameter budget")
    p.add_argument("--config", help="key=value config file (model keys honored)")
    p.add_argument("--no-fusion", action="store_true", help="drop global and classification paths")
    p.add_argument("--classes", type=int, help="number of scene classes (default 137)")
    p.add_argument("--scale", type=float, help="channel scale for reduced profiles (default 1)")
    p.add_argument("--input-size", type=int, help="input resolution, multiple of 32 (default 256)")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("train", help="train on a directory-per-class dataset")
    p.add_argument("--data", required=True, help="dataset root with train/val/test splits")
    p.add_argument("--config", required=True, help="key=value training config (or preset=...)")
    p.add_argument("--out", required=True, help="output directory for weights and history")
    p.add_argument("--classes", help="optional class-list file (one name per line)")
    p.add_argument("--verbose", action="store_true", help="log every step")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("colorize", help="colorize an image file or directory")
    p.add_argument("--weights", required=True, help="weight file (.unfw)")
    p.add_argument("--input", required=True, help="image file or directory")
    p.add_argument("--output", required=True, help="output directory (PNGs, basenames kept)")
    p.add_argument("--input-size", type=int, help="resolution override for fusion-free weights")
    p.set_defaults(func=cmd_colorize)

    p = sub.add_parser("evaluate", help="compute avg MAE / MSE metrics over a split")
    p.add_argument("--weights", required=True, help="weight file (.unfw)")
    p.add_argument("--data", required=True, help="dataset root")
    p.add_argument("--split", default="test", choices=("train", "val", "test"))
    p.add_argument("--report", required=True, help="output JSON path")
    p.add_argument("--csv", help="also write a CSV row")
    p.add_argument("--name", default="model", help="model name for the report")
    p.add_argument("--per-image", action="store_true", help="include per-image rows")
    p.add_argument("--input-size", type=int, help="resolution override for fusion-free weights")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("gradcheck", help="verify analytic gradients against finite differences")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples-per-kind", type=int, default=30,
                   help="samples per parameter kind (7 kinds)")
    p.add_argument("--min-samples", type=int, default=200,
                   help="top up sampling until at least this many total")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("study-serve", help="host the blinded real-vs-fake study")
    p.add_argument("--log", required=True, help="append-only JSONL event log")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ui", help="directory of built UI assets to serve at /")
    p.add_argument("--source", action="append",
                   help="label=directory; give two or more to create a study at startup")
    p.add_argument("--study-name", default="colorization study")
    p.add_argument("--trials", type=int, default=20, help="trials per session")
    p.set_defaults(func=cmd_study_serve)

    p = sub.add_parser("study-report", help="print judged-real rates from an event log")
    p.add_argument("--log", required=True)
    p.add_argument("--study", help="study id (default: all studies in the log)")
    p.add_argument("--json", help="also write the report as JSON")
    p.set_defaults(func=cmd_study_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _set_threads(args.threads)
    try:
        return args.func(args)
    except (FileNotFoundError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        from .model import ConfigError

        if isinstance(exc, (ConfigError, ValueError)) and not isinstance(exc, ArithmeticError):
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
