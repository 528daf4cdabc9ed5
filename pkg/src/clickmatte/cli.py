"""Command-line entry points: synth-data, train, eval, sparsify, infer, refine, serve.

Options come from an optional YAML config file plus flags; flags win. Every
command honors --seed. Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np
import yaml


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    data = yaml.safe_load(Path(path).read_text()) or {}
    if not isinstance(data, dict):
        raise ValueError("config file must hold a key/value mapping")
    return data


def _merge(config_cls, file_cfg: dict, args: argparse.Namespace, keymap: dict[str, str]):
    fields = {f.name for f in dataclasses.fields(config_cls)}
    kwargs = {k: v for k, v in file_cfg.items() if k in fields}
    for arg_name, field_name in keymap.items():
        val = getattr(args, arg_name, None)
        if val is not None:
            kwargs[field_name] = val
    return config_cls(**kwargs)


def cmd_synth_data(args) -> int:
    from .compositor import DatasetConfig, build_dataset

    cfg = _merge(DatasetConfig, _load_config(args.config), args, {
        "seed": "seed", "n_fg": "n_foregrounds", "n_bg": "n_backgrounds",
        "size": "size", "ambiguous_fraction": "ambiguous_fraction",
    })
    manifest = build_dataset(args.out, cfg)
    print(f"wrote {manifest}")
    return 0


def cmd_train(args) -> int:
    from .training import DeskDataset, TrainConfig, train_matting, train_refinement, train_uncertainty

    cfg = _merge(TrainConfig, _load_config(args.config), args, {
        "seed": "seed", "epochs_matting": "epochs_matting",
        "epochs_uncertainty": "epochs_uncertainty", "epochs_refine": "epochs_refine",
        "batch_size": "batch_size", "base_lr": "base_lr", "base_width": "base_width",
    })
    dataset = DeskDataset(args.data)
    out = Path(args.out)
    stages = args.stages.split(",")
    matting_ckpt = args.matting_ckpt
    if "matting" in stages:
        matting_ckpt, _ = train_matting(dataset, cfg, out)
        print(f"matting checkpoint: {matting_ckpt}")
    if "uncertainty" in stages:
        if matting_ckpt is None:
            raise ValueError("uncertainty stage needs --matting-ckpt or prior matting stage")
        ckpt, _ = train_uncertainty(dataset, matting_ckpt, cfg, out)
        print(f"uncertainty checkpoint: {ckpt}")
    if "refine" in stages:
        if matting_ckpt is None:
            raise ValueError("refine stage needs --matting-ckpt or prior matting stage")
        ckpt, _ = train_refinement(dataset, matting_ckpt, cfg, out)
        print(f"refiner checkpoint: {ckpt}")
    return 0


def _iter_matte_pairs(pred_dir: Path, gt_dir: Path):
    from . import io as cmio

    for pred_path in sorted(pred_dir.glob("*.png")):
        gt_path = gt_dir / pred_path.name
        if not gt_path.exists():
            raise FileNotFoundError(f"missing ground truth for {pred_path.name}")
        yield pred_path.name, cmio.load_matte_png(pred_path), cmio.load_matte_png(gt_path)


def cmd_eval(args) -> int:
    from .compositor import make_partition
    from .domain import RegionLabel
    from .evaluation import metric_report, write_metric_csv, write_metric_json

    reports = {}
    for name, pred, gt in _iter_matte_pairs(Path(args.pred), Path(args.gt)):
        mask = None
        scope = "full"
        if args.transition_only:
            partition = make_partition(gt)
            mask = partition.mask(RegionLabel.TRANSITION)
            scope = "transition"
        reports[name] = metric_report(pred, gt, mask, region_scope=scope)
    out = Path(args.out) if args.out else None
    if args.json:
        payload = {k: v.to_json() for k, v in reports.items()}
        text = json.dumps(payload, indent=2)
        if out:
            out.write_text(text)
        print(text)
    elif out:
        write_metric_csv(out, reports)
        print(f"wrote {out}")
    else:
        for name, r in reports.items():
            print(f"{name}: sad={r.sad:.4f} mse={r.mse:.6f} grad={r.grad:.4f} conn={r.conn:.4f}")
    return 0


def cmd_sparsify(args) -> int:
    from . import io as cmio
    from .evaluation import sparsification, write_sparsification_csv

    pred = cmio.load_matte_png(args.pred)
    gt = cmio.load_matte_png(args.gt)
    sigma = cmio.load_uncertainty_map(args.sigma)
    fractions = [float(f) for f in args.fractions.split(",")]
    curve = sparsification(pred, gt, sigma, fractions)
    write_sparsification_csv(args.out, curve)
    if args.json:
        print(json.dumps({"fractions": curve.fractions,
                          "predicted": curve.mse_remaining_predicted,
                          "oracle": curve.mse_remaining_oracle}))
    else:
        print(f"wrote {args.out}")
    return 0


def _load_inference_inputs(args):
    from . import io as cmio
    from .domain import ClickSet
    from .interaction import render_hint_map

    image = cmio.load_image_png(args.image)
    clicks = cmio.load_clicks(args.clicks, radius=args.click_radius) if args.clicks \
        else ClickSet((), args.click_radius)
    hints = render_hint_map(clicks, image.height, image.width)
    return image, clicks, hints


def cmd_infer(args) -> int:
    from . import io as cmio
    from .models import load_matting_model, matting_forward, uncertainty_forward

    model = load_matting_model(args.ckpt)
    image, _, hints = _load_inference_inputs(args)
    if args.sigma_out and model.has_uncertainty_head:
        out = uncertainty_forward(model, image, hints)
        cmio.save_matte_png(out.alpha_p, args.out)
        cmio.save_uncertainty_map(out.sigma_p, args.sigma_out)
    else:
        alpha = matting_forward(model, image, hints)
        cmio.save_matte_png(alpha, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_refine(args) -> int:
    from . import io as cmio
    from .domain import UncertaintyMap
    from .models import load_matting_model, load_refiner, uncertainty_forward
    from .refinement import patches_to_json, refine_matte, select_patches

    model = load_matting_model(args.ckpt)
    if not model.has_uncertainty_head:
        raise ValueError("checkpoint has no uncertainty head; cannot rank patches")
    refiner = load_refiner(args.refiner)
    image, _, hints = _load_inference_inputs(args)
    out = uncertainty_forward(model, image, hints)
    patches = select_patches(out.sigma_p, refiner.config.patch_size, args.K)
    refined = refine_matte(image, out.alpha_p, patches, refiner)
    cmio.save_matte_png(refined, args.out)
    if args.patches_out:
        Path(args.patches_out).write_text(json.dumps(patches_to_json(patches)))
    print(f"wrote {args.out} ({len(patches)} patches refined)")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(matting_ckpt=args.ckpt, refiner_ckpt=args.refiner)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clickmatte")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--config", type=str, default=None, help="YAML key/value config file")

    p = sub.add_parser("synth-data", help="generate a procedural matting dataset")
    common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--n-fg", type=int, default=None)
    p.add_argument("--n-bg", type=int, default=None)
    p.add_argument("--size", type=int, default=None)
    p.add_argument("--ambiguous-fraction", type=float, default=None)
    p.set_defaults(func=cmd_synth_data)

    p = sub.add_parser("train", help="run the staged training pipeline")
    common(p)
    p.add_argument("--data", required=True, help="dataset manifest path")
    p.add_argument("--out", required=True)
    p.add_argument("--stages", default="matting,uncertainty,refine")
    p.add_argument("--matting-ckpt", default=None)
    p.add_argument("--epochs-matting", type=int, default=None)
    p.add_argument("--epochs-uncertainty", type=int, default=None)
    p.add_argument("--epochs-refine", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--base-lr", type=float, default=None)
    p.add_argument("--base-width", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="compute matting metrics over matte directories")
    common(p)
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--transition-only", action="store_true")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sparsify", help="emit a sparsification curve CSV")
    common(p)
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--sigma", required=True)
    p.add_argument("--fractions", default="0,0.05,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_sparsify)

    p = sub.add_parser("infer", help="predict a matte for one image")
    common(p)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--clicks", default=None, help="clicks JSON path")
    p.add_argument("--click-radius", type=int, default=15)
    p.add_argument("--out", required=True)
    p.add_argument("--sigma-out", default=None)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("refine", help="predict and locally refine the top-K patches")
    common(p)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--refiner", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--clicks", default=None)
    p.add_argument("--click-radius", type=int, default=15)
    p.add_argument("-K", "--K", type=int, default=8)
    p.add_argument("--out", required=True)
    p.add_argument("--patches-out", default=None)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("serve", help="start the interactive matting service")
    common(p)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--refiner", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is not None:
        np.random.seed(args.seed)
        try:
            import torch

            torch.manual_seed(args.seed)
        except ImportError:
            pass
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
