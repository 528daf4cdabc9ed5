"""Staged training: matting net, frozen-encoder uncertainty decoder, patch refiner."""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from . import io as cmio
from .compositor import (AugmentConfig, MattingSample, apply_augment, load_manifest,
                         make_partition, sample_augment_params)
from .domain import AlphaMatte, ClickSet, HintMap, Image, RegionLabel
from .interaction import ClickSamplerConfig, render_hint_map, sample_clicks
from .losses import alpha_loss_tensor, laplace_nll, refine_loss
from .models import (InteractiveMattingNet, MattingModelConfig, RefinementNet, RefinerConfig,
                     load_checkpoint, save_checkpoint)
from .refinement import mine_training_patches


@dataclass(frozen=True)
class TrainConfig:
    base_lr: float = 5e-4
    betas: tuple[float, float] = (0.5, 0.999)
    epochs_matting: int = 20      # full scale: 150
    epochs_uncertainty: int = 10  # full scale: 75
    epochs_refine: int = 10       # full scale: 75
    batch_size: int = 8
    crop_size: int = 128
    seed: int = 0
    desk_scale: bool = True
    base_width: int = 16
    grad_weight: float = 1.0
    lambda_refine: float = 1.0
    patches_per_image: int = 8
    patch_size: int = 64
    refiner_width: int = 24
    augment: bool = True
    click_radius: int = 15
    click_p: float = 1.0 / 6.0

    def __post_init__(self):
        if min(self.epochs_matting, self.epochs_uncertainty, self.epochs_refine) < 1:
            raise ValueError("epochs must be positive")
        if self.base_lr < 0:
            raise ValueError("lr must be non-negative")


def cosine_lr(step: int, total_steps: int, base_lr: float) -> float:
    if total_steps <= 1:
        return base_lr
    return base_lr * 0.5 * (1.0 + math.cos(math.pi * step / (total_steps - 1)))


def parameter_hash(module: torch.nn.Module) -> str:
    h = hashlib.sha256()
    for name, p in sorted(module.state_dict().items()):
        h.update(name.encode())
        h.update(p.detach().cpu().numpy().tobytes())
    return h.hexdigest()


class DeskDataset:
    """In-memory dataset loaded from a compositor manifest."""

    def __init__(self, manifest_path: str | Path, dilate_r: int = 3, erode_r: int = 3):
        self.root = Path(manifest_path).parent
        self.records = load_manifest(manifest_path)
        if not self.records:
            raise ValueError("dataset is empty")
        self.samples: list[MattingSample] = []
        for rec in self.records:
            image = cmio.load_image_png(self.root / rec["composite"])
            alpha = cmio.load_matte_png(self.root / rec["alpha"])
            fg = cmio.load_image_png(self.root / rec["fg"])
            bg = cmio.load_image_png(self.root / rec["bg"])
            partition = make_partition(alpha, dilate_r, erode_r)
            self.samples.append(MattingSample(image, alpha, partition, fg, bg))

    def __len__(self) -> int:
        return len(self.samples)


def _sample_to_tensors(sample: MattingSample, clicks: ClickSet):
    h, w = sample.alpha_gt.shape
    hints = render_hint_map(clicks, h, w)
    rgb = torch.from_numpy(np.array(sample.image.data)).permute(2, 0, 1)
    hint = torch.from_numpy(np.array(hints.data))[None]
    x = torch.cat([rgb, hint], dim=0)
    alpha = torch.from_numpy(np.array(sample.alpha_gt.data))
    labels = torch.from_numpy(np.array(sample.partition.labels))
    return x, alpha, labels


def _make_batch(dataset: DeskDataset, config: TrainConfig, batch_seed: int):
    """Deterministic batch: sample indices, augment, re-draw simulated clicks."""
    rng = np.random.default_rng(batch_seed)
    idx = rng.integers(len(dataset), size=config.batch_size)
    aug_cfg = AugmentConfig(crop_size=None)
    xs, alphas, labels = [], [], []
    for i in idx:
        sample = dataset.samples[int(i)]
        if config.augment:
            h, w = sample.alpha_gt.shape
            params = sample_augment_params(h, w, aug_cfg, rng)
            sample = apply_augment(sample, params)
        clicks = sample_clicks(
            sample.alpha_gt,
            ClickSamplerConfig(p=config.click_p, radius=config.click_radius,
                               seed=int(rng.integers(2**31))),
        )
        x, a, l = _sample_to_tensors(sample, clicks)
        xs.append(x)
        alphas.append(a)
        labels.append(l)
    return torch.stack(xs), torch.stack(alphas), torch.stack(labels)


class JsonlLogger:
    def __init__(self, path: str | Path | None):
        self.path = Path(path) if path else None
        if self.path:
            self.path.write_text("")

    def log(self, record: dict) -> None:
        if self.path:
            with self.path.open("a") as fh:
                fh.write(json.dumps(record) + "\n")


def train_matting(dataset: DeskDataset, config: TrainConfig, out_dir: str | Path,
                  max_steps: int | None = None, stop_mae: float | None = None,
                  model_config: MattingModelConfig | None = None) -> tuple[Path, Path]:
    """Stage 1: train the matting network alone with simulated clicks.

    Returns (checkpoint path, log path). Clicks are re-drawn every step.
    Raises on non-finite loss with the offending step index.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(config.seed)
    mcfg = model_config or MattingModelConfig(base_width=config.base_width)
    model = InteractiveMattingNet(mcfg)
    model.train()
    opt = torch.optim.Adam(model.parameters(), lr=config.base_lr, betas=config.betas)
    steps_per_epoch = max(1, len(dataset) // config.batch_size)
    total_steps = config.epochs_matting * steps_per_epoch
    if max_steps is not None:
        total_steps = min(total_steps, max_steps)
    log = JsonlLogger(out_dir / "matting_log.jsonl")

    for step in range(total_steps):
        lr = cosine_lr(step, total_steps, config.base_lr)
        for g in opt.param_groups:
            g["lr"] = lr
        batch_seed = config.seed * 1_000_003 + step
        x, alpha_g, labels = _make_batch(dataset, config, batch_seed)
        opt.zero_grad()
        alpha_p, _ = model(x, with_sigma=False)
        loss = alpha_loss_tensor(alpha_p[:, 0], alpha_g, labels, config.grad_weight)
        if not torch.isfinite(loss):
            raise RuntimeError(f"training diverged at step {step}")
        loss.backward()
        opt.step()
        mae = float((alpha_p[:, 0] - alpha_g).abs().mean().detach())
        log.log({"step": step, "lr": lr, "total": float(loss.detach()), "mae": mae,
                 "batch_seed": batch_seed})
        if stop_mae is not None and mae < stop_mae:
            break

    ckpt = out_dir / "matting.pt"
    model.eval()
    save_checkpoint(ckpt, model, mcfg, extra={"stage": "matting", "train_config_seed": config.seed})
    return ckpt, out_dir / "matting_log.jsonl"


def train_uncertainty(dataset: DeskDataset, matting_ckpt: str | Path, config: TrainConfig,
                      out_dir: str | Path) -> tuple[Path, Path]:
    """Stage 2: freeze the matting network, train the uncertainty decoder (NLL)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(config.seed + 1)
    payload = load_checkpoint(matting_ckpt)
    cfg = payload["config"]
    mcfg = MattingModelConfig(
        base_width=cfg["base_width"],
        stage_blocks_encoder=tuple(cfg["stage_blocks_encoder"]),
        stage_blocks_decoder=tuple(cfg["stage_blocks_decoder"]),
        input_channels=cfg["input_channels"],
        sigma_floor=cfg["sigma_floor"],
    )
    model = InteractiveMattingNet(mcfg, with_uncertainty=True)
    missing = model.load_state_dict(payload["state"], strict=False)
    if any(not k.startswith("uncertainty_decoder") for k in missing.missing_keys):
        raise ValueError("matting checkpoint does not match the model")
    for name, p in model.named_parameters():
        p.requires_grad = name.startswith("uncertainty_decoder")
    model.eval()  # frozen BN stats everywhere
    model.uncertainty_decoder.train()
    opt = torch.optim.Adam(model.uncertainty_decoder.parameters(),
                           lr=config.base_lr, betas=config.betas)
    steps_per_epoch = max(1, len(dataset) // config.batch_size)
    total_steps = config.epochs_uncertainty * steps_per_epoch
    log = JsonlLogger(out_dir / "uncertainty_log.jsonl")

    for step in range(total_steps):
        lr = cosine_lr(step, total_steps, config.base_lr)
        for g in opt.param_groups:
            g["lr"] = lr
        batch_seed = (config.seed + 1) * 1_000_003 + step
        x, alpha_g, _ = _make_batch(dataset, config, batch_seed)
        with torch.no_grad():
            xp, h, w = model._pad(x)
            feat, skips = model.encoder(xp)
            alpha_p = torch.clamp(model.alpha_decoder(feat, skips), 0.0, 1.0)[..., :h, :w]
        raw = model.uncertainty_decoder(feat, skips)[..., :h, :w]
        sigma = torch.nn.functional.softplus(raw) + mcfg.sigma_floor
        opt.zero_grad()
        loss = laplace_nll(alpha_p[:, 0], sigma[:, 0], alpha_g)
        if not torch.isfinite(loss):
            raise RuntimeError(f"training diverged at step {step}")
        loss.backward()
        opt.step()
        log.log({"step": step, "lr": lr, "total": float(loss.detach()), "batch_seed": batch_seed})

    ckpt = out_dir / "uncertainty.pt"
    model.eval()
    save_checkpoint(ckpt, model, mcfg, extra={"stage": "uncertainty"})
    return ckpt, out_dir / "uncertainty_log.jsonl"


def _predict_dataset(model: InteractiveMattingNet, dataset: DeskDataset,
                     config: TrainConfig, seed: int) -> list[AlphaMatte]:
    """Matting predictions for mining, with one fixed simulated click draw each."""
    from .models import matting_forward

    preds = []
    rng = np.random.default_rng(seed)
    for sample in dataset.samples:
        clicks = sample_clicks(
            sample.alpha_gt,
            ClickSamplerConfig(p=config.click_p, radius=config.click_radius,
                               seed=int(rng.integers(2**31))),
        )
        h, w = sample.alpha_gt.shape
        hints = render_hint_map(clicks, h, w)
        preds.append(matting_forward(model, sample.image, hints))
    return preds


def train_refinement(dataset: DeskDataset, matting_ckpt: str | Path, config: TrainConfig,
                     out_dir: str | Path) -> tuple[Path, Path]:
    """Stage 3: mine the hardest patches from matting predictions, train the refiner."""
    from .models import load_matting_model

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(config.seed + 2)
    matting = load_matting_model(matting_ckpt)
    matting_hash = parameter_hash(matting)
    preds = _predict_dataset(matting, dataset, config, seed=config.seed + 17)

    rcfg = RefinerConfig(width=config.refiner_width, patch_size=config.patch_size)
    refiner = RefinementNet(rcfg)
    log = JsonlLogger(out_dir / "refine_log.jsonl")
    ckpt = out_dir / "refiner.pt"

    k = config.patch_size
    total_err = sum(float(np.abs(p.data - s.alpha_gt.data).sum())
                    for p, s in zip(preds, dataset.samples))
    if total_err == 0.0:
        warnings.warn("no minable patches (zero prediction error); returning identity refiner")
        save_checkpoint(ckpt, refiner, rcfg, extra={"stage": "refine", "identity": True})
        return ckpt, out_dir / "refine_log.jsonl"

    opt = torch.optim.Adam(refiner.parameters(), lr=config.base_lr, betas=config.betas)
    epoch_patches = []
    for pred, sample in zip(preds, dataset.samples):
        if min(sample.alpha_gt.shape) < k:
            continue
        for spec in mine_training_patches(pred, sample.alpha_gt, k, config.patches_per_image):
            epoch_patches.append((pred, sample, spec))
    steps_per_epoch = max(1, len(epoch_patches) // config.batch_size)
    total_steps = config.epochs_refine * steps_per_epoch
    rng = np.random.default_rng(config.seed + 3)
    refiner.train()
    step = 0
    for epoch in range(config.epochs_refine):
        # patches are mined once per epoch; predictions are fixed, so re-mining
        # yields the same specs and we reuse the list
        order = rng.permutation(len(epoch_patches))
        for start in range(0, len(order) - config.batch_size + 1, config.batch_size):
            lr = cosine_lr(step, total_steps, config.base_lr)
            for g in opt.param_groups:
                g["lr"] = lr
            imgs, alphas, gts = [], [], []
            for j in order[start : start + config.batch_size]:
                pred, sample, spec = epoch_patches[int(j)]
                sl = np.s_[spec.top : spec.top + k, spec.left : spec.left + k]
                imgs.append(torch.from_numpy(sample.image.data[sl].copy()).permute(2, 0, 1))
                alphas.append(torch.from_numpy(pred.data[sl].copy())[None])
                gts.append(torch.from_numpy(sample.alpha_gt.data[sl].copy())[None])
            img_b, alpha_b, gt_b = torch.stack(imgs), torch.stack(alphas), torch.stack(gts)
            opt.zero_grad()
            refined = refiner(img_b, alpha_b)
            loss = sum(refine_loss(refined[i, 0], gt_b[i, 0], config.lambda_refine)
                       for i in range(refined.shape[0])) / refined.shape[0]
            if not torch.isfinite(loss):
                raise RuntimeError(f"training diverged at step {step}")
            loss.backward()
            opt.step()
            log.log({"step": step, "epoch": epoch, "lr": lr, "total": float(loss.detach())})
            step += 1

    if parameter_hash(matting) != matting_hash:
        raise RuntimeError("matting parameters changed during refinement training")
    refiner.eval()
    save_checkpoint(ckpt, refiner, rcfg, extra={"stage": "refine"})
    return ckpt, out_dir / "refine_log.jsonl"
