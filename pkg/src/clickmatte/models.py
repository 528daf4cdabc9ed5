"""Network architectures: interactive matting U-Net, uncertainty decoder, refiner.

The matting network takes RGB plus the one-channel hint map. Its encoder is a
stride-1 conv, two stride-2 convs, then 13 residual blocks in four stages
(3, 4, 4, 2) downsampling by 2 in the last three stages (total factor 32).
Each decoder has 10 residual blocks in four stages with skip connections,
followed by one stride-1/2 conv and one stride-1 output conv. The uncertainty
decoder mirrors the alpha decoder on the shared encoder and emits a Laplace
scale through softplus plus a small floor.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .domain import SIGMA_FLOOR, AlphaMatte, HintMap, Image, UncertaintyMap


@dataclass(frozen=True)
class MattingModelConfig:
    base_width: int = 16
    stage_blocks_encoder: tuple[int, int, int, int] = (3, 4, 4, 2)
    stage_blocks_decoder: tuple[int, int, int, int] = (2, 3, 3, 2)
    input_channels: int = 4
    sigma_floor: float = SIGMA_FLOOR

    def __post_init__(self):
        if sum(self.stage_blocks_encoder) != 13:
            raise ValueError("encoder block counts must sum to 13")
        if sum(self.stage_blocks_decoder) != 10:
            raise ValueError("decoder block counts must sum to 10")


@dataclass(frozen=True)
class RefinerConfig:
    width: int = 24
    n_blocks: int = 4
    patch_size: int = 64


@dataclass
class ModelOutput:
    alpha_p: AlphaMatte
    sigma_p: UncertaintyMap | None = None


def _conv_bn_relu(cin: int, cout: int, stride: int = 1) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(cin, cout, 3, stride=stride, padding=1, bias=False),
        nn.BatchNorm2d(cout),
        nn.ReLU(inplace=True),
    )


class ResBlock(nn.Module):
    def __init__(self, cin: int, cout: int, stride: int = 1, norm: bool = True):
        super().__init__()
        def bn(c):
            return nn.BatchNorm2d(c) if norm else nn.Identity()
        self.conv1 = nn.Conv2d(cin, cout, 3, stride=stride, padding=1, bias=not norm)
        self.bn1 = bn(cout)
        self.conv2 = nn.Conv2d(cout, cout, 3, padding=1, bias=not norm)
        self.bn2 = bn(cout)
        if stride != 1 or cin != cout:
            self.shortcut = nn.Sequential(nn.Conv2d(cin, cout, 1, stride=stride, bias=not norm), bn(cout))
        else:
            self.shortcut = nn.Identity()

    def forward(self, x):
        out = F.relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        return F.relu(out + self.shortcut(x))


class MattingEncoder(nn.Module):
    def __init__(self, config: MattingModelConfig):
        super().__init__()
        w = config.base_width
        self.widths = (2 * w, 2 * w, 4 * w, 8 * w, 8 * w)
        self.stem1 = _conv_bn_relu(config.input_channels, w, stride=1)
        self.stem2 = _conv_bn_relu(w, 2 * w, stride=2)
        self.stem3 = _conv_bn_relu(2 * w, 2 * w, stride=2)
        blocks = config.stage_blocks_encoder
        chans = self.widths[1:]
        stages = []
        cin = 2 * w
        for i, (n, cout) in enumerate(zip(blocks, chans)):
            layers = []
            for j in range(n):
                stride = 2 if (i > 0 and j == 0) else 1
                layers.append(ResBlock(cin, cout, stride=stride))
                cin = cout
            stages.append(nn.Sequential(*layers))
        self.stages = nn.ModuleList(stages)

    def forward(self, x):
        skips = []
        x = self.stem1(x)
        x = self.stem2(x)
        skips.append(x)  # 2w @ /2
        x = self.stem3(x)
        for i, stage in enumerate(self.stages):
            x = stage(x)
            if i < len(self.stages) - 1:
                skips.append(x)  # stage outputs at /4, /8, /16
        return x, skips


class Decoder(nn.Module):
    """Four upsampling stages of residual blocks, skip-fused, then the tail."""

    def __init__(self, config: MattingModelConfig, skip_widths: list[int]):
        super().__init__()
        w = config.base_width
        in_w = 8 * w
        stage_out = (8 * w, 4 * w, 2 * w, 2 * w)
        # skips are fused before each stage's blocks, at the incoming width
        stage_in = (in_w,) + stage_out[:-1]
        self.skip_proj = nn.ModuleList(
            nn.Conv2d(sw, ow, 1, bias=False) for sw, ow in zip(skip_widths, stage_in)
        )
        stages = []
        cin = in_w
        for n, cout in zip(config.stage_blocks_decoder, stage_out):
            layers = [ResBlock(cin, cout)]
            layers += [ResBlock(cout, cout) for _ in range(n - 1)]
            stages.append(nn.Sequential(*layers))
            cin = cout
        self.stages = nn.ModuleList(stages)
        self.up_conv = nn.ConvTranspose2d(2 * w, w, 4, stride=2, padding=1, bias=False)
        self.up_bn = nn.BatchNorm2d(w)
        self.out_conv = nn.Conv2d(w, 1, 3, padding=1)

    def forward(self, x, skips):
        for stage, proj, skip in zip(self.stages, self.skip_proj, reversed(skips)):
            x = F.interpolate(x, scale_factor=2, mode="nearest")
            x = x + proj(skip)
            x = stage(x)
        x = F.relu(self.up_bn(self.up_conv(x)))
        return self.out_conv(x)


class InteractiveMattingNet(nn.Module):
    """Shared encoder with an alpha decoder and an optional uncertainty decoder."""

    def __init__(self, config: MattingModelConfig = MattingModelConfig(), with_uncertainty: bool = False):
        super().__init__()
        self.config = config
        self.encoder = MattingEncoder(config)
        skip_widths = [self.encoder.widths[3], self.encoder.widths[2],
                       self.encoder.widths[1], self.encoder.widths[0]]
        self.alpha_decoder = Decoder(config, skip_widths)
        self.uncertainty_decoder = Decoder(config, skip_widths) if with_uncertainty else None

    @property
    def has_uncertainty_head(self) -> bool:
        return self.uncertainty_decoder is not None

    def attach_uncertainty_head(self) -> None:
        if self.uncertainty_decoder is None:
            skip_widths = [self.encoder.widths[3], self.encoder.widths[2],
                           self.encoder.widths[1], self.encoder.widths[0]]
            self.uncertainty_decoder = Decoder(self.config, skip_widths)

    def _pad(self, x: torch.Tensor) -> tuple[torch.Tensor, int, int]:
        h, w = x.shape[-2:]
        ph = (32 - h % 32) % 32
        pw = (32 - w % 32) % 32
        if ph or pw:
            x = F.pad(x, (0, pw, 0, ph), mode="reflect")
        return x, h, w

    def forward(self, x: torch.Tensor, with_sigma: bool | None = None):
        if x.shape[1] != self.config.input_channels:
            raise ValueError(f"expected {self.config.input_channels}-channel input, got {x.shape[1]}")
        want_sigma = self.has_uncertainty_head if with_sigma is None else with_sigma
        if want_sigma and not self.has_uncertainty_head:
            raise RuntimeError("uncertainty head not attached")
        x, h, w = self._pad(x)
        feat, skips = self.encoder(x)
        alpha = torch.clamp(self.alpha_decoder(feat, skips), 0.0, 1.0)[..., :h, :w]
        if not want_sigma:
            return alpha, None
        raw = self.uncertainty_decoder(feat, skips)[..., :h, :w]
        sigma = F.softplus(raw) + self.config.sigma_floor
        return alpha, sigma


class RefinementNet(nn.Module):
    """Fully convolutional patch refiner, no spatial resampling anywhere.

    The output conv is zero-initialized and added to the input alpha, so an
    untrained refiner is exactly the identity on the alpha patch.
    """

    def __init__(self, config: RefinerConfig = RefinerConfig()):
        super().__init__()
        self.config = config
        c = config.width
        self.head = _conv_bn_relu(4, c)
        self.blocks = nn.Sequential(*[ResBlock(c, c) for _ in range(config.n_blocks)])
        self.tail = nn.Conv2d(c, 1, 3, padding=1)
        nn.init.zeros_(self.tail.weight)
        nn.init.zeros_(self.tail.bias)

    def forward(self, image_patch: torch.Tensor, alpha_patch: torch.Tensor) -> torch.Tensor:
        x = torch.cat([image_patch, alpha_patch], dim=1)
        delta = self.tail(self.blocks(self.head(x)))
        return torch.clamp(alpha_patch + delta, 0.0, 1.0)


# --- domain-typed wrappers ----------------------------------------------------


def _to_input(image: Image, hints: HintMap) -> torch.Tensor:
    if image.shape != hints.shape:
        raise ValueError(f"shape mismatch: image {image.shape}, hints {hints.shape}")
    rgb = torch.from_numpy(np.array(image.data)).permute(2, 0, 1)
    hint = torch.from_numpy(np.array(hints.data))[None]
    return torch.cat([rgb, hint], dim=0)[None]


def matting_forward(model: InteractiveMattingNet, image: Image, hints: HintMap) -> AlphaMatte:
    model.eval()
    with torch.no_grad():
        alpha, _ = model(_to_input(image, hints), with_sigma=False)
    return AlphaMatte(alpha[0, 0].numpy())


def uncertainty_forward(model: InteractiveMattingNet, image: Image, hints: HintMap) -> ModelOutput:
    if not model.has_uncertainty_head:
        raise RuntimeError("uncertainty head not attached")
    model.eval()
    with torch.no_grad():
        alpha, sigma = model(_to_input(image, hints), with_sigma=True)
    return ModelOutput(AlphaMatte(alpha[0, 0].numpy()), UncertaintyMap(sigma[0, 0].numpy()))


def refinement_forward(model: RefinementNet, image_patch: Image, alpha_patch: AlphaMatte) -> AlphaMatte:
    k = model.config.patch_size
    if image_patch.shape != (k, k) or alpha_patch.shape != (k, k):
        raise ValueError(f"expected {k}x{k} patches, got {image_patch.shape} and {alpha_patch.shape}")
    model.eval()
    with torch.no_grad():
        img = torch.from_numpy(np.array(image_patch.data)).permute(2, 0, 1)[None]
        alpha = torch.from_numpy(np.array(alpha_patch.data))[None, None]
        out = model(img, alpha)
    return AlphaMatte(out[0, 0].numpy())


# --- flop accounting ----------------------------------------------------------


def count_conv_flops(model: nn.Module, *inputs: torch.Tensor) -> int:
    """Multiply-accumulate count (x2) over all conv layers for one forward pass."""
    flops = 0

    def hook(module, inp, out):
        nonlocal flops
        if isinstance(module, nn.Conv2d):
            oh, ow = out.shape[-2:]
            flops += 2 * oh * ow * module.out_channels * module.in_channels \
                * module.kernel_size[0] * module.kernel_size[1] // module.groups
        elif isinstance(module, nn.ConvTranspose2d):
            ih, iw = inp[0].shape[-2:]
            flops += 2 * ih * iw * module.out_channels * module.in_channels \
                * module.kernel_size[0] * module.kernel_size[1] // module.groups

    handles = [m.register_forward_hook(hook) for m in model.modules()
               if isinstance(m, (nn.Conv2d, nn.ConvTranspose2d))]
    model.eval()
    with torch.no_grad():
        model(*inputs)
    for h in handles:
        h.remove()
    return flops


def parameter_count(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())


# --- checkpoints ---------------------------------------------------------------

CHECKPOINT_FORMAT_VERSION = 1


def save_checkpoint(path: str | Path, model: nn.Module, config, extra: dict | None = None) -> None:
    payload = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "config": asdict(config) if not isinstance(config, dict) else config,
        "state": model.state_dict(),
        "extra": extra or {},
    }
    torch.save(payload, path)


def load_checkpoint(path: str | Path) -> dict:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    if payload.get("format_version", 0) > CHECKPOINT_FORMAT_VERSION:
        raise ValueError("checkpoint from a newer format version")
    return payload


def load_matting_model(path: str | Path) -> InteractiveMattingNet:
    payload = load_checkpoint(path)
    cfg = payload["config"]
    cfg = MattingModelConfig(
        base_width=cfg["base_width"],
        stage_blocks_encoder=tuple(cfg["stage_blocks_encoder"]),
        stage_blocks_decoder=tuple(cfg["stage_blocks_decoder"]),
        input_channels=cfg["input_channels"],
        sigma_floor=cfg["sigma_floor"],
    )
    has_sigma = any(k.startswith("uncertainty_decoder") for k in payload["state"])
    model = InteractiveMattingNet(cfg, with_uncertainty=has_sigma)
    # by-name loading: tolerate missing/extra keys for cross-version checkpoints
    model.load_state_dict(payload["state"], strict=False)
    model.eval()
    return model


def load_refiner(path: str | Path) -> RefinementNet:
    payload = load_checkpoint(path)
    cfg = payload["config"]
    model = RefinementNet(RefinerConfig(width=cfg["width"], n_blocks=cfg["n_blocks"],
                                        patch_size=cfg["patch_size"]))
    model.load_state_dict(payload["state"], strict=False)
    model.eval()
    return model
