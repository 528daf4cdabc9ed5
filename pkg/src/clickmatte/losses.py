"""Training objectives: region regression, gradient, Laplace NLL, patch refinement.

All losses accept torch tensors (any shape broadcastable to H x W or batched)
and are differentiable; numpy arrays are converted on the way in.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from .domain import RegionLabel, RegionPartition

_GRAD_EPS = 1e-12


@dataclass
class LossReport:
    total: float
    components: dict[str, float] = field(default_factory=dict)
    pixel_counts: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"total": self.total, "components": self.components,
                "pixel_counts": self.pixel_counts}


def _as_tensor(x) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x
    return torch.as_tensor(np.array(x))


def _partition_masks(partition, shape) -> tuple[torch.Tensor, torch.Tensor]:
    if isinstance(partition, RegionPartition):
        labels = torch.from_numpy(np.array(partition.labels))
    else:
        labels = _as_tensor(partition)
    labels = labels.reshape(shape[-2:]) if labels.ndim == 2 else labels
    t_mask = labels == int(RegionLabel.TRANSITION)
    s_mask = ~t_mask
    return t_mask, s_mask


def reg_loss(alpha_p, alpha_g, partition) -> torch.Tensor:
    """L1 over the transition set plus L2 over solid foreground/background."""
    ap, ag = _as_tensor(alpha_p), _as_tensor(alpha_g)
    if ap.shape != ag.shape:
        raise ValueError("shape mismatch")
    t_mask, s_mask = _partition_masks(partition, ap.shape)
    diff = ap - ag
    total = diff.new_zeros(())
    if t_mask.any():
        total = total + diff.reshape(t_mask.shape)[t_mask].abs().mean()
    if s_mask.any():
        total = total + (diff.reshape(s_mask.shape)[s_mask] ** 2).mean()
    if not t_mask.any() and not s_mask.any():
        raise ValueError("partition is empty")
    return total


def gradient_magnitude(alpha: torch.Tensor) -> torch.Tensor:
    """Central differences with replicate borders; Euclidean norm of (dy, dx)."""
    a = alpha
    pad_r = torch.cat([a[..., :1, :], a, a[..., -1:, :]], dim=-2)
    pad_c = torch.cat([a[..., :, :1], a, a[..., :, -1:]], dim=-1)
    gy = (pad_r[..., 2:, :] - pad_r[..., :-2, :]) / 2.0
    gx = (pad_c[..., :, 2:] - pad_c[..., :, :-2]) / 2.0
    return torch.sqrt(gy**2 + gx**2 + _GRAD_EPS)


def grad_loss(alpha_p, alpha_g) -> torch.Tensor:
    """Mean absolute difference of gradient magnitudes over all pixels."""
    ap, ag = _as_tensor(alpha_p), _as_tensor(alpha_g)
    if ap.shape != ag.shape:
        raise ValueError("shape mismatch")
    return (gradient_magnitude(ap) - gradient_magnitude(ag)).abs().mean()


def laplace_nll(alpha_p, sigma_p, alpha_g) -> torch.Tensor:
    """Per-pixel mean of log(sigma) + |residual| / sigma.

    The additive log(2) constant of the Laplace density is dropped; it does
    not affect gradients but makes raw values comparable across runs only
    under this same convention.
    """
    ap, sp, ag = _as_tensor(alpha_p), _as_tensor(sigma_p), _as_tensor(alpha_g)
    if torch.any(sp <= 0):
        raise ValueError("sigma must be strictly positive")
    return (torch.log(sp) + (ag - ap).abs() / sp).mean()


def refine_loss(alpha_p_patch, alpha_g_patch, lam: float = 1.0) -> torch.Tensor:
    """Mean L1 over the patch plus lam x mean L1 over the top-20% error pixels.

    The hard set has ceil(0.2 * n) pixels; ties broken by raster order.
    """
    ap, ag = _as_tensor(alpha_p_patch), _as_tensor(alpha_g_patch)
    if ap.shape != ag.shape:
        raise ValueError("shape mismatch")
    err = (ap - ag).abs().reshape(-1)
    n = err.numel()
    if n == 0:
        raise ValueError("empty patch")
    n_hard = int(np.ceil(0.2 * n))
    order = torch.argsort(-err.detach(), stable=True)
    hard = err[order[:n_hard]]
    return err.mean() + lam * hard.mean()


def alpha_loss(alpha_p, alpha_g, partition, grad_weight: float = 1.0) -> LossReport:
    """Combined matting objective: region regression plus gradient term."""
    reg = reg_loss(alpha_p, alpha_g, partition)
    grad = grad_loss(alpha_p, alpha_g)
    total = reg + grad_weight * grad
    t_mask, s_mask = _partition_masks(partition, _as_tensor(alpha_p).shape)
    return LossReport(
        total=float(total),
        components={"reg": float(reg), "grad": float(grad), "grad_weight": grad_weight},
        pixel_counts={"transition": int(t_mask.sum()), "solid": int(s_mask.sum())},
    )


def alpha_loss_tensor(alpha_p, alpha_g, partition, grad_weight: float = 1.0) -> torch.Tensor:
    return reg_loss(alpha_p, alpha_g, partition) + grad_weight * grad_loss(alpha_p, alpha_g)
