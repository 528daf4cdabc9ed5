"""Matting metrics and sparsification analysis of the uncertainty map.

Grad and Conn follow the standard matting benchmark definitions
(Gaussian-derivative gradients with sigma = 1.4, q = 2; connectivity swept at
threshold step 0.1). Table-style scale factors are applied only when
formatting reports, never inside the computations.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

GRAD_SIGMA = 1.4
GRAD_Q = 2
CONN_STEP = 0.1
CONN_THETA = 0.15

# Table-convention display factors for (sad, mse, grad, conn)
REPORT_SCALES = {"sad": 1e2, "mse": 1e3, "grad": 1e5, "conn": 1e3}


@dataclass
class MetricReport:
    sad: float
    mse: float
    grad: float
    conn: float
    region_scope: str = "full"
    pixel_count: int = 0

    def scaled(self) -> dict[str, float]:
        vals = {"sad": self.sad, "mse": self.mse, "grad": self.grad, "conn": self.conn}
        return {k: v * REPORT_SCALES[k] for k, v in vals.items()}

    def to_json(self) -> dict:
        return {
            "sad": self.sad,
            "sad_per_kilopixel": self.sad / max(1, self.pixel_count) * 1000.0,
            "mse": self.mse,
            "grad": self.grad,
            "conn": self.conn,
            "scaled": self.scaled(),
            "region_scope": self.region_scope,
            "pixel_count": self.pixel_count,
        }


@dataclass
class SparsificationCurve:
    fractions: list[float]
    mse_remaining_predicted: list[float]
    mse_remaining_oracle: list[float]

    def to_rows(self) -> list[tuple[float, float, float]]:
        return list(zip(self.fractions, self.mse_remaining_predicted, self.mse_remaining_oracle))


def _prep(alpha_p, alpha_g, mask) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ap = np.asarray(alpha_p.data if hasattr(alpha_p, "data") else alpha_p, dtype=np.float64)
    ag = np.asarray(alpha_g.data if hasattr(alpha_g, "data") else alpha_g, dtype=np.float64)
    if ap.shape != ag.shape:
        raise ValueError("shape mismatch")
    m = np.ones(ap.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if not m.any():
        raise ValueError("empty region mask")
    return ap, ag, m


def sad(alpha_p, alpha_g, mask=None) -> float:
    ap, ag, m = _prep(alpha_p, alpha_g, mask)
    return float(np.abs(ap - ag)[m].sum())


def mse(alpha_p, alpha_g, mask=None) -> float:
    ap, ag, m = _prep(alpha_p, alpha_g, mask)
    return float(((ap - ag) ** 2)[m].mean())


def _gaussian_derivative_kernels(sigma: float) -> tuple[np.ndarray, np.ndarray]:
    eps = 1e-2
    half = int(np.ceil(sigma * np.sqrt(-2.0 * np.log(np.sqrt(2.0 * np.pi) * sigma * eps))))
    x = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(x**2) / (2 * sigma**2)) / (sigma * np.sqrt(2 * np.pi))
    dg = -x * g / sigma**2
    hx = g[:, None] * dg[None, :]
    hx = hx / np.sqrt(np.sum(hx * hx))
    return hx, hx.T


def gaussian_gradient_magnitude(alpha: np.ndarray, sigma: float = GRAD_SIGMA) -> np.ndarray:
    hx, hy = _gaussian_derivative_kernels(sigma)
    gx = ndimage.convolve(alpha, hx, mode="nearest")
    gy = ndimage.convolve(alpha, hy, mode="nearest")
    return np.sqrt(gx**2 + gy**2)


def grad_metric(alpha_p, alpha_g, mask=None) -> float:
    ap, ag, m = _prep(alpha_p, alpha_g, mask)
    amp_p = gaussian_gradient_magnitude(ap)
    amp_g = gaussian_gradient_magnitude(ag)
    return float((np.abs(amp_p - amp_g) ** GRAD_Q)[m].sum())


def _largest_common_component(pred_t: np.ndarray, gt_t: np.ndarray) -> np.ndarray:
    both = pred_t & gt_t
    if not both.any():
        return np.zeros_like(both)
    labels, n = ndimage.label(both, structure=np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]]))
    counts = np.bincount(labels.ravel())
    counts[0] = 0
    return labels == int(np.argmax(counts))


def conn_metric(alpha_p, alpha_g, mask=None, step: float = CONN_STEP) -> float:
    """Connectivity degradation per the standard matting benchmark."""
    ap, ag, m = _prep(alpha_p, alpha_g, mask)
    thresholds = np.arange(0.0, 1.0 + step, step)
    l_map = np.full(ap.shape, -1.0)
    for i in range(1, len(thresholds)):
        th = thresholds[i]
        omega = _largest_common_component(ap >= th, ag >= th)
        newly_cut = (l_map == -1.0) & ~omega
        l_map[newly_cut] = thresholds[i - 1]
    l_map[l_map == -1.0] = 1.0
    pred_d = ap - l_map
    gt_d = ag - l_map
    pred_phi = 1.0 - pred_d * (pred_d >= CONN_THETA)
    gt_phi = 1.0 - gt_d * (gt_d >= CONN_THETA)
    return float(np.abs(pred_phi - gt_phi)[m].sum())


def metric_report(alpha_p, alpha_g, mask=None, region_scope: str = "full") -> MetricReport:
    ap, ag, m = _prep(alpha_p, alpha_g, mask)
    return MetricReport(
        sad=sad(ap, ag, m),
        mse=mse(ap, ag, m),
        grad=grad_metric(ap, ag, m),
        conn=conn_metric(ap, ag, m),
        region_scope=region_scope,
        pixel_count=int(m.sum()),
    )


def _remaining_mse(sq_err: np.ndarray, order: np.ndarray, fraction: float) -> float:
    n = sq_err.size
    n_remove = int(np.floor(fraction * n + 1e-9))
    if n_remove >= n:
        raise ValueError("fraction leaves no pixels")
    kept = order[n_remove:]
    return float(sq_err[kept].mean())


def sparsification(alpha_p, alpha_g, sigma_p, fractions) -> SparsificationCurve:
    """Remaining-MSE curves under predicted-uncertainty and oracle rankings.

    Pixels are removed in descending rank order (sigma for the predicted
    curve, true squared error for the oracle); ties broken by raster order.
    """
    ap = np.asarray(alpha_p.data if hasattr(alpha_p, "data") else alpha_p, dtype=np.float64)
    ag = np.asarray(alpha_g.data if hasattr(alpha_g, "data") else alpha_g, dtype=np.float64)
    sp = np.asarray(sigma_p.data if hasattr(sigma_p, "data") else sigma_p, dtype=np.float64)
    if ap.shape != ag.shape or ap.shape != sp.shape:
        raise ValueError("shape mismatch")
    fractions = list(fractions)
    if not fractions or fractions[0] != 0.0 or sorted(fractions) != fractions:
        raise ValueError("fractions must be sorted ascending and start at 0")
    sq_err = ((ap - ag) ** 2).ravel()
    pred_order = np.argsort(-sp.ravel(), kind="stable")
    oracle_order = np.argsort(-sq_err, kind="stable")
    predicted = [_remaining_mse(sq_err, pred_order, f) for f in fractions]
    oracle = [_remaining_mse(sq_err, oracle_order, f) for f in fractions]
    return SparsificationCurve(fractions, predicted, oracle)


# --- report emitters ------------------------------------------------------------


def write_metric_csv(path: str | Path, reports: dict[str, MetricReport]) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "scope", "sad", "mse", "grad", "conn", "pixels"])
        for name, r in reports.items():
            writer.writerow([name, r.region_scope, r.sad, r.mse, r.grad, r.conn, r.pixel_count])


def write_metric_json(path: str | Path, reports: dict[str, MetricReport]) -> None:
    Path(path).write_text(json.dumps({k: v.to_json() for k, v in reports.items()}, indent=2))


def write_sparsification_csv(path: str | Path, curve: SparsificationCurve) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fraction", "mse_remaining_predicted", "mse_remaining_oracle"])
        for row in curve.to_rows():
            writer.writerow(list(row))
