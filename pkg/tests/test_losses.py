import numpy as np
import pytest
import torch

from clickmatte.losses import (alpha_loss, grad_loss, gradient_magnitude, laplace_nll,
                               refine_loss, reg_loss)
from tests.oracles import finite_difference_grad


def _partition_labels(rng, shape):
    return rng.integers(0, 3, size=shape).astype(np.uint8)


def _check_grad(fn, x, rtol=1e-4):
    xt = torch.from_numpy(x).clone().requires_grad_(True)
    fn(xt).backward()
    analytic = xt.grad.numpy()
    numeric = finite_difference_grad(lambda a: float(fn(torch.from_numpy(a))), x)
    denom = max(np.abs(numeric).max(), 1e-8)
    assert np.abs(analytic - numeric).max() / denom < rtol


def test_reg_loss_gradcheck():
    rng = np.random.default_rng(0)
    ag = rng.random((8, 8))
    part = torch.from_numpy(_partition_labels(rng, (8, 8)))
    ap = rng.random((8, 8))
    _check_grad(lambda a: reg_loss(a, torch.from_numpy(ag), part), ap)


def test_grad_loss_gradcheck():
    rng = np.random.default_rng(1)
    ag = rng.random((8, 8))
    ap = rng.random((8, 8))
    _check_grad(lambda a: grad_loss(a, torch.from_numpy(ag)), ap)


def test_laplace_nll_gradcheck_in_alpha_and_sigma():
    rng = np.random.default_rng(2)
    ag = torch.from_numpy(rng.random((8, 8)))
    ap = rng.random((8, 8))
    sp = rng.random((8, 8)) * 0.5 + 0.2
    _check_grad(lambda a: laplace_nll(a, torch.from_numpy(sp), ag), ap)
    _check_grad(lambda s: laplace_nll(torch.from_numpy(ap), s, ag), sp)


def test_refine_loss_gradcheck():
    rng = np.random.default_rng(3)
    ag = rng.random((8, 8))
    # keep errors well-separated so the top-20% set is stable under the
    # finite-difference perturbation
    ap = ag + rng.permutation(np.linspace(0.05, 0.9, 64)).reshape(8, 8)
    _check_grad(lambda a: refine_loss(a, torch.from_numpy(ag)), ap)


def test_laplace_minimizer_is_absolute_residual():
    sigmas = np.linspace(1e-4, 1.0, 20000)
    for rho in (0.01, 0.1, 0.5):
        vals = np.log(sigmas) + rho / sigmas
        assert abs(sigmas[np.argmin(vals)] - rho) < 1e-3


def test_laplace_nll_rejects_nonpositive_sigma():
    ones = torch.ones(4, 4)
    with pytest.raises(ValueError, match="positive"):
        laplace_nll(ones, torch.zeros(4, 4), ones)


def test_reg_loss_on_known_values():
    ap = torch.tensor([[0.5, 0.0], [1.0, 1.0]])
    ag = torch.tensor([[1.0, 0.0], [0.0, 1.0]])
    labels = torch.tensor([[2, 2], [0, 1]])  # transition top row, solid bottom
    # L1 over T: mean(|0.5-1|, |0-0|) = 0.25; L2 over S: mean(1, 0) = 0.5
    assert float(reg_loss(ap, ag, labels)) == pytest.approx(0.75)


def test_reg_loss_all_transition_matches_l1():
    rng = np.random.default_rng(4)
    ap, ag = rng.random((6, 6)), rng.random((6, 6))
    labels = torch.full((6, 6), 2)
    assert float(reg_loss(torch.from_numpy(ap), torch.from_numpy(ag), labels)) == \
        pytest.approx(np.abs(ap - ag).mean())


def test_gradient_magnitude_of_linear_ramp():
    ramp = torch.arange(64, dtype=torch.float64).reshape(8, 8) % 8
    g = gradient_magnitude(ramp)
    # interior of a unit-slope horizontal ramp has |grad| = 1
    assert torch.allclose(g[:, 1:-1], torch.ones(8, 6, dtype=torch.float64), atol=1e-5)


def test_grad_loss_zero_for_identical_inputs():
    rng = np.random.default_rng(5)
    a = torch.from_numpy(rng.random((8, 8)))
    assert float(grad_loss(a, a)) == 0.0


def test_refine_loss_hard_set_size_and_value():
    # 4 pixels -> n_hard = ceil(0.8) = 1: loss = mean + lam * max
    ap = torch.tensor([[0.0, 0.0], [0.0, 0.0]])
    ag = torch.tensor([[0.4, 0.1], [0.2, 0.1]])
    expected = 0.2 + 1.0 * 0.4
    assert float(refine_loss(ap, ag)) == pytest.approx(expected)


def test_refine_loss_nondecreasing_in_lambda():
    rng = np.random.default_rng(6)
    ap = torch.from_numpy(rng.random((8, 8)))
    ag = torch.from_numpy(rng.random((8, 8)))
    vals = [float(refine_loss(ap, ag, lam)) for lam in (0.0, 0.5, 1.0, 2.0)]
    assert vals == sorted(vals)


def test_alpha_loss_report_components():
    rng = np.random.default_rng(7)
    ap, ag = rng.random((8, 8)), rng.random((8, 8))
    labels = _partition_labels(rng, (8, 8))
    report = alpha_loss(ap, ag, torch.from_numpy(labels), grad_weight=2.0)
    assert report.total == pytest.approx(
        report.components["reg"] + 2.0 * report.components["grad"])
    assert report.pixel_counts["transition"] + report.pixel_counts["solid"] == 64
    assert set(report.to_json()) == {"total", "components", "pixel_counts"}
