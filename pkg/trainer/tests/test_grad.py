"""Analytic gradients vs central finite differences on a tiny configuration."""

import torch
import torch.nn.functional as F

from afmrecon import ModelConfig, ReconNet

STEP = 1e-5
REL_TOL = 1e-3
N_SAMPLED = 10


def build_problem():
    """A small double-precision net in eval mode with jittered parameters.

    Jitter matters: the refiner head starts at zero, which makes every
    gradient through the refiner body exactly zero and turns the relative
    error into 0/0. Eval mode freezes batch-norm statistics so the loss is
    a smooth function of the parameters alone.
    """
    torch.manual_seed(42)
    config = ModelConfig(image_size=32, width=0.0625, seed=42)
    net = ReconNet(config).double().eval()
    with torch.no_grad():
        for param in net.parameters():
            param.add_(0.05 * torch.randn_like(param))
    images = torch.rand(2, 32, 32, 3, dtype=torch.float64)
    truth = (torch.rand(32, 32, 32) < 0.2).double()
    return net, images, truth


def loss_of(net, images, truth) -> torch.Tensor:
    return F.binary_cross_entropy(net(images), truth)


def test_gradients_match_finite_differences():
    net, images, truth = build_problem()

    loss = loss_of(net, images, truth)
    loss.backward()

    params = [p for p in net.parameters() if p.grad is not None]
    rng = torch.Generator().manual_seed(7)
    picks = []
    for _ in range(N_SAMPLED):
        p = params[int(torch.randint(len(params), (1,), generator=rng))]
        flat = int(torch.randint(p.numel(), (1,), generator=rng))
        picks.append((p, flat))

    for p, flat in picks:
        analytic = p.grad.reshape(-1)[flat].item()
        with torch.no_grad():
            original = p.reshape(-1)[flat].item()
            p.reshape(-1)[flat] = original + STEP
            plus = loss_of(net, images, truth).item()
            p.reshape(-1)[flat] = original - STEP
            minus = loss_of(net, images, truth).item()
            p.reshape(-1)[flat] = original
        numeric = (plus - minus) / (2 * STEP)
        scale = max(abs(analytic), abs(numeric), 1e-8)
        rel_err = abs(analytic - numeric) / scale
        assert rel_err < REL_TOL, (
            f"param {tuple(p.shape)}[{flat}]: analytic {analytic:.3e} "
            f"vs numeric {numeric:.3e} (rel {rel_err:.2e})"
        )
