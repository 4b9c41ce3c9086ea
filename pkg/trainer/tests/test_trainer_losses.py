"""Contrastive objective: fixtures, invariances, gradients."""

import math

import pytest
import torch

from egen_trainer import contrastive_loss, contrastive_loss_from_similarities
from egen_trainer.losses import seq2seq_criterion


def test_symmetric_similarities_give_ln2():
    # positive and negative equally similar -> two-way softmax is 1/2
    a = torch.tensor([[1.0, 0.0, 0.0]], dtype=torch.float64)
    p = torch.tensor([[0.0, 1.0, 0.0]], dtype=torch.float64)
    n = torch.tensor([[0.0, 0.0, 1.0]], dtype=torch.float64)
    for tau in (0.05, 0.07, 1.0):
        loss = contrastive_loss(a, p, n, tau)
        assert abs(loss.item() - math.log(2)) < 1e-9


def test_loss_from_similarities_fixture():
    sp = torch.tensor([1.0], dtype=torch.float64)
    sn = torch.tensor([0.0], dtype=torch.float64)
    got = contrastive_loss_from_similarities(sp, sn, 1.0).item()
    assert got == pytest.approx(math.log(1 + math.exp(-1.0)), abs=1e-12)


def test_loss_is_shift_invariant():
    sp = torch.tensor([0.3, -0.2, 0.9], dtype=torch.float64)
    sn = torch.tensor([0.1, 0.5, -0.4], dtype=torch.float64)
    base = contrastive_loss_from_similarities(sp, sn, 0.07)
    for shift in (-5.0, 1e-3, 42.0):
        shifted = contrastive_loss_from_similarities(sp + shift, sn + shift, 0.07)
        assert torch.allclose(base, shifted, atol=1e-12, rtol=0)


def test_loss_decreases_as_positive_similarity_grows():
    sn = torch.tensor([0.0], dtype=torch.float64)
    losses = [
        contrastive_loss_from_similarities(torch.tensor([s], dtype=torch.float64), sn, 0.1).item()
        for s in (-0.5, 0.0, 0.5, 1.0)
    ]
    assert losses == sorted(losses, reverse=True)


def test_normalization_makes_loss_scale_invariant():
    g = torch.Generator().manual_seed(0)
    a = torch.randn(4, 8, generator=g, dtype=torch.float64)
    p = torch.randn(4, 8, generator=g, dtype=torch.float64)
    n = torch.randn(4, 8, generator=g, dtype=torch.float64)
    base = contrastive_loss(a, p, n, 0.07)
    scaled = contrastive_loss(3.0 * a, 0.5 * p, 7.0 * n, 0.07)
    assert torch.allclose(base, scaled, atol=1e-12, rtol=0)


def test_analytic_gradient_matches_central_differences():
    g = torch.Generator().manual_seed(3)
    vectors = [
        torch.randn(1, 4, generator=g, dtype=torch.float64, requires_grad=True)
        for _ in range(3)
    ]
    tau = 0.07
    loss = contrastive_loss(*vectors, tau)
    loss.backward()

    h = 1e-6
    for vi, v in enumerate(vectors):
        for idx in range(v.numel()):
            def loss_at(delta):
                perturbed = [u.detach().clone() for u in vectors]
                perturbed[vi].view(-1)[idx] += delta
                return contrastive_loss(*perturbed, tau).item()

            fd = (loss_at(h) - loss_at(-h)) / (2 * h)
            analytic = v.grad.view(-1)[idx].item()
            rel = abs(analytic - fd) / max(abs(fd), 1e-12)
            assert rel < 1e-4, (vi, idx, analytic, fd)


def test_torch_gradcheck_passes():
    g = torch.Generator().manual_seed(5)
    a = torch.randn(2, 4, generator=g, dtype=torch.float64, requires_grad=True)
    p = torch.randn(2, 4, generator=g, dtype=torch.float64, requires_grad=True)
    n = torch.randn(2, 4, generator=g, dtype=torch.float64, requires_grad=True)
    assert torch.autograd.gradcheck(
        lambda x, y, z: contrastive_loss(x, y, z, 0.07), (a, p, n)
    )


def test_seq2seq_criterion_ignores_padding_and_smooths():
    crit = seq2seq_criterion(pad_id=0)
    logits = torch.zeros(2, 5)
    # uniform logits: smoothed CE equals ln(V) regardless of target
    loss = crit(logits, torch.tensor([3, 4]))
    assert loss.item() == pytest.approx(math.log(5), abs=1e-6)
    all_pad = crit(logits, torch.tensor([0, 0]))
    assert torch.isnan(all_pad)  # nothing to score when every target is padding
