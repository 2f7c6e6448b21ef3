import math

import numpy as np
import pytest
import torch

from chromafuse import losses
from chromafuse.colorspace import ChannelPair, ColorSpace
from chromafuse.losses import LossWeights, NonFiniteLossError


class TestLossWeights:
    def test_defaults(self):
        w = LossWeights()
        assert w.color_channel == 1.0
        assert w.perceptual == 5.0
        assert w.adversarial == 1.0
        assert w.colorfulness == 0.5
        assert w.space_weights[ColorSpace.LAB] == 0.1
        assert w.space_weights[ColorSpace.HSV] == 10.0
        assert w.space_weights[ColorSpace.YUV] == 10.0
        assert w.stage_weights == (0.0625, 0.125, 0.25, 0.5, 1.0)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            LossWeights(perceptual=-1.0)
        with pytest.raises(ValueError):
            LossWeights(space_weights={ColorSpace.LAB: -0.1})


class TestColorChannelLoss:
    def test_identity_is_zero(self):
        w = LossWeights()
        x = {s: torch.rand(2, 2, 4, 4) for s in ColorSpace}
        assert losses.color_channel_loss(x, x, w).item() == 0.0

    def test_lab_constant_error(self):
        w = LossWeights()
        pred = {ColorSpace.LAB: torch.zeros(1, 2, 4, 4)}
        gt = {ColorSpace.LAB: torch.full((1, 2, 4, 4), 0.5)}
        assert losses.color_channel_loss(pred, gt, w).item() == pytest.approx(0.05)

    def test_hsv_constant_error_exact(self):
        # Exact to double-precision machine epsilon.
        w = LossWeights()
        pred = {ColorSpace.HSV: torch.zeros(1, 2, 8, 8, dtype=torch.float64)}
        gt = {ColorSpace.HSV: torch.full((1, 2, 8, 8), 0.1, dtype=torch.float64)}
        assert losses.color_channel_loss(pred, gt, w).item() == pytest.approx(1.0, abs=1e-12)

    def test_multiple_spaces_sum(self):
        w = LossWeights()
        pred = {s: torch.zeros(1, 2, 2, 2) for s in (ColorSpace.LAB, ColorSpace.YUV)}
        gt = {s: torch.full((1, 2, 2, 2), 0.1) for s in (ColorSpace.LAB, ColorSpace.YUV)}
        expected = 0.1 * 0.1 + 10.0 * 0.1
        assert losses.color_channel_loss(pred, gt, w).item() == pytest.approx(expected)

    def test_space_mismatch_rejected(self):
        w = LossWeights()
        with pytest.raises(ValueError, match="space sets differ"):
            losses.color_channel_loss(
                {ColorSpace.LAB: torch.zeros(1, 2, 2, 2)},
                {ColorSpace.HSV: torch.zeros(1, 2, 2, 2)},
                w,
            )

    def test_shape_mismatch_rejected(self):
        w = LossWeights()
        with pytest.raises(ValueError, match="shape"):
            losses.color_channel_loss(
                {ColorSpace.LAB: torch.zeros(1, 2, 2, 2)},
                {ColorSpace.LAB: torch.zeros(1, 2, 4, 4)},
                w,
            )

    def test_channel_pair_inputs(self):
        w = LossWeights()
        a = ChannelPair(np.zeros((4, 4, 2)), ColorSpace.HSV)
        b = ChannelPair(np.full((4, 4, 2), 0.1), ColorSpace.HSV)
        assert losses.color_channel_loss([a], [b], w).item() == pytest.approx(1.0)

    def test_sum_reduction(self):
        w = LossWeights()
        pred = {ColorSpace.HSV: torch.zeros(1, 2, 2, 2)}
        gt = {ColorSpace.HSV: torch.full((1, 2, 2, 2), 0.1)}
        out = losses.color_channel_loss(pred, gt, w, reduction="sum")
        assert out.item() == pytest.approx(10.0 * 0.1 * 8)

    def test_gradcheck_against_finite_differences(self):
        torch.manual_seed(0)
        w = LossWeights()
        pred = torch.rand(1, 2, 8, 8, dtype=torch.float64, requires_grad=True)
        gt = torch.rand(1, 2, 8, 8, dtype=torch.float64)

        def run():
            return losses.color_channel_loss(
                {ColorSpace.LAB: pred}, {ColorSpace.LAB: gt}, w
            )

        run().backward()
        flat = pred.detach().reshape(-1)
        grad = pred.grad.reshape(-1)
        eps = 1e-6
        for idx in range(0, flat.numel(), 5):
            orig = flat[idx].item()
            flat[idx] = orig + eps
            hi = run().item()
            flat[idx] = orig - eps
            lo = run().item()
            flat[idx] = orig
            fd = (hi - lo) / (2 * eps)
            denom = max(abs(fd), abs(grad[idx].item()), 1e-8)
            assert abs(fd - grad[idx].item()) / denom < 1e-3


class IdentityStages(torch.nn.Module):
    def __init__(self, n=5):
        super().__init__()
        self.n = n

    def forward(self, x):
        return [x for _ in range(self.n)]


class TestPerceptualLoss:
    def test_identity_inputs_zero(self):
        from chromafuse.models import FixedPerceptualExtractor

        ext = FixedPerceptualExtractor()
        img = torch.rand(1, 3, 32, 32)
        assert losses.perceptual_loss(img, img, ext, LossWeights()).item() == 0.0

    def test_identity_stub_reduces_to_mae(self):
        w = LossWeights(stage_weights=(1.0, 0.0, 0.0, 0.0, 0.0))
        a = torch.rand(1, 3, 8, 8)
        b = torch.rand(1, 3, 8, 8)
        out = losses.perceptual_loss(a, b, IdentityStages(), w)
        assert out.item() == pytest.approx((a - b).abs().mean().item(), rel=1e-6)

    def test_stage_count_mismatch_rejected(self):
        with pytest.raises(ValueError, match="stages"):
            losses.perceptual_loss(
                torch.rand(1, 3, 8, 8),
                torch.rand(1, 3, 8, 8),
                IdentityStages(n=3),
                LossWeights(),
            )

    def test_stage_weights_are_paper_schedule(self):
        assert LossWeights().stage_weights == (0.0625, 0.125, 0.25, 0.5, 1.0)


class TestAdversarialLosses:
    def test_confused_discriminator(self):
        # Logit 0 means probability 0.5 on every patch.
        real = torch.zeros(2, 1, 4, 4)
        fake = torch.zeros(2, 1, 4, 4)
        gen, disc = losses.adversarial_losses(real, fake)
        assert disc.item() == pytest.approx(2 * math.log(2), rel=1e-6)
        assert gen.item() == pytest.approx(math.log(2), rel=1e-6)

    def test_perfect_discriminator_limit(self):
        real = torch.full((1, 1, 2, 2), 20.0)
        fake = torch.full((1, 1, 2, 2), -20.0)
        gen, disc = losses.adversarial_losses(real, fake)
        assert disc.item() < 1e-6
        assert gen.item() > 10.0

    def test_rejects_non_finite_logits(self):
        with pytest.raises(ValueError):
            losses.adversarial_losses(torch.tensor([float("nan")]), torch.zeros(1))


class TestColorfulness:
    def test_grayscale_scores_zero(self):
        img = torch.full((1, 3, 8, 8), 0.37)
        assert losses.colorfulness_score(img).item() == 0.0
        assert losses.colorfulness_loss(img).item() == 1.0

    def test_half_red_half_green(self):
        # Two-point distribution: rg = +/-255 (sigma 255, mean 0),
        # yb = 127.5 everywhere (sigma 0, mean 127.5).
        img = torch.zeros(1, 3, 2, 2)
        img[0, 0, 0, :] = 1.0  # top row pure red
        img[0, 1, 1, :] = 1.0  # bottom row pure green
        expected = 255.0 + 0.3 * 127.5
        assert losses.colorfulness_score(img).item() == pytest.approx(expected, rel=1e-6)

    def test_constant_color_image(self):
        img = torch.zeros(1, 3, 4, 4)
        img[0, 0], img[0, 1], img[0, 2] = 0.5, 0.25, 0.75
        expected = 0.3 * math.sqrt(63.75 ** 2 + 95.625 ** 2)
        assert losses.colorfulness_score(img).item() == pytest.approx(expected, rel=1e-6)

    def test_loss_goes_negative_for_vivid_images(self):
        img = torch.zeros(1, 3, 2, 2)
        img[0, 0, 0, :] = 1.0
        img[0, 1, 1, :] = 1.0
        # Score 293.25 -> loss 1 - 2.9325.
        assert losses.colorfulness_loss(img).item() == pytest.approx(1 - 2.9325, rel=1e-6)

    def test_channels_last_single_image_accepted(self):
        img = torch.rand(3, 8, 8)
        assert torch.isfinite(losses.colorfulness_score(img))

    def test_gradcheck_against_finite_differences(self):
        torch.manual_seed(1)
        img = torch.rand(1, 3, 8, 8, dtype=torch.float64, requires_grad=True)
        losses.colorfulness_loss(img).backward()
        flat = img.detach().reshape(-1)
        grad = img.grad.reshape(-1)
        eps = 1e-6
        for idx in range(0, flat.numel(), 11):
            orig = flat[idx].item()
            flat[idx] = orig + eps
            hi = losses.colorfulness_loss(img).item()
            flat[idx] = orig - eps
            lo = losses.colorfulness_loss(img).item()
            flat[idx] = orig
            fd = (hi - lo) / (2 * eps)
            denom = max(abs(fd), abs(grad[idx].item()), 1e-8)
            assert abs(fd - grad[idx].item()) / denom < 1e-3


class TestTotalLoss:
    def test_all_zero(self):
        total, report = losses.total_loss(0.0, 0.0, 0.0, 0.0, LossWeights())
        assert total == 0.0 and report.total == 0.0

    def test_paper_weighting(self):
        total, _ = losses.total_loss(1.0, 0.0, 0.0, 0.0, LossWeights())
        assert total == pytest.approx(1.0)
        total, _ = losses.total_loss(0.0, 1.0, 0.0, 0.0, LossWeights())
        assert total == pytest.approx(5.0)
        total, _ = losses.total_loss(0.0, 0.0, 1.0, 0.0, LossWeights())
        assert total == pytest.approx(1.0)
        total, _ = losses.total_loss(0.0, 0.0, 0.0, 1.0, LossWeights())
        assert total == pytest.approx(0.5)

    def test_linearity_in_each_part(self):
        w = LossWeights()
        base, _ = losses.total_loss(0.3, 0.2, 0.1, 0.4, w)
        doubled, _ = losses.total_loss(0.6, 0.2, 0.1, 0.4, w)
        assert doubled - base == pytest.approx(w.color_channel * 0.3)

    def test_discriminator_term_reported_not_totaled(self):
        total, report = losses.total_loss(0.0, 0.0, 0.0, 0.0, LossWeights(), adv_discriminator=3.0)
        assert total == 0.0
        assert report.adv_discriminator == 3.0

    def test_non_finite_part_identified(self):
        with pytest.raises(NonFiniteLossError) as err:
            losses.total_loss(float("nan"), 0.0, 0.0, 0.0, LossWeights())
        assert err.value.term == "color_channel"
        with pytest.raises(NonFiniteLossError) as err:
            losses.total_loss(0.0, float("inf"), 0.0, 0.0, LossWeights())
        assert err.value.term == "perceptual"

    def test_keeps_graph_for_tensor_inputs(self):
        cc = torch.tensor(0.5, requires_grad=True)
        total, report = losses.total_loss(cc, 0.0, 0.0, 0.0, LossWeights())
        assert torch.is_tensor(total) and total.requires_grad
        assert report.total == pytest.approx(0.5)
