"""Testes de otimizadores, SAM e agenda de taxa de aprendizado."""

import numpy as np
import pytest

from src.exceptions import CheckpointError, ParameterError
from src.losses import ce_soft, ldam_loss
from src.networks import DualTokenViT, Parameter, TeacherCNN
from src.optim import SAM, SGD, AdamW, cosine_lr, decay_mask, sam_step
from src.tensor import Tensor, no_grad, ops


def quadratic(param: Parameter):
    """f(w) = 1/2 ||w||^2, cujo gradiente é w."""
    return lambda: ops.mul(ops.sum(ops.mul(param, param)), 0.5)


class TestCosineSchedule:
    def test_warmup_and_decay_points(self):
        assert cosine_lr(0, 100, 10, 1.0) == 0.0
        assert cosine_lr(5, 100, 10, 1.0) == pytest.approx(0.5)
        assert cosine_lr(10, 100, 10, 1.0) == pytest.approx(1.0)
        assert cosine_lr(55, 100, 10, 1.0, 0.2) == pytest.approx(0.6)
        assert cosine_lr(100, 100, 10, 1.0, 0.2) == pytest.approx(0.2)

    def test_never_increases_after_warmup(self):
        values = [cosine_lr(s, 50, 5, 0.1, 0.001) for s in range(5, 51)]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_warmup_must_be_shorter_than_run(self):
        with pytest.raises(ParameterError):
            cosine_lr(0, 10, 10, 1.0)


class TestDecayMask:
    def test_tokens_biases_and_norms_are_excluded(self):
        model = DualTokenViT(4, np.random.default_rng(0), image_size=8, patch_size=4, embed_dim=8,
                             depth=1, n_heads=2)
        named = list(model.named_parameters())
        mask = dict(zip([name for name, _ in named], decay_mask(named)))
        assert mask["patch_embed.weight"] and mask["blocks.0.attn.qkv.weight"] and mask["head_dist.weight"]
        for name in ("cls_token", "dist_token", "pos_embed", "patch_embed.bias", "blocks.0.norm1.weight", "norm.bias"):
            assert not mask[name]


class TestAdamW:
    def test_first_step_moves_by_learning_rate(self):
        p = Parameter(np.array([1.0, -2.0]))
        p.grad = np.array([0.5, -3.0], dtype=np.float32)
        AdamW([p], lr=0.1, weight_decay=0.0).step()
        np.testing.assert_allclose(p.data, [0.9, -1.9], rtol=1e-5)

    def test_decoupled_weight_decay_respects_mask(self):
        decayed, kept = Parameter(np.array([2.0])), Parameter(np.array([2.0]))
        decayed.grad = np.zeros(1, dtype=np.float32)
        kept.grad = np.zeros(1, dtype=np.float32)
        AdamW([decayed, kept], lr=0.1, weight_decay=0.5, decay=[True, False]).step()
        np.testing.assert_allclose(decayed.data, [2.0 * (1 - 0.05)], rtol=1e-6)
        np.testing.assert_allclose(kept.data, [2.0])

    def test_parameters_without_gradient_stay(self):
        p = Parameter(np.array([1.0]))
        AdamW([p], lr=0.1).step()
        np.testing.assert_array_equal(p.data, [1.0])

    def test_state_round_trip_reproduces_next_step(self):
        rng = np.random.default_rng(0)
        a = Parameter(rng.normal(size=3))
        first = AdamW([a], lr=0.01)
        for _ in range(3):
            a.grad = rng.normal(size=3).astype(np.float32)
            first.step()
        restored_param = Parameter(a.data.copy())
        restored = AdamW([restored_param], lr=0.01)
        restored.load_state_entries(first.state_entries())
        grad = rng.normal(size=3).astype(np.float32)
        a.grad = restored_param.grad = grad
        first.step()
        restored.step()
        np.testing.assert_array_equal(a.data, restored_param.data)

    def test_missing_state_entries(self):
        with pytest.raises(CheckpointError):
            AdamW([Parameter(np.zeros(2))]).load_state_entries({})


class TestSGD:
    def test_momentum_accumulates(self):
        p = Parameter(np.array([0.0]))
        optimizer = SGD([p], lr=1.0, momentum=0.9, weight_decay=0.0)
        p.grad = np.array([1.0], dtype=np.float32)
        optimizer.step()
        np.testing.assert_allclose(p.data, [-1.0])
        optimizer.step()
        np.testing.assert_allclose(p.data, [-1.0 - 1.9], rtol=1e-6)

    def test_weight_decay_is_added_to_gradient(self):
        p = Parameter(np.array([2.0]))
        p.grad = np.zeros(1, dtype=np.float32)
        SGD([p], lr=0.5, momentum=0.9, weight_decay=0.1).step()
        np.testing.assert_allclose(p.data, [2.0 - 0.5 * 0.2], rtol=1e-6)


class TestSAM:
    def test_step_uses_gradient_at_perturbed_point(self):
        w = np.array([3.0, 4.0])
        param = Parameter(w)
        sam = SAM(SGD([param], lr=0.1, momentum=0.0, weight_decay=0.0), rho=0.5)
        loss = sam.step(quadratic(param))
        e = 0.5 * w / np.linalg.norm(w)
        np.testing.assert_allclose(param.data, w - 0.1 * (w + e), rtol=1e-5)
        assert loss == pytest.approx(12.5)
        assert sam.last_perturbation_norm == pytest.approx(0.5, rel=1e-6)

    def test_rho_zero_is_plain_step(self):
        w = np.array([1.0, -1.0])
        param = Parameter(w)
        SAM(SGD([param], lr=0.1, momentum=0.0, weight_decay=0.0), rho=0.0).step(quadratic(param))
        np.testing.assert_allclose(param.data, 0.9 * w, rtol=1e-6)

    def test_rho_zero_matches_plain_adamw(self):
        rng = np.random.default_rng(4)
        x = Tensor(rng.normal(size=(5, 3)))
        targets = rng.dirichlet(np.ones(4), size=5)
        start = rng.normal(size=(3, 4))
        plain_w, sam_w = Parameter(start.copy()), Parameter(start.copy())
        plain = AdamW([plain_w], lr=0.05, weight_decay=0.05)
        sam = SAM(AdamW([sam_w], lr=0.05, weight_decay=0.05), rho=0.0)
        for _ in range(10):
            plain.zero_grad()
            ce_soft(ops.matmul(x, plain_w), targets).backward()
            plain.step()
            sam.step(lambda: ce_soft(ops.matmul(x, sam_w), targets))
        np.testing.assert_array_equal(sam_w.data, plain_w.data)
        assert not np.array_equal(sam_w.data, start.astype(sam_w.dtype))

    def test_zero_gradient_skips_perturbation(self):
        param = Parameter(np.zeros(2))
        sam = SAM(SGD([param], lr=0.1, momentum=0.0, weight_decay=0.0), rho=0.05)
        sam.step(quadratic(param))
        assert sam.last_perturbation_norm == 0.0
        np.testing.assert_array_equal(param.data, np.zeros(2))

    def test_negative_rho(self):
        with pytest.raises(ParameterError):
            SAM(SGD([Parameter(np.zeros(1))]), rho=-0.1)

    def test_second_pass_does_not_touch_running_stats(self):
        rng = np.random.default_rng(0)
        inputs = rng.normal(loc=0.5, size=(4, 3, 32, 32)).astype(np.float32)
        labels = np.array([0, 1, 2, 3])
        counts = np.array([40, 20, 10, 5])

        def build():
            return TeacherCNN(4, np.random.default_rng(1), blocks_per_stage=1, widths=(2, 4, 4)).train()

        reference = build()
        with no_grad():
            reference(Tensor(inputs))

        teacher = build()

        def closure():
            z, _ = teacher(Tensor(inputs))
            return ldam_loss(z, labels, counts)

        sam_step(teacher, closure, 0.05, SGD(teacher.parameters(), lr=0.1))
        np.testing.assert_allclose(teacher.bn1.running_mean, reference.bn1.running_mean, rtol=1e-6)
        np.testing.assert_allclose(teacher.layers[2].bn2.running_var, reference.layers[2].bn2.running_var, rtol=1e-6)
