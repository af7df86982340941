"""Testes das redes: ViT de dois tokens, ResNet professora e regras de predição."""

import numpy as np
import pytest

from src.exceptions import CheckpointError, ShapeError
from src.losses import ce_smoothed
from src.networks import DualTokenViT, TeacherCNN, hard_label, patchify, predict, teacher_forward, vit_forward
from src.tensor import Tensor, no_grad


def tiny_vit(dist_token: bool = True, seed: int = 0) -> DualTokenViT:
    return DualTokenViT(10, np.random.default_rng(seed), image_size=8, patch_size=4, embed_dim=8,
                        depth=2, n_heads=2, mlp_ratio=2.0, dist_token=dist_token)


def tiny_resnet(seed: int = 0) -> TeacherCNN:
    return TeacherCNN(10, np.random.default_rng(seed), blocks_per_stage=1, widths=(2, 4, 4))


def finite_difference(loss_fn, values: np.ndarray, entries, h: float = 1e-6):
    """Derivada central de `loss_fn()` nas posições `entries` de `values` (alterado in-place)."""
    grads = []
    for idx in entries:
        original = values[idx]
        values[idx] = original + h
        plus = loss_fn()
        values[idx] = original - h
        minus = loss_fn()
        values[idx] = original
        grads.append((plus - minus) / (2 * h))
    return np.array(grads)


class TestDualTokenViT:
    def test_output_shapes(self):
        model = tiny_vit()
        out = vit_forward(model, np.random.default_rng(1).normal(size=(3, 3, 8, 8)), capture_attention=True)
        assert out.logits_cls.shape == (3, 10) and out.logits_dist.shape == (3, 10)
        assert out.features_cls.shape == (3, 8)
        assert out.attention.num_blocks == 2
        assert out.attention.blocks[0].shape == (3, 2, 6, 6)
        np.testing.assert_allclose(out.attention.blocks[1].sum(axis=-1), np.ones((3, 2, 6)), rtol=1e-5)

    def test_parameter_count_formula(self):
        for dist_token in (True, False):
            model = tiny_vit(dist_token)
            expected = DualTokenViT.parameter_count(10, 8, 4, 8, 2, 2.0, dist_token)
            assert model.num_parameters() == expected

    def test_symmetric_tokens_give_identical_heads(self):
        model = tiny_vit()
        model.dist_token.data[...] = model.cls_token.data
        model.pos_embed.data[1] = model.pos_embed.data[0]
        model.head_dist.weight.data[...] = model.head_cls.weight.data
        model.head_dist.bias.data[...] = model.head_cls.bias.data
        out = vit_forward(model, np.random.default_rng(2).normal(size=(2, 3, 8, 8)))
        np.testing.assert_allclose(out.logits_cls.data, out.logits_dist.data, rtol=1e-5, atol=1e-6)

    def test_plain_vit_reuses_cls_head(self):
        model = tiny_vit(dist_token=False)
        out = vit_forward(model, np.zeros((1, 3, 8, 8)))
        assert out.logits_dist is out.logits_cls
        assert model.sequence_length == 5
        assert not hasattr(model, "head_dist")

    def test_wrong_resolution(self):
        with pytest.raises(ShapeError):
            vit_forward(tiny_vit(), np.zeros((1, 3, 16, 16)))

    def test_patchify_row_major_order(self):
        image = np.arange(2 * 3 * 4 * 4, dtype=np.float64).reshape(2, 3, 4, 4)
        patches = patchify(Tensor(image), 2).data
        assert patches.shape == (2, 4, 12)
        np.testing.assert_array_equal(patches[0, 1, :4], image[0, 0, 0:2, 2:4].ravel())

    def test_gradient_matches_finite_differences(self):
        model = tiny_vit().astype(np.float64)
        inputs = np.random.default_rng(3).normal(size=(2, 3, 8, 8))
        labels = np.array([1, 4])

        def loss_value():
            with no_grad():
                return ce_smoothed(model(Tensor(inputs, dtype=np.float64)).logits_dist, labels, 0.1).item()

        model.zero_grad()
        ce_smoothed(model(Tensor(inputs, dtype=np.float64)).logits_dist, labels, 0.1).backward()
        entries = [(0, 0), (0, 3), (0, 7)]
        analytic = np.array([model.dist_token.grad[idx] for idx in entries])
        numeric = finite_difference(loss_value, model.dist_token.data, entries, h=1e-5)
        np.testing.assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-8)

    def test_reset_heads_changes_only_heads(self):
        model = tiny_vit()
        before = model.state_dict()
        model.reset_heads(np.random.default_rng(99))
        after = model.state_dict()
        assert set(before) == set(after)
        for name in before:
            changed = not np.array_equal(before[name], after[name])
            assert changed == (name.startswith("head_") and name.endswith("weight"))

    def test_state_dict_round_trip(self):
        source, target = tiny_vit(seed=0), tiny_vit(seed=1)
        target.load_state_dict(source.state_dict())
        inputs = np.random.default_rng(4).normal(size=(2, 3, 8, 8))
        np.testing.assert_array_equal(vit_forward(source, inputs).logits_cls.data,
                                      vit_forward(target, inputs).logits_cls.data)

    def test_load_state_dict_rejects_missing_entries(self):
        state = tiny_vit().state_dict()
        del state["pos_embed"]
        with pytest.raises(CheckpointError):
            tiny_vit().load_state_dict(state)

    def test_architecture_round_trip(self):
        model = tiny_vit()
        rebuilt = DualTokenViT.from_architecture(model.architecture(), np.random.default_rng(0))
        assert rebuilt.architecture() == model.architecture()


class TestTeacherCNN:
    def test_output_shapes_and_depth(self):
        teacher = tiny_resnet()
        logits, features = teacher_forward(teacher, np.random.default_rng(0).normal(size=(2, 3, 32, 32)))
        assert logits.shape == (2, 10)
        assert features.shape == (2, 4)
        assert np.all(np.abs(logits.data) <= teacher.logit_scale + 1e-4)
        assert TeacherCNN(10, np.random.default_rng(0)).depth == 32

    def test_eval_mode_is_deterministic_and_keeps_stats(self):
        teacher = tiny_resnet().eval()
        inputs = np.random.default_rng(1).normal(size=(2, 3, 32, 32))
        stats = teacher.bn1.running_mean.copy()
        first = teacher_forward(teacher, inputs)[0].data
        second = teacher_forward(teacher, inputs)[0].data
        np.testing.assert_array_equal(first, second)
        np.testing.assert_array_equal(teacher.bn1.running_mean, stats)

    def test_train_mode_updates_running_stats(self):
        teacher = tiny_resnet().train()
        teacher_forward(teacher, np.random.default_rng(2).normal(loc=1.0, size=(2, 3, 32, 32)))
        assert not np.allclose(teacher.bn1.running_mean, 0.0)

    def test_frozen_running_stats(self):
        teacher = tiny_resnet().train()
        with teacher.frozen_running_stats():
            teacher_forward(teacher, np.random.default_rng(2).normal(loc=1.0, size=(2, 3, 32, 32)))
        np.testing.assert_array_equal(teacher.bn1.running_mean, np.zeros(2))

    def test_first_kernel_gradient_matches_finite_differences(self):
        teacher = tiny_resnet().astype(np.float64).eval()
        inputs = np.random.default_rng(5).normal(size=(2, 3, 32, 32))
        labels = np.array([2, 7])

        def loss_value():
            with no_grad():
                return ce_smoothed(teacher_forward(teacher, Tensor(inputs, dtype=np.float64))[0], labels, 0.0).item()

        teacher.zero_grad()
        ce_smoothed(teacher_forward(teacher, Tensor(inputs, dtype=np.float64))[0], labels, 0.0).backward()
        entries = [(0, 0, 1, 1), (1, 2, 0, 2), (1, 1, 2, 0)]
        analytic = np.array([teacher.conv1.weight.grad[idx] for idx in entries])
        numeric = finite_difference(loss_value, teacher.conv1.weight.data, entries)
        np.testing.assert_allclose(analytic, numeric, rtol=1e-3, atol=1e-7)


class TestPredictions:
    def test_hard_label_ties_go_to_lowest_index(self):
        assert hard_label(np.array([[1.0, 3.0, 3.0], [0.0, 0.0, 0.0]])).tolist() == [1, 0]

    def test_averaged_prediction_matches_mean_argmax(self):
        rng = np.random.default_rng(0)
        cls, dist = rng.normal(size=(50, 10)), rng.normal(size=(50, 10))
        predictions = predict(cls, dist)
        np.testing.assert_array_equal(predictions.averaged, np.argmax(cls + dist, axis=1))
        np.testing.assert_array_equal(predictions.cls_only, np.argmax(cls, axis=1))
        np.testing.assert_array_equal(predictions.dist_only, np.argmax(dist, axis=1))

    def test_heads_are_averaged_in_logit_space(self):
        # média das softmaxes escolheria a classe 0; a média dos logits escolhe a 1
        predictions = predict(np.array([[20.0, 0.0, 0.0]]), np.array([[-30.0, 0.0, 0.0]]))
        assert predictions.averaged.tolist() == [1]
