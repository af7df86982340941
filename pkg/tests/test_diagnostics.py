"""Testes dos diagnósticos de atenção, rank, entropia e divergência."""

import math

import numpy as np
import pytest

from src.data.augment import StrongAugmentRecipe
from src.diagnostics import (
    attention_rollout,
    cls_dist_divergence,
    entropy_report,
    feature_rank,
    mean_attention_distance,
    pixel_distances,
    prediction_entropy,
    rollout_matrix,
)
from src.exceptions import ParameterError, ShapeError
from src.models.diagnostics import AttentionRecord, FeatureMatrix, TokenKind
from src.networks import TeacherCNN


def uniform_attention(tokens: int, heads: int = 1, batch: int = 1) -> np.ndarray:
    return np.full((batch, heads, tokens, tokens), 1.0 / tokens)


def features(rows: np.ndarray, kind: TokenKind = TokenKind.CLS) -> FeatureMatrix:
    return FeatureMatrix(rows, np.zeros(len(rows), dtype=np.int64), kind)


class TestLocality:
    def test_distances_between_patch_centers(self):
        distances = pixel_distances(2, 4)
        assert distances[0, 1] == pytest.approx(4.0)
        assert distances[0, 3] == pytest.approx(4.0 * math.sqrt(2))

    def test_uniform_attention_on_two_by_two_grid(self):
        record = AttentionRecord([uniform_attention(4)], num_prefix_tokens=0)
        profile = mean_attention_distance(record, patch_size=1, image_size=2)
        assert profile.distances.shape == (1, 1)
        assert profile.distances[0, 0] == pytest.approx((2 + math.sqrt(2)) / 4)

    def test_prefix_tokens_are_dropped_without_renormalizing(self):
        record = AttentionRecord([uniform_attention(6, heads=2, batch=3)], num_prefix_tokens=2)
        profile = mean_attention_distance(record, patch_size=1, image_size=2)
        np.testing.assert_allclose(profile.distances, np.full((1, 2), (2 + math.sqrt(2)) / 6))
        assert profile.n_images == 3

    def test_self_attention_is_distance_zero(self):
        block = np.eye(4)[None, None]
        profile = mean_attention_distance(AttentionRecord([block, block], 0), patch_size=8, image_size=16)
        np.testing.assert_array_equal(profile.distances, np.zeros((2, 1)))

    def test_token_count_must_match_grid(self):
        with pytest.raises(ShapeError):
            mean_attention_distance(AttentionRecord([uniform_attention(7)], 0), patch_size=1, image_size=2)


class TestRollout:
    def test_matches_hand_product(self):
        rng = np.random.default_rng(0)
        first = rng.dirichlet(np.ones(3), size=3)
        second = rng.dirichlet(np.ones(3), size=3)
        record = AttentionRecord([first[None, None], second[None, None]], num_prefix_tokens=2)
        identity = np.eye(3)
        expected = 0.5 * (second + identity) @ (0.5 * (first + identity))
        np.testing.assert_allclose(rollout_matrix(record)[0], expected, rtol=1e-12)

    def test_rows_stay_stochastic(self):
        rng = np.random.default_rng(1)
        blocks = [rng.dirichlet(np.ones(6), size=(2, 3, 6)) for _ in range(3)]
        matrix = rollout_matrix(AttentionRecord(blocks, num_prefix_tokens=2))
        np.testing.assert_allclose(matrix.sum(axis=-1), np.ones((2, 6)), rtol=1e-12)

    def test_saliency_targets(self):
        record = AttentionRecord([uniform_attention(6, batch=2)], num_prefix_tokens=2)
        result = attention_rollout(record, "dist")
        assert result.saliency.shape == (2, 2, 2)
        np.testing.assert_allclose(result.saliency, np.full((2, 2, 2), 0.5 / 6))
        assert attention_rollout(record, 3).saliency.shape == (2, 2, 2)

    def test_invalid_targets(self):
        plain = AttentionRecord([uniform_attention(5)], num_prefix_tokens=1)
        with pytest.raises(ParameterError):
            attention_rollout(plain, "dist")
        with pytest.raises(ParameterError):
            attention_rollout(plain, 9)
        with pytest.raises(ParameterError):
            attention_rollout(plain, "patch")

    def test_empty_record(self):
        with pytest.raises(ShapeError):
            rollout_matrix(AttentionRecord([], 2))


class TestFeatureRank:
    def brute_force_rank(self, f_all: np.ndarray, f_min: np.ndarray, tol: float) -> int:
        centered = f_all - f_all.mean(axis=0)
        basis = np.linalg.svd(centered, full_matrices=False)[2].T
        for k in range(1, basis.shape[1] + 1):
            v = basis[:, :k]
            if np.sum((f_min - f_min @ v @ v.T) ** 2) / np.sum(f_min ** 2) <= tol:
                return k
        return basis.shape[1]

    def test_low_rank_features(self):
        rng = np.random.default_rng(0)
        directions = rng.normal(size=(2, 8))
        f_all = rng.normal(size=(40, 2)) @ directions
        f_min = rng.normal(size=(5, 2)) @ directions
        result = feature_rank(features(f_all), features(f_min))
        assert result.k == self.brute_force_rank(f_all, f_min, 0.01)
        assert result.k <= 2
        assert not result.exhausted

    def test_matches_brute_force_on_noisy_features(self):
        rng = np.random.default_rng(1)
        f_all = rng.normal(size=(30, 6)) * np.array([5.0, 3.0, 1.0, 0.5, 0.1, 0.05])
        f_min = f_all[:6]
        for tol in (0.5, 0.1, 0.01, 1e-4):
            assert feature_rank(features(f_all), features(f_min), tol).k == self.brute_force_rank(f_all, f_min, tol)

    def test_zero_tail_features(self):
        f_all = np.random.default_rng(2).normal(size=(10, 4))
        assert feature_rank(features(f_all), features(np.zeros((3, 4)))).k == 0

    def test_exhausted_search(self):
        rng = np.random.default_rng(3)
        f_all = rng.normal(size=(3, 8))
        result = feature_rank(features(f_all), features(rng.normal(size=(4, 8))))
        assert result.exhausted
        assert result.k == 3

    def test_width_mismatch(self):
        with pytest.raises(ShapeError):
            feature_rank(features(np.ones((4, 3))), features(np.ones((2, 4))))


class TestEntropy:
    def test_uniform_and_one_hot(self):
        probs = np.vstack([np.full(10, 0.1), np.eye(10)[3]])
        np.testing.assert_allclose(prediction_entropy(probs), [math.log(10), 0.0], atol=1e-12)

    def test_negative_probabilities(self):
        with pytest.raises(ParameterError):
            prediction_entropy(np.array([[1.2, -0.2]]))

    def test_report_on_tiny_split(self, tiny_dataset):
        teacher = TeacherCNN(tiny_dataset.num_classes, np.random.default_rng(0),
                             blocks_per_stage=1, widths=(2, 4, 4))
        summary = entropy_report(teacher, tiny_dataset, StrongAugmentRecipe(), n_samples=100, seed=3,
                                 batch_size=8)
        assert summary.n_samples == tiny_dataset.size
        for value in (summary.in_mean, summary.ood_mean):
            assert 0.0 <= value <= math.log(tiny_dataset.num_classes) + 1e-9


class TestDivergence:
    def test_zero_rows_are_excluded(self):
        u = np.array([[1.0, 0.0], [0.0, 0.0], [1.0, 1.0]])
        v = np.array([[0.0, 1.0], [1.0, 0.0], [2.0, 2.0]])
        result = cls_dist_divergence(u, v)
        assert result.mean_distance == pytest.approx(0.5)
        assert result.excluded == 1
        assert result.n_rows == 3

    def test_all_rows_degenerate(self):
        result = cls_dist_divergence(np.zeros((2, 3)), np.ones((2, 3)))
        assert math.isnan(result.mean_distance)
        assert result.excluded == 2

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            cls_dist_divergence(np.ones((2, 3)), np.ones((3, 3)))


def random_attention(rng, batch: int, heads: int, tokens: int) -> np.ndarray:
    return rng.dirichlet(np.ones(tokens), size=(batch, heads, tokens))


def loop_locality(blocks, prefix: int, grid: int, patch_size: int) -> np.ndarray:
    centers = [((i // grid + 0.5) * patch_size, (i % grid + 0.5) * patch_size) for i in range(grid * grid)]
    rows = []
    for block in blocks:
        batch, heads = block.shape[:2]
        row = []
        for h in range(heads):
            total = 0.0
            for b in range(batch):
                image = 0.0
                for q in range(grid * grid):
                    for k in range(grid * grid):
                        dy = centers[q][0] - centers[k][0]
                        dx = centers[q][1] - centers[k][1]
                        image += block[b, h, prefix + q, prefix + k] * math.hypot(dy, dx)
                total += image / (grid * grid)
            row.append(total / batch)
        rows.append(row)
    return np.array(rows)


def loop_rollout(blocks) -> np.ndarray:
    batch, _, tokens, _ = blocks[0].shape
    out = []
    for b in range(batch):
        result = np.eye(tokens)
        for block in blocks:
            augmented = np.zeros((tokens, tokens))
            for q in range(tokens):
                for k in range(tokens):
                    augmented[q, k] = 0.5 * (block[b, :, q, k].mean() + (q == k))
                augmented[q] /= augmented[q].sum()
            result = augmented @ result
        out.append(result)
    return np.array(out)


def loop_entropy(probs: np.ndarray) -> np.ndarray:
    return np.array([-sum(p * math.log(p) for p in row if p > 0) for row in probs])


def scan_rank(f_all: np.ndarray, f_min: np.ndarray, tol: float) -> int:
    if not np.any(f_min):
        return 0
    centered = f_all - f_all.mean(axis=0)
    v = np.linalg.svd(centered, full_matrices=False)[2].T
    for k in range(1, v.shape[1] + 1):
        residual = f_min - f_min @ v[:, :k] @ v[:, :k].T
        if (residual ** 2).sum() / (f_min ** 2).sum() <= tol:
            return k
    return v.shape[1]


class TestAgainstLoops:
    """Cada diagnóstico contra uma versão em laços explícitos, em instâncias sorteadas."""

    @pytest.mark.parametrize("seed", range(50))
    def test_locality(self, seed):
        rng = np.random.default_rng(seed)
        grid, patch = int(rng.integers(2, 4)), int(rng.integers(1, 5))
        prefix = int(rng.integers(0, 3))
        batch, heads = int(rng.integers(1, 3)), int(rng.integers(1, 4))
        blocks = [random_attention(rng, batch, heads, grid * grid + prefix) for _ in range(int(rng.integers(1, 3)))]
        profile = mean_attention_distance(AttentionRecord(blocks, prefix), patch_size=patch,
                                          image_size=grid * patch)
        np.testing.assert_allclose(profile.distances, loop_locality(blocks, prefix, grid, patch), atol=1e-6)

    @pytest.mark.parametrize("seed", range(50))
    def test_rollout(self, seed):
        rng = np.random.default_rng(seed)
        batch, heads, tokens = int(rng.integers(1, 3)), int(rng.integers(1, 4)), int(rng.integers(3, 8))
        blocks = [random_attention(rng, batch, heads, tokens) for _ in range(int(rng.integers(1, 5)))]
        np.testing.assert_allclose(rollout_matrix(AttentionRecord(blocks, 1)), loop_rollout(blocks), atol=1e-6)

    @pytest.mark.parametrize("seed", range(50))
    def test_entropy(self, seed):
        rng = np.random.default_rng(seed)
        probs = rng.dirichlet(np.full(int(rng.integers(2, 12)), 0.5), size=int(rng.integers(1, 6)))
        probs[0, 0] = 0.0
        probs[0] /= probs[0].sum()
        np.testing.assert_allclose(prediction_entropy(probs), loop_entropy(probs), atol=1e-6)

    @pytest.mark.parametrize("seed", range(50))
    def test_rank(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 9))
        n = int(rng.integers(d + 2, 20))
        scales = np.sort(rng.uniform(0.01, 5.0, size=d))[::-1]
        f_all = rng.normal(size=(n, d)) * scales
        f_min = f_all[rng.choice(n, size=int(rng.integers(1, n)), replace=False)]
        tol = float(10 ** rng.uniform(-4, -0.5))
        result = feature_rank(features(f_all), features(f_min), tol)
        assert result.k == scan_rank(f_all, f_min, tol)


class TestRankProperties:
    @pytest.mark.parametrize("seed", range(10))
    def test_nonincreasing_in_tol(self, seed):
        rng = np.random.default_rng(seed)
        f_all = rng.normal(size=(25, 8)) * np.linspace(4.0, 0.1, 8)
        f_min = f_all[:5] + 0.01 * rng.normal(size=(5, 8))
        ranks = [feature_rank(features(f_all), features(f_min), tol).k for tol in (1e-6, 1e-4, 1e-2, 0.1, 0.5, 0.9)]
        assert all(a >= b for a, b in zip(ranks, ranks[1:]))

    @pytest.mark.parametrize("seed", range(10))
    def test_joint_rotation_keeps_rank(self, seed):
        rng = np.random.default_rng(seed)
        f_all = rng.normal(size=(25, 6)) * np.array([5.0, 3.0, 1.0, 0.5, 0.1, 0.05])
        f_min = f_all[:6]
        rotation, _ = np.linalg.qr(rng.normal(size=(6, 6)))
        for tol in (0.5, 0.1, 0.01, 1e-4):
            plain = feature_rank(features(f_all), features(f_min), tol).k
            rotated = feature_rank(features(f_all @ rotation), features(f_min @ rotation), tol).k
            assert plain == rotated
