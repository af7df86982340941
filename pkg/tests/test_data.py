"""Testes do pipeline de dados: parser, split LT, aumentos, mistura e carregador."""

import math

import numpy as np
import pytest

from src.data import (
    BatchLoader,
    ClassBalancedSampler,
    StrongAugmentRecipe,
    cutmix,
    cutmix_box,
    group_classes,
    longtail_counts,
    make_longtailed,
    mix_batch,
    mixup,
    smooth_one_hot,
    strong_augment,
    to_input,
    weak_augment,
)
from src.data.mixing import _sample_lambda
from src.exceptions import DataFormatError, ParameterError, ShapeError
from src.models.dataset import ClassGroup, LabeledBatch, RawDataset
from src.parsers.cifar_parser import CifarBinaryParser, load_cifar10
from src.utils.seeding import batch_rng


class TestCifarParser:
    def test_record_layout_is_planar_rgb(self):
        record = bytearray(3073)
        record[0] = 3
        record[1] = 200            # R do pixel (0, 0)
        record[1 + 1024] = 100     # G do pixel (0, 0)
        record[1 + 2048 + 33] = 50  # B do pixel (1, 1)
        images, labels = CifarBinaryParser().parse(bytes(record))
        assert images.shape == (1, 32, 32, 3)
        assert labels.tolist() == [3]
        assert tuple(images[0, 0, 0]) == (200, 100, 0)
        assert images[0, 1, 1, 2] == 50

    def test_truncated_payload(self):
        with pytest.raises(DataFormatError):
            CifarBinaryParser().parse(b"\x00" * 3000)

    def test_label_out_of_range(self):
        with pytest.raises(DataFormatError):
            CifarBinaryParser().parse(bytes([12]) + b"\x00" * 3072)

    def test_load_directory(self, raw_dataset):
        assert raw_dataset.train_images.shape == (100, 32, 32, 3)
        assert raw_dataset.test_labels.shape == (20,)
        assert np.bincount(raw_dataset.train_labels).tolist() == [10] * 10

    def test_missing_files(self, tmp_path):
        with pytest.raises(DataFormatError, match="data_batch_1.bin"):
            load_cifar10(tmp_path)


class TestLongTailCounts:
    def test_cifar10_rho_100(self):
        counts = longtail_counts(10, 5000, 100)
        assert counts[0] == 5000
        assert counts[9] == 50
        assert counts.sum() == 12406

    def test_rho_50_follows_floor_formula(self):
        expected = [math.floor(5000 * (1 / 50) ** (i / 9)) for i in range(10)]
        assert longtail_counts(10, 5000, 50).tolist() == expected

    def test_rho_one_is_balanced(self):
        assert longtail_counts(10, 300, 1.0).tolist() == [300] * 10

    def test_rho_below_one(self):
        with pytest.raises(ParameterError):
            longtail_counts(10, 5000, 0.5)

    def test_counts_never_increase(self):
        counts = longtail_counts(100, 500, 100)
        assert np.all(np.diff(counts) <= 0)


class TestGroups:
    def test_cifar10_boundaries(self):
        groups = group_classes(longtail_counts(10, 5000, 100), "cifar10")
        assert [groups[c] for c in (0, 2, 3, 6, 7, 9)] == [
            ClassGroup.HEAD, ClassGroup.HEAD, ClassGroup.MID, ClassGroup.MID, ClassGroup.TAIL, ClassGroup.TAIL,
        ]

    def test_cifar100_group_sizes(self):
        groups = group_classes(longtail_counts(100, 500, 100), "cifar100")
        sizes = {g: sum(1 for v in groups.values() if v == g) for g in ClassGroup}
        assert sizes == {ClassGroup.HEAD: 36, ClassGroup.MID: 35, ClassGroup.TAIL: 29}

    def test_generic_thresholds(self):
        groups = group_classes([500, 100, 60, 20, 19], "generic", thresholds=(100, 20))
        assert [groups[c] for c in range(5)] == [
            ClassGroup.HEAD, ClassGroup.MID, ClassGroup.MID, ClassGroup.MID, ClassGroup.TAIL,
        ]

    def test_wrong_class_count_for_fixed_groups(self):
        with pytest.raises(ParameterError):
            group_classes([10, 5], "cifar10")

    def test_unknown_kind_without_thresholds(self):
        with pytest.raises(ParameterError):
            group_classes([10, 5], "imagenet")


class TestMakeLongtailed:
    def test_counts_and_untouched_validation(self, raw_dataset):
        dataset = make_longtailed(raw_dataset, rho=10, n_max=10, seed=3)
        assert np.bincount(dataset.labels, minlength=10).tolist() == dataset.class_counts.tolist()
        assert dataset.size == int(dataset.class_counts.sum())
        assert dataset.class_counts[0] == 10 and dataset.class_counts[-1] == 1
        np.testing.assert_array_equal(dataset.val_images, raw_dataset.test_images)
        assert dataset.imbalance_ratio == pytest.approx(10.0)

    def test_same_seed_same_split(self, raw_dataset):
        first = make_longtailed(raw_dataset, rho=10, n_max=10, seed=3)
        second = make_longtailed(raw_dataset, rho=10, n_max=10, seed=3)
        np.testing.assert_array_equal(first.images, second.images)
        np.testing.assert_array_equal(first.labels, second.labels)

    def test_n_max_larger_than_pool(self, raw_dataset):
        with pytest.raises(ParameterError):
            make_longtailed(raw_dataset, rho=10, n_max=11, seed=0)

    def test_normalization_stats_and_input_layout(self, tiny_dataset):
        inputs = to_input(tiny_dataset.images, tiny_dataset.mean, tiny_dataset.std)
        assert inputs.shape == (tiny_dataset.size, 3, 32, 32)
        assert inputs.dtype == np.float32
        np.testing.assert_allclose(inputs.mean(axis=(0, 2, 3)), np.zeros(3), atol=1e-4)

    def test_single_class_dataset(self):
        images = np.zeros((4, 32, 32, 3), dtype=np.uint8)
        raw = RawDataset(images, np.zeros(4, dtype=np.int64), images, np.zeros(4, dtype=np.int64), num_classes=1)
        dataset = make_longtailed(raw, rho=10, n_max=4, seed=0, dataset_kind="generic", thresholds=(2, 1))
        assert dataset.class_counts.tolist() == [4]


class TestAugment:
    def test_weak_identity_offset(self):
        image = np.random.default_rng(0).integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
        out = weak_augment(image, np.random.default_rng(1), offset=(4, 4), flip=False)
        np.testing.assert_array_equal(out, image)

    def test_weak_flip_and_shape(self):
        image = np.random.default_rng(0).integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
        out = weak_augment(image, np.random.default_rng(1), offset=(4, 4), flip=True)
        np.testing.assert_array_equal(out, image[:, ::-1])
        assert weak_augment(image, np.random.default_rng(2)).shape == image.shape

    def test_disabled_recipe_is_identity(self):
        image = np.random.default_rng(0).integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
        out = strong_augment(image, np.random.default_rng(3), StrongAugmentRecipe.disabled())
        np.testing.assert_array_equal(out, image)

    def test_full_erase_replaces_whole_image(self):
        image = np.zeros((32, 32, 3), dtype=np.uint8)
        recipe = StrongAugmentRecipe(crop_prob=0.0, flip_prob=0.0, jitter_prob=0.0, erase_prob=1.0,
                                     erase_area=(1.0, 1.0), erase_ratio=(1.0, 1.0))
        out = strong_augment(image, np.random.default_rng(4), recipe)
        assert (out != 0).mean() > 0.9

    def test_same_generator_state_same_output(self):
        image = np.random.default_rng(0).integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
        first = strong_augment(image, np.random.default_rng(9))
        second = strong_augment(image, np.random.default_rng(9))
        np.testing.assert_array_equal(first, second)
        assert first.dtype == np.uint8 and first.shape == image.shape


class TestMixing:
    @pytest.fixture
    def pair(self):
        rng = np.random.default_rng(0)
        a = LabeledBatch(rng.normal(size=(4, 3, 8, 8)).astype(np.float32), np.array([0, 1, 2, 3]))
        b = LabeledBatch(rng.normal(size=(4, 3, 8, 8)).astype(np.float32), np.array([3, 2, 1, 0]))
        return a, b

    def test_smooth_one_hot(self):
        targets = smooth_one_hot(np.array([1]), 5, 0.1)
        np.testing.assert_allclose(targets[0], [0.025, 0.9, 0.025, 0.025, 0.025], rtol=1e-6)
        with pytest.raises(ParameterError):
            smooth_one_hot(np.array([5]), 5)

    def test_mixup_fixed_lambda(self, pair):
        a, b = pair
        mixed = mixup(a, b, 0.8, np.random.default_rng(0), num_classes=4, lam=0.3)
        np.testing.assert_allclose(mixed.inputs, 0.3 * a.inputs + 0.7 * b.inputs, rtol=1e-5, atol=1e-6)
        np.testing.assert_allclose(mixed.soft_targets[0], [0.3, 0.0, 0.0, 0.7], rtol=1e-6)

    def test_cutmix_lambda_matches_pasted_area(self, pair):
        a, b = pair
        mixed = cutmix(a, b, 1.0, np.random.default_rng(0), num_classes=4, lam=0.75, center=(4, 4))
        y1, y2, x1, x2 = cutmix_box(8, 8, 0.75, (4, 4))
        assert mixed.lam == pytest.approx(1 - (y2 - y1) * (x2 - x1) / 64)
        np.testing.assert_array_equal(mixed.inputs[..., y1:y2, x1:x2], b.inputs[..., y1:y2, x1:x2])
        np.testing.assert_allclose(mixed.soft_targets.sum(axis=1), np.ones(4), rtol=1e-6)

    def test_cutmix_box_at_lambda_one_is_empty(self):
        y1, y2, x1, x2 = cutmix_box(32, 32, 1.0, (10, 10))
        assert (y2 - y1) * (x2 - x1) == 0

    def test_mix_batch_disabled(self, pair):
        a, _ = pair
        out = mix_batch(a, np.random.default_rng(0), 4, 0.8, 1.0, enabled=False)
        assert out.mode == "none" and out.lam == 1.0
        np.testing.assert_array_equal(out.inputs, a.inputs)

    def test_mix_batch_targets_are_distributions(self, pair):
        a, _ = pair
        out = mix_batch(a, np.random.default_rng(5), 4, 0.8, 1.0, smoothing=0.1)
        assert out.mode in ("mixup", "cutmix")
        np.testing.assert_allclose(out.soft_targets.sum(axis=1), np.ones(4), rtol=1e-5)

    def test_beta_lambda_mean(self):
        rng = np.random.default_rng(11)
        draws = np.array([_sample_lambda(0.8, rng, None) for _ in range(100_000)])
        assert abs(draws.mean() - 0.5) <= 0.01
        assert draws.min() >= 0.0 and draws.max() <= 1.0

    def test_mixup_shape_mismatch(self, pair):
        a, _ = pair
        other = LabeledBatch(np.zeros((2, 3, 8, 8), dtype=np.float32), np.array([0, 1]))
        with pytest.raises(ShapeError):
            mixup(a, other, 0.8, np.random.default_rng(0), 4)


class TestSampling:
    def test_class_balanced_frequencies(self):
        labels = np.array([0] * 90 + [1] * 9 + [2])
        sampler = ClassBalancedSampler(labels, 3)
        picks = sampler.sample(30000, np.random.default_rng(0))
        freq = np.bincount(labels[picks], minlength=3) / 30000
        np.testing.assert_allclose(freq, [1 / 3] * 3, atol=0.02)

    def test_empty_class_rejected(self):
        with pytest.raises(ParameterError):
            ClassBalancedSampler(np.array([0, 0, 2]), 3)

    def test_epoch_covers_every_index_once(self):
        labels = np.arange(23) % 5
        images = np.arange(23)
        loader = BatchLoader(images, labels, 5, order_seed=1, augment_seed=2, epoch=0)
        seen = np.concatenate([batch.images for batch in loader])
        assert len(loader) == 5
        assert sorted(seen.tolist()) == list(range(23))

    def test_order_changes_between_epochs(self):
        labels = np.zeros(50, dtype=np.int64)
        first = BatchLoader(np.arange(50), labels, 50, 1, 2, epoch=0).indices()
        second = BatchLoader(np.arange(50), labels, 50, 1, 2, epoch=1).indices()
        assert not np.array_equal(first, second)

    def test_workers_do_not_change_results(self):
        images = np.random.default_rng(0).integers(0, 256, size=(20, 32, 32, 3), dtype=np.uint8)
        labels = np.arange(20) % 4

        def prepare(batch):
            rng = batch_rng(*batch.seed)
            return np.stack([weak_augment(img, rng) for img in batch.images])

        serial = list(BatchLoader(images, labels, 6, 3, 4, epoch=2, prepare=prepare, workers=1))
        threaded = list(BatchLoader(images, labels, 6, 3, 4, epoch=2, prepare=prepare, workers=3, prefetch=1))
        assert len(serial) == len(threaded) == 4
        for left, right in zip(serial, threaded):
            np.testing.assert_array_equal(left, right)
