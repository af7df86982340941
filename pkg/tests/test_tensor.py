"""Testes do núcleo de tensores: primitivas, fita de gradientes e SVD."""

import numpy as np
import pytest

from src.exceptions import CheckpointError, NumericError, ShapeError
from src.tensor import Tensor, decode_tensors, encode_tensors, load_checkpoint, no_grad, ops, save_checkpoint, svd


def numeric_grad(fn, array, h=1e-6):
    """Diferença central de fn (escalar) em relação a cada entrada de `array`."""
    grad = np.zeros_like(array)
    for idx in np.ndindex(array.shape):
        original = array[idx]
        array[idx] = original + h
        plus = fn(array)
        array[idx] = original - h
        minus = fn(array)
        array[idx] = original
        grad[idx] = (plus - minus) / (2 * h)
    return grad


def check_gradient(build, array, rtol=1e-4, atol=1e-6):
    """Compara o backward de `build(Tensor) -> Tensor` com diferenças finitas de sum(saída)."""
    x = Tensor(array.copy(), requires_grad=True, dtype=np.float64)
    build(x).sum().backward()

    def scalar(values):
        with no_grad():
            return float(build(Tensor(values, dtype=np.float64)).data.sum())

    expected = numeric_grad(scalar, array.copy())
    np.testing.assert_allclose(x.grad, expected, rtol=rtol, atol=atol)


# gradientes conferidos em 20 sementes
@pytest.fixture(params=range(20))
def rng(request):
    return np.random.default_rng(1234 + request.param)


class TestArithmetic:
    def test_add_broadcasts_trailing_shape(self):
        a = Tensor(np.ones((2, 3)), requires_grad=True)
        b = Tensor(np.arange(3.0), requires_grad=True)
        out = a + b
        out.sum().backward()
        assert out.shape == (2, 3)
        np.testing.assert_array_equal(b.grad, [2.0, 2.0, 2.0])
        np.testing.assert_array_equal(a.grad, np.ones((2, 3)))

    def test_general_broadcasting_is_rejected(self):
        with pytest.raises(ShapeError):
            ops.add(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 1))))

    def test_mul_and_div_gradients(self, rng):
        other = rng.uniform(1.0, 2.0, size=(3, 4))
        check_gradient(lambda x: x * Tensor(other, dtype=np.float64) / 3.0, rng.normal(size=(3, 4)))
        check_gradient(lambda x: ops.div(Tensor(other, dtype=np.float64), x), rng.uniform(1.0, 2.0, size=(3, 4)))

    def test_shared_input_accumulates_gradient(self):
        x = Tensor(np.array([3.0]), requires_grad=True)
        (x * x + x).sum().backward()
        np.testing.assert_allclose(x.grad, [7.0])


class TestMatmul:
    def test_shape_and_gradient(self, rng):
        b = rng.normal(size=(4, 2))
        out = ops.matmul(Tensor(rng.normal(size=(3, 4))), Tensor(b))
        assert out.shape == (3, 2)
        check_gradient(lambda x: ops.matmul(x, Tensor(b, dtype=np.float64)), rng.normal(size=(3, 4)))

    def test_batched_shared_weight(self, rng):
        w = rng.normal(size=(4, 5))
        check_gradient(lambda x: x @ Tensor(w, dtype=np.float64), rng.normal(size=(2, 3, 4)))

    def test_inner_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            ops.matmul(Tensor(np.ones((3, 4))), Tensor(np.ones((3, 2))))


class TestSoftmax:
    def test_known_values(self):
        out = ops.softmax(Tensor(np.array([1.0, 2.0, 3.0]), dtype=np.float64))
        np.testing.assert_allclose(out.data, [0.09003, 0.24473, 0.66524], atol=1e-5)

    def test_large_logits_are_stable(self):
        out = ops.softmax(Tensor(np.array([1000.0, 1000.0]), dtype=np.float64))
        np.testing.assert_allclose(out.data, [0.5, 0.5])

    def test_rows_sum_to_one(self, rng):
        out = ops.softmax(Tensor(rng.normal(size=(5, 7)) * 10))
        np.testing.assert_allclose(out.data.sum(axis=-1), np.ones(5), rtol=1e-6)

    def test_nan_input_raises(self):
        with pytest.raises(NumericError):
            ops.softmax(Tensor(np.array([1.0, np.nan])))

    @pytest.mark.parametrize("bad", [np.inf, -np.inf])
    def test_infinite_input_raises(self, bad):
        with pytest.raises(NumericError):
            ops.softmax(Tensor(np.array([1.0, bad])))
        with pytest.raises(NumericError):
            ops.log_softmax(Tensor(np.array([[bad, 0.0]])))

    def test_gradients(self, rng):
        weights = rng.normal(size=(3, 5))
        check_gradient(lambda x: ops.softmax(x) * Tensor(weights, dtype=np.float64), rng.normal(size=(3, 5)))
        check_gradient(lambda x: ops.log_softmax(x) * Tensor(weights, dtype=np.float64), rng.normal(size=(3, 5)))


class TestNormalization:
    def test_layernorm_constant_row_is_zero(self):
        out = ops.layernorm(Tensor(np.full((2, 4), 3.0)))
        np.testing.assert_allclose(out.data, np.zeros((2, 4)), atol=1e-6)

    def test_layernorm_gradient(self, rng):
        gamma = Tensor(rng.normal(size=5), dtype=np.float64)
        beta = Tensor(rng.normal(size=5), dtype=np.float64)
        weights = Tensor(rng.normal(size=(3, 5)), dtype=np.float64)
        check_gradient(lambda x: ops.layernorm(x, gamma, beta) * weights, rng.normal(size=(3, 5)))

    def test_batch_norm_train_gradient_and_stats(self, rng):
        gamma = Tensor(np.ones(2), dtype=np.float64)
        beta = Tensor(np.zeros(2), dtype=np.float64)
        weights = Tensor(rng.normal(size=(3, 2, 2, 2)), dtype=np.float64)

        def build(x):
            return ops.batch_norm2d(x, gamma, beta, np.zeros(2), np.ones(2), training=True,
                                    update_stats=False) * weights

        check_gradient(build, rng.normal(size=(3, 2, 2, 2)))

        running_mean, running_var = np.zeros(2), np.ones(2)
        x = rng.normal(loc=2.0, size=(4, 2, 3, 3))
        ops.batch_norm2d(Tensor(x, dtype=np.float64), gamma, beta, running_mean, running_var, training=True)
        np.testing.assert_allclose(running_mean, 0.1 * x.mean(axis=(0, 2, 3)))

    def test_batch_norm_eval_is_deterministic(self, rng):
        gamma = Tensor(np.ones(2), dtype=np.float64)
        beta = Tensor(np.zeros(2), dtype=np.float64)
        mean, var = np.array([1.0, -1.0]), np.array([4.0, 1.0])
        x = Tensor(rng.normal(size=(2, 2, 2, 2)), dtype=np.float64)
        first = ops.batch_norm2d(x, gamma, beta, mean, var, training=False).data
        second = ops.batch_norm2d(x, gamma, beta, mean, var, training=False).data
        np.testing.assert_array_equal(first, second)
        np.testing.assert_allclose(first[:, 0], (x.data[:, 0] - 1.0) / np.sqrt(4.0 + 1e-5))

    def test_gelu_gradient(self, rng):
        check_gradient(ops.gelu, rng.normal(size=(4, 3)))


class TestConvolution:
    def test_identity_kernel_with_padding(self, rng):
        x = rng.normal(size=(1, 1, 4, 4))
        kernel = np.zeros((1, 1, 3, 3))
        kernel[0, 0, 1, 1] = 1.0
        out = ops.conv2d(Tensor(x, dtype=np.float64), Tensor(kernel, dtype=np.float64), padding=1)
        np.testing.assert_allclose(out.data, x)

    def test_stride_output_shape(self):
        out = ops.conv2d(Tensor(np.ones((2, 3, 8, 8))), Tensor(np.ones((4, 3, 3, 3))), stride=2, padding=1)
        assert out.shape == (2, 4, 4, 4)

    def test_gradients(self, rng):
        weight = Tensor(rng.normal(size=(2, 2, 3, 3)), dtype=np.float64)
        check_gradient(lambda x: ops.conv2d(x, weight, stride=2, padding=1), rng.normal(size=(2, 2, 5, 5)))
        x = Tensor(rng.normal(size=(2, 2, 5, 5)), dtype=np.float64)
        check_gradient(lambda w: ops.conv2d(x, w, padding=1), rng.normal(size=(3, 2, 3, 3)))

    def test_kernel_larger_than_input(self):
        with pytest.raises(ShapeError):
            ops.conv2d(Tensor(np.ones((1, 1, 2, 2))), Tensor(np.ones((1, 1, 3, 3))))

    def test_avgpool_global_and_windowed(self, rng):
        x = rng.normal(size=(2, 3, 4, 4))
        np.testing.assert_allclose(ops.avgpool(Tensor(x, dtype=np.float64)).data, x.mean(axis=(2, 3)))
        check_gradient(lambda t: ops.avgpool(t, 2), x.copy())


class TestGradTape:
    def test_deep_chain_does_not_overflow_recursion(self):
        x = Tensor(np.array([1.0]), requires_grad=True, dtype=np.float64)
        y = x
        for _ in range(5000):
            y = y * 1.0
        y.sum().backward()
        np.testing.assert_allclose(x.grad, [1.0])

    def test_no_grad_records_nothing(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with no_grad():
            y = x * 2.0
        assert not y.requires_grad
        y.sum().backward()
        assert x.grad is None

    def test_non_scalar_backward_needs_seed(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with pytest.raises(ShapeError):
            (x * 2.0).backward()

    def test_getitem_and_concat_gradients(self, rng):
        check_gradient(lambda x: ops.concat([x[:, :2], x[:, 1:]], axis=1), rng.normal(size=(2, 4)))


class TestSvd:
    def test_reconstruction_and_orthonormality(self, rng):
        m = rng.normal(size=(8, 5))
        u, s, v = svd(m)
        assert u.shape == (8, 5) and s.shape == (5,) and v.shape == (5, 5)
        np.testing.assert_allclose(u.data @ np.diag(s.data) @ v.data.T, m, atol=1e-10)
        np.testing.assert_allclose(u.data.T @ u.data, np.eye(5), atol=1e-10)
        assert np.all(np.diff(s.data) <= 0)

    def test_rejects_non_finite(self):
        with pytest.raises(NumericError):
            svd(np.array([[1.0, np.inf], [0.0, 1.0]]))


class TestCheckpointFormat:
    def test_encoded_tensors_survive_decode(self, rng):
        entries = {"a.weight": rng.normal(size=(3, 2)).astype(np.float32), "b": np.array(1.5, dtype=np.float32)}
        decoded = decode_tensors(encode_tensors(entries))
        assert list(decoded) == ["a.weight", "b"]
        np.testing.assert_array_equal(decoded["a.weight"], entries["a.weight"])
        assert decoded["b"].shape == ()

    def test_bad_magic_and_truncation(self):
        payload = encode_tensors({"w": np.ones(4, dtype=np.float32)})
        with pytest.raises(CheckpointError):
            decode_tensors(b"XXXX" + payload[4:])
        with pytest.raises(CheckpointError):
            decode_tensors(payload[:-2])
        with pytest.raises(CheckpointError):
            decode_tensors(payload + b"\x00")

    def test_corrupt_tensor_name(self, tmp_path):
        payload = encode_tensors({"w": np.ones(2, dtype=np.float32)})
        corrupt = payload[:16] + b"\xff" + payload[17:]
        with pytest.raises(CheckpointError, match="nome de tensor"):
            decode_tensors(corrupt)
        path = tmp_path / "m.tdlt"
        path.write_bytes(corrupt)
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_sidecar_with_invalid_utf8(self, tmp_path):
        path = save_checkpoint(tmp_path / "m.tdlt", {"w": np.zeros(2)}, {"epoch": 1})
        (tmp_path / "m.json").write_bytes(b"{\"epoch\": \"\xff\"}")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_save_and_load_with_sidecar(self, tmp_path):
        path = save_checkpoint(tmp_path / "ckpt" / "m.tdlt", {"w": np.zeros(2)}, {"epoch": 3})
        entries, header = load_checkpoint(path)
        assert header == {"epoch": 3}
        assert (tmp_path / "ckpt" / "m.json").exists()
        np.testing.assert_array_equal(entries["w"], np.zeros(2, dtype=np.float32))

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "nada.tdlt")
