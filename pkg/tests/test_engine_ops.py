import numpy as np
import pytest

from genreclf.engine import Tensor, no_grad, ops


def naive_conv(x, w, b, stride, pad):
    B, C, H, W = x.shape
    O, _, kh, kw = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    Ho = (H + 2 * pad - kh) // stride + 1
    Wo = (W + 2 * pad - kw) // stride + 1
    out = np.zeros((B, O, Ho, Wo))
    for bi in range(B):
        for o in range(O):
            for ho in range(Ho):
                for wo in range(Wo):
                    patch = xp[bi, :, ho * stride:ho * stride + kh, wo * stride:wo * stride + kw]
                    out[bi, o, ho, wo] = (patch * w[o]).sum() + (b[o] if b is not None else 0.0)
    return out


def naive_maxpool(x, k, s):
    B, C, H, W = x.shape
    Ho, Wo = (H - k) // s + 1, (W - k) // s + 1
    out = np.zeros((B, C, Ho, Wo))
    for bi in range(B):
        for c in range(C):
            for ho in range(Ho):
                for wo in range(Wo):
                    out[bi, c, ho, wo] = x[bi, c, ho * s:ho * s + k, wo * s:wo * s + k].max()
    return out


class TestConv2d:
    def test_all_ones_3x3(self):
        out = ops.conv2d(Tensor(np.ones((1, 1, 3, 3))), Tensor(np.ones((1, 1, 3, 3))))
        assert out.data.reshape(-1)[0] == pytest.approx(9.0)

    def test_zero_weights_constant_bias(self):
        x = Tensor(np.random.default_rng(0).random((2, 3, 5, 5)))
        out = ops.conv2d(x, Tensor(np.zeros((4, 3, 3, 3))), Tensor(np.full(4, 2.5)))
        assert np.all(out.data == 2.5)

    @pytest.mark.parametrize("stride,pad", [(1, 0), (1, 1), (2, 1), (2, 3)])
    def test_matches_naive_loops(self, stride, pad):
        rng = np.random.default_rng(stride * 10 + pad)
        x = rng.standard_normal((2, 3, 8, 8))
        w = rng.standard_normal((4, 3, 3, 3))
        b = rng.standard_normal(4)
        got = ops.conv2d(Tensor(x), Tensor(w), Tensor(b), stride, pad).data
        assert np.abs(got - naive_conv(x, w, b, stride, pad)).max() < 1e-10

    def test_channel_mismatch(self):
        with pytest.raises(ValueError):
            ops.conv2d(Tensor(np.zeros((1, 2, 4, 4))), Tensor(np.zeros((1, 3, 3, 3))))

    def test_nonpositive_output(self):
        with pytest.raises(ValueError):
            ops.conv2d(Tensor(np.zeros((1, 1, 2, 2))), Tensor(np.zeros((1, 1, 3, 3))))


class TestPooling:
    def test_hand_2x2(self):
        out = ops.maxpool2d(Tensor(np.array([[[[1.0, 2.0], [3.0, 4.0]]]])), 2)
        assert out.data.reshape(-1)[0] == 4.0

    def test_adaptive_equals_global_max(self):
        x = np.random.default_rng(1).standard_normal((3, 5, 6, 7))
        out = ops.adaptive_maxpool2d(Tensor(x)).data
        np.testing.assert_allclose(out[..., 0, 0], x.max(axis=(2, 3)))

    @pytest.mark.parametrize("k,s", [(2, 2), (3, 2), (3, 1)])
    def test_matches_naive_windows(self, k, s):
        x = np.random.default_rng(k * 7 + s).standard_normal((2, 3, 9, 9))
        got = ops.maxpool2d(Tensor(x), k, s).data
        np.testing.assert_array_equal(got, naive_maxpool(x, k, s))

    def test_tie_routes_to_first_row_major(self):
        x = Tensor(np.array([[[[7.0, 7.0], [7.0, 7.0]]]]), requires_grad=True)
        out = ops.maxpool2d(x, 2)
        out.backward(np.ones_like(out.data))
        np.testing.assert_array_equal(x.grad.reshape(-1), [1, 0, 0, 0])

    def test_kernel_too_large(self):
        with pytest.raises(ValueError):
            ops.maxpool2d(Tensor(np.zeros((1, 1, 2, 2))), 5)

    def test_global_avgpool(self):
        x = np.random.default_rng(2).standard_normal((2, 4, 3, 3))
        np.testing.assert_allclose(ops.global_avgpool2d(Tensor(x)).data, x.mean(axis=(2, 3)))


class TestLinear:
    def test_identity(self):
        x = np.random.default_rng(0).standard_normal((3, 4))
        out = ops.linear(Tensor(x), Tensor(np.eye(4)), Tensor(np.zeros(4)))
        np.testing.assert_array_equal(out.data, x)

    def test_hand_case(self):
        out = ops.linear(Tensor(np.array([[1.0, 2.0]])),
                         Tensor(np.array([[1.0], [1.0]])), Tensor(np.array([0.5])))
        assert out.data.reshape(-1)[0] == pytest.approx(3.5)

    def test_matches_matmul_oracle(self):
        rng = np.random.default_rng(5)
        x, w, b = rng.standard_normal((6, 9)), rng.standard_normal((9, 4)), rng.standard_normal(4)
        got = ops.linear(Tensor(x), Tensor(w), Tensor(b)).data
        assert np.abs(got - (x @ w + b)).max() < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            ops.linear(Tensor(np.zeros((2, 3))), Tensor(np.zeros((4, 5))))


class TestBatchNorm:
    def test_constant_input_returns_beta(self):
        x = Tensor(np.full((3, 2, 4, 4), 7.0))
        out = ops.batchnorm(x, Tensor(np.array([2.0, 3.0])), Tensor(np.array([0.5, -1.5])),
                            np.zeros(2), np.ones(2), training=True)
        np.testing.assert_allclose(out.data[:, 0], 0.5, atol=1e-6)
        np.testing.assert_allclose(out.data[:, 1], -1.5, atol=1e-6)

    def test_plus_minus_one_batch(self):
        x = Tensor(np.array([[-1.0], [1.0]]))
        out = ops.batchnorm(x, Tensor(np.ones(1)), Tensor(np.zeros(1)),
                            np.zeros(1), np.ones(1), training=True, eps=1e-5)
        np.testing.assert_allclose(out.data.reshape(-1), [-1.0, 1.0], atol=1e-5)

    def test_eval_uses_running_stats(self):
        rm, rv = np.array([1.0]), np.array([4.0])
        x = Tensor(np.array([[3.0], [5.0]]))
        out = ops.batchnorm(x, Tensor(np.ones(1)), Tensor(np.zeros(1)), rm, rv,
                            training=False, eps=1e-12)
        np.testing.assert_allclose(out.data.reshape(-1), [1.0, 2.0], rtol=1e-9)

    def test_train_updates_running_stats(self):
        rm, rv = np.zeros(1), np.ones(1)
        x = Tensor(np.array([[0.0], [2.0]]))
        ops.batchnorm(x, Tensor(np.ones(1)), Tensor(np.zeros(1)), rm, rv,
                      training=True, momentum=0.1)
        np.testing.assert_allclose(rm, [0.1])       # 0.9*0 + 0.1*1
        np.testing.assert_allclose(rv, [1.0])       # 0.9*1 + 0.1*1 (biased var = 1)

    def test_eval_does_not_touch_running_stats(self):
        rm, rv = np.array([0.3]), np.array([0.7])
        ops.batchnorm(Tensor(np.ones((4, 1))), Tensor(np.ones(1)), Tensor(np.zeros(1)),
                      rm, rv, training=False)
        assert rm[0] == 0.3 and rv[0] == 0.7

    def test_bad_eps(self):
        with pytest.raises(ValueError):
            ops.batchnorm(Tensor(np.ones((2, 1))), Tensor(np.ones(1)), Tensor(np.zeros(1)),
                          np.zeros(1), np.ones(1), True, eps=0.0)


class TestDropout:
    def test_rate_zero_identity(self):
        x = np.random.default_rng(0).standard_normal((5, 5))
        out = ops.dropout(Tensor(x), 0.0, training=True, rng=np.random.default_rng(1))
        np.testing.assert_array_equal(out.data, x)

    def test_eval_identity(self):
        x = np.random.default_rng(0).standard_normal((5, 5))
        out = ops.dropout(Tensor(x), 0.9, training=False)
        np.testing.assert_array_equal(out.data, x)

    def test_survivor_fraction_and_mean(self):
        rng = np.random.default_rng(42)
        x = np.ones((400, 400), dtype=np.float64)
        out = ops.dropout(Tensor(x), 0.5, training=True, rng=rng).data
        survivors = np.count_nonzero(out) / out.size
        assert abs(survivors - 0.5) < 0.02
        assert abs(out.mean() - 1.0) < 0.05  # inverted scaling preserves the mean
        assert set(np.unique(out)) == {0.0, 2.0}

    def test_mask_reproducible_per_seed(self):
        x = np.ones((50, 50))
        a = ops.dropout(Tensor(x), 0.3, True, np.random.default_rng(9)).data
        b = ops.dropout(Tensor(x), 0.3, True, np.random.default_rng(9)).data
        np.testing.assert_array_equal(a, b)

    def test_bad_rate(self):
        with pytest.raises(ValueError):
            ops.dropout(Tensor(np.ones(3)), 1.0, True, np.random.default_rng(0))

    def test_train_without_rng(self):
        with pytest.raises(ValueError):
            ops.dropout(Tensor(np.ones(3)), 0.5, True)


class TestActivations:
    def test_relu_values(self):
        out = ops.relu(Tensor(np.array([-1.0, 0.0, 2.0])))
        np.testing.assert_array_equal(out.data, [0.0, 0.0, 2.0])

    def test_sigmoid_tanh_at_zero(self):
        assert ops.sigmoid(Tensor(np.zeros(1))).data[0] == pytest.approx(0.5)
        assert ops.tanh(Tensor(np.zeros(1))).data[0] == 0.0

    def test_sigmoid_stable_for_large_inputs(self):
        out = ops.sigmoid(Tensor(np.array([-1000.0, 1000.0]))).data
        assert out[0] == pytest.approx(0.0, abs=1e-12)
        assert out[1] == pytest.approx(1.0, abs=1e-12)

    def test_sigmoid_gradient_at_zero(self):
        x = Tensor(np.zeros(1), requires_grad=True)
        ops.sigmoid(x).backward(np.ones(1))
        assert x.grad[0] == pytest.approx(0.25)


class TestSoftmaxCrossEntropy:
    def test_uniform_logits(self):
        loss, _ = ops.softmax_cross_entropy(Tensor(np.zeros((4, 10))), np.arange(4))
        assert float(loss.data) == pytest.approx(np.log(10.0), rel=1e-12)

    def test_confident_correct_logit(self):
        logits = np.zeros((1, 10))
        logits[0, 3] = 30.0
        loss, _ = ops.softmax_cross_entropy(Tensor(logits), np.array([3]))
        assert float(loss.data) < 1e-9

    def test_grad_rows_sum_to_zero(self):
        rng = np.random.default_rng(3)
        logits = Tensor(rng.standard_normal((6, 10)))
        _, grad = ops.softmax_cross_entropy(logits, rng.integers(0, 10, 6))
        np.testing.assert_allclose(grad.sum(axis=1), 0.0, atol=1e-12)

    def test_grad_is_softmax_minus_onehot_over_batch(self):
        rng = np.random.default_rng(4)
        z = rng.standard_normal((5, 7))
        labels = rng.integers(0, 7, 5)
        _, grad = ops.softmax_cross_entropy(Tensor(z), labels)
        e = np.exp(z - z.max(axis=1, keepdims=True))
        p = e / e.sum(axis=1, keepdims=True)
        onehot = np.eye(7)[labels]
        np.testing.assert_allclose(grad, (p - onehot) / 5, rtol=1e-10)

    def test_backward_path_matches_returned_grad(self):
        rng = np.random.default_rng(5)
        logits = Tensor(rng.standard_normal((3, 4)), requires_grad=True)
        loss, grad = ops.softmax_cross_entropy(logits, np.array([0, 1, 2]))
        loss.backward()
        np.testing.assert_allclose(logits.grad, grad, rtol=1e-12)

    def test_label_out_of_range(self):
        with pytest.raises(ValueError):
            ops.softmax_cross_entropy(Tensor(np.zeros((2, 3))), np.array([0, 3]))


class TestDeterminism:
    def test_forward_bit_identical(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((2, 3, 16, 16)).astype(np.float32)
        w = rng.standard_normal((4, 3, 3, 3)).astype(np.float32)
        with no_grad():
            a = ops.conv2d(Tensor(x), Tensor(w), stride=2, padding=1).data
            b = ops.conv2d(Tensor(x.copy()), Tensor(w.copy()), stride=2, padding=1).data
        np.testing.assert_array_equal(a, b)
