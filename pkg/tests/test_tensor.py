import numpy as np
import pytest

from hypershape import tensor as T
from hypershape.errors import ContractViolationError


def t(data, rg=True):
    return T.Tensor(np.asarray(data, dtype=np.float64), requires_grad=rg)


def conv3d_naive(x, w, b=None, stride=1, padding=1):
    """7-loop reference convolution; the oracle for the im2col path."""
    n, c_in, d, h, wd = x.shape
    c_out, _, k, _, _ = w.shape
    p = padding
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p), (p, p)))
    do = (d + 2 * p - k) // stride + 1
    ho = (h + 2 * p - k) // stride + 1
    wo = (wd + 2 * p - k) // stride + 1
    out = np.zeros((n, c_out, do, ho, wo))
    for ni in range(n):
        for co in range(c_out):
            for zi in range(do):
                for yi in range(ho):
                    for xi in range(wo):
                        patch = xp[
                            ni,
                            :,
                            zi * stride : zi * stride + k,
                            yi * stride : yi * stride + k,
                            xi * stride : xi * stride + k,
                        ]
                        out[ni, co, zi, yi, xi] = np.sum(patch * w[co])
            if b is not None:
                out[ni, co] += b[co]
    return out


class TestForward:
    def test_matmul_identity(self):
        a = np.random.default_rng(0).standard_normal((3, 3))
        out = T.matmul(t(np.eye(3)), t(a))
        np.testing.assert_allclose(out.data, a)

    def test_softmax_uniform(self):
        out = T.softmax(t(np.full(5, 2.0)))
        np.testing.assert_allclose(out.data, 0.2)

    def test_conv3d_single_tap(self):
        x = np.ones((1, 1, 1, 1, 1)) * 3.0
        w = np.ones((1, 1, 1, 1, 1)) * 2.0
        out = T.conv3d(t(x), t(w), stride=1, padding=0)
        np.testing.assert_allclose(out.data, 6.0)

    def test_conv3d_matches_naive(self):
        rng = np.random.default_rng(1)
        for stride, padding, size in [(1, 0, 4), (1, 1, 5), (2, 1, 6), (2, 0, 5)]:
            x = rng.standard_normal((2, 3, size, size, size))
            w = rng.standard_normal((4, 3, 3, 3, 3))
            b = rng.standard_normal(4)
            out = T.conv3d(t(x), t(w), t(b), stride=stride, padding=padding)
            ref = conv3d_naive(x, w, b, stride=stride, padding=padding)
            assert out.shape == ref.shape
            np.testing.assert_allclose(out.data, ref, atol=1e-10)

    def test_conv3d_output_size_formula(self):
        rng = np.random.default_rng(2)
        for size in range(3, 7):
            for stride in (1, 2):
                for padding in (0, 1):
                    if size + 2 * padding < 3:
                        continue
                    x = rng.standard_normal((1, 1, size, size, size))
                    w = rng.standard_normal((1, 1, 3, 3, 3))
                    out = T.conv3d(t(x), t(w), stride=stride, padding=padding)
                    expect = (size + 2 * padding - 3) // stride + 1
                    assert out.shape[2:] == (expect, expect, expect)

    def test_upsample_avgpool_inverse_shapes(self):
        x = t(np.random.default_rng(3).standard_normal((1, 2, 4, 4, 4)))
        up = T.upsample_nearest3d(x, 2)
        assert up.shape == (1, 2, 8, 8, 8)
        down = T.avg_pool3d(up, 2)
        np.testing.assert_allclose(down.data, x.data, atol=1e-12)

    def test_nonscalar_backward_rejected(self):
        with pytest.raises(ContractViolationError):
            T.backward(t(np.ones(3)))


class TestBackward:
    def test_sum_grad_ones(self):
        x = t([1.0, 2.0, 3.0])
        T.backward(x.sum())
        np.testing.assert_allclose(x.grad, 1.0)

    def test_sum_of_squares(self):
        x = t([1.0, 2.0, 3.0])
        T.backward(T.mul(x, x).sum())
        np.testing.assert_allclose(x.grad, [2.0, 4.0, 6.0])

    def test_tanh_at_zero(self):
        x = t([0.0])
        T.backward(T.tanh(x).sum())
        np.testing.assert_allclose(x.grad, 1.0)

    def test_unused_leaf_grad(self):
        x, y = t([1.0]), t([1.0])
        T.backward(x.sum())
        assert y.grad is None  # unused leaves accumulate nothing

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        a_data = rng.standard_normal((4, 4))
        grads = []
        for _ in range(2):
            a = t(a_data.copy())
            loss = T.softmax(T.matmul(a, a)).sum()
            T.backward(loss)
            grads.append(a.grad.copy())
        np.testing.assert_array_equal(grads[0], grads[1])


class TestGradCheck:
    def test_sum_of_squares(self):
        x = t(np.random.default_rng(5).standard_normal(6))
        assert T.grad_check(lambda v: T.mul(v, v).sum(), x) <= 1e-5

    def test_linear(self):
        x = t(np.random.default_rng(6).standard_normal(6))
        assert T.grad_check(lambda v: v.sum(), x) <= 1e-10

    def test_attention_toy(self):
        rng = np.random.default_rng(7)
        q = t(rng.standard_normal((2, 4)) * 0.5)
        k = t(rng.standard_normal((2, 4)) * 0.5)
        v = t(rng.standard_normal((2, 4)) * 0.5)

        def f(q_, k_, v_):
            return T.scaled_dot_attention(q_, k_, v_).sum()

        assert T.grad_check(f, [q, k, v]) <= 1e-4

    @pytest.mark.parametrize(
        "name,f,shape",
        [
            ("tanh", lambda x: T.tanh(x).sum(), (5,)),
            ("artanh", lambda x: T.artanh(T.mul(x, 0.4)).sum(), (5,)),
            ("sqrt", lambda x: T.sqrt(T.add(T.mul(x, x), 1.0)).sum(), (5,)),
            ("softmax", lambda x: T.mul(T.softmax(x), T.softmax(x)).sum(), (6,)),
            ("div", lambda x: T.div(x, T.add(T.mul(x, x), 2.0)).sum(), (5,)),
            ("abs", lambda x: T.absolute(T.add(x, 5.0)).sum(), (4,)),
            ("concat", lambda x: T.concat([x, T.mul(x, 2.0)], axis=0).sum(), (3,)),
            ("slice", lambda x: T.mul(x[1:3], x[0:2]).sum(), (4,)),
            (
                "group_norm",
                lambda x: T.mul(
                    T.group_norm(
                        T.reshape(x, (1, 4, 2, 1, 1)),
                        2,
                        T.Tensor(np.array([1.0, 1.1, 0.9, 1.2])),
                        T.Tensor(np.zeros(4)),
                    ),
                    T.reshape(x, (1, 4, 2, 1, 1)),
                ).sum(),
                (8,),
            ),
        ],
    )
    def test_elementwise_primitives(self, name, f, shape):
        x = t(np.random.default_rng(hash(name) % 2**32).standard_normal(shape))
        assert T.grad_check(f, x) <= 1e-4

    def test_matmul(self):
        rng = np.random.default_rng(8)
        a, b = t(rng.standard_normal((3, 4))), t(rng.standard_normal((4, 2)))
        assert T.grad_check(lambda a_, b_: T.matmul(a_, b_).sum(), [a, b]) <= 1e-6

    def test_conv3d(self):
        rng = np.random.default_rng(9)
        x = t(rng.standard_normal((1, 2, 4, 4, 4)) * 0.5)
        w = t(rng.standard_normal((2, 2, 3, 3, 3)) * 0.5)
        b = t(rng.standard_normal(2))

        def f(x_, w_, b_):
            out = T.conv3d(x_, w_, b_, stride=2, padding=1)
            return T.mul(out, out).sum()

        assert T.grad_check(f, [x, w, b]) <= 1e-4

    def test_upsample_pool(self):
        x = t(np.random.default_rng(10).standard_normal((1, 1, 2, 2, 2)))

        def f(x_):
            u = T.upsample_nearest3d(x_, 2)
            return T.mul(T.avg_pool3d(u, 2), u[:, :, ::2, ::2, ::2]).sum()

        assert T.grad_check(f, x) <= 1e-5

    def test_embedding(self):
        table = t(np.random.default_rng(11).standard_normal((5, 3)))
        ids = np.array([0, 2, 2, 4])

        def f(tb):
            e = T.embedding_lookup(tb, ids)
            return T.mul(e, e).sum()

        assert T.grad_check(f, table) <= 1e-5


def test_no_grad_suppresses_graph():
    x = t([1.0, 2.0])
    with T.no_grad():
        y = T.mul(x, x)
    assert not y.requires_grad and y._parents == ()
