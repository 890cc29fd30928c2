import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oci import autodiff as ad
from oci.autodiff import (AdamState, CheckpointError, NumericError, Param, ShapeError, Tape, Tensor,
                          adam_step, grad_check, load_checkpoint, read_checkpoint, save_checkpoint)
from oci.checks import GRAD_CASES, grad_suite


def P(arr, name="p"):
    return Param(np.asarray(arr, dtype=float), name)


class TestMatmul:
    def test_identity(self, rng):
        x = rng.normal(size=(3, 4))
        np.testing.assert_array_equal(ad.matmul(Tensor(np.eye(3)), Tensor(x)).data, x)

    def test_hand_arithmetic(self):
        out = ad.matmul(Tensor([[1.0, 2.0], [3.0, 4.0]]), Tensor([[1.0], [1.0]]))
        np.testing.assert_array_equal(out.data, [[3.0], [7.0]])

    def test_sum_gradient_is_ones_times_bt(self, rng):
        A, B = P(rng.normal(size=(2, 3)), "A"), P(rng.normal(size=(3, 4)), "B")
        with Tape() as t:
            t.backward(ad.total(ad.matmul(A, B)))
        np.testing.assert_allclose(A.grad, np.ones((2, 4)) @ B.data.T, atol=1e-14)
        assert grad_check(lambda: ad.total(ad.matmul(A, B)), [A, B]) < 1e-9

    def test_mismatch_names_both_shapes(self):
        with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
            ad.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))
        with pytest.raises(ShapeError, match=r"\(2, 3\).*\(4, 5\)"):
            ad.linear(Tensor(np.ones((2, 3))), Tensor(np.ones((4, 5))))


class TestElementwise:
    def test_relu(self):
        np.testing.assert_array_equal(ad.relu(Tensor([-1.0, 2.0])).data, [0.0, 2.0])

    def test_layer_norm_constant_row(self):
        out = ad.layer_norm(Tensor(np.full((2, 5), 3.7)), Tensor(np.ones(5)), Tensor(np.zeros(5)))
        np.testing.assert_array_equal(out.data, np.zeros((2, 5)))

    def test_layer_norm_moments(self, rng):
        out = ad.layer_norm(Tensor(rng.normal(size=(4, 16)) * 5 + 2), Tensor(np.ones(16)), Tensor(np.zeros(16)))
        np.testing.assert_allclose(out.data.mean(-1), 0, atol=1e-12)
        np.testing.assert_allclose(out.data.var(-1), 1, atol=1e-3)

    def test_softmax_symmetric(self):
        np.testing.assert_array_equal(ad.softmax_rows(Tensor([[0.0, 0.0]])).data, [[0.5, 0.5]])

    @given(st.integers(0, 10_000))
    def test_softmax_rows_normalized(self, seed):
        x = np.random.default_rng(seed).normal(scale=20, size=(3, 7))
        s = ad.softmax_rows(Tensor(x)).data
        np.testing.assert_allclose(s.sum(-1), 1.0, atol=1e-12)
        assert np.all(s >= 0) and np.all(s <= 1)

    def test_softmax_large_inputs_stable(self):
        s = ad.softmax_rows(Tensor([[1000.0, 1000.0, 0.0]])).data
        np.testing.assert_allclose(s, [[0.5, 0.5, 0.0]], atol=1e-12)

    def test_non_finite_names_op(self):
        with np.errstate(over="ignore"), pytest.raises(NumericError, match="square"):
            ad.square(Tensor([1e200]))

    def test_fan_out_accumulates(self):
        x = P([3.0])
        with Tape() as t:
            t.backward(ad.total(ad.add(ad.mul(x, x), x)))
        np.testing.assert_array_equal(x.grad, [7.0])


def naive_conv(x, k):
    L, C = x.shape
    half = k.shape[0] // 2
    out = np.zeros_like(x)
    for c in range(C):
        for i in range(L):
            for j in range(k.shape[0]):
                src = i + j - half
                if 0 <= src < L:
                    out[i, c] += k[j, c] * x[src, c]
    return out


class TestConv:
    def test_impulse_identity(self, rng):
        x = rng.normal(size=(6, 3))
        k = np.zeros((3, 3))
        k[1] = 1.0
        np.testing.assert_array_equal(ad.depthwise_conv1d(Tensor(x), Tensor(k)).data, x)

    def test_length_one(self, rng):
        x = rng.normal(size=(1, 4))
        k = rng.normal(size=(5, 4))
        np.testing.assert_allclose(ad.depthwise_conv1d(Tensor(x), Tensor(k)).data, k[2] * x, atol=1e-15)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_naive_loop(self, seed):
        r = np.random.default_rng(seed)
        x, k = r.normal(size=(9, 4)), r.normal(size=(3, 4))
        np.testing.assert_allclose(ad.depthwise_conv1d(Tensor(x), Tensor(k)).data, naive_conv(x, k), atol=1e-12)

    def test_channel_isolation(self, rng):
        x, k = rng.normal(size=(7, 4)), rng.normal(size=(3, 4))
        base = ad.depthwise_conv1d(Tensor(x), Tensor(k)).data
        x2 = x.copy()
        x2[:, 2] += rng.normal(size=7)
        diff = np.abs(ad.depthwise_conv1d(Tensor(x2), Tensor(k)).data - base).sum(axis=0)
        assert diff[2] > 0 and np.all(diff[[0, 1, 3]] == 0)

    def test_even_kernel(self):
        with pytest.raises(ShapeError, match="odd"):
            ad.depthwise_conv1d(Tensor(np.ones((3, 2))), Tensor(np.ones((2, 2))))


class TestGradCheck:
    def test_sum_of_squares(self):
        x = P([1.0, 2.0, 3.0])
        with Tape() as t:
            t.backward(ad.total(ad.square(x)))
        np.testing.assert_array_equal(x.grad, [2.0, 4.0, 6.0])
        x.zero_grad()
        assert grad_check(lambda: ad.total(ad.square(x)), [x]) < 1e-9

    def test_linear_map_machine_precision(self, rng):
        x, w = P(rng.normal(size=(2, 3))), Tensor(rng.normal(size=(3, 1)))
        assert grad_check(lambda: ad.total(ad.matmul(x, w)), [x]) < 1e-8

    def test_non_finite_raises(self):
        x = P([1.0])
        with pytest.raises(NumericError):
            grad_check(lambda: Tensor(np.array(np.inf)), [x])

    def test_every_op_quick(self):
        result = grad_suite(n_inputs=2, seed=123, ops=[n for n in GRAD_CASES if n != "policy_loss"])
        assert result.passed, result.detail

    def test_attention_shared_equals_concatenated(self, rng):
        q = Tensor(rng.normal(size=(3, 4)))
        k1, v1 = Tensor(rng.normal(size=(2, 5, 4))), Tensor(rng.normal(size=(2, 5, 6)))
        k2, v2 = Tensor(rng.normal(size=(7, 4))), Tensor(rng.normal(size=(7, 6)))
        ref = ad.attention(q, Tensor(np.concatenate([k1.data, np.broadcast_to(k2.data, (2, 7, 4))], 1)),
                           Tensor(np.concatenate([v1.data, np.broadcast_to(v2.data, (2, 7, 6))], 1)))
        np.testing.assert_allclose(ad.attention_shared(q, k1, v1, k2, v2).data, ref.data, atol=1e-13)


class TestAdam:
    def _step_on(self, p, grad, lr=1e-3):
        st_ = AdamState([p], lr=lr)
        p._accumulate(np.asarray(grad, dtype=float))
        adam_step([p], st_)
        return st_

    def test_zero_gradient_no_change(self):
        p = P([1.0, -2.0])
        self._step_on(p, [0.0, 0.0])
        np.testing.assert_array_equal(p.data, [1.0, -2.0])

    def test_first_step_magnitude_is_lr(self):
        p = P([0.0])
        s = self._step_on(p, [1.0], lr=0.1)
        np.testing.assert_allclose(p.data, [-0.1], atol=1e-6)
        assert s.step == 1
        np.testing.assert_array_equal(p.grad, [0.0])

    def test_quadratic_decreases_after_warmup(self):
        p = P([3.0, -2.0])
        s = AdamState([p], lr=0.05)
        vals = []
        for _ in range(60):
            with Tape() as t:
                loss = ad.total(ad.square(p))
                t.backward(loss)
            vals.append(float(loss.data))
            adam_step([p], s)
        assert all(b <= a for a, b in zip(vals[5:40], vals[6:41]))
        assert vals[-1] < 0.1 * vals[0]

    def test_unpopulated_grads(self):
        p = P([1.0])
        with pytest.raises(RuntimeError, match="populated"):
            adam_step([p], AdamState([p]))

    def test_overflowing_moment_raises(self):
        p = P([1.0])
        p._accumulate(np.array([1e200]))
        with pytest.raises(NumericError, match="adam_step"):
            adam_step([p], AdamState([p]))

    def test_frozen_rejected(self):
        with pytest.raises(ValueError, match="frozen"):
            AdamState([Param(np.zeros(2), "f", frozen=True)])


class TestCheckpoint:
    def test_round_trip(self, tmp_path, rng):
        ps = [P(rng.normal(size=(3, 2)), "a"), P(rng.normal(size=4), "b")]
        save_checkpoint(tmp_path / "m.ckpt", ps)
        fresh = [P(np.zeros((3, 2)), "a"), P(np.zeros(4), "b")]
        load_checkpoint(tmp_path / "m.ckpt", fresh)
        for x, y in zip(ps, fresh):
            np.testing.assert_array_equal(x.data, y.data)

    def test_shape_mismatch_named(self, tmp_path):
        save_checkpoint(tmp_path / "m.ckpt", [P(np.zeros((3, 2)), "w")])
        with pytest.raises(CheckpointError, match="'w'"):
            load_checkpoint(tmp_path / "m.ckpt", [P(np.zeros((2, 3)), "w")])

    @pytest.mark.parametrize("mutate", [lambda b: b"XXXX" + b[4:], lambda b: b[:-3], lambda b: b + b"\0"])
    def test_corruption_detected(self, tmp_path, mutate):
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, [P(np.ones(3), "w")])
        path.write_bytes(mutate(path.read_bytes()))
        with pytest.raises(CheckpointError):
            read_checkpoint(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError, match="cannot read"):
            read_checkpoint(tmp_path / "nope.ckpt")
