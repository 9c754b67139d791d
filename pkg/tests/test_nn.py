import math
import warnings

import numpy as np
import pytest

from topoprior.errors import ConfigError, ContractViolation
from topoprior.nn import (
    AdamW,
    Dense,
    Dropout,
    GELU,
    LayerNorm,
    MultiHeadSelfAttention,
    Parameter,
    ReLU,
    Softmax,
    cosine_lr,
    huber_quantile_loss,
    lr_schedule,
    max_rel_error,
    numeric_gradient,
    one_cycle_lr,
)
from topoprior.nn.checkpoint import load_checkpoint, save_checkpoint
from topoprior.nn.losses import QUANTILES

GRAD_TOL = 1e-4


def layer_grad_error(layer, x, training=False, mask_seed=99):
    """Worst relative error of input+parameter gradients vs central differences."""
    rng = np.random.default_rng(7)
    out = layer.forward(x, training=training, rng=np.random.default_rng(mask_seed))
    w = rng.standard_normal(out.shape)

    def loss():
        return float(
            (layer.forward(x, training=training, rng=np.random.default_rng(mask_seed)) * w).sum()
        )

    layer.zero_grad()
    layer.forward(x, training=training, rng=np.random.default_rng(mask_seed))
    g_in = layer.backward(w)
    errs = [max_rel_error(g_in, numeric_gradient(loss, x))]
    for p in layer.parameters():
        errs.append(max_rel_error(p.grad, numeric_gradient(loss, p.value)))
    return max(errs)


class TestLayerGradients:
    @pytest.mark.parametrize("seed", range(5))
    def test_all_layers_match_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((2, 4, 10))
        layers = [
            Dense(10, 7, "d", seed=seed),
            LayerNorm(10, "ln"),
            ReLU(),
            GELU(),
            Softmax(),
            MultiHeadSelfAttention(10, 2, 5, "attn", seed=seed),
        ]
        for layer in layers:
            assert layer_grad_error(layer, x.copy()) < GRAD_TOL

    def test_dropout_gradient_with_frozen_mask(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((4, 6))
        assert layer_grad_error(Dropout(0.4), x, training=True) < GRAD_TOL

    def test_relu_gradient_values(self):
        layer = ReLU()
        layer.forward(np.array([2.0, -3.0]))
        grad = layer.backward(np.array([1.0, 1.0]))
        assert grad.tolist() == [1.0, 0.0]

    def test_softmax_of_constant_vector(self):
        out = Softmax().forward(np.full(5, 2.3))
        assert np.allclose(out, 0.2)

    def test_dense_shape_mismatch(self):
        with pytest.raises(ContractViolation):
            Dense(4, 2, "d").forward(np.zeros((3, 5)))


class TestDropoutAndAttention:
    def test_dropout_eval_is_identity(self):
        x = np.random.default_rng(0).standard_normal((5, 5))
        assert np.array_equal(Dropout(0.5).forward(x, training=False), x)

    def test_dropout_training_scales(self):
        x = np.ones((2000,))
        out = Dropout(0.25).forward(x, training=True, rng=np.random.default_rng(1))
        kept = out[out != 0]
        assert np.allclose(kept, 1.0 / 0.75)
        assert abs(len(kept) / 2000 - 0.75) < 0.05

    def test_attention_permutation_equivariance(self):
        rng = np.random.default_rng(2)
        attn = MultiHeadSelfAttention(8, 2, 4, "a", seed=0)
        x = rng.standard_normal((6, 8))
        out = attn.forward(x)
        perm = rng.permutation(6)
        out_perm = attn.forward(x[perm])
        assert np.allclose(out_perm, out[perm], atol=1e-12)


class TestHuberQuantileLoss:
    def test_perfect_median_zero(self):
        loss, grad = huber_quantile_loss(np.zeros((3, 1)), np.zeros(3), quantiles=(0.5,))
        assert loss == 0.0
        assert np.all(grad == 0.0)

    def test_symmetric_at_delta(self):
        up, _ = huber_quantile_loss(np.zeros((1, 1)), np.array([1.0]), quantiles=(0.5,))
        down, _ = huber_quantile_loss(np.zeros((1, 1)), np.array([-1.0]), quantiles=(0.5,))
        assert up == pytest.approx(0.25)
        assert down == pytest.approx(0.25)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(4)
        pred = rng.standard_normal((5, len(QUANTILES)))
        target = rng.standard_normal(5) + 0.3  # keep u away from the kink
        loss, grad = huber_quantile_loss(pred, target)
        num = numeric_gradient(lambda: huber_quantile_loss(pred, target)[0], pred)
        assert max_rel_error(grad, num) < GRAD_TOL

    def test_non_negative(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            loss, _ = huber_quantile_loss(
                rng.standard_normal((4, len(QUANTILES))), rng.standard_normal(4)
            )
            assert loss >= 0.0

    def test_shape_mismatch(self):
        with pytest.raises(ContractViolation):
            huber_quantile_loss(np.zeros((2, 3)), np.zeros(2))


class TestAdamW:
    def test_zero_gradient_no_decay_is_noop(self):
        p = Parameter("p", np.array([1.0, -2.0]))
        opt = AdamW([p], lr=0.1, weight_decay=0.0)
        opt.step()
        assert np.array_equal(p.value, [1.0, -2.0])

    def test_update_opposes_gradient_sign(self):
        p = Parameter("p", np.zeros(3))
        opt = AdamW([p], lr=0.01, weight_decay=0.0)
        for _ in range(10):
            p.grad = np.array([1.0, -2.0, 0.5])
            opt.step()
        assert np.all(p.value[[0, 2]] < 0) and p.value[1] > 0

    def test_quadratic_descent(self):
        p = Parameter("x", np.array([3.0]))
        opt = AdamW([p], lr=0.05, weight_decay=0.0)
        losses = []
        for _ in range(100):
            losses.append(0.5 * float(p.value[0]) ** 2)
            p.grad = p.value.copy()
            opt.step()
        assert all(b < a for a, b in zip(losses, losses[1:]))

    def test_decoupled_weight_decay(self):
        p = Parameter("p", np.array([1.0]))
        opt = AdamW([p], lr=0.1, weight_decay=0.5)
        opt.step()  # zero gradient: only decay applies
        assert p.value[0] == pytest.approx(1.0 - 0.1 * 0.5)

    def test_state_round_trip(self):
        p = Parameter("p", np.array([1.0, 2.0]))
        opt = AdamW([p], lr=0.01)
        p.grad = np.array([0.3, -0.3])
        opt.step()
        state = opt.state_dict()
        p2 = Parameter("p", np.array([1.0, 2.0]))
        opt2 = AdamW([p2], lr=0.01)
        opt2.load_state_dict(state)
        assert opt2.step_count == 1
        assert np.allclose(opt2._m[0], opt._m[0])


class TestSchedules:
    def test_cosine_endpoints(self):
        assert cosine_lr(0, 100, 1e-3) == pytest.approx(1e-3)
        assert cosine_lr(100, 100, 1e-3) == pytest.approx(1e-4)

    def test_cosine_midpoint(self):
        mid = cosine_lr(50, 100, 1.0, min_ratio=0.1)
        assert mid == pytest.approx(0.55)

    def test_one_cycle_peak_at_warmup_boundary(self):
        total = 200
        peak_step = int(0.3 * total)
        assert one_cycle_lr(peak_step, total, 3e-4) == pytest.approx(3e-4)
        assert one_cycle_lr(0, total, 3e-4) == pytest.approx(3e-4 / 25)
        assert one_cycle_lr(total, total, 3e-4) == pytest.approx(3e-4 / 25)

    def test_clamp_warns_beyond_total(self):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            lr = cosine_lr(150, 100, 1.0)
        assert lr == pytest.approx(0.1)
        assert any("clamping" in str(w.message) for w in caught)

    def test_dispatcher(self):
        assert lr_schedule("cosine", 0, 10, base_lr=1.0) == 1.0
        assert lr_schedule("one_cycle", 3, 10, max_lr=1.0) == one_cycle_lr(3, 10, 1.0)
        with pytest.raises(ConfigError):
            lr_schedule("linear", 0, 10, base_lr=1.0)


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "model.ckpt.json"
        params = {"a.w": np.arange(6.0).reshape(2, 3), "a.b": np.zeros(3)}
        save_checkpoint(path, params, optimizer_state={"step": 3},
                        rng_state={"s": 1}, meta={"seed": 0})
        loaded, opt_state, rng_state, meta = load_checkpoint(path)
        assert np.array_equal(loaded["a.w"], params["a.w"])
        assert opt_state == {"step": 3}
        assert meta == {"seed": 0}

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_checkpoint(tmp_path / "nope.json")
