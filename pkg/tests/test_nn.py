import numpy as np
import pytest

from qnetrl import kernels
from qnetrl.errors import ShapeMismatch
from qnetrl.nn import Adam, Mlp, clip_grad_norm, init_params, param_count, soft_update

SIZES = (4, 5, 3)


def make_net(sizes=SIZES, seed=0):
    rng = np.random.default_rng(seed)
    theta = rng.normal(0.0, 0.5, size=param_count(sizes))
    return Mlp(sizes, theta)


def reference_forward(net: Mlp, x):
    h = x
    for i, (w, b) in enumerate(net.layers):
        h = h @ w + b
        if i < len(net.layers) - 1:
            h = np.maximum(h, 0.0)
    return h


def loss_at(net: Mlp, x, theta=None):
    if theta is not None:
        saved = net.theta.copy()
        net.theta[:] = theta
        out = net.forward(x)
        net.theta[:] = saved
    else:
        out = net.forward(x)
    return 0.5 * float(np.sum(out * out))


class TestForward:
    def test_matches_plain_numpy(self):
        net = make_net()
        x = np.random.default_rng(1).normal(size=(6, 4))
        np.testing.assert_allclose(net.forward(x), reference_forward(net, x), rtol=1e-13)

    def test_cached_output_equals_forward(self):
        net = make_net()
        x = np.random.default_rng(2).normal(size=(3, 4))
        out, acts = net.forward_cached(x)
        np.testing.assert_array_equal(out, net.forward(x))
        assert len(acts) == len(net.layers)

    def test_rejects_wrong_width(self):
        net = make_net()
        with pytest.raises(ShapeMismatch):
            net.forward(np.zeros((2, 5)))

    def test_rejects_wrong_theta_length(self):
        with pytest.raises(ShapeMismatch):
            Mlp(SIZES, np.zeros(param_count(SIZES) + 1))


class TestGradients:
    """Analytic backward pass against central finite differences."""

    def analytic(self, net, x):
        out, acts = net.forward_cached(x)
        grad = np.zeros_like(net.theta)
        gx = net.backward(acts, out.copy(), grad)
        return grad, gx

    def test_theta_gradient_matches_finite_differences(self):
        net = make_net()
        x = np.random.default_rng(3).normal(size=(5, 4))
        grad, _ = self.analytic(net, x)
        h = 1e-5
        worst = 0.0
        for j in range(net.theta.size):
            theta_p = net.theta.copy()
            theta_m = net.theta.copy()
            theta_p[j] += h
            theta_m[j] -= h
            fd = (loss_at(net, x, theta_p) - loss_at(net, x, theta_m)) / (2 * h)
            denom = max(abs(fd) + abs(grad[j]), 1e-8)
            worst = max(worst, abs(fd - grad[j]) / denom)
        assert worst < 1e-4

    def test_input_gradient_matches_finite_differences(self):
        net = make_net(seed=7)
        x = np.random.default_rng(4).normal(size=(3, 4))
        _, gx = self.analytic(net, x)
        h = 1e-5
        for i in range(x.shape[0]):
            for j in range(x.shape[1]):
                xp, xm = x.copy(), x.copy()
                xp[i, j] += h
                xm[i, j] -= h
                fd = (loss_at(net, xp) - loss_at(net, xm)) / (2 * h)
                denom = max(abs(fd) + abs(gx[i, j]), 1e-8)
                assert abs(fd - gx[i, j]) / denom < 1e-4

    def test_backward_accumulates(self):
        net = make_net()
        x = np.random.default_rng(5).normal(size=(2, 4))
        out, acts = net.forward_cached(x)
        grad = np.zeros_like(net.theta)
        net.backward(acts, out.copy(), grad)
        once = grad.copy()
        net.backward(acts, out.copy(), grad)
        np.testing.assert_allclose(grad, 2.0 * once, rtol=1e-12)

    def test_backends_bitwise_identical(self):
        names = kernels.available_backends()
        if len(names) < 2:
            pytest.skip("single backend build")
        x = np.random.default_rng(6).normal(size=(4, 4))
        results = []
        for name in names:
            backend = kernels.get_backend(name)
            net = make_net()
            w, b = net.layers[0]
            out = np.empty((4, w.shape[1]))
            backend.affine(np.ascontiguousarray(x), w, b, out)
            results.append(out.copy())
        np.testing.assert_array_equal(results[0], results[1])


class TestInit:
    def test_deterministic_per_seed(self):
        a = init_params(SIZES, np.random.default_rng(9))
        b = init_params(SIZES, np.random.default_rng(9))
        np.testing.assert_array_equal(a, b)

    def test_final_layer_small(self):
        theta = init_params(SIZES, np.random.default_rng(0))
        net = Mlp(SIZES, theta)
        w_last, b_last = net.layers[-1]
        assert np.max(np.abs(w_last)) <= 3e-3
        assert np.max(np.abs(b_last)) <= 3e-3
        w0, _ = net.layers[0]
        assert np.max(np.abs(w0)) <= np.sqrt(6.0 / 4)


class TestOptimizerAndBlending:
    def test_adam_first_step_is_signed_lr(self):
        # with bias correction, step 1 moves each coordinate by ~lr*sign(g)
        theta = np.array([1.0, -2.0, 3.0])
        opt = Adam(3, lr=0.01)
        g = np.array([0.5, -0.25, 1e-12])
        opt.step(theta, g)
        np.testing.assert_allclose(theta[:2], [1.0 - 0.01, -2.0 + 0.01], atol=1e-6)

    def test_adam_matches_reference_sequence(self):
        rng = np.random.default_rng(11)
        theta = rng.normal(size=8)
        ref = theta.copy()
        opt = Adam(8, lr=1e-3)
        m = np.zeros(8)
        v = np.zeros(8)
        for t in range(1, 6):
            g = rng.normal(size=8)
            opt.step(theta, g)
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g * g
            ref -= 1e-3 * (m / (1 - 0.9 ** t)) / (np.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
            np.testing.assert_allclose(theta, ref, rtol=1e-12)

    def test_clip_rescales_only_large_gradients(self):
        g = np.array([3.0, 4.0])
        norm = clip_grad_norm(g, 10.0)
        assert norm == 5.0
        np.testing.assert_array_equal(g, [3.0, 4.0])
        norm = clip_grad_norm(g, 1.0)
        assert norm == 5.0
        np.testing.assert_allclose(np.linalg.norm(g), 1.0, rtol=1e-12)

    def test_soft_update_blend(self):
        target = np.array([0.0, 10.0])
        online = np.array([1.0, 0.0])
        soft_update(target, online, 0.25)
        np.testing.assert_allclose(target, [0.25, 7.5])

    def test_tau_one_copies_exactly(self):
        target = np.random.default_rng(1).normal(size=16)
        online = np.random.default_rng(2).normal(size=16)
        soft_update(target, online, 1.0)
        np.testing.assert_array_equal(target, online)

    def test_repeated_blending_converges_to_online(self):
        target = np.full(4, 100.0)
        online = np.full(4, -1.0)
        gaps = []
        for _ in range(400):
            soft_update(target, online, 0.05)
            gaps.append(float(np.max(np.abs(target - online))))
        assert gaps[-1] < 1e-6 * 101
        assert all(b <= a for a, b in zip(gaps, gaps[1:]))
