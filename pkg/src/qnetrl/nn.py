"""Dense networks over a flat parameter vector, with explicit backward pass.

Parameters live in one contiguous float64 vector; weight and bias matrices
are views into it. That makes target-network blending, gradient clipping and
optimizer state trivially whole-network operations. Hidden layers are relu,
the output layer is linear; heads squash downstream as needed.
"""

import numpy as np

from . import kernels
from .errors import ShapeMismatch


def param_count(sizes) -> int:
    return sum((n_in + 1) * n_out for n_in, n_out in zip(sizes[:-1], sizes[1:]))


def _views(theta: np.ndarray, sizes):
    """(weight, bias) views into theta for each layer."""
    views = []
    offset = 0
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        w = theta[offset:offset + n_in * n_out].reshape(n_in, n_out)
        offset += n_in * n_out
        b = theta[offset:offset + n_out]
        offset += n_out
        views.append((w, b))
    return views


def init_params(sizes, rng: np.random.Generator) -> np.ndarray:
    """He-uniform hidden layers; final layer uniform in ±3e-3."""
    theta = np.empty(param_count(sizes), dtype=np.float64)
    last = len(sizes) - 2
    for i, (w, b) in enumerate(_views(theta, sizes)):
        if i == last:
            limit = 3e-3
        else:
            limit = np.sqrt(6.0 / w.shape[0])
        w[:] = rng.uniform(-limit, limit, size=w.shape)
        b[:] = rng.uniform(-limit, limit, size=b.shape)
    return theta


class Mlp:
    """relu MLP bound to an external flat parameter vector."""

    def __init__(self, sizes, theta: np.ndarray):
        if theta.shape != (param_count(sizes),) or theta.dtype != np.float64:
            raise ShapeMismatch(
                f"parameter vector must be float64 of length {param_count(sizes)}, "
                f"got {theta.dtype} {theta.shape}")
        self.sizes = tuple(int(s) for s in sizes)
        self.theta = theta
        self.layers = _views(theta, self.sizes)

    def _check_input(self, x):
        if x.ndim != 2 or x.shape[1] != self.sizes[0]:
            raise ShapeMismatch(f"expected input (batch, {self.sizes[0]}), got {x.shape}")

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._check_input(x)
        h = np.ascontiguousarray(x, dtype=np.float64)
        n_layers = len(self.layers)
        for i, (w, b) in enumerate(self.layers):
            out = np.empty((x.shape[0], w.shape[1]), dtype=np.float64)
            if i < n_layers - 1:
                kernels.affine_relu(h, w, b, out)
            else:
                kernels.affine(h, w, b, out)
            h = out
        return h

    def forward_cached(self, x: np.ndarray):
        """Returns (output, activations) where activations[i] feeds layer i."""
        self._check_input(x)
        h = np.ascontiguousarray(x, dtype=np.float64)
        acts = [h]
        n_layers = len(self.layers)
        for i, (w, b) in enumerate(self.layers):
            out = np.empty((x.shape[0], w.shape[1]), dtype=np.float64)
            if i < n_layers - 1:
                kernels.affine_relu(h, w, b, out)
                acts.append(out)
            else:
                kernels.affine(h, w, b, out)
            h = out
        return h, acts

    def backward(self, acts, grad_out: np.ndarray, grad_theta: np.ndarray) -> np.ndarray:
        """Accumulate dL/dtheta into grad_theta given dL/doutput; returns dL/dinput.

        acts comes from forward_cached on the same inputs. grad_theta must be
        zeroed by the caller when a fresh gradient is wanted.
        """
        if grad_theta.shape != self.theta.shape:
            raise ShapeMismatch("gradient vector shape must match parameters")
        gviews = _views(grad_theta, self.sizes)
        g = np.ascontiguousarray(grad_out, dtype=np.float64)
        for i in range(len(self.layers) - 1, -1, -1):
            w, _ = self.layers[i]
            gw, gb = gviews[i]
            x = acts[i]
            gx = np.empty((g.shape[0], w.shape[0]), dtype=np.float64)
            gw_step = np.empty_like(gw)
            gb_step = np.empty_like(gb)
            kernels.affine_backward(x, w, g, gx, gw_step, gb_step)
            gw += gw_step
            gb += gb_step
            if i > 0:
                kernels.relu_backward(acts[i], gx)
            g = gx
        return g

    def backward_data(self, acts, grad_out: np.ndarray) -> np.ndarray:
        """dL/dinput only; parameter gradients are not touched."""
        return _backward_data_pass(self.layers, acts, grad_out)


def _backward_data_pass(layers, acts, grad_out):
    g = np.ascontiguousarray(grad_out, dtype=np.float64)
    for i in range(len(layers) - 1, -1, -1):
        w, _ = layers[i]
        gx = np.empty((g.shape[0], w.shape[0]), dtype=np.float64)
        kernels.affine_backward_data(w, g, gx)
        if i > 0:
            kernels.relu_backward(acts[i], gx)
        g = gx
    return g


class Adam:
    """Adam over one flat parameter vector."""

    def __init__(self, n_params: int, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(n_params, dtype=np.float64)
        self.v = np.zeros(n_params, dtype=np.float64)
        self.t = 0

    def step(self, theta: np.ndarray, grad: np.ndarray):
        """One descent step in place (negate grad upstream for ascent)."""
        self.t += 1
        self.m += (1.0 - self.beta1) * (grad - self.m)
        self.v += (1.0 - self.beta2) * (grad * grad - self.v)
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        theta -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def clip_grad_norm(grad: np.ndarray, max_norm: float) -> float:
    """Scale grad in place so its l2 norm is at most max_norm; returns the norm."""
    norm = float(np.linalg.norm(grad))
    if norm > max_norm and norm > 0.0:
        grad *= max_norm / norm
    return norm


def soft_update(target: np.ndarray, online: np.ndarray, tau: float):
    """target <- tau * online + (1 - tau) * target, in place."""
    target *= 1.0 - tau
    target += tau * online
