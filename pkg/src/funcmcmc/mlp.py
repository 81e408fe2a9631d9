"""Fully-connected networks over a flat parameter vector.

Parameters are stored layer by layer; inside a layer the weight matrix
``W`` (shape ``(fan_in, fan_out)``) comes first in row-major order, followed
by the bias vector. Gradients are only ever formed as vector-Jacobian
products, so memory stays O(k) no matter how many points are evaluated.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatch

_ACTIVATIONS = ("tanh", "relu", "identity")


def _act(name, a):
    if name == "tanh":
        return np.tanh(a)
    if name == "relu":
        return np.maximum(a, 0.0)
    return a


def _act_grad(name, a, h):
    # derivative expressed through pre-activation a and output h
    if name == "tanh":
        return 1.0 - h * h
    if name == "relu":
        return (a > 0.0).astype(a.dtype)
    return np.ones_like(a)


@dataclass(frozen=True)
class MLPArchitecture:
    """Layer widths ``(input, hidden..., output)`` plus hidden activation.

    The output layer is affine.
    """

    layer_widths: tuple
    activation: str = "tanh"

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, "layer_widths", widths)
        if len(widths) < 2:
            raise ValueError("an architecture needs at least input and output widths")
        if any(w < 1 for w in widths):
            raise ValueError(f"all widths must be >= 1, got {widths}")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"activation must be one of {_ACTIVATIONS}")

    @property
    def input_dim(self):
        return self.layer_widths[0]

    @property
    def output_dim(self):
        return self.layer_widths[-1]

    @property
    def n_params(self):
        w = self.layer_widths
        return sum((w[i] + 1) * w[i + 1] for i in range(len(w) - 1))

    def _shapes(self):
        w = self.layer_widths
        return [((w[i], w[i + 1]), (w[i + 1],)) for i in range(len(w) - 1)]

    def unflatten(self, w):
        """Split a flat vector into a list of ``(W, b)`` views."""
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (self.n_params,):
            raise DimensionMismatch(
                f"expected parameter vector of length {self.n_params}, got shape {w.shape}"
            )
        layers = []
        pos = 0
        for wshape, bshape in self._shapes():
            nw = wshape[0] * wshape[1]
            W = w[pos:pos + nw].reshape(wshape)
            pos += nw
            b = w[pos:pos + bshape[0]]
            pos += bshape[0]
            layers.append((W, b))
        return layers

    def flatten(self, layers):
        """Inverse of :meth:`unflatten`."""
        shapes = self._shapes()
        if len(layers) != len(shapes):
            raise DimensionMismatch(f"expected {len(shapes)} layers, got {len(layers)}")
        parts = []
        for (W, b), (wshape, bshape) in zip(layers, shapes):
            W = np.asarray(W, dtype=np.float64)
            b = np.asarray(b, dtype=np.float64)
            if W.shape != wshape or b.shape != bshape:
                raise DimensionMismatch(
                    f"layer shapes {W.shape}/{b.shape} do not match {wshape}/{bshape}"
                )
            parts.append(W.ravel())
            parts.append(b)
        return np.concatenate(parts)

    def init_params(self, rng, scale=1.0):
        """Draw ``w ~ N(0, scale^2 I)``."""
        return scale * rng.standard_normal(self.n_params)

    def _check_inputs(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise DimensionMismatch(
                f"inputs must have {self.input_dim} columns, got shape {X.shape}"
            )
        return X

    def forward(self, w, X):
        """Network outputs, shape ``(n, output_dim)``."""
        X = self._check_inputs(X)
        layers = self.unflatten(w)
        h = X
        for W, b in layers[:-1]:
            h = _act(self.activation, h @ W + b)
        W, b = layers[-1]
        return h @ W + b

    def _forward_cache(self, layers, X):
        pre, post = [], [X]
        h = X
        for W, b in layers[:-1]:
            a = h @ W + b
            h = _act(self.activation, a)
            pre.append(a)
            post.append(h)
        W, b = layers[-1]
        return pre, post, h @ W + b

    def vjp(self, w, X, cotangent):
        """Return ``sum_{i,a} cotangent[i, a] * d f_a(x_i; w) / d w``."""
        X = self._check_inputs(X)
        cot = np.asarray(cotangent, dtype=np.float64)
        if cot.ndim == 1:
            cot = cot[:, None]
        if cot.shape != (X.shape[0], self.output_dim):
            raise DimensionMismatch(
                f"cotangent shape {cot.shape} does not match output shape "
                f"{(X.shape[0], self.output_dim)}"
            )
        layers = self.unflatten(w)
        pre, post, _ = self._forward_cache(layers, X)
        grads = [None] * len(layers)
        delta = cot
        for li in range(len(layers) - 1, -1, -1):
            W, _ = layers[li]
            grads[li] = (post[li].T @ delta, delta.sum(axis=0))
            if li > 0:
                back = delta @ W.T
                delta = back * _act_grad(self.activation, pre[li - 1], post[li])
        return self.flatten(grads)

    def forward_and_vjp(self, w, X, cotangent_fn):
        """Evaluate ``f = forward(w, X)`` then ``vjp(w, X, cotangent_fn(f))``.

        Shares one forward pass between the output and the backward sweep.
        Returns ``(f, grad)``.
        """
        X = self._check_inputs(X)
        layers = self.unflatten(w)
        pre, post, out = self._forward_cache(layers, X)
        delta = np.asarray(cotangent_fn(out), dtype=np.float64)
        if delta.shape != out.shape:
            raise DimensionMismatch(f"cotangent shape {delta.shape} != output shape {out.shape}")
        grads = [None] * len(layers)
        for li in range(len(layers) - 1, -1, -1):
            W, _ = layers[li]
            grads[li] = (post[li].T @ delta, delta.sum(axis=0))
            if li > 0:
                delta = (delta @ W.T) * _act_grad(self.activation, pre[li - 1], post[li])
        return out, self.flatten(grads)


class ConstantModel:
    """``f(x; w) = w`` for every input: one parameter, scalar output.

    Exists so the functional samplers can be checked against their
    parameter-space counterparts, where the two coincide algebraically.
    """

    n_params = 1
    output_dim = 1

    def __init__(self, input_dim=1):
        self.input_dim = int(input_dim)

    def forward(self, w, X):
        X = np.asarray(X, dtype=np.float64)
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (1,):
            raise DimensionMismatch("ConstantModel has exactly one parameter")
        return np.full((X.shape[0], 1), w[0])

    def vjp(self, w, X, cotangent):
        cot = np.asarray(cotangent, dtype=np.float64)
        if cot.ndim == 1:
            cot = cot[:, None]
        if cot.shape != (np.shape(X)[0], 1):
            raise DimensionMismatch("cotangent shape does not match output shape")
        return np.array([cot.sum()])

    def forward_and_vjp(self, w, X, cotangent_fn):
        out = self.forward(w, X)
        return out, self.vjp(w, X, cotangent_fn(out))

    def init_params(self, rng, scale=1.0):
        return scale * rng.standard_normal(1)
