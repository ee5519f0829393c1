import numpy as np

from . import autodiff as ad

_ACTIVATIONS = {"relu": ad.relu, "tanh": ad.tanh, None: None}


class Mlp:
    """Fully connected network: ReLU hidden layers, configurable output activation.

    Hidden layers use fan-in uniform initialisation; the output layer starts
    near zero (``±init_w``) so fresh heads emit small values.
    """

    def __init__(self, in_dim, hidden, out_dim, rng, out_activation=None, init_w=3e-3):
        if out_activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {out_activation!r}")
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.hidden = tuple(hidden)
        self.out_activation = out_activation
        self.weights = []
        self.biases = []
        dims = [in_dim, *self.hidden]
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(ad.parameter(rng.uniform(-bound, bound, (fan_in, fan_out))))
            self.biases.append(ad.parameter(rng.uniform(-bound, bound, (1, fan_out))))
        self.weights.append(ad.parameter(rng.uniform(-init_w, init_w, (dims[-1], out_dim))))
        self.biases.append(ad.parameter(rng.uniform(-init_w, init_w, (1, out_dim))))

    def params(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def __call__(self, x):
        x = ad.as_tensor(x)
        if x.shape[1] != self.in_dim:
            raise ad.ShapeError(f"Mlp expects {self.in_dim} input columns, got {x.shape[1]}")
        n = len(self.weights)
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            x = ad.matmul(x, w) + b
            if k < n - 1:
                x = ad.relu(x)
        act = _ACTIVATIONS[self.out_activation]
        return act(x) if act is not None else x

    def forward_np(self, x):
        """Tape-free forward pass on raw arrays (used for acting)."""
        x = np.asarray(x, dtype=np.float64)
        n = len(self.weights)
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            x = x @ w.data + b.data
            if k < n - 1:
                np.maximum(x, 0.0, out=x)
        if self.out_activation == "tanh":
            x = np.tanh(x)
        return x


def get_arrays(params):
    return [p.data.copy() for p in params]


def set_arrays(params, arrays):
    if len(params) != len(arrays):
        raise ValueError(f"{len(arrays)} arrays for {len(params)} parameters")
    for p, a in zip(params, arrays):
        a = np.asarray(a, dtype=np.float64)
        if a.shape != p.data.shape:
            raise ValueError(f"shape mismatch: parameter {p.data.shape}, array {a.shape}")
        p.data = a.copy()


def soft_update(target, online, tau):
    """``target <- (1 - tau) * target + tau * online`` over parallel parameter lists."""
    for t, o in zip(target, online):
        t.data *= 1.0 - tau
        t.data += tau * o.data
