"""Two-layer perceptron trained by plain per-sample gradient descent.

Biases are folded into the weight matrices by appending a constant 1 to the
input vector and to the hidden activation vector, so ``W1`` has shape
``(n_in + 1, n_hidden)`` and ``W2`` has shape ``(n_hidden + 1, n_out)``.
"""
from __future__ import annotations

import numpy as np


def bipolar_sigmoid(x):
    """``(1 - exp(-x)) / (1 + exp(-x))``, evaluated as ``tanh(x / 2)``."""
    return np.tanh(0.5 * np.asarray(x, dtype=float))


def bipolar_sigmoid_prime_from_output(f):
    """Derivative of the bipolar sigmoid expressed through its output ``f``."""
    return 0.5 * (1.0 - f * f)


def bipolar_sigmoid_prime(x):
    return bipolar_sigmoid_prime_from_output(bipolar_sigmoid(x))


class Mlp:
    """Input -> bipolar-sigmoid hidden layer -> output layer.

    Parameters
    ----------
    n_in, n_hidden, n_out : int
        Layer widths (the bias inputs are not counted).
    eta : float
        Learning rate.
    rng : numpy.random.Generator or int, optional
        Source for the uniform ``[-init_scale, init_scale]`` initial weights.
    linear_output : bool
        Use an identity output node instead of the bipolar sigmoid.
    """

    def __init__(self, n_in, n_hidden, n_out, eta=0.01, rng=None, linear_output=False,
                 init_scale=0.5):
        rng = np.random.default_rng(rng)
        self.n_in, self.n_hidden, self.n_out = n_in, n_hidden, n_out
        self.eta = eta
        self.linear_output = linear_output
        self.W1 = rng.uniform(-init_scale, init_scale, size=(n_in + 1, n_hidden))
        self.W2 = rng.uniform(-init_scale, init_scale, size=(n_hidden + 1, n_out))
        self.u = None
        self.net1 = self.o0 = self.net2 = self.o1 = None

    @classmethod
    def zeros(cls, n_in, n_hidden, n_out, eta=0.01, linear_output=False):
        net = cls(n_in, n_hidden, n_out, eta=eta, linear_output=linear_output, init_scale=0.0)
        return net

    def forward(self, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.n_in:
            raise ValueError(f"expected {self.n_in} inputs, got {x.size}")
        self.u = np.append(x, 1.0)
        self.net1 = self.W1.T @ self.u
        self.o0 = np.append(bipolar_sigmoid(self.net1), 1.0)
        self.net2 = self.W2.T @ self.o0
        self.o1 = self.net2.copy() if self.linear_output else bipolar_sigmoid(self.net2)
        return self.o1.copy()

    def _output_slope(self):
        if self.linear_output:
            return np.ones(self.n_out)
        return bipolar_sigmoid_prime_from_output(self.o1)

    def gradients(self, dE_do1):
        """Backpropagate ``dE/d(output)`` to ``(dE/dW1, dE/dW2)`` at the cached pass."""
        if self.o1 is None:
            raise RuntimeError("backward called before forward")
        delta2 = np.asarray(dE_do1, dtype=float).reshape(self.n_out) * self._output_slope()
        gW2 = np.outer(self.o0, delta2)
        delta1 = (self.W2[:-1] @ delta2) * bipolar_sigmoid_prime_from_output(self.o0[:-1])
        gW1 = np.outer(self.u, delta1)
        return gW1, gW2

    def apply(self, gW1, gW2):
        dW1 = -self.eta * gW1
        dW2 = -self.eta * gW2
        self.W2 += dW2
        self.W1 += dW1
        return dW1, dW2

    def backward(self, e_c, J_p, dU_dO=1.0):
        """One descent step on ``E = e_c**2 / 2`` through the plant and control law.

        ``J_p`` is the plant sensitivity ``dy/du`` and ``dU_dO`` the sensitivity
        of the control signal to each network output (scalar or length
        ``n_out``). Returns the applied ``(dW1, dW2)``.
        """
        dE_do1 = -e_c * J_p * np.broadcast_to(np.asarray(dU_dO, dtype=float), (self.n_out,))
        return self.apply(*self.gradients(dE_do1))

    def input_jacobian(self):
        """``d(output)/d(input)`` at the cached pass, shape (n_out, n_in)."""
        if self.o1 is None:
            raise RuntimeError("no cached forward pass")
        slope1 = bipolar_sigmoid_prime_from_output(self.o0[:-1])
        hidden = self.W1[:-1] * slope1  # (n_in, n_hidden)
        return (hidden @ self.W2[:-1] * self._output_slope()).T

    # --- snapshots -------------------------------------------------------

    def to_text(self):
        lines = [f"mlp {self.n_in} {self.n_hidden} {self.n_out} "
                 f"{int(self.linear_output)} {self.eta!r}"]
        for W in (self.W1, self.W2):
            lines.extend(" ".join(repr(float(v)) for v in row) for row in W)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        rows = [r for r in text.strip().splitlines() if r.strip()]
        tag, n_in, n_hidden, n_out, linear, eta = rows[0].split()
        if tag != "mlp":
            raise ValueError("not an mlp snapshot")
        n_in, n_hidden, n_out = int(n_in), int(n_hidden), int(n_out)
        net = cls.zeros(n_in, n_hidden, n_out, eta=float(eta), linear_output=bool(int(linear)))
        values = [[float(v) for v in r.split()] for r in rows[1:]]
        if len(values) != n_in + 1 + n_hidden + 1:
            raise ValueError("snapshot has the wrong number of weight rows")
        net.W1 = np.array(values[: n_in + 1]).reshape(n_in + 1, n_hidden)
        net.W2 = np.array(values[n_in + 1:]).reshape(n_hidden + 1, n_out)
        return net


def surrogate_loss(net, x, target, J_p, dU_dO):
    """``E = e_c**2 / 2`` for a linear surrogate plant ``y = J_p * sum(dU_dO * o)``."""
    y = J_p * float(np.dot(dU_dO, net.forward(x)))
    return 0.5 * (target - y) ** 2, target - y


def gradient_check(seed, n_in=3, n_hidden=8, n_out=3, h=1e-6, floor=1e-6):
    """Max elementwise relative error of :meth:`Mlp.backward`'s gradient.

    The network, input, surrogate plant and target are drawn from ``seed``
    and the reference is a central difference of the surrogate loss. Each
    entry's error is ``|analytic - numeric| / max(|analytic|, |numeric|, floor)``;
    the floor keeps entries that are zero up to rounding from dominating.
    """
    rng = np.random.default_rng(seed)
    net = Mlp(n_in, n_hidden, n_out, rng=rng, init_scale=1.0)
    x = rng.uniform(-2.0, 2.0, n_in)
    dU_dO = rng.uniform(-1.0, 1.0, n_out)
    J_p = rng.uniform(0.2, 2.0)
    target = rng.uniform(-1.0, 1.0)
    _, e_c = surrogate_loss(net, x, target, J_p, dU_dO)
    analytic = net.gradients(-e_c * J_p * dU_dO)
    worst = 0.0
    for W, g in zip((net.W1, net.W2), analytic):
        numeric = np.zeros_like(W)
        for idx in np.ndindex(W.shape):
            keep = W[idx]
            W[idx] = keep + h
            up = surrogate_loss(net, x, target, J_p, dU_dO)[0]
            W[idx] = keep - h
            down = surrogate_loss(net, x, target, J_p, dU_dO)[0]
            W[idx] = keep
            numeric[idx] = (up - down) / (2.0 * h)
        denom = np.maximum(np.maximum(np.abs(g), np.abs(numeric)), floor)
        worst = max(worst, float(np.max(np.abs(g - numeric) / denom)))
    return worst
