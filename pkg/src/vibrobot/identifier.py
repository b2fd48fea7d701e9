"""Online neural plant model (series-parallel NARX) and its input Jacobian."""
from __future__ import annotations

from collections import deque

import numpy as np

from .mlp import Mlp


class Identifier:
    """Predicts ``y(k)`` from ``u(k-1..k-n)`` and ``y(k-1..k-n)``.

    Regressors are divided by ``u_scale`` / ``y_scale`` before entering the
    network and the prediction is multiplied back by ``y_scale``. The output
    node is linear. Histories start zero-padded.
    """

    def __init__(self, order=2, hidden=8, eta=0.01, u_scale=1.0, y_scale=1.0, rng=None):
        if not (u_scale > 0 and y_scale > 0):
            raise ValueError("scale factors must be positive")
        self.order = order
        self.u_scale = float(u_scale)
        self.y_scale = float(y_scale)
        self.net = Mlp(2 * order, hidden, 1, eta=eta, rng=rng, linear_output=True)
        self.u_hist = deque([0.0] * order, maxlen=order)  # newest first
        self.y_hist = deque([0.0] * order, maxlen=order)
        self.y_hat = None

    def regressors(self):
        """Scaled network input ``[u(k-1), ..., u(k-n), y(k-1), ..., y(k-n)]``."""
        return np.concatenate([np.array(self.u_hist) / self.u_scale,
                               np.array(self.y_hist) / self.y_scale])

    def predict_from(self, regressors):
        return float(self.net.forward(regressors)[0]) * self.y_scale

    def predict(self):
        """One-step-ahead prediction of the plant output, in plant units."""
        self.y_hat = self.predict_from(self.regressors())
        return self.y_hat

    def train_step(self, y_actual):
        """SGD step on ``(y - y_hat)**2 / 2`` (scaled units); shifts ``y`` into the history.

        Returns the prediction error ``y_actual - y_hat``.
        """
        if self.y_hat is None:
            self.predict()
        err = float(y_actual) - self.y_hat
        # cached activations belong to the last predict()
        self.net.apply(*self.net.gradients(np.array([-err / self.y_scale])))
        self.y_hist.appendleft(float(y_actual))
        self.y_hat = None
        return err

    def observe_input(self, u):
        """Record the control value just applied to the plant."""
        self.u_hist.appendleft(float(u))

    def jacobian(self):
        """``d y_hat / d u(k-1)`` at the last forward pass, in plant units."""
        if self.net.o1 is None:
            raise RuntimeError("no forward pass cached")
        return float(self.net.input_jacobian()[0, 0]) * self.y_scale / self.u_scale

    def to_text(self):
        return (f"identifier {self.order} {self.u_scale!r} {self.y_scale!r}\n"
                + self.net.to_text())

    @classmethod
    def from_text(cls, text):
        head, rest = text.split("\n", 1)
        tag, order, u_scale, y_scale = head.split()
        if tag != "identifier":
            raise ValueError("not an identifier snapshot")
        ident = cls(int(order), 1, u_scale=float(u_scale), y_scale=float(y_scale))
        ident.net = Mlp.from_text(rest)
        return ident


def jacobian_check(seed, order=2, hidden=8, h=1e-6):
    """Relative error of :meth:`Identifier.jacobian` against a central difference.

    The identifier weights, scales and histories are drawn from ``seed``.
    """
    rng = np.random.default_rng(seed)
    ident = Identifier(order, hidden, u_scale=rng.uniform(0.5, 3.0), y_scale=rng.uniform(0.5, 2.0),
                       rng=rng)
    for _ in range(order):
        ident.observe_input(rng.uniform(-3.0, 3.0))
        ident.y_hist.appendleft(rng.uniform(-1.0, 1.0))
    r = ident.regressors()
    ident.predict()
    analytic = ident.jacobian()
    du = h / ident.u_scale  # perturb u(k-1) by h in plant units
    up = r.copy()
    up[0] += du
    down = r.copy()
    down[0] -= du
    numeric = (ident.predict_from(up) - ident.predict_from(down)) / (2.0 * h)
    return abs(analytic - numeric) / max(abs(numeric), 1e-12)


def linear_plant_demo(seed=0, steps=5000, gain=0.5, eta=0.01, order=2, hidden=8,
                      u_scale=2.0, y_scale=0.5, window=500):
    """Train an identifier online on ``y(k) = gain * u(k-1)`` under uniform random input.

    Returns ``(J, mse, power)``: the final Jacobian estimate, the mean-square
    prediction error over the last ``window`` steps and the output power.
    """
    data = np.random.default_rng(seed + 1000)
    ident = Identifier(order, hidden, eta, u_scale=u_scale, y_scale=y_scale, rng=seed)
    u = data.uniform(-1.0, 1.0, steps)
    errors = np.empty(steps)
    ys = np.empty(steps)
    prev = 0.0
    for k in range(steps):
        y = gain * prev
        ident.predict()
        errors[k] = ident.train_step(y)
        ys[k] = y
        ident.observe_input(u[k])
        prev = u[k]
    ident.predict()
    tail = errors[-window:]
    return ident.jacobian(), float(np.mean(tail ** 2)), float(np.var(ys))
