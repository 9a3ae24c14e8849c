"""SGD, Adam and RMSprop updates applied in place to a list of parameter arrays."""

from __future__ import annotations

import numpy as np

OPTIMISERS = ("sgd", "adam", "rmsprop")


class Optimiser:
    """Stateful first-order optimiser.

    SGD and RMSprop use a classical momentum buffer ``v <- m*v - lr*step``. Adam
    keeps bias-corrected first and second moment estimates and never reads
    ``momentum``.
    """

    def __init__(self, kind, lr, momentum=0.0, eps=1e-8, beta1=0.9, beta2=0.999, rho=0.9):
        kind = kind.lower()
        if kind not in OPTIMISERS:
            raise ValueError(f"optimiser must be one of {OPTIMISERS}, got {kind!r}")
        if not lr > 0:
            raise ValueError(f"learning rate must be positive, got {lr!r}")
        self.kind = kind
        self.lr = lr
        self.momentum = momentum
        self.eps = eps
        self.beta1 = beta1
        self.beta2 = beta2
        self.rho = rho
        self.t = 0
        self._slots = None

    def _init_slots(self, params):
        zeros = lambda: [np.zeros_like(p) for p in params]
        if self.kind == "sgd":
            self._slots = {"velocity": zeros()}
        elif self.kind == "adam":
            self._slots = {"m": zeros(), "v": zeros()}
        else:
            self._slots = {"sq": zeros(), "velocity": zeros()}

    @property
    def state(self):
        return {"t": self.t, **(self._slots or {})}

    def step(self, params, grads):
        """Update ``params`` in place. Returns False (and changes nothing) if any
        gradient is non-finite."""
        if not all(np.all(np.isfinite(g)) for g in grads):
            return False
        if self._slots is None:
            self._init_slots(params)
        self.t += 1
        getattr(self, f"_step_{self.kind}")(params, grads)
        return True

    def _step_sgd(self, params, grads):
        for p, g, v in zip(params, grads, self._slots["velocity"]):
            if self.momentum:
                v *= self.momentum
                v -= self.lr * g
                p += v
            else:
                p -= self.lr * g

    def _step_adam(self, params, grads):
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(params, grads, self._slots["m"], self._slots["v"]):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def _step_rmsprop(self, params, grads):
        for p, g, s, vel in zip(params, grads, self._slots["sq"], self._slots["velocity"]):
            s *= self.rho
            s += (1.0 - self.rho) * (g * g)
            update = g / (np.sqrt(s) + self.eps)
            if self.momentum:
                vel *= self.momentum
                vel -= self.lr * update
                p += vel
            else:
                p -= self.lr * update


def optimiser_step(optimiser, params, grads):
    """Functional alias for :meth:`Optimiser.step`."""
    return optimiser.step(params, grads)
