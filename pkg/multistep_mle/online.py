import logging

import numpy as np

from multistep_mle.errors import InsufficientDataError
from multistep_mle.estimate import (
    MIN_LEARNING_STEPS,
    check_delta,
    preliminary_from_values,
)
from multistep_mle.simulate import n_steps_for
from multistep_mle.stationary import FisherMatrix, fisher_quadrature

logger = logging.getLogger(__name__)


class OnlineOneStep:
    """Streaming one-step MLE-process.

    Observations are pushed one at a time. Until the learning window
    [0, T^delta] is filled the estimator only stores them; at its end the
    preliminary estimate and Fisher matrix are fixed, and from then on every
    push adds one term to the score sum, so the current estimate costs O(1)
    per observation.
    """

    def __init__(self, model, delta, T, h, x0, fisher_mode="quadrature"):
        self.model = model
        self.delta = check_delta("one_step", delta)
        self.h = float(h)
        self.T = float(T)
        self.n_total = n_steps_for(T, h)
        self.learning_steps = int(np.ceil(self.T ** self.delta / self.h - 1e-9))
        if self.learning_steps < MIN_LEARNING_STEPS:
            raise InsufficientDataError(
                f"learning window holds {self.learning_steps} steps, need at least {MIN_LEARNING_STEPS}"
            )
        if fisher_mode not in ("quadrature", "empirical"):
            raise ValueError(f"unknown fisher_mode '{fisher_mode}'")
        self.fisher_mode = fisher_mode
        self._learning = [float(x0)]
        self._last = float(x0)
        self._steps = 0
        self._sum = np.zeros(model.dim_param)
        self.preliminary = None
        self.fisher = None
        self.clamped = False

    @property
    def steps(self):
        return self._steps

    @property
    def tau(self):
        return self._steps / self.n_total

    @property
    def ready(self):
        return self.preliminary is not None

    def _finish_learning(self):
        values = np.array(self._learning[:self.learning_steps])
        self.preliminary, self.clamped = preliminary_from_values(self.model, values)
        if self.fisher_mode == "quadrature":
            self.fisher = fisher_quadrature(self.model, self.preliminary)
        else:
            grad = self.model.drift_grad(self.preliminary, values)
            s = self.model.sigma(values)
            outer = grad[:, :, None] * grad[:, None, :] / (s * s)[:, None, None]
            self.fisher = FisherMatrix.from_matrix(outer.mean(axis=0), self.preliminary, "empirical")
        self._learning = None
        logger.debug("Learning window closed after %d steps, preliminary %s",
                     self.learning_steps, self.preliminary.tolist())

    def push(self, x):
        """Record the next observation and return the current estimate (None while learning)."""
        if self._steps >= self.n_total:
            raise ValueError(f"horizon T={self.T} already reached")
        x = float(x)
        if self.ready:
            theta = self.preliminary
            prev = np.array([self._last])
            s = self.model.sigma(prev)
            grad = self.model.drift_grad(theta, prev) / (s * s)[:, None]
            innovation = (np.array([x]) - prev) - self.model.drift(theta, prev) * self.h
            self._sum = self._sum + (grad * innovation[:, None])[0]
        else:
            self._learning.append(x)
        self._last = x
        self._steps += 1
        if not self.ready and self._steps == self.learning_steps:
            self._finish_learning()
        return self.estimate

    def extend(self, values):
        for x in values:
            self.push(x)
        return self.estimate

    @property
    def estimate(self):
        if not self.ready:
            return None
        theta = self.preliminary + (self._sum @ self.fisher.inv.T) / (self._steps * self.h)
        return self.model.theta_space.clamp(theta)[0]
