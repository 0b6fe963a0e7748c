"""Query criteria, the randomised variable threshold and the budget estimator."""

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError


@dataclass
class VariableThreshold:
    """Multiplicative query threshold, kept inside ``[theta_min, theta_max]``."""

    theta: float = 1.0
    step: float = 0.01
    std: float = 1.0
    theta_min: float = 1e-6
    theta_max: float = 1.0

    def __post_init__(self):
        if self.step <= 0 or self.std < 0:
            raise ConfigurationError("step must be > 0 and std >= 0")
        if not 0 < self.theta_min <= self.theta <= self.theta_max:
            raise ConfigurationError("need 0 < theta_min <= theta <= theta_max")


@dataclass
class QueryDecision:
    query: bool
    value: float
    theta_after: float


@dataclass
class BudgetTracker:
    """Fading estimate of the fraction of recent instances that were labelled.

    ``u_hat`` decays by ``(window - 1) / window`` per step and grows by one per
    query, so ``b_hat = u_hat / window`` tracks the query rate over roughly the
    last ``window`` steps.
    """

    budget: float
    window: int = 300
    u_hat: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.budget <= 1.0:
            raise ConfigurationError("budget must lie in [0, 1]")
        if self.window <= 1:
            raise ConfigurationError("window must be > 1")

    @property
    def decay(self):
        return (self.window - 1) / self.window

    @property
    def b_hat(self):
        return self.u_hat / self.window


def criterion_uncertainty(class_probabilities):
    """Best prediction probability; low values mean an uncertain instance."""
    return float(np.max(class_probabilities))


def criterion_density_s1(x, memory, s1, predicted_class):
    """Highest first-network similarity between ``x`` and the predicted queue."""
    queue = memory.queues[predicted_class]
    if len(queue) == 0:
        return 0.0
    X = np.vstack(queue)
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    return float(s1.pair_prob(np.repeat(x, len(X), axis=0), X).max())


def criterion_density_duo(query_encoding, enc_memory, s2, predicted_class):
    """Highest second-network similarity between the query encoding and the
    stored encodings of the predicted class."""
    Z = enc_memory.per_class[predicted_class]
    if len(Z) == 0:
        return 0.0
    z = np.asarray(query_encoding, dtype=np.float64).reshape(1, -1)
    return float(s2.distance_prob(np.abs(Z - z)).max())


def rvus_decide(value, threshold, rng):
    """Randomised variable-threshold decision.

    Draws ``eta ~ N(1, std^2)`` and queries when ``value < theta * eta``. The
    threshold shrinks by ``(1 - step)`` after a query and grows by
    ``(1 + step)`` otherwise. ``threshold`` is not modified; the caller commits
    ``theta_after``.
    """
    eta = rng.normal(1.0, threshold.std) if threshold.std > 0 else 1.0
    query = bool(value < threshold.theta * eta)
    factor = (1.0 - threshold.step) if query else (1.0 + threshold.step)
    theta = min(max(threshold.theta * factor, threshold.theta_min), threshold.theta_max)
    return QueryDecision(query, float(value), theta)


def budget_update(tracker, queried):
    tracker.u_hat = tracker.decay * tracker.u_hat + (1.0 if queried else 0.0)
    return tracker


def budget_allows(tracker):
    return tracker.b_hat < tracker.budget
