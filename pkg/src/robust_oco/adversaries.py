"""Gradient-stream generators and the fragile wealth-based baseline learner.

Interactive adversaries receive the played iterate before emitting the round's
(true, observed) gradient pair; the lower-bound constructions are oblivious
and pre-materialized. Every generator declares the corruption budget its
stream satisfies and the gradient bound it respects, so the harness can
configure protocols without peeking at generator internals.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .core import OnlineLearner, as_vector

ADVERSARY_KINDS = (
    "sign_flip_window",
    "lb_theorem2",
    "lb_origin",
    "dro_reweight",
    "iid_random",
)


@dataclass
class AdversarySpec:
    """Declarative description of a gradient stream, serializable by the harness."""

    kind: str
    T: int
    k: int = 0
    window_start: int = 1
    D: float = 1.0
    seed: int = 0
    dim: int = 1
    G: float = 1.0
    epsilon: float = 1.0

    def __post_init__(self):
        if self.kind not in ADVERSARY_KINDS:
            raise ValueError(f"unknown adversary kind {self.kind!r}")
        if self.T < 1 or self.k < 0 or self.dim < 1:
            raise ValueError("T must be >= 1, k and dim nonnegative")


class Adversary(ABC):
    """One corrupted gradient stream: true/observed pairs plus metadata."""

    comparator: np.ndarray | None = None
    budget: int = 0  # corruption budget the emitted stream satisfies
    lipschitz_bound: float = 1.0

    @abstractmethod
    def round(self, t: int, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return (g_true, g_observed) for round t (1-indexed)."""

    def loss_gap(self, w: np.ndarray, u: np.ndarray) -> float | None:
        """Per-round loss difference l(w) - l(u) when a loss oracle exists."""
        return None


class SignFlipAdversary(Adversary):
    """Absolute-loss stream |w - 1| with the observed sign flipped in a window.

    The subgradient at the kink w = 1 is fixed to -1 so runs are reproducible.
    """

    def __init__(self, T: int, k: int, window_start: int):
        if k > 0 and not (1 <= window_start and window_start + k - 1 <= T):
            raise ValueError("corruption window must fit inside the horizon")
        self.T = T
        self.k = k
        self.window_start = window_start
        self.comparator = np.array([1.0])
        self.budget = k
        self.lipschitz_bound = 1.0

    def round(self, t, w):
        g = np.array([1.0 if float(w[0]) > 1.0 else -1.0])
        corrupted = self.k > 0 and self.window_start <= t < self.window_start + self.k
        return g, (-g if corrupted else g)

    def loss_gap(self, w, u):
        return abs(float(w[0]) - 1.0) - abs(float(u[0]) - 1.0)


class IIDRandomAdversary(Adversary):
    """Uncorrupted stream of random gradients drawn from the radius-G ball."""

    def __init__(self, T: int, G: float, seed, dim: int = 1):
        rng = np.random.default_rng(seed)
        directions = rng.standard_normal((T, dim))
        norms = np.linalg.norm(directions, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        radii = G * rng.uniform(0.0, 1.0, size=(T, 1))
        self._g = directions / norms * radii
        self.budget = 0
        self.lipschitz_bound = G

    def round(self, t, w):
        g = self._g[t - 1]
        return g, g


class LBTheorem2Adversary(Adversary):
    """Matched lower-bound stream: k zeroed-out rounds aligned against random signs.

    The observed stream hides the first k gradients (reports zero); the true
    gradients there all point along the sign of the remaining random-sign sum,
    making the constructed comparator pay D per hidden round in expectation.
    Ties of the random-sign sum break toward +1.
    """

    def __init__(self, T: int, k: int, D: float, seed: int, dim: int = 1):
        if k >= T:
            raise ValueError("budget k must be smaller than the horizon")
        rng = np.random.default_rng(seed)
        z_tail = rng.integers(0, 2, size=T - k) * 2 - 1
        tail_sign = 1.0 if z_tail.sum() >= 0 else -1.0
        z = np.concatenate([np.full(k, tail_sign), z_tail.astype(np.float64)])
        q = np.zeros(dim)
        q[0] = 1.0
        self._g = z[:, None] * q[None, :]
        self._g_tilde = self._g.copy()
        self._g_tilde[:k] = 0.0
        self.comparator = -D * tail_sign * q
        self.budget = k
        self.lipschitz_bound = 1.0

    def round(self, t, w):
        return self._g[t - 1], self._g_tilde[t - 1]


class LBOriginAdversary(Adversary):
    """Log-factor lower-bound stream built around an exponentially far comparator.

    The observed stream is the constant first basis vector; on the last k
    rounds the true gradient subtracts the unit comparator direction. The
    comparator magnitude 2*epsilon*e^T overflows quickly, hence the hard
    horizon cap.
    """

    MAX_T = 30

    def __init__(self, T: int, k: int, epsilon: float, dim: int = 1):
        if T > self.MAX_T:
            raise ValueError(f"horizon {T} exceeds the overflow guard {self.MAX_T}")
        if k > T:
            raise ValueError("budget k cannot exceed the horizon")
        e1 = np.zeros(dim)
        e1[0] = 1.0
        self._g_tilde = np.tile(e1, (T, 1))
        self._g = self._g_tilde.copy()
        self._g[T - k:] -= e1  # unit comparator direction equals e1
        self.comparator = 2.0 * epsilon * math.exp(T) * e1
        self.budget = k
        self.lipschitz_bound = 1.0

    def round(self, t, w):
        return self._g[t - 1], self._g_tilde[t - 1]


class DROReweightAdversary(Adversary):
    """Importance-reweighting corruption: observed gradients are (p_t/q_t) g_t.

    The weight vector boosts k random coordinates to 2/T and shaves the rest,
    keeping total variation to uniform exactly k/T; the normalized deviation
    budget of the emitted stream is then at most 2k.
    """

    def __init__(self, T: int, k: int, seed, base: Adversary):
        if T < 2 * k:
            raise ValueError("reweighting construction needs T >= 2k")
        rng = np.random.default_rng(seed)
        weights = np.full(T, 1.0 / T)
        if k > 0:
            boosted = rng.choice(T, size=k, replace=False)
            weights[:] = 1.0 / T - k / (T * (T - k))
            weights[boosted] = 2.0 / T
        self.weights = weights
        self._base = base
        self.budget = 2 * k
        self.lipschitz_bound = base.lipschitz_bound
        self.comparator = base.comparator

    def round(self, t, w):
        g, _ = self._base.round(t, w)
        return g, (self.weights[t - 1] * len(self.weights)) * g

    def loss_gap(self, w, u):
        return self._base.loss_gap(w, u)

    def tv_to_uniform(self) -> float:
        return 0.5 * float(np.abs(self.weights - 1.0 / len(self.weights)).sum())


def random_sign_expectation(T: int) -> float:
    """Exact E|sum of T fair signs| by exhaustive enumeration of all 2^T sequences.

    Equals the expectation of the aligned sum sign(S) * S; refuses T > 20
    where enumeration stops being exact-and-cheap.
    """
    if not (1 <= T <= 20):
        raise ValueError("exhaustive enumeration supports 1 <= T <= 20 only")
    codes = np.arange(1 << T, dtype=np.uint32)
    ones = np.zeros(1 << T, dtype=np.int64)
    for b in range(T):
        ones += (codes >> b) & 1
    total = int(np.abs(2 * ones - T).sum())
    return total / float(1 << T)


def make_adversary(spec: AdversarySpec, seed: int | None = None) -> Adversary:
    """Instantiate the stream described by spec, optionally overriding its seed."""
    s = spec.seed if seed is None else seed
    if spec.kind == "sign_flip_window":
        return SignFlipAdversary(spec.T, spec.k, spec.window_start)
    if spec.kind == "lb_theorem2":
        return LBTheorem2Adversary(spec.T, spec.k, spec.D, s, spec.dim)
    if spec.kind == "lb_origin":
        return LBOriginAdversary(spec.T, spec.k, spec.epsilon, spec.dim)
    if spec.kind == "dro_reweight":
        # one splittable root stream per experiment: independent child
        # streams for the base gradients and the reweighting draw
        base_stream, weight_stream = np.random.default_rng(s).spawn(2)
        base = IIDRandomAdversary(spec.T, spec.G, base_stream, spec.dim)
        return DROReweightAdversary(spec.T, spec.k, weight_stream, base)
    if spec.kind == "iid_random":
        return IIDRandomAdversary(spec.T, spec.G, s, spec.dim)
    raise ValueError(f"unknown adversary kind {spec.kind!r}")


class KTBettor(OnlineLearner):
    """Classical wealth-based parameter-free learner (the fragile baseline).

    Bets a fraction of accumulated wealth proportional to the sign average of
    past gradients. Requires |g| <= 1; the wealth stays positive under that
    contract and going nonpositive is treated as a hard error.
    """

    def __init__(self, epsilon: float = 1.0):
        if epsilon <= 0:
            raise ValueError("initial wealth must be positive")
        self.epsilon = epsilon
        self.reset()

    def reset(self) -> None:
        self.sum_neg_grad = 0.0
        self.reward = 0.0
        self.t = 0
        self.w = 0.0

    def predict(self) -> np.ndarray:
        return np.array([self.w])

    def observe(self, gradient, hint: float = 1.0) -> None:
        g = float(as_vector(gradient, 1)[0])
        if abs(g) > 1.0 + 1e-12:
            raise ValueError(f"KT bettor requires |g| <= 1, got {g}")
        self.reward += -g * self.w
        self.sum_neg_grad += -g
        self.t += 1
        wealth = self.epsilon + self.reward
        if wealth <= 0.0:
            raise RuntimeError(f"KT wealth went nonpositive ({wealth}) at t={self.t}")
        self.w = self.sum_neg_grad / (self.t + 1) * wealth
