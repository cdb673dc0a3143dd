"""Bandit linear optimization over rankings via exponential weights.

The learner keeps one score per item.  Each round it either explores with a
uniformly random ranking (probability gamma) or samples from the sequential
softmax model at the current scores, observes only the scalar loss of the
played ranking, and turns it into an unbiased estimate of the per-item loss
profile through the pseudo-inverse of the play distribution's vertex
covariance.  Scores then move one gradient step against the estimate.

Actions are centered position vectors: item v at rank r maps to coordinate
r - (n+1)/2, so the scalar loss of a ranking is a plain dot product with
the loss profile.
"""

from __future__ import annotations

import dataclasses
import math
import warnings

import numpy as np

from . import numerics
from . import perm_core
from . import plackett_luce

DEFAULT_C_ETA = 4.0
DEFAULT_C_GAMMA = 1.0

_LOSS_TOL = 1e-9


@dataclasses.dataclass(frozen=True)
class BanditRankParams:
    eta: float
    gamma: float

    def __post_init__(self) -> None:
        if not (self.eta > 0.0 and math.isfinite(self.eta)):
            raise ValueError(f"eta must be positive and finite, got {self.eta}")
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")


@dataclasses.dataclass
class BanditRankState:
    """Mutable per-run state: item scores, round counter, knobs."""

    w: np.ndarray
    t: int
    params: BanditRankParams


def default_params(
    n: int,
    t_horizon: int,
    c_eta: float = DEFAULT_C_ETA,
    c_gamma: float = DEFAULT_C_GAMMA,
) -> BanditRankParams:
    """Horizon-tuned defaults.

    gamma = min(1, c_gamma * n^{3/2} / sqrt(T)) balances exploration against
    the exploitation rounds; eta = gamma / (c_eta * n) then keeps every
    clipped estimate step small enough that the scores cannot run away.
    """
    if n < 2:
        raise ValueError(f"need at least two items, got n={n}")
    if t_horizon < 1:
        raise ValueError(f"horizon must be at least 1, got {t_horizon}")
    gamma = min(1.0, c_gamma * n ** 1.5 / math.sqrt(float(t_horizon)))
    return BanditRankParams(eta=gamma / (c_eta * n), gamma=gamma)


def init_state(n: int, params: BanditRankParams) -> BanditRankState:
    if n < 2:
        raise ValueError(f"need at least two items, got n={n}")
    if params.eta > params.gamma / (DEFAULT_C_ETA * n) + 1e-12:
        warnings.warn(
            "eta exceeds gamma/(4n); score updates may become unstable",
            RuntimeWarning,
            stacklevel=2,
        )
    return BanditRankState(w=np.zeros(n), t=0, params=params)


def mixture_covariance(w: np.ndarray, gamma: float) -> np.ndarray:
    """Vertex covariance of the gamma-explored play distribution."""
    if not (0.0 <= gamma <= 1.0):
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    n = np.asarray(w).shape[0]
    uniform = plackett_luce.uniform_covariance(n)
    if gamma >= 1.0:
        return uniform
    return gamma * uniform + (1.0 - gamma) * plackett_luce.pl_covariance(w)


def draw_action(state: BanditRankState, rng: np.random.Generator) -> np.ndarray:
    """Sample a centered position vector from the explored play distribution."""
    if rng.random() < state.params.gamma:
        return perm_core.center(perm_core.random_permutation(state.w.shape[0], rng))
    return plackett_luce.sample_pl(state.w, rng)


def estimate_loss(cov: np.ndarray, action: np.ndarray, loss: float) -> np.ndarray:
    """One-sample estimate loss * pinv(cov) @ action of the loss profile.

    Unbiased over the play distribution: E[action action'] = cov, and both
    the action and the true profile's observable part live on the range of
    cov (the zero-sum hyperplane).
    """
    loss = float(loss)
    if abs(loss) > 1.0 + _LOSS_TOL:
        raise ValueError(f"scalar loss {loss!r} breaks the unit bound")
    return loss * (numerics.pseudo_inverse(cov) @ np.asarray(action, dtype=float))


def clip_bound(n: int, gamma: float) -> float:
    """Largest magnitude a unit-loss estimate coordinate can reach.

    ||pinv(cov)|| <= 12/(gamma*n*(n+1)) on the zero-sum hyperplane and the
    played vertex has norm sqrt(n(n^2-1)/12), which multiply out to
    sqrt(12(n-1)/(n(n+1)))/gamma.
    """
    if n < 2:
        raise ValueError(f"need at least two items, got n={n}")
    if not (0.0 < gamma <= 1.0):
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    return math.sqrt(12.0 * (n - 1) / (n * (n + 1.0))) / gamma


def clip_to_bound(est: np.ndarray, bound: float) -> tuple[np.ndarray, bool]:
    """Clamp estimate coordinates into [-bound, bound]; flag if anything moved."""
    arr = np.asarray(est, dtype=float)
    clipped = np.clip(arr, -bound, bound)
    return clipped, bool(np.any(clipped != arr))


def update(state: BanditRankState, estimate: np.ndarray) -> None:
    """One step of the scores against the estimated loss profile.

    High score means ranked early, and early positions carry the most
    negative centered coordinates, so raising the score of a lossy item
    steers the sampled rankings toward lower dot-product loss.
    """
    est = np.asarray(estimate, dtype=float)
    if est.shape != state.w.shape:
        raise ValueError("estimate length does not match the state")
    state.w = state.w + state.params.eta * est
    state.t += 1


class BanditRankLearner:
    """Bandit learner interface around the score state.

    clip_events counts the rounds whose estimate hit the safety clamp; the
    clamp only triggers on numerically degenerate covariances, so a nonzero
    count is a health signal, not part of the algorithm.
    """

    def __init__(self, n: int, params: BanditRankParams) -> None:
        self.n = int(n)
        self.params = params
        self.state = init_state(self.n, params)
        self.clip_events = 0
        self._pending: np.ndarray | None = None

    def propose(self, rng: np.random.Generator) -> np.ndarray:
        if self._pending is not None:
            raise RuntimeError("propose called twice without observe")
        action = draw_action(self.state, rng)
        self._pending = action
        return action

    def observe(self, loss: float) -> None:
        if self._pending is None:
            raise RuntimeError("observe called before propose")
        action, self._pending = self._pending, None
        loss = float(loss)
        cov = mixture_covariance(self.state.w, self.params.gamma)
        est = estimate_loss(cov, action, loss)
        bound = abs(loss) * clip_bound(self.n, self.params.gamma)
        est, changed = clip_to_bound(est, bound)
        if changed:
            self.clip_events += 1
        update(self.state, est)


class StandardActionAdapter:
    """Expose a centered-action learner to a raw-position environment.

    propose returns one-based positions; observe takes the raw loss
    <s, positions> plus sum(s) and removes the constant offset that the
    centered learner never sees.
    """

    def __init__(self, learner: BanditRankLearner) -> None:
        self.learner = learner

    def propose(self, rng: np.random.Generator) -> np.ndarray:
        centered = self.learner.propose(rng)
        return np.rint(perm_core.uncenter(centered)).astype(np.int64)

    def observe(self, loss: float, loss_sum: float = 0.0) -> None:
        n = self.learner.n
        self.learner.observe(float(loss) - (n + 1) / 2.0 * float(loss_sum))
