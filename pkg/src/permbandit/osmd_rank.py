"""Online stochastic mirror descent over the scaled ranking polytope.

The learner keeps a fractional point x inside the polytope of scaled
position profiles (coordinates in [-1, 1], zero sum, sorted prefix sums
bounded by i*(n-i)/(n-1)).  Each round it shrinks x toward the centre,
splits the shrunk point into a convex combination of at most n vertices,
plays one of them, and feeds a one-sample loss estimate through a mirror
step with the two-sided entropy regularizer

    F(x) = 1/2 * sum_j ((1 + x_j) log(1 + x_j) + (1 - x_j) log(1 - x_j)),

whose componentwise link is artanh.  The Bregman projection back onto the
polytope partitions the sorted point into contiguous blocks; every block is
shifted in link space by one common delta so that its prefix constraint
holds with equality, and the deltas increase strictly from block to block.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable

import numpy as np

from . import _kernels

INTERIOR_EPS = 1e-12
DEFAULT_C_ETA = 1.0
DEFAULT_C_GAMMA = 1.0

_MEMBERSHIP_TOL = 1e-9
_LOSS_TOL = 1e-9


@dataclasses.dataclass(frozen=True)
class OsmdParams:
    """Step size and shrink factor for one mirror-descent run."""

    eta: float
    gamma: float

    def __post_init__(self) -> None:
        if not (self.eta > 0.0 and math.isfinite(self.eta)):
            raise ValueError(f"eta must be positive and finite, got {self.eta}")
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")


@dataclasses.dataclass
class OsmdState:
    """Mutable per-run state: the mirror point, the round counter, knobs."""

    x: np.ndarray
    t: int
    params: OsmdParams


@dataclasses.dataclass(frozen=True)
class ConvexCombination:
    """Vertices (rows) and matching convex weights for one polytope point."""

    vertices: np.ndarray
    weights: np.ndarray

    def sample_index(self, rng: np.random.Generator) -> int:
        w = np.clip(self.weights, 0.0, None)
        cw = np.cumsum(w)
        total = float(cw[-1])
        if not (math.isfinite(total) and total > 0.0):
            raise ValueError("weights do not form a sampleable distribution")
        r = rng.random() * total
        return min(int(np.searchsorted(cw, r, side="right")), cw.shape[0] - 1)


def default_params(
    n: int,
    t_horizon: int,
    c_eta: float = DEFAULT_C_ETA,
    c_gamma: float = DEFAULT_C_GAMMA,
) -> OsmdParams:
    """Horizon-tuned defaults: eta = c_eta*n/sqrt(T), gamma = min(1, c_gamma/sqrt(T))."""
    if n < 2:
        raise ValueError(f"need at least two items, got n={n}")
    if t_horizon < 1:
        raise ValueError(f"horizon must be at least 1, got {t_horizon}")
    root_t = math.sqrt(float(t_horizon))
    return OsmdParams(eta=c_eta * n / root_t, gamma=min(1.0, c_gamma / root_t))


def init_state(n: int, params: OsmdParams) -> OsmdState:
    if n < 2:
        raise ValueError(f"need at least two items, got n={n}")
    return OsmdState(x=np.zeros(n), t=0, params=params)


def _as_point(x: object) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.shape[0] == 0:
        raise ValueError("expected a nonempty flat coordinate vector")
    if not np.all(np.isfinite(arr)):
        raise ValueError("coordinates must be finite")
    return arr


def regularizer_F(x: object) -> float:
    """Two-sided entropy of a point in the closed unit cube."""
    arr = _as_point(x)
    if np.max(np.abs(arr)) > 1.0:
        raise ValueError("regularizer domain is the closed unit cube")
    with np.errstate(divide="ignore", invalid="ignore"):
        plus = (1.0 + arr) * np.log1p(arr)
        minus = (1.0 - arr) * np.log1p(-arr)
    # 0 * log(0) = 0 on the faces
    plus = np.where(arr == -1.0, 0.0, plus)
    minus = np.where(arr == 1.0, 0.0, minus)
    return 0.5 * float(np.sum(plus + minus))


def link(x: object) -> np.ndarray:
    """Gradient of the regularizer, componentwise artanh; needs |x| < 1."""
    arr = _as_point(x)
    if np.max(np.abs(arr)) >= 1.0:
        raise ValueError("link needs a point strictly inside the unit cube")
    return np.arctanh(arr)


def link_inv(y: object) -> np.ndarray:
    """Inverse link, componentwise tanh clamped strictly inside the cube."""
    arr = _as_point(y)
    return np.clip(np.tanh(arr), -1.0 + INTERIOR_EPS, 1.0 - INTERIOR_EPS)


def bregman_divergence(p: object, q: object) -> float:
    """Divergence induced by the regularizer; q must be strictly interior."""
    p_arr = _as_point(p)
    q_arr = _as_point(q)
    if p_arr.shape != q_arr.shape:
        raise ValueError("points must share a length")
    gap = regularizer_F(p_arr) - regularizer_F(q_arr)
    return gap - float(np.dot(link(q_arr), p_arr - q_arr))


def prefix_bounds(n: int) -> np.ndarray:
    """Upper bounds b_i = i*(n-i)/(n-1) on descending prefix sums, i = 1..n."""
    if n < 2:
        raise ValueError(f"need at least two items, got n={n}")
    i = np.arange(1, n + 1, dtype=float)
    return i * (n - i) / (n - 1.0)


def delta_solve(q_block: object, target: float) -> float:
    """Shift delta with sum(tanh(artanh(q_j) - delta)) equal to target.

    The block sum is strictly decreasing in delta, so the root is unique
    whenever the target sits inside the attainable open range
    (-len(q), len(q)).
    """
    q = _as_point(q_block)
    if np.max(np.abs(q)) >= 1.0:
        raise ValueError("block values must be strictly inside the unit cube")
    y = np.arctanh(q)
    span = math.atanh(1.0 - 1e-12) + 1.0
    lo0 = float(np.min(y)) - span
    hi0 = float(np.max(y)) + span
    root, flag = _kernels._block_root(
        y, 0, y.shape[0], lo0, hi0, float(target), 1e-12, 200
    )
    if flag != 0:
        raise ValueError(
            f"target {target!r} is outside the attainable range of the block"
        )
    return float(root)


def project(q: object) -> np.ndarray:
    """Bregman projection of a strictly interior cube point onto the polytope."""
    return project_with_info(q)[0]


def project_with_info(q: object) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Projection plus its block certificate.

    Returns (p, deltas, ends): block k of the descending sort of q covers
    the sorted indices up to (not including) ends[k] and satisfies
    p_j = link_inv(link(q_j) + deltas[k]) there, with its prefix constraint
    tight.  The deltas increase strictly from block to block; consecutive
    differences are the positive multipliers of the tight constraints.
    Note delta_solve uses the opposite sign for its shift, so the block
    values solve delta_solve(block, tight bound) = -deltas[k].
    """
    arr = _as_point(q)
    n = arr.shape[0]
    if n < 2:
        raise ValueError(f"need at least two items, got n={n}")
    if np.max(np.abs(arr)) >= 1.0:
        raise ValueError("projection input must be strictly inside the unit cube")
    order = np.argsort(-arr, kind="mergesort")
    p_sorted, deltas, ends, nblocks, err = _kernels.project_sorted(
        arr[order], INTERIOR_EPS
    )
    if err != 0:
        raise RuntimeError(f"projection found no feasible block split (code {err})")
    p = np.empty(n)
    p[order] = p_sorted
    return p, -deltas[:nblocks], ends[:nblocks].copy()


def _constraint_overshoot(y: np.ndarray) -> float:
    """Largest violation of the polytope constraints, 0.0 for members."""
    n = y.shape[0]
    pref = np.cumsum(np.sort(y)[::-1])
    b = prefix_bounds(n)
    over = float(np.max(pref[: n - 1] - b[: n - 1])) if n > 1 else 0.0
    over = max(over, abs(float(pref[-1])))
    return max(over, 0.0)


def is_in_polytope(y: object, tol: float = _MEMBERSHIP_TOL) -> bool:
    return _constraint_overshoot(_as_point(y)) <= tol


def decompose(y: object) -> ConvexCombination:
    """Write a polytope point as a convex combination of at most n vertices.

    Greedy peeling: move as far as possible toward the vertex that shares
    the point's sort order, renormalize the remainder, repeat.  Exact
    arithmetic tightens one more prefix constraint per round, so n vertices
    always suffice; the peeled weights sum to one by construction.
    """
    arr = _as_point(y)
    n = arr.shape[0]
    if n < 2:
        raise ValueError(f"need at least two items, got n={n}")
    over = _constraint_overshoot(arr)
    if over > _MEMBERSHIP_TOL:
        raise ValueError(f"point is outside the polytope by {over:.3e}")
    base_slack = max(1e-13, 2.0 * over)
    verts, wts, count, err = _kernels.decompose_kernel(arr, 1e-10, base_slack, 2 * n + 8)
    if err != 0:
        raise RuntimeError(f"vertex peeling failed to terminate (code {err})")
    # merge repeats: under roundoff a peel may revisit a vertex
    index: dict[bytes, int] = {}
    rows: list[np.ndarray] = []
    weights: list[float] = []
    for k in range(count):
        key = verts[k].tobytes()
        if key in index:
            weights[index[key]] += float(wts[k])
        else:
            index[key] = len(rows)
            rows.append(verts[k].copy())
            weights.append(float(wts[k]))
    if len(rows) > n:
        raise RuntimeError(
            f"vertex peeling needed {len(rows)} vertices for n={n}"
        )
    return ConvexCombination(
        vertices=np.array(rows), weights=np.array(weights)
    )


def estimator_covariance(x: object, gamma: float) -> np.ndarray:
    """Second-moment model gamma/n * I + (1-gamma) * (x x' + diag(1 - x^2))."""
    arr = _as_point(x)
    if not (0.0 <= gamma <= 1.0):
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    if np.max(np.abs(arr)) > 1.0 + 1e-12:
        raise ValueError("x must lie in the closed unit cube")
    arr = np.clip(arr, -1.0, 1.0)
    n = arr.shape[0]
    cov = (1.0 - gamma) * (np.outer(arr, arr) + np.diag(1.0 - arr * arr))
    cov[np.diag_indices(n)] += gamma / n
    return cov


def apply_update(state: OsmdState, action: np.ndarray, loss: float) -> None:
    """Fold one bandit observation into the mirror state.

    The loss estimate is loss * P^{-1} action with P the covariance model at
    the pre-shrink point; the mirror step runs in link space and lands back
    in the polytope through the blockwise projection.
    """
    loss = float(loss)
    if abs(loss) > 1.0 + _LOSS_TOL:
        raise ValueError(f"scalar loss {loss!r} breaks the unit bound")
    act = _as_point(action)
    if act.shape != state.x.shape:
        raise ValueError("action length does not match the state")
    cov = estimator_covariance(state.x, state.params.gamma)
    est = loss * np.linalg.solve(cov, act)
    moved = link_inv(link(state.x) - state.params.eta * est)
    state.x = np.clip(
        project(moved), -1.0 + INTERIOR_EPS, 1.0 - INTERIOR_EPS
    )
    state.t += 1


def osmd_step(
    state: OsmdState, rng: np.random.Generator
) -> tuple[np.ndarray, Callable[[float], None]]:
    """Draw a playable vertex and hand back the deferred update.

    The state mutates only when the returned callable runs with the observed
    loss, so a bandit loop can sit between the draw and the feedback.
    """
    comb = decompose((1.0 - state.params.gamma) * state.x)
    action = comb.vertices[comb.sample_index(rng)].copy()

    def update(loss: float) -> None:
        apply_update(state, action, loss)

    return action, update


class OsmdRankLearner:
    """Bandit learner interface around the mirror-descent state."""

    def __init__(self, n: int, params: OsmdParams) -> None:
        self.n = int(n)
        self.params = params
        self.state = init_state(self.n, params)
        self.clip_events = 0  # interface parity with banditrank; never trips
        self._pending: Callable[[float], None] | None = None

    def propose(self, rng: np.random.Generator) -> np.ndarray:
        if self._pending is not None:
            raise RuntimeError("propose called twice without observe")
        action, update = osmd_step(self.state, rng)
        self._pending = update
        return action

    def observe(self, loss: float) -> None:
        if self._pending is None:
            raise RuntimeError("observe called before propose")
        update, self._pending = self._pending, None
        update(float(loss))
