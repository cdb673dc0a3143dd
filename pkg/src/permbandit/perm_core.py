"""Permutations, the centered permutahedron, and its unit-cube rescaling.

Items are 0-indexed everywhere; positions (ranks) are 1-based, so a
permutation is an integer vector ``p`` with ``p[v]`` the position of item
``v``.  Centering subtracts ``(n + 1) / 2`` from every position, which puts
the polytope's centroid at the origin.  Rescaling a centered vertex by
``2 / (n - 1)`` maps the polytope into ``[-1, 1]^n``; the rescaled polytope
is the action set of the mirror-descent learner.

Loss vectors come in two regimes:

* ``DUAL``: ``|c . s| <= 1`` for every centered vertex ``c`` (the loss lies
  in the polar body of the centered polytope).
* ``L1``: ``||s||_1 <= 1`` (paired with the rescaled, cube-bounded actions).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DUAL",
    "L1",
    "LossVector",
    "best_static",
    "center",
    "centered_positions",
    "dot",
    "dual_norm",
    "is_permutation",
    "random_permutation",
    "scale_to_q",
    "standard_offset",
    "uncenter",
]

DUAL = "dual"
L1 = "l1"

_REGIME_SLACK = 1e-12


def is_permutation(p) -> bool:
    """Return True iff ``p`` is a vector of 1-based ranks of its indices."""
    p = np.asarray(p)
    if p.ndim != 1 or p.size == 0:
        return False
    if not np.issubdtype(p.dtype, np.number):
        return False
    if np.any(p != np.round(p)):
        return False
    return bool(
        np.array_equal(np.sort(p.astype(np.int64)), np.arange(1, p.size + 1))
    )


def center(p) -> np.ndarray:
    """Map a permutation to its centered vertex ``p - (n + 1) / 2``.

    The result has coordinate sum exactly zero.
    """
    p = np.asarray(p)
    if not is_permutation(p):
        raise ValueError("input is not a 1-based permutation of its indices")
    n = p.size
    return p.astype(np.float64) - (n + 1) / 2.0


def uncenter(c) -> np.ndarray:
    """Inverse of :func:`center`; returns the integer position vector."""
    c = np.asarray(c, dtype=np.float64)
    n = c.size
    p = np.rint(c + (n + 1) / 2.0).astype(np.int64)
    if not is_permutation(p):
        raise ValueError("input is not a centered permutation")
    return p


def centered_positions(n: int) -> np.ndarray:
    """The sorted coordinate values of a centered vertex: ``k - (n+1)/2``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return np.arange(1, n + 1, dtype=np.float64) - (n + 1) / 2.0


def scale_to_q(c) -> np.ndarray:
    """Rescale a centered vector by ``2 / (n - 1)`` into ``[-1, 1]^n``."""
    c = np.asarray(c, dtype=np.float64)
    n = c.size
    if n < 2:
        raise ValueError("rescaling requires n >= 2")
    return c * (2.0 / (n - 1))


def dot(c, s) -> float:
    """Instantaneous loss of action ``c`` against loss vector ``s``."""
    c = np.asarray(c, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    if c.shape != s.shape:
        raise ValueError(f"dimension mismatch: {c.shape} vs {s.shape}")
    return float(c @ s)


def best_static(total) -> np.ndarray:
    """Best fixed permutation in hindsight against accumulated losses.

    Assigns position 1 to the largest coordinate of ``total`` and position
    ``n`` to the smallest, which minimizes ``p . total`` over all
    permutations.  Ties go to the lower item index.
    """
    total = np.asarray(total, dtype=np.float64)
    if total.ndim != 1 or total.size == 0:
        raise ValueError("total must be a nonempty vector")
    n = total.size
    # stable sort on -total: descending value, ties by original index
    order = np.argsort(-total, kind="stable")
    positions = np.empty(n, dtype=np.int64)
    positions[order] = np.arange(1, n + 1)
    return positions


def dual_norm(s) -> float:
    """Largest ``|c . s|`` over all centered vertices ``c``.

    By the rearrangement inequality the maximum pairs the sorted
    coordinates of ``s`` with the sorted centered positions, so this runs
    in O(n log n) instead of O(n!).
    """
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("s must be a nonempty vector")
    s_desc = np.sort(s)[::-1]
    c_desc = centered_positions(s.size)[::-1]
    return float(abs(s_desc @ c_desc))


def standard_offset(s) -> float:
    """Gap between raw-position and centered losses: ``(n+1)/2 * sum(s)``.

    For any permutation ``p`` with centered form ``c``,
    ``p . s == c . s + standard_offset(s)``.  The offset does not depend on
    the action, so regret is identical in both coordinate systems.
    """
    s = np.asarray(s, dtype=np.float64)
    n = s.size
    return float((n + 1) / 2.0 * s.sum())


def random_permutation(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random position vector over all n! rankings."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return rng.permutation(n) + 1


@dataclass(frozen=True)
class LossVector:
    """A loss vector together with the regime bound it promises to satisfy."""

    s: np.ndarray
    regime: str

    def __post_init__(self) -> None:
        s = np.asarray(self.s, dtype=np.float64)
        if s.ndim != 1 or s.size == 0:
            raise ValueError("loss vector must be a nonempty 1-D array")
        if not np.all(np.isfinite(s)):
            raise ValueError("loss vector must be finite")
        if self.regime == DUAL:
            bound = dual_norm(s)
        elif self.regime == L1:
            bound = float(np.abs(s).sum())
        else:
            raise ValueError(f"unknown loss regime: {self.regime!r}")
        if bound > 1.0 + _REGIME_SLACK:
            raise ValueError(
                f"loss vector violates the {self.regime} regime bound: "
                f"{bound} > 1"
            )
        object.__setattr__(self, "s", s)
