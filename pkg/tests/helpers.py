"""Shared brute-force helpers: everything here is deliberately naive."""

from __future__ import annotations

import itertools
import math

import numpy as np


def all_position_vectors(n: int) -> np.ndarray:
    """All n! position vectors as an (n!, n) int64 array."""
    out = np.empty((math.factorial(n), n), dtype=np.int64)
    for k, perm in enumerate(itertools.permutations(range(1, n + 1))):
        out[k] = perm
    return out


def all_centered(n: int) -> np.ndarray:
    return all_position_vectors(n).astype(np.float64) - (n + 1) / 2.0


def brute_pl_prob(c: np.ndarray, w: np.ndarray) -> float:
    """Chain-rule ranking probability, written independently of the library.

    Walks the ranking from first place down; at each stage the placed item
    takes softmax weight over everything still unplaced.
    """
    c = np.asarray(c, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    n = c.size
    order = np.argsort(c, kind="stable")  # most negative coordinate = placed first
    remaining = list(range(n))
    prob = 1.0
    for item in order:
        e = np.exp(w[remaining] - np.max(w[remaining]))
        prob *= float(e[remaining.index(item)] / e.sum())
        remaining.remove(item)
    return prob


def scaled_vertex_values(n: int) -> np.ndarray:
    """Sorted descending coordinates of any scaled vertex."""
    return (n - 1.0 - 2.0 * np.arange(n)) / (n - 1.0)


def random_vertex(n: int, rng: np.random.Generator) -> np.ndarray:
    v = np.empty(n)
    v[rng.permutation(n)] = scaled_vertex_values(n)
    return v


def random_polytope_point(n: int, rng: np.random.Generator, k: int | None = None) -> np.ndarray:
    """Convex mix of random scaled vertices; interior-ish for k >= 2."""
    if k is None:
        k = int(rng.integers(2, n + 3))
    verts = np.stack([random_vertex(n, rng) for _ in range(k)])
    return rng.dirichlet(np.ones(k)) @ verts


def pairwise_sum(c: np.ndarray, s: np.ndarray) -> float:
    """(1/2) sum over ordered pairs u != v ranked u-before-v of s[v] - s[u]."""
    c = np.asarray(c, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    total = 0.0
    n = c.size
    for u in range(n):
        for v in range(n):
            if u != v and c[u] < c[v]:
                total += s[v] - s[u]
    return 0.5 * total
