"""Ranking and tournament distributions over item weights.

A weight vector ``w`` induces two related random objects:

* a random full ranking, drawn by repeatedly picking the next item with
  probability proportional to ``exp(w)`` among the items still unranked
  (equivalently: perturb each weight with independent standard Gumbel noise
  and sort descending), and
* a random tournament, orienting every unordered item pair independently
  with ``P[u beats v] = exp(w_u) / (exp(w_u) + exp(w_v))``.

Both share all single-pair marginals, which is what makes the tournament a
useful surrogate in second-moment calculations.  Everything here is
invariant under adding a constant to ``w``; all exponentials are evaluated
in max-subtracted or sigmoid form because the learner's weights grow with
the horizon and naive ``exp`` overflows.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "btl_log_prob",
    "h_matrix",
    "pair_prob",
    "pl_covariance",
    "pl_prob",
    "sample_btl",
    "sample_pl",
    "top_among_three",
    "top_pair_prob",
    "triple_order_prob",
    "uniform_covariance",
]


def _sigmoid(x: float) -> float:
    # 1 / (1 + e^{-x}) without overflow on either tail
    if x >= 0.0:
        return float(1.0 / (1.0 + np.exp(-x)))
    z = np.exp(x)
    return float(z / (1.0 + z))


def _log_sigmoid(x: float) -> float:
    if x >= 0.0:
        return float(-np.log1p(np.exp(-x)))
    return float(x - np.log1p(np.exp(x)))


def _check_items(w: np.ndarray, *items: int) -> None:
    n = w.size
    for i in items:
        if not 0 <= i < n:
            raise ValueError(f"item {i} out of range for n={n}")
    if len(set(items)) != len(items):
        raise ValueError(f"items must be distinct, got {items}")


def pair_prob(u: int, v: int, w) -> float:
    """Probability that item ``u`` is ranked before item ``v``.

    Equals ``exp(w_u) / (exp(w_u) + exp(w_v))``, which is also the
    tournament orientation probability for the pair.
    """
    w = np.asarray(w, dtype=np.float64)
    _check_items(w, u, v)
    return _sigmoid(w[u] - w[v])


def triple_order_prob(a: int, b: int, c: int, w) -> float:
    """Probability that ``a`` precedes ``b`` precedes ``c`` in the ranking.

    Closed form ``e^{w_a + w_b} / ((e^{w_a}+e^{w_b}+e^{w_c})(e^{w_b}+e^{w_c}))``,
    evaluated as P(a first of the three) * P(b before c).
    """
    w = np.asarray(w, dtype=np.float64)
    _check_items(w, a, b, c)
    return top_among_three(a, b, c, w) * _sigmoid(w[b] - w[c])


def top_among_three(u: int, v: int, z: int, w) -> float:
    """Probability that ``u`` precedes both ``v`` and ``z``."""
    w = np.asarray(w, dtype=np.float64)
    _check_items(w, u, v, z)
    m = max(w[u], w[v], w[z])
    eu, ev, ez = np.exp(w[u] - m), np.exp(w[v] - m), np.exp(w[z] - m)
    return float(eu / (eu + ev + ez))


def top_pair_prob(u: int, v: int, z: int, w) -> float:
    """Probability that both ``u`` and ``v`` precede ``z``.

    Closed form
    ``(e^{w_u + w_v} / S) * (1/(e^{w_v}+e^{w_z}) + 1/(e^{w_u}+e^{w_z}))``
    with ``S`` the three-term exponential sum; grouped here as the two
    orderings of ``u`` and ``v``, each in sigmoid form.
    """
    w = np.asarray(w, dtype=np.float64)
    _check_items(w, u, v, z)
    first_u = top_among_three(u, v, z, w) * _sigmoid(w[v] - w[z])
    first_v = top_among_three(v, u, z, w) * _sigmoid(w[u] - w[z])
    return first_u + first_v


def sample_pl(w, rng: np.random.Generator, method: str = "gumbel") -> np.ndarray:
    """Draw a centered permutation from the ranking model at ``w``.

    Args:
      w: item weights.
      rng: generator supplying the randomness.
      method: "gumbel" perturbs the weights with iid standard Gumbel noise
        (cdf ``exp(-exp(-x))``) and sorts descending; "sequential" picks
        items one at a time with softmax probabilities over the remainder.
        The two are distributionally identical.

    Returns:
      Centered coordinates of the sampled ranking.
    """
    w = np.asarray(w, dtype=np.float64)
    n = w.size
    if method == "gumbel":
        keys = w + rng.gumbel(size=n)
        order = np.argsort(-keys, kind="stable")
    elif method == "sequential":
        remaining = np.arange(n)
        order = np.empty(n, dtype=np.int64)
        for k in range(n):
            wr = w[remaining]
            e = np.exp(wr - wr.max())
            pick = rng.choice(remaining.size, p=e / e.sum())
            order[k] = remaining[pick]
            remaining = np.delete(remaining, pick)
    else:
        raise ValueError(f"unknown sampling method: {method!r}")
    positions = np.empty(n, dtype=np.float64)
    positions[order] = np.arange(1, n + 1)
    return positions - (n + 1) / 2.0


def sample_btl(w, rng: np.random.Generator) -> np.ndarray:
    """Draw a random tournament: every pair oriented independently.

    Returns an ``n x n`` 0/1 matrix ``A`` with ``A[u, v] = 1`` iff ``u``
    beats ``v``; exactly one of ``A[u, v]``, ``A[v, u]`` is set per pair and
    the diagonal is zero.
    """
    w = np.asarray(w, dtype=np.float64)
    n = w.size
    diff = w[:, None] - w[None, :]
    with np.errstate(over="ignore"):
        p = 1.0 / (1.0 + np.exp(-diff))
    iu, iv = np.triu_indices(n, k=1)
    wins = rng.random(iu.size) < p[iu, iv]
    a = np.zeros((n, n), dtype=np.int8)
    a[iu, iv] = wins
    a[iv, iu] = ~wins
    return a


def btl_log_prob(tournament: np.ndarray, w) -> float:
    """Log-probability of a tournament: sum of its orientation log-odds."""
    w = np.asarray(w, dtype=np.float64)
    n = w.size
    a = np.asarray(tournament)
    if a.shape != (n, n):
        raise ValueError("tournament shape does not match the weights")
    total = 0.0
    for u in range(n):
        for v in range(u + 1, n):
            if a[u, v]:
                total += _log_sigmoid(w[u] - w[v])
            else:
                total += _log_sigmoid(w[v] - w[u])
    return total


def pl_prob(c, w) -> float:
    """Exact probability of the ranking with centered coordinates ``c``."""
    w = np.asarray(w, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    n = w.size
    if c.size != n:
        raise ValueError("dimension mismatch")
    positions = np.rint(c + (n + 1) / 2.0).astype(np.int64)
    if not np.array_equal(np.sort(positions), np.arange(1, n + 1)):
        raise ValueError("input is not a centered permutation")
    order = np.argsort(positions)
    prob = 1.0
    for k in range(n):
        wr = w[order[k:]]
        e = np.exp(wr - wr.max())
        prob *= e[0] / e.sum()
    return float(prob)


def pl_covariance(w) -> np.ndarray:
    """Exact second-moment matrix ``E[c c']`` of centered ranking draws.

    Uses the position decomposition ``c(u) = #{v ranked before u} - (n-1)/2``
    and reduces every joint term to single-pair and three-item marginals:
    pairs sharing no item factorize by the disjoint-pair independence of the
    ranking model, pairs sharing one item reduce to three-item order
    probabilities.  Runs in O(n^3) with no sampling.
    """
    w = np.asarray(w, dtype=np.float64)
    n = w.size
    if n == 1:
        return np.zeros((1, 1))
    m = (n - 1) / 2.0
    d = np.subtract.outer(w, w)  # d[a, b] = w[a] - w[b]
    with np.errstate(over="ignore"):
        ratio = np.exp(-d)  # ratio[a, b] = e^{w_b - w_a}
        pmat = 1.0 / (1.0 + ratio)  # pmat[a, b] = P(a before b)
        np.fill_diagonal(pmat, 0.0)
        r = pmat.sum(axis=0)  # r[u] = expected # of items before u
        # s3[u, x] = sum over y of P(y first among {y, u, x}), y not in {u, x}
        denom = 1.0 + ratio[:, :, None] + ratio[:, None, :]
        s3 = (1.0 / denom).sum(axis=0)
        s3 -= 1.0 / (2.0 + ratio)
        s3 -= 1.0 / (2.0 + ratio.T)
    cross = pmat.T @ pmat
    before_u = r[:, None] - pmat.T  # excludes the partner item
    before_x = r[None, :] - pmat
    off = 2.0 * s3 + before_u * before_x - cross
    off -= m * (r[:, None] + r[None, :])
    off += m * m
    off = 0.5 * (off + off.T)
    np.fill_diagonal(off, 0.0)
    np.fill_diagonal(off, -off.sum(axis=1))  # rows sum to zero exactly
    return off


def uniform_covariance(n: int) -> np.ndarray:
    """``E[c c']`` under the uniform ranking distribution, in closed form.

    Diagonal ``(n^2 - 1) / 12``, off-diagonal ``-(n + 1) / 12``; equivalently
    ``(n + 1) / 12 * (n I - J)``, whose nonzero eigenvalue is
    ``n (n + 1) / 12``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    cov = np.full((n, n), -(n + 1) / 12.0)
    np.fill_diagonal(cov, (n * n - 1) / 12.0)
    return cov


def h_matrix(w3) -> np.ndarray:
    """Coefficient matrix of the ranking-vs-tournament second-moment gap.

    For three items with weights ``w3``, the difference between the two
    models' second moments of the pairwise loss-difference sum is a
    quadratic form in the three loss coordinates.  This returns its 3x3
    symmetric coefficient matrix: diagonal entries ``H_aa`` and off-diagonal
    entries ``H_ab / 2`` with

      ``H_aa = 4 e_a e_b e_c / ((e_a+e_b)(e_a+e_c) S)``
      ``H_ab = -8 e_a e_b e_c^2 / ((e_a+e_b)(e_a+e_c)(e_b+e_c) S)``

    where ``e_i = exp(w_i)`` and ``S = e_a + e_b + e_c``.  The all-ones
    vector is in the kernel and the matrix is positive semi-definite.
    """
    w3 = np.asarray(w3, dtype=np.float64)
    if w3.shape != (3,):
        raise ValueError("expected exactly three weights")
    e = np.exp(w3 - w3.max())
    ea, eb, ec = e
    s = ea + eb + ec
    prod = ea * eb * ec
    dab, dac, dbc = ea + eb, ea + ec, eb + ec
    h_aa = 4.0 * prod / (dab * dac * s)
    h_bb = 4.0 * prod / (dab * dbc * s)
    h_cc = 4.0 * prod / (dac * dbc * s)
    pair_denom = dab * dac * dbc * s
    h_ab = -8.0 * prod * ec / pair_denom
    h_ac = -8.0 * prod * eb / pair_denom
    h_bc = -8.0 * prod * ea / pair_denom
    return np.array(
        [
            [h_aa, h_ab / 2.0, h_ac / 2.0],
            [h_ab / 2.0, h_bb, h_bc / 2.0],
            [h_ac / 2.0, h_bc / 2.0, h_cc],
        ]
    )
