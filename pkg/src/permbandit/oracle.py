"""Brute-force reference computations for the ranking model.

Everything here is enumeration: rankings are listed exhaustively (n <= 7),
tournaments and sign vectors are listed bit by bit, and probabilities are
rebuilt from raw exponentials rather than through the closed forms in the
library modules.  The point is independence; when `run_verify` compares a
closed form against these references, the two sides share no code path
beyond numpy primitives.
"""

from __future__ import annotations

import dataclasses
import itertools
import math

import numpy as np

from . import banditrank
from . import numerics
from . import osmd_rank
from . import plackett_luce as pl

_MAX_ENUM_N = 7

_PAIRS3 = ((0, 1), (0, 2), (1, 2))


@dataclasses.dataclass(frozen=True)
class ExactDistribution:
    """All n! centered rankings (rows of perms) with their probabilities."""

    perms: np.ndarray
    probs: np.ndarray


@dataclasses.dataclass(frozen=True)
class VerifyRow:
    name: str
    residual: float
    tol: float
    ok: bool


def _make_row(name: str, residual: float, tol: float) -> VerifyRow:
    residual = float(residual)
    return VerifyRow(
        name=name, residual=residual, tol=tol,
        ok=math.isfinite(residual) and residual <= tol,
    )


def _orient_prob(w, u: int, v: int) -> float:
    # own stable sigmoid on purpose; must not share code with the library
    d = float(w[u]) - float(w[v])
    if d >= 0.0:
        return 1.0 / (1.0 + math.exp(-d))
    e = math.exp(d)
    return e / (1.0 + e)


def enumerate_pl(w) -> ExactDistribution:
    """List every ranking with its sequential-softmax probability."""
    w = np.asarray(w, dtype=np.float64)
    n = w.size
    if n < 1 or n > _MAX_ENUM_N:
        raise ValueError(f"enumeration supports 1 <= n <= {_MAX_ENUM_N}, got {n}")
    e = np.exp(w - w.max())
    perms = np.empty((math.factorial(n), n))
    probs = np.empty(perms.shape[0])
    shift = (n + 1) / 2.0
    for k, order in enumerate(itertools.permutations(range(n))):
        prob = 1.0
        rest = e[list(order)]
        for j in range(n - 1):  # last factor is 1
            prob *= rest[j] / rest[j:].sum()
        probs[k] = prob
        for rank, item in enumerate(order):
            perms[k, item] = rank + 1 - shift
    return ExactDistribution(perms=perms, probs=probs)


def exact_covariance(w, gamma: float) -> np.ndarray:
    """Second moment E[c c'] of the gamma-explored ranking distribution."""
    if not (0.0 <= gamma <= 1.0):
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    dist = enumerate_pl(w)
    q = gamma / dist.probs.size + (1.0 - gamma) * dist.probs
    return dist.perms.T @ (q[:, None] * dist.perms)


def lemma1_moments(w, s) -> tuple[float, float]:
    """Second moments of the pairwise loss-difference sum under both models.

    The summand for an unordered pair u < v is (s_v - s_u) signed by which
    of the two comes first.  Under the ranking model the sum equals twice
    the centered-position loss and is enumerated permutation by
    permutation; under the independent-orientation tournament model the
    pairs decouple, giving the closed form
    sum d^2 * 4p(1-p) + (sum d * (2p-1))^2.

    Returns (ranking_second_moment, tournament_second_moment).
    """
    w = np.asarray(w, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    n = w.size
    if s.size != n:
        raise ValueError("dimension mismatch")
    dist = enumerate_pl(w)
    m1 = 0.0
    shift = (n + 1) / 2.0
    for k in range(dist.probs.size):
        ppos = dist.perms[k] + shift
        x1 = 0.0
        for u in range(n):
            for v in range(u + 1, n):
                d = s[v] - s[u]
                x1 += d if ppos[u] < ppos[v] else -d
        m1 += dist.probs[k] * x1 * x1
    var = 0.0
    mean = 0.0
    for u in range(n):
        for v in range(u + 1, n):
            d = s[v] - s[u]
            p = _orient_prob(w, u, v)
            var += d * d * 4.0 * p * (1.0 - p)
            mean += d * (2.0 * p - 1.0)
    return float(m1), float(var + mean * mean)


def _tournament_second_moment(w, s) -> float:
    """E[X^2] of the pairwise sum over all 8 three-item tournaments."""
    w = np.asarray(w, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    if w.size != 3 or s.size != 3:
        raise ValueError("tournament enumeration is for three items")
    total = 0.0
    for bits in itertools.product((1, -1), repeat=3):
        prob = 1.0
        x2 = 0.0
        for (u, v), eps in zip(_PAIRS3, bits):
            p = _orient_prob(w, u, v)
            prob *= p if eps == 1 else 1.0 - p
            x2 += eps * (s[v] - s[u])
        total += prob * x2 * x2
    return float(total)


def _moment_gap(w, s) -> float:
    # half the ranking-vs-tournament second-moment gap, fully enumerated
    dist_m1, _ = lemma1_moments(w, s)
    return 0.5 * (dist_m1 - _tournament_second_moment(w, s))


def quadratic_form_coeffs(w3) -> np.ndarray:
    """3x3 coefficient matrix of the second-moment gap, by polarization.

    The gap s -> G(s) is quadratic with the all-ones direction in its
    kernel; evaluating G on basis vectors and their sums recovers the
    matrix with entries M_ii = G(e_i), M_ij = (G(e_i+e_j)-G(e_i)-G(e_j))/2.
    """
    w = np.asarray(w3, dtype=np.float64)
    if w.size != 3:
        raise ValueError("the quadratic form is defined for three items")
    basis = np.eye(3)
    g_single = [_moment_gap(w, basis[i]) for i in range(3)]
    mat = np.diag(np.asarray(g_single))
    for i, j in _PAIRS3:
        g_pair = _moment_gap(w, basis[i] + basis[j])
        mat[i, j] = mat[j, i] = 0.5 * (g_pair - g_single[i] - g_single[j])
    return mat


def estimate_mean(w, gamma: float, s) -> np.ndarray:
    """Exact expectation of the one-sample loss-profile estimate.

    Averages loss(c) * pinv(cov) c over the enumerated play distribution,
    with cov the analytic mixture covariance the learner would use.  For an
    unbiased estimator this lands on s minus its mean, the part of the
    profile visible through zero-sum actions.
    """
    s = np.asarray(s, dtype=np.float64)
    dist = enumerate_pl(w)
    q = gamma / dist.probs.size + (1.0 - gamma) * dist.probs
    cov = banditrank.mixture_covariance(np.asarray(w, dtype=np.float64), gamma)
    pinv = numerics.pseudo_inverse(cov)
    return pinv @ (dist.perms.T @ (q * (dist.perms @ s)))


def _pair_marginal(dist: ExactDistribution, u: int, v: int) -> float:
    return float(dist.probs[dist.perms[:, u] < dist.perms[:, v]].sum())


def run_verify(max_n: int = 5, seed: int = 0) -> list[VerifyRow]:
    """Compare every closed form against enumeration; returns the table.

    max_n bounds the enumerated sizes (3 <= max_n <= 7).  All randomness
    is drawn from one seeded generator, so the table is reproducible.
    """
    if not 3 <= max_n <= _MAX_ENUM_N:
        raise ValueError(f"max_n must lie in [3, {_MAX_ENUM_N}], got {max_n}")
    rng = np.random.default_rng(seed)
    sizes = range(3, max_n + 1)
    rows: list[VerifyRow] = []

    res = 0.0
    for n in sizes:
        for _ in range(5):
            w = rng.normal(scale=1.5, size=n)
            dist = enumerate_pl(w)
            for u in range(n):
                for v in range(n):
                    if u != v:
                        res = max(res, abs(
                            _pair_marginal(dist, u, v) - pl.pair_prob(u, v, w)
                        ))
    rows.append(_make_row("pair marginal closed form", res, 1e-12))

    res_triple = 0.0
    res_top = 0.0
    res_pair = 0.0
    for _ in range(20):
        w = rng.normal(scale=1.5, size=3)
        dist = enumerate_pl(w)
        for a, b, c in itertools.permutations(range(3)):
            exact = float(dist.probs[
                (dist.perms[:, a] < dist.perms[:, b])
                & (dist.perms[:, b] < dist.perms[:, c])
            ].sum())
            res_triple = max(res_triple, abs(exact - pl.triple_order_prob(a, b, c, w)))
            exact_top = float(dist.probs[
                (dist.perms[:, a] < dist.perms[:, b])
                & (dist.perms[:, a] < dist.perms[:, c])
            ].sum())
            res_top = max(res_top, abs(exact_top - pl.top_among_three(a, b, c, w)))
            exact_pair = float(dist.probs[
                (dist.perms[:, a] < dist.perms[:, c])
                & (dist.perms[:, b] < dist.perms[:, c])
            ].sum())
            res_pair = max(res_pair, abs(exact_pair - pl.top_pair_prob(a, b, c, w)))
    rows.append(_make_row("triple order closed form", res_triple, 1e-12))
    rows.append(_make_row("top one of three", res_top, 1e-12))
    rows.append(_make_row("top pair of three", res_pair, 1e-12))

    res = 0.0
    for n in sizes:
        for _ in range(5):
            w = rng.normal(scale=1.5, size=n)
            gamma = float(rng.uniform(0.05, 1.0))
            dist = enumerate_pl(w)
            q = gamma / dist.probs.size + (1.0 - gamma) * dist.probs
            mixed = ExactDistribution(perms=dist.perms, probs=q)
            for u in range(n):
                for v in range(u + 1, n):
                    closed = gamma * 0.5 + (1.0 - gamma) * pl.pair_prob(u, v, w)
                    res = max(res, abs(_pair_marginal(mixed, u, v) - closed))
    rows.append(_make_row("explored pair marginal", res, 1e-12))

    res = 0.0
    for n in sizes:
        res = max(res, float(np.max(np.abs(
            exact_covariance(np.zeros(n), 1.0) - pl.uniform_covariance(n)
        ))))
    rows.append(_make_row("uniform vertex covariance", res, 1e-10))

    res = 0.0
    for n in sizes:
        for _ in range(5):
            w = rng.normal(scale=1.5, size=n)
            res = max(res, float(np.max(np.abs(
                exact_covariance(w, 0.0) - pl.pl_covariance(w)
            ))))
    rows.append(_make_row("model vertex covariance", res, 1e-10))

    res = 0.0
    for n in sizes:
        for _ in range(5):
            w = rng.normal(scale=1.5, size=n)
            gamma = float(rng.uniform(0.05, 1.0))
            res = max(res, float(np.max(np.abs(
                exact_covariance(w, gamma) - banditrank.mixture_covariance(w, gamma)
            ))))
    rows.append(_make_row("mixture vertex covariance", res, 1e-10))

    res = 0.0
    for _ in range(10):
        w = rng.normal(scale=1.5, size=3)
        res = max(res, float(np.max(np.abs(
            quadratic_form_coeffs(w) - pl.h_matrix(w)
        ))))
    rows.append(_make_row("pair difference form entries", res, 1e-10))

    res = 0.0
    for _ in range(10):
        w = rng.normal(scale=1.5, size=3)
        s = rng.normal(size=3)
        m1, m2_closed = lemma1_moments(w, s)
        res = max(res, abs(m2_closed - _tournament_second_moment(w, s)))
        gap = 0.5 * (m1 - m2_closed)
        res = max(res, abs(gap - float(s @ pl.h_matrix(w) @ s)))
    rows.append(_make_row("ranking vs tournament second moment", res, 1e-9))

    res = 0.0
    for n in sizes:
        for _ in range(3):
            w = rng.normal(scale=1.5, size=n)
            gamma = float(rng.uniform(0.05, 1.0))
            s = rng.normal(size=n)
            centered = s - s.mean()
            res = max(res, float(np.max(np.abs(
                estimate_mean(w, gamma, s) - centered
            ))))
    rows.append(_make_row("loss estimate mean", res, 1e-9))

    res = 0.0
    for n in sizes:
        for _ in range(3):
            x = rng.uniform(-0.95, 0.95, size=n)
            gamma = float(rng.uniform(0.0, 1.0))
            second = np.zeros((n, n))
            for bits in itertools.product((1.0, -1.0), repeat=n):
                sigma = np.asarray(bits)
                weight = float(np.prod((1.0 + sigma * x) / 2.0))
                second += weight * np.outer(sigma, sigma)
            model = gamma / n * np.eye(n) + (1.0 - gamma) * second
            res = max(res, float(np.max(np.abs(
                model - osmd_rank.estimator_covariance(x, gamma)
            ))))
    rows.append(_make_row("sign estimator covariance", res, 1e-12))

    return rows
