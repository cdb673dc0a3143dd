"""Hot-loop kernels for the mirror-descent projection and decomposition.

Compiled with numba when it is installed; otherwise the same code runs as
plain Python (correct but much slower).  Everything here works on float64
arrays only and reports failures through integer error codes so the
compiled functions never raise.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


@njit(cache=True)
def _block_root(y, a, i, lo0, hi0, bound, tol, max_iter):
    """Root of sum_{j in [a, i)} tanh(y_j - d) = bound.

    The sum is strictly decreasing in d.  Returns (root, flag): flag 1 means
    the target exceeds the attainable maximum (conceptually d = -inf), flag
    2 means it is below the attainable minimum (d = +inf).
    """
    s_lo = 0.0
    s_hi = 0.0
    for j in range(a, i):
        s_lo += math.tanh(y[j] - lo0)
        s_hi += math.tanh(y[j] - hi0)
    if s_lo < bound:
        return 0.0, 1
    if s_hi > bound:
        return 0.0, 2
    lo = lo0
    hi = hi0
    it = 0
    while hi - lo > tol and it < max_iter:
        mid = 0.5 * (lo + hi)
        s = 0.0
        for j in range(a, i):
            s += math.tanh(y[j] - mid)
        if s > bound:
            lo = mid
        else:
            hi = mid
        it += 1
    return 0.5 * (lo + hi), 0


@njit(cache=True)
def project_sorted(qs, eps):
    """Blockwise projection of descending-sorted qs onto the scaled polytope.

    Returns (p, deltas, ends, nblocks, err).  p is in the sorted frame;
    deltas[k] is the common shift applied to block k, which ends just
    before index ends[k].  err != 0 signals a failed root bracket.
    """
    n = qs.shape[0]
    y = np.empty(n)
    for j in range(n):
        y[j] = math.atanh(qs[j])
    b = np.empty(n + 1)
    b[0] = 0.0
    for i in range(1, n + 1):
        b[i] = i * (n - i) / (n - 1.0)
    span = math.atanh(1.0 - 1e-12) + 1.0
    lo0 = y[0] - span
    hi0 = y[0] + span
    for j in range(1, n):
        if y[j] - span < lo0:
            lo0 = y[j] - span
        if y[j] + span > hi0:
            hi0 = y[j] + span
    p = np.empty(n)
    deltas = np.empty(n)
    ends = np.empty(n, dtype=np.int64)
    nb = 0
    a = 0
    err = 0
    while a < n:
        best_d = -1.0e300
        best_i = -1
        for i in range(a + 1, n + 1):
            root, flag = _block_root(y, a, i, lo0, hi0, b[i] - b[a], 1e-12, 200)
            if flag == 1:
                # target above reach, conceptually d = -inf: never the argmax
                continue
            if flag == 2:
                # target below reach (only the trailing -1 target can do
                # this): the block saturates at the clamp, d = +inf wins
                root = hi0
            if root >= best_d:  # ties go to the largest block end
                best_d = root
                best_i = i
        if best_i < 0:
            err = 3
            break
        for j in range(a, best_i):
            pj = math.tanh(y[j] - best_d)
            if pj > 1.0 - eps:
                pj = 1.0 - eps
            elif pj < -1.0 + eps:
                pj = -1.0 + eps
            p[j] = pj
        deltas[nb] = best_d
        ends[nb] = best_i
        nb += 1
        a = best_i
    return p, deltas, ends, nb, err


@njit(cache=True)
def _remainder_feasible(z, v, a, acc, b, slack, buf):
    """Whether the remainder z - a*v stays in the polytope scaled by acc - a.

    Everything is measured in the original frame, never renormalized: the
    stored remainder shrinks with the leftover mass and float rounding
    shrinks with it.  For a constraint whose index set is a top set of both
    z and v the comparison reduces to pref_i <= acc*b_i + slack with no
    dependence on the step a at all, so constraints already tight can never
    spuriously stop the bisection; only genuinely new faces bind.
    """
    n = z.shape[0]
    for j in range(n):
        buf[j] = z[j] - a * v[j]
    s = np.sort(buf)
    scale = acc - a
    run = 0.0
    for i in range(1, n):
        run += s[n - i]
        if run > scale * b[i] + slack:
            return False
    return True


@njit(cache=True)
def decompose_kernel(z0, snap0, base_slack, max_k):
    """Peel a polytope point into at most max_k vertices with convex weights.

    Each round takes the vertex sorted like the current remainder, steps as
    far toward it as membership allows (bisection on the absolute step; the
    feasible steps form an interval), and repeats on the unnormalized
    remainder z0 - sum(w_j v_j) against bounds scaled by the leftover mass.
    Working in the original frame keeps the tolerances absolute: a face that
    is already tight satisfies its constraint identically in the step size,
    so only genuinely new faces can bind.  Each bisection parks the binding
    face's constraint right at the slack line, and rounding in the remainder
    update can leave it an ulp above, so the slack grows by base_slack/2
    every peel; parked faces then clear the next test by a margin rounding
    cannot erase, and a peel can never stall at a zero step.  base_slack
    must cover the input's own constraint overshoot, otherwise the very
    first bisection collapses to a zero step.

    Returns (vertices, weights, count, err); err 0 means the remainder
    reached a vertex (within snap0, emitted with the leftover mass) and the
    weights telescope to 1.
    """
    n = z0.shape[0]
    b = np.empty(n + 1)
    b[0] = 0.0
    for i in range(1, n + 1):
        b[i] = i * (n - i) / (n - 1.0)
    cvals = np.empty(n)
    for k in range(n):
        cvals[k] = (n - 1.0 - 2.0 * k) / (n - 1.0)
    verts = np.zeros((max_k, n))
    wts = np.zeros(max_k)
    z = z0.copy()
    buf = np.empty(n)
    acc = 1.0
    count = 0
    err = 1
    for peel in range(max_k):
        order = np.argsort(-z, kind="mergesort")
        v = np.empty(n)
        for r in range(n):
            v[order[r]] = cvals[r]
        dmax = 0.0
        for j in range(n):
            dj = abs(z[j] - acc * v[j])
            if dj > dmax:
                dmax = dj
        if dmax <= snap0 or acc <= 1e-15:
            verts[count] = v
            wts[count] = acc
            count += 1
            err = 0
            break
        slack = base_slack * (1.0 + 0.5 * peel)
        lo = 0.0
        hi = acc * (1.0 - 1e-9)
        if _remainder_feasible(z, v, hi, acc, b, slack, buf):
            lo = hi
        else:
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if _remainder_feasible(z, v, mid, acc, b, slack, buf):
                    lo = mid
                else:
                    hi = mid
        step = lo
        if step <= 0.0:
            err = 2
            break
        verts[count] = v
        wts[count] = step
        count += 1
        acc -= step
        for j in range(n):
            z[j] -= step * v[j]
    return verts, wts, count, err
